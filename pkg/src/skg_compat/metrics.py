"""Coverage and Flexibility of one schema with respect to another.

Coverage(X, Y) is the share of Y that X also describes; Flexibility(X, Y) is
the share of X that Y does not describe. Shared etypes are decided by the
equivalence mapping, never by raw id. Method 1 counts etypes, Methods 2 and 3
sum structure-derived weights (Method 3 after is-a preprocessing).
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from enum import IntEnum
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .equivalence import EquivalenceMapping
from .errors import ConfigurationError
from .model import Skg
from .weights import WeightTable, compute_weights, format_decimal


class Method(IntEnum):
    UNWEIGHTED = 1
    WEIGHTED = 2
    PREPROCESSED = 3

    @property
    def preprocess(self) -> bool:
        return self is Method.PREPROCESSED

    @classmethod
    def parse(cls, value: Any) -> "Method":
        try:
            return cls(int(value))
        except (TypeError, ValueError):
            raise ConfigurationError(f"Unknown method {value!r}; expected 1, 2 or 3.") from None


DIRECTIONS = ("xy", "yx", "both")


@dataclass(frozen=True)
class Partition:
    """Etypes of X and Y split by whether their group holds members of both."""

    shared_x: Tuple[str, ...]
    shared_y: Tuple[str, ...]
    x_only: Tuple[str, ...]
    y_only: Tuple[str, ...]
    shared_canonical: Tuple[str, ...]


def partition(x: Skg, y: Skg, mapping: EquivalenceMapping) -> Partition:
    """Split named etypes of both schemas into shared and exclusive parts.

    A schema compared with itself shares every group holding one of its
    etypes.

    Raises:
        MappingError: If the mapping does not mention some named etype.
    """
    mapping.require(x)
    mapping.require(y)
    shared_groups = set()
    for number, group in enumerate(mapping.groups):
        schemas = {schema for schema, _ in group}
        if x.name in schemas and y.name in schemas:
            shared_groups.add(number)

    def split(skg: Skg) -> Tuple[Tuple[str, ...], Tuple[str, ...]]:
        shared, only = [], []
        for etype_id in skg.named_ids():
            target = shared if mapping.group_index((skg.name, etype_id)) in shared_groups else only
            target.append(etype_id)
        return tuple(shared), tuple(only)

    shared_x, x_only = split(x)
    shared_y, y_only = split(y)
    canonical = tuple(sorted(mapping.canonical[n] for n in shared_groups))
    return Partition(shared_x, shared_y, x_only, y_only, canonical)


def _weights(skg: Skg, method: Method, cache: Optional[Dict[Any, WeightTable]] = None) -> WeightTable:
    if cache is None:
        return compute_weights(skg, preprocess=method.preprocess)
    key = (skg.name, method.preprocess)
    if key not in cache:
        cache[key] = compute_weights(skg, preprocess=method.preprocess)
    return cache[key]


def _coverage(parts: Partition, y: Skg, method: Method, table: Optional[WeightTable]) -> Fraction:
    if method is Method.UNWEIGHTED:
        total = len(y.named_ids())
        return Fraction(len(parts.shared_y), total) if total else Fraction(0)
    return table.mass(parts.shared_y)


def _flexibility(parts: Partition, x: Skg, method: Method, table: Optional[WeightTable]) -> Fraction:
    if method is Method.UNWEIGHTED:
        total = len(x.named_ids())
        return Fraction(len(parts.x_only), total) if total else Fraction(0)
    return table.mass(parts.x_only)


def measure(
    parts: Partition,
    x: Skg,
    y: Skg,
    method: Method,
    x_table: Optional[WeightTable] = None,
    y_table: Optional[WeightTable] = None,
) -> Tuple[Fraction, Fraction]:
    """Coverage and Flexibility from a partition and pre-computed weight tables."""
    return _coverage(parts, y, method, y_table), _flexibility(parts, x, method, x_table)


def coverage(x: Skg, y: Skg, mapping: EquivalenceMapping, method: Any = Method.PREPROCESSED) -> Fraction:
    """Share of Y described by X: |shared in Y| / |Y| or Σ weight_Y over shared."""
    method = Method.parse(method)
    parts = partition(x, y, mapping)
    table = None if method is Method.UNWEIGHTED else _weights(y, method)
    return _coverage(parts, y, method, table)


def flexibility(x: Skg, y: Skg, mapping: EquivalenceMapping, method: Any = Method.PREPROCESSED) -> Fraction:
    """Share of X not described by Y: |x_only| / |X| or Σ weight_X over x_only."""
    method = Method.parse(method)
    parts = partition(x, y, mapping)
    table = None if method is Method.UNWEIGHTED else _weights(x, method)
    return _flexibility(parts, x, method, table)


@dataclass(frozen=True)
class ComparisonReport:
    """Coverage and Flexibility of from_schema with respect to to_schema.

    Args:
        from_schema: Name of X.
        to_schema: Name of Y.
        method: Calculation method.
        coverage: Cov(X, Y) as an exact fraction.
        flexibility: Flx(X, Y) as an exact fraction.
        shared_etypes: Canonical ids of groups holding etypes of both schemas.
        x_only: Ids of X's etypes outside shared groups.
        y_only: Ids of Y's etypes outside shared groups.
        weight_tables: Weight tables of X and Y keyed by schema name (empty
            for Method 1).
    """

    from_schema: str
    to_schema: str
    method: Method
    coverage: Fraction
    flexibility: Fraction
    shared_etypes: Tuple[str, ...] = ()
    x_only: Tuple[str, ...] = ()
    y_only: Tuple[str, ...] = ()
    weight_tables: Mapping[str, WeightTable] = field(default_factory=dict, compare=False)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "from": self.from_schema,
            "to": self.to_schema,
            "method": int(self.method),
            "coverage": str(self.coverage),
            "coverage_decimal": float(self.coverage),
            "flexibility": str(self.flexibility),
            "flexibility_decimal": float(self.flexibility),
            "shared_etypes": list(self.shared_etypes),
            "x_only": list(self.x_only),
            "y_only": list(self.y_only),
            "weight_tables": {name: table.to_dict() for name, table in self.weight_tables.items()},
        }


def compare(
    x: Skg,
    y: Skg,
    mapping: EquivalenceMapping,
    methods: Iterable[Any] = (1, 2, 3),
    directions: str = "xy",
) -> List[ComparisonReport]:
    """Build one report per method and requested direction.

    Reports are ordered by direction (X→Y first), then by method.

    Raises:
        ConfigurationError: If no method or an unknown direction is given.
    """
    wanted = sorted({Method.parse(m) for m in methods})
    if not wanted:
        raise ConfigurationError("At least one method is required.")
    if directions not in DIRECTIONS:
        raise ConfigurationError(f"Unknown direction {directions!r}; expected one of {DIRECTIONS}.")
    pairs = {"xy": [(x, y)], "yx": [(y, x)], "both": [(x, y), (y, x)]}[directions]

    cache: Dict[Any, WeightTable] = {}
    reports = []
    for left, right in pairs:
        parts = partition(left, right, mapping)
        for method in wanted:
            tables: Dict[str, WeightTable] = {}
            if method is not Method.UNWEIGHTED:
                tables = {left.name: _weights(left, method, cache), right.name: _weights(right, method, cache)}
            reports.append(
                ComparisonReport(
                    from_schema=left.name,
                    to_schema=right.name,
                    method=method,
                    coverage=_coverage(parts, right, method, tables.get(right.name)),
                    flexibility=_flexibility(parts, left, method, tables.get(left.name)),
                    shared_etypes=parts.shared_canonical,
                    x_only=parts.x_only,
                    y_only=parts.y_only,
                    weight_tables=tables,
                )
            )
    return reports


def reports_to_json(reports: Sequence[ComparisonReport], config: Optional[Mapping[str, Any]] = None) -> str:
    document: Dict[str, Any] = {}
    if config is not None:
        document["config"] = dict(config)
    document["reports"] = [r.to_dict() for r in reports]
    return json.dumps(document, indent=2, ensure_ascii=False) + "\n"


REPORT_CSV_FIELDS = ("from", "to", "method", "coverage", "flexibility")


def reports_to_csv(reports: Sequence[ComparisonReport], header: Optional[str] = None) -> str:
    """CSV summary with decimal metric values; header is an optional comment line."""
    buffer = io.StringIO()
    if header:
        buffer.write(f"# {header}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(REPORT_CSV_FIELDS)
    for report in reports:
        writer.writerow(
            (
                report.from_schema,
                report.to_schema,
                int(report.method),
                format_decimal(report.coverage),
                format_decimal(report.flexibility),
            )
        )
    return buffer.getvalue()
