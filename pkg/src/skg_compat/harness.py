"""Etype-removal ablation, synthetic schema pairs and trend summaries."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .equivalence import EquivalenceMapping
from .errors import ConfigurationError
from .metrics import Method, measure, partition
from .model import Etype, IsAEdge, ObjectProperty, Skg
from .weights import (
    WeightTable,
    bin_importance,
    compute_weights,
    format_decimal,
    remove_etype,
    weights_without,
)

logger = logging.getLogger(__name__)

BASELINE_DEGREE = 0


@dataclass(frozen=True)
class AblationRow:
    """Metrics after removing one etype of X (or none, for the baseline).

    Args:
        degree: Importance degree of the removed etype; 0 for the baseline.
        etype_id: Removed etype; empty for the baseline.
        method: Calculation method.
        coverage: Cov(X', Y).
        flexibility: Flx(X', Y).
        delta_coverage: coverage minus the baseline coverage.
        delta_flexibility: flexibility minus the baseline flexibility.
        weight_in_y: Weight in Y of the removed etype's counterparts (their
            share of |Y| under Method 1).
        weight_in_x: Weight of the removed etype in the unablated X.
    """

    degree: int
    etype_id: str
    method: Method
    coverage: Fraction
    flexibility: Fraction
    delta_coverage: Fraction = Fraction(0)
    delta_flexibility: Fraction = Fraction(0)
    weight_in_y: Fraction = Fraction(0)
    weight_in_x: Fraction = Fraction(0)

    @property
    def coverage_drop(self) -> Fraction:
        return -self.delta_coverage

    @property
    def is_baseline(self) -> bool:
        return self.degree == BASELINE_DEGREE


@dataclass(frozen=True)
class AblationResult:
    """All single-etype removals of one X against one Y.

    Rows hold the baseline (one per method) first, then one row per removed
    etype and method in X's etype order. degree_averages maps (degree,
    method) to the mean (coverage, flexibility) over that degree's removals;
    degrees without removals have no cell.
    """

    x_schema: str
    y_schema: str
    methods: Tuple[Method, ...]
    degrees: Mapping[str, int]
    rows: Tuple[AblationRow, ...]
    degree_averages: Mapping[Tuple[int, Method], Tuple[Fraction, Fraction]] = field(default_factory=dict)
    skipped: Tuple[str, ...] = ()

    @property
    def removed_etypes(self) -> Tuple[str, ...]:
        seen: Dict[str, None] = {}
        for row in self.rows:
            if not row.is_baseline:
                seen.setdefault(row.etype_id)
        return tuple(seen)

    def baseline(self, method: Any) -> AblationRow:
        method = Method.parse(method)
        for row in self.rows:
            if row.is_baseline and row.method is method:
                return row
        raise KeyError(method)

    def removals(self, method: Any = None) -> List[AblationRow]:
        wanted = None if method is None else Method.parse(method)
        return [r for r in self.rows if not r.is_baseline and (wanted is None or r.method is wanted)]

    def mean_change(self, method: Any) -> Dict[int, Tuple[Fraction, Fraction]]:
        """Degree -> mean (coverage drop, flexibility change) for one method."""
        cells: Dict[int, List[AblationRow]] = defaultdict(list)
        for row in self.removals(method):
            cells[row.degree].append(row)
        return {
            degree: (
                _mean(r.coverage_drop for r in rows),
                _mean(r.delta_flexibility for r in rows),
            )
            for degree, rows in sorted(cells.items())
        }


def _mean(values: Iterable[Fraction]) -> Fraction:
    values = list(values)
    return sum(values, Fraction(0)) / len(values)


def _tables(skg: Skg, methods: Sequence[Method]) -> Dict[Method, Optional[WeightTable]]:
    return {
        m: None if m is Method.UNWEIGHTED else compute_weights(skg, preprocess=m.preprocess) for m in methods
    }


def ablate(
    x: Skg,
    y: Skg,
    mapping: EquivalenceMapping,
    methods: Iterable[Any] = (1, 2, 3),
    workers: int = 1,
) -> AblationResult:
    """Remove each named etype of X in turn and recompute the metrics.

    Degrees come from X's Method-3 weight table and are fixed before any
    removal. Each removal works on a fresh copy of X and restricts the
    mapping (the etype leaves its group; the group survives if other members
    remain). Y and its weight tables are never touched.

    Raises:
        ConfigurationError: On an empty method set, equal schema names or
            workers < 1.
        MappingError: If the mapping misses a named etype of X or Y.
    """
    wanted = tuple(sorted({Method.parse(m) for m in methods}))
    if not wanted:
        raise ConfigurationError("At least one method is required.")
    if workers < 1:
        raise ConfigurationError(f"workers must be >= 1, got {workers}.")
    if x.name == y.name:
        raise ConfigurationError(f"Cannot ablate '{x.name}' against itself; schema names must differ.")
    parts = partition(x, y, mapping)
    mapping = replace(mapping, pair_decisions={})

    x_tables = _tables(x, wanted)
    preprocessed = x_tables.get(Method.PREPROCESSED) or compute_weights(x, preprocess=True)
    degrees = bin_importance(preprocessed)
    incident: Dict[str, List[ObjectProperty]] = defaultdict(list)
    for prop in x.object_properties:
        for end in dict.fromkeys((prop.domain, prop.range)):
            incident[end].append(prop)
    y_tables = _tables(y, wanted)
    y_size = len(y.named_ids())

    baseline: Dict[Method, Tuple[Fraction, Fraction]] = {
        m: measure(parts, x, y, m, x_tables[m], y_tables[m]) for m in wanted
    }
    rows: List[AblationRow] = [
        AblationRow(BASELINE_DEGREE, "", m, *baseline[m]) for m in wanted
    ]

    def counterpart_weight(etype_id: str, method: Method) -> Fraction:
        members = [e for s, e in mapping.group_of((x.name, etype_id)) if s == y.name]
        if method is Method.UNWEIGHTED:
            return Fraction(len(members), y_size) if y_size else Fraction(0)
        return sum((y_tables[method].weight(e) for e in members), Fraction(0))

    def own_weight(etype_id: str, method: Method) -> Fraction:
        if method is Method.UNWEIGHTED:
            return Fraction(1, len(x.named_ids()))
        return x_tables[method].weight(etype_id)

    def remove(etype_id: str) -> List[AblationRow]:
        reduced = remove_etype(x, etype_id)
        restricted = mapping.without((x.name, etype_id))
        reduced_parts = partition(reduced, y, restricted)
        touching = incident.get(etype_id, ())
        reduced_tables = {
            m: None if m is Method.UNWEIGHTED else weights_without(x, x_tables[m], etype_id, touching)
            for m in wanted
        }
        out = []
        for method in wanted:
            cov, flx = measure(reduced_parts, reduced, y, method, reduced_tables[method], y_tables[method])
            out.append(
                AblationRow(
                    degree=degrees[etype_id],
                    etype_id=etype_id,
                    method=method,
                    coverage=cov,
                    flexibility=flx,
                    delta_coverage=cov - baseline[method][0],
                    delta_flexibility=flx - baseline[method][1],
                    weight_in_y=counterpart_weight(etype_id, method),
                    weight_in_x=own_weight(etype_id, method),
                )
            )
        return out

    named = list(x.named_ids())
    skipped: Tuple[str, ...] = ()
    if len(named) <= 1:
        logger.warning("Schema '%s' has a single etype; nothing to ablate.", x.name)
        skipped, named = tuple(named), []

    if workers > 1 and len(named) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            batches = list(pool.map(remove, named))
    else:
        batches = [remove(etype_id) for etype_id in named]
    for batch in batches:
        rows.extend(batch)

    cells: Dict[Tuple[int, Method], List[AblationRow]] = defaultdict(list)
    for row in rows:
        if not row.is_baseline:
            cells[(row.degree, row.method)].append(row)
    averages = {
        key: (_mean(r.coverage for r in cell), _mean(r.flexibility for r in cell))
        for key, cell in sorted(cells.items())
    }
    logger.info("Ablated %d etypes of '%s' against '%s'", len(named), x.name, y.name)
    return AblationResult(
        x_schema=x.name,
        y_schema=y.name,
        methods=wanted,
        degrees=degrees,
        rows=tuple(rows),
        degree_averages=averages,
        skipped=skipped,
    )


ABLATION_CSV_FIELDS = (
    "degree",
    "etype_id",
    "method",
    "coverage",
    "flexibility",
    "delta_coverage",
    "delta_flexibility",
)


def ablation_to_csv(results: Sequence[AblationResult], header: Optional[str] = None) -> str:
    """One CSV line per row of every result; the baseline has degree 0."""
    buffer = io.StringIO()
    if header:
        buffer.write(f"# {header}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(ABLATION_CSV_FIELDS)
    for result in results:
        for row in result.rows:
            writer.writerow(
                (
                    row.degree,
                    row.etype_id,
                    int(row.method),
                    format_decimal(row.coverage),
                    format_decimal(row.flexibility),
                    format_decimal(row.delta_coverage),
                    format_decimal(row.delta_flexibility),
                )
            )
    return buffer.getvalue()


# --- synthetic schemas -------------------------------------------------------


@dataclass(frozen=True)
class SyntheticSpec:
    """Shape of a generated schema pair.

    Args:
        seed: Seed of the random generator.
        n_etypes: Named etypes per schema.
        edge_density: Object properties as a share of the n(n-1) ordered pairs.
        is_a_depth: Maximum is-a chain length (0..3).
        overlap_fraction: Share of etypes the partner schema also holds.
    """

    seed: int = 0
    n_etypes: int = 10
    edge_density: float = 0.2
    is_a_depth: int = 0
    overlap_fraction: float = 0.5

    def validate(self) -> "SyntheticSpec":
        if self.n_etypes < 1:
            raise ConfigurationError(f"n_etypes must be >= 1, got {self.n_etypes}.")
        if not 0 <= self.is_a_depth <= 3:
            raise ConfigurationError(f"is_a_depth must be in 0..3, got {self.is_a_depth}.")
        for name in ("edge_density", "overlap_fraction"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigurationError(f"{name} must be in [0, 1], got {value}.")
        return self


class SyntheticPair(NamedTuple):
    base: Skg
    partner: Skg
    mapping: EquivalenceMapping


_ONSETS = ("b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z")
_VOWELS = ("a", "e", "i", "o", "u")


class _Words:
    """Distinct lowercase pseudo-words; no two share a token."""

    def __init__(self, rng: np.random.Generator) -> None:
        self.rng = rng
        self.used: set = set()

    def __call__(self) -> str:
        length = 3
        for attempt in range(1000):
            if attempt and attempt % 50 == 0:
                length += 1
            picks = self.rng.integers(0, [len(_ONSETS), len(_VOWELS)] * length)
            word = "".join(
                _ONSETS[picks[2 * i]] + _VOWELS[picks[2 * i + 1]] for i in range(length)
            )
            if word not in self.used:
                self.used.add(word)
                return word
        raise RuntimeError("Could not draw a fresh word.")


def _perturb(label: str, rng: np.random.Generator) -> str:
    return label.upper() if rng.integers(0, 2) else label.capitalize()


def _structure(
    name: str,
    etypes: List[Etype],
    spec: SyntheticSpec,
    rng: np.random.Generator,
    words: _Words,
) -> Skg:
    n = len(etypes)
    ids = [e.id for e in etypes]
    count = int(round(spec.edge_density * n * (n - 1)))
    properties = []
    if count:
        for flat in sorted(rng.choice(n * (n - 1), size=count, replace=False).tolist()):
            source, offset = divmod(flat, n - 1)
            target = offset + 1 if offset >= source else offset
            word = words()
            properties.append(ObjectProperty(id=word, domain=ids[source], range=ids[target], labels=(word,)))

    edges = []
    if spec.is_a_depth:
        levels = rng.integers(0, spec.is_a_depth + 1, size=n).tolist()
        by_level: Dict[int, List[int]] = defaultdict(list)
        for index, level in enumerate(levels):
            by_level[level].append(index)
        for index, level in enumerate(levels):
            parents = by_level.get(level - 1)
            if level and parents:
                parent = parents[int(rng.integers(0, len(parents)))]
                edges.append(IsAEdge(sub=ids[index], super=ids[parent]))
    return Skg(name=name, etypes=tuple(etypes), object_properties=tuple(properties), is_a_edges=tuple(edges))


def generate_synthetic(spec: SyntheticSpec) -> SyntheticPair:
    """Generate a base schema, a partner sharing ceil(overlap * n) etypes and
    the ground-truth mapping between them.

    Shared etypes keep their id and get a case-perturbed label in the partner;
    every other label is a fresh word. Equal specs give equal outputs.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    words = _Words(rng)
    n = spec.n_etypes
    base_name, partner_name = f"synthetic-{spec.seed}", f"synthetic-{spec.seed}-partner"

    base_etypes = []
    for _ in range(n):
        word = words()
        base_etypes.append(Etype(id=word, labels=(word,)))
    base = _structure(base_name, base_etypes, spec, rng, words)

    k = math.ceil(spec.overlap_fraction * n)
    shared = sorted(rng.choice(n, size=k, replace=False).tolist()) if k else []
    partner_etypes = [
        Etype(id=base_etypes[i].id, labels=(_perturb(base_etypes[i].id, rng),)) for i in shared
    ]
    for _ in range(n - k):
        word = words()
        partner_etypes.append(Etype(id=word, labels=(word,)))
    partner = _structure(partner_name, partner_etypes, spec, rng, words)

    shared_ids = {base_etypes[i].id for i in shared}
    groups = [
        [(base_name, e.id), (partner_name, e.id)] if e.id in shared_ids else [(base_name, e.id)]
        for e in base_etypes
    ]
    groups.extend([(partner_name, e.id)] for e in partner_etypes if e.id not in shared_ids)
    mapping = EquivalenceMapping.from_groups(groups, reference=base_name)
    return SyntheticPair(base, partner, mapping)


# --- trends ------------------------------------------------------------------

FLAT = "flat"
INCREASING = "increasing"
DECREASING = "decreasing"
MIXED = "mixed"


def _correlation(xs: Sequence[Fraction], ys: Sequence[Fraction]) -> Optional[float]:
    """Pearson correlation, or None when either side has no variance."""
    if len(xs) < 2:
        return None
    a = np.array([float(v) for v in xs])
    b = np.array([float(v) for v in ys])
    if np.ptp(a) == 0 or np.ptp(b) == 0:
        return None
    return float(np.corrcoef(a, b)[0, 1])


def _verdict(values: Sequence[Fraction]) -> str:
    steps = [later - earlier for earlier, later in zip(values, values[1:])]
    if all(step == 0 for step in steps):
        return FLAT
    if all(step > 0 for step in steps):
        return INCREASING
    if all(step < 0 for step in steps):
        return DECREASING
    return MIXED


@dataclass(frozen=True)
class MethodTrend:
    """How one method's metric changes track the removed etypes' weights.

    Correlations are None (reported as "flat") when a side has no variance.
    """

    method: Method
    coverage_correlation: Optional[float]
    flexibility_correlation: Optional[float]
    coverage_drop_by_degree: Mapping[int, Fraction]
    flexibility_change_by_degree: Mapping[int, Fraction]
    coverage_verdict: str
    flexibility_verdict: str

    def to_dict(self) -> Dict[str, Any]:
        return {
            "method": int(self.method),
            "coverage_correlation": FLAT if self.coverage_correlation is None else self.coverage_correlation,
            "flexibility_correlation": (
                FLAT if self.flexibility_correlation is None else self.flexibility_correlation
            ),
            "coverage_drop_by_degree": {str(d): str(v) for d, v in self.coverage_drop_by_degree.items()},
            "flexibility_change_by_degree": {
                str(d): str(v) for d, v in self.flexibility_change_by_degree.items()
            },
            "coverage_verdict": self.coverage_verdict,
            "flexibility_verdict": self.flexibility_verdict,
        }


@dataclass(frozen=True)
class TrendReport:
    trends: Tuple[MethodTrend, ...]
    crossover: bool
    runs: Tuple[Tuple[str, str], ...] = ()

    def trend(self, method: Any) -> MethodTrend:
        method = Method.parse(method)
        for item in self.trends:
            if item.method is method:
                return item
        raise KeyError(method)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "runs": [{"x": x, "y": y} for x, y in self.runs],
            "methods": [t.to_dict() for t in self.trends],
            "crossover": self.crossover,
        }

    def to_json(self, config: Optional[Mapping[str, Any]] = None) -> str:
        document = self.to_dict()
        if config is not None:
            document = {"config": dict(config), **document}
        return json.dumps(document, indent=2, ensure_ascii=False) + "\n"

    def to_text(self, header: Optional[str] = None) -> str:
        lines = [f"# {header}"] if header else []
        for x, y in self.runs:
            lines.append(f"run: {x} -> {y}")
        for item in self.trends:
            cov = "flat" if item.coverage_correlation is None else f"{item.coverage_correlation:.4f}"
            flx = "flat" if item.flexibility_correlation is None else f"{item.flexibility_correlation:.4f}"
            lines.append(f"method {int(item.method)}:")
            lines.append(f"  coverage drop vs weight in Y: r = {cov} ({item.coverage_verdict} over degrees)")
            lines.append(f"  flexibility change vs weight in X: r = {flx} ({item.flexibility_verdict} over degrees)")
            for degree, drop in item.coverage_drop_by_degree.items():
                change = item.flexibility_change_by_degree[degree]
                lines.append(
                    f"  degree {degree}: mean coverage drop {format_decimal(drop)}, "
                    f"mean flexibility change {format_decimal(change)}"
                )
        lines.append(f"crossover: {'yes' if self.crossover else 'no'}")
        return "\n".join(lines) + "\n"


def _crossover(result: AblationResult) -> bool:
    """Weighted coverage at or above unweighted at the lowest degree but
    below it at the highest."""
    if Method.UNWEIGHTED not in result.methods or Method.WEIGHTED not in result.methods:
        return False
    degrees = sorted({d for d, _ in result.degree_averages})
    if len(degrees) < 2:
        return False
    low, high = degrees[0], degrees[-1]
    averages = result.degree_averages
    return (
        averages[(low, Method.WEIGHTED)][0] >= averages[(low, Method.UNWEIGHTED)][0]
        and averages[(high, Method.WEIGHTED)][0] < averages[(high, Method.UNWEIGHTED)][0]
    )


def trend_summary(results: Sequence[AblationResult]) -> TrendReport:
    """Summarize ablation runs per method.

    Correlations pair each removal's metric change with the removed etype's
    weight (in Y for coverage drop, in X for flexibility change). Verdicts
    describe the per-degree mean changes in increasing degree order.
    """
    if not results:
        raise ConfigurationError("trend_summary needs at least one ablation result.")
    methods = sorted({m for r in results for m in r.methods})
    trends = []
    for method in methods:
        rows = [row for r in results if method in r.methods for row in r.removals(method)]
        cells: Dict[int, List[AblationRow]] = defaultdict(list)
        for row in rows:
            cells[row.degree].append(row)
        drops = {d: _mean(r.coverage_drop for r in cells[d]) for d in sorted(cells)}
        changes = {d: _mean(r.delta_flexibility for r in cells[d]) for d in sorted(cells)}
        trends.append(
            MethodTrend(
                method=method,
                coverage_correlation=_correlation(
                    [r.weight_in_y for r in rows], [r.coverage_drop for r in rows]
                ),
                flexibility_correlation=_correlation(
                    [r.weight_in_x for r in rows], [r.delta_flexibility for r in rows]
                ),
                coverage_drop_by_degree=drops,
                flexibility_change_by_degree=changes,
                coverage_verdict=_verdict(list(drops.values())),
                flexibility_verdict=_verdict(list(changes.values())),
            )
        )
    return TrendReport(
        trends=tuple(trends),
        crossover=any(_crossover(r) for r in results),
        runs=tuple((r.x_schema, r.y_schema) for r in results),
    )
