"""Is-a preprocessing and structure-derived etype weights.

The weight of an etype E is |L_E| / (2|L|): the number of object property
endpoints at E over twice the number of object properties. Each property
contributes one endpoint to its domain and one to its range (a self-loop
contributes both to the same etype), so the weights of a schema sum to 1.
"""

from __future__ import annotations

import csv
import io
import logging
from collections import Counter, defaultdict, deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Set, Tuple

import networkx as nx

from .errors import SkgValidationError
from .model import ObjectProperty, Skg, validate

logger = logging.getLogger(__name__)

INHERIT_DOWN = "inherit-down"
SYNTHESIZE_UP = "synthesize-up"
RESTRICTION_INHERIT = "restriction-inherit"

DEGREE_STEP = Fraction(1, 50)
MAX_DEGREE = 6


@dataclass(frozen=True)
class Provenance:
    """Why a synthetic property exists.

    Args:
        property_id: Id of the synthetic property.
        rule: One of inherit-down, synthesize-up, restriction-inherit.
        sources: Ids it was derived from (the copied property, or the
            subclass properties that justified a synthesized one).
        origin: Id of the property it is ultimately a copy of (itself for
            synthesize-up).
    """

    property_id: str
    rule: str
    sources: Tuple[str, ...]
    origin: str


@dataclass(frozen=True)
class FlattenedSkg:
    """An Skg with is-a structure compiled into plain object properties."""

    base: Skg
    provenance: Tuple[Provenance, ...] = ()

    def provenance_of(self, property_id: str) -> Optional[Provenance]:
        for item in self.provenance:
            if item.property_id == property_id:
                return item
        return None


def _require_valid(skg: Skg) -> None:
    report = validate(skg)
    if not report.ok:
        first = report.errors[0]
        raise SkgValidationError(f"Schema '{skg.name}' is invalid: {first.message}", report)


def _fresh_id(base: str, taken: Set[str]) -> str:
    candidate, suffix = base, 2
    while candidate in taken:
        candidate = f"{base}#{suffix}"
        suffix += 1
    taken.add(candidate)
    return candidate


class _Flattener:
    """Mutable working state of flatten_is_a."""

    def __init__(self, skg: Skg) -> None:
        self.skg = skg
        self.anonymous = {e.id for e in skg.etypes if e.anonymous}
        self.graph = nx.DiGraph()
        self.graph.add_nodes_from(e.id for e in skg.etypes)
        self.graph.add_edges_from((edge.sub, edge.super) for edge in skg.is_a_edges)
        self.supers: Dict[str, List[str]] = defaultdict(list)
        self.subs: Dict[str, List[str]] = defaultdict(list)
        for edge in skg.is_a_edges:
            if edge.super not in self.supers[edge.sub]:
                self.supers[edge.sub].append(edge.super)
                self.subs[edge.super].append(edge.sub)

        self.props: List[ObjectProperty] = list(skg.object_properties)
        self.origin: Dict[str, str] = {p.id: p.id for p in self.props}
        self.taken: Set[str] = set(self.origin)
        self.by_domain: Dict[str, List[int]] = defaultdict(list)
        self.by_range: Dict[str, List[int]] = defaultdict(list)
        self.keys: Set[Tuple[str, str, str]] = set()
        for index, prop in enumerate(self.props):
            self._index(index, prop)
        self.provenance: List[Provenance] = []

        parents = nx.DiGraph()
        parents.add_nodes_from(self.origin)
        parents.add_edges_from(
            (p.id, p.sub_property_of) for p in self.props if p.sub_property_of is not None
        )
        self.super_properties = {node: nx.descendants(parents, node) for node in parents}
        self._subclass_cache: Dict[str, Set[str]] = {}

    def _index(self, index: int, prop: ObjectProperty) -> None:
        self.by_domain[prop.domain].append(index)
        if prop.range != prop.domain:
            self.by_range[prop.range].append(index)
        self.keys.add((self.origin[prop.id], prop.domain, prop.range))

    def _add(self, prop: ObjectProperty, provenance: Provenance) -> None:
        self.origin[prop.id] = provenance.origin
        self.props.append(prop)
        self._index(len(self.props) - 1, prop)
        self.provenance.append(provenance)

    def synthesize_up(self) -> None:
        """Give A an edge A -> B when every direct subclass of A points to B."""
        for node in nx.lexicographical_topological_sort(self.graph):
            subs = self.subs.get(node)
            if not subs or node in self.anonymous:
                continue
            pointing: Dict[str, Dict[str, List[str]]] = {}
            for sub in subs:
                targets: Dict[str, List[str]] = defaultdict(list)
                for index in self.by_domain[sub]:
                    prop = self.props[index]
                    if prop.range not in self.anonymous:
                        targets[prop.range].append(prop.id)
                pointing[sub] = targets
            common = set.intersection(*(set(t) for t in pointing.values()))
            existing = {self.props[i].range for i in self.by_domain[node]}
            for target in sorted(common - existing):
                prop_id = _fresh_id(f"{node}->{target}", self.taken)
                sources = tuple(sorted(pid for sub in subs for pid in pointing[sub][target]))
                self._add(
                    ObjectProperty(id=prop_id, domain=node, range=target, synthetic=True),
                    Provenance(prop_id, SYNTHESIZE_UP, sources, prop_id),
                )
                self._generalize(prop_id, sources)

    def _generalize(self, prop_id: str, sources: Iterable[str]) -> None:
        """Record a synthesized property as a super-property of its sources
        so it is not copied back onto the subclasses that justified it."""
        below = {self.origin[s] for s in sources}
        self.super_properties[prop_id] = set()
        for key, supers in self.super_properties.items():
            if key in below or supers & below:
                supers.add(prop_id)

    def inherit_down(self) -> None:
        """Copy properties incident to a superclass onto its direct subclasses
        until no new copy appears."""
        own = {
            node: [self.props[i] for i in sorted(set(self.by_domain[node]) | set(self.by_range[node]))]
            for node in self.graph
        }
        queue = deque(range(len(self.props)))
        while queue:
            prop = self.props[queue.popleft()]
            origin = self.origin[prop.id]
            for parent in dict.fromkeys(prop.endpoints()):
                rule = RESTRICTION_INHERIT if parent in self.anonymous else INHERIT_DOWN
                for node in self.subs.get(parent, ()):
                    domain = node if prop.domain == parent else prop.domain
                    range_ = node if prop.range == parent else prop.range
                    if (origin, domain, range_) in self.keys:
                        continue
                    if self._refined(prop, parent, node, own[node]):
                        continue
                    prop_id = _fresh_id(f"{prop.id}>{node}", self.taken)
                    self._add(
                        ObjectProperty(
                            id=prop_id,
                            labels=prop.labels,
                            domain=domain,
                            range=range_,
                            sub_property_of=prop.sub_property_of,
                            synthetic=True,
                        ),
                        Provenance(prop_id, rule, (prop.id,), origin),
                    )
                    queue.append(len(self.props) - 1)

    def _refined(
        self, prop: ObjectProperty, parent: str, node: str, own: Iterable[ObjectProperty]
    ) -> bool:
        """True when node already holds a sub-property of prop toward the same
        other end, or toward a subclass of it."""
        if prop.domain == parent and prop.range != parent:
            other, node_end, other_end = prop.range, "domain", "range"
        elif prop.range == parent and prop.domain != parent:
            other, node_end, other_end = prop.domain, "range", "domain"
        else:
            return False
        acceptable = self._subclasses_or_self(other)
        origin = self.origin[prop.id]
        for held in own:
            if getattr(held, node_end) != node or getattr(held, other_end) not in acceptable:
                continue
            if origin in self.super_properties.get(self.origin[held.id], ()):
                return True
        return False

    def _subclasses_or_self(self, etype_id: str) -> Set[str]:
        cached = self._subclass_cache.get(etype_id)
        if cached is None:
            cached = self._subclass_cache[etype_id] = {etype_id} | nx.ancestors(self.graph, etype_id)
        return cached

    def erase(self) -> FlattenedSkg:
        """Drop is-a edges, anonymous etypes and properties touching them."""
        kept = [
            p for p in self.props if p.domain not in self.anonymous and p.range not in self.anonymous
        ]
        kept_ids = {p.id for p in kept}
        kept = [
            p
            if p.sub_property_of is None or p.sub_property_of in kept_ids
            else ObjectProperty(p.id, p.domain, p.range, p.labels, None, p.synthetic)
            for p in kept
        ]
        base = self.skg.with_parts(
            etypes=(e for e in self.skg.etypes if not e.anonymous),
            object_properties=kept,
            is_a_edges=(),
        )
        provenance = tuple(p for p in self.provenance if p.property_id in kept_ids)
        return FlattenedSkg(base=base, provenance=provenance)


def flatten_is_a(skg: Skg) -> FlattenedSkg:
    """Compile is-a and restriction structure into object properties.

    Phases:
    1. Synthesis, deepest superclasses first: A gains A -> B when each direct
       subclass of A has a property pointing to B and A has none to B.
    2. Inheritance, repeated until nothing changes: each property incident
       to a superclass, copies included, goes onto each direct subclass
       unless the subclass already holds a sub-property of it toward the
       same other end or a subclass of that end. Restriction superclasses
       only pass edges down.
    3. Erasure of is-a edges, anonymous etypes and their properties.

    Raises:
        SkgValidationError: If the schema is invalid (e.g. an is-a cycle).
    """
    _require_valid(skg)
    return _flatten(skg)


def _flatten(skg: Skg) -> FlattenedSkg:
    if skg.is_flat():
        return FlattenedSkg(base=skg)
    flattener = _Flattener(skg)
    flattener.synthesize_up()
    flattener.inherit_down()
    flat = flattener.erase()
    logger.debug(
        "Flattened '%s': %d synthetic properties", skg.name, len(flat.provenance)
    )
    return flat


def strip_hierarchy(skg: Skg) -> Skg:
    """Drop is-a edges and anonymous etypes without propagating anything."""
    anonymous = {e.id for e in skg.etypes if e.anonymous}
    kept = [p for p in skg.object_properties if p.domain not in anonymous and p.range not in anonymous]
    kept_ids = {p.id for p in kept}
    kept = [
        p
        if p.sub_property_of is None or p.sub_property_of in kept_ids
        else ObjectProperty(p.id, p.domain, p.range, p.labels, None, p.synthetic)
        for p in kept
    ]
    return skg.with_parts(
        etypes=(e for e in skg.etypes if not e.anonymous),
        object_properties=kept,
        is_a_edges=(),
    )


def remove_etype(skg: Skg, etype_id: str) -> Skg:
    """Return a copy without one etype, its incident properties and is-a edges."""
    removed = {p.id for p in skg.object_properties if etype_id in (p.domain, p.range)}
    kept = [
        p
        if p.sub_property_of not in removed
        else ObjectProperty(p.id, p.domain, p.range, p.labels, None, p.synthetic)
        for p in skg.object_properties
        if p.id not in removed
    ]
    return skg.with_parts(
        etypes=(e for e in skg.etypes if e.id != etype_id),
        object_properties=kept,
        is_a_edges=(e for e in skg.is_a_edges if etype_id not in (e.sub, e.super)),
    )


@dataclass(frozen=True)
class WeightTable:
    """Exact etype weights of one schema.

    Args:
        schema: Schema name.
        entries: Etype id -> weight, in schema order; sums to 1 unless empty.
        total_properties: |L| after preprocessing.
        incidence: Etype id -> |L_E|.
        preprocessed: Whether is-a preprocessing was applied.
    """

    schema: str
    entries: Mapping[str, Fraction]
    total_properties: int
    incidence: Mapping[str, int] = field(default_factory=dict)
    preprocessed: bool = False

    def weight(self, etype_id: str) -> Fraction:
        return self.entries[etype_id]

    def total(self) -> Fraction:
        return sum(self.entries.values(), Fraction(0))

    def mass(self, etype_ids: Iterable[str]) -> Fraction:
        """Summed weight of some etypes, added up over the incidence counts."""
        ids = list(etype_ids)
        if self.total_properties and self.incidence:
            return Fraction(sum(self.incidence[e] for e in ids), 2 * self.total_properties)
        return sum((self.entries[e] for e in ids), Fraction(0))

    def ranked(self) -> List[Tuple[str, Fraction]]:
        """Entries sorted by weight descending, then id."""
        return sorted(self.entries.items(), key=lambda item: (-item[1], item[0]))

    def to_dict(self) -> Dict[str, object]:
        return {
            "schema": self.schema,
            "preprocessed": self.preprocessed,
            "total_properties": self.total_properties,
            "weights": {k: str(v) for k, v in self.entries.items()},
        }


def compute_weights(skg: Skg, preprocess: bool = True) -> WeightTable:
    """Compute weight(E) = |L_E| / (2|L|) for every named etype.

    With preprocess the schema is flattened first (is-a handling); without
    it is-a edges and anonymous etypes are simply dropped. A schema without
    object properties gets uniform weights 1/n.
    """
    _require_valid(skg)
    return _weigh(skg, preprocess)


def _weigh(skg: Skg, preprocess: bool) -> WeightTable:
    base = _flatten(skg).base if preprocess else strip_hierarchy(skg)
    incidence: Counter = Counter({etype_id: 0 for etype_id in base.named_ids()})
    for prop in base.object_properties:
        incidence[prop.domain] += 1
        incidence[prop.range] += 1
    return _table(skg.name, incidence, len(base.object_properties), preprocess)


def _table(schema: str, incidence: Mapping[str, int], total: int, preprocess: bool) -> WeightTable:
    if total:
        entries = {e: Fraction(count, 2 * total) for e, count in incidence.items()}
    else:
        entries = {e: Fraction(1, len(incidence)) for e in incidence}
    return WeightTable(
        schema=schema,
        entries=entries,
        total_properties=total,
        incidence=dict(incidence),
        preprocessed=preprocess,
    )


def weights_without(
    skg: Skg,
    table: WeightTable,
    etype_id: str,
    incident: Optional[Iterable[ObjectProperty]] = None,
) -> WeightTable:
    """Weight table of remove_etype(skg, etype_id), given the table of skg.

    For a flat schema the table follows from the incidence counts of the
    full one: the removed properties leave the total and their other
    endpoints. ``incident`` lists the properties touching etype_id when the
    caller already has them. Other schemas are weighed again from scratch;
    the reduced schema of a valid one is valid, so it is not re-checked.
    """
    if not skg.is_flat():
        return _weigh(remove_etype(skg, etype_id), table.preprocessed)
    if incident is None:
        incident = skg.incident_properties(etype_id)
    incidence = {e: count for e, count in table.incidence.items() if e != etype_id}
    removed = 0
    for prop in incident:
        removed += 1
        for end in (prop.domain, prop.range):
            if end != etype_id:
                incidence[end] -= 1
    return _table(table.schema, incidence, table.total_properties - removed, table.preprocessed)


def degree_of(weight: Fraction) -> int:
    """Importance degree 1..6 in steps of 0.02; weights >= 0.10 are degree 6."""
    return min(int(Fraction(weight) // DEGREE_STEP) + 1, MAX_DEGREE)


def bin_importance(table: WeightTable) -> Dict[str, int]:
    """Map every etype of a weight table to its importance degree."""
    return {etype_id: degree_of(weight) for etype_id, weight in table.entries.items()}


def format_decimal(value: Fraction, places: int = 6) -> str:
    """Render a fraction as a short decimal: 3/8 -> '0.375', 1/3 -> '0.333333'."""
    text = f"{float(value):.{places}f}".rstrip("0").rstrip(".")
    return "0" if text in ("", "-0") else text


WEIGHT_CSV_FIELDS = ("etype_id", "weight_numerator", "weight_denominator", "weight_decimal", "degree")


def weights_to_csv(table: WeightTable, header: Optional[str] = None) -> str:
    """CSV report sorted by weight descending then id; header is an optional
    leading comment line."""
    buffer = io.StringIO()
    if header:
        buffer.write(f"# {header}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(WEIGHT_CSV_FIELDS)
    for etype_id, weight in table.ranked():
        writer.writerow(
            (etype_id, weight.numerator, weight.denominator, format_decimal(weight), degree_of(weight))
        )
    return buffer.getvalue()
