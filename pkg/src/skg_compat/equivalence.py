"""Semantic equivalence of etypes and cross-schema equivalence mappings."""

from __future__ import annotations

import bisect
import itertools
import json
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple, Union

from networkx.utils import UnionFind

from .errors import ConfigurationError, MappingError, SkgFormatError
from .model import Etype, Skg
from .similarity import (
    SimilarityConfig,
    backend_for,
    has_individuals,
    individual_similarity,
    label_similarity,
    property_names,
    property_similarity,
)

logger = logging.getLogger(__name__)

LABEL_TIER = "label"
PROPERTY_TIER = "property"
INDIVIDUAL_TIER = "individual"

Member = Tuple[str, str]
"""(schema name, etype id)."""


@dataclass(frozen=True)
class EquivalenceDecision:
    """Outcome of the tiered equivalence test for one etype pair.

    Components that the tier did not need are None: a label-tier decision
    carries only sim_label, a property-tier decision no sim_individual.
    """

    score: float
    equivalent: bool
    tier: str
    sim_label: float
    sim_property: Optional[float] = None
    sim_individual: Optional[float] = None
    individual_applicable: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "score": self.score,
            "equivalent": self.equivalent,
            "tier": self.tier,
            "sim_label": self.sim_label,
            "sim_property": self.sim_property,
            "sim_individual": self.sim_individual,
            "individual_applicable": self.individual_applicable,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "EquivalenceDecision":
        return cls(**data)


def semantic_similarity(
    u: Etype,
    v: Etype,
    cfg: SimilarityConfig,
    u_skg: Optional[Skg] = None,
    v_skg: Optional[Skg] = None,
) -> EquivalenceDecision:
    """Tiered equivalence test.

    - sim_L > T_L: equivalent at the label tier, score = sim_L.
    - else sim_P > T_p: equivalent at the property tier, score = sim_L + sim_P.
    - else score = sim_L + sim_P + sim_I, equivalent iff score > T_s.

    The optional Skgs let property similarity include incident object
    property labels.
    """
    sim_label = label_similarity(u, v, cfg)
    if sim_label > cfg.t_label:
        return EquivalenceDecision(score=sim_label, equivalent=True, tier=LABEL_TIER, sim_label=sim_label)
    sim_property = property_similarity(u, v, cfg, u_skg, v_skg)
    if sim_property > cfg.property_threshold:
        return EquivalenceDecision(
            score=math.fsum((sim_label, sim_property)),
            equivalent=True,
            tier=PROPERTY_TIER,
            sim_label=sim_label,
            sim_property=sim_property,
        )
    sim_individual = individual_similarity(u, v)
    score = math.fsum((sim_label, sim_property, sim_individual))
    return EquivalenceDecision(
        score=score,
        equivalent=score > cfg.t_overall,
        tier=INDIVIDUAL_TIER,
        sim_label=sim_label,
        sim_property=sim_property,
        sim_individual=sim_individual,
        individual_applicable=has_individuals(u, v),
    )


@dataclass(frozen=True)
class EquivalenceMapping:
    """Partition of (schema, etype) members into equivalence groups.

    Args:
        groups: Disjoint groups, each a sorted tuple of members.
        canonical: Canonical etype id of each group (same order as groups).
        reference: Name of the schema whose ids are preferred as canonical.
        pair_decisions: Decisions computed while building the mapping, keyed
            by the sorted member pair.
    """

    groups: Tuple[Tuple[Member, ...], ...]
    canonical: Tuple[str, ...]
    reference: str = ""
    pair_decisions: Mapping[Tuple[Member, Member], EquivalenceDecision] = field(
        default_factory=dict, compare=False
    )

    def __post_init__(self) -> None:
        index: Dict[Member, int] = {}
        for number, group in enumerate(self.groups):
            for member in group:
                if member in index:
                    raise MappingError(f"Etype {member[0]}:{member[1]} appears in two groups.")
                index[member] = number
        object.__setattr__(self, "_index", index)

    @classmethod
    def from_groups(
        cls,
        groups: Iterable[Iterable[Member]],
        reference: str = "",
        pair_decisions: Optional[Mapping[Tuple[Member, Member], EquivalenceDecision]] = None,
    ) -> "EquivalenceMapping":
        """Build a mapping from groups, sorting them and choosing canonical ids.

        The canonical id is the reference schema's smallest member id when the
        group has one, otherwise the id of the smallest (schema, id) member.
        Ids that would repeat across groups are qualified as ``schema:id``.
        """
        ordered = sorted(
            (tuple(sorted(set(g))) for g in groups if g),
            key=lambda g: (_preferred(g, reference), g),
        )
        picked = [_preferred(g, reference) for g in ordered]
        return cls(tuple(ordered), _canonical_ids(picked, reference), reference, dict(pair_decisions or {}))

    @classmethod
    def identity(cls, *schemas: Skg, reference: Optional[str] = None) -> "EquivalenceMapping":
        """One singleton group per named etype of each schema."""
        members = [(s.name, e.id) for s in schemas for e in s.named_etypes()]
        ref = reference if reference is not None else (schemas[0].name if schemas else "")
        return cls.from_groups(([m] for m in members), reference=ref)

    def members(self) -> Tuple[Member, ...]:
        return tuple(m for group in self.groups for m in group)

    def __contains__(self, member: object) -> bool:
        return member in self._index

    def group_index(self, member: Member) -> int:
        """Return the group number of a member; MappingError if unmapped."""
        try:
            return self._index[member]
        except KeyError:
            raise MappingError(
                f"Mapping does not mention etype '{member[1]}' of schema '{member[0]}'."
            ) from None

    def group_of(self, member: Member) -> Tuple[Member, ...]:
        return self.groups[self.group_index(member)]

    def canonical_of(self, member: Member) -> str:
        return self.canonical[self.group_index(member)]

    def equivalent(self, a: Member, b: Member) -> bool:
        return self.group_index(a) == self.group_index(b)

    def require(self, skg: Skg) -> None:
        """Raise MappingError naming the first named etype of skg not mapped."""
        for etype in skg.named_etypes():
            self.group_index((skg.name, etype.id))

    def without(self, member: Member) -> "EquivalenceMapping":
        """Return the mapping with one member removed; its group survives if
        other members remain."""
        number = self.group_index(member)
        groups = list(self.groups)
        rest = tuple(m for m in groups.pop(number) if m != member)
        picked = [_preferred(g, self.reference) for g in groups]
        if rest:
            first = _preferred(rest, self.reference)
            at = bisect.bisect_left(list(zip(picked, groups)), (first, rest))
            groups.insert(at, rest)
            picked.insert(at, first)
        decisions = {k: d for k, d in self.pair_decisions.items() if member not in k}
        return EquivalenceMapping(
            tuple(groups), _canonical_ids(picked, self.reference), self.reference, decisions
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "reference": self.reference,
            "groups": [
                {
                    "canonical": canonical,
                    "members": [{"schema": s, "etype": e} for s, e in group],
                }
                for canonical, group in zip(self.canonical, self.groups)
            ],
            "decisions": [
                {
                    "a": {"schema": a[0], "etype": a[1]},
                    "b": {"schema": b[0], "etype": b[1]},
                    **decision.to_dict(),
                }
                for (a, b), decision in sorted(self.pair_decisions.items())
            ],
        }


def _preferred(group: Sequence[Member], reference: str) -> Member:
    from_reference = [m for m in group if m[0] == reference]
    return min(from_reference) if from_reference else min(group)


def _canonical_ids(picked: Sequence[Member], reference: str) -> Tuple[str, ...]:
    """Canonical ids for the preferred members of sorted groups; ids that
    would repeat are qualified as ``schema:id`` outside the reference."""
    counts: Dict[str, int] = defaultdict(int)
    for schema, etype_id in picked:
        counts[etype_id] += 1
    return tuple(
        etype_id if counts[etype_id] == 1 or schema == reference else f"{schema}:{etype_id}"
        for schema, etype_id in picked
    )


def build_mapping(
    schemas: Sequence[Skg],
    reference: str,
    cfg: Optional[SimilarityConfig] = None,
) -> EquivalenceMapping:
    """Match etypes across schemas and close the matches transitively.

    All cross-schema pairs of named etypes are tested with
    semantic_similarity (within-schema pairs only for schemas named in
    cfg.within_schema); equivalent pairs are merged with union-find.

    For the exact and token-lexical backends, pairs that share no label
    token, property-name token or instance id are skipped: every component
    of their score is 0, so they can never be equivalent.
    """
    cfg = (cfg or SimilarityConfig()).validate()
    if len(schemas) < 2:
        raise ConfigurationError("build_mapping needs at least two schemas.")
    names = [s.name for s in schemas]
    if len(set(names)) != len(names):
        raise ConfigurationError(f"Schema names must be distinct, got {names}.")
    if reference not in names:
        raise ConfigurationError(f"Reference schema '{reference}' is not among {names}.")

    owners: Dict[Member, Skg] = {}
    etypes: Dict[Member, Etype] = {}
    for skg in schemas:
        for etype in skg.named_etypes():
            member = (skg.name, etype.id)
            owners[member] = skg
            etypes[member] = etype

    closure = UnionFind(sorted(etypes))
    decisions: Dict[Tuple[Member, Member], EquivalenceDecision] = {}
    for a, b in _candidate_pairs(sorted(etypes), etypes, owners, cfg):
        decision = semantic_similarity(etypes[a], etypes[b], cfg, owners[a], owners[b])
        decisions[(a, b)] = decision
        if decision.equivalent:
            logger.debug("%s ~ %s at %s tier (score %.3f)", a, b, decision.tier, decision.score)
            closure.union(a, b)

    return EquivalenceMapping.from_groups(closure.to_sets(), reference, decisions)


def _candidate_pairs(
    members: List[Member],
    etypes: Mapping[Member, Etype],
    owners: Mapping[Member, Skg],
    cfg: SimilarityConfig,
) -> Iterable[Tuple[Member, Member]]:
    def allowed(a: Member, b: Member) -> bool:
        return a[0] != b[0] or a[0] in cfg.within_schema

    backend = backend_for(cfg)
    if not backend.supports_blocking:
        for a, b in itertools.combinations(members, 2):
            if allowed(a, b):
                yield a, b
        return

    index: Dict[str, List[Member]] = defaultdict(list)
    for member in members:
        etype = etypes[member]
        keys: Set[str] = set()
        for label in etype.labels:
            keys.update(backend.keys(label))
        for name in property_names(etype, cfg, owners[member]):
            keys.update(backend.keys(name))
        keys.update("\x00" + instance for instance in etype.instances)
        for key in keys:
            index[key].append(member)

    seen: Set[Tuple[Member, Member]] = set()
    for key in sorted(index):
        for a, b in itertools.combinations(index[key], 2):
            pair = (a, b) if a < b else (b, a)
            if pair not in seen and allowed(a, b):
                seen.add(pair)
    yield from sorted(seen)


def save_mapping(mapping: EquivalenceMapping, config: Optional[Mapping[str, Any]] = None) -> bytes:
    """Serialize a mapping (and optionally the effective config) to JSON."""
    document = mapping.to_dict()
    if config is not None:
        document = {"config": dict(config), **document}
    return (json.dumps(document, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def load_mapping(data: Union[bytes, str]) -> EquivalenceMapping:
    """Parse a mapping written by save_mapping."""
    try:
        document = json.loads(data)
    except json.JSONDecodeError as exc:
        raise SkgFormatError(f"JSON syntax error: {exc.msg}", exc.lineno, exc.colno) from exc
    try:
        groups = [
            [(m["schema"], m["etype"]) for m in group["members"]] for group in document["groups"]
        ]
        decisions = {}
        for item in document.get("decisions", []):
            a = (item["a"]["schema"], item["a"]["etype"])
            b = (item["b"]["schema"], item["b"]["etype"])
            payload = {k: v for k, v in item.items() if k not in ("a", "b")}
            decisions[(a, b)] = EquivalenceDecision.from_dict(payload)
        return EquivalenceMapping.from_groups(groups, document.get("reference", ""), decisions)
    except (KeyError, TypeError) as exc:
        raise SkgFormatError(f"Malformed mapping document: {exc}") from exc
