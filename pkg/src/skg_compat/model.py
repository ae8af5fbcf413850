"""Schema knowledge graph (SKG) model, JSON interchange format and validation."""

from __future__ import annotations

import json
import logging
import sys
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Any, Dict, Iterable, List, Mapping, Optional, Tuple, Union

import networkx as nx

from .errors import DuplicateIdError, SkgFormatError, UnresolvedReferenceError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Etype:
    """An entity type of a schema.

    Args:
        id: Identifier, unique within one Skg.
        labels: Natural-language labels (at least one unless anonymous).
        data_properties: Attribute names, compared by property similarity.
        instances: Globally scoped individual identifiers.
        anonymous: True for restriction (anonymous superclass) etypes.
    """

    id: str
    labels: Tuple[str, ...] = ()
    data_properties: Tuple[str, ...] = ()
    instances: Tuple[str, ...] = ()
    anonymous: bool = False


@dataclass(frozen=True)
class ObjectProperty:
    """Directed relationship domain -> range between two etypes.

    Args:
        id: Identifier, unique within one Skg.
        labels: Natural-language labels.
        domain: Etype id at the source end.
        range: Etype id at the target end.
        sub_property_of: Optional id of the parent property.
        synthetic: True when created by is-a preprocessing.
    """

    id: str
    domain: str
    range: str
    labels: Tuple[str, ...] = ()
    sub_property_of: Optional[str] = None
    synthetic: bool = False

    def endpoints(self) -> Tuple[str, str]:
        return self.domain, self.range


@dataclass(frozen=True)
class IsAEdge:
    """Subclass edge sub is-a super."""

    sub: str
    super: str


@dataclass(frozen=True)
class Skg:
    """A schema knowledge graph.

    Lists keep the order they were loaded in. Instances are immutable; the
    ``with_*`` helpers return modified copies.
    """

    name: str
    etypes: Tuple[Etype, ...] = ()
    object_properties: Tuple[ObjectProperty, ...] = ()
    is_a_edges: Tuple[IsAEdge, ...] = ()

    @cached_property
    def _etype_index(self) -> Dict[str, Etype]:
        index: Dict[str, Etype] = {}
        for etype in self.etypes:
            index.setdefault(etype.id, etype)
        return index

    @cached_property
    def _property_index(self) -> Dict[str, ObjectProperty]:
        index: Dict[str, ObjectProperty] = {}
        for prop in self.object_properties:
            index.setdefault(prop.id, prop)
        return index

    def etype(self, etype_id: str) -> Etype:
        """Return the etype with the given id (KeyError if absent)."""
        return self._etype_index[etype_id]

    def has_etype(self, etype_id: str) -> bool:
        return etype_id in self._etype_index

    def object_property(self, property_id: str) -> ObjectProperty:
        """Return the object property with the given id (KeyError if absent)."""
        return self._property_index[property_id]

    def has_object_property(self, property_id: str) -> bool:
        return property_id in self._property_index

    def named_etypes(self) -> Tuple[Etype, ...]:
        """Return the non-anonymous etypes in document order."""
        return tuple(e for e in self.etypes if not e.anonymous)

    def named_ids(self) -> Tuple[str, ...]:
        return tuple(e.id for e in self.etypes if not e.anonymous)

    def incident_properties(self, etype_id: str) -> Tuple[ObjectProperty, ...]:
        """Return the object properties having etype_id as domain or range."""
        return tuple(
            p for p in self.object_properties if etype_id in (p.domain, p.range)
        )

    def is_flat(self) -> bool:
        """True when the Skg holds no is-a edges and no anonymous etypes."""
        return not self.is_a_edges and all(not e.anonymous for e in self.etypes)

    def with_parts(
        self,
        etypes: Optional[Iterable[Etype]] = None,
        object_properties: Optional[Iterable[ObjectProperty]] = None,
        is_a_edges: Optional[Iterable[IsAEdge]] = None,
    ) -> "Skg":
        """Return a copy with some of the parts replaced."""
        changes: Dict[str, Any] = {}
        if etypes is not None:
            changes["etypes"] = tuple(etypes)
        if object_properties is not None:
            changes["object_properties"] = tuple(object_properties)
        if is_a_edges is not None:
            changes["is_a_edges"] = tuple(is_a_edges)
        return replace(self, **changes)


@dataclass(frozen=True, order=True)
class ValidationIssue:
    """One finding of validate(): a stable code, where it is, and a message."""

    code: str
    location: str
    message: str = field(compare=False)

    def to_dict(self) -> Dict[str, str]:
        return {"code": self.code, "location": self.location, "message": self.message}


@dataclass(frozen=True)
class ValidationReport:
    """Errors and warnings found in an Skg, sorted by (code, location)."""

    errors: Tuple[ValidationIssue, ...] = ()
    warnings: Tuple[ValidationIssue, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.errors

    def codes(self) -> Tuple[str, ...]:
        return tuple(issue.code for issue in self.errors)

    def to_dict(self) -> Dict[str, List[Dict[str, str]]]:
        return {
            "errors": [issue.to_dict() for issue in self.errors],
            "warnings": [issue.to_dict() for issue in self.warnings],
        }


def validate(skg: Skg) -> ValidationReport:
    """Check every structural invariant of an Skg.

    Checks:
    - Etype and object property ids are non-empty and unique.
    - Named etypes carry at least one label; instances are unique per etype.
    - Every domain, range, is-a and sub-property reference resolves.
    - The is-a relation and the sub-property relation are acyclic.
    - Anonymous etypes never appear as is-a subclasses.
    """
    errors: List[ValidationIssue] = []
    warnings: List[ValidationIssue] = []

    etype_ids = _collect_ids(
        (e.id for e in skg.etypes), "duplicate-etype-id", "etype", errors
    )
    property_ids = _collect_ids(
        (p.id for p in skg.object_properties), "duplicate-property-id", "object property", errors
    )

    for etype in skg.etypes:
        if not etype.anonymous and not etype.labels:
            errors.append(
                ValidationIssue("missing-label", etype.id, f"Named etype '{etype.id}' has no label.")
            )
        seen = set()
        for instance in etype.instances:
            if instance in seen:
                errors.append(
                    ValidationIssue(
                        "duplicate-instance",
                        f"{etype.id}/{instance}",
                        f"Instance '{instance}' listed twice in etype '{etype.id}'.",
                    )
                )
            seen.add(instance)

    for prop in skg.object_properties:
        for role, ref in (("domain", prop.domain), ("range", prop.range)):
            if ref not in etype_ids:
                errors.append(_unresolved(f"{prop.id}.{role}", ref))
        if prop.sub_property_of is not None and prop.sub_property_of not in property_ids:
            errors.append(_unresolved(f"{prop.id}.sub_property_of", prop.sub_property_of))
        if prop.range in etype_ids and skg.etype(prop.range).anonymous:
            warnings.append(
                ValidationIssue(
                    "anonymous-range",
                    prop.id,
                    f"Object property '{prop.id}' points to anonymous etype '{prop.range}'.",
                )
            )

    anonymous_supers = set()
    for index, edge in enumerate(skg.is_a_edges):
        location = f"is_a[{index}]"
        for role, ref in (("sub", edge.sub), ("super", edge.super)):
            if ref not in etype_ids:
                errors.append(_unresolved(f"{location}.{role}", ref))
        if edge.sub in etype_ids and skg.etype(edge.sub).anonymous:
            errors.append(
                ValidationIssue(
                    "anonymous-subclass",
                    location,
                    f"Anonymous etype '{edge.sub}' used as an is-a subclass.",
                )
            )
        anonymous_supers.add(edge.super)

    for etype in skg.etypes:
        if etype.anonymous and etype.id not in anonymous_supers:
            warnings.append(
                ValidationIssue(
                    "orphan-restriction",
                    etype.id,
                    f"Anonymous etype '{etype.id}' restricts no named etype.",
                )
            )

    is_a_graph = nx.DiGraph()
    is_a_graph.add_edges_from((e.sub, e.super) for e in skg.is_a_edges)
    errors.extend(_cycle_issues(is_a_graph, "is-a-cycle", "is-a"))

    sub_property_graph = nx.DiGraph()
    sub_property_graph.add_edges_from(
        (p.id, p.sub_property_of) for p in skg.object_properties if p.sub_property_of is not None
    )
    errors.extend(_cycle_issues(sub_property_graph, "sub-property-cycle", "sub-property"))

    return ValidationReport(errors=tuple(sorted(errors)), warnings=tuple(sorted(warnings)))


def _collect_ids(ids: Iterable[str], code: str, kind: str, errors: List[ValidationIssue]) -> set:
    seen = set()
    for ref in ids:
        if not ref:
            errors.append(ValidationIssue("empty-id", kind, f"Empty {kind} id."))
            continue
        if ref in seen:
            errors.append(ValidationIssue(code, ref, f"Duplicate {kind} id '{ref}'."))
        seen.add(ref)
    return seen


def _unresolved(location: str, ref: str) -> ValidationIssue:
    return ValidationIssue(
        "unresolved-reference", location, f"Reference '{ref}' at {location} is not defined."
    )


def _cycle_issues(graph: nx.DiGraph, code: str, relation: str) -> List[ValidationIssue]:
    issues = []
    for component in nx.strongly_connected_components(graph):
        if len(component) == 1:
            node = next(iter(component))
            if not graph.has_edge(node, node):
                continue
        members = ",".join(sorted(component))
        issues.append(ValidationIssue(code, members, f"The {relation} relation has a cycle through {members}."))
    return issues


# --- JSON interchange format -------------------------------------------------

_TOP_KEYS = ("name", "etypes", "object_properties", "is_a")
_ETYPE_KEYS = ("id", "labels", "anonymous", "data_properties", "instances")
_PROPERTY_KEYS = ("id", "labels", "domain", "range", "sub_property_of", "synthetic")
_IS_A_KEYS = ("sub", "super")

_LENIENT_REQUIRED = {
    _TOP_KEYS: ("name", "etypes"),
    _ETYPE_KEYS: ("id",),
    _PROPERTY_KEYS: ("id", "domain", "range"),
    _IS_A_KEYS: ("sub", "super"),
}


def load_skg(data: Union[bytes, str], strict: bool = True) -> Skg:
    """Parse an SKG JSON document.

    Args:
        data: UTF-8 bytes or text of the document.
        strict: Require every key and reject unknown keys when True; otherwise
            default optional keys and warn about unknown ones.

    Raises:
        SkgFormatError: On JSON syntax errors (with position) or bad structure.
        DuplicateIdError: When an etype or property id is defined twice.
        UnresolvedReferenceError: When a reference names an undefined id.
    """
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise SkgFormatError(f"Document is not UTF-8: {exc}") from exc
    try:
        document = json.loads(data)
    except json.JSONDecodeError as exc:
        raise SkgFormatError(f"JSON syntax error: {exc.msg}", exc.lineno, exc.colno) from exc
    skg = skg_from_dict(document, strict=strict)
    _check_references(skg)
    return skg


def skg_from_dict(document: Any, strict: bool = True) -> Skg:
    """Build an Skg from an already decoded JSON object (no reference checks)."""
    top = _expect_object(document, _TOP_KEYS, "document", strict)
    name = _expect_str(top["name"], "name")
    etypes = tuple(
        _etype_from_dict(item, f"etypes[{i}]", strict)
        for i, item in enumerate(_expect_list(top["etypes"], "etypes"))
    )
    properties = tuple(
        _property_from_dict(item, f"object_properties[{i}]", strict)
        for i, item in enumerate(_expect_list(top.get("object_properties", []), "object_properties"))
    )
    edges = []
    for i, item in enumerate(_expect_list(top.get("is_a", []), "is_a")):
        where = f"is_a[{i}]"
        obj = _expect_object(item, _IS_A_KEYS, where, strict)
        edges.append(
            IsAEdge(
                sub=sys.intern(_expect_str(obj["sub"], f"{where}.sub")),
                super=sys.intern(_expect_str(obj["super"], f"{where}.super")),
            )
        )
    return Skg(name=name, etypes=etypes, object_properties=properties, is_a_edges=tuple(edges))


def _etype_from_dict(item: Any, where: str, strict: bool) -> Etype:
    obj = _expect_object(item, _ETYPE_KEYS, where, strict)
    return Etype(
        id=sys.intern(_expect_str(obj["id"], f"{where}.id")),
        labels=_expect_str_list(obj.get("labels", []), f"{where}.labels"),
        anonymous=_expect_bool(obj.get("anonymous", False), f"{where}.anonymous"),
        data_properties=_expect_str_list(obj.get("data_properties", []), f"{where}.data_properties"),
        instances=tuple(
            sys.intern(i) for i in _expect_str_list(obj.get("instances", []), f"{where}.instances")
        ),
    )


def _property_from_dict(item: Any, where: str, strict: bool) -> ObjectProperty:
    obj = _expect_object(item, _PROPERTY_KEYS, where, strict)
    parent = obj.get("sub_property_of")
    if parent is not None:
        parent = sys.intern(_expect_str(parent, f"{where}.sub_property_of"))
    return ObjectProperty(
        id=sys.intern(_expect_str(obj["id"], f"{where}.id")),
        labels=_expect_str_list(obj.get("labels", []), f"{where}.labels"),
        domain=sys.intern(_expect_str(obj["domain"], f"{where}.domain")),
        range=sys.intern(_expect_str(obj["range"], f"{where}.range")),
        sub_property_of=parent,
        synthetic=_expect_bool(obj.get("synthetic", False), f"{where}.synthetic"),
    )


def _check_references(skg: Skg) -> None:
    etype_ids = set()
    for etype in skg.etypes:
        if etype.id in etype_ids:
            raise DuplicateIdError(etype.id, "etype")
        etype_ids.add(etype.id)
    property_ids = set()
    for prop in skg.object_properties:
        if prop.id in property_ids:
            raise DuplicateIdError(prop.id, "object property")
        property_ids.add(prop.id)
    for prop in skg.object_properties:
        for role, ref in (("domain", prop.domain), ("range", prop.range)):
            if ref not in etype_ids:
                raise UnresolvedReferenceError(ref, f"object property '{prop.id}' {role}")
        if prop.sub_property_of is not None and prop.sub_property_of not in property_ids:
            raise UnresolvedReferenceError(
                prop.sub_property_of, f"object property '{prop.id}' sub_property_of"
            )
    for edge in skg.is_a_edges:
        for ref in (edge.sub, edge.super):
            if ref not in etype_ids:
                raise UnresolvedReferenceError(ref, f"is-a edge {edge.sub} -> {edge.super}")


def _expect_object(value: Any, keys: Tuple[str, ...], where: str, strict: bool) -> Mapping[str, Any]:
    if not isinstance(value, dict):
        raise SkgFormatError(f"Expected an object at {where}.")
    required = keys if strict else _LENIENT_REQUIRED[keys]
    missing = [k for k in required if k not in value]
    if missing:
        raise SkgFormatError(f"Missing key(s) {', '.join(missing)} at {where}.")
    unknown = sorted(k for k in value if k not in keys)
    if unknown:
        message = f"Unknown key(s) {', '.join(unknown)} at {where}."
        if strict:
            raise SkgFormatError(message)
        logger.warning(message)
    return value


def _expect_list(value: Any, where: str) -> List[Any]:
    if not isinstance(value, list):
        raise SkgFormatError(f"Expected a list at {where}.")
    return value


def _expect_str(value: Any, where: str) -> str:
    if not isinstance(value, str):
        raise SkgFormatError(f"Expected a string at {where}.")
    return value


def _expect_bool(value: Any, where: str) -> bool:
    if not isinstance(value, bool):
        raise SkgFormatError(f"Expected a boolean at {where}.")
    return value


def _expect_str_list(value: Any, where: str) -> Tuple[str, ...]:
    items = _expect_list(value, where)
    return tuple(_expect_str(item, f"{where}[{i}]") for i, item in enumerate(items))


def skg_to_dict(skg: Skg) -> Dict[str, Any]:
    """Return the JSON-ready dictionary form of an Skg."""
    return {
        "name": skg.name,
        "etypes": [
            {
                "id": e.id,
                "labels": list(e.labels),
                "anonymous": e.anonymous,
                "data_properties": list(e.data_properties),
                "instances": list(e.instances),
            }
            for e in skg.etypes
        ],
        "object_properties": [
            {
                "id": p.id,
                "labels": list(p.labels),
                "domain": p.domain,
                "range": p.range,
                "sub_property_of": p.sub_property_of,
                "synthetic": p.synthetic,
            }
            for p in skg.object_properties
        ],
        "is_a": [{"sub": e.sub, "super": e.super} for e in skg.is_a_edges],
    }


def save_skg(skg: Skg) -> bytes:
    """Serialize an Skg to UTF-8 JSON; load_skg(save_skg(s)) == s."""
    text = json.dumps(skg_to_dict(skg), indent=2, ensure_ascii=False)
    return (text + "\n").encode("utf-8")
