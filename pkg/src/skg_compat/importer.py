"""Lower a parsed Turtle/OWL document into an Skg."""

from __future__ import annotations

import logging
from collections import defaultdict
from typing import Dict, List, Optional, Set, Tuple, Union

from rdflib.namespace import OWL, RDF, RDFS

from .errors import LoweringError
from .model import Etype, IsAEdge, ObjectProperty, Skg, validate
from .turtle import IRI, BlankNode, Literal, Term, Triple, TurtleDocument, parse_turtle

logger = logging.getLogger(__name__)

TYPE = str(RDF.type)
SUB_CLASS_OF = str(RDFS.subClassOf)
SUB_PROPERTY_OF = str(RDFS.subPropertyOf)
DOMAIN = str(RDFS.domain)
RANGE = str(RDFS.range)
LABEL = str(RDFS.label)
COMMENT = str(RDFS.comment)
CLASS = str(OWL.Class)
OBJECT_PROPERTY = str(OWL.ObjectProperty)
DATATYPE_PROPERTY = str(OWL.DatatypeProperty)
RESTRICTION = str(OWL.Restriction)
ONTOLOGY = str(OWL.Ontology)
ON_PROPERTY = str(OWL.onProperty)
VALUE_FILLERS = (str(OWL.someValuesFrom), str(OWL.allValuesFrom))
CARDINALITIES = (str(OWL.cardinality), str(OWL.minCardinality), str(OWL.maxCardinality))
RESTRICTION_PREDICATES = (TYPE, ON_PROPERTY) + VALUE_FILLERS + CARDINALITIES


class SkgLowerer:
    """Structural lowering of OWL classes, properties and restrictions.

    Args:
        doc: The parsed document.
        name: Name of the resulting Skg; defaults to the ontology local name.
        strict: Raise on unsupported constructs and undeclared classes instead
            of skipping them with a warning.

    After lower() the collected warnings are available in ``warnings``.
    """

    def __init__(self, doc: TurtleDocument, name: Optional[str] = None, strict: bool = False) -> None:
        self.doc = doc
        self.name = name
        self.strict = strict
        self.warnings: List[str] = []
        self._consumed: Set[int] = set()
        self._by_subject: Dict[Term, List[Tuple[int, Triple]]] = defaultdict(list)
        for index, triple in enumerate(doc.triples):
            self._by_subject[triple.subject].append((index, triple))

    def lower(self) -> Skg:
        """Return the lowered Skg; raises LoweringError when it cannot be built."""
        classes = self._typed(CLASS)
        object_props = self._typed(OBJECT_PROPERTY)
        data_props = self._typed(DATATYPE_PROPERTY)
        self._consume_ontology_header()
        ids = self._assign_ids(classes + object_props + data_props)
        self._ids = ids

        self._class_order: List[IRI] = list(classes)
        self._declared = set(classes)
        self._referenced: Set[IRI] = set()

        data_properties: Dict[IRI, List[str]] = defaultdict(list)
        for prop in data_props:
            label = self._labels(prop)[0]
            domain = self._single(prop, DOMAIN)
            self._single(prop, RANGE)
            if domain is None:
                self._warn(f"Datatype property '{ids[prop]}' has no domain; ignored.")
                continue
            data_properties[self._class_ref(domain, prop)].append(label)

        properties: List[ObjectProperty] = []
        placed: Dict[IRI, str] = {}
        taken: Set[str] = set()
        for prop in object_props:
            domain = self._single(prop, DOMAIN)
            range_ = self._single(prop, RANGE)
            if domain is None or range_ is None:
                continue
            prop_id = ids[prop]
            properties.append(
                ObjectProperty(
                    id=prop_id,
                    labels=tuple(self._labels(prop)),
                    domain=ids[self._class_ref(domain, prop)],
                    range=ids[self._class_ref(range_, prop)],
                )
            )
            placed[prop] = prop_id
            taken.add(prop_id)

        is_a: List[IsAEdge] = []
        anonymous: Dict[BlankNode, str] = {}
        restricted: Set[IRI] = set()
        for index, triple in enumerate(self.doc.triples):
            if triple.predicate.value != SUB_CLASS_OF:
                continue
            self._consumed.add(index)
            sub = self._class_ref(triple.subject, triple)
            if isinstance(triple.object, IRI):
                is_a.append(IsAEdge(ids[sub], ids[self._class_ref(triple.object, triple)]))
            elif isinstance(triple.object, BlankNode) and self._is_restriction(triple.object):
                node = triple.object
                if node not in anonymous:
                    anon_id = f"_:{node.label}"
                    anonymous[node] = anon_id
                    on_property, filler = self._restriction_parts(node)
                    restricted.add(on_property)
                    prop_id = self._fresh_id(ids.get(on_property, on_property.local_name()), anon_id, taken)
                    properties.append(
                        ObjectProperty(
                            id=prop_id,
                            labels=tuple(self._labels(on_property)),
                            domain=anon_id,
                            range=ids[filler],
                            sub_property_of=placed.get(on_property) if prop_id != placed.get(on_property) else None,
                        )
                    )
                is_a.append(IsAEdge(ids[sub], anonymous[node]))
            else:
                self._unsupported(triple, "rdfs:subClassOf with a non-restriction blank node")

        parents: Dict[str, str] = {}
        for index, triple in enumerate(self.doc.triples):
            if triple.predicate.value != SUB_PROPERTY_OF:
                continue
            self._consumed.add(index)
            child, parent = triple.subject, triple.object
            if child in placed and parent in placed:
                parents[placed[child]] = placed[parent]
            else:
                self._warn(
                    f"rdfs:subPropertyOf at line {triple.line} links a property without "
                    "domain and range; ignored."
                )
        properties = [
            ObjectProperty(
                id=p.id,
                labels=p.labels,
                domain=p.domain,
                range=p.range,
                sub_property_of=parents.get(p.id, p.sub_property_of),
            )
            for p in properties
        ]

        # implicit classes exist only after the passes above
        instances: Dict[IRI, List[str]] = defaultdict(list)
        for index, triple in enumerate(self.doc.triples):
            if triple.predicate.value != TYPE or index in self._consumed:
                continue
            if isinstance(triple.object, IRI) and triple.object in self._declared:
                subject = triple.subject
                if not isinstance(subject, IRI) or subject in ids:
                    continue
                if subject.value not in instances[triple.object]:
                    instances[triple.object].append(subject.value)
                self._referenced.add(triple.object)
                self._consumed.add(index)

        for prop in object_props:
            if prop not in placed and prop not in restricted:
                self._warn(f"Object property '{ids[prop]}' is declared but never placed between classes.")
        for cls in classes:
            if cls not in self._referenced:
                self._warn(f"Class '{ids[cls]}' is declared but never referenced.")

        etypes = [
            Etype(
                id=ids[cls],
                labels=tuple(self._labels(cls)),
                data_properties=tuple(data_properties.get(cls, ())),
                instances=tuple(instances.get(cls, ())),
            )
            for cls in self._class_order
        ]
        etypes.extend(Etype(id=anon_id, anonymous=True) for anon_id in anonymous.values())
        for prop in object_props + data_props:
            self._labels(prop)

        for index, triple in enumerate(self.doc.triples):
            if index not in self._consumed:
                self._unsupported(triple, f"predicate <{triple.predicate.value}>")

        skg = Skg(
            name=self.name or self._ontology_name(),
            etypes=tuple(etypes),
            object_properties=tuple(properties),
            is_a_edges=tuple(is_a),
        )
        report = validate(skg)
        if not report.ok:
            first = report.errors[0]
            raise LoweringError(f"Lowered schema is invalid: {first.message}")
        return skg

    # --- helpers -----------------------------------------------------------

    def _typed(self, type_iri: str) -> List[IRI]:
        found: List[IRI] = []
        for index, triple in enumerate(self.doc.triples):
            if triple.predicate.value == TYPE and isinstance(triple.object, IRI) and triple.object.value == type_iri:
                if not isinstance(triple.subject, IRI):
                    continue
                self._consumed.add(index)
                if triple.subject not in found:
                    found.append(triple.subject)
        return found

    def _consume_ontology_header(self) -> None:
        for index, triple in enumerate(self.doc.triples):
            if triple.predicate.value == TYPE and isinstance(triple.object, IRI) and triple.object.value == ONTOLOGY:
                for other, _ in self._by_subject[triple.subject]:
                    self._consumed.add(other)
            elif triple.predicate.value == COMMENT:
                self._consumed.add(index)

    def _ontology_name(self) -> str:
        for triple in self.doc.triples:
            if triple.predicate.value == TYPE and isinstance(triple.object, IRI) and triple.object.value == ONTOLOGY:
                if isinstance(triple.subject, IRI):
                    return triple.subject.local_name()
        return "imported"

    @staticmethod
    def _assign_ids(terms: List[IRI]) -> Dict[IRI, str]:
        by_local: Dict[str, Set[str]] = defaultdict(set)
        for term in terms:
            by_local[term.local_name()].add(term.value)
        return {
            term: term.local_name() if len(by_local[term.local_name()]) == 1 else term.value
            for term in terms
        }

    def _labels(self, term: IRI) -> List[str]:
        labels: List[str] = []
        for index, triple in self._by_subject.get(term, ()):
            if triple.predicate.value == LABEL and isinstance(triple.object, Literal):
                self._consumed.add(index)
                text = str(triple.object.value)
                if text not in labels:
                    labels.append(text)
        return labels or [term.local_name()]

    def _single(self, term: IRI, predicate: str) -> Optional[Term]:
        values = []
        for index, triple in self._by_subject.get(term, ()):
            if triple.predicate.value == predicate:
                self._consumed.add(index)
                values.append(triple.object)
        if len(values) > 1:
            message = f"Multiple <{predicate}> values for '{term.local_name()}'"
            if self.strict:
                raise LoweringError(message)
            self._warn(f"{message}; using the first.")
        return values[0] if values else None

    def _class_ref(self, term: Term, where: Union[IRI, Triple]) -> IRI:
        """Resolve a class reference, creating undeclared classes implicitly."""
        if not isinstance(term, IRI) or term.value == str(OWL.Thing):
            raise LoweringError(f"Expected a named class, found {self._describe(term)} ({self._describe(where)}).")
        self._referenced.add(term)
        if term not in self._declared:
            message = f"Class '{term.local_name()}' is used but never declared"
            if self.strict:
                raise LoweringError(message + ".")
            self._warn(message + "; created implicitly.")
            self._declared.add(term)
            self._class_order.append(term)
            if term not in self._ids:
                self._ids[term] = term.local_name() if term.local_name() not in self._ids.values() else term.value
        return term

    def _is_restriction(self, node: BlankNode) -> bool:
        return any(
            t.predicate.value == TYPE and isinstance(t.object, IRI) and t.object.value == RESTRICTION
            for _, t in self._by_subject.get(node, ())
        )

    def _restriction_parts(self, node: BlankNode) -> Tuple[IRI, IRI]:
        on_property: Optional[Term] = None
        filler: Optional[Term] = None
        cardinality = False
        for index, triple in self._by_subject[node]:
            predicate = triple.predicate.value
            if predicate not in RESTRICTION_PREDICATES:
                self._unsupported(triple, f"restriction predicate <{predicate}>")
                self._consumed.add(index)
                continue
            self._consumed.add(index)
            if predicate == ON_PROPERTY:
                on_property = triple.object
            elif predicate in VALUE_FILLERS:
                filler = triple.object
            elif predicate in CARDINALITIES:
                cardinality = True
        if not isinstance(on_property, IRI):
            raise LoweringError(f"Restriction _:{node.label} has no owl:onProperty.")
        if filler is None and cardinality:
            filler = self._single(on_property, RANGE)
        if not isinstance(filler, IRI):
            raise LoweringError(
                f"Restriction _:{node.label} on '{on_property.local_name()}' has no named class filler."
            )
        return on_property, self._class_ref(filler, node)

    @staticmethod
    def _fresh_id(base: str, anon_id: str, taken: Set[str]) -> str:
        candidate = base if base not in taken else f"{base}@{anon_id}"
        taken.add(candidate)
        return candidate

    def _unsupported(self, triple: Triple, what: str) -> None:
        message = f"Unsupported construct at line {triple.line}, column {triple.column}: {what}"
        if self.strict:
            raise LoweringError(message)
        self._warn(message + "; skipped.")

    def _warn(self, message: str) -> None:
        logger.warning(message)
        self.warnings.append(message)

    @staticmethod
    def _describe(item: object) -> str:
        if isinstance(item, IRI):
            return item.text or item.value
        if isinstance(item, BlankNode):
            return f"_:{item.label}"
        if isinstance(item, Literal):
            return repr(item.value)
        if isinstance(item, Triple):
            return f"line {item.line}"
        return str(item)


def lower_to_skg(doc: TurtleDocument, name: Optional[str] = None, strict: bool = False) -> Skg:
    """Lower a parsed document to an Skg.

    Classes become named etypes, object properties with a domain and a range
    become ObjectProperty edges, rdfs:subClassOf between named classes becomes
    an is-a edge, and rdfs:subClassOf an owl:Restriction becomes an anonymous
    etype, an is-a edge to it and an edge from it to the filler class.
    """
    return SkgLowerer(doc, name=name, strict=strict).lower()


def import_turtle(text: Union[str, bytes], name: Optional[str] = None, strict: bool = False) -> Skg:
    """Parse and lower a Turtle-subset document in one step."""
    return lower_to_skg(parse_turtle(text), name=name, strict=strict)
