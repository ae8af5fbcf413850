import pytest
import rdflib
from rdflib.compare import isomorphic
from rdflib.namespace import OWL, RDF, RDFS

from conftest import DATA
from skg_compat import TurtleSyntaxError, parse_turtle
from skg_compat.turtle import IRI, BlankNode, Literal

FIXTURES = sorted(DATA.glob("*.ttl"))


def _to_rdflib(term):
    if isinstance(term, IRI):
        return rdflib.URIRef(term.value)
    if isinstance(term, Literal):
        return rdflib.Literal(term.value, lang=term.language)
    return rdflib.BNode(term.label)


def _ground(triples):
    ground = set()
    for subject, predicate, obj in triples:
        if isinstance(subject, (BlankNode, rdflib.BNode)) or isinstance(obj, (BlankNode, rdflib.BNode)):
            continue
        ground.add((subject, predicate, obj))
    return ground


def test_minimal_document():
    doc = parse_turtle("@prefix ex: <http://e/> . ex:Student a ex:Class .")
    assert len(doc.triples) == 1
    triple = doc.triples[0]
    assert triple.subject == IRI("http://e/Student")
    assert triple.predicate.value == str(RDF.type)
    assert triple.object == IRI("http://e/Class")
    assert doc.prefixes == {"ex": "http://e/"}


def test_semicolon_shares_subject():
    text = """
    @prefix ex: <http://e/> .
    @prefix owl: <http://www.w3.org/2002/07/owl#> .
    @prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .
    ex:teaches a owl:ObjectProperty ; rdfs:domain ex:Teacher ; rdfs:range ex:Person .
    """
    doc = parse_turtle(text)
    assert len(doc.triples) == 3
    assert {t.subject for t in doc.triples} == {IRI("http://e/teaches")}
    assert [t.predicate.value for t in doc.triples] == [str(RDF.type), str(RDFS.domain), str(RDFS.range)]


def test_comma_repeats_predicate():
    doc = parse_turtle('@prefix ex: <http://e/> . ex:a ex:label "x", "y"@en, 3 .')
    assert [t.object for t in doc.triples] == [Literal("x"), Literal("y", "en"), Literal(3)]


def test_undeclared_prefix():
    with pytest.raises(TurtleSyntaxError, match="unknown") as info:
        parse_turtle("@prefix ex: <http://e/> .\nex:Student a unknown:Class .")
    assert (info.value.line, info.value.column) == (2, 14)


def test_unterminated_string_position():
    with pytest.raises(TurtleSyntaxError, match="Unterminated string") as info:
        parse_turtle('@prefix ex: <http://e/> .\nex:a ex:b "open .')
    assert info.value.line == 2
    assert info.value.column == 11


def test_unterminated_bracket_reports_opening():
    with pytest.raises(TurtleSyntaxError, match=r"Unterminated '\['") as info:
        parse_turtle("@prefix ex: <http://e/> .\nex:a ex:b [ ex:c ex:d .")
    assert (info.value.line, info.value.column) == (2, 11)


def test_unsupported_forms_are_rejected():
    with pytest.raises(TurtleSyntaxError, match="directive"):
        parse_turtle("@base <http://e/> .")
    with pytest.raises(TurtleSyntaxError, match="Datatyped"):
        parse_turtle('@prefix ex: <http://e/> . ex:a ex:b "1"^^ex:int .')


def test_missing_final_dot():
    with pytest.raises(TurtleSyntaxError, match="end of input"):
        parse_turtle("@prefix ex: <http://e/> . ex:a ex:b ex:c")


def test_bracket_blank_nodes_get_fresh_labels():
    text = """
    @prefix ex: <http://e/> .
    ex:a ex:p [ ex:q ex:b ] .
    ex:c ex:p [ ex:q ex:d ] .
    _:genid0 ex:q ex:e .
    """
    doc = parse_turtle(text)
    blanks = [t.object for t in doc.triples if t.predicate.value == "http://e/p"]
    assert len(set(blanks)) == 2
    assert BlankNode("genid0") not in blanks


def test_escapes_and_single_quotes():
    doc = parse_turtle("@prefix ex: <http://e/> . ex:a ex:b 'it\\'s' , \"tab\\there\" .")
    assert [t.object.value for t in doc.triples] == ["it's", "tab\there"]


def test_accepts_bytes():
    doc = parse_turtle("@prefix ex: <http://e/> . ex:a ex:b \"caf\u00e9\" .".encode("utf-8"))
    assert doc.triples[0].object == Literal("caf\u00e9")


def test_iri_local_name():
    assert IRI("http://example.org/zoo#Keeper").local_name() == "Keeper"
    assert IRI("http://example.org/zoo/Animal").local_name() == "Animal"


@pytest.mark.parametrize("path", FIXTURES, ids=lambda p: p.name)
def test_fixtures_agree_with_rdflib(path):
    text = path.read_text(encoding="utf-8")
    doc = parse_turtle(text)
    graph = rdflib.Graph()
    graph.parse(data=text, format="turtle")

    ours = [(_to_rdflib(t.subject), rdflib.URIRef(t.predicate.value), _to_rdflib(t.object)) for t in doc.triples]
    theirs = list(graph)
    assert _ground(ours) == _ground(theirs)
    distinct = {(t.subject, t.predicate, t.object) for t in doc.triples}
    assert len(distinct) == len(theirs)


@pytest.mark.parametrize("path", FIXTURES, ids=lambda p: p.name)
def test_fixtures_are_isomorphic_to_rdflib_graphs(path):
    text = path.read_text(encoding="utf-8")
    ours = rdflib.Graph()
    for triple in parse_turtle(text).triples:
        ours.add((_to_rdflib(triple.subject), rdflib.URIRef(triple.predicate.value), _to_rdflib(triple.object)))
    theirs = rdflib.Graph()
    theirs.parse(data=text, format="turtle")
    assert isomorphic(ours, theirs)


def test_fixture_restriction_shape():
    doc = parse_turtle((DATA / "restriction_some.ttl").read_text(encoding="utf-8"))
    restriction = next(t.object for t in doc.triples if t.predicate.value == str(RDFS.subClassOf))
    assert isinstance(restriction, BlankNode)
    about = {t.predicate.value: t.object for t in doc.triples if t.subject == restriction}
    assert about[str(RDF.type)] == IRI(str(OWL.Restriction))
    assert about[str(OWL.someValuesFrom)] == IRI("http://example.org/school#Person")
