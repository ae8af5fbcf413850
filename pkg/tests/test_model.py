import json

import pytest

from conftest import campus, skg
from skg_compat import (
    DuplicateIdError,
    Etype,
    IsAEdge,
    ObjectProperty,
    Skg,
    SkgFormatError,
    UnresolvedReferenceError,
    load_skg,
    save_skg,
    validate,
)


def _etype(etype_id, labels=None):
    return {
        "id": etype_id,
        "labels": [etype_id] if labels is None else labels,
        "anonymous": False,
        "data_properties": [],
        "instances": [],
    }


def _prop(prop_id, domain, range_):
    return {
        "id": prop_id,
        "labels": [],
        "domain": domain,
        "range": range_,
        "sub_property_of": None,
        "synthetic": False,
    }


def _document(**overrides):
    document = {
        "name": "tiny",
        "etypes": [_etype("student")],
        "object_properties": [],
        "is_a": [],
    }
    document.update(overrides)
    return json.dumps(document)


def test_load_minimal_document():
    loaded = load_skg(_document())
    assert loaded.name == "tiny"
    assert len(loaded.etypes) == 1
    assert loaded.object_properties == ()
    assert loaded.etype("student").labels == ("student",)


def test_load_campus_document(campus_skg):
    loaded = load_skg(save_skg(campus_skg))
    assert len(loaded.object_properties) == 4
    assert [e.id for e in loaded.etypes] == ["student", "teacher", "course", "scholarship"]
    assert loaded == campus_skg


def test_load_reports_unresolved_reference():
    text = _document(object_properties=[_prop("haunts", "student", "ghost")])
    with pytest.raises(UnresolvedReferenceError, match="ghost") as info:
        load_skg(text)
    assert info.value.ref == "ghost"


def test_load_reports_duplicate_id():
    text = _document(etypes=[_etype("student", ["a"]), _etype("student", ["b"])])
    with pytest.raises(DuplicateIdError, match="student"):
        load_skg(text)


def test_load_reports_syntax_error_position():
    with pytest.raises(SkgFormatError) as info:
        load_skg('{"name": "x",\n  "etypes": [}')
    assert info.value.line == 2


def test_unknown_keys_strict_and_lenient(caplog):
    text = _document(colour="blue")
    with pytest.raises(SkgFormatError, match="colour"):
        load_skg(text)
    loaded = load_skg(text, strict=False)
    assert loaded.name == "tiny"
    assert "colour" in caplog.text


def test_load_preserves_list_order():
    text = _document(
        etypes=[_etype(i) for i in ("c", "a", "b")],
        object_properties=[_prop("z", "a", "b"), _prop("y", "c", "a")],
    )
    loaded = load_skg(text)
    assert loaded.named_ids() == ("c", "a", "b")
    assert [p.id for p in loaded.object_properties] == ["z", "y"]


def test_save_round_trip_with_every_field():
    original = Skg(
        name="full",
        etypes=(
            Etype("person", ("person", "human"), ("name",), ("http://e/alice",)),
            Etype("student", ("student",)),
            Etype("_:r", anonymous=True),
        ),
        object_properties=(
            ObjectProperty("knows", "person", "person", ("knows",)),
            ObjectProperty("likes", "person", "person", sub_property_of="knows", synthetic=True),
            ObjectProperty("attends", "_:r", "person"),
        ),
        is_a_edges=(IsAEdge("student", "person"), IsAEdge("student", "_:r")),
    )
    assert load_skg(save_skg(original)) == original
    assert save_skg(load_skg(save_skg(original))) == save_skg(original)


def test_validate_campus_is_clean(campus_skg):
    report = validate(campus_skg)
    assert report.ok
    assert report.errors == ()


def test_validate_is_a_self_loop():
    report = validate(skg("loop", ["A"], is_a=[("A", "A")]))
    assert "is-a-cycle" in report.codes()


def test_validate_longer_is_a_cycle():
    report = validate(skg("loop", ["A", "B", "C"], is_a=[("A", "B"), ("B", "C"), ("C", "A")]))
    issue = next(i for i in report.errors if i.code == "is-a-cycle")
    assert issue.location == "A,B,C"


def test_validate_duplicate_etype_id():
    broken = Skg(name="dup", etypes=(Etype("student", ("a",)), Etype("student", ("b",))))
    report = validate(broken)
    assert "duplicate-etype-id" in report.codes()


def test_validate_sub_property_cycle():
    broken = skg("sp", ["A"], edges=[("p", "A", "A", "q"), ("q", "A", "A", "p")])
    assert "sub-property-cycle" in validate(broken).codes()


def test_validate_missing_label_and_duplicate_instance():
    broken = Skg(name="x", etypes=(Etype("a"), Etype("b", ("b",), instances=("i", "i"))))
    codes = validate(broken).codes()
    assert "missing-label" in codes
    assert "duplicate-instance" in codes


def test_validate_anonymous_rules():
    broken = skg("anon", ["A"], edges=[("p", "A", "_:r")], is_a=[("_:r", "A")], anonymous=["_:r"])
    report = validate(broken)
    assert "anonymous-subclass" in report.codes()
    assert "anonymous-range" in [w.code for w in report.warnings]


def test_validate_unresolved_locations():
    broken = Skg(
        name="x",
        etypes=(Etype("a", ("a",)),),
        object_properties=(ObjectProperty("p", "a", "ghost"),),
        is_a_edges=(IsAEdge("a", "phantom"),),
    )
    report = validate(broken)
    locations = [i.location for i in report.errors if i.code == "unresolved-reference"]
    assert locations == ["is_a[0].super", "p.range"]


def test_validate_orders_by_code_then_location():
    broken = Skg(
        name="x",
        etypes=(Etype("b"), Etype("a")),
        is_a_edges=(IsAEdge("a", "a"),),
    )
    report = validate(broken)
    keys = [(i.code, i.location) for i in report.errors]
    assert keys == sorted(keys)


def test_skg_helpers(campus_skg):
    assert campus_skg.has_etype("course")
    assert not campus_skg.has_etype("ghost")
    assert [p.id for p in campus_skg.incident_properties("student")] == ["take", "receive", "teach"]
    assert campus_skg.is_flat()
    smaller = campus_skg.with_parts(object_properties=campus_skg.object_properties[:1])
    assert len(smaller.object_properties) == 1
    assert len(campus().object_properties) == 4


def test_lenient_mode_defaults_optional_keys():
    text = json.dumps({"name": "short", "etypes": [{"id": "a", "labels": ["a"]}]})
    with pytest.raises(SkgFormatError, match="Missing key"):
        load_skg(text)
    loaded = load_skg(text, strict=False)
    assert loaded.etype("a") == Etype("a", ("a",))
    assert loaded.is_a_edges == ()


def test_save_empty_named_skg():
    document = json.loads(save_skg(Skg(name="empty")))
    assert document == {"name": "empty", "etypes": [], "object_properties": [], "is_a": []}
