from pathlib import Path

import pytest

from skg_compat import Etype, IsAEdge, ObjectProperty, Skg

DATA = Path(__file__).parent / "data"


def campus(name="campus"):
    return Skg(
        name=name,
        etypes=(
            Etype("student", ("student",)),
            Etype("teacher", ("teacher",)),
            Etype("course", ("course",)),
            Etype("scholarship", ("scholarship",)),
        ),
        object_properties=(
            ObjectProperty("take", "student", "course", ("take",)),
            ObjectProperty("receive", "student", "scholarship", ("receive",)),
            ObjectProperty("teach", "teacher", "student", ("teach",)),
            ObjectProperty("lecture", "teacher", "course", ("lecture",)),
        ),
    )


def skg(name, etype_ids, edges=(), is_a=(), anonymous=()):
    """Small Skg builder: edges are (id, domain, range) or (id, domain, range, parent)."""
    etypes = [Etype(e, (e,)) for e in etype_ids]
    etypes += [Etype(a, anonymous=True) for a in anonymous]
    props = []
    for edge in edges:
        prop_id, domain, range_ = edge[:3]
        parent = edge[3] if len(edge) > 3 else None
        props.append(ObjectProperty(prop_id, domain, range_, sub_property_of=parent))
    return Skg(
        name=name,
        etypes=tuple(etypes),
        object_properties=tuple(props),
        is_a_edges=tuple(IsAEdge(s, t) for s, t in is_a),
    )


@pytest.fixture
def campus_skg():
    return campus()


@pytest.fixture
def student_member():
    student = Etype(
        "student",
        ("student",),
        data_properties=("ID", "name", "gender", "birth date", "major", "grade"),
    )
    member = Etype(
        "member",
        ("member",),
        data_properties=("student ID", "name", "sex", "birth date", "major", "position"),
    )
    return student, member


@pytest.fixture
def data_dir():
    return DATA
