import json
import time
from fractions import Fraction

import numpy as np
import pytest

from conftest import campus, skg
from skg_compat import (
    ConfigurationError,
    EquivalenceMapping,
    Method,
    SimilarityConfig,
    SyntheticSpec,
    ablate,
    ablation_to_csv,
    build_mapping,
    compare,
    compute_weights,
    coverage,
    generate_synthetic,
    import_turtle,
    trend_summary,
)
from skg_compat.harness import DECREASING, FLAT, INCREASING, MIXED, _verdict


def _paired(x, y, shared):
    groups = [[(x.name, e), (y.name, e)] for e in shared]
    groups += [[(x.name, e)] for e in x.named_ids() if e not in shared]
    groups += [[(y.name, e)] for e in y.named_ids() if e not in shared]
    return EquivalenceMapping.from_groups(groups, reference=x.name)


@pytest.fixture
def campus_ablation():
    x, y = campus("x"), campus("y")
    return ablate(x, y, _paired(x, y, list(x.named_ids())))


def test_baseline_rows_come_first(campus_ablation):
    result = campus_ablation
    assert [row.degree for row in result.rows[:3]] == [0, 0, 0]
    assert result.baseline(2).coverage == 1
    assert result.baseline(2).flexibility == 0
    assert result.methods == (Method.UNWEIGHTED, Method.WEIGHTED, Method.PREPROCESSED)
    assert result.removed_etypes == ("student", "teacher", "course", "scholarship")
    assert len(result.rows) == 3 + 4 * 3


def test_campus_coverage_drops(campus_ablation):
    drops = {row.etype_id: row.coverage_drop for row in campus_ablation.removals(2)}
    assert drops == {
        "student": Fraction(3, 8),
        "teacher": Fraction(1, 4),
        "course": Fraction(1, 4),
        "scholarship": Fraction(1, 8),
    }
    assert {row.coverage_drop for row in campus_ablation.removals(1)} == {Fraction(1, 4)}
    assert set(campus_ablation.degrees.values()) == {6}


def test_campus_degree_cells(campus_ablation):
    assert campus_ablation.degree_averages[(6, Method.WEIGHTED)] == (Fraction(3, 4), Fraction(0))
    assert campus_ablation.mean_change(2) == {6: (Fraction(1, 4), Fraction(0))}
    assert set(campus_ablation.degree_averages) == {(6, m) for m in Method}


def test_removal_rows_carry_weights(campus_ablation):
    row = next(r for r in campus_ablation.removals(2) if r.etype_id == "student")
    assert row.weight_in_y == Fraction(3, 8)
    assert row.weight_in_x == Fraction(3, 8)
    assert row.degree == 6
    unweighted = next(r for r in campus_ablation.removals(1) if r.etype_id == "student")
    assert unweighted.weight_in_y == Fraction(1, 4)


def test_ablation_csv(campus_ablation):
    lines = ablation_to_csv([campus_ablation], header="config: {}").splitlines()
    assert lines[:5] == [
        "# config: {}",
        "degree,etype_id,method,coverage,flexibility,delta_coverage,delta_flexibility",
        "0,,1,1,0,0,0",
        "0,,2,1,0,0,0",
        "0,,3,1,0,0,0",
    ]
    assert lines[5:7] == [
        "6,student,1,0.75,0,-0.25,0",
        "6,student,2,0.625,0,-0.375,0",
    ]


def test_single_etype_is_skipped(caplog):
    x, y = skg("x", ["a"]), skg("y", ["a"])
    result = ablate(x, y, _paired(x, y, ["a"]), methods=(2,))
    assert result.skipped == ("a",)
    assert result.removals() == []
    assert "nothing to ablate" in caplog.text


def test_ablate_rejects_bad_settings(campus_skg):
    mirror = campus("mirror")
    mapping = _paired(campus_skg, mirror, list(campus_skg.named_ids()))
    with pytest.raises(ConfigurationError, match="At least one"):
        ablate(campus_skg, mirror, mapping, methods=[])
    with pytest.raises(ConfigurationError, match="workers"):
        ablate(campus_skg, mirror, mapping, workers=0)
    with pytest.raises(ConfigurationError, match="against itself"):
        ablate(campus_skg, campus(), EquivalenceMapping.identity(campus_skg))


def test_workers_do_not_change_results(campus_skg):
    mirror = campus("mirror")
    mapping = _paired(campus_skg, mirror, ["student", "course"])
    serial = ablate(campus_skg, mirror, mapping)
    parallel = ablate(campus_skg, mirror, mapping, workers=4)
    assert serial == parallel


def test_removal_identity_on_random_pairs():
    rng = np.random.default_rng(17)
    for seed in range(100):
        spec = SyntheticSpec(
            seed=seed,
            n_etypes=int(rng.integers(2, 10)),
            edge_density=float(rng.uniform(0.1, 0.5)),
            is_a_depth=int(rng.integers(0, 3)),
            overlap_fraction=float(rng.uniform(0.2, 1.0)),
        )
        pair = generate_synthetic(spec)
        result = ablate(pair.base, pair.partner, pair.mapping)
        y_size = len(pair.partner.named_ids())
        for row in result.removals():
            shared = pair.mapping.group_of((pair.base.name, row.etype_id))
            in_y = [e for s, e in shared if s == pair.partner.name]
            if row.method is Method.UNWEIGHTED:
                assert row.coverage_drop == Fraction(len(in_y), y_size)
            else:
                table = compute_weights(pair.partner, preprocess=row.method.preprocess)
                assert row.coverage_drop == sum((table.weight(e) for e in in_y), Fraction(0))
            assert row.coverage_drop == row.weight_in_y


def _hub_pair():
    periphery = [f"P{i:02d}" for i in range(30)]
    extras = [f"E{i:02d}" for i in range(20)]
    hub_edges = [(f"h{i:02d}", "H", p) for i, p in enumerate(periphery)]
    ring = [(f"r{i:02d}", e, extras[(i + 1) % 20]) for i, e in enumerate(extras)]
    x = skg("cq", ["H"] + periphery, edges=hub_edges)
    y = skg("skg", ["H"] + periphery + extras, edges=hub_edges + ring)
    return x, y, _paired(x, y, ["H"] + periphery)


def test_hub_family_coverage_trend():
    x, y, mapping = _hub_pair()
    assert compute_weights(y).weight("H") == Fraction(3, 10)
    result = ablate(x, y, mapping, methods=(1, 2))
    assert result.degrees["H"] == 6
    assert result.degrees["P00"] == 1
    assert result.mean_change(2) == {1: (Fraction(1, 100), Fraction(0)), 6: (Fraction(3, 10), Fraction(0))}

    report = trend_summary([result])
    weighted, unweighted = report.trend(2), report.trend(1)
    assert weighted.coverage_verdict == INCREASING
    assert unweighted.coverage_verdict == FLAT
    assert unweighted.coverage_drop_by_degree == {1: Fraction(1, 51), 6: Fraction(1, 51)}
    assert unweighted.coverage_correlation is None
    assert weighted.coverage_correlation == pytest.approx(1.0)
    assert report.crossover


def _hierarchy_pair():
    x = skg(
        "cq",
        ["G", "S1", "S2", "Z"],
        edges=[("g", "G", "Z"), ("h", "S1", "S2")],
        is_a=[("S1", "G"), ("S2", "G")],
    )
    y = skg("skg", ["S1", "S2", "Z"])
    return x, y, _paired(x, y, ["S1", "S2", "Z"])


def test_preprocessed_flexibility_stays_below_weighted():
    x, y, mapping = _hierarchy_pair()
    result = ablate(x, y, mapping, methods=(2, 3))
    assert result.baseline(2).flexibility == Fraction(1, 4)
    assert result.baseline(3).flexibility == Fraction(1, 8)
    top = max(result.degrees.values())
    assert top == 6
    assert result.degree_averages[(top, Method.WEIGHTED)][1] == Fraction(1, 4)
    assert result.degree_averages[(top, Method.PREPROCESSED)][1] == Fraction(1, 8)


def test_trend_summary_on_campus(campus_ablation):
    report = trend_summary([campus_ablation])
    assert report.trend(2).coverage_correlation == pytest.approx(1.0)
    assert report.trend(1).coverage_correlation is None
    assert report.trend(2).flexibility_correlation is None
    assert report.trend(2).coverage_verdict == FLAT
    assert not report.crossover
    assert report.runs == (("x", "y"),)

    document = json.loads(report.to_json(config={"workers": 1}))
    assert document["config"] == {"workers": 1}
    assert document["methods"][0]["coverage_correlation"] == FLAT
    assert document["methods"][1]["coverage_drop_by_degree"] == {"6": "1/4"}

    text = report.to_text(header="config: {}")
    assert text.startswith("# config: {}\nrun: x -> y\nmethod 1:\n")
    assert "  degree 6: mean coverage drop 0.25, mean flexibility change 0" in text
    assert text.endswith("crossover: no\n")


def test_trend_summary_needs_results():
    with pytest.raises(ConfigurationError):
        trend_summary([])


@pytest.mark.parametrize(
    "values, verdict",
    [
        ([Fraction(1)], FLAT),
        ([Fraction(1), Fraction(1)], FLAT),
        ([Fraction(1), Fraction(2), Fraction(3)], INCREASING),
        ([Fraction(3), Fraction(1)], DECREASING),
        ([Fraction(1), Fraction(3), Fraction(2)], MIXED),
    ],
)
def test_verdict(values, verdict):
    assert _verdict(values) == verdict


def test_generation_is_deterministic():
    spec = SyntheticSpec(seed=4, n_etypes=12, edge_density=0.3, is_a_depth=2, overlap_fraction=0.6)
    first, second = generate_synthetic(spec), generate_synthetic(spec)
    assert first == second
    assert first.base.name == "synthetic-4"
    assert first.partner.name == "synthetic-4-partner"
    assert len(first.base.object_properties) == round(0.3 * 12 * 11)
    assert generate_synthetic(SyntheticSpec(seed=5)).base != first.base


def test_generated_overlap():
    pair = generate_synthetic(SyntheticSpec(seed=1, n_etypes=10, overlap_fraction=0.6))
    shared = set(pair.base.named_ids()) & set(pair.partner.named_ids())
    assert len(shared) == 6
    for etype_id in shared:
        label = pair.partner.etype(etype_id).labels[0]
        assert label != etype_id and label.lower() == etype_id
        assert pair.mapping.equivalent((pair.base.name, etype_id), (pair.partner.name, etype_id))

    full = generate_synthetic(SyntheticSpec(seed=1, n_etypes=10, overlap_fraction=1.0))
    assert coverage(full.base, full.partner, full.mapping, 1) == 1
    none = generate_synthetic(SyntheticSpec(seed=1, n_etypes=10, overlap_fraction=0.0))
    assert coverage(none.base, none.partner, none.mapping, 2) == 0


def test_matching_recovers_ground_truth():
    pair = generate_synthetic(SyntheticSpec(seed=8, n_etypes=25, edge_density=0.1, overlap_fraction=0.6))
    assert build_mapping([pair.base, pair.partner], pair.base.name, SimilarityConfig()) == pair.mapping


def test_is_a_levels_follow_depth():
    pair = generate_synthetic(SyntheticSpec(seed=3, n_etypes=20, is_a_depth=3))
    assert pair.base.is_a_edges
    assert generate_synthetic(SyntheticSpec(seed=3, n_etypes=20)).base.is_a_edges == ()


@pytest.mark.parametrize(
    "kwargs",
    [{"n_etypes": 0}, {"is_a_depth": 4}, {"edge_density": 1.5}, {"overlap_fraction": -0.1}],
)
def test_invalid_synthetic_spec(kwargs):
    with pytest.raises(ConfigurationError):
        generate_synthetic(SyntheticSpec(**kwargs))


def _as_turtle(schema):
    lines = [
        "@prefix owl: <http://www.w3.org/2002/07/owl#> .",
        "@prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .",
        "@prefix ex: <http://example.org/synthetic#> .",
    ]
    for etype in schema.etypes:
        lines.append(f'ex:{etype.id} a owl:Class ; rdfs:label "{etype.labels[0]}" .')
    for prop in schema.object_properties:
        lines.append(
            f'ex:{prop.id} a owl:ObjectProperty ; rdfs:label "{prop.labels[0]}" ; '
            f"rdfs:domain ex:{prop.domain} ; rdfs:range ex:{prop.range} ."
        )
    return "\n".join(lines) + "\n"


def test_pipeline_at_scale():
    spec = SyntheticSpec(seed=10, n_etypes=1000, edge_density=5000 / (1000 * 999), overlap_fraction=0.6)
    pair = generate_synthetic(spec)
    assert len(pair.base.object_properties) == 5000
    sources = {schema.name: _as_turtle(schema) for schema in (pair.base, pair.partner)}

    started = time.perf_counter()
    base, partner = (import_turtle(text, name=name) for name, text in sources.items())
    mapping = build_mapping([base, partner], base.name)
    tables = [compute_weights(schema, preprocess=p) for schema in (base, partner) for p in (True, False)]
    reports = compare(base, partner, mapping, directions="both")
    result = ablate(base, partner, mapping, workers=4)
    elapsed = time.perf_counter() - started

    assert (base, partner) == (pair.base, pair.partner)
    assert mapping == pair.mapping
    assert all(table.total() == 1 for table in tables)
    assert len(reports) == 6
    assert all(0 <= r.coverage <= 1 for r in reports)
    assert len(result.removals()) == 3 * 1000
    assert elapsed < 30, f"pipeline took {elapsed:.1f} s"
