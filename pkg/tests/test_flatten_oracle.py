"""flatten_is_a against a brute-force closure over small schema shapes."""

import itertools

import numpy as np
import pytest

from skg_compat import Etype, IsAEdge, ObjectProperty, Skg, flatten_is_a

NAMED = ("A", "B", "C", "D")
ANON = "_:r"

HIERARCHIES = (
    (),
    (("B", "A"),),
    (("B", "A"), ("C", "A")),
    (("B", "A"), ("C", "B")),
    (("B", "A"), ("D", "C")),
    (("C", "A"), ("C", "B")),
    (("B", "A"), ("C", "A"), ("D", "B")),
    (("B", "A"), ("C", "B"), ("D", "B")),
    (("C", "A"), ("D", "A"), ("C", "B")),
)


def _reachable(start, edges):
    seen, stack = set(), [start]
    while stack:
        for nxt in edges.get(stack.pop(), ()):
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return seen


def brute_force(skg):
    """Return {(domain, range, origin)} produced by the three flattening rules."""
    anonymous = {e.id for e in skg.etypes if e.anonymous}
    subs = {}
    for edge in skg.is_a_edges:
        subs.setdefault(edge.super, [])
        if edge.sub not in subs[edge.super]:
            subs[edge.super].append(edge.sub)
    props = [(p.domain, p.range, p.id) for p in skg.object_properties]
    parent_of = {p.id: [p.sub_property_of] for p in skg.object_properties if p.sub_property_of}

    synthesized = {}

    def targets(node):
        own = {(r, pid) for d, r, pid in props if d == node and r not in anonymous}
        return own | {(r, pid) for r, pid in synth(node)}

    def synth(node):
        if node in synthesized:
            return synthesized[node]
        result = []
        if node not in anonymous and subs.get(node):
            per_sub = [targets(s) for s in subs[node]]
            common = set.intersection(*({r for r, _ in t} for t in per_sub))
            existing = {r for d, r, _ in props if d == node}
            for target in sorted(common - existing):
                pid = f"{node}->{target}"
                for t in per_sub:
                    for r, source in t:
                        if r == target:
                            parent_of.setdefault(source, []).append(pid)
                result.append((target, pid))
        synthesized[node] = result
        return result

    for node in sorted({e.id for e in skg.etypes}):
        synth(node)
    for node, made in synthesized.items():
        props.extend((node, r, pid) for r, pid in made)

    def supers_of(pid):
        return _reachable(pid, parent_of)

    def subclasses_or_self(node):
        return {node} | _reachable(node, subs)

    own = {node: [t for t in props if node in t[:2]] for node in {e.id for e in skg.etypes}}

    def refined(triple, parent, node):
        domain, range_, origin = triple
        if domain == parent and range_ != parent:
            ok = subclasses_or_self(range_)
            held = [t for t in own[node] if t[0] == node and t[1] in ok]
        elif range_ == parent and domain != parent:
            ok = subclasses_or_self(domain)
            held = [t for t in own[node] if t[1] == node and t[0] in ok]
        else:
            return False
        return any(origin in supers_of(t[2]) for t in held)

    closure = set((d, r, pid) for d, r, pid in props)
    changed = True
    while changed:
        changed = False
        for triple in list(closure):
            domain, range_, origin = triple
            for parent in {domain, range_}:
                for node in subs.get(parent, ()):
                    copy = (
                        node if domain == parent else domain,
                        node if range_ == parent else range_,
                        origin,
                    )
                    if copy in closure or refined(triple, parent, node):
                        continue
                    closure.add(copy)
                    changed = True
    return {t for t in closure if t[0] not in anonymous and t[1] not in anonymous}


def observed(flat):
    result = []
    for prop in flat.base.object_properties:
        provenance = flat.provenance_of(prop.id)
        result.append((prop.domain, prop.range, provenance.origin if provenance else prop.id))
    return result


def _check(skg):
    flat = flatten_is_a(skg)
    got = observed(flat)
    assert len(got) == len(set(got)), skg
    assert set(got) == brute_force(skg), skg
    assert all(not e.anonymous for e in flat.base.etypes)
    assert flat.base.is_a_edges == ()


def _schema(hierarchy, edges, anonymous=None):
    etypes = [Etype(e, (e,)) for e in NAMED]
    is_a = [IsAEdge(s, t) for s, t in hierarchy]
    if anonymous is not None:
        etypes.append(Etype(ANON, anonymous=True))
        is_a.append(IsAEdge(anonymous, ANON))
    props = [
        ObjectProperty(f"p{i}", d, r, sub_property_of=parent) for i, (d, r, parent) in enumerate(edges)
    ]
    return Skg("shape", tuple(etypes), tuple(props), tuple(is_a))


PAIRS = [(d, r) for d in NAMED for r in NAMED]


@pytest.mark.parametrize("hierarchy", HIERARCHIES, ids=lambda h: "-".join(s + t for s, t in h) or "flat")
def test_two_property_shapes(hierarchy):
    for (d0, r0), (d1, r1) in itertools.product(PAIRS, repeat=2):
        for nested in (False, True):
            edges = [(d0, r0, None), (d1, r1, "p0" if nested else None)]
            _check(_schema(hierarchy, edges))


@pytest.mark.parametrize("hierarchy", HIERARCHIES[1:], ids=lambda h: "-".join(s + t for s, t in h))
def test_restriction_shapes(hierarchy):
    for restricted in NAMED:
        for filler in NAMED:
            for d, r in PAIRS:
                edges = [(ANON, filler, None), (d, r, None)]
                _check(_schema(hierarchy, edges, anonymous=restricted))
                edges = [(d, r, None), (ANON, filler, "p0")]
                _check(_schema(hierarchy, edges, anonymous=restricted))


def test_random_four_property_shapes():
    rng = np.random.default_rng(5)
    ends = NAMED + (ANON,)
    for _ in range(1500):
        hierarchy = HIERARCHIES[int(rng.integers(len(HIERARCHIES)))]
        anonymous = NAMED[int(rng.integers(4))] if rng.random() < 0.5 else None
        edges = []
        for i in range(int(rng.integers(1, 5))):
            pool = ends if anonymous is not None else NAMED
            d = pool[int(rng.integers(len(pool)))]
            r = NAMED[int(rng.integers(4))]
            parent = f"p{int(rng.integers(i))}" if i and rng.random() < 0.4 else None
            edges.append((d, r, parent))
        _check(_schema(hierarchy, edges, anonymous))
