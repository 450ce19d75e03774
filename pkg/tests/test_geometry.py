import random

import pytest

from kcmlab.errors import ParameterError
from kcmlab.geometry import Arc, ArcSet, ccw_witness, dir_cmp, normalize_dir


def test_normalize():
    assert normalize_dir((4, -6)) == (2, -3)
    assert normalize_dir((0, 5)) == (0, 1)
    with pytest.raises(ParameterError):
        normalize_dir((0, 0))


def test_ccw_order():
    ring = [(1, 0), (2, 1), (1, 1), (1, 2), (0, 1), (-1, 2), (-1, 1), (-1, 0),
            (-1, -1), (0, -1), (1, -1)]
    for i, a in enumerate(ring):
        for j, b in enumerate(ring):
            expect = 0 if i == j else (-1 if i < j else 1)
            assert dir_cmp(a, b) == expect, (a, b)


def test_witness_lies_inside():
    pairs = [((1, 0), (0, 1)), ((0, 1), (1, 0)), ((1, 0), (-1, 0)), ((1, 1), (1, 1))]
    for a, b in pairs:
        w = ccw_witness(a, b)
        arc = Arc(a, b, False, False) if a != b else None
        if arc:
            assert arc.contains(w)
        else:
            assert w != a


def test_semicircle_membership():
    s = ArcSet.open_semicircle((1, 0))  # directions with negative x component
    assert s.contains((-1, 0)) and s.contains((-2, 1)) and s.contains((-1, -3))
    assert not s.contains((0, 1)) and not s.contains((0, -1)) and not s.contains((1, 1))


def test_boolean_algebra_pointwise():
    probes = [(x, y) for x in range(-3, 4) for y in range(-3, 4) if (x, y) != (0, 0)]
    rng = random.Random(4)
    dirs = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1),
            (2, 1), (-2, 3)]

    def random_set(depth=0):
        kind = rng.randrange(6 if depth < 2 else 4)
        if kind == 0:
            return ArcSet.point(rng.choice(dirs))
        if kind == 1:
            a, b = rng.sample(dirs, 2)
            return ArcSet.span(a, b, rng.random() < 0.5, rng.random() < 0.5)
        if kind == 2:
            return ArcSet.open_semicircle(rng.choice(dirs))
        if kind == 3:
            return random_set(depth + 1).complement()
        if kind == 4:
            return random_set(depth + 1).union(random_set(depth + 1))
        return random_set(depth + 1).intersection(random_set(depth + 1))

    for _ in range(300):
        a, b = random_set(), random_set()
        u, i, c, d = a.union(b), a.intersection(b), a.complement(), a.difference(b)
        for p in probes:
            ma, mb = a.contains(p), b.contains(p)
            assert u.contains(p) == (ma or mb)
            assert i.contains(p) == (ma and mb)
            assert c.contains(p) == (not ma)
            assert d.contains(p) == (ma and not mb)


def test_involutions_and_identities():
    s = ArcSet.span((1, 0), (0, 1)).union(ArcSet.point((-1, -1)))
    assert s.complement().complement() == s
    assert s.antipodal().antipodal() == s
    assert s.rotate90().rotate90().rotate90().rotate90() == s
    assert s.union(s.complement()).full
    assert s.intersection(s.complement()).is_empty()


def test_feature_queries():
    pts = ArcSet.point((1, 0)).union(ArcSet.point((-1, 0)))
    assert pts.has_opposite_pair() and not pts.has_two_non_opposite()
    assert not pts.has_interior()
    tri = pts.union(ArcSet.point((0, 1)))
    assert tri.has_two_non_opposite()
    arc = ArcSet.span((1, 0), (0, 1))
    assert arc.has_interior() and arc.has_two_non_opposite()
    assert not arc.has_opposite_pair()
    big = ArcSet.span((0, 1), (0, -1))  # upper half circle, closed: contains both poles
    assert big.has_opposite_pair()


def test_punctured_circle():
    p = ArcSet.point((2, 3)).complement()
    assert not p.contains((2, 3))
    assert p.contains((3, 2)) and p.contains((-2, -3))
    assert p.complement() == ArcSet.point((2, 3))
