import pytest

from kcmlab.classify import (
    CRITICAL,
    SUBCRITICAL_NONTRIVIAL,
    SUBCRITICAL_TRIVIAL,
    SUPERCRITICAL_ROOTED,
    SUPERCRITICAL_UNROOTED,
    Difficulty,
    classify_1d,
    difficulty_bounded,
    refine,
    rough_class,
    stable_set,
)
from kcmlab.errors import ParameterError
from kcmlab.family import UpdateFamily, catalog
from kcmlab.geometry import Arc, ArcSet, rot90


def test_stable_sets_of_named_families():
    east = stable_set(catalog("east2d"))
    assert east == ArcSet.span((1, 0), (0, 1))  # closed first-quadrant arc
    assert stable_set(catalog("fa1f-2d")).is_empty()
    fa2f = stable_set(catalog("fa2f-2d"))
    assert sorted(fa2f.isolated_points()) == [(-1, 0), (0, -1), (0, 1), (1, 0)]
    assert not fa2f.positive_arcs()
    duarte = stable_set(catalog("duarte"))
    assert duarte.isolated_points() == [(1, 0)]
    arcs = duarte.positive_arcs()
    assert len(arcs) == 1 and arcs[0] == Arc((0, 1), (0, -1), True, True)
    # NE: closed arc from south through east and north to west (3/4 turn)
    ne = stable_set(catalog("north-east"))
    assert ne.positive_arcs()[0] == Arc((0, -1), (-1, 0), True, True)
    assert ne.contains((1, 0)) and ne.contains((0, 1)) and not ne.contains((-1, -1))
    spiral = stable_set(catalog("spiral"))
    assert len(spiral.positive_arcs()) == 4 and not spiral.isolated_points()


def test_stable_set_rotation_invariance():
    for name in ("east2d", "fa2f-2d", "duarte", "north-east", "spiral", "log1"):
        fam = catalog(name)
        rotated = UpdateFamily(2, [{rot90(u) for u in rule} for rule in fam.rules])
        assert stable_set(rotated) == stable_set(fam).rotate90(), name


def test_stable_set_order_independent():
    fam = catalog("duarte")
    shuffled = UpdateFamily(2, list(reversed([set(r) for r in fam.rules])))
    assert stable_set(shuffled) == stable_set(fam)


def test_rough_class_edges():
    assert rough_class(ArcSet.empty()) == SUPERCRITICAL_UNROOTED
    assert rough_class(ArcSet.full_circle()) == SUBCRITICAL_TRIVIAL


def test_rough_classes_of_catalog():
    expected = {
        "east2d": SUPERCRITICAL_ROOTED,
        "fa1f-2d": SUPERCRITICAL_UNROOTED,
        "fa2f-2d": CRITICAL,
        "duarte": CRITICAL,
        "north-east": SUBCRITICAL_NONTRIVIAL,
        "spiral": SUBCRITICAL_NONTRIVIAL,
    }
    for name, want in expected.items():
        assert rough_class(stable_set(catalog(name))) == want, name


def test_difficulties():
    fa2f = catalog("fa2f-2d")
    assert difficulty_bounded(fa2f, (1, 0)) == Difficulty.exact(1)
    duarte = catalog("duarte")
    assert difficulty_bounded(duarte, (1, 0)) == Difficulty.exact(1)
    assert difficulty_bounded(duarte, (-1, 0)) == Difficulty.infinite()
    assert difficulty_bounded(duarte, (0, 1)) == Difficulty.infinite()
    log1 = catalog("log1")
    assert difficulty_bounded(log1, (0, 1)) == Difficulty.exact(2)
    # unstable direction has difficulty zero
    assert difficulty_bounded(fa2f, (1, 1)) == Difficulty.exact(0)
    with pytest.raises(ParameterError):
        difficulty_bounded(fa2f, (1, 0), window=2)


def test_difficulty_budget_lower_bound():
    log1 = catalog("log1")
    d = difficulty_bounded(log1, (0, 1), budget=1)
    assert d == Difficulty.at_least(2)
    rep = refine(log1, budget=1)
    assert rep.inconclusive


def test_difficulty_antitone_under_family_growth():
    # log3 <= log1 as constraints, so log1 difficulties are no larger
    log1, log3 = catalog("log1"), catalog("log3")
    for u in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        d1 = difficulty_bounded(log1, u)
        d3 = difficulty_bounded(log3, u)
        assert d1.value <= d3.value, u


def test_refined_reports_golden():
    fa2f = refine(catalog("fa2f-2d"))
    assert fa2f.rough == CRITICAL and fa2f.alpha == Difficulty.exact(1)
    assert fa2f.refined == {
        "balance": "balanced", "root": "unrooted",
        "stable_directions": "finite", "directionality": "isotropic",
    }
    assert fa2f.exponents == (1, 0, 0)

    duarte = refine(catalog("duarte"))
    assert duarte.rough == CRITICAL and duarte.alpha == Difficulty.exact(1)
    assert duarte.refined == {
        "balance": "unbalanced", "root": "rooted",
        "stable_directions": "infinite", "directionality": None,
    }
    assert duarte.exponents == (2, 4, 0)

    log1 = refine(catalog("log1"))
    assert log1.alpha == Difficulty.exact(1)
    assert log1.difficulties == {
        (0, 1): Difficulty.exact(2), (1, 0): Difficulty.exact(2),
        (-1, 0): Difficulty.exact(1), (0, -1): Difficulty.exact(1),
    }
    assert log1.refined["balance"] == "balanced" and log1.refined["root"] == "rooted"
    assert log1.exponents == (1, 1, 0)

    log3 = refine(catalog("log3"))
    assert log3.alpha == Difficulty.exact(1)
    assert log3.difficulties[(0, -1)] == Difficulty.exact(2)
    assert log3.refined["balance"] == "unbalanced" and log3.refined["root"] == "rooted"
    assert log3.exponents == (1, 3, 0)

    mod = refine(catalog("modified-fa2f"))
    assert mod.exponents == (1, 0, 0) and mod.refined["directionality"] == "isotropic"


def test_classify_1d():
    assert classify_1d(catalog("fa1f-1d")) == "two-unstable"
    assert classify_1d(catalog("east1d")) == "one-unstable"
    assert classify_1d(catalog("fa2f-1d")) == "zero-unstable"
    with pytest.raises(ParameterError):
        classify_1d(catalog("east2d"))


def test_difficulty_search_size_guard(monkeypatch):
    import kcmlab.classify as mod
    from kcmlab.errors import SizeError

    monkeypatch.setattr(mod, "_SUBSET_CAP", 2)
    with pytest.raises(SizeError):
        difficulty_bounded(catalog("log1"), (0, 1), budget=2)


def test_stable_set_matches_bruteforce_membership():
    # oracle: u is stable iff no rule lies strictly inside the half-plane
    # {x : <x, u> < 0}; checked pointwise on a probe grid of directions
    import random

    rng = random.Random(20)
    probes = [
        (x, y)
        for x in range(-4, 5)
        for y in range(-4, 5)
        if (x, y) != (0, 0)
    ]
    for _ in range(150):
        dim_offsets = [(dx, dy) for dx in range(-2, 3) for dy in range(-2, 3)
                       if (dx, dy) != (0, 0)]
        rules = []
        for _ in range(rng.randrange(1, 4)):
            size = rng.randrange(1, 4)
            rules.append(set(rng.sample(dim_offsets, size)))
        fam = UpdateFamily(2, rules)
        st = stable_set(fam)
        for u in probes:
            unstable = any(
                all(v[0] * u[0] + v[1] * u[1] < 0 for v in rule)
                for rule in fam.rules
            )
            assert st.contains(u) == (not unstable), (fam.rules, u)


def test_diagonal_family_uses_general_frame():
    # two-neighbour rules on the diagonal neighbours: isolated stable
    # directions sit off-axis, exercising the egcd frame and the parity of
    # boundary-parallel lattice lines
    from itertools import combinations

    diag = [(1, 1), (1, -1), (-1, 1), (-1, -1)]
    fam = UpdateFamily(2, [set(c) for c in combinations(diag, 2)])
    rep = refine(fam)
    assert rep.rough == CRITICAL and rep.alpha == Difficulty.exact(1)
    assert sorted(rep.difficulties) == [(-1, -1), (-1, 1), (1, -1), (1, 1)]
    assert set(rep.difficulties.values()) == {Difficulty.exact(1)}
    assert rep.exponents == (1, 0, 0)
