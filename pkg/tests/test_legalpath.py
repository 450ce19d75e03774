import pytest

from kcmlab.bootstrap import closure
from kcmlab.errors import ParameterError, SizeError
from kcmlab.family import catalog
from kcmlab.lattice import BoundaryCondition, Configuration, Region, flip
from kcmlab.legalpath import (
    LegalPath,
    components,
    components_by_reachability,
    path_to_flip,
    validate,
)

OCC = BoundaryCondition.occupied()
EMPTY = BoundaryCondition.empty()


def test_validate_examples():
    east = catalog("east1d")
    reg = Region.line(2)
    start = Configuration(reg, [1, 0])
    empty_path = LegalPath(reg, OCC, start, [])
    assert validate(east, empty_path) is None
    ok = LegalPath(reg, OCC, start, [((0,), 0)])
    assert validate(east, ok) is None
    bad = LegalPath(reg, OCC, Configuration(reg, [1, 1]), [((0,), 0)])
    assert validate(east, bad) == 0
    # a repeated-state move needs no constraint
    noop = LegalPath(reg, OCC, Configuration(reg, [1, 1]), [((0,), 1)])
    assert validate(east, noop) is None


def test_path_to_flip_east():
    east = catalog("east1d")
    reg = Region.line(3)
    cfg = Configuration.all_occupied(reg)
    path = path_to_flip(east, cfg, EMPTY, (0,))
    assert path is not None and path.length <= 2 * reg.count
    assert validate(east, path) is None
    assert path.replay() == flip(cfg, (0,))
    rev = path.reversed()
    assert validate(east, rev) is None
    assert rev.replay() == cfg
    # closure is constant along the validated path
    ref = closure(east, cfg, EMPTY).closure
    cur = cfg
    for site, bit in path.steps:
        if cur.get(site) != bit:
            cur = flip(cur, site)
        assert closure(east, cur, EMPTY).closure == ref


def test_path_single_step_when_already_flippable():
    east = catalog("east1d")
    reg = Region.line(3)
    cfg = Configuration(reg, [1, 0, 1])
    path = path_to_flip(east, cfg, OCC, (0,))
    assert path is not None and path.length == 1


def test_path_unreachable():
    fa2f = catalog("fa2f-1d")
    cfg = Configuration.all_occupied(Region.line(4))
    assert path_to_flip(fa2f, cfg, OCC, (1,)) is None
    with pytest.raises(ParameterError):
        path_to_flip(fa2f, Configuration.all_empty(Region.line(4)), OCC, (1,))


def test_components_examples():
    east = catalog("east1d")
    reg = Region.line(3)
    assert len(components(east, reg, EMPTY)) == 1
    fa2f1 = catalog("fa2f-1d")
    comps = components(fa2f1, reg, OCC)
    assert [7] in comps  # fully occupied is its own class
    # constraint always satisfied: single component
    trivialish = components(east, Region.line(1), EMPTY)
    assert len(trivialish) == 1
    with pytest.raises(SizeError):
        components(east, Region.line(21), EMPTY)


@pytest.mark.parametrize("name", ["east1d", "fa1f-1d", "fa2f-1d"])
@pytest.mark.parametrize("bc", [OCC, EMPTY], ids=["occ", "empty"])
def test_fibers_equal_reachability_1d(name, bc):
    fam = catalog(name)
    for L in (3, 6, 9):
        reg = Region.line(L)
        assert components(fam, reg, bc) == components_by_reachability(fam, reg, bc)


@pytest.mark.parametrize("name", ["east2d", "fa2f-2d"])
@pytest.mark.parametrize("bc", [OCC, EMPTY], ids=["occ", "empty"])
def test_fibers_equal_reachability_2d(name, bc):
    fam = catalog(name)
    reg = Region.box(3, 3)
    assert components(fam, reg, bc) == components_by_reachability(fam, reg, bc)
