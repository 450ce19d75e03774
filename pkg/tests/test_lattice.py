import numpy as np
import pytest
import scipy.stats as st

from kcmlab.errors import MissingBoundaryError, ParameterError
from kcmlab.lattice import (
    BoundaryCondition,
    Configuration,
    Region,
    concatenate,
    dump_text,
    flip,
    load_text,
    sample_product,
)
from kcmlab.rng import RandomStream


def test_flip_basics():
    reg = Region.box(3, 3)
    cfg = Configuration.all_occupied(reg)
    f = flip(cfg, (1, 1))
    assert f.get((1, 1)) == 0 and f.vacancy_count == 1
    assert sum(a != b for a, b in zip(cfg.bits, f.bits)) == 1
    assert flip(f, (1, 1)) == cfg  # involution
    with pytest.raises(ParameterError):
        flip(cfg, (3, 0))


def test_flip_vacancy_count_increment():
    reg = Region.line(6)
    cfg = Configuration(reg, [1, 0, 1, 1, 0, 1])
    k = cfg.vacancy_count
    assert flip(cfg, (0,)).vacancy_count == k + 1
    assert flip(cfg, (1,)).vacancy_count == k - 1


def test_concatenate_lookup():
    reg = Region.box(2, 2)
    inner = Configuration.all_empty(reg)
    look = concatenate(inner, BoundaryCondition.occupied())
    assert look((5, 5)) == 1
    assert look((0, 0)) == 0
    look2 = concatenate(inner, BoundaryCondition.explicit({(-1, 0): 0}))
    assert look2((-1, 0)) == 0
    with pytest.raises(MissingBoundaryError):
        look2((7, 7))


def test_concatenate_matches_inner_exhaustively():
    reg = Region.box(4, 4)
    rng = np.random.default_rng(0)
    cfg = Configuration(reg, rng.integers(0, 2, 16))
    look = concatenate(cfg, BoundaryCondition.empty())
    for site in reg.sites():
        assert look(site) == cfg.get(site)


def test_sample_product_degenerate():
    reg = Region.box(5, 4)
    s = RandomStream(1, "init")
    assert sample_product(reg, 0.0, s).vacancy_count == 0
    assert sample_product(reg, 1.0, s).vacancy_count == reg.count
    with pytest.raises(ParameterError):
        sample_product(reg, 1.5, s)


def test_sample_product_chi2():
    # per-site vacancy counts over many draws follow Binomial(N, q)
    reg = Region.box(8, 4)
    q, n = 0.5, 10_000
    counts = np.zeros(reg.count)
    for r in range(n):
        counts += sample_product(reg, q, RandomStream(77, "chi", r)).bits == 0
    chi2 = (((counts - n * q) ** 2) / (n * q * (1 - q))).sum()
    p = st.chi2.sf(chi2, df=reg.count)
    assert p > 0.01
    frac = counts.sum() / (n * reg.count)
    sigma = np.sqrt(q * (1 - q) / (n * reg.count))
    assert abs(frac - q) < 3 * sigma


def test_sample_product_window_extension_stable():
    # enlarging the window must keep the bits of shared sites
    small = Region.box(6, 6, (-3, -3))
    big = Region.box(12, 12, (-6, -6))
    s = RandomStream(5, "ext")
    a = sample_product(small, 0.4, s)
    b = sample_product(big, 0.4, s)
    for site in small.sites():
        assert a.get(site) == b.get(site)


def test_serialization_round_trip():
    rng = np.random.default_rng(3)
    for reg in (Region.line(7, -2), Region.box(5, 3, (4, -1))):
        cfg = Configuration(reg, rng.integers(0, 2, reg.count))
        text = dump_text(cfg)
        back = load_text(text)
        assert back == cfg
        assert dump_text(back) == text
    with pytest.raises(ParameterError):
        load_text("bogus header\n01")


def test_region_indexing_bijection():
    for reg in (Region.line(9, -4), Region.box(4, 7, (-2, 5))):
        seen = set()
        for site in reg.sites():
            i = reg.index(site)
            assert reg.site(i) == site
            seen.add(i)
        assert seen == set(range(reg.count))


def test_configuration_immutable():
    cfg = Configuration.all_occupied(Region.line(3))
    with pytest.raises(Exception):
        cfg.bits[0] = 0


def test_explicit_boundary_cover_check():
    reg = Region.line(3)
    offsets = [(1,)]
    full = BoundaryCondition.explicit({(3,): 0})
    assert full.covers(reg, offsets)
    partial = BoundaryCondition.explicit({(4,): 0})
    assert not partial.covers(reg, offsets)
    assert BoundaryCondition.occupied().covers(reg, offsets)
