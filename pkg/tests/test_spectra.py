import math

import numpy as np
import pytest

from kcmlab.bootstrap import is_ergodic_bc
from kcmlab.errors import ParameterError, SizeError
from kcmlab.family import catalog
from kcmlab.lattice import BoundaryCondition, Configuration, Region
from kcmlab.spectra import (
    build,
    dirichlet,
    dirichlet_from_generator,
    mean_hitting_tau0,
    mixing_time,
    nearest_vacancy_profile,
    relaxation_time,
    spectral_gap,
    variance,
)

EMPTY = BoundaryCondition.empty()
OCC = BoundaryCondition.occupied()
EAST = catalog("east1d")


def test_pair_chain_relaxation_is_exact():
    # two-site oriented chain with an empty boundary on the helping side:
    # the relaxation time equals 1/(1 - sqrt(1-q)), and the bound is tight
    for q in (0.1, 0.5, 0.9):
        model = build(EAST, Region.line(2), EMPTY, q)
        trel = relaxation_time(model)
        assert abs(trel - 1.0 / (1.0 - math.sqrt(1.0 - q))) < 1e-9


def test_relaxation_monotone_in_volume():
    prev = 0.0
    for L in (2, 4, 6, 8):
        trel = relaxation_time(build(EAST, Region.line(L), EMPTY, 0.5))
        assert trel >= prev - 1e-12
        prev = trel


def test_unconstrained_gap_is_one():
    for L in (1, 2, 4, 6):
        for q in (0.2, 0.5, 0.8):
            assert abs(spectral_gap(build(None, Region.line(L), OCC, q)) - 1.0) < 1e-10


def test_generator_bookkeeping():
    model = build(EAST, Region.line(4), EMPTY, 0.3)
    g = model.generator.toarray()
    assert np.abs(g.sum(axis=1)).max() < 1e-14  # rows sum to zero
    flux = model.mu[:, None] * g
    assert np.abs(flux - flux.T).max() <= 1e-14 * np.abs(g).max()  # detailed balance


def test_component_full_under_ergodic_bc():
    for fam, reg, bc in (
        (EAST, Region.line(5), EMPTY),
        (catalog("fa2f-2d"), Region.box(3, 3), EMPTY),
    ):
        assert is_ergodic_bc(fam, reg, bc)
        model = build(fam, reg, bc, 0.4)
        assert model.size == 1 << reg.count


def test_component_restriction():
    fa2f1 = catalog("fa2f-1d")
    reg = Region.line(3)
    model = build(fa2f1, reg, OCC, 0.4, Configuration.all_empty(reg))
    assert model.size < 8
    assert 7 not in set(model.states.tolist())  # fully occupied is separate
    single = build(fa2f1, reg, OCC, 0.4, Configuration.all_occupied(reg))
    assert single.degenerate
    with pytest.raises(ParameterError):
        relaxation_time(single)


def test_dirichlet_identity_and_poincare():
    rng = np.random.default_rng(1)
    for q in (0.3, 0.6):
        model = build(EAST, Region.line(5), EMPTY, q)
        trel = relaxation_time(model)
        for _ in range(200):
            f = rng.normal(size=model.size)
            d = dirichlet(model, f)
            assert d == pytest.approx(dirichlet_from_generator(model, f), rel=1e-12, abs=1e-12)
            assert variance(model, f) <= trel * d * (1 + 1e-9)
        const = np.ones(model.size)
        assert dirichlet(model, const) == 0.0
        assert variance(model, const) == pytest.approx(0.0, abs=1e-15)


def test_two_state_hitting_time():
    for q in (0.25, 0.5, 0.8):
        model = build(None, Region.line(1), OCC, q)
        assert mean_hitting_tau0(model, (0,)) == pytest.approx((1 - q) / q, rel=1e-12)


def test_hitting_bound_and_errors():
    q = 0.4
    model = build(EAST, Region.line(6), EMPTY, q)
    e = mean_hitting_tau0(model, (0,))
    assert e <= relaxation_time(model) / q
    fa2f1 = catalog("fa2f-1d")
    reg = Region.line(3)
    frozen = build(fa2f1, reg, OCC, q, Configuration.all_occupied(reg))
    with pytest.raises(ParameterError):
        mean_hitting_tau0(frozen, (1,))


def test_mixing_time_two_state_closed_form():
    # worst-case total variation of the single resampling site is
    # max(q, 1-q) e^{-t}, so t_mix(eps) = log(max(q, 1-q)/eps)
    for q, eps in ((0.5, 0.25), (0.3, 0.25), (0.5, 0.1)):
        model = build(None, Region.line(1), OCC, q)
        expect = math.log(max(q, 1 - q) / eps)
        assert mixing_time(model, eps) == pytest.approx(expect, abs=1e-6)
    model = build(None, Region.line(1), OCC, 0.5)
    assert mixing_time(model, 0.9) == 0.0  # threshold above the initial distance


def test_mixing_monotone_in_volume():
    prev = 0.0
    times = {}
    for L in (4, 6, 8):
        t = mixing_time(build(EAST, Region.line(L), EMPTY, 0.5), 0.25)
        assert t > prev
        times[L] = t
        prev = t
    # linear-in-volume lower behaviour: the fitted slope against L is positive
    import numpy as np

    slope = np.polyfit(list(times), list(times.values()), 1)[0]
    assert slope > 0


def test_mixing_size_cap():
    with pytest.raises(SizeError):
        mixing_time(build(EAST, Region.line(13), EMPTY, 0.5), 0.25)


def test_dense_and_iterative_gap_agree():
    import kcmlab.spectra as sp

    model = build(EAST, Region.line(6), EMPTY, 0.45)
    dense = spectral_gap(model)
    old = sp._DENSE_CAP
    sp._DENSE_CAP = 1
    try:
        iterative = spectral_gap(model)
    finally:
        sp._DENSE_CAP = old
    assert iterative == pytest.approx(dense, rel=1e-8)


def test_nearest_vacancy_profile_limits():
    q = 0.3
    for m in (4, 6, 8):
        var, dirv, vl, dl = nearest_vacancy_profile(q, m)
        tol = 2 * (1 - q) ** (2 * m)
        assert abs(var - vl) / vl <= tol
        assert abs(dirv - dl) / dl <= tol
    assert nearest_vacancy_profile(0.3, 8)[2] == pytest.approx(0.49 / 0.51**2)


def test_profile_rayleigh_vs_finite_chain():
    # the Rayleigh quotient of the nearest-vacancy function can never beat
    # the finite chain's relaxation time
    q, m = 0.3, 3
    fa1f = catalog("fa1f-1d")
    reg = Region.line(2 * m, -m + 1)
    model = build(fa1f, reg, EMPTY, q)

    beta = (1 - q) ** 2
    cap = m + 1 + beta / (1 - beta)

    def f_of(cfg):
        for k in range(1, m + 1):
            if cfg.get((k,)) == 0 or cfg.get((-k + 1,)) == 0:
                return float(k)
        return cap

    f = model.vector_from_function(f_of)
    trel = relaxation_time(model)
    assert variance(model, f) <= trel * dirichlet(model, f) * (1 + 1e-9)


def test_always_satisfied_constraint_gives_full_chain():
    # two-way single-flip family on two sites with an empty boundary: both
    # constraints hold in every configuration, so the chain has all 4 states
    # and relaxes like the free product (gap 1)
    fa1f = catalog("fa1f-1d")
    model = build(fa1f, Region.line(2), EMPTY, 0.3)
    assert model.size == 4
    assert spectral_gap(model) == pytest.approx(1.0, abs=1e-10)
