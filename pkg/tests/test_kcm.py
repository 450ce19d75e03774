import math

import numpy as np
import pytest
import scipy.stats as st

from kcmlab.errors import ParameterError
from kcmlab.family import catalog
from kcmlab.kcm import (
    SimParams,
    batch_final_bits,
    batch_tau0,
    front_run,
    hit_tau0,
    simulate,
    tau0_scan,
    thinned_tau0,
    trajectory_closure_check,
)
from kcmlab.lattice import BoundaryCondition, Configuration, Region

EMPTY = BoundaryCondition.empty()
OCC = BoundaryCondition.occupied()
EAST = catalog("east1d")


def test_replay_determinism():
    p = SimParams(EAST, Region.line(8), EMPTY, 0.4, 25.0, seed=5, replica=3,
                  snapshot_times=(5.0, 20.0))
    a, b = simulate(p, origin=(0,)), simulate(p, origin=(0,))
    assert a.tau0 == b.tau0 and a.tau1 == b.tau1 and a.final == b.final
    assert a.event_count == b.event_count
    assert all(x == y for (_, x), (_, y) in zip(a.snapshots, b.snapshots))


def test_zero_horizon_and_frozen_dynamics():
    p = SimParams(EAST, Region.line(6), EMPTY, 0.4, 0.0, seed=1)
    rec = simulate(p)
    assert rec.event_count == 0 and len(rec.snapshots) == 0

    # no legal update ever: fully occupied two-neighbour chain, occupied bc
    fa2f1 = catalog("fa2f-1d")
    p2 = SimParams(fa2f1, Region.line(6), OCC, 0.4, 50.0, seed=2, initial=("except", []))
    rec2 = simulate(p2, origin=(3,))
    assert rec2.final == Configuration.all_occupied(Region.line(6))
    assert rec2.tau0 is None and rec2.event_count > 0
    t, censored = hit_tau0(p2, origin=(3,))
    assert censored and t == 50.0


def test_tau_conventions():
    p = SimParams(EAST, Region.line(4), EMPTY, 0.4, 10.0, seed=3, initial=("except", [(2,)]))
    rec = simulate(p, origin=(2,))
    assert rec.tau0 == 0.0  # initially empty origin
    if rec.tau1 is not None:
        assert rec.tau_vee == max(rec.tau0, rec.tau1)


def test_batched_equals_sequential():
    reg = Region.line(8)
    tau, cens = batch_tau0(EAST, reg, EMPTY, 0.4, 30.0, 99, 200, origin=(0,))
    for r in range(200):
        rec = simulate(SimParams(EAST, reg, EMPTY, 0.4, 30.0, 99, replica=r), origin=(0,))
        expect = 30.0 if rec.tau0 is None else rec.tau0
        assert tau[r] == pytest.approx(expect, abs=1e-12)
        assert bool(cens[r]) == (rec.tau0 is None)


def test_thinned_engine_same_law():
    reg = Region.line(12)
    n = 2500
    th = np.array([thinned_tau0(EAST, reg, EMPTY, 0.45, 7, r, origin=(0,)) for r in range(n)])
    tb, cb = batch_tau0(EAST, reg, EMPTY, 0.45, 400.0, 8, n, origin=(0,))
    assert cb.mean() < 0.01
    se = th.std() / math.sqrt(n) + tb.std() / math.sqrt(n)
    assert abs(th.mean() - tb[~cb].mean()) < 4 * se


def test_thinned_engine_deterministic():
    reg = Region.line(10)
    a = thinned_tau0(EAST, reg, EMPTY, 0.3, 11, 5, origin=(0,))
    b = thinned_tau0(EAST, reg, EMPTY, 0.3, 11, 5, origin=(0,))
    assert a == b


def test_stationarity_chi2():
    # marginals at a fixed time from a product start stay product
    q, L, n = 0.35, 16, 4000
    bits = batch_final_bits(EAST, Region.line(L), EMPTY, q, 60.0, 31, n)
    counts = (bits == 0).sum(axis=0)
    chi2 = (((counts - n * q) ** 2) / (n * q * (1 - q))).sum()
    assert st.chi2.sf(chi2, df=L) > 0.01


def test_snapshots_and_closure_invariance():
    fa2f1 = catalog("fa2f-1d")
    for r in range(50):
        p = SimParams(fa2f1, Region.line(9), OCC, 0.4, 20.0, 77, ("product", 0.5), r,
                      tuple(float(s) for s in range(0, 21, 4)))
        rec = simulate(p)
        assert trajectory_closure_check(rec)
    p = SimParams(EAST, Region.line(6), EMPTY, 0.4, 15.0, 3, ("product", None), 0, (1.0, 9.0))
    rec = simulate(p)
    assert trajectory_closure_check(rec)


def test_finite_speed_of_propagation():
    # from all-occupied, vacancies at time 20 cluster near the helping edge
    n = 200
    bits = batch_final_bits(EAST, Region.line(n), EMPTY, 0.3, 20.0, 13, 300,
                            initial=("except", []))
    empty_any = bits == 0
    has = empty_any.any(axis=1)
    leftmost = np.argmax(empty_any, axis=1)
    dist = np.where(has, n - leftmost, 0)
    assert dist.max() <= 100


def test_tau0_scan_until_hit():
    reg = Region.line(16)
    tau, cens, horizon = tau0_scan(EAST, reg, EMPTY, 0.4, 300, seed=21, origin=(0,))
    assert not cens.any() and math.isinf(horizon)
    assert (tau >= 0).all()
    tau2, cens2, h2 = tau0_scan(EAST, reg, EMPTY, 0.4, 300, seed=21, horizon=50.0, origin=(0,))
    assert h2 == 50.0 and (tau2[~cens2] <= 50.0).all()


def test_front_run_mechanics():
    res = front_run(0.3, 1500, 4000.0, seed=4, window=256)
    assert np.all(np.abs(np.diff(res.series_x)) == 1)
    assert not res.halted_early
    assert res.v_hat < 0
    assert res.moves == len(res.series_x) - 1
    # drift identity within statistical resolution
    assert abs(res.identity_gap) <= 4 * res.se_combined
    # deterministic replay
    res2 = front_run(0.3, 1500, 4000.0, seed=4, window=256)
    assert res2.moves == res.moves and res2.v_hat == res.v_hat


def test_front_window_insensitive():
    a = front_run(0.35, 1200, 3000.0, seed=9, window=96)
    b = front_run(0.35, 1200, 3000.0, seed=10, window=384)
    spread = 3 * math.hypot(a.se_p1, b.se_p1)
    assert abs(a.p1_hat - b.p1_hat) <= max(spread, 0.05)


def test_front_halts_near_left_edge():
    res = front_run(0.5, 12, 1e5, seed=2, window=64)
    assert res.halted_early
    assert res.series_x.min() <= 2


def test_params_validation():
    with pytest.raises(ParameterError):
        SimParams(EAST, Region.line(4), EMPTY, 0.0, 1.0, seed=1)
    with pytest.raises(ParameterError):
        SimParams(EAST, Region.line(4), EMPTY, 0.5, -1.0, seed=1)
    with pytest.raises(ParameterError):
        front_run(0.3, 4, 10.0, seed=1)


def test_equilibration_from_all_occupied():
    # ergodic chain forgets the fully occupied start by T=200: sitewise
    # occupancy matches Bernoulli(1-q) (chi-square over the 16 sites)
    q, L, n = 0.5, 16, 10_000
    bits = batch_final_bits(EAST, Region.line(L), EMPTY, q, 200.0, 2718, n,
                            initial=("except", []))
    counts = (bits == 0).sum(axis=0)
    chi2 = (((counts - n * q) ** 2) / (n * q * (1 - q))).sum()
    assert st.chi2.sf(chi2, df=L) > 0.01
    z = np.abs(counts - n * q) / math.sqrt(n * q * (1 - q))
    assert z.max() < 3.0
