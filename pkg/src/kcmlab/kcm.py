"""Continuous-time constrained Glauber dynamics via the graphical construction.

One global exponential clock of rate |window| rings; the ring picks a
uniform site; when the site's constraint holds, its bit is resampled to
occupied with probability 1 - q.  Every draw of every replica is a pure
function of (seed, purpose, replica, event index), so the sequential
trajectory engine and the vectorized multi-replica engine consume the very
same numbers and produce bit-identical observables, which the tests assert.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bootstrap import _neighbor_tables, closure
from .errors import ParameterError
from .family import UpdateFamily
from .lattice import BoundaryCondition, Configuration, Region, sample_product
from .legalpath import config_from_int, constraint_from_masks, site_rule_masks
from .rng import (
    RandomStream,
    derive_key,
    fold_int_np,
    keyed_block_np,
    u64_to_uniform,
    value_at,
    values_at_np,
)


@dataclass(frozen=True)
class SimParams:
    family: UpdateFamily
    region: Region
    bc: BoundaryCondition
    q: float
    horizon: float
    seed: int
    initial: tuple = ("product", None)  # ("product", q0) | ("explicit", cfg) | ("except", sites)
    replica: int = 0
    snapshot_times: tuple = ()

    def __post_init__(self):
        if not 0.0 < self.q < 1.0:
            raise ParameterError("q must lie strictly between 0 and 1")
        if self.horizon < 0:
            raise ParameterError("horizon must be nonnegative")


@dataclass
class TrajectoryRecord:
    params: SimParams
    tau0: float | None
    tau1: float | None
    final: Configuration
    snapshots: list = field(default_factory=list)  # (time, Configuration)
    event_count: int = 0

    @property
    def tau_vee(self) -> float | None:
        if self.tau0 is None or self.tau1 is None:
            return None
        return max(self.tau0, self.tau1)

    def censored(self, which: str = "tau0") -> bool:
        return getattr(self, which) is None


def _initial_mask(params: SimParams) -> int:
    kind, arg = params.initial[0], params.initial[1]
    n = params.region.count
    if kind == "product":
        q0 = params.q if arg is None else float(arg)
        stream = RandomStream(params.seed, "init", params.replica)
        cfg = sample_product(params.region, q0, stream)
        mask = 0
        for i, b in enumerate(cfg.bits):
            if b:
                mask |= 1 << i
        return mask
    if kind == "explicit":
        mask = 0
        for i, b in enumerate(arg.bits):
            if b:
                mask |= 1 << i
        return mask
    if kind == "except":
        mask = (1 << n) - 1
        for site in arg:
            mask &= ~(1 << params.region.index(site))
        return mask
    raise ParameterError(f"unknown initial condition {kind!r}")


def simulate(params: SimParams, origin=None) -> TrajectoryRecord:
    """Exact-in-law single trajectory, deterministic given params."""
    region = params.region
    n = region.count
    if origin is None:
        origin = region.center()
    origin_idx = region.index(origin)
    masks = site_rule_masks(params.family, region, params.bc)

    kdt = derive_key(params.seed, "evt-dt", params.replica)
    ksite = derive_key(params.seed, "evt-site", params.replica)
    kcoin = derive_key(params.seed, "evt-coin", params.replica)

    state = _initial_mask(params)
    t = 0.0
    events = 0
    tau0 = 0.0 if not (state >> origin_idx) & 1 else None
    tau1 = 0.0 if (state >> origin_idx) & 1 else None
    pending = sorted(s for s in params.snapshot_times if 0 <= s <= params.horizon)
    snapshots = []
    k = 0
    while True:
        u = u64_to_uniform(value_at(kdt, k))
        t_next = t + (-math.log1p(-u) / n)
        while pending and pending[0] <= min(t_next, params.horizon):
            s = pending.pop(0)
            snapshots.append((s, config_from_int(region, state)))
        if t_next > params.horizon:
            break
        t = t_next
        events += 1
        site = value_at(ksite, k) % n
        if constraint_from_masks(masks[site], state):
            occupied = u64_to_uniform(value_at(kcoin, k)) >= params.q
            if occupied:
                state |= 1 << site
            else:
                state &= ~(1 << site)
            bit = (state >> origin_idx) & 1
            if tau0 is None and bit == 0:
                tau0 = t
            if tau1 is None and bit == 1:
                tau1 = t
        k += 1
    return TrajectoryRecord(
        params, tau0, tau1, config_from_int(region, state), snapshots, events
    )


def hit_tau0(params: SimParams, origin=None):
    """Sample of the emptying time of the origin with a censoring flag."""
    rec = simulate(params, origin=origin)
    if rec.tau0 is None:
        return params.horizon, True
    return rec.tau0, False


def trajectory_closure_check(record: TrajectoryRecord) -> bool:
    """Closure is invariant along any trajectory: check it over the snapshots."""
    snaps = [cfg for _, cfg in record.snapshots] + [record.final]
    if not snaps:
        return True
    fam, bc = record.params.family, record.params.bc
    ref = closure(fam, snaps[0], bc).closure
    return all(closure(fam, cfg, bc).closure == ref for cfg in snaps[1:])


# ---------------------------------------------------------------------------
# batched multi-replica engine (bit-identical draws to simulate())


class _BatchEngine:
    def __init__(self, fam, region, bc, q, seed, replicas):
        self.fam, self.region, self.bc, self.q, self.seed = fam, region, bc, q, seed
        self.n = region.count
        self.idx, self.out_empty = _neighbor_tables(fam, region, bc)
        base_dt = derive_key(seed, "evt-dt")
        base_site = derive_key(seed, "evt-site")
        base_coin = derive_key(seed, "evt-coin")
        # replica keys equal derive_key(seed, tag, r) by the fold identity
        rs = np.asarray(replicas, dtype=np.uint64)
        self.kdt = fold_int_np(base_dt, rs)
        self.ksite = fold_int_np(base_site, rs)
        self.kcoin = fold_int_np(base_coin, rs)

    def initial_bits(self, initial, replicas):
        n = self.n
        kind, arg = initial
        if kind == "product":
            q0 = self.q if arg is None else float(arg)
            rows = []
            for r in replicas:
                stream = RandomStream(self.seed, "init", int(r))
                rows.append(sample_product(self.region, q0, stream).bits)
            return np.stack(rows)
        if kind == "explicit":
            return np.tile(arg.bits, (len(replicas), 1)).copy()
        if kind == "except":
            bits = np.ones((len(replicas), n), dtype=np.uint8)
            for site in arg:
                bits[:, self.region.index(site)] = 0
            return bits
        raise ParameterError(f"unknown initial condition {kind!r}")

    def legal_mask(self, bits, sites):
        rows = np.arange(bits.shape[0])
        total = None
        for rule in self.fam.rules:
            ok = None
            for u in rule:
                col = self.idx[u][sites]
                inside = col >= 0
                vals = np.where(
                    inside,
                    bits[rows, np.where(inside, col, 0)] == 0,
                    self.out_empty[u][sites],
                )
                ok = vals if ok is None else (ok & vals)
            total = ok if total is None else (total | ok)
        return total


def _finish_tau0_scalar(masks, n, q, horizon, state, t, k, kdt, ksite, kcoin, origin_idx):
    """Continue one replica event by event from counter k (same draws)."""
    chunk = 1 << 14
    while True:
        ks = np.arange(k, k + chunk, dtype=np.uint64)
        dts = -np.log1p(-u64_to_uniform(values_at_np(kdt, ks))) / n
        sites = (values_at_np(ksite, ks) % np.uint64(n)).astype(np.int64)
        occs = u64_to_uniform(values_at_np(kcoin, ks)) >= q
        for j in range(chunk):
            t += dts[j]
            if t > horizon:
                return None
            site = sites[j]
            if constraint_from_masks(masks[site], state):
                if occs[j]:
                    state |= 1 << site
                else:
                    state &= ~(1 << site)
                    if site == origin_idx:
                        return t
        k += chunk


def thinned_tau0(
    fam: UpdateFamily,
    region: Region,
    bc: BoundaryCondition,
    q: float,
    seed: int,
    replica: int,
    origin=None,
    initial=("product", None),
    max_events: int = 1_000_000_000,
):
    """Run one replica until the origin empties, skipping inert clock rings.

    Rings at sites whose constraint is unsatisfied never change the state,
    so the embedded chain of constraint-satisfied rings (rate = number of
    such sites) realizes the same law with far fewer events.  Uses its own
    draw streams; no horizon, hence no censoring.
    """
    if origin is None:
        origin = region.center()
    n = region.count
    origin_idx = region.index(origin)
    masks = site_rule_masks(fam, region, bc)
    params = SimParams(fam, region, bc, q, 0.0, seed, initial, replica)
    state = _initial_mask(params)
    if not (state >> origin_idx) & 1:
        return 0.0

    pos = [-1] * n
    act = []

    def refresh(i):
        sat = constraint_from_masks(masks[i], state)
        if sat and pos[i] < 0:
            pos[i] = len(act)
            act.append(i)
        elif not sat and pos[i] >= 0:
            j = pos[i]
            last = act[-1]
            act[j] = last
            pos[last] = j
            act.pop()
            pos[i] = -1

    for i in range(n):
        refresh(i)
    rev_sets = [[] for _ in range(n)]
    dim = region.dim
    sites = list(region.sites())
    offs = sorted({u for rule in fam.rules for u in rule})
    for i, x in enumerate(sites):
        for u in offs:
            y = tuple(x[kk] - u[kk] for kk in range(dim))
            if y in region:
                rev_sets[i].append(region.index(y))

    kdt = derive_key(seed, "thin-dt", replica)
    ksite = derive_key(seed, "thin-site", replica)
    kcoin = derive_key(seed, "thin-coin", replica)
    t = 0.0
    k = 0
    chunk = 1 << 14
    log1p = math.log1p
    while k < max_events:
        ks = np.arange(k, k + chunk, dtype=np.uint64)
        negdts = np.log1p(-u64_to_uniform(values_at_np(kdt, ks))).tolist()
        picks = values_at_np(ksite, ks).tolist()
        occs = (u64_to_uniform(values_at_np(kcoin, ks)) >= q).tolist()
        for j in range(chunk):
            rate = len(act)
            if rate == 0:
                return math.inf  # no constraint satisfied anywhere: frozen
            t -= negdts[j] / rate
            site = act[picks[j] % rate]
            if occs[j]:
                if not (state >> site) & 1:
                    state |= 1 << site
                    for i in rev_sets[site]:
                        refresh(i)
            elif (state >> site) & 1:
                state ^= 1 << site
                for i in rev_sets[site]:
                    refresh(i)
                if site == origin_idx:
                    return t
        k += chunk
    raise ParameterError("thinned run exceeded the event cap")


_SCALAR_SWITCH = 160


def batch_tau0(
    fam: UpdateFamily,
    region: Region,
    bc: BoundaryCondition,
    q: float,
    horizon: float,
    seed: int,
    replicas: int,
    origin=None,
    initial=("product", None),
    first_replica: int = 0,
    chunk: int = 25_000,
):
    """Emptying-time samples for many replicas; equals simulate() per replica.

    Returns (tau0, censored) arrays.  Replicas run vectorized until few of
    them remain, then finish one by one on the same draw sequence, so the
    result is independent of the switchover.
    """
    if origin is None:
        origin = region.center()
    origin_idx = region.index(origin)
    n = region.count
    masks = site_rule_masks(fam, region, bc)
    out_tau = np.empty(replicas)
    out_cens = np.zeros(replicas, dtype=bool)
    for lo in range(0, replicas, chunk):
        hi = min(lo + chunk, replicas)
        ids = np.arange(first_replica + lo, first_replica + hi, dtype=np.int64)
        eng = _BatchEngine(fam, region, bc, q, seed, ids)
        bits = eng.initial_bits(initial, ids)
        tau = np.full(hi - lo, np.nan)
        t = np.zeros(hi - lo)
        tau[bits[:, origin_idx] == 0] = 0.0
        active = np.flatnonzero(np.isnan(tau))
        k = 0
        cw = 64  # rounds drawn per chunk
        while active.size > _SCALAR_SWITCH:
            act0 = active
            dt_blk = -np.log1p(-u64_to_uniform(keyed_block_np(eng.kdt[act0], k, cw))) / n
            site_blk = (keyed_block_np(eng.ksite[act0], k, cw) % np.uint64(n)).astype(
                np.int64
            )
            occ_blk = u64_to_uniform(keyed_block_np(eng.kcoin[act0], k, cw)) >= q
            sel = np.arange(act0.size)
            for c in range(cw):
                t[act0[sel]] += dt_blk[sel, c]
                keep = t[act0[sel]] <= horizon
                sel = sel[keep]
                if sel.size == 0:
                    break
                rows = act0[sel]
                sites = site_blk[sel, c]
                legal = eng.legal_mask(bits[rows], sites)
                coin_occ = occ_blk[sel, c]
                bits[rows[legal], sites[legal]] = coin_occ[legal].astype(np.uint8)
                hit = legal & ~coin_occ & (sites == origin_idx)
                tau[rows[hit]] = t[rows[hit]]
                sel = sel[~hit]
                if sel.size <= _SCALAR_SWITCH:
                    break
            k += c + 1
            active = act0[sel] if sel.size else np.empty(0, dtype=np.int64)
        for a in active:
            state = 0
            for i in range(n):
                if bits[a, i]:
                    state |= 1 << i
            res = _finish_tau0_scalar(
                masks, n, q, horizon, state, float(t[a]), k,
                int(eng.kdt[a]), int(eng.ksite[a]), int(eng.kcoin[a]), origin_idx,
            )
            if res is not None:
                tau[a] = res
        cens = np.isnan(tau)
        tau[cens] = horizon
        out_tau[lo:hi] = tau
        out_cens[lo:hi] = cens
    return out_tau, out_cens


def batch_final_bits(
    fam: UpdateFamily,
    region: Region,
    bc: BoundaryCondition,
    q: float,
    horizon: float,
    seed: int,
    replicas: int,
    initial=("product", None),
    chunk: int = 25_000,
):
    """State of every replica at the horizon (vectorized evolution)."""
    n = region.count
    out = np.empty((replicas, n), dtype=np.uint8)
    for lo in range(0, replicas, chunk):
        hi = min(lo + chunk, replicas)
        ids = np.arange(lo, hi, dtype=np.int64)
        eng = _BatchEngine(fam, region, bc, q, seed, ids)
        bits = eng.initial_bits(initial, ids)
        t = np.zeros(hi - lo)
        active = np.arange(hi - lo)
        k = 0
        cw = 64
        while active.size:
            act0 = active
            dt_blk = -np.log1p(-u64_to_uniform(keyed_block_np(eng.kdt[act0], k, cw))) / n
            site_blk = (keyed_block_np(eng.ksite[act0], k, cw) % np.uint64(n)).astype(
                np.int64
            )
            occ_blk = u64_to_uniform(keyed_block_np(eng.kcoin[act0], k, cw)) >= q
            sel = np.arange(act0.size)
            for c in range(cw):
                t[act0[sel]] += dt_blk[sel, c]
                keep = t[act0[sel]] <= horizon
                sel = sel[keep]
                if sel.size == 0:
                    break
                rows = act0[sel]
                sites = site_blk[sel, c]
                legal = eng.legal_mask(bits[rows], sites)
                coin_occ = occ_blk[sel, c]
                bits[rows[legal], sites[legal]] = coin_occ[legal].astype(np.uint8)
            k += c + 1
            active = act0[sel] if sel.size else np.empty(0, dtype=np.int64)
        out[lo:hi] = bits
    return out


def tau0_scan(
    fam: UpdateFamily,
    region: Region,
    bc: BoundaryCondition,
    q: float,
    replicas: int,
    seed: int,
    horizon: float | str = "auto",
    origin=None,
    initial=("product", None),
):
    """tau0 sample set at one q.

    horizon="auto" runs every replica to its hitting time on the thinned
    engine: no censoring at all, which matters because the emptying time
    mixes widely separated scales and any horizon clips a heavy tail.  A
    numeric horizon instead uses the global-clock batch engine and reports
    right-censoring flags.
    """
    if horizon == "auto":
        tau = np.array(
            [
                thinned_tau0(fam, region, bc, q, seed, r, origin=origin, initial=initial)
                for r in range(replicas)
            ]
        )
        if not np.isfinite(tau).all():
            raise ParameterError("some replicas froze; choose an ergodic boundary")
        return tau, np.zeros(replicas, dtype=bool), math.inf
    tau, cens = batch_tau0(
        fam, region, bc, q, float(horizon), seed, replicas,
        origin=origin, initial=initial,
    )
    return tau, cens, float(horizon)


# ---------------------------------------------------------------------------
# front tracking for the oriented single-neighbour chain in one dimension


@dataclass
class FrontResult:
    q: float
    length: int
    horizon: float
    seed: int
    window: int
    series_t: np.ndarray
    series_x: np.ndarray
    moves: int
    v_hat: float
    p1_hat: float
    identity_gap: float
    se_combined: float
    se_v: float
    se_p1: float
    burn_in_time: float
    halted_early: bool

    @property
    def predicted_v(self) -> float:
        return -self.q + (1.0 - self.q) * self.p1_hat


def front_run(
    q: float,
    length: int,
    horizon: float,
    seed: int,
    window: int = 512,
    burn_in: float = 0.1,
    batches: int = 64,
) -> FrontResult:
    """Track the leftmost vacancy of the oriented chain started from one seed.

    Initial state: all occupied except the rightmost site.  The front can
    only step left (the site left of it empties at rate q) or right (the
    front refills, allowed only when its right neighbour is empty), so the
    drift obeys v = -q + (1-q) * P(site right of front empty).

    Only sites within `window` of the front are simulated; the zone farther
    right freezes in place.  Correlations of the environment seen from the
    front decay exponentially with distance, so the window only perturbs
    estimates far below Monte Carlo resolution, and the drift identity is
    exact for the simulated process regardless.  Rings at sites whose
    constraint is unsatisfied cannot change the state and are thinned away;
    the vacancy fraction right of the front is accumulated as an exact time
    average between events.
    """
    if not 0.0 < q < 1.0:
        raise ParameterError("q must lie strictly between 0 and 1")
    if length < 8:
        raise ParameterError("length must be at least 8")
    bits = bytearray([1]) * length
    bits[length - 1] = 0
    front = length - 1

    # active sites: right neighbour currently empty (boundary is occupied)
    pos = [-1] * length
    act = []

    def activate(x):
        if 0 <= x < length and pos[x] < 0:
            pos[x] = len(act)
            act.append(x)

    def deactivate(x):
        if 0 <= x < length and pos[x] >= 0:
            i = pos[x]
            last = act[-1]
            act[i] = last
            pos[last] = i
            act.pop()
            pos[x] = -1

    edge = length - 1  # rightmost simulated site
    activate(length - 2)

    def set_edge(new_edge):
        nonlocal edge
        new_edge = max(min(new_edge, length - 1), front + 2)
        if new_edge < edge:
            for x in range(new_edge + 1, edge + 1):
                deactivate(x)
        else:
            for x in range(edge + 1, new_edge + 1):
                if x + 1 < length and bits[x + 1] == 0:
                    activate(x)
        edge = new_edge

    kdt = derive_key(seed, "front-dt")
    kpick = derive_key(seed, "front-site")
    kcoin = derive_key(seed, "front-coin")

    t = 0.0
    k = 0
    moves = 0
    series_t = [0.0]
    series_x = [front]
    t_burn = burn_in * horizon
    occ_time = 0.0  # time-integral of 1{site right of front is empty}
    tracked = 0.0
    nb = max(2, batches)
    block_len = (horizon - t_burn) / nb
    blocks = [[0.0, 0.0, 0] for _ in range(nb)]  # [empty-time, span, net moves]
    halted = False

    def right_empty():
        return 1.0 if front + 1 < length and bits[front + 1] == 0 else 0.0

    chunk = 1 << 15
    buf_lo = -1
    dt_buf = pick_buf = coin_buf = None

    def refill(k0):
        nonlocal buf_lo, dt_buf, pick_buf, coin_buf
        buf_lo = k0
        ks = np.arange(k0, k0 + chunk, dtype=np.uint64)
        dt_buf = -np.log1p(-u64_to_uniform(values_at_np(kdt, ks)))
        pick_buf = values_at_np(kpick, ks)
        coin_buf = u64_to_uniform(values_at_np(kcoin, ks))

    def accumulate(upto, start):
        nonlocal occ_time, tracked
        span = upto - max(start, t_burn)
        if span <= 0:
            return
        ind = right_empty()
        occ_time += ind * span
        tracked += span
        b = min(nb - 1, int((max(start, t_burn) - t_burn) / block_len))
        blocks[b][0] += ind * span
        blocks[b][1] += span

    while True:
        rate = len(act)
        if rate == 0:
            halted = True
            break
        if k >= buf_lo + chunk or buf_lo < 0:
            refill(k)
        j = k - buf_lo
        t_next = t + dt_buf[j] / rate
        if t_next > horizon:
            accumulate(horizon, t)
            break
        accumulate(t_next, t)
        t = t_next
        site = act[int(pick_buf[j] % np.uint64(rate))]
        occupied = coin_buf[j] >= q
        k += 1
        new_bit = 1 if occupied else 0
        if bits[site] == new_bit:
            continue
        bits[site] = new_bit
        if new_bit == 0:
            activate(site - 1)
        else:
            deactivate(site - 1)
        if site == front and new_bit == 1:
            front += 1
            moves += 1
        elif site == front - 1 and new_bit == 0:
            front -= 1
            moves += 1
        else:
            continue
        series_t.append(t)
        series_x.append(front)
        if t > t_burn:
            b = min(nb - 1, int((t - t_burn) / block_len))
            blocks[b][2] += 1 if front > series_x[-2] else -1
        if front <= 1:
            halted = True
            break
        if front + window + 128 < edge or front + 2 > edge:
            set_edge(front + window)

    series_t = np.asarray(series_t)
    series_x = np.asarray(series_x, dtype=np.int64)
    assert np.all(np.abs(np.diff(series_x)) == 1), "front must move by single steps"

    after = series_t >= t_burn
    if after.sum() >= 2 and tracked > 0:
        xs = series_x[after]
        ts = series_t[after]
        v_hat = (xs[-1] - xs[0]) / (ts[-1] - ts[0])
        p1_hat = occ_time / tracked
    else:
        v_hat, p1_hat = 0.0, 0.0
    good = [b for b in blocks if b[1] > 0.5 * block_len]
    if len(good) >= 2:
        vs = np.array([b[2] / b[1] for b in good])
        ps = np.array([b[0] / b[1] for b in good])
        ds = vs - (-q + (1.0 - q) * ps)
        se_v = float(np.std(vs, ddof=1) / math.sqrt(len(good)))
        se_p = float(np.std(ps, ddof=1) / math.sqrt(len(good)))
        se_d = float(np.std(ds, ddof=1) / math.sqrt(len(good)))
    else:
        se_v = se_p = se_d = float("nan")
    identity_gap = v_hat - (-q + (1.0 - q) * p1_hat)
    return FrontResult(
        q, length, horizon, seed, window, series_t, series_x, moves,
        float(v_hat), float(p1_hat), float(identity_gap),
        se_d, se_v, se_p, t_burn, halted,
    )
