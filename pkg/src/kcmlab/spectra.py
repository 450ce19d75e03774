"""Exact finite-volume analysis: generator, relaxation, hitting, mixing.

States are integer-encoded configurations restricted to one ergodic
component (a closure fiber).  From a configuration, a site with satisfied
constraint flips to empty at rate q and to occupied at rate 1 - q, which is
resampling from Bernoulli(1 - q) at unit rate; detailed balance against the
product measure restricted to the component follows because constraints
never read their own site.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import NumericError, ParameterError, SizeError
from .family import UpdateFamily
from .lattice import BoundaryCondition, Configuration, Region
from .legalpath import (
    components,
    config_from_int,
    constraint_from_masks,
    int_from_config,
    site_rule_masks,
)

_DENSE_CAP = 4096
_MIX_CAP = 4096


@dataclass
class GeneratorModel:
    family: UpdateFamily | None  # None = unconstrained product dynamics
    region: Region
    bc: BoundaryCondition
    q: float
    states: np.ndarray  # int-encoded configurations of the component
    index: dict  # state int -> position
    mu: np.ndarray  # stationary weights, normalized on the component
    generator: sp.csr_matrix  # rows sum to zero exactly

    @property
    def size(self) -> int:
        return len(self.states)

    @property
    def degenerate(self) -> bool:
        return self.size < 2

    def vector_from_function(self, fn):
        """Evaluate a python function of Configuration on every state."""
        return np.array(
            [fn(config_from_int(self.region, int(s))) for s in self.states], dtype=float
        )


def _component_states(fam, region, bc, component_of):
    if fam is None:
        return list(range(1 << region.count))  # unconstrained chain is irreducible
    target = int_from_config(component_of)
    for cell in components(fam, region, bc):
        if target in cell:
            return cell
    raise RuntimeError("component enumeration missed the seed state")


def build(
    fam: UpdateFamily | None,
    region: Region,
    bc: BoundaryCondition,
    q: float,
    component_of: Configuration | None = None,
) -> GeneratorModel:
    """Generator on the ergodic component of the given configuration.

    family=None builds the unconstrained product chain (every constraint
    identically satisfied), the reference dynamics with unit spectral gap.
    """
    if not 0.0 < q < 1.0:
        raise ParameterError("q must lie strictly between 0 and 1")
    n = region.count
    if n > 20:
        raise SizeError("exact solver caps at 20 sites")
    if component_of is None:
        component_of = Configuration.all_occupied(region)
    states = _component_states(fam, region, bc, component_of)
    index = {s: i for i, s in enumerate(states)}
    masks = site_rule_masks(fam, region, bc) if fam is not None else None

    occ_counts = np.array([bin(s).count("1") for s in states], dtype=float)
    log_mu = occ_counts * math.log(1.0 - q) + (n - occ_counts) * math.log(q)
    mu = np.exp(log_mu - log_mu.max())
    mu /= mu.sum()

    rows, cols, vals = [], [], []
    diag = np.zeros(len(states))
    for i, s in enumerate(states):
        for site in range(n):
            if masks is not None and not constraint_from_masks(masks[site], s):
                continue
            t = s ^ (1 << site)
            j = index.get(t)
            if j is None:  # cannot happen: legal flips stay in the fiber
                raise RuntimeError("legal flip left the component")
            rate = q if (s >> site) & 1 else 1.0 - q
            rows.append(i)
            cols.append(j)
            vals.append(rate)
            diag[i] -= rate
    rows.extend(range(len(states)))
    cols.extend(range(len(states)))
    vals.extend(diag)
    gen = sp.csr_matrix(
        (vals, (rows, cols)), shape=(len(states), len(states)), dtype=float
    )
    return GeneratorModel(fam, region, bc, q, np.array(states), index, mu, gen)


def _symmetrized(model: GeneratorModel) -> sp.csr_matrix:
    d = np.sqrt(model.mu)
    inv = 1.0 / d
    return sp.csr_matrix(
        sp.diags(d) @ model.generator @ sp.diags(inv), dtype=float
    )


def spectral_gap(model: GeneratorModel, tol: float = 1e-10) -> float:
    """Smallest nonzero eigenvalue of the negated generator in L^2(mu)."""
    if model.degenerate:
        raise ParameterError("gap undefined on a single-state component")
    s = _symmetrized(model)
    a = (-(s + s.T) / 2.0).tocsc()  # exact symmetrization of rounding noise
    n = a.shape[0]
    if n <= _DENSE_CAP:
        eigs = np.linalg.eigvalsh(a.toarray())
        zero, gap = eigs[0], eigs[1]
        if abs(zero) > 1e-8 * max(1.0, abs(eigs[-1])):
            raise NumericError("constant mode not found", residual=abs(zero))
        return float(gap)
    v = np.sqrt(model.mu)
    v /= np.linalg.norm(v)
    shift = 2.0 * float(abs(a.diagonal()).max()) + 1.0
    deflated = a + shift * sp.csr_matrix(np.outer(v, v))
    try:
        vals = spla.eigsh(
            deflated, k=1, which="SA", tol=tol, maxiter=20000, return_eigenvectors=False
        )
    except spla.ArpackNoConvergence as exc:
        raise NumericError("eigensolver did not converge", residual=str(exc))
    return float(vals[0])


def relaxation_time(model: GeneratorModel, tol: float = 1e-10) -> float:
    """Inverse spectral gap of the component dynamics."""
    return 1.0 / spectral_gap(model, tol=tol)


def variance(model: GeneratorModel, f) -> float:
    f = np.asarray(f, dtype=float)
    mean = float(model.mu @ f)
    return float(model.mu @ (f - mean) ** 2)


def dirichlet(model: GeneratorModel, f) -> float:
    """Quadratic form: half the mu-weighted sum of rate * (flip difference)^2."""
    f = np.asarray(f, dtype=float)
    gen = model.generator.tocoo()
    total = 0.0
    for i, j, rate in zip(gen.row, gen.col, gen.data):
        if i != j:
            total += model.mu[i] * rate * (f[j] - f[i]) ** 2
    return 0.5 * total


def dirichlet_from_generator(model: GeneratorModel, f) -> float:
    """-mu(f * Lf); agrees with dirichlet() to rounding, kept as the identity check."""
    f = np.asarray(f, dtype=float)
    return float(-(model.mu * f) @ (model.generator @ f))


def mean_hitting_tau0(model: GeneratorModel, origin) -> float:
    """mu-averaged expected time until the origin site is empty.

    Solves the linear system L h = -1 off the target set {origin empty},
    h = 0 on it, then averages h against the component measure.
    """
    site = model.region.index(origin)
    target = (model.states >> site) & 1 == 0
    if not target.any():
        raise ParameterError("origin is never empty on this component")
    if target.all():
        return 0.0
    q_idx = np.flatnonzero(~target)
    sub = model.generator[q_idx][:, q_idx].tocsc()
    rhs = -np.ones(len(q_idx))
    if len(q_idx) <= _DENSE_CAP:
        h_q = np.linalg.solve(sub.toarray(), rhs)
    else:
        h_q = spla.spsolve(sub, rhs)
        res = float(np.abs(sub @ h_q - rhs).max())
        if res > 1e-10 * max(1.0, float(np.abs(h_q).max())):
            raise NumericError("hitting-time solve failed", residual=res)
    h = np.zeros(model.size)
    h[q_idx] = h_q
    return float(model.mu @ h)


def _semigroup_basis(model: GeneratorModel):
    """Spectral data of the symmetrized generator, cached on the model.

    The uniformized transition semigroup sum_k Poisson(rate*t, k) P^k with
    P = I + L/rate collapses mode by mode to exp(t*lambda_i) in the
    eigenbasis, so the series is summed in closed form with no truncation.
    """
    cached = getattr(model, "_semigroup", None)
    if cached is not None:
        return cached
    s = _symmetrized(model)
    a = ((s + s.T) / 2.0).toarray()
    lam, vecs = np.linalg.eigh(a)
    d = np.sqrt(model.mu)
    model._semigroup = (lam, vecs, d)
    return model._semigroup


def _tv_from_stationarity(model: GeneratorModel, t: float) -> float:
    """max over start states of total variation to mu at time t."""
    lam, vecs, d = _semigroup_basis(model)
    decay = np.exp(np.minimum(lam, 0.0) * t)
    # P_t = D^{-1/2} V e^{t lam} V^T D^{1/2}, rows are start distributions
    pt = (vecs * decay[None, :]) @ vecs.T
    pt *= d[None, :] / d[:, None]
    return float(0.5 * np.abs(pt - model.mu[None, :]).sum(axis=1).max())


def mixing_time(model: GeneratorModel, eps: float, rel_tol: float = 1e-9) -> float:
    """Smallest t with worst-case total variation distance to mu at most eps."""
    if model.size > _MIX_CAP:
        raise SizeError(f"mixing time caps at {_MIX_CAP} states")
    if not 0.0 < eps < 1.0:
        raise ParameterError("eps must be in (0, 1)")
    if model.degenerate:
        return 0.0
    if _tv_from_stationarity(model, 0.0) <= eps:
        return 0.0
    hi = 1.0 / max(1.0, float(-model.generator.diagonal().min()))
    while _tv_from_stationarity(model, hi) > eps:
        hi *= 2.0
        if hi > 1e12:
            raise NumericError("mixing time bisection diverged")
    lo = 0.0
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if _tv_from_stationarity(model, mid) > eps:
            lo = mid
        else:
            hi = mid
    return float(hi)


# ---------------------------------------------------------------------------
# nearest-vacancy test function for the one-dimensional two-way single-flip
# chain: exact window enumeration with edge constraints marginalized over
# the two outside neighbours, so the values are the infinite-volume ones for
# this local function.


def nearest_vacancy_profile(q: float, m: int):
    """Variance and Dirichlet form of f = distance to the nearest empty site.

    The window holds sites -m+1..m; f(w) = min{k >= 1 : w_k = 0 or
    w_{-k+1} = 0}.  On the fully occupied window the unseen tail is replaced
    by its conditional mean m+1 + (1-q)^2/(2q-q^2), i.e. f is the L^2
    projection of the infinite-volume function onto the window, which makes
    both quantities converge geometrically at rate (1-q)^(2m).  Returns
    (variance, dirichlet, var_limit, dir_limit) with limits
    (1-q)^2/(2q-q^2)^2 and q(1-q)^2/(1-q/2).
    """
    if not 0.0 < q < 1.0:
        raise ParameterError("q must lie strictly between 0 and 1")
    if not 1 <= m <= 12:
        raise ParameterError("half-width m must be in 1..12")
    nsites = 2 * m
    S = 1 << nsites
    states = np.arange(S, dtype=np.int64)
    bits = ((states[None, :] >> np.arange(nsites)[:, None]) & 1).astype(np.uint8)

    occ = bits.sum(axis=0)
    mu = (1.0 - q) ** occ * q ** (nsites - occ)

    def j_of(site):  # lattice site k in -m+1..m -> bit index
        return site + m - 1

    hit = np.zeros((m, S), dtype=bool)
    for k in range(1, m + 1):
        hit[k - 1] = (bits[j_of(k)] == 0) | (bits[j_of(-k + 1)] == 0)
    any_hit = hit.any(axis=0)
    beta = (1.0 - q) ** 2
    cap = (m + 1) + beta / (1.0 - beta)
    f = np.where(any_hit, hit.argmax(axis=0) + 1, cap).astype(float)

    var = float((mu * f * f).sum() - ((mu * f).sum()) ** 2)

    dir_total = 0.0
    for site in range(-m + 1, m + 1):
        j = j_of(site)
        s0 = states & ~(1 << j)
        s1 = states | (1 << j)
        delta = f[s0] - f[s1]
        left, right = site - 1, site + 1
        if left < -m + 1:
            c = 1.0 - (1.0 - q) * bits[j_of(right)]
        elif right > m:
            c = 1.0 - (1.0 - q) * bits[j_of(left)]
        else:
            c = ((bits[j_of(left)] == 0) | (bits[j_of(right)] == 0)).astype(float)
        dir_total += float((mu * c * q * (1.0 - q) * delta * delta).sum())

    var_limit = (1.0 - q) ** 2 / (2.0 * q - q * q) ** 2
    dir_limit = q * (1.0 - q) ** 2 / (1.0 - q / 2.0)
    return var, dir_total, var_limit, dir_limit
