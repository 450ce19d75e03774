"""Estimators and scaling fits shared by the Monte Carlo experiments.

Censored observations never enter a mean silently: the plain mean refuses
them and the Kaplan-Meier route must be chosen explicitly.  Fits are
ordinary least squares on transformed axes with measurement error
propagated into the slope uncertainty.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError

Z95 = 1.959963984540054  # two-sided 95% normal quantile
LAMBDA_2N = math.pi * math.pi / 18.0  # sharp constant of the 2-neighbour tail


def wilson_interval(successes: int, n: int, z: float = Z95):
    """Wilson score interval for a binomial proportion."""
    if n <= 0:
        raise ParameterError("need a positive sample size")
    p = successes / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return p, max(0.0, center - half), min(1.0, center + half)


def mean_uncensored(values, censored):
    """Plain mean, allowed only when nothing is censored."""
    censored = np.asarray(censored, dtype=bool)
    if censored.any():
        raise ParameterError(
            "censored samples present: use km_mean or raise the horizon"
        )
    return float(np.mean(values))


def km_mean(values, censored):
    """Kaplan-Meier restricted mean for right-censored samples.

    With no censoring this is the sample mean; otherwise it integrates the
    product-limit survival curve up to the largest observation.
    """
    values = np.asarray(values, dtype=float)
    censored = np.asarray(censored, dtype=bool)
    if values.size == 0:
        raise ParameterError("no samples")
    if not censored.any():
        return float(values.mean())
    order = np.argsort(values, kind="stable")
    v, c = values[order], censored[order]
    n = len(v)
    at_risk = n
    surv = 1.0
    mean = 0.0
    prev_t = 0.0
    i = 0
    while i < n:
        t = v[i]
        mean += surv * (t - prev_t)
        prev_t = t
        deaths = 0
        losses = 0
        while i < n and v[i] == t:
            if c[i]:
                losses += 1
            else:
                deaths += 1
            i += 1
        if deaths and at_risk:
            surv *= 1.0 - deaths / at_risk
        at_risk -= deaths + losses
    return float(mean)


def bootstrap_se(values, stat=np.median, n_resamples: int = 1000, seed: int = 0):
    """Nonparametric bootstrap standard error of a statistic."""
    values = np.asarray(values, dtype=float)
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, len(values), size=(n_resamples, len(values)))
    reps = stat(values[idx], axis=1)
    return float(np.std(reps, ddof=1))


def batch_means_se(values, batches: int = 50):
    """Standard error of the mean of a correlated series via batch means."""
    values = np.asarray(values, dtype=float)
    if len(values) < 2 * batches:
        batches = max(2, len(values) // 2)
    usable = (len(values) // batches) * batches
    chunks = values[:usable].reshape(batches, -1).mean(axis=1)
    return float(np.std(chunks, ddof=1) / math.sqrt(batches))


@dataclass
class FitReport:
    model: str
    slope: float
    slope_se: float
    intercept: float
    r2: float
    points: list = field(default_factory=list)
    valid: bool = True

    def to_dict(self):
        return {
            "model": self.model,
            "slope": self.slope,
            "slope_se": self.slope_se,
            "intercept": self.intercept,
            "r2": self.r2,
            "points": self.points,
            "valid": self.valid,
        }


def _ols_fit(model, xs, samples):
    qs = [s["q"] for s in samples]
    if len(set(qs)) < 4:
        raise ParameterError("need at least 4 distinct q values")
    for s in samples:
        frac = s.get("censored_frac", 0.0)
        if frac >= 0.05:
            raise ParameterError(
                f"censoring fraction {frac:.3f} at q={s['q']} invalidates the fit; "
                "raise the horizon"
            )
        if s["mean"] <= 0:
            raise ParameterError("mean times must be positive")
    x = np.asarray(xs, dtype=float)
    y = np.log(np.asarray([s["mean"] for s in samples], dtype=float))
    se_log = np.asarray(
        [s.get("se", 0.0) / s["mean"] for s in samples], dtype=float
    )
    n = len(x)
    xbar = x.mean()
    sxx = float(((x - xbar) ** 2).sum())
    if sxx == 0:
        raise ParameterError("degenerate q grid")
    slope = float(((x - xbar) * (y - y.mean())).sum() / sxx)
    intercept = float(y.mean() - slope * xbar)
    resid = y - (intercept + slope * x)
    rss = float((resid**2).sum())
    tss = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 if tss == 0 else 1.0 - rss / tss
    var_resid = (rss / (n - 2) / sxx) if n > 2 else 0.0
    w = (x - xbar) / sxx
    var_meas = float((w * w * se_log * se_log).sum())
    report = FitReport(
        model=model,
        slope=slope,
        slope_se=math.sqrt(var_resid + var_meas),
        intercept=intercept,
        r2=r2,
        points=[dict(s) for s in samples],
    )
    return report


def fit_power(samples) -> FitReport:
    """OLS of log mean time against log(1/q): slope is the power-law exponent.

    samples: iterable of dicts with keys q, mean, se and optionally n,
    censored_frac.
    """
    samples = [dict(s) for s in samples]
    xs = [math.log(1.0 / s["q"]) for s in samples]
    return _ols_fit("power-law", xs, samples)


def fit_explog2(samples) -> FitReport:
    """OLS of log mean time against log^2(1/q) (super-Arrhenius form)."""
    samples = [dict(s) for s in samples]
    xs = [math.log(1.0 / s["q"]) ** 2 for s in samples]
    return _ols_fit("exp-log-squared", xs, samples)


@dataclass
class TrendReport:
    points: list
    increasing: bool
    below_limit: bool
    limit: float = LAMBDA_2N

    def to_dict(self):
        return {
            "points": self.points,
            "increasing": self.increasing,
            "below_limit": self.below_limit,
            "limit": self.limit,
        }


def bp2n_trend(medians) -> TrendReport:
    """Trend statistic s(q) = q * log(median emptying time).

    Expects medians on a strictly decreasing q grid; checks that s
    increases as q decreases and stays below pi^2/18 (the finite-q
    correction to the sharp constant is negative).
    """
    medians = list(medians)
    if not medians:
        raise ParameterError("empty grid")
    qs = [q for q, _ in medians]
    if any(b >= a for a, b in zip(qs, qs[1:])):
        raise ParameterError("q grid must be strictly decreasing")
    points = []
    for q, med in medians:
        if med <= 0:
            raise ParameterError("medians must be positive")
        points.append({"q": q, "median": med, "s": q * math.log(med)})
    svals = [p["s"] for p in points]
    increasing = all(b > a for a, b in zip(svals, svals[1:])) if len(svals) > 1 else True
    below = all(s < LAMBDA_2N for s in svals)
    return TrendReport(points, increasing, below)
