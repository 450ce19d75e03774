"""Figure rendering for report outputs.

Every CLI report path can drop a PNG next to its delimited output; plots go
to files only (Agg backend), never to a screen.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def plot_tail(rows, path, title="survival of the origin"):
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    ts = [r["t"] for r in rows]
    est = [r["estimate"] for r in rows]
    lo = [r["estimate"] - r["ci_lo"] for r in rows]
    hi = [r["ci_hi"] - r["estimate"] for r in rows]
    ax.errorbar(ts, est, yerr=[lo, hi], fmt="o", capsize=3, label="Monte Carlo")
    exact = [r.get("exact_if_known") for r in rows]
    if all(e is not None for e in exact):
        ax.plot(ts, exact, "k--", lw=1, label="exact")
    ax.set_yscale("log")
    ax.set_xlabel("rounds t")
    ax.set_ylabel("P(origin occupied after t)")
    ax.set_title(title)
    ax.legend(frameon=False)
    return _save(fig, path)


def plot_scan(points, path, xmode="log_inv_q", title="emptying time scaling"):
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    qs = np.array([p["q"] for p in points])
    means = np.array([p["mean"] for p in points])
    ses = np.array([p.get("se", 0.0) for p in points])
    x = np.log(1.0 / qs) if xmode == "log_inv_q" else np.log(1.0 / qs) ** 2
    ax.errorbar(x, means, yerr=ses, fmt="o", capsize=3)
    ax.set_yscale("log")
    ax.set_xlabel("log(1/q)" if xmode == "log_inv_q" else "log^2(1/q)")
    ax.set_ylabel("mean emptying time")
    ax.set_title(title)
    return _save(fig, path)


def plot_fit(report, path):
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    pts = report.points
    qs = np.array([p["q"] for p in pts])
    y = np.log(np.array([p["mean"] for p in pts]))
    x = np.log(1.0 / qs)
    if report.model == "exp-log-squared":
        x = x**2
    ax.plot(x, y, "o", label="data")
    grid = np.linspace(x.min(), x.max(), 50)
    ax.plot(grid, report.intercept + report.slope * grid, "-",
            label=f"slope {report.slope:.3f} (R^2 {report.r2:.3f})")
    ax.set_xlabel("log(1/q)" if report.model == "power-law" else "log^2(1/q)")
    ax.set_ylabel("log mean time")
    ax.legend(frameon=False)
    return _save(fig, path)


def plot_trend(trend, path):
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    qs = [p["q"] for p in trend.points]
    s = [p["s"] for p in trend.points]
    ax.plot(qs, s, "o-", label="q log median")
    ax.axhline(trend.limit, color="k", ls="--", lw=1, label="sharp constant")
    ax.invert_xaxis()
    ax.set_xlabel("q")
    ax.set_ylabel("s(q)")
    ax.legend(frameon=False)
    return _save(fig, path)


def plot_front(result, path):
    fig, ax = plt.subplots(figsize=(5.6, 3.6))
    ax.plot(result.series_t, result.series_x, lw=0.7)
    ax.set_xlabel("time")
    ax.set_ylabel("front position")
    ax.set_title(
        f"v = {result.v_hat:.4f}, predicted {result.predicted_v:.4f} "
        f"(gap {result.identity_gap:+.4f})"
    )
    return _save(fig, path)


def plot_snapshot(cfg, path, title=""):
    fig, ax = plt.subplots(figsize=(4.6, 4.2))
    region = cfg.region
    if region.dim == 1:
        img = cfg.bits[None, :]
    else:
        img = cfg.bits.reshape(region.extent[1], region.extent[0])
    ax.imshow(img, cmap="gray_r", interpolation="nearest")
    ax.set_title(title)
    ax.set_xticks([])
    ax.set_yticks([])
    return _save(fig, path)
