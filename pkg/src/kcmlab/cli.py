"""Command-line interface: one binary, subcommands per engine.

Every run that writes outputs also records a manifest (resolved arguments,
seed, tool version, sha256 of each output), and `replay` re-executes a
manifest and verifies the digests byte for byte.  Reports are JSON, sample
tables are CSV; report paths can render a PNG figure next to the delimited
output.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import sys
import tempfile

import click
import numpy as np

from . import __version__
from .bootstrap import closure as bp_closure
from .bootstrap import mc_tail, tau0_two_neighbour_sample
from .classify import classify_report
from .eastcomb import enumerate_reach
from .errors import KcmlabError, NumericError, ParameterError
from .family import resolve as resolve_family
from .kcm import SimParams, front_run, simulate, tau0_scan
from .lattice import BoundaryCondition, Configuration, Region, dump_text, load_text
from .legalpath import path_to_flip
from .spectra import build, mean_hitting_tau0, mixing_time, relaxation_time
from .stats import bp2n_trend, fit_explog2, fit_power, km_mean


def _fmt(x):
    if isinstance(x, (np.floating, np.integer)):
        x = x.item()
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(c) for c in row])
    data = buf.getvalue()
    if path:
        with open(path, "w", encoding="utf8") as fh:
            fh.write(data)
    else:
        click.echo(data, nl=False)
    return data


def _write_json(path, doc):
    data = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if path:
        with open(path, "w", encoding="utf8") as fh:
            fh.write(data)
    else:
        click.echo(data, nl=False)
    return data


def _digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        h.update(fh.read())
    return h.hexdigest()


def _manifest(ctx, outputs):
    outputs = [o for o in outputs if o]
    if not outputs:
        return
    path = ctx.obj.get("manifest") or outputs[0] + ".manifest.json"
    doc = {
        "version": __version__,
        "subcommand": ctx.command_path.split(" ", 1)[-1],
        "seed": ctx.obj["seed"],
        "params": {k: v for k, v in sorted(ctx.params.items())
                   if isinstance(v, (int, float, str, bool, type(None)))},
        "argv": ctx.obj["argv"],
        "outputs": {o: _digest(o) for o in outputs},
    }
    with open(path, "w", encoding="utf8") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _parse_bc(text) -> BoundaryCondition:
    if text == "occupied":
        return BoundaryCondition.occupied()
    if text == "empty":
        return BoundaryCondition.empty()
    if text.startswith("file:"):
        with open(text[5:], "r", encoding="utf8") as fh:
            entries = json.load(fh)
        return BoundaryCondition.explicit({tuple(site): bit for site, bit in entries})
    raise ParameterError("bc must be occupied, empty, or file:<path>")


def _parse_size(text) -> Region:
    parts = [int(p) for p in text.split(",")]
    if len(parts) == 1:
        return Region.line(parts[0])
    if len(parts) == 2:
        return Region.box(parts[0], parts[1])
    raise ParameterError("size must be N or N,M")


def _out_option(fn):
    return click.option("--out", "out_override", type=click.Path(), default=None,
                        help="output path (overrides the group-level --out)")(fn)


def _resolve_out(ctx, out_override):
    return out_override if out_override is not None else ctx.obj["out"]


def _family_options(fn):
    fn = click.option("--family", "family_name", help="catalog model name")(fn)
    fn = click.option("--family-file", "family_file", type=click.Path(exists=True),
                      help="JSON update-family file")(fn)
    return fn


def _resolve_family(family_name, family_file):
    if bool(family_name) == bool(family_file):
        raise ParameterError("give exactly one of --family / --family-file")
    if family_file:
        return resolve_family(family_file, is_file=True)
    return resolve_family(family_name)


class _RootGroup(click.Group):
    """Group that remembers the raw invocation for manifest replay."""

    def make_context(self, info_name, args, parent=None, **extra):
        argv = list(args)
        ctx = super().make_context(info_name, args, parent=parent, **extra)
        ctx.meta["argv"] = argv
        return ctx


@click.group(cls=_RootGroup)
@click.version_option(__version__)
@click.option("--seed", type=int, default=0, show_default=True, help="master seed")
@click.option("--threads", type=int, default=0, help="worker pool size (0 = auto)")
@click.option("--out", "out", type=click.Path(), default=None, help="primary output path")
@click.option("--format", "fmt", type=click.Choice(["json", "text", "csv"]), default=None)
@click.option("--manifest", type=click.Path(), default=None, help="manifest path override")
@click.pass_context
def main(ctx, seed, threads, out, fmt, manifest):
    """Bootstrap percolation and kinetically constrained model laboratory."""
    ctx.obj = {
        "seed": seed,
        "threads": threads,
        "out": out,
        "fmt": fmt,
        "manifest": manifest,
        "argv": ctx.meta.get("argv", sys.argv[1:]),
    }


@main.command("classify")
@_family_options
@click.option("--window", type=int, default=None, help="difficulty search window")
@click.option("--budget", type=int, default=4, show_default=True, help="max helper set size")
@click.option("--format", "fmt", type=click.Choice(["json", "text"]), default="json")
@_out_option
@click.pass_context
def classify_cmd(ctx, family_name, family_file, window, budget, fmt, out_override):
    """Stable directions, difficulties, universality class, exponents."""
    fam = _resolve_family(family_name, family_file)
    rep = classify_report(fam, window=window, budget=budget)
    out = _resolve_out(ctx, out_override)
    if fmt == "json" or (ctx.obj["fmt"] == "json"):
        _write_json(out, rep)
    else:
        lines = [f"family: {rep['family']} (dim {rep['dim']})"]
        if rep["dim"] == 1:
            lines.append(f"class: {rep['class']}")
        else:
            lines.append(f"rough class: {rep['rough']}")
            lines.append(f"alpha: {rep['alpha']}")
            if rep["refined"]:
                lines.append(f"refined: {rep['refined']}")
                lines.append(f"exponents (beta,gamma,delta): {rep['exponents']}")
            lines.append(f"difficulties: {rep['difficulties']}")
        text = "\n".join(lines) + "\n"
        if out:
            with open(out, "w", encoding="utf8") as fh:
                fh.write(text)
        else:
            click.echo(text, nl=False)
    _manifest(ctx, [out])


@main.group("bp")
def bp_group():
    """Bootstrap percolation engines."""


@bp_group.command("closure")
@_family_options
@click.option("--input", "input_path", type=click.Path(exists=True), required=True)
@click.option("--bc", default="occupied", show_default=True)
@_out_option
@click.pass_context
def bp_closure_cmd(ctx, family_name, family_file, input_path, bc, out_override):
    """Closure of a configuration file; writes the fixpoint configuration."""
    fam = _resolve_family(family_name, family_file)
    with open(input_path, "r", encoding="utf8") as fh:
        cfg = load_text(fh.read())
    res = bp_closure(fam, cfg, _parse_bc(bc))
    out = _resolve_out(ctx, out_override)
    text = dump_text(res.closure)
    if out:
        with open(out, "w", encoding="utf8") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)
    click.echo(f"rounds: {res.rounds}", err=True)
    _manifest(ctx, [out])


@bp_group.command("tail")
@_family_options
@click.option("--q", type=float, required=True)
@click.option("--t", "ts", required=True, help="comma-separated round counts")
@click.option("--replicas", type=int, default=100_000, show_default=True)
@click.option("--seed", type=int, default=None, help="override master seed")
@click.option("--plot", type=click.Path(), default=None, help="render a PNG figure")
@click.option("--format", "fmt", type=click.Choice(["csv"]), default="csv", show_default=True)
@_out_option
@click.pass_context
def bp_tail_cmd(ctx, family_name, family_file, q, ts, replicas, seed, plot, fmt, out_override):
    """Monte Carlo survival of the origin with Wilson intervals."""
    fam = _resolve_family(family_name, family_file)
    seed = ctx.obj["seed"] if seed is None else seed
    rows = mc_tail(fam, q, [int(t) for t in ts.split(",")], replicas, seed)
    out = _resolve_out(ctx, out_override)
    _write_csv(
        out,
        ["t", "estimate", "ci_lo", "ci_hi", "exact_if_known"],
        [
            [r["t"], r["estimate"], r["ci_lo"], r["ci_hi"],
             "" if r["exact_if_known"] is None else repr(r["exact_if_known"])]
            for r in rows
        ],
    )
    outputs = [out]
    if plot:
        from .report import plot_tail

        outputs.append(plot_tail(rows, plot))
    _manifest(ctx, outputs)


@bp_group.command("trend")
@click.option("--q-grid", default="0.12,0.10,0.08", show_default=True)
@click.option("--replicas", type=int, default=500, show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--plot", type=click.Path(), default=None)
@_out_option
@click.pass_context
def bp_trend_cmd(ctx, q_grid, replicas, seed, plot, out_override):
    """Two-neighbour emptying-time trend statistic q log(median)."""
    seed = ctx.obj["seed"] if seed is None else seed
    medians = []
    for q in (float(s) for s in q_grid.split(",")):
        taus = [tau0_two_neighbour_sample(q, seed, r) for r in range(replicas)]
        taus = [t for t in taus if t is not None]
        medians.append((q, float(np.median(taus))))
    trend = bp2n_trend(medians)
    out = _resolve_out(ctx, out_override)
    _write_json(out, trend.to_dict())
    outputs = [out]
    if plot:
        from .report import plot_trend

        outputs.append(plot_trend(trend, plot))
    _manifest(ctx, outputs)


@main.group("kcm")
def kcm_group():
    """Continuous-time constrained dynamics."""


@kcm_group.command("run")
@_family_options
@click.option("--size", required=True, help="N or N,M")
@click.option("--bc", default="occupied", show_default=True)
@click.option("--q", type=float, required=True)
@click.option("--T", "horizon", type=float, required=True)
@click.option("--seed", type=int, default=None)
@click.option("--snapshots", default="", help="comma-separated snapshot times")
@click.option("--initial", default="product", show_default=True,
              help="product[:q0] | occupied | file:<path>")
@click.option("--origin", default=None, help="site x[,y] whose hitting times are tracked")
@click.option("--plot", type=click.Path(), default=None,
              help="render the final configuration to a PNG")
@_out_option
@click.pass_context
def kcm_run_cmd(ctx, family_name, family_file, size, bc, q, horizon, seed, snapshots,
                initial, origin, plot, out_override):
    """One trajectory; writes a JSON record."""
    fam = _resolve_family(family_name, family_file)
    region = _parse_size(size)
    seed = ctx.obj["seed"] if seed is None else seed
    if initial == "product":
        init = ("product", None)
    elif initial.startswith("product:"):
        init = ("product", float(initial.split(":", 1)[1]))
    elif initial == "occupied":
        init = ("except", [])
    elif initial.startswith("file:"):
        with open(initial[5:], "r", encoding="utf8") as fh:
            init = ("explicit", load_text(fh.read()))
    else:
        raise ParameterError("initial must be product[:q0], occupied, or file:<path>")
    snaps = tuple(float(s) for s in snapshots.split(",") if s.strip())
    origin_site = tuple(int(c) for c in origin.split(",")) if origin else None
    params = SimParams(fam, region, _parse_bc(bc), q, horizon, seed, init, 0, snaps)
    rec = simulate(params, origin=origin_site)
    doc = {
        "family": fam.name or "custom",
        "size": list(region.extent),
        "bc": bc,
        "q": q,
        "T": horizon,
        "seed": seed,
        "tau0": rec.tau0,
        "tau1": rec.tau1,
        "tau_vee": rec.tau_vee,
        "event_count": rec.event_count,
        "final": dump_text(rec.final),
        "snapshots": [{"t": t, "config": dump_text(c)} for t, c in rec.snapshots],
    }
    out = _resolve_out(ctx, out_override)
    _write_json(out, doc)
    outputs = [out]
    if plot:
        from .report import plot_snapshot

        outputs.append(plot_snapshot(rec.final, plot, title=f"t = {horizon:g}"))
    _manifest(ctx, outputs)


@kcm_group.command("scan")
@_family_options
@click.option("--size", required=True)
@click.option("--bc", default="empty", show_default=True)
@click.option("--q-grid", required=True, help="comma-separated vacancy densities")
@click.option("--replicas", type=int, default=2000, show_default=True)
@click.option("--observable", type=click.Choice(["tau0"]), default="tau0")
@click.option("--seed", type=int, default=None)
@click.option("--T", "horizon", default="auto", show_default=True,
              help="'auto' (run to the hit, no censoring) or a time horizon")
@click.option("--origin", default=None)
@click.option("--plot", type=click.Path(), default=None)
@_out_option
@click.pass_context
def kcm_scan_cmd(ctx, family_name, family_file, size, bc, q_grid, replicas, observable,
                 seed, horizon, origin, plot, out_override):
    """Replica sweep of hitting times over a q grid; CSV rows per replica."""
    fam = _resolve_family(family_name, family_file)
    region = _parse_size(size)
    seed = ctx.obj["seed"] if seed is None else seed
    origin_site = tuple(int(c) for c in origin.split(",")) if origin else None
    hz = horizon if horizon == "auto" else float(horizon)
    rows = []
    summary = []
    for q in (float(s) for s in q_grid.split(",")):
        tau, cens, _ = tau0_scan(fam, region, _parse_bc(bc), q, replicas, seed,
                                 horizon=hz, origin=origin_site)
        for r in range(replicas):
            rows.append([q, r, tau[r], int(cens[r])])
        mean = km_mean(tau, cens) if cens.any() else float(tau.mean())
        summary.append({
            "q": q,
            "mean": mean,
            "se": float(tau.std(ddof=1) / math.sqrt(len(tau))),
            "n": replicas,
            "censored_frac": float(cens.mean()),
        })
    out = _resolve_out(ctx, out_override)
    _write_csv(out, ["q", "replica", "tau0", "censored"], rows)
    outputs = [out]
    if plot:
        from .report import plot_scan

        outputs.append(plot_scan(summary, plot))
    _manifest(ctx, outputs)


@kcm_group.command("front")
@click.option("--q", type=float, required=True)
@click.option("--length", type=int, default=4000, show_default=True)
@click.option("--T", "horizon", type=float, required=True)
@click.option("--seed", type=int, default=None)
@click.option("--window", type=int, default=512, show_default=True)
@click.option("--plot", type=click.Path(), default=None)
@_out_option
@click.pass_context
def kcm_front_cmd(ctx, q, length, horizon, seed, window, plot, out_override):
    """Leftmost-vacancy front of the oriented chain; series CSV plus summary."""
    seed = ctx.obj["seed"] if seed is None else seed
    res = front_run(q, length, horizon, seed, window=window)
    out = _resolve_out(ctx, out_override)
    _write_csv(out, ["t", "x"], list(zip(res.series_t.tolist(), res.series_x.tolist())))
    summary = {
        "q": q, "length": length, "T": horizon, "seed": seed, "window": window,
        "moves": res.moves, "v_hat": res.v_hat, "p1_hat": res.p1_hat,
        "predicted_v": res.predicted_v, "identity_gap": res.identity_gap,
        "se_combined": res.se_combined, "halted_early": res.halted_early,
    }
    click.echo(json.dumps(summary, sort_keys=True), err=True)
    outputs = [out]
    if out:
        sumpath = out + ".summary.json"
        _write_json(sumpath, summary)
        outputs.append(sumpath)
    if plot:
        from .report import plot_front

        outputs.append(plot_front(res, plot))
    _manifest(ctx, outputs)


@main.command("path")
@_family_options
@click.option("--bc", default="occupied", show_default=True)
@click.option("--input", "input_path", type=click.Path(exists=True), required=True)
@click.option("--flip", "flip_site", required=True, help="site x or x,y to flip")
@_out_option
@click.pass_context
def path_cmd(ctx, family_name, family_file, bc, input_path, flip_site, out_override):
    """Legal path realizing a single flip; step lines `coords newbit`."""
    fam = _resolve_family(family_name, family_file)
    with open(input_path, "r", encoding="utf8") as fh:
        cfg = load_text(fh.read())
    site = tuple(int(c) for c in flip_site.split(","))
    path = path_to_flip(fam, cfg, _parse_bc(bc), site)
    out = _resolve_out(ctx, out_override)
    if path is None:
        click.echo("unreachable")
        sys.exit(0)
    text = "\n".join(path.dump_lines()) + "\n"
    if out:
        with open(out, "w", encoding="utf8") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)
    _manifest(ctx, [out])


@main.command("spectra")
@_family_options
@click.option("--size", required=True)
@click.option("--bc", default="empty", show_default=True)
@click.option("--q", type=float, required=True)
@click.option("--component-of", "component_of", default="one", show_default=True,
              help="one | zero | file:<path>")
@click.option("--report", "report_spec", default="trel", show_default=True,
              help="comma list from trel, tau0, tmix:<eps>")
@click.option("--unconstrained", is_flag=True,
              help="reference product chain (every constraint satisfied)")
@_out_option
@click.pass_context
def spectra_cmd(ctx, family_name, family_file, size, bc, q, component_of, report_spec,
                unconstrained, out_override):
    """Exact component solvers: relaxation, hitting, mixing."""
    fam = None if unconstrained else _resolve_family(family_name, family_file)
    region = _parse_size(size)
    if component_of == "one":
        seedcfg = Configuration.all_occupied(region)
    elif component_of == "zero":
        seedcfg = Configuration.all_empty(region)
    elif component_of.startswith("file:"):
        with open(component_of[5:], "r", encoding="utf8") as fh:
            seedcfg = load_text(fh.read())
    else:
        raise ParameterError("component-of must be one, zero, or file:<path>")
    model = build(fam, region, _parse_bc(bc), q, seedcfg)
    doc = {"q": q, "size": list(region.extent), "component_size": model.size}
    for item in report_spec.split(","):
        item = item.strip()
        if item == "trel":
            doc["trel"] = relaxation_time(model)
        elif item == "tau0":
            doc["tau0_mean"] = mean_hitting_tau0(model, region.center())
        elif item.startswith("tmix:"):
            eps = float(item.split(":", 1)[1])
            doc[f"tmix_{eps}"] = mixing_time(model, eps)
        else:
            raise ParameterError(f"unknown report item {item!r}")
    out = _resolve_out(ctx, out_override)
    _write_json(out, doc)
    _manifest(ctx, [out])


@main.command("east-enum")
@click.option("--n", "budget", type=int, required=True)
@click.option("--witness", type=click.Path(), default=None,
              help="write the deepest-reach legal path here")
@_out_option
@click.pass_context
def east_enum_cmd(ctx, budget, witness, out_override):
    """Exhaustive vacancy-budget reachability; counts CSV `k,count`."""
    res = enumerate_reach(budget)
    out = _resolve_out(ctx, out_override)
    _write_csv(out, ["k", "count"], list(enumerate(res.counts)))
    click.echo(f"ell: {res.ell}", err=True)
    outputs = [out]
    if witness:
        with open(witness, "w", encoding="utf8") as fh:
            fh.write("\n".join(res.witness.dump_lines()) + "\n")
        outputs.append(witness)
    _manifest(ctx, outputs)


@main.command("fit")
@click.option("--model", type=click.Choice(["power", "explog2"]), required=True)
@click.option("--input", "input_path", type=click.Path(exists=True), required=True,
              help="scan CSV with columns q,replica,tau0,censored")
@click.option("--plot", type=click.Path(), default=None)
@_out_option
@click.pass_context
def fit_cmd(ctx, model, input_path, plot, out_override):
    """Scaling fit over a scan CSV; emits a FitReport JSON."""
    per_q = {}
    with open(input_path, "r", encoding="utf8") as fh:
        for row in csv.DictReader(fh):
            per_q.setdefault(float(row["q"]), []).append(
                (float(row["tau0"]), bool(int(row["censored"])))
            )
    samples = []
    for q in sorted(per_q, reverse=True):
        vals = np.array([v for v, _ in per_q[q]])
        cens = np.array([c for _, c in per_q[q]])
        mean = km_mean(vals, cens) if cens.any() else float(vals.mean())
        samples.append({
            "q": q,
            "mean": mean,
            "se": float(vals.std(ddof=1) / math.sqrt(len(vals))),
            "n": len(vals),
            "censored_frac": float(cens.mean()),
        })
    rep = fit_power(samples) if model == "power" else fit_explog2(samples)
    out = _resolve_out(ctx, out_override)
    _write_json(out, rep.to_dict())
    outputs = [out]
    if plot:
        from .report import plot_fit

        outputs.append(plot_fit(rep, plot))
    _manifest(ctx, outputs)


@main.command("replay")
@click.argument("manifest_path", type=click.Path(exists=True))
@click.pass_context
def replay_cmd(ctx, manifest_path):
    """Re-run a manifest and verify byte-identical outputs."""
    with open(manifest_path, "r", encoding="utf8") as fh:
        doc = json.load(fh)
    if doc.get("version") != __version__:
        raise ParameterError(
            f"manifest version {doc.get('version')} != tool version {__version__}"
        )
    argv = list(doc["argv"])
    mapping = {}
    with tempfile.TemporaryDirectory() as tmp:
        for i, old in enumerate(doc["outputs"]):
            mapping[old] = os.path.join(tmp, f"out{i}" + os.path.splitext(old)[1])
        argv = [mapping.get(a, a) for a in argv]
        runner_ctx = main.make_context("kcmlab", argv, resilient_parsing=False)
        with runner_ctx:
            main.invoke(runner_ctx)
        for old, new in mapping.items():
            if not os.path.exists(new):
                raise ParameterError(f"replay produced no output for {old}")
            if _digest(new) != doc["outputs"][old]:
                raise KcmlabError(f"digest mismatch for {old}")
    click.echo("replay ok: all digests match")


def run():
    try:
        main(standalone_mode=False)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except click.exceptions.Abort:
        sys.exit(1)
    except click.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        sys.exit(2)
    except ParameterError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    except NumericError as exc:
        click.echo(f"numeric error: {exc}", err=True)
        sys.exit(3)
    except KcmlabError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    run()
