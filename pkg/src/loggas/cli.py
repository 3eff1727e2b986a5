"""Experiment runner: declarative JSON configs, seeded runs, reports.

Usage:
    loggas <kind> --config cfg.json [--seed S] [--workers W] [--out DIR]
    loggas report <directory>

Every run echoes its resolved config into the output directory and writes
plain CSV/JSON artifacts.  Data files are byte-identical across reruns with
the same (config, seed, workers): floats are serialized with repr, JSON
with sorted keys, and wall time lives in a separate meta.json outside the
determinism contract.  Exit codes: 0 all verdicts pass, 2 any fail,
3 inconclusive only, 64 config error, 66 empty report directory,
70 runtime failure.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import kernel as kernel_mod
from . import __version__
from .errors import ConfigurationError, LoggasError
from .gibbs import ChainConfig, entropy_rates
from .kernel import (Domain, free_log_kernel, series_tail_bound_1d,
                     torus_log_kernel, torus_log_closed_form_1d, zero_kernel,
                     verify_besov, verify_log_bound, verify_superharmonicity)
from .measure import (atomic_measure, single_mode_measure, two_bump_measure,
                      uniform_measure)
from .moments import (center_table, count_multiindices, count_restricted,
                      enumerate_multiindices, classify, moment_mc,
                      moment_oracle, max_nonrestricted_term,
                      verify_corineq_scaling)
from .dynamics import (PdeState, modulated_energy_sweep, mv_solve,
                       simulate_sde)
from .energy import interaction_energy, Configuration
from .partition import sweep_partition, trend_flatness
from .potentials import potential_from_config
from .streams import root_stream, substream, generator

EXIT_OK, EXIT_FAIL, EXIT_INCONCLUSIVE = 0, 2, 3
EXIT_CONFIG, EXIT_EMPTY, EXIT_RUNTIME = 64, 66, 70


# -- config handling ----------------------------------------------------------


def _reject_unknown(section: dict, allowed: set, where: str):
    unknown = set(section) - allowed
    if unknown:
        raise ConfigurationError(
            f"unknown config keys in {where}: {sorted(unknown)}")


def build_kernel(spec: dict):
    _reject_unknown(spec, {"family", "d", "cutoff", "semigroup_order",
                           "radius"}, "kernel")
    family = spec.get("family", "torus-log")
    d = int(spec.get("d", 2))
    if family == "torus-log":
        k = torus_log_kernel(d, spec.get("cutoff"))
    elif family == "free-log":
        k = free_log_kernel(d, spec.get("radius", 1.0))
    elif family == "zero":
        k = zero_kernel(d)
    else:
        raise ConfigurationError(f"unknown kernel family {family!r}")
    declared = spec.get("semigroup_order")
    if declared is not None and declared != k.semigroup_order:
        raise ConfigurationError(
            f"semigroup_order {declared!r} inconsistent with d={d} "
            f"(must be {k.semigroup_order!r})")
    return k


def build_measure(spec: dict, domain: Domain):
    _reject_unknown(spec, {"kind", "a", "cells", "centers", "sigma",
                           "weights", "atoms"}, "measure")
    kind = spec.get("kind", "uniform")
    if kind == "uniform":
        return uniform_measure(domain)
    if kind == "single-mode":
        return single_mode_measure(domain, spec.get("a", 0.5),
                                   spec.get("cells", 64))
    if kind == "two-bump":
        return two_bump_measure(domain, tuple(spec.get("centers", (0.25, 0.75))),
                                spec.get("sigma", 0.08),
                                tuple(spec.get("weights", (0.5, 0.5))),
                                spec.get("cells", 64))
    if kind == "atomic":
        return atomic_measure(domain, spec["atoms"], spec["weights"])
    raise ConfigurationError(f"unknown measure kind {kind!r}")


TOP_KEYS = {"kind", "seed", "workers", "out", "kernel", "measure",
            "potential", "params"}


def load_config(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config: {exc}")
    try:
        config = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(
            f"config parse error at line {exc.lineno}, column {exc.colno}: "
            f"{exc.msg}")
    if not isinstance(config, dict):
        raise ConfigurationError("config must be a JSON object")
    _reject_unknown(config, TOP_KEYS, "top level")
    if "kind" not in config:
        raise ConfigurationError("config needs a 'kind'")
    if config["kind"] not in RUNNERS:
        raise ConfigurationError(f"unknown experiment kind {config['kind']!r}")
    config.setdefault("seed", 0)
    config.setdefault("workers", int(os.environ.get("LOGGAS_WORKERS", "1")))
    config.setdefault("params", {})
    return config


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


# -- artifact writing ---------------------------------------------------------


def write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v
                             for v in row])


def write_json(path: Path, obj):
    path.write_text(json.dumps(obj, sort_keys=True, indent=2,
                               default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


# -- experiment runners -------------------------------------------------------


def _run_kernel_verify(config, outdir, stream):
    params = config["params"]
    _reject_unknown(params, {"exactness_points", "exactness_cutoff",
                             "log_bound_epsilons", "besov_p",
                             "besov_epsilons", "superharm_epsilons",
                             "superharm_free_epsilons", "grid_resolution"},
                    "params")
    verdicts = {}
    files = []
    k = build_kernel(config.get("kernel", {"family": "torus-log", "d": 2}))

    npts = params.get("exactness_points", 64)
    cutoff = params.get("exactness_cutoff", 64)
    k1 = torus_log_kernel(1, cutoff)
    xs = (np.arange(npts) + 0.5) / npts
    series = k1.displacement(xs[:, None], 0.0)
    closed = torus_log_closed_form_1d(xs)
    bound = series_tail_bound_1d(xs, cutoff)
    err = np.abs(series - closed)
    verdicts["exactness"] = "pass" if bool(np.all(err <= bound)) else "fail"
    write_csv(outdir / "exactness.csv", ["x", "series", "closed_form", "bound"],
              list(zip(xs.tolist(), series.tolist(), closed.tolist(),
                       bound.tolist())))
    files.append("exactness.csv")

    eps_lb = params.get("log_bound_epsilons", [2.0**-j for j in range(4, 13, 2)])
    rep = verify_log_bound(k, eps_lb)
    spread = rep.fitted_exponents.get("log_bound_ratio_spread", math.inf)
    verdicts["log_bound"] = "pass" if spread <= 3.0 else "fail"
    write_csv(outdir / "log_bound.csv", ["eps", "diagonal", "ratio"],
              [(e, d, r) for (e, d), r in zip(rep.rows(),
               rep.fitted_exponents["log_bound_ratios"])])
    files.append("log_bound.csv")

    eps_bes = params.get("besov_epsilons", [2.0**-j for j in range(5, 11)])
    p = params.get("besov_p", 4)
    measure = build_measure(config.get("measure", {"kind": "uniform"}),
                            k.domain)
    rep_b = verify_besov(k, measure, p, eps_bes)
    kappa = rep_b.fitted_exponents.get("kappa")
    verdicts["besov"] = "pass" if kappa is not None and 0.5 <= kappa <= 1.5 \
        else "fail"
    write_csv(outdir / "besov.csv", ["eps", "norm_p"], rep_b.rows())
    files.append("besov.csv")

    eps_sh = params.get("superharm_epsilons", [2.0**-34, 2.0**-40])
    res = params.get("grid_resolution", 512)
    rep_s = verify_superharmonicity(k, eps_sh, res)
    ok = all(m >= -1e-6 for m in rep_s.superharm_minima)
    kf = free_log_kernel(k.domain.dim)
    eps_free = params.get("superharm_free_epsilons",
                          [2.0**-4, 2.0**-6, 2.0**-8])
    rep_f = verify_superharmonicity(kf, eps_free, min(res, 128))
    ok_free = all(m >= -1e-6 for m in rep_f.superharm_minima)
    verdicts["superharmonicity"] = "pass" if (ok and ok_free) else "fail"
    write_csv(outdir / "superharm.csv", ["eps", "grid_min", "family"],
              [(e, m, "torus-log") for e, m in rep_s.rows()]
              + [(e, m, "free-log") for e, m in rep_f.rows()])
    files.append("superharm.csv")
    summary = {"fitted": {"log_bound": rep.fitted_exponents,
                          "besov": rep_b.fitted_exponents,
                          "superharm": rep_s.fitted_exponents}}
    return verdicts, files, summary


def _run_zsweep(config, outdir, stream):
    params = config["params"]
    _reject_unknown(params, {"n_values", "betas", "samples", "eps"}, "params")
    k = build_kernel(config.get("kernel", {"family": "torus-log", "d": 2}))
    measure = build_measure(config.get("measure", {"kind": "uniform"}),
                            k.domain)
    n_values = params.get("n_values", [2, 4, 8, 16, 32, 64, 128, 256])
    betas = params.get("betas", [0.5, 1.0, 2.0])
    samples = params.get("samples", 100_000)
    eps = params.get("eps", 0.0)
    estimates = sweep_partition(k, measure, n_values, betas, samples,
                                substream(stream, "zsweep"), eps)
    rows = [e.row(seed=config["seed"]) for e in estimates]
    write_csv(outdir / "zsweep.csv",
              ["n", "beta", "eps", "samples", "mean", "ci", "ess", "seed"],
              rows)
    verdicts = {}
    summary = {"betas": {}}
    for beta in betas:
        per = [e for e in estimates if e.beta == beta]
        trend = trend_flatness(per)
        lower_ok = all(e.mean >= 1.0 - e.ci_halfwidth for e in per)
        ess_ok = all(e.ess >= 50 for e in per)
        verdicts[f"flat_beta_{beta:g}"] = "pass" if trend["flat"] else "fail"
        verdicts[f"lower_bound_beta_{beta:g}"] = "pass" if lower_ok else "fail"
        verdicts[f"ess_beta_{beta:g}"] = "pass" if ess_ok else "fail"
        summary["betas"][f"{beta:g}"] = trend
    if len(betas) >= 3:
        logz = {b: [math.log(e.mean) for e in estimates if e.beta == b][-1]
                for b in betas}
        bs = sorted(betas)
        summary["logz_convexity_diag"] = {
            "betas": bs, "log_z_largest_n": [logz[b] for b in bs],
            "increasing": bool(logz[bs[0]] <= logz[bs[1]] <= logz[bs[2]])}
    return verdicts, ["zsweep.csv"], summary


def _run_moments_verify(config, outdir, stream):
    params = config["params"]
    _reject_unknown(params, {"pairs", "samples", "eps", "corineq"}, "params")
    pairs = [tuple(p) for p in params.get("pairs",
                                          [(2, 1), (2, 2), (3, 2), (3, 3),
                                           (4, 2)])]
    domain = Domain("torus", 1)
    mspec = config.get("measure",
                       {"kind": "atomic", "atoms": [[0.05], [0.35], [0.75]],
                        "weights": [0.3, 0.45, 0.25]})
    measure = build_measure(mspec, domain)
    rng = generator(substream(stream, "table"))
    m = measure.weights.size
    raw = rng.standard_normal((m, m))
    table = center_table(raw + raw.T, measure.weights)
    verdicts = {}
    count_rows = []
    vanish_ok, bound_ok = True, True
    for n, p in pairs:
        worst = max_nonrestricted_term(table, measure, n, p)
        vanish_ok &= worst < 1e-12
        for ell in range(1, p + 1):
            cnt = count_restricted(n, p, ell)
            bound = math.comb(n, ell) * (ell * ell - ell) ** p
            bound_ok &= cnt <= bound
            count_rows.append((n, p, ell, cnt, bound))
        for index in enumerate_multiindices(n, p):
            prof = classify(index)
            if prof.restricted:
                bound_ok &= prof.multiplicities.max() <= 2 * p - 2 * (prof.act - 1)
    verdicts["nonrestricted_vanish"] = "pass" if vanish_ok else "fail"
    verdicts["cardinality_bounds"] = "pass" if bound_ok else "fail"
    write_csv(outdir / "restricted_counts.csv",
              ["n", "p", "ell", "count", "bound"], count_rows)

    samples = params.get("samples", 100_000)
    oracle_rows = []
    oracle_ok = True
    for n, p in pairs:
        exact = moment_oracle(table, measure, n, p)
        est, se = moment_mc(table, measure, n, p, samples,
                            substream(stream, "mc", n, p))
        z = abs(est - exact) / se if se > 0 else 0.0
        oracle_ok &= z <= 4.0
        oracle_rows.append((n, p, exact, est, se, z))
    verdicts["oracle_vs_mc"] = "pass" if oracle_ok else "fail"
    write_csv(outdir / "moment_oracle.csv",
              ["n", "p", "exact", "mc", "se", "z"], oracle_rows)

    ci = params.get("corineq", {})
    _reject_unknown(ci, {"p", "gamma", "n_values", "samples"}, "corineq")
    report = verify_corineq_scaling(
        table, measure, ci.get("p", 2), ci.get("gamma", 0.5),
        ci.get("n_values", [8, 16, 32, 64]), ci.get("samples", 50_000),
        substream(stream, "corineq"))
    verdicts["corineq_bound"] = "pass" if report["bound_holds"] else (
        "inconclusive" if report["verdict"] == "inconclusive" else "fail")
    summary = {"corineq": report}
    return verdicts, ["restricted_counts.csv", "moment_oracle.csv"], summary


def _run_sde(config, outdir, stream):
    params = config["params"]
    _reject_unknown(params, {"n", "steps", "dt", "eps_reg", "force_cap",
                             "dump", "record_every"}, "params")
    k = build_kernel(config.get("kernel", {"family": "torus-log", "d": 1}))
    measure = build_measure(config.get("measure", {"kind": "uniform"}),
                            k.domain)
    potential = potential_from_config(config.get("potential"))
    n = params.get("n", 64)
    dt = params.get("dt", 1e-3)
    steps = params.get("steps", 200)
    rng = generator(substream(stream, "init"))
    points0 = measure.sample(n, rng)
    state, snaps = simulate_sde(
        points0, k, potential, dt, steps, substream(stream, "path"),
        eps_reg=params.get("eps_reg", 1e-3),
        force_cap=params.get("force_cap"),
        record_every=params.get("record_every", max(steps // 10, 1)))
    files = []
    rows = []
    for t, pts in snaps:
        br = interaction_energy(k, params.get("eps_reg", 1e-3), measure,
                                Configuration(pts, k.domain))
        rows.append([n, br.eps, br.pair_term, br.cross_term, br.mean_term,
                     br.total, config["seed"], t])
    write_csv(outdir / "energy_breakdown.csv",
              ["n", "eps", "pair", "cross", "mean", "total", "seed", "t"],
              rows)
    files.append("energy_breakdown.csv")
    if params.get("dump", False):
        traj_rows = []
        for t, pts in snaps:
            for i, x in enumerate(pts):
                traj_rows.append([t, i] + [float(c) for c in x])
        write_csv(outdir / "trajectory.csv",
                  ["t", "particle"] + [f"x{a}" for a in range(k.domain.dim)],
                  traj_rows)
        files.append("trajectory.csv")
    verdicts = {"completed": "pass" if np.all(np.isfinite(state.points))
                else "fail"}
    summary = {"cap_activations": state.cap_activations,
               "final_time": state.time}
    return verdicts, files, summary


def _run_mv_solve(config, outdir, stream):
    params = config["params"]
    _reject_unknown(params, {"cells", "dt", "t_end", "eps", "save_every",
                             "initial_mode"}, "params")
    k = build_kernel(config.get("kernel", {"family": "torus-log", "d": 1}))
    potential = potential_from_config(config.get("potential"))
    cells = params.get("cells", 256)
    a = params.get("initial_mode", 0.5)
    x = np.arange(cells) / cells
    density0 = 1.0 + a * np.cos(2.0 * np.pi * x)
    run = mv_solve(PdeState(density0, 0.0, params.get("dt", 1e-3)), k,
                   potential, t_end=params.get("t_end", 0.5),
                   eps=params.get("eps", 0.0),
                   save_every=params.get("save_every", 20))
    write_csv(outdir / "free_energy.csv", ["t", "free_energy"],
              run.free_energy)
    write_csv(outdir / "final_density.csv", ["x", "density"],
              list(zip(x.tolist(), run.final.density.tolist())))
    diffs = np.diff([f for _, f in run.free_energy])
    mass_ok = max(run.mass_corrections) < 1e-10 if run.mass_corrections else True
    verdicts = {"mass_conservation": "pass" if mass_ok else "fail",
                "free_energy_monotone": "pass" if np.all(diffs <= 1e-12)
                else "fail"}
    summary = {"negativity_clips": run.negativity_clips,
               "dt_halvings": run.dt_halvings}
    return verdicts, ["free_energy.csv", "final_density.csv"], summary


def _run_mfl_sweep(config, outdir, stream):
    params = config["params"]
    _reject_unknown(params, {"n_values", "t_grid", "replicas", "dt",
                             "eps_reg", "windows", "slope_band"}, "params")
    k = build_kernel(config.get("kernel", {"family": "torus-log", "d": 1}))
    measure = build_measure(config.get("measure", {"kind": "uniform"}),
                            k.domain)
    potential = potential_from_config(config.get("potential"))
    windows = params.get("windows")
    if windows is not None:
        windows = {float(t): tuple(v) for t, v in windows.items()}
    out = modulated_energy_sweep(
        k, measure, params.get("n_values", [8, 16, 32, 64, 128]),
        params.get("t_grid", [0.1, 0.5]), params.get("replicas", 64),
        substream(stream, "mfl"), eps_reg=params.get("eps_reg", 1e-3),
        dt=params.get("dt", 2e-3), potential=potential,
        window=windows if windows is not None else 0.05)
    write_csv(outdir / "modulated_energy.csv",
              ["n", "t", "mean", "ci", "window_lo", "window_hi"],
              [[r["n"], r["t"], r["mean"], r["ci"], r["window_lo"],
                r["window_hi"]] for r in out["rows"]])
    lo, hi = params.get("slope_band", (-1.3, -0.7))
    verdicts = {}
    for t, s in out["slopes"].items():
        ok = s is not None and lo <= s <= hi
        verdicts[f"slope_t_{t:g}"] = "pass" if ok else "fail"
    summary = {"slopes": {f"{t:g}": s for t, s in out["slopes"].items()},
               "eps_reg": out["eps_reg"], "replicas": out["replicas"]}
    return verdicts, ["modulated_energy.csv"], summary


def _run_gibbs(config, outdir, stream):
    params = config["params"]
    _reject_unknown(params, {"n_values", "is_samples", "ti_nodes", "chain",
                             "slope_band"}, "params")
    k = build_kernel(config.get("kernel", {"family": "torus-log", "d": 1}))
    potential = potential_from_config(config.get("potential"))
    chain_spec = params.get("chain", {})
    _reject_unknown(chain_spec, {"n_chains", "n_steps", "burn_in",
                                 "step_size"}, "chain")
    chain = ChainConfig(n_chains=chain_spec.get("n_chains", 8),
                        n_steps=chain_spec.get("n_steps", 3000),
                        burn_in=chain_spec.get("burn_in", 1000),
                        step_size=chain_spec.get("step_size"), thin=0)
    out = entropy_rates(k, potential, params.get("n_values", [4, 8, 16, 32,
                                                              64, 128]),
                        chain, substream(stream, "gibbs"),
                        is_samples=params.get("is_samples", 100_000),
                        ti_nodes=params.get("ti_nodes", 8))
    rows = []
    for r in out["rows"]:
        rows.append([r.n, r.log_z_is, r.log_z_is_se, r.log_z_ti, r.log_z_ti_se,
                     r.entropy_forward, r.entropy_forward_se,
                     r.entropy_backward, r.entropy_backward_se,
                     r.acceptance_rate, config["seed"]])
    write_csv(outdir / "gibbs_rates.csv",
              ["n", "logz_is", "logz_is_se", "logz_ti", "logz_ti_se",
               "h_fwd", "h_fwd_se", "h_bwd", "h_bwd_se", "acceptance",
               "seed"], rows)
    lo, hi = params.get("slope_band", (-1.3, -0.7))
    slope = out["backward_slope"]
    verdicts = {
        "backward_slope": "pass" if slope is not None and lo <= slope <= hi
        else "fail",
        "cross_validation": "pass" if all(r.cross_validated
                                          for r in out["rows"]) else "fail",
        "entropy_nonnegative": "pass" if all(
            r.entropy_forward >= -3 * r.entropy_forward_se
            and r.entropy_backward >= -3 * r.entropy_backward_se
            for r in out["rows"]) else "fail"}
    summary = {"backward_slope": slope,
               "minimizer_residual": out["minimizer_residual"]}
    return verdicts, ["gibbs_rates.csv"], summary


RUNNERS = {
    "kernel-verify": _run_kernel_verify,
    "zsweep": _run_zsweep,
    "moments-verify": _run_moments_verify,
    "sde-run": _run_sde,
    "mv-solve": _run_mv_solve,
    "mfl-sweep": _run_mfl_sweep,
    "gibbs": _run_gibbs,
}


# -- orchestration ------------------------------------------------------------


def run_config(config: dict, outdir) -> dict:
    """Execute one experiment; returns the record written to summary.json."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    resolved = dict(config)
    resolved.pop("out", None)
    write_json(outdir / "config.json", resolved)
    stream = root_stream(config["seed"])
    started = time.time()
    verdicts, files, extra = RUNNERS[config["kind"]](config, outdir, stream)
    record = {
        "kind": config["kind"],
        "config_hash": config_hash(resolved),
        "version": __version__,
        "verdicts": verdicts,
        "data_files": files,
        "summary": extra,
    }
    write_json(outdir / "summary.json", record)
    write_json(outdir / "meta.json", {"wall_time_s": time.time() - started})
    lines = [f"{config['kind']} [{record['config_hash']}]"]
    lines += [f"  {name}: {verdict}" for name, verdict in verdicts.items()]
    (outdir / "summary.txt").write_text("\n".join(lines) + "\n")
    return record


def exit_code_for(verdicts: dict) -> int:
    values = set(verdicts.values())
    if "fail" in values:
        return EXIT_FAIL
    if "inconclusive" in values:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def report(directory) -> tuple[dict, int]:
    """Merge every summary.json below `directory` into one consolidated view."""
    directory = Path(directory)
    records, skipped = [], []
    for path in sorted(directory.rglob("summary.json")):
        try:
            records.append((str(path.parent.relative_to(directory)),
                            json.loads(path.read_text())))
        except (json.JSONDecodeError, OSError):
            skipped.append(str(path))
    if not records:
        return {}, EXIT_EMPTY
    merged = {"records": {}, "skipped": skipped}
    code = EXIT_OK
    for name, rec in records:
        merged["records"][name] = rec
        code = max(code, exit_code_for(rec.get("verdicts", {})))
        rundir = directory / name
        slopes = rec.get("summary", {}).get("slopes")
        if slopes:
            rows = []
            for csv_name in rec.get("data_files", []):
                if "modulated" in csv_name:
                    with open(rundir / csv_name) as fh:
                        rows = list(csv.DictReader(fh))
            if rows:
                plot = [[r["n"], r["mean"], r["ci"]] for r in rows]
                write_csv(rundir / "plot_data.csv", ["x", "y", "ci"], plot)
    if skipped:
        code = max(code, EXIT_INCONCLUSIVE)
    write_json(directory / "report.json", merged)
    return merged, code


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="loggas")
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in RUNNERS:
        p = sub.add_parser(kind)
        p.add_argument("--config", required=True)
        p.add_argument("--seed", type=int)
        p.add_argument("--workers", type=int)
        p.add_argument("--out")
    rep = sub.add_parser("report")
    rep.add_argument("directory")
    args = parser.parse_args(argv)

    if args.command == "report":
        merged, code = report(args.directory)
        if code == EXIT_EMPTY:
            print("no experiment records found", file=sys.stderr)
        else:
            print(f"merged {len(merged['records'])} record(s)")
        return code

    try:
        config = load_config(args.config)
        if config["kind"] != args.command:
            raise ConfigurationError(
                f"config kind {config['kind']!r} does not match subcommand")
        if args.seed is not None:
            config["seed"] = args.seed
        if args.workers is not None:
            config["workers"] = args.workers
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    outdir = args.out or config.get("out") or f"runs/{config['kind']}"
    try:
        record = run_config(config, outdir)
    except LoggasError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for name, verdict in record["verdicts"].items():
        print(f"{name}: {verdict}")
    return exit_code_for(record["verdicts"])


if __name__ == "__main__":
    sys.exit(main())
