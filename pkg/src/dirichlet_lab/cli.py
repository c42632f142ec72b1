"""Command-line laboratory runner.

Every command writes a machine-readable summary.json (config echo, one
pass/fail record per check, wall time, seed) plus one or more CSV data
files, and exits 0 only if every check passed (2 on a check failure, 1 on
usage or feasibility problems).  Given the same configuration and seed,
the CSV outputs are byte-identical across runs; wall time is confined to
summary.json.  The thread count is a performance knob only and never
changes numeric output.

Configuration comes from flags plus an optional KEY=VALUE file
(--config); flags win on conflict, unknown keys are rejected with their
line number.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import analytics, flt_harness, lil_explorer, series_engine, zero_finder
from .errors import DomainError, FeasibilityError
from .gaussian_exact import CovGrid, build_cov, sample_ensemble
from .innovations import InnovationSpec, SeedContext

EXIT_PASS = 0
EXIT_USAGE = 1
EXIT_CHECK_FAILURE = 2


class UsageError(Exception):
    pass


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    tolerance: float


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])


def _write_summary(outdir: Path, config: dict, checks, wall: float):
    payload = {
        "config": config,
        "checks": [{"name": c.name, "passed": bool(c.passed),
                    "value": float(c.value),
                    "tolerance": float(c.tolerance)} for c in checks],
        "wall_seconds": wall,
        "seed": config.get("seed"),
    }
    with open(outdir / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _spec_from(cfg) -> InnovationSpec:
    p = cfg.get("p")
    return InnovationSpec(cfg["family"], cfg["sigma"],
                          p if cfg["family"] == "two_point" else None)


def _parse_floats(text: str) -> list:
    try:
        vals = [float(x) for x in str(text).split(",") if x.strip() != ""]
    except ValueError as exc:
        raise UsageError(f"bad float list {text!r}") from exc
    if not vals:
        raise UsageError(f"empty list {text!r}")
    return vals


def _parse_windows(text: str) -> list:
    out = []
    for part in str(text).split(","):
        bits = part.split(":")
        if len(bits) != 2:
            raise UsageError(f"bad window {part!r}; use lo:hi")
        out.append((float(bits[0]), float(bits[1])))
    return out


# ---------------------------------------------------------------------------
# Option table: name -> (type, default, help).  required when default is
# the _REQUIRED sentinel.
# ---------------------------------------------------------------------------

_REQUIRED = object()

_COMMON = {
    "seed": (int, 1, "master seed"),
    "threads": (int, 0, "worker threads (0 = auto); never changes numbers"),
    "output-dir": (str, ".", "directory for summary.json and CSV files"),
    "family": (str, "gaussian", "innovation family"),
    "sigma": (float, 1.0, "innovation standard deviation"),
    "p": (float, 0.5, "two_point success probability"),
    "rel-tol": (float, 0.05, "relative tail-variance tolerance"),
    "n-max": (int, series_engine.N_MAX_DEFAULT, "cutoff feasibility cap"),
    "replicates": (int, 1000, "Monte Carlo replicates"),
}

_OPTIONS = {
    "covariance": {
        **_COMMON,
        "s-big": (float, _REQUIRED, "large scale parameter"),
        "t": (str, _REQUIRED, "comma-separated time points"),
        "direct-terms": (int, 1 << 21, "direct summation length"),
    },
    "flt": {
        **_COMMON,
        "s-big": (float, 3.0, "large scale parameter (feasible range)"),
        "t": (str, "0.5,1", "comma-separated time points in (0,1]"),
        "direct-terms": (int, 1 << 21, "direct summation length"),
    },
    "limit-sim": {
        **_COMMON,
        "alpha": (float, 0.0, "log-weight exponent, must exceed -1/2"),
        "t": (str, "0.25,0.5,0.75,1", "comma-separated time points"),
        "y-max": (float, 100.0, "mesh upper limit"),
        "n-steps": (int, 10000, "mesh cells"),
        "mesh-check": (int, 1, "1: also verify halving the mesh helps"),
    },
    "lil": {
        **_COMMON,
        "depths": (str, "2,3,4,5,6,8,10,12",
                   "loglog depths i (grid s = exp(-e^i))"),
        "coverage-depths": (str, "39,40,41,42,43,44",
                            "depths for the [-1,1] mass check"),
        "direct-terms": (int, 1 << 20, "direct summation length"),
    },
    "zeros": {
        **_COMMON,
        "windows": (str, "0.2:1,0.05:1", "comma-separated lo:hi windows"),
        "n-seeds": (int, 100, "number of independent paths"),
        "n-grid": (int, 200, "scan grid size per window"),
    },
    "lemmas": {
        **_COMMON,
        "suite": (str, "inequalities", "which suite to run"),
        "trials": (int, 1000, "random trials for the concavity gap"),
    },
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dirichlet-lab",
        description="certified and Monte Carlo experiments for the "
                    "log-weighted random Dirichlet series")
    sub = parser.add_subparsers(dest="command")
    for cmd, opts in _OPTIONS.items():
        p = sub.add_parser(cmd)
        p.add_argument("--config", type=str, default=None,
                       help="KEY=VALUE file; flags win on conflict")
        for name, (typ, default, text) in opts.items():
            p.add_argument(f"--{name}", type=typ, default=None, help=text)
    return parser


def _read_config_file(path: str, known) -> dict:
    out = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}")
    for lineno, line in enumerate(lines, start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise UsageError(f"config line {lineno}: expected KEY=VALUE, "
                             f"got {body!r}")
        key, _, raw = body.partition("=")
        key = key.strip().replace("_", "-")
        if key not in known:
            raise UsageError(f"config line {lineno}: unknown key {key!r}")
        typ = known[key][0]
        try:
            out[key] = typ(raw.strip())
        except ValueError as exc:
            raise UsageError(f"config line {lineno}: bad value for "
                             f"{key!r}: {exc}")
    return out


def _merge_config(args: argparse.Namespace, cmd: str) -> dict:
    opts = _OPTIONS[cmd]
    from_file = {}
    if args.config is not None:
        from_file = _read_config_file(args.config, opts)
    merged = {"command": cmd}
    for name, (typ, default, _) in opts.items():
        attr = name.replace("-", "_")
        val = getattr(args, attr)
        if val is None:
            val = from_file.get(name, default)
        if val is _REQUIRED:
            raise UsageError(f"missing required flag --{name}")
        merged[attr] = val
    _validate(merged)
    return merged


def _validate(cfg: dict):
    if cfg["seed"] < 0 or cfg["seed"] >= 2**64:
        raise UsageError("seed must fit in an unsigned 64-bit word")
    if cfg["threads"] < 0:
        raise UsageError("threads must be >= 0")
    if cfg["replicates"] < 1:
        raise UsageError("replicates must be >= 1")
    if not (0.0 < cfg["rel_tol"] < 1.0):
        raise UsageError("rel-tol must lie in (0, 1)")
    if cfg["n_max"] < 4:
        raise UsageError("n-max must be >= 4")
    if cfg["sigma"] <= 0.0:
        raise UsageError("sigma must be positive")
    try:
        _spec_from({"family": cfg["family"], "sigma": cfg["sigma"],
                    "p": cfg.get("p")})
    except DomainError as exc:
        raise UsageError(str(exc))


def _workers(cfg) -> int:
    import os
    return cfg["threads"] if cfg["threads"] > 0 else (os.cpu_count() or 1)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _run_covariance(cfg, outdir: Path):
    s_big = cfg["s_big"]
    t_pts = _parse_floats(cfg["t"])
    if s_big <= 0.0 or any(t <= 0.0 for t in t_pts):
        raise UsageError("s-big and all t must be positive")
    rows, checks = [], []
    for i, ti in enumerate(t_pts):
        for j, tj in enumerate(t_pts):
            if j < i:
                continue
            enc = analytics.kernel_sum_enclosure_log(
                -0.5, float(np.logaddexp(-ti * s_big, -tj * s_big)),
                cfg["direct_terms"])
            asym = min(ti, tj)
            rows.append((ti, tj, enc.lo, enc.hi, asym))
            dev = abs(enc.mid / s_big - asym)
            tol = 0.1 * asym + 0.02
            checks.append(Check(f"cov_asymptote_t{ti:g}_t{tj:g}",
                                dev <= tol, dev, tol))
    _write_csv(outdir / "covariance.csv",
               ["t_i", "t_j", "enclosure_lo", "enclosure_hi", "asymptote"],
               rows)
    return checks


def _run_flt(cfg, outdir: Path):
    s_big = cfg["s_big"]
    t_pts = sorted(_parse_floats(cfg["t"]))
    spec = _spec_from(cfg)
    ctx = SeedContext(cfg["seed"])
    ens = flt_harness.simulate_flt_boundary(
        s_big, t_pts, cfg["replicates"], spec, ctx, cfg["rel_tol"],
        cfg["n_max"], _workers(cfg))
    d = len(t_pts)
    ref = np.empty((d, d))
    for i in range(d):
        for j in range(d):
            enc = analytics.kernel_sum_enclosure_log(
                -0.5, float(np.logaddexp(-t_pts[i] * s_big,
                                         -t_pts[j] * s_big)),
                cfg["direct_terms"])
            ref[i, j] = spec.sigma ** 2 * enc.mid / s_big
    report = flt_harness.compare_fdd(ens, ref)
    bounds = ens.meta["tail_bounds"]
    rows, checks = [], []
    for i in range(d):
        for j in range(i, d):
            allowance = spec.sigma ** 2 \
                * math.sqrt(bounds[i] * bounds[j]) / s_big
            tol = 3.0 * report.std_errors[i, j] + allowance
            dev = abs(report.empirical_cov[i, j] - ref[i, j])
            rows.append((t_pts[i], t_pts[j], report.empirical_cov[i, j],
                         ref[i, j], report.std_errors[i, j], tol,
                         dev <= tol))
            checks.append(Check(f"flt_cov_t{t_pts[i]:g}_t{t_pts[j]:g}",
                                dev <= tol, dev, tol))
    _write_csv(outdir / "flt_covariance.csv",
               ["t_i", "t_j", "empirical", "reference", "std_error",
                "tolerance", "passed"], rows)
    return checks


def _run_limit_sim(cfg, outdir: Path):
    t_pts = sorted(_parse_floats(cfg["t"]))
    ctx = SeedContext(cfg["seed"])
    ens = flt_harness.simulate_limit_alpha(
        cfg["alpha"], t_pts, cfg["replicates"], cfg["y_max"],
        cfg["n_steps"], cfg["sigma"], ctx)
    d = len(t_pts)
    ref = np.array([[analytics.limit_process_cov(cfg["alpha"], ti, tj,
                                                 cfg["sigma"])
                     for tj in t_pts] for ti in t_pts])
    report = flt_harness.compare_fdd(ens, ref)
    rows, checks = [], []
    for i in range(d):
        for j in range(i, d):
            tol = 3.0 * report.std_errors[i, j] + 0.01 * abs(ref[i, j])
            dev = abs(report.empirical_cov[i, j] - ref[i, j])
            rows.append((t_pts[i], t_pts[j], report.empirical_cov[i, j],
                         ref[i, j], report.std_errors[i, j], tol,
                         dev <= tol))
            checks.append(Check(f"limit_cov_t{t_pts[i]:g}_t{t_pts[j]:g}",
                                dev <= tol, dev, tol))
    if cfg["mesh_check"]:
        coarse = flt_harness.discretized_limit_cov(
            cfg["alpha"], t_pts, cfg["y_max"], cfg["n_steps"] // 2,
            cfg["sigma"])
        fine = flt_harness.discretized_limit_cov(
            cfg["alpha"], t_pts, cfg["y_max"], cfg["n_steps"], cfg["sigma"])
        dev_c = float(np.max(np.abs(coarse - ref)))
        dev_f = float(np.max(np.abs(fine - ref)))
        checks.append(Check("mesh_halving_improves", dev_f < dev_c,
                            dev_f, dev_c))
    _write_csv(outdir / "limit_covariance.csv",
               ["t_i", "t_j", "empirical", "reference", "std_error",
                "tolerance", "passed"], rows)
    return checks


def _run_lil(cfg, outdir: Path):
    if cfg["family"] != "gaussian":
        raise UsageError("the deep-grid lil command needs gaussian "
                         "innovations (exact-law route)")
    spec = _spec_from(cfg)
    ctx = SeedContext(cfg["seed"])
    n_rep = cfg["replicates"]
    rows, checks = [], []

    depths = [math.exp(float(i)) for i in _parse_floats(cfg["depths"])]
    trajs = lil_explorer.trajectory_ensemble(
        spec, ctx, n_rep, log_inv_s=depths, policy="exact",
        direct_terms=cfg["direct_terms"])
    vals = np.stack([t.normalized for t in trajs])
    for idx, L in enumerate(depths):
        formula = lil_explorer.normalized_marginal_sd(L,
                                                      cfg["direct_terms"])
        sample = float(np.std(vals[:, idx], ddof=1))
        se = formula / math.sqrt(2.0 * (n_rep - 1))
        dev = abs(sample - formula)
        rows.append((L, formula, sample, se, dev <= 3.0 * se))
        checks.append(Check(f"lil_marginal_sd_L{L:.6g}", dev <= 3.0 * se,
                            dev, 3.0 * se))

    cov_depths = [math.exp(float(i))
                  for i in _parse_floats(cfg["coverage_depths"])]
    cov_trajs = lil_explorer.trajectory_ensemble(
        spec, ctx.stream(1 << 20), n_rep, log_inv_s=cov_depths,
        policy="exact", direct_terms=cfg["direct_terms"])
    report = lil_explorer.limit_set_coverage(cov_trajs)
    checks.append(Check("lil_mass_inside_unit_interval",
                        report.fraction_inside > 0.99,
                        report.fraction_inside, 0.99))
    _write_csv(outdir / "lil_marginals.csv",
               ["log_inv_s", "formula_sd", "sample_sd", "std_error",
                "passed"], rows)
    return checks


def _run_zeros(cfg, outdir: Path):
    spec = _spec_from(cfg)
    windows = _parse_windows(cfg["windows"])
    seeds = [cfg["seed"] + i for i in range(cfg["n_seeds"])]
    results = zero_finder.zero_count_experiment(
        spec, seeds, windows, cfg["n_grid"], cfg["rel_tol"], cfg["n_max"])
    rows = []
    for res in results:
        for seed, cnt, murky in zip(seeds, res.counts, res.unresolved):
            rows.append((res.s_lo, res.s_hi, seed, cnt, murky))
    _write_csv(outdir / "zero_counts.csv",
               ["s_lo", "s_hi", "seed", "count", "unresolved"], rows)
    checks = []
    by_lo = sorted(results, key=lambda r: -r.s_lo)
    for narrow, wide in zip(by_lo, by_lo[1:]):
        ok = wide.mean >= narrow.mean
        checks.append(Check(
            f"zeros_nondecreasing_{narrow.s_lo:g}_to_{wide.s_lo:g}",
            ok, wide.mean - narrow.mean, 0.0))
    return checks


def _run_lemmas(cfg, outdir: Path):
    if cfg["suite"] != "inequalities":
        raise UsageError(f"unknown suite {cfg['suite']!r}")
    rng = np.random.Generator(np.random.Philox(key=[cfg["seed"], 0xD1C]))
    rows, checks = [], []

    worst_gap = -math.inf
    for _ in range(cfg["trials"]):
        a, b = rng.uniform(0.0, 1.0, size=2)
        worst_gap = max(worst_gap,
                        analytics.i_concave_gap(float(a), float(b), 1e-11))
    rows.append(("i_concave_gap", cfg["trials"], worst_gap, 1e-10,
                 worst_gap <= 1e-10))
    checks.append(Check("i_concave_gap", worst_gap <= 1e-10, worst_gap,
                        1e-10))

    grid = np.geomspace(1.01, 50.0, 1000)
    kernel_ok = True
    for _ in range(100):
        a, b = rng.uniform(0.0, 1.0, size=2)
        while a == b:
            a, b = rng.uniform(0.0, 1.0, size=2)
        kernel_ok &= analytics.decreasing_kernel_check(float(a), float(b),
                                                       grid)
    rows.append(("decreasing_kernel", 100, float(kernel_ok), 1.0,
                 kernel_ok))
    checks.append(Check("decreasing_kernel", bool(kernel_ok),
                        float(kernel_ok), 1.0))

    worst_margin = math.inf
    ok_lil = True
    for _ in range(200):
        gamma = float(rng.uniform(0.1, 0.4))
        n = int(rng.integers(2, 8))
        j = int(rng.integers(0, 11))
        m = int(rng.integers(1, 2**j + 1))
        chk = analytics.chaining_bound_check(
            analytics.ChainingConfig(gamma, n, j, m), "lil")
        ok_lil &= chk.satisfied
        worst_margin = min(worst_margin, chk.bound - chk.a_value.hi)
    rows.append(("chaining_lil", 200, worst_margin, 0.0, ok_lil))
    checks.append(Check("chaining_lil", bool(ok_lil), worst_margin, 0.0))

    ok_flt = True
    worst_flt = math.inf
    for _ in range(100):
        s_big = float(rng.uniform(10.0, 300.0))
        j = int(rng.integers(0, 11))
        m = int(rng.integers(1, 2**j + 1))
        chk = analytics.chaining_bound_check(
            analytics.ChainingConfig(0.25, 2, j, m, s_big=s_big), "flt")
        ok_flt &= chk.satisfied
        worst_flt = min(worst_flt, chk.bound - chk.a_value.hi)
    rows.append(("chaining_flt", 100, worst_flt, 0.0, ok_flt))
    checks.append(Check("chaining_flt", bool(ok_flt), worst_flt, 0.0))

    _write_csv(outdir / "lemmas.csv",
               ["check", "trials", "worst_value", "bound", "passed"], rows)
    return checks


_RUNNERS = {
    "covariance": _run_covariance,
    "flt": _run_flt,
    "limit-sim": _run_limit_sim,
    "lil": _run_lil,
    "zeros": _run_zeros,
    "lemmas": _run_lemmas,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage problems; the contract reserves 2 for
        # check failures and 1 for usage errors
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_PASS
    if args.command is None:
        parser.print_help()
        return EXIT_USAGE
    t0 = time.perf_counter()
    try:
        cfg = _merge_config(args, args.command)
        outdir = Path(cfg["output_dir"])
        outdir.mkdir(parents=True, exist_ok=True)
        checks = _RUNNERS[args.command](cfg, outdir)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, FeasibilityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _write_summary(outdir, cfg, checks, time.perf_counter() - t0)
    n_fail = sum(1 for c in checks if not c.passed)
    for c in checks:
        marker = "PASS" if c.passed else "FAIL"
        print(f"{marker} {c.name}: value={c.value:.6g} "
              f"tolerance={c.tolerance:.6g}")
    if n_fail:
        print(f"{n_fail} of {len(checks)} checks failed", file=sys.stderr)
        return EXIT_CHECK_FAILURE
    return EXIT_PASS


if __name__ == "__main__":
    sys.exit(main())
