"""Command-line entry point: run / sweep / certify / verify.

Exit codes: 0 all requested checks pass (or are not applicable),
1 check failure, 2 configuration error, 3 solver non-convergence or an
unrequested early truncation.

Data files (CSV/JSON) are reproducible bit for bit: reductions run in
fixed order, floats print with 17 significant digits, and wall-clock time
goes to the console only, never into the files.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import blowup as bl
from . import positivity as pos
from .energy import (
    MONOTONE_TOL,
    decay_diagnostics,
    energy_track,
    source_norm_track,
    uh_norm_track,
)
from .config import ConfigError, ExperimentConfig, load_config, parse_config, set_by_path
from .evolve import picard_solve, timestep_solve
from .fields import DomainError, Trajectory
from .linear import solve_linear
from .spectral import grid_values, homogeneous_norm_stack, sobolev_norm, sobolev_norm_stack
from .svgplot import render_log_plot

#: environment variable capping sweep-level parallelism
THREAD_ENV = "NORDSTROM_THREADS"

_F = "%.17g"


def _fmt(x: float) -> str:
    return _F % float(x)


def _jfloat(x) -> float:
    x = float(x)
    return x if math.isfinite(x) else None


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _solver_run(cfg: ExperimentConfig) -> tuple[Trajectory, dict, bool]:
    """Run the configured solver; returns (trajectory, solver report, ok)."""
    opts = cfg.solver_options
    if cfg.solver == "picard":
        R = float(opts.get("R", max(1.0, 4.0 * sobolev_norm(cfg.initial.u, cfg.grid.sobolev_order_m + 1.0) + 1.0)))
        traj, rep = picard_solve(
            cfg.initial,
            cfg.source,
            cfg.t_end,
            R=R,
            tol=float(opts.get("tol", 1e-8)),
            max_iter=int(opts.get("max_iter", 25)),
            n_samples=cfg.n_samples,
        )
        report = {
            "kind": "picard",
            "converged": rep.converged,
            "diverged": rep.diverged,
            "iterates": rep.iterates,
            "contraction_factors": [_jfloat(c) for c in rep.contraction_factors],
            "final_residual": _jfloat(rep.final_residual),
            "ball_radius": R,
        }
        return traj, report, rep.converged
    if cfg.solver == "timestep":
        traj = timestep_solve(cfg.initial, cfg.source, cfg.t_end, cfg.dt)
        ok = (not traj.blowup_suspected) or ("blowup" in cfg.checks)
        report = {
            "kind": "timestep",
            "dt": cfg.dt,
            "blowup_suspected": traj.blowup_suspected,
            "last_valid_time": _jfloat(traj.last_valid_time) if traj.last_valid_time is not None else None,
        }
        return traj, report, ok
    # linear-only: evolve with the frozen source a(t,x) * (1+0)^3
    forcing = None if cfg.source.is_zero else (lambda t: cfg.source.field_at(t, cfg.grid))
    traj = solve_linear(cfg.initial, forcing, cfg.t_end, cfg.n_samples)
    traj.a_spec = cfg.source
    return traj, {"kind": "linear-only"}, True


def _linear_source_track(cfg: ExperimentConfig, traj: Trajectory, m: float) -> np.ndarray:
    out = np.empty(traj.n_samples)
    for i, t in enumerate(traj.times):
        out[i] = sobolev_norm(cfg.source.field_at(float(t), cfg.grid), m)
    return out


def _run_checks(cfg: ExperimentConfig, traj: Trajectory) -> tuple[dict, dict | None]:
    grid = cfg.grid
    m = grid.sobolev_order_m
    results: dict[str, dict] = {}
    cert_json = None

    min_track = np.empty(traj.n_samples)
    for i in range(traj.n_samples):
        min_track[i] = 1.0 + float(np.min(grid_values(traj.u_field(i))))

    E = energy_track(traj, m)
    src_track = _linear_source_track(cfg, traj, m) if cfg.solver == "linear-only" else source_norm_track(traj, m)
    bound = _gronwall_track(traj, m, src_track)

    a0_floor = cfg.source.constant_value
    if a0_floor is None:
        probes = np.linspace(0.0, traj.t_end, 5)
        a0_floor = min(float(np.min(cfg.source.values_on_grid(float(t), grid.n_per_dim))) for t in probes)

    for name in cfg.checks:
        if name == "energy":
            ok = bool(np.all(E <= E[0] * (1.0 + MONOTONE_TOL) + 1e-300))
            results[name] = {"status": "pass" if ok else "fail", "E0": _jfloat(E[0]), "E_max": _jfloat(np.max(E))}
        elif name == "gronwall":
            ok = bool(np.all(E <= bound * (1.0 + 1e-6) + 1e-300))
            worst = float(np.max(E - bound)) if len(E) else 0.0
            results[name] = {"status": "pass" if ok else "fail", "worst_excess": _jfloat(worst)}
        elif name == "decay":
            if traj.blowup_suspected or traj.t_end < 10.0 / grid.kappa - 1e-9:
                results[name] = {"status": "not-applicable", "reason": "trajectory truncated before 10/kappa"}
                continue
            rep = decay_diagnostics(traj, m)
            ok = rep.mu <= cfg.decay_mu_threshold
            results[name] = {
                "status": "pass" if ok else "fail",
                "mu": _jfloat(rep.mu),
                "mu_threshold": cfg.decay_mu_threshold,
                "eps_tilde": _jfloat(rep.eps_tilde),
                "metric_interval": [_jfloat(rep.metric_interval_final[0]), _jfloat(rep.metric_interval_final[1])],
                "metric_within_target": rep.metric_within_target,
            }
        elif name == "blowup":
            cert = bl.certificate(a0_floor, cfg.initial.u.mean(), cfg.initial.u_t.mean(), grid.kappa)
            cert_json = _certificate_json(cert)
            if not cert.certifies_blowup:
                results[name] = {"status": "not-applicable", "reason": f"certificate: {cert.status}"}
                continue
            detected, _ = bl.detect_pde_blowup(traj, m)
            ok = detected is not None and detected <= cert.t0 + 1e-9
            results[name] = {
                "status": "pass" if ok else "fail",
                "detected_time": _jfloat(detected) if detected is not None else None,
                "certificate_t0": _jfloat(cert.t0),
            }
        elif name == "positivity":
            flags = pos.check_positivity_hypotheses(
                cfg.initial.u, cfg.initial.u_t, cfg.source, np.linspace(0.0, traj.t_end, 5)
            )
            min_val, _, _ = pos.min_one_plus_u(traj)
            if not flags["all_ok"]:
                results[name] = {"status": "not-applicable", "reason": "hypotheses not satisfied",
                                 "min_one_plus_u": _jfloat(min_val)}
                continue
            ok = min_val > 0.0
            results[name] = {"status": "pass" if ok else "fail", "min_one_plus_u": _jfloat(min_val)}
        elif name == "jensen":
            if a0_floor <= 0.0:
                results[name] = {"status": "not-applicable", "reason": "source has no positive floor"}
                continue
            n_valid = _n_valid_samples(traj)
            if float(np.min(min_track[:n_valid])) < 0.0:
                results[name] = {"status": "not-applicable", "reason": "min(1+u) < 0 on some sample"}
                continue
            worst = math.inf
            for i in range(n_valid):
                lhs, rhs = bl.jensen_gap(traj.u_field(i), cfg.source, float(traj.times[i]), a0_floor)
                # relative normalisation: near blow-up both sides reach 1e24
                worst = min(worst, (lhs - rhs) / max(1.0, abs(rhs)))
            ok = worst >= -1e-10
            results[name] = {"status": "pass" if ok else "fail", "worst_gap": _jfloat(worst)}
    return results, cert_json


def _n_valid_samples(traj: Trajectory) -> int:
    """Samples before the overflow sentinel of a truncated run."""
    if traj.blowup_suspected and traj.last_valid_time is not None:
        return max(1, int(np.searchsorted(traj.times, traj.last_valid_time + 1e-12)))
    return traj.n_samples


def _gronwall_track(traj: Trajectory, m: float, src_track: np.ndarray) -> np.ndarray:
    from scipy.integrate import cumulative_simpson

    kappa = traj.grid.kappa
    ts = traj.times
    E0 = energy_track(traj, m)[0]
    uh = uh_norm_track(traj, m)
    if len(ts) < 2:
        return np.array([E0])
    g1 = cumulative_simpson(np.exp(kappa * ts) * uh, x=ts, initial=0.0)
    g2 = cumulative_simpson(src_track, x=ts, initial=0.0)
    root = np.exp(-kappa * (ts - ts[0])) * math.sqrt(max(E0, 0.0)) + np.exp(-kappa * ts) * (kappa**2 * g1 + g2)
    return root**2


def _certificate_json(cert) -> dict:
    return {
        "a0": _jfloat(cert.a0),
        "f0_hat": _jfloat(cert.f0_hat),
        "g0_hat": _jfloat(cert.g0_hat),
        "kappa": _jfloat(cert.kappa),
        "lambda": _jfloat(cert.lam),
        "beta": _jfloat(cert.beta),
        "tau0": _jfloat(cert.tau0),
        "t0": _jfloat(cert.t0) if cert.t0 is not None else None,
        "hypotheses_ok": cert.hypotheses_ok,
        "certifies_blowup": cert.certifies_blowup,
        "status": cert.status,
        "reason": cert.reason,
    }


def run_experiment(cfg: ExperimentConfig) -> int:
    """Execute one configured run; write trajectory.csv / report.json / svg."""
    t_wall = time.perf_counter()
    grid = cfg.grid
    m = grid.sobolev_order_m
    traj, solver_report, solver_ok = _solver_run(cfg)
    checks, cert_json = _run_checks(cfg, traj)

    norm_m1 = sobolev_norm_stack(traj.u, grid, m + 1.0)
    u_hom = traj.u.copy()
    u_hom[:, 0, 0, 0] = 0.0
    hom_m1 = homogeneous_norm_stack(u_hom, grid, m + 1.0)
    mean_u = traj.u[:, 0, 0, 0].real
    E = energy_track(traj, m)
    src_track = _linear_source_track(cfg, traj, m) if cfg.solver == "linear-only" else source_norm_track(traj, m)
    bound = _gronwall_track(traj, m, src_track)
    min_track = np.empty(traj.n_samples)
    for i in range(traj.n_samples):
        min_track[i] = 1.0 + float(np.min(grid_values(traj.u_field(i))))

    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    header = "t,sobolev_norm_m1,homogeneous_norm,mean_u,energy,gronwall_bound,min_one_plus_u"
    rows = [header]
    for i in range(traj.n_samples):
        rows.append(",".join(_fmt(v) for v in (
            traj.times[i], norm_m1[i], hom_m1[i], mean_u[i], E[i], bound[i], min_track[i],
        )))
    _atomic_write(cfg.output_dir / "trajectory.csv", "\n".join(rows) + "\n")

    report = {
        "config": cfg.raw,
        "solver": solver_report,
        "trajectory": {
            "t_end": _jfloat(traj.t_end),
            "n_samples": traj.n_samples,
            "times": [_jfloat(t) for t in traj.times],
            "sobolev_norm_m1": [_jfloat(v) for v in norm_m1],
            "mean_u": [_jfloat(v) for v in mean_u],
            "blowup_suspected": traj.blowup_suspected,
            "max_norm_m1": _jfloat(np.max(norm_m1)),
        },
        "checks": checks,
        "certificate": cert_json,
    }
    _atomic_write(cfg.output_dir / "report.json", json.dumps(report, indent=2, sort_keys=True) + "\n")

    if cfg.svg:
        markers = {}
        if cert_json and cert_json.get("t0") is not None:
            markers["t0"] = cert_json["t0"]
        svg = render_log_plot(
            traj.times,
            {
                "H^{m+1} norm": list(norm_m1),
                "sqrt(E)": list(np.sqrt(np.maximum(E, 0.0))),
                "sqrt(bound)": list(np.sqrt(np.maximum(bound, 0.0))),
                "|mean u|": list(np.abs(mean_u)),
            },
            "norm diagnostics",
            markers=markers,
        )
        _atomic_write(cfg.output_dir / "norms.svg", svg)

    wall = time.perf_counter() - t_wall
    failed = [k for k, v in checks.items() if v["status"] == "fail"]
    na = [k for k, v in checks.items() if v["status"] == "not-applicable"]
    print(f"run: solver={cfg.solver} ok={solver_ok} checks_failed={failed or 'none'} "
          f"not_applicable={na or 'none'} wall={wall:.2f}s -> {cfg.output_dir}")
    if not solver_ok:
        return 3
    return 1 if failed else 0


def _sweep_worker(args: tuple) -> dict:
    index, raw, base_out = args
    row: dict = {"index": index}
    try:
        cfg = parse_config(raw)
        cfg.output_dir = Path(base_out) / f"sweep_{index:03d}"
        code = run_experiment(cfg)
        report = json.loads((cfg.output_dir / "report.json").read_text())
        checks = report["checks"]
        row.update(
            exit_code=code,
            checks_passed=sum(1 for v in checks.values() if v["status"] == "pass"),
            checks_failed=sum(1 for v in checks.values() if v["status"] == "fail"),
            blowup_suspected=report["trajectory"]["blowup_suspected"],
            max_norm_m1=report["trajectory"]["max_norm_m1"],
            detected_blowup_time=(checks.get("blowup") or {}).get("detected_time"),
            mu=(checks.get("decay") or {}).get("mu"),
            error="",
        )
    except Exception as e:  # noqa: BLE001 - a sweep row must never kill the sweep
        row.update(exit_code=-1, checks_passed=0, checks_failed=0, blowup_suspected=None,
                   max_norm_m1=None, detected_blowup_time=None, mu=None, error=str(e))
    return row


SWEEP_COLUMNS = ("index", "value", "exit_code", "checks_passed", "checks_failed",
                 "blowup_suspected", "max_norm_m1", "detected_blowup_time", "mu", "error")


def run_sweep(config_path: str, param: str, values: list[float], parallel: int) -> int:
    base = load_config(config_path)
    base_out = base.output_dir
    base_out.mkdir(parents=True, exist_ok=True)
    jobs = []
    for i, v in enumerate(values):
        raw = set_by_path(base.raw, param, v)
        raw["output_dir"] = str(base_out / f"sweep_{i:03d}")
        parse_config(raw)  # validate early so config errors abort the sweep
        jobs.append((i, raw, str(base_out)))

    cap = os.environ.get(THREAD_ENV)
    workers = max(1, min(parallel, int(cap))) if cap else max(1, parallel)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_sweep_worker, jobs))
    else:
        rows = [_sweep_worker(j) for j in jobs]

    lines = [",".join(SWEEP_COLUMNS)]
    for i, row in enumerate(rows):
        row["value"] = values[i]
        cells = []
        for col in SWEEP_COLUMNS:
            v = row.get(col)
            if isinstance(v, bool):
                cells.append(str(v).lower())
            elif isinstance(v, float):
                cells.append(_fmt(v))
            elif v is None:
                cells.append("")
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    _atomic_write(base_out / "sweep.csv", "\n".join(lines) + "\n")
    print(f"sweep: {len(rows)} rows -> {base_out / 'sweep.csv'}")
    return 0


def run_certify(a0: float, f0: float, g0: float, kappa: float) -> int:
    cert = bl.certificate(a0, f0, g0, kappa)
    print(json.dumps(_certificate_json(cert), indent=2, sort_keys=True))
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="torwave", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one experiment config")
    p_run.add_argument("config", help="path to a JSON config file")

    p_sweep = sub.add_parser("sweep", help="run one config across parameter values")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--param", required=True, help="dotted numeric config field, e.g. source.constant")
    p_sweep.add_argument("--values", required=True, help="comma-separated numbers")
    p_sweep.add_argument("--parallel", type=int, default=1)

    p_cert = sub.add_parser("certify", help="print a blow-up certificate as JSON")
    p_cert.add_argument("--a0", type=float, required=True)
    p_cert.add_argument("--f0", type=float, required=True)
    p_cert.add_argument("--g0", type=float, required=True)
    p_cert.add_argument("--kappa", type=float, required=True)

    sub.add_parser("verify", help="run the built-in invariant suite")

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return run_experiment(load_config(args.config))
        if args.command == "sweep":
            values_str = [s for s in args.values.split(",") if s.strip()]
            values = [float(s) for s in values_str]
            return run_sweep(args.config, args.param, values, args.parallel)
        if args.command == "certify":
            return run_certify(args.a0, args.f0, args.g0, args.kappa)
        if args.command == "verify":
            from .verify import run_verify

            return run_verify()
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except DomainError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
