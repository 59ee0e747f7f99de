"""Built-in invariant suite behind ``torwave verify``.

A compact, seeded subset of the package's correctness properties that runs
in well under a minute: spectral identities, mode-formula agreement with an
independent adaptive ODE integration, a-priori bound domination, blow-up
certificate values, Jensen, quadrature exactness, and CLI determinism.
"""

from __future__ import annotations

import json
import math
import tempfile
from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp

from . import blowup as bl
from .energy import energy_track, gronwall_bound_track
from .fields import GridSpec, SourceSpec, SpectralField, WaveState
from .kernels import retarded_potential
from .linear import linear_energy_bound, solve_linear, solve_mode_nonzero, solve_mode_zero
from .positivity import lebedev_quadrature
from .spectral import (
    eval_cubic_source,
    forward_transform,
    gradient,
    grid_values,
    homogeneous_norm,
    inverse_transform,
    project_mean,
    random_field,
    sobolev_norm,
    sobolev_norm_stack,
)

_report: list[tuple[str, bool, str]] = []


def _check(name: str, ok: bool, detail: str = "") -> None:
    _report.append((name, bool(ok), detail))
    print(f"[{'ok' if ok else 'FAIL'}] {name}" + (f": {detail}" if detail else ""))


def _mode_oracle(ksq: float, kappa: float, f: complex, g: complex, forcing, t_end: float):
    def rhs(t, y):
        fv = forcing(t) if forcing is not None else 0.0
        acc = -2.0 * kappa * (y[1] + 1j * y[3]) - ksq * (y[0] + 1j * y[2]) + math.exp(-kappa * t) * fv
        return [y[1], acc.real, y[3], acc.imag]

    y0 = [f.real, g.real, f.imag, g.imag]
    sol = solve_ivp(rhs, (0.0, t_end), y0, method="DOP853", rtol=1e-11, atol=1e-13, dense_output=True)
    return lambda t: complex(sol.sol(t)[0], sol.sol(t)[2])


def run_verify() -> int:
    _report.clear()
    rng = np.random.default_rng(2024)
    grid = GridSpec(8, 3.0, 0.5)

    # spectral identities on random band-limited fields
    worst_rt = worst_par = worst_dec = worst_grad = 0.0
    for _ in range(25):
        f = random_field(grid, rng)
        vals = inverse_transform(f)
        rt = forward_transform(vals, grid)
        scale = max(1.0, float(np.max(np.abs(f.coeffs))))
        worst_rt = max(worst_rt, float(np.max(np.abs(rt.coeffs - f.coeffs))) / scale)
        l2 = math.sqrt(float(np.mean(vals**2)))
        worst_par = max(worst_par, abs(l2 - sobolev_norm(f, 0.0)) / max(l2, 1e-30))
        mean, hom = project_mean(f)
        n2 = sobolev_norm(f, 3.0) ** 2
        worst_dec = max(worst_dec, abs(n2 - (mean**2 + homogeneous_norm(hom, 3.0) ** 2)) / max(n2, 1e-30))
        gd = gradient(f)
        lhs = homogeneous_norm(f, 3.0)
        rhs = math.sqrt(sum(homogeneous_norm(c, 2.0) ** 2 for c in gd))
        worst_grad = max(worst_grad, abs(lhs - rhs) / max(lhs, 1e-30))
    _check("transform round-trip <= 1e-12", worst_rt <= 1e-12, f"worst {worst_rt:.2e}")
    _check("Parseval <= 1e-12", worst_par <= 1e-12, f"worst {worst_par:.2e}")
    _check("norm decomposition <= 1e-12", worst_dec <= 1e-12, f"worst {worst_dec:.2e}")
    _check("gradient identity <= 1e-12", worst_grad <= 1e-12, f"worst {worst_grad:.2e}")

    # mode formulas against an adaptive ODE integration
    worst = 0.0
    for kappa in (0.1, 0.5, 0.9):
        for kvec, ksq in (((0, 0, 0), 0), ((1, 0, 0), 1), ((2, 0, 0), 4), ((5, 0, 0), 25)):
            forcing = lambda t: math.cos(1.3 * t) * math.exp(-0.2 * t) * (1.0 + 0.5j)
            oracle = _mode_oracle(float(ksq), kappa, 0.3 - 0.1j if ksq else 0.3 + 0j, 0.2 + 0.2j if ksq else 0.2 + 0j, forcing, 10.0)
            for t in (0.7, 3.0, 10.0):
                if ksq:
                    got = solve_mode_nonzero(kvec, 0.3 - 0.1j, 0.2 + 0.2j, forcing, t, kappa)
                else:
                    got = solve_mode_zero(0.3, 0.2, lambda s: forcing(s).real, t, kappa)
                ref = oracle(t) if ksq else oracle(t).real
                worst = max(worst, abs(got - ref) / max(abs(ref), 1e-12))
    _check("mode closed forms vs ODE oracle <= 1e-8", worst <= 1e-8, f"worst rel {worst:.2e}")

    # a-priori bound domination on random linear solves
    worst_gap = 0.0
    ok = True
    for _ in range(10):
        f = random_field(grid, rng, max_wavenumber=2, norm=0.3, m=4.0)
        g = random_field(grid, rng, max_wavenumber=2, norm=0.3, m=3.0)
        amp = rng.uniform(0.0, 0.5)
        F = random_field(grid, rng, max_wavenumber=2, norm=amp, m=3.0)
        init = WaveState(0.0, f, g)
        traj = solve_linear(init, lambda t: F, 4.0, 81)
        hn = np.full(traj.n_samples, homogeneous_norm(F, 3.0))
        zn = np.full(traj.n_samples, abs(F.mean()))
        norms = sobolev_norm_stack(traj.u, grid, 4.0)
        for i, t in enumerate(traj.times):
            b = linear_energy_bound(init, traj.times, hn, zn, float(t), 3.0)
            ok = ok and norms[i] ** 2 <= b * (1 + 1e-8) + 1e-300
            worst_gap = max(worst_gap, norms[i] ** 2 - b)
    _check("linear energy bound dominates", ok, f"worst excess {worst_gap:.2e}")

    # integral energy bound along a forced trajectory
    f = random_field(grid, rng, max_wavenumber=2, norm=0.05, m=4.0, zero_mean=True)
    g = random_field(grid, rng, max_wavenumber=2, norm=0.05, m=3.0, zero_mean=True)
    traj = solve_linear(WaveState(0.0, f, g), None, 20.0, 201)
    traj.a_spec = SourceSpec.zero()
    E = energy_track(traj, 3.0)
    B = gronwall_bound_track(traj, 3.0)
    _check("Gronwall bound dominates E(t)", bool(np.all(E <= B * (1 + 1e-6) + 1e-300)))

    # blow-up certificate reference values and time-map identities
    cert = bl.certificate(8.0, 0.0, 1.0, 0.5)
    ok = (
        abs(cert.tau0 - 1.8934435892925961) < 1e-12
        and abs(cert.t0 - 2.2390807560587430) < 1e-12
        and cert.certifies_blowup
    )
    _check("certificate reference instance", ok, f"tau0={cert.tau0:.6f} t0={cert.t0:.6f}")
    ts = rng.uniform(0.0, 8.0, size=50)
    worst = max(abs(bl.time_map_inverse(bl.time_map(t, 0.3), 0.3) - t) for t in ts)
    _check("time map round-trip <= 1e-12", worst <= 1e-12, f"worst {worst:.2e}")

    # Jensen inequality on random admissible fields
    ok = True
    for _ in range(50):
        u = random_field(grid, rng, max_wavenumber=2, norm=rng.uniform(0, 0.8), m=0.0)
        if float(np.min(1.0 + grid_values(u))) < 0:
            continue
        lhs, rhs = bl.jensen_gap(u, SourceSpec.constant(1.0), 0.0, 1.0)
        ok = ok and lhs >= rhs - 1e-10
    _check("Jensen inequality", ok)

    # sphere rule and retarded kernel
    quad = lebedev_quadrature()
    _check("sphere weights sum to 4*pi", abs(float(np.sum(quad.weights)) - 4 * math.pi) <= 1e-12)
    times = np.linspace(0.0, 1.0, 11)
    G = np.ones((11, 4, 4, 4))
    out = retarded_potential(G, times, quad.nodes, quad.weights)
    worst = float(np.max(np.abs(out - (times**2 / 2)[:, None, None, None])))
    _check("retarded integral of a constant", worst <= 1e-12, f"worst {worst:.2e}")

    # dealiased cubic against a fine-grid reference
    u = random_field(grid, rng, max_wavenumber=2, norm=0.5, m=0.0)
    src = eval_cubic_source(SourceSpec.constant(1.0), 0.0, u)
    n_ref = 4 * grid.n_per_dim
    ref_grid = GridSpec(n_ref, 3.0, 0.5)
    uref = SpectralField.zero(ref_grid)
    kv, amps = u.active_modes
    for k, c in zip(kv, amps):
        uref.coeffs[ref_grid.mode_index(tuple(k))] = c
    cube = (1.0 + grid_values(uref)) ** 3
    ref_coeffs = np.fft.fftn(cube) / n_ref**3
    worst = 0.0
    for k, c in zip(*src.active_modes):
        worst = max(worst, abs(c - ref_coeffs[ref_grid.mode_index(tuple(k))]))
    _check("dealiased cubic matches fine-grid reference", worst <= 1e-13, f"worst {worst:.2e}")

    # CLI determinism on a small config
    from .cli import run_experiment
    from .config import parse_config

    with tempfile.TemporaryDirectory() as td:
        raw = {
            "grid": {"n_per_dim": 8, "m": 3.0, "kappa": 0.5},
            "initial": {"f": {"modes": [[[1, 0, 0], [0.002, 0.0]]]}, "g": {"constant": 0.0}},
            "source": {"constant": 0.01},
            "t_end": 2.0,
            "solver": "linear-only",
            "n_samples": 41,
            "checks": ["energy", "gronwall"],
            "output_dir": "a",
        }
        outs = []
        for sub in ("a", "b"):
            raw2 = dict(raw)
            raw2["output_dir"] = sub
            cfg = parse_config(raw2, base_dir=Path(td))
            run_experiment(cfg)
            outs.append(
                (Path(td) / sub / "trajectory.csv").read_bytes()
                + (Path(td) / sub / "report.json").read_bytes()
            )
        # the report echoes output_dir, so normalise it before comparing
        norm = [o.replace(b'"a"', b'"X"').replace(b'"b"', b'"X"') for o in outs]
        _check("CLI outputs bit-identical", norm[0] == norm[1])

    failures = [name for name, ok, _ in _report if not ok]
    print(f"verify: {len(_report) - len(failures)}/{len(_report)} invariants hold")
    if failures:
        print("failed:", ", ".join(failures))
        return 1
    return 0
