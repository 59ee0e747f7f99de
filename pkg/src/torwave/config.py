"""Experiment configuration: JSON schema, validation, construction.

A config file looks like

    {
      "grid": {"n_per_dim": 8, "m": 3.0, "kappa": 0.5},
      "initial": {
        "f": {"constant": 0.0},
        "g": {"modes": [[[0, 1, 0], [0.0, 0.003]]]}
      },
      "source": {"constant": 0.05},
      "t_end": 10.0,
      "dt": 0.01,
      "n_samples": 201,
      "solver": "picard",
      "solver_options": {"R": 1.0, "tol": 1e-8, "max_iter": 25},
      "checks": ["energy", "gronwall", "decay"],
      "output_dir": "out",
      "svg": true
    }

Mode lists give one representative per +-k pair as [[k1,k2,k3], [re, im]];
the conjugate partner is implied.  A separable source replaces "constant"
with {"envelope": {"kind": "exp", "c": 1.0, "rate": -0.1}, "modes": [...]}.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .fields import GridSpec, SourceSpec, SpectralField, WaveState

SOLVERS = ("picard", "timestep", "linear-only")
CHECKS = ("energy", "gronwall", "decay", "blowup", "positivity", "jensen")


class ConfigError(ValueError):
    """Invalid configuration; message carries the offending field path."""


def _require(cond: bool, path: str, msg: str) -> None:
    if not cond:
        raise ConfigError(f"{path}: {msg}")


def _get(d: dict, key: str, path: str, typ=None, default=...):
    if key not in d:
        if default is not ...:
            return default
        raise ConfigError(f"{path}.{key}: required field missing")
    v = d[key]
    if typ is not None and not isinstance(v, typ):
        raise ConfigError(f"{path}.{key}: expected {typ}, got {type(v).__name__}")
    return v


@dataclass
class ExperimentConfig:
    """Validated experiment description plus constructed model objects."""

    raw: dict
    grid: GridSpec
    initial: WaveState
    source: SourceSpec
    t_end: float
    dt: float
    n_samples: int
    solver: str
    solver_options: dict
    checks: tuple[str, ...]
    output_dir: Path
    svg: bool
    decay_mu_threshold: float = 1e-3


def _parse_field_spec(spec: Any, grid: GridSpec, path: str) -> SpectralField:
    _require(isinstance(spec, dict), path, "expected an object")
    if "constant" in spec:
        _require(isinstance(spec["constant"], (int, float)), f"{path}.constant", "expected a number")
        return SpectralField.constant(grid, float(spec["constant"]))
    if "modes" in spec:
        modes = spec["modes"]
        _require(isinstance(modes, list), f"{path}.modes", "expected a list")
        pairs = []
        for i, entry in enumerate(modes):
            p = f"{path}.modes[{i}]"
            _require(isinstance(entry, list) and len(entry) == 2, p, "expected [[k1,k2,k3],[re,im]]")
            k, c = entry
            _require(isinstance(k, list) and len(k) == 3 and all(isinstance(x, int) for x in k), p, "bad wavevector")
            _require(isinstance(c, list) and len(c) == 2, p, "coefficient must be [re, im]")
            pairs.append((tuple(k), complex(float(c[0]), float(c[1]))))
        try:
            return SpectralField.from_modes(grid, pairs)
        except ValueError as e:
            raise ConfigError(f"{path}.modes: {e}") from e
    raise ConfigError(f"{path}: needs 'constant' or 'modes'")


def _parse_source(spec: Any, path: str) -> SourceSpec:
    _require(isinstance(spec, dict), path, "expected an object")
    if "constant" in spec:
        _require(isinstance(spec["constant"], (int, float)), f"{path}.constant", "expected a number")
        return SourceSpec.constant(float(spec["constant"]))
    env_spec = _get(spec, "envelope", path, dict)
    kind = _get(env_spec, "kind", f"{path}.envelope", str)
    if kind == "const":
        envelope = ("const", float(_get(env_spec, "c", f"{path}.envelope", (int, float))))
    elif kind == "exp":
        envelope = (
            "exp",
            float(_get(env_spec, "c", f"{path}.envelope", (int, float))),
            float(_get(env_spec, "rate", f"{path}.envelope", (int, float))),
        )
    elif kind == "poly":
        coeffs = _get(env_spec, "coeffs", f"{path}.envelope", list)
        envelope = ("poly", tuple(float(c) for c in coeffs))
    else:
        raise ConfigError(f"{path}.envelope.kind: unknown kind {kind!r}")
    modes_spec = _get(spec, "modes", path, list)
    pairs = []
    for i, entry in enumerate(modes_spec):
        p = f"{path}.modes[{i}]"
        _require(isinstance(entry, list) and len(entry) == 2, p, "expected [[k1,k2,k3],[re,im]]")
        k, c = entry
        pairs.append((tuple(int(x) for x in k), complex(float(c[0]), float(c[1]))))
    try:
        return SourceSpec.separable(envelope, pairs)
    except ValueError as e:
        raise ConfigError(f"{path}.modes: {e}") from e


def parse_config(raw: dict, base_dir: Path | None = None) -> ExperimentConfig:
    _require(isinstance(raw, dict), "<root>", "config must be a JSON object")
    gspec = _get(raw, "grid", "<root>", dict)
    n = _get(gspec, "n_per_dim", "grid", int)
    m = float(_get(gspec, "m", "grid", (int, float), default=3.0))
    kappa = float(_get(gspec, "kappa", "grid", (int, float)))
    try:
        grid = GridSpec(n, m, kappa)
    except ValueError as e:
        raise ConfigError(f"grid: {e}") from e

    init_spec = _get(raw, "initial", "<root>", dict)
    f_field = _parse_field_spec(_get(init_spec, "f", "initial", dict), grid, "initial.f")
    g_field = _parse_field_spec(_get(init_spec, "g", "initial", dict), grid, "initial.g")
    initial = WaveState(0.0, f_field, g_field)

    source = _parse_source(_get(raw, "source", "<root>", dict), "source")

    t_end = float(_get(raw, "t_end", "<root>", (int, float)))
    _require(t_end > 0, "t_end", "must be positive")
    dt = float(_get(raw, "dt", "<root>", (int, float), default=0.01))
    _require(dt > 0, "dt", "must be positive")
    n_samples = int(_get(raw, "n_samples", "<root>", int, default=200))
    _require(n_samples >= 2, "n_samples", "must be >= 2")

    solver = _get(raw, "solver", "<root>", str)
    _require(solver in SOLVERS, "solver", f"must be one of {SOLVERS}")
    solver_options = _get(raw, "solver_options", "<root>", dict, default={})

    checks_raw = _get(raw, "checks", "<root>", list, default=[])
    checks = []
    for i, c in enumerate(checks_raw):
        _require(isinstance(c, str) and c in CHECKS, f"checks[{i}]", f"must be one of {CHECKS}")
        _require(c not in checks, f"checks[{i}]", "duplicate check")
        checks.append(c)
    if "blowup" in checks:
        _require(solver == "timestep", "checks", "the blowup check needs the timestep solver")
    if "decay" in checks:
        _require(t_end >= 10.0 / kappa - 1e-9, "checks", f"the decay check needs t_end >= 10/kappa = {10.0/kappa:g}")

    out_raw = _get(raw, "output_dir", "<root>", str, default="torwave_out")
    output_dir = Path(out_raw)
    if base_dir is not None and not output_dir.is_absolute():
        output_dir = base_dir / output_dir
    svg = bool(_get(raw, "svg", "<root>", bool, default=False))
    mu_thr = float(_get(raw, "decay_mu_threshold", "<root>", (int, float), default=1e-3))

    return ExperimentConfig(
        raw=raw,
        grid=grid,
        initial=initial,
        source=source,
        t_end=t_end,
        dt=dt,
        n_samples=n_samples,
        solver=solver,
        solver_options=dict(solver_options),
        checks=tuple(checks),
        output_dir=output_dir,
        svg=svg,
        decay_mu_threshold=mu_thr,
    )


def load_config(path: str | Path) -> ExperimentConfig:
    p = Path(path)
    try:
        raw = json.loads(p.read_text())
    except FileNotFoundError as e:
        raise ConfigError(f"<file>: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"<file>: invalid JSON: {e}") from e
    return parse_config(raw, base_dir=p.parent)


def set_by_path(raw: dict, dotted: str, value: float) -> dict:
    """Return a copy of ``raw`` with the dotted numeric field replaced."""
    out = json.loads(json.dumps(raw))
    parts = dotted.split(".")
    node = out
    for key in parts[:-1]:
        if not isinstance(node, dict) or key not in node:
            raise ConfigError(f"{dotted}: no such config field")
        node = node[key]
    last = parts[-1]
    if not isinstance(node, dict) or last not in node:
        raise ConfigError(f"{dotted}: no such config field")
    if not isinstance(node[last], (int, float)) or isinstance(node[last], bool):
        raise ConfigError(f"{dotted}: not a numeric field")
    node[last] = value
    return out
