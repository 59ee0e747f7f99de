"""Backend selection and the shared driver for the retarded integral.

The shell accumulation (trilinear periodic gather over sphere nodes) is
the hot loop of the positivity iteration.  A compiled Cython kernel is
used when the extension built; otherwise a vectorised numpy fallback with
identical semantics takes over.  Set ``TORWAVE_KERNEL=python`` to force
the fallback (the benchmark uses this to compare the two).
"""

from __future__ import annotations

import math
import os
from functools import lru_cache

import numpy as np

from . import _retarded_np

try:
    from . import _retarded as _compiled
except ImportError:
    _compiled = None

FOUR_PI = 4.0 * math.pi


def backend_name() -> str:
    if _compiled is not None and os.environ.get("TORWAVE_KERNEL", "") != "python":
        return "compiled"
    return "python"


def _accumulate():
    if backend_name() == "compiled":
        return _compiled.accumulate_shell
    return _retarded_np.accumulate_shell


@lru_cache(maxsize=4)
def _gl2() -> tuple[tuple[float, ...], tuple[float, ...]]:
    x, w = np.polynomial.legendre.leggauss(2)
    return tuple(x), tuple(w)


def _cubic_weights(times: np.ndarray, t: float) -> tuple[int, np.ndarray]:
    nt = len(times)
    j = int(np.searchsorted(times, t, side="right") - 1)
    j = min(max(j, 0), nt - 2)
    width = min(4, nt)
    base = min(max(j - 1, 0), nt - width)
    pts = times[base : base + width]
    w = np.ones(width)
    for i in range(width):
        for l in range(width):
            if l != i:
                w[i] *= (t - pts[l]) / (pts[i] - pts[l])
    return base, w


def _spectral_shell(g_hat: np.ndarray, rho: float, dots: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Exact sphere sum of the band-limited interpolant at radius rho.

    sum_q w_q g(x + rho xi_q) = ifft of (g_hat_k * sum_q w_q e^{i rho k.xi_q});
    the per-mode factor is real for a point-symmetric rule.  ``dots`` holds
    the precomputed k.xi_q table of shape (n^3, Q).
    """
    n = g_hat.shape[0]
    A = (np.cos(rho * dots) @ w).reshape(g_hat.shape)
    return np.fft.ifftn(g_hat * A).real * n**3


def retarded_potential(
    g_stack: np.ndarray,
    times: np.ndarray,
    xi_nodes: np.ndarray,
    xi_weights: np.ndarray,
    panel_width: float = 0.05,
    interp: str = "spectral",
) -> np.ndarray:
    """(1/4pi) int_0^t (t-s) [sphere-sum of G(s, x + (t-s) xi)] ds per node.

    ``g_stack`` holds G on the uniform space-time grid; evaluation between
    samples is cubic in time (Lagrange on 4 neighbours).  In space the
    shifted values come from the band-limited interpolant (``spectral``,
    the default: one weighted FFT per quadrature node, exact for the grid's
    trigonometric interpolant) or from periodic trilinear interpolation
    (``trilinear``: the compiled/numpy shell kernels; cheaper per node but
    carries an O(h^2) bias that caps the attainable accuracy).  Time
    quadrature: 2-point Gauss-Legendre on panels no wider than
    ``panel_width``.
    """
    g_stack = np.ascontiguousarray(g_stack, dtype=np.float64)
    times = np.asarray(times, dtype=np.float64)
    xi_nodes = np.ascontiguousarray(xi_nodes, dtype=np.float64)
    xi_weights = np.ascontiguousarray(xi_weights, dtype=np.float64)
    if interp not in ("spectral", "trilinear"):
        raise ValueError(f"unknown interpolation scheme {interp!r}")
    out = np.zeros_like(g_stack)
    nt = g_stack.shape[0]
    if nt < 2:
        return out
    spectral = interp == "spectral"
    if spectral:
        n = g_stack.shape[1]
        g_hat_stack = np.fft.fftn(g_stack, axes=(1, 2, 3)) / n**3
        k = np.fft.fftfreq(n, d=1.0 / n)
        k1, k2, k3 = np.meshgrid(k, k, k, indexing="ij")
        kvecs = np.stack([k1.ravel(), k2.ravel(), k3.ravel()], axis=1)
        dots = kvecs @ xi_nodes.T
    else:
        accumulate = _accumulate()
    gl_x, gl_w = _gl2()
    for i in range(1, nt):
        t = float(times[i])
        if t <= 0:
            continue
        n_panels = max(1, math.ceil(t / panel_width))
        edges = np.linspace(0.0, t, n_panels + 1)
        acc = np.zeros(g_stack.shape[1:])
        for p in range(n_panels):
            mid = 0.5 * (edges[p] + edges[p + 1])
            half = 0.5 * (edges[p + 1] - edges[p])
            for xg, wg in zip(gl_x, gl_w):
                s = mid + half * xg
                w = half * wg
                base, tw = _cubic_weights(times, s)
                rho = t - s
                if spectral:
                    gh_s = np.tensordot(tw, g_hat_stack[base : base + len(tw)], axes=(0, 0))
                    acc += (w * rho / FOUR_PI) * _spectral_shell(gh_s, rho, dots, xi_weights)
                else:
                    g_s = np.ascontiguousarray(np.tensordot(tw, g_stack[base : base + len(tw)], axes=(0, 0)))
                    accumulate(g_s, rho, xi_nodes, xi_weights, w * rho / FOUR_PI, acc)
        out[i] = acc
    return out
