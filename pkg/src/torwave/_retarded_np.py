"""Pure-numpy retarded-integral kernel (fallback backend).

Shifting every grid node by the same offset rho*xi turns the trilinear
gather into eight circular rolls of the slab, which keeps the whole shell
accumulation vectorised.
"""

from __future__ import annotations

import math

import numpy as np

TWO_PI = 2.0 * math.pi


def accumulate_shell(
    g: np.ndarray,
    rho: float,
    xi: np.ndarray,
    wxi: np.ndarray,
    scale: float,
    out: np.ndarray,
) -> None:
    """out += scale * sum_q wxi[q] * g(x + rho*xi_q), trilinear and periodic.

    ``g`` holds samples on the uniform [0, 2pi)^3 grid; evaluation points
    off the lattice are trilinearly interpolated with periodic wrap.
    """
    shape = np.asarray(g.shape, dtype=np.float64)
    steps = shape / TWO_PI
    for q in range(len(wxi)):
        s = rho * xi[q] * steps
        i0 = np.floor(s).astype(np.int64)
        f = s - i0
        w_q = scale * wxi[q]
        for a in (0, 1):
            wa = f[0] if a else 1.0 - f[0]
            if wa == 0.0:
                continue
            for b in (0, 1):
                wb = f[1] if b else 1.0 - f[1]
                if wb == 0.0:
                    continue
                for c in (0, 1):
                    wc = f[2] if c else 1.0 - f[2]
                    if wc == 0.0:
                        continue
                    shift = (-(int(i0[0]) + a), -(int(i0[1]) + b), -(int(i0[2]) + c))
                    out += (w_q * wa * wb * wc) * np.roll(g, shift, axis=(0, 1, 2))
