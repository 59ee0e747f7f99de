"""Spectral operations: transforms, Sobolev norms, projections, nonlinearity.

Norms follow the coefficient conventions

    ||f||_{H^m}^2  = |c_0|^2 + sum_{k != 0} |k|^{2m} |c_k|^2
    ||f||_{Hdot^m}^2 =          sum_{k != 0} |k|^{2m} |c_k|^2

with |k|^2 = k1^2 + k2^2 + k3^2 evaluated in integer arithmetic before the
real power.  All reductions run in fixed array order, so results are
bit-reproducible regardless of threading in the caller.
"""

from __future__ import annotations

import numpy as np

from .fields import (
    CorruptFieldError,
    DimensionError,
    GridMismatchError,
    GridSpec,
    SourceSpec,
    SpectralField,
)

#: conjugate-symmetry defect above which a coefficient array is rejected
SYMMETRY_TOL = 1e-10

#: relative imaginary residue tolerated when synthesising grid values
IMAG_TOL = 1e-12


def forward_transform(values: np.ndarray, grid: GridSpec) -> SpectralField:
    """Collocation samples on the grid -> Fourier coefficients."""
    values = np.asarray(values, dtype=np.float64)
    n = grid.n_per_dim
    if values.shape != (n, n, n):
        raise DimensionError(f"sample array shape {values.shape} != {(n, n, n)}")
    coeffs = np.fft.fftn(values) / n**3
    return SpectralField(grid, coeffs)


def inverse_transform(field: SpectralField) -> np.ndarray:
    """Pointwise evaluation of the trigonometric polynomial on the grid."""
    defect = field.symmetry_defect()
    if defect > SYMMETRY_TOL:
        raise CorruptFieldError(f"conjugate symmetry violated by {defect:.3e}")
    n = field.grid.n_per_dim
    values = np.fft.ifftn(field.coeffs) * n**3
    scale = max(1.0, float(np.max(np.abs(values.real))))
    residue = float(np.max(np.abs(values.imag))) / scale
    if residue > IMAG_TOL:
        raise CorruptFieldError(f"imaginary residue {residue:.3e} exceeds {IMAG_TOL}")
    return np.ascontiguousarray(values.real)


def grid_values(field: SpectralField) -> np.ndarray:
    """Cached grid samples of a field."""
    cache = field.__dict__.setdefault("_values_cache", {})
    if "v" not in cache:
        cache["v"] = inverse_transform(field)
    return cache["v"]


def sobolev_norm(field: SpectralField, m: float) -> float:
    if m < 0:
        raise ValueError("norm order m must be >= 0")
    w = field.grid.sobolev_weight(m)
    hom = np.sum(w * np.abs(field.coeffs) ** 2)
    return float(np.sqrt(np.abs(field.coeffs[0, 0, 0]) ** 2 + hom))


def homogeneous_norm(field: SpectralField, m: float) -> float:
    if m < 0:
        raise ValueError("norm order m must be >= 0")
    w = field.grid.sobolev_weight(m)
    return float(np.sqrt(np.sum(w * np.abs(field.coeffs) ** 2)))


def inner_product_m(u: SpectralField, v: SpectralField, m: float) -> float:
    if u.grid != v.grid:
        raise GridMismatchError("inner product needs a shared grid")
    w = u.grid.sobolev_weight(m)
    hom = np.sum(w * np.real(u.coeffs * np.conj(v.coeffs)))
    zero = np.real(u.coeffs[0, 0, 0] * np.conj(v.coeffs[0, 0, 0]))
    return float(zero + hom)


def project_mean(field: SpectralField) -> tuple[float, SpectralField]:
    """Split into the spatial mean and the zero-mean remainder."""
    mean = field.mean()
    hom = field.coeffs.copy()
    hom[0, 0, 0] = 0.0
    return mean, SpectralField(field.grid, hom)


def gradient(field: SpectralField) -> tuple[SpectralField, ...]:
    k = field.grid.axis_wavenumbers.astype(np.float64)
    c = field.coeffs
    parts = (
        1j * k[:, None, None] * c,
        1j * k[None, :, None] * c,
        1j * k[None, None, :] * c,
    )
    return tuple(SpectralField(field.grid, p) for p in parts)


def laplacian(field: SpectralField) -> SpectralField:
    ksq = field.grid.k_squared.astype(np.float64)
    return SpectralField(field.grid, -ksq * field.coeffs)


def homogeneous_norm_vector(fields: tuple[SpectralField, ...], m: float) -> float:
    return float(np.sqrt(sum(homogeneous_norm(f, m) ** 2 for f in fields)))


def grid_l2_norm(values: np.ndarray) -> float:
    """L2 norm w.r.t. the normalised measure dx/(2pi)^3, by grid quadrature."""
    return float(np.sqrt(np.mean(np.asarray(values) ** 2)))


# -- dealiased cubic nonlinearity --------------------------------------


def _zero_nyquist(coeffs: np.ndarray) -> np.ndarray:
    """Drop the per-axis Nyquist planes (effective band |k_i| <= n/2 - 1).

    A 2n collocation grid is alias-free for the cubic of a field with
    per-axis band K only when 4K < 2n; keeping the Nyquist plane would
    break that by one mode.
    """
    out = coeffs.copy()
    n = coeffs.shape[0]
    half = n // 2
    out[half, :, :] = 0.0
    out[:, half, :] = 0.0
    out[:, :, half] = 0.0
    return out


def _pad_coeffs(coeffs: np.ndarray, n_fine: int) -> np.ndarray:
    n = coeffs.shape[0]
    half = n // 2
    out = np.zeros((n_fine, n_fine, n_fine), dtype=np.complex128)
    sl_src = [np.r_[0:half], np.r_[half:n]]
    sl_dst = [np.r_[0:half], np.r_[n_fine - half : n_fine]]
    for a in range(2):
        for b in range(2):
            for c in range(2):
                out[np.ix_(sl_dst[a], sl_dst[b], sl_dst[c])] = coeffs[np.ix_(sl_src[a], sl_src[b], sl_src[c])]
    return out


def _truncate_coeffs(coeffs_fine: np.ndarray, n: int) -> np.ndarray:
    n_fine = coeffs_fine.shape[0]
    half = n // 2
    out = np.zeros((n, n, n), dtype=np.complex128)
    sl_src = [np.r_[0:half], np.r_[n_fine - half : n_fine]]
    sl_dst = [np.r_[0:half], np.r_[half:n]]
    for a in range(2):
        for b in range(2):
            for c in range(2):
                out[np.ix_(sl_dst[a], sl_dst[b], sl_dst[c])] = coeffs_fine[np.ix_(sl_src[a], sl_src[b], sl_src[c])]
    return out


def dealias_grid_size(grid: GridSpec, source_band: int = 0) -> int:
    """Fine-grid size for alias-free evaluation of a * (1+u)^3.

    With u banded to K = n/2 - 1 the cubic reaches 3K, the product with the
    source reaches 3K + source_band, and contamination of retained modes
    |k| <= K needs the fine size M to satisfy M > 4K + source_band.
    """
    n = grid.n_per_dim
    need = 4 * (n // 2 - 1) + source_band + 1
    m = max(2 * n, need)
    return m + (m % 2)


def eval_cubic_source(a_spec: SourceSpec, t: float, u: SpectralField) -> SpectralField:
    """Spectral representation of a(t,.) * (1 + u)^3, alias-free.

    The damping envelope exp(-kappa*t) is NOT applied here; callers that
    need the full right-hand side multiply it on afterwards.
    """
    grid = u.grid
    n = grid.n_per_dim
    n_fine = dealias_grid_size(grid, a_spec.max_wavenumber)
    coeffs = _zero_nyquist(u.coeffs)
    fine = _pad_coeffs(coeffs, n_fine)
    u_fine = np.fft.ifftn(fine).real * n_fine**3
    product = a_spec.values_on_grid(t, n_fine) * (1.0 + u_fine) ** 3
    prod_coeffs = np.fft.fftn(product) / n_fine**3
    return SpectralField(grid, _zero_nyquist(_truncate_coeffs(prod_coeffs, n)))


def binary_product(u: SpectralField, v: SpectralField) -> SpectralField:
    """Alias-free pointwise product of two fields, truncated to the grid."""
    if u.grid != v.grid:
        raise GridMismatchError("product needs a shared grid")
    n = u.grid.n_per_dim
    n_fine = dealias_grid_size(u.grid)
    uf = np.fft.ifftn(_pad_coeffs(_zero_nyquist(u.coeffs), n_fine)).real * n_fine**3
    vf = np.fft.ifftn(_pad_coeffs(_zero_nyquist(v.coeffs), n_fine)).real * n_fine**3
    prod = np.fft.fftn(uf * vf) / n_fine**3
    return SpectralField(u.grid, _zero_nyquist(_truncate_coeffs(prod, n)))


# -- random band-limited fields (probing / testing) ---------------------


def random_field(
    grid: GridSpec,
    rng: np.random.Generator,
    max_wavenumber: int | None = None,
    norm: float | None = None,
    m: float | None = None,
    zero_mean: bool = False,
) -> SpectralField:
    """Random real field, optionally rescaled to a target H^m norm."""
    n = grid.n_per_dim
    kmax = max_wavenumber if max_wavenumber is not None else n // 2 - 1
    kmax = min(kmax, n // 2 - 1)
    values = np.zeros((n, n, n))
    x1, x2, x3 = grid.meshgrid
    for _ in range(6):
        k = rng.integers(-kmax, kmax + 1, size=3)
        amp = rng.normal()
        phase = rng.uniform(0, 2 * np.pi)
        values += amp * np.cos(k[0] * x1 + k[1] * x2 + k[2] * x3 + phase)
    f = forward_transform(values, grid)
    if zero_mean:
        f = project_mean(f)[1]
    if norm is not None:
        cur = sobolev_norm(f, m if m is not None else grid.sobolev_order_m)
        if cur > 0:
            f = f * (norm / cur)
    return f


def sobolev_norm_stack(coeff_stack: np.ndarray, grid: GridSpec, m: float) -> np.ndarray:
    """H^m norms along the first (time) axis of a coefficient stack."""
    w = grid.sobolev_weight(m)
    hom = np.einsum("ijk,tijk->t", w, np.abs(coeff_stack) ** 2)
    return np.sqrt(np.abs(coeff_stack[:, 0, 0, 0]) ** 2 + hom)


def homogeneous_norm_stack(coeff_stack: np.ndarray, grid: GridSpec, m: float) -> np.ndarray:
    w = grid.sobolev_weight(m)
    return np.sqrt(np.einsum("ijk,tijk->t", w, np.abs(coeff_stack) ** 2))
