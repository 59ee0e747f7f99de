"""torwave: pseudo-spectral laboratory for a damped cubic wave equation on T^3.

The model problem is

    u_tt + 2*kappa*u_t - Lap u = exp(-kappa*t) a(t,x) (1+u)^3,   x in [0,2pi)^3,

with 0 < kappa < 1.  The package provides exact per-mode linear solves, a
fixed-point and an independent time-stepping nonlinear solver, energy and
decay monitors, finite-time blow-up certificates, and a spherical-means
positivity check, plus a CLI for runs, sweeps and certification.
"""

from .fields import (
    CorruptFieldError,
    DimensionError,
    DomainError,
    GridMismatchError,
    GridSpec,
    SourceSpec,
    SpectralField,
    Trajectory,
    UnsupportedParameterError,
    WaveState,
)
from .spectral import (
    binary_product,
    eval_cubic_source,
    forward_transform,
    gradient,
    grid_values,
    homogeneous_norm,
    inner_product_m,
    inverse_transform,
    laplacian,
    project_mean,
    random_field,
    sobolev_norm,
)
from .linear import ModeForcing, linear_energy_bound, solve_linear, solve_mode_nonzero, solve_mode_zero
from .evolve import (
    PicardReport,
    ThresholdReport,
    compute_thresholds,
    pde_residual,
    picard_solve,
    timestep_solve,
)
from .energy import (
    EnergyReport,
    assemble_V,
    decay_diagnostics,
    energy,
    gronwall_bound,
    gronwall_check,
    gronwall_lemma_check,
    monotone_energy_check,
)
from .blowup import (
    BlowupCertificate,
    certificate,
    check_hypotheses,
    detect_pde_blowup,
    integrate_F_ode,
    integrate_G_ode,
    jensen_gap,
    time_map,
    time_map_inverse,
)
from .positivity import (
    G_eval,
    PhiIterate,
    SphereQuadrature,
    check_positivity_hypotheses,
    free_wave_spectral,
    kirchhoff_free,
    kirchhoff_iterate,
    lebedev_quadrature,
    min_one_plus_u,
    product_quadrature,
)

__version__ = "0.1.0"
