"""Finite-time blow-up machinery: certificates, the reduced ODE, detection.

The spatial mean F(t) of the solution obeys

    F'' + 2*kappa*F' >= exp(-kappa*t) a0 (1+F)^3

whenever the source is bounded below by a0 > 0 and 1+u stays nonnegative
(Jensen).  Under sign conditions on the data the comparison argument gives
an explicit upper bound t0 on the blow-up time; this module computes that
certificate, integrates the equality ODE, and checks PDE runs against both.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .fields import DomainError, SourceSpec, SpectralField, Trajectory
from .spectral import eval_cubic_source, grid_values, laplacian, sobolev_norm_stack

#: strictness margin on the finiteness condition tau0 < 2
TAU_MARGIN = 1e-12

#: round-off tolerance for sign checks on analytically nonnegative data
SIGN_TOL = 1e-12


def time_map(t: float, kappa: float) -> float:
    """tau = 2 - exp(-2*kappa*t); bijection [0, inf) -> [1, 2)."""
    if t < 0:
        raise DomainError(f"t must be >= 0, got {t}")
    return 2.0 - math.exp(-2.0 * kappa * t)


def time_map_inverse(tau: float, kappa: float) -> float:
    if not 1.0 <= tau < 2.0:
        raise DomainError(f"tau must lie in [1, 2), got {tau}")
    return -math.log(2.0 - tau) / (2.0 * kappa)


def check_hypotheses(
    a0: float,
    f0_hat: float,
    g0_hat: float,
    f_field: SpectralField,
    g_field: SpectralField,
    kappa: float,
) -> dict:
    """Grid evaluation of the sign conditions behind the blow-up bound."""
    f_vals = grid_values(f_field)
    g_vals = grid_values(g_field)
    lap_f = grid_values(laplacian(f_field))
    flags = {
        "a0_positive": a0 > 0,
        "one_plus_f_positive": float(np.min(1.0 + f_vals)) > 0.0,
        "laplacian_f_nonnegative": float(np.min(lap_f)) >= -SIGN_TOL,
        "velocity_combination_nonnegative": float(np.min(kappa * (1.0 + f_vals) + g_vals)) >= -SIGN_TOL,
        "g0_positive": g0_hat > 0,
        "mean_balance": g0_hat**2 - (a0 / 2.0) * (1.0 + f0_hat) ** 4 <= 0.0,
    }
    flags["all_ok"] = all(flags.values())
    return flags


@dataclass(frozen=True)
class BlowupCertificate:
    """Closed-form blow-up bound from the mean data.

    lam^4 = (1+f0)^4 - 2 g0^2/a0, beta = (1+f0-lam)/(1+f0+lam),
    tau0 = sqrt(2)*kappa/(lam*sqrt(a0)) * ln(1/beta) + 1 and
    t0 = inverse time map of tau0 (defined only when tau0 < 2).
    """

    a0: float
    f0_hat: float
    g0_hat: float
    kappa: float
    lam: float
    beta: float
    tau0: float
    t0: float | None
    hypotheses_ok: dict
    certifies_blowup: bool
    status: str
    reason: str = ""


def certificate(a0: float, f0_hat: float, g0_hat: float, kappa: float) -> BlowupCertificate:
    """Evaluate the blow-up certificate for spatially averaged data."""
    hyp = {
        "a0_positive": a0 > 0,
        "one_plus_f0_positive": 1.0 + f0_hat > 0,
        "g0_positive": g0_hat > 0,
    }
    nan = math.nan
    if not all(hyp.values()):
        hyp["mean_balance"] = False
        return BlowupCertificate(a0, f0_hat, g0_hat, kappa, nan, nan, nan, None, hyp, False,
                                 "not-certified", "sign hypotheses on a0, 1+f0, g0 fail")
    lam4 = (1.0 + f0_hat) ** 4 - 2.0 * g0_hat**2 / a0
    hyp["mean_balance"] = lam4 >= 0.0
    if lam4 < 0.0:
        return BlowupCertificate(a0, f0_hat, g0_hat, kappa, nan, nan, nan, None, hyp, False,
                                 "not-certified", "mean balance g0^2 <= (a0/2)(1+f0)^4 fails")
    lam = lam4**0.25
    if lam == 0.0:
        return BlowupCertificate(a0, f0_hat, g0_hat, kappa, 0.0, 1.0, nan, None, hyp, False,
                                 "not-certified", "degenerate boundary case lam = 0")
    beta = (1.0 + f0_hat - lam) / (1.0 + f0_hat + lam)
    tau0 = math.sqrt(2.0) * kappa / (lam * math.sqrt(a0)) * math.log(1.0 / beta) + 1.0
    if tau0 < 2.0 - TAU_MARGIN:
        t0 = time_map_inverse(tau0, kappa)
        return BlowupCertificate(a0, f0_hat, g0_hat, kappa, lam, beta, tau0, t0, hyp, True, "certified")
    if tau0 < 2.0 + TAU_MARGIN:
        return BlowupCertificate(a0, f0_hat, g0_hat, kappa, lam, beta, tau0, None, hyp, False,
                                 "inconclusive", "tau0 within margin of the strict bound 2")
    return BlowupCertificate(a0, f0_hat, g0_hat, kappa, lam, beta, tau0, None, hyp, False,
                             "not-certified", "tau0 >= 2: bound not finite in t")


@dataclass
class FOdeResult:
    """Adaptive integration record of the reduced mean ODE."""

    times: np.ndarray
    values: np.ndarray
    derivatives: np.ndarray
    blowup_time: float | None
    bracket: tuple[float, float] | None


def integrate_F_ode(
    a0: float,
    f0: float,
    g0: float,
    kappa: float,
    blowup_threshold: float = 1e8,
    t_max: float = 50.0,
) -> FOdeResult:
    """Integrate F'' + 2*kappa*F' = exp(-kappa*t) a0 (1+F)^3 (equality form).

    Reports the first threshold crossing as the detected blow-up time; the
    bracket's upper end adds the asymptotic remaining-time estimate
    sqrt(2/(a0 e^{-kappa t}))/F at the crossing, so the true singular time
    lies inside the bracket for explosive runs.
    """
    if blowup_threshold < 1e6:
        raise DomainError("blowup_threshold must be at least 1e6")

    def rhs(t, y):
        return [y[1], -2.0 * kappa * y[1] + math.exp(-kappa * t) * a0 * (1.0 + y[0]) ** 3]

    def crossing(t, y):
        return y[0] - blowup_threshold

    crossing.terminal = True
    crossing.direction = 1
    sol = solve_ivp(
        rhs,
        (0.0, t_max),
        [f0, g0],
        method="DOP853",
        rtol=1e-10,
        atol=1e-12,
        events=crossing,
        dense_output=False,
        max_step=0.25,
    )
    blowup_time = None
    bracket = None
    if sol.t_events[0].size:
        t_cross = float(sol.t_events[0][0])
        blowup_time = t_cross
        tail = math.sqrt(2.0 / (a0 * math.exp(-kappa * t_cross))) / blowup_threshold if a0 > 0 else 0.0
        bracket = (t_cross, t_cross + 2.0 * tail)
    return FOdeResult(
        times=sol.t,
        values=sol.y[0],
        derivatives=sol.y[1],
        blowup_time=blowup_time,
        bracket=bracket,
    )


def integrate_G_ode(
    a0: float,
    f0: float,
    g0: float,
    kappa: float,
    blowup_threshold: float = 1e8,
) -> float | None:
    """Blow-up time via the transformed variable on tau in [1, 2).

    Integrates G'' = (a0 / (4 kappa^2)) e^{3 kappa t(tau)} (1+G)^3 with
    G(1) = f0, G'(1) = g0/(2 kappa) and maps the crossing back through the
    inverse time map.  Cross-validates the direct integration.
    """
    if blowup_threshold < 1e6:
        raise DomainError("blowup_threshold must be at least 1e6")

    def rhs(tau, y):
        growth = (2.0 - tau) ** -1.5  # e^{3 kappa t(tau)}
        return [y[1], a0 / (4.0 * kappa**2) * growth * (1.0 + y[0]) ** 3]

    def crossing(tau, y):
        return y[0] - blowup_threshold

    crossing.terminal = True
    crossing.direction = 1
    sol = solve_ivp(
        rhs,
        (1.0, 2.0 - 1e-12),
        [f0, g0 / (2.0 * kappa)],
        method="DOP853",
        rtol=1e-10,
        atol=1e-12,
        events=crossing,
        max_step=0.01,
    )
    if sol.t_events[0].size:
        return time_map_inverse(float(sol.t_events[0][0]), kappa)
    return None


def jensen_gap(u: SpectralField, a_spec: SourceSpec, t: float, a0: float) -> tuple[float, float]:
    """(spatial mean of a(t,.)(1+u)^3,  a0 (1 + mean u)^3).

    The first dominates the second whenever a >= a0 > 0 and 1+u >= 0 on the
    grid; callers outside that domain get a DomainError since the convexity
    argument does not apply.
    """
    vals = 1.0 + grid_values(u)
    if float(np.min(vals)) < 0.0:
        raise DomainError("Jensen comparison needs min(1+u) >= 0 on the grid")
    lhs = eval_cubic_source(a_spec, t, u).mean()
    rhs = a0 * (1.0 + u.mean()) ** 3
    return lhs, rhs


def detect_pde_blowup(
    traj: Trajectory,
    m: float,
    threshold: float = 1e8,
) -> tuple[float | None, np.ndarray]:
    """First sample where ||u||_{H^{m+1}} crosses the threshold, if any.

    Falls back to the stepper's own truncation flag when no stored sample
    crossed.  Also verifies the elementary lower bound
    ||u||_{H^{m+1}} >= |mean u| at every sample.
    """
    norms = sobolev_norm_stack(traj.u, traj.grid, m + 1.0)
    means = np.abs(traj.u[:, 0, 0, 0].real)
    if np.any(norms < means - 1e-9 * np.maximum(means, 1.0)):
        raise AssertionError("norm fell below |mean u|: corrupted trajectory")
    crossed = np.nonzero(~np.isfinite(norms) | (norms >= threshold))[0]
    if crossed.size:
        return float(traj.times[crossed[0]]), norms
    if traj.blowup_suspected:
        t = traj.last_valid_time if traj.last_valid_time is not None else traj.t_end
        return float(t), norms
    return None, norms
