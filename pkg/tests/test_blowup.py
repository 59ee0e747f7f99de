import math

import numpy as np
import pytest

from torwave import (
    DomainError,
    SourceSpec,
    SpectralField,
    WaveState,
    certificate,
    check_hypotheses,
    detect_pde_blowup,
    integrate_F_ode,
    integrate_G_ode,
    jensen_gap,
    time_map,
    time_map_inverse,
    timestep_solve,
)
from torwave.spectral import grid_values, random_field

# frozen reference instance (a0=8, f0=0, g0=1, kappa=1/2), evaluated from the
# closed forms at 40-digit precision
REF_LAM = 0.9306048591020996
REF_BETA = 0.03594476651746087
REF_TAU0 = 1.8934435892925961
REF_T0 = 2.2390807560587430


class TestHypotheses:
    def test_mean_balance_fails_small_a0(self, grid8):
        f = SpectralField.zero(grid8)
        g = SpectralField.constant(grid8, 1.0)
        flags = check_hypotheses(1.0, 0.0, 1.0, f, g, 0.5)
        assert not flags["mean_balance"]
        assert not flags["all_ok"]

    def test_all_pass_large_a0(self, grid8):
        f = SpectralField.zero(grid8)
        g = SpectralField.constant(grid8, 1.0)
        flags = check_hypotheses(8.0, 0.0, 1.0, f, g, 0.5)
        assert flags["all_ok"]

    def test_sign_indefinite_laplacian_fails(self, grid8):
        f = SpectralField.from_modes(grid8, [((1, 0, 0), -0.05)])  # -0.1 cos x1
        g = SpectralField.constant(grid8, 1.0)
        flags = check_hypotheses(8.0, 0.0, 1.0, f, g, 0.5)
        assert not flags["laplacian_f_nonnegative"]


class TestCertificate:
    def test_reference_instance(self):
        cert = certificate(8.0, 0.0, 1.0, 0.5)
        assert cert.lam == pytest.approx(REF_LAM, rel=1e-14)
        assert cert.beta == pytest.approx(REF_BETA, rel=1e-13)
        assert cert.tau0 == pytest.approx(REF_TAU0, rel=1e-13)
        assert cert.t0 == pytest.approx(REF_T0, rel=1e-13)
        assert cert.certifies_blowup and cert.status == "certified"
        # round trip through the time map
        assert time_map(cert.t0, 0.5) == pytest.approx(cert.tau0, abs=1e-12)

    def test_boundary_degeneracy(self):
        g0 = math.sqrt(8.0 / 2.0)  # lam^4 = 0 exactly
        cert = certificate(8.0, 0.0, g0, 0.5)
        assert cert.lam == 0.0
        assert not cert.certifies_blowup
        assert cert.status == "not-certified"

    def test_balance_violation_no_certificate(self):
        cert = certificate(1.0, 0.0, 1.0, 0.5)
        assert not cert.hypotheses_ok["mean_balance"]
        assert not cert.certifies_blowup

    def test_nonpositive_g0_no_certificate(self):
        cert = certificate(8.0, 0.0, 0.0, 0.5)
        assert not cert.certifies_blowup
        assert "g0" in cert.reason

    def test_large_a0_monotone_approach_to_one(self):
        taus = [certificate(a0, 0.0, 1.0, 0.5).tau0 for a0 in (1e2, 1e4, 1e6)]
        assert all(b < a for a, b in zip(taus, taus[1:]))
        assert taus[-1] == pytest.approx(1.0, abs=0.02)


class TestTimeMap:
    def test_endpoints(self):
        assert time_map(0.0, 0.5) == 1.0

    def test_closed_value(self):
        assert time_map(math.log(4.0), 0.5) == pytest.approx(1.75, rel=1e-15)

    def test_round_trip(self, rng):
        for t in rng.uniform(0.0, 10.0, size=100):
            tau = time_map(float(t), 0.37)
            assert time_map_inverse(tau, 0.37) == pytest.approx(float(t), abs=1e-12)

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            time_map(-1.0, 0.5)
        with pytest.raises(DomainError):
            time_map_inverse(2.0, 0.5)


class TestFOde:
    def test_zero_source_closed_form(self):
        res = integrate_F_ode(0.0, 0.3, 0.8, 0.5, blowup_threshold=1e6, t_max=20.0)
        assert res.blowup_time is None
        expect = 0.3 + 0.8 * (1.0 - np.exp(-res.times)) / 1.0
        assert np.max(np.abs(res.values - expect)) < 1e-8

    def test_blowup_before_certificate_time(self):
        cert = certificate(8.0, 0.0, 1.0, 0.5)
        res = integrate_F_ode(8.0, 0.0, 1.0, 0.5)
        assert res.blowup_time is not None
        assert res.blowup_time <= cert.t0
        assert res.bracket[0] <= res.bracket[1]

    def test_derivative_stays_positive(self):
        res = integrate_F_ode(8.0, 0.0, 1.0, 0.5)
        assert np.all(res.derivatives > 0.0)

    def test_transformed_ode_agrees(self):
        res = integrate_F_ode(8.0, 0.0, 1.0, 0.5)
        t_g = integrate_G_ode(8.0, 0.0, 1.0, 0.5)
        assert abs(t_g - res.blowup_time) / res.blowup_time <= 0.02

    def test_threshold_validation(self):
        with pytest.raises(DomainError):
            integrate_F_ode(8.0, 0.0, 1.0, 0.5, blowup_threshold=100.0)


class TestJensen:
    def test_equality_for_constants(self, grid8):
        lhs, rhs = jensen_gap(SpectralField.zero(grid8), SourceSpec.constant(2.0), 0.0, 2.0)
        assert lhs == pytest.approx(rhs, rel=1e-14) == pytest.approx(2.0)

    def test_cosine_gap_value(self, grid8):
        # oracle: mean of (1 + 0.5 cos x1)^3 = 1 + 1.5 * 0.25 = 1.375
        u = SpectralField.from_modes(grid8, [((1, 0, 0), 0.25)])
        lhs, rhs = jensen_gap(u, SourceSpec.constant(1.0), 0.0, 1.0)
        assert lhs == pytest.approx(1.375, rel=1e-13)
        assert rhs == pytest.approx(1.0)
        assert lhs >= rhs

    def test_monte_carlo(self, grid8, rng):
        count = 0
        while count < 100:
            u = random_field(grid8, rng, max_wavenumber=2, norm=rng.uniform(0.0, 0.9), m=0.0)
            if float(np.min(1.0 + grid_values(u))) < 0.0:
                continue
            lhs, rhs = jensen_gap(u, SourceSpec.constant(1.0), 0.0, 1.0)
            assert lhs >= rhs - 1e-10
            count += 1

    def test_nonconstant_source_floor(self, grid8):
        a = SourceSpec.separable(("const", 1.0), [((0, 0, 0), 1.5), ((0, 1, 0), 0.25)])
        u = SpectralField.from_modes(grid8, [((1, 0, 0), 0.2)])
        lhs, rhs = jensen_gap(u, a, 0.0, 1.0)  # a >= 1.0 everywhere
        assert lhs >= rhs - 1e-10

    def test_rejects_negative_region(self, grid8):
        u = SpectralField.constant(grid8, -1.5)
        with pytest.raises(DomainError):
            jensen_gap(u, SourceSpec.constant(1.0), 0.0, 1.0)


class TestDetectPdeBlowup:
    def test_bounded_run_returns_none(self, grid8, rng):
        f = random_field(grid8, rng, max_wavenumber=1, norm=0.01, m=4.0)
        init = WaveState(0.0, f, SpectralField.zero(grid8))
        traj = timestep_solve(init, SourceSpec.constant(0.01), 3.0, 0.01)
        t, norms = detect_pde_blowup(traj, 3.0)
        assert t is None
        assert np.all(norms >= np.abs(traj.u[:, 0, 0, 0].real) - 1e-12)

    def test_constant_data_matches_reduced_ode(self, grid8):
        a0 = 8.0
        init = WaveState(0.0, SpectralField.constant(grid8, 0.0), SpectralField.constant(grid8, 1.0))
        traj = timestep_solve(init, SourceSpec.constant(a0), 2.0, 1e-3)
        t_pde, _ = detect_pde_blowup(traj, 3.0)
        res = integrate_F_ode(a0, 0.0, 1.0, 0.5)
        assert t_pde is not None
        assert abs(t_pde - res.blowup_time) / res.blowup_time <= 0.02

    def test_norm_dominates_mean_on_all_runs(self, grid8, rng):
        f = random_field(grid8, rng, max_wavenumber=2, norm=0.3, m=4.0)
        g = random_field(grid8, rng, max_wavenumber=2, norm=0.3, m=3.0)
        from torwave import solve_linear

        traj = solve_linear(WaveState(0.0, f, g), None, 5.0, 101)
        _, norms = detect_pde_blowup(traj, 3.0)
        assert np.all(norms >= np.abs(traj.u[:, 0, 0, 0].real) - 1e-12)


class TestCertificateInvariants:
    def test_lambda_and_beta_ranges(self, rng):
        count = 0
        while count < 40:
            a0 = float(rng.uniform(0.5, 64.0))
            f0 = float(rng.uniform(-0.5, 1.0))
            g0 = float(rng.uniform(0.01, 2.0))
            kappa = float(rng.uniform(0.05, 0.95))
            cert = certificate(a0, f0, g0, kappa)
            if not cert.hypotheses_ok.get("mean_balance", False):
                continue
            count += 1
            if math.isnan(cert.lam):
                continue
            assert cert.lam <= 1.0 + f0 + 1e-12
            if cert.lam > 0:
                assert 0.0 < cert.beta < 1.0
            if cert.t0 is not None:
                assert abs(time_map(cert.t0, kappa) - cert.tau0) <= 1e-12


class TestInconclusiveMargin:
    def test_tau0_at_the_strict_boundary(self):
        # pick a0 where tau0 crosses 2 transversally (limit 1 + 2*kappa > 2
        # at the degenerate edge for kappa = 0.8), then land inside the margin
        from scipy.optimize import brentq

        kappa = 0.8

        def tau0_of(a0):
            return certificate(a0, 0.0, 1.0, kappa).tau0

        a_star = brentq(lambda a: tau0_of(a) - 2.0, 20.0, 50.0, xtol=1e-15, rtol=8.9e-16)
        cert = certificate(a_star, 0.0, 1.0, kappa)
        assert abs(cert.tau0 - 2.0) < 1e-12
        assert cert.status == "inconclusive"
        assert not cert.certifies_blowup
        assert cert.t0 is None
        # just outside the margin on either side the verdict is decisive
        assert certificate(a_star * 1.01, 0.0, 1.0, kappa).certifies_blowup
        assert certificate(a_star * 0.99, 0.0, 1.0, kappa).status == "not-certified"
