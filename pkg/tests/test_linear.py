import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from torwave import (
    DomainError,
    GridSpec,
    ModeForcing,
    SpectralField,
    UnsupportedParameterError,
    WaveState,
    linear_energy_bound,
    solve_linear,
    solve_mode_nonzero,
    solve_mode_zero,
)
from torwave.energy import fit_decay_rate
from torwave.spectral import homogeneous_norm, random_field, sobolev_norm, sobolev_norm_stack


def mode_ode_oracle(ksq, kappa, f, g, forcing, t_end):
    """Adaptive integration of c'' + 2k c' + |k|^2 c = e^{-kt} F(t)."""

    def rhs(t, y):
        fv = forcing(t) if forcing is not None else 0.0
        acc = -2.0 * kappa * complex(y[1], y[3]) - ksq * complex(y[0], y[2]) + math.exp(-kappa * t) * fv
        return [y[1], acc.real, y[3], acc.imag]

    f, g = complex(f), complex(g)
    sol = solve_ivp(rhs, (0.0, t_end), [f.real, g.real, f.imag, g.imag],
                    method="DOP853", rtol=1e-11, atol=1e-13, dense_output=True)
    return lambda t: complex(sol.sol(t)[0], sol.sol(t)[2])


class TestModeNonzero:
    def test_initial_condition(self):
        assert solve_mode_nonzero((1, 0, 0), 1.0, 0.0, None, 0.0, 0.5) == pytest.approx(1.0)

    def test_free_closed_form_frozen(self):
        # oracle value: e^{-1/2} (cos(sqrt(3)/2) + (1/sqrt(3)) sin(sqrt(3)/2))
        om = math.sqrt(0.75)
        expect = math.exp(-0.5) * (math.cos(om) + (0.5 / om) * math.sin(om))
        got = solve_mode_nonzero((1, 0, 0), 1.0, 0.0, None, 1.0, 0.5)
        assert got == pytest.approx(expect, rel=1e-14)
        oracle = mode_ode_oracle(1.0, 0.5, 1.0, 0.0, None, 1.0)
        assert abs(got - oracle(1.0)) < 1e-10

    def test_unit_forcing_against_ode(self):
        got = solve_mode_nonzero((1, 0, 0), 0.0, 0.0, lambda t: 1.0, 1.0, 0.5)
        # bracketed closed form: e^{-kt} (1 - cos(om t)) / om^2
        om2 = 0.75
        expect = math.exp(-0.5) * (1.0 - math.cos(math.sqrt(om2))) / om2
        assert got == pytest.approx(expect, rel=1e-12)
        oracle = mode_ode_oracle(1.0, 0.5, 0.0, 0.0, lambda t: 1.0, 1.0)
        assert abs(got - oracle(1.0)) < 1e-10

    @pytest.mark.parametrize("kappa", [0.1, 0.5, 0.9])
    @pytest.mark.parametrize("kvec", [(1, 0, 0), (2, 0, 0), (5, 0, 0), (1, 2, 0)])
    def test_against_ode_oracle(self, kappa, kvec):
        ksq = sum(k * k for k in kvec)
        forcing = lambda t: (0.7 - 0.3j) * math.cos(1.7 * t) * math.exp(-0.1 * t)
        oracle = mode_ode_oracle(ksq, kappa, 0.4 + 0.2j, -0.1 + 0.3j, forcing, 10.0)
        for t in (0.5, 2.0, 5.0, 10.0):
            got = solve_mode_nonzero(kvec, 0.4 + 0.2j, -0.1 + 0.3j, forcing, t, kappa)
            ref = oracle(t)
            assert abs(got - ref) <= 1e-8 * max(1.0, abs(ref))

    def test_rejects_negative_time(self):
        with pytest.raises(DomainError):
            solve_mode_nonzero((1, 0, 0), 1.0, 0.0, None, -0.1, 0.5)

    def test_rejects_zero_mode(self):
        with pytest.raises(DomainError):
            solve_mode_nonzero((0, 0, 0), 1.0, 0.0, None, 1.0, 0.5)

    def test_rejects_bad_kappa(self):
        with pytest.raises(UnsupportedParameterError):
            solve_mode_nonzero((1, 0, 0), 1.0, 0.0, None, 1.0, 1.5)


class TestModeZero:
    def test_constant_persists(self):
        for t in (0.0, 1.0, 7.3):
            assert solve_mode_zero(2.5, 0.0, None, t, 0.5) == pytest.approx(2.5)

    def test_velocity_relaxation(self):
        got = solve_mode_zero(0.0, 1.0, None, 1.0, 0.5)
        assert got == pytest.approx(1.0 - math.exp(-1.0), rel=1e-14)
        oracle = mode_ode_oracle(0.0, 0.5, 0.0, 1.0, None, 1.0)
        assert abs(got - oracle(1.0).real) < 1e-10

    def test_monotone_bounded_limit(self):
        vals = [solve_mode_zero(0.0, 1.0, None, t, 0.5) for t in (1.0, 2.0, 5.0, 10.0, 40.0)]
        assert all(b > a for a, b in zip(vals, vals[1:]))
        assert vals[-1] == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("kappa", [0.1, 0.5, 0.9])
    def test_forced_against_ode(self, kappa):
        forcing = lambda t: 0.8 * math.sin(0.9 * t) + 0.2
        oracle = mode_ode_oracle(0.0, kappa, 0.3, -0.2, forcing, 10.0)
        for t in (1.0, 4.0, 10.0):
            got = solve_mode_zero(0.3, -0.2, forcing, t, kappa)
            ref = oracle(t).real
            assert abs(got - ref) <= 1e-8 * max(1.0, abs(ref))


class TestModeForcing:
    def test_samples_recorded_increasing(self):
        mf = ModeForcing.constant((1, 0, 0), 1.0)
        solve_mode_nonzero((1, 0, 0), 0.0, 0.0, mf, 2.0, 0.5)
        times, values = mf.sample_arrays()
        assert len(times) > 0
        assert np.all(np.diff(times) > 0)
        assert np.allclose(values, 1.0)


class TestSolveLinear:
    def test_mode_decoupling(self, grid8):
        f = SpectralField.from_modes(grid8, [((1, 0, 0), 0.5)])
        init = WaveState(0.0, f, SpectralField.zero(grid8))
        traj = solve_linear(init, None, 3.0, 31)
        mask = np.ones(traj.u.shape[1:], dtype=bool)
        mask[1, 0, 0] = mask[-1, 0, 0] = False
        assert np.max(np.abs(traj.u[:, mask])) == 0.0

    def test_superposition(self, grid8, rng):
        f1 = random_field(grid8, rng, max_wavenumber=2, norm=0.4, m=3.0)
        f2 = random_field(grid8, rng, max_wavenumber=2, norm=0.2, m=3.0)
        g1 = random_field(grid8, rng, max_wavenumber=2, norm=0.1, m=3.0)
        zero = SpectralField.zero(grid8)
        t_a = solve_linear(WaveState(0.0, f1, g1), None, 2.0, 21)
        t_b = solve_linear(WaveState(0.0, f2, zero), None, 2.0, 21)
        t_ab = solve_linear(WaveState(0.0, f1 + f2, g1), None, 2.0, 21)
        assert np.max(np.abs(t_ab.u - (t_a.u + t_b.u))) < 1e-12

    def test_constant_forcing_is_pure_zero_mode(self, grid8, zero_state):
        F = SpectralField.constant(grid8, 1.0)
        traj = solve_linear(zero_state, lambda t: F, 2.0, 21)
        for i, t in enumerate(traj.times):
            expect = solve_mode_zero(0.0, 0.0, lambda s: 1.0, float(t), 0.5)
            assert traj.u[i, 0, 0, 0].real == pytest.approx(expect, abs=1e-12)
        hom = traj.u.copy()
        hom[:, 0, 0, 0] = 0.0
        assert np.max(np.abs(hom)) == 0.0

    def test_derivative_consistency(self, grid8, rng):
        # d/dt track must match finite differences of the u track
        f = random_field(grid8, rng, max_wavenumber=2, norm=0.3, m=3.0)
        g = random_field(grid8, rng, max_wavenumber=2, norm=0.3, m=3.0)
        F = random_field(grid8, rng, max_wavenumber=1, norm=0.2, m=3.0)
        traj = solve_linear(WaveState(0.0, f, g), lambda t: F * math.cos(t), 1.0, 401)
        dt = traj.times[1] - traj.times[0]
        fd = (traj.u[2:] - traj.u[:-2]) / (2 * dt)
        err = np.max(np.abs(fd - traj.u_t[1:-1]))
        assert err < 5e-5  # second-order difference of a smooth track

    def test_pde_residual_of_linear_solution(self, grid8, rng):
        from torwave import SourceSpec, pde_residual

        f = random_field(grid8, rng, max_wavenumber=1, norm=0.3, m=3.0)
        init = WaveState(0.0, f, SpectralField.zero(grid8))
        traj = solve_linear(init, None, 2.0, 201)
        traj.a_spec = SourceSpec.zero()
        assert pde_residual(traj, None) < 1e-7


class TestLinearEnergyBound:
    def test_zero_everything(self, zero_state):
        assert linear_energy_bound(zero_state, None, None, None, 1.0, 3.0) == 0.0

    def test_cosine_frozen_value(self, grid8):
        # oracle: 2 e^{-1} (1 + 2 k^2)(1 + t^2) ||cos||_{Hdot^{m+1}}^2 = 3/e at t=1
        f = SpectralField.from_modes(grid8, [((1, 0, 0), 0.5)])
        init = WaveState(0.0, f, SpectralField.zero(grid8))
        bound = linear_energy_bound(init, None, None, None, 1.0, 0.0)
        assert bound == pytest.approx(3.0 * math.exp(-1.0), rel=1e-14)
        traj = solve_linear(init, None, 1.0, 11)
        assert sobolev_norm(traj.u_field(-1), 1.0) ** 2 <= bound

    def test_monte_carlo_domination(self, grid8, rng):
        for _ in range(30):
            f = random_field(grid8, rng, max_wavenumber=2, norm=rng.uniform(0, 0.5), m=4.0)
            g = random_field(grid8, rng, max_wavenumber=2, norm=rng.uniform(0, 0.5), m=3.0)
            F = random_field(grid8, rng, max_wavenumber=2, norm=rng.uniform(0, 0.5), m=3.0)
            freq = rng.uniform(0.0, 2.0)
            phase = rng.uniform(0, 2 * np.pi)
            init = WaveState(0.0, f, g)
            traj = solve_linear(init, lambda t: F * math.cos(freq * t + phase), 5.0, 51)
            hn = homogeneous_norm(F, 3.0) * np.abs(np.cos(freq * traj.times + phase))
            zn = abs(F.mean()) * np.abs(np.cos(freq * traj.times + phase))
            norms = sobolev_norm_stack(traj.u, grid8, 4.0)
            for i, t in enumerate(traj.times):
                b = linear_energy_bound(init, traj.times, hn, zn, float(t), 3.0)
                assert norms[i] ** 2 <= b * (1 + 1e-8) + 1e-300

    def test_free_decay_exponent(self):
        # traveling-wave data (g_k = (i om - kappa) f_k) make |u_k| = |f_k| e^{-kappa t}
        # exactly, so the fit sees the pure decay rate without amplitude beats
        for kappa in (0.1, 0.5, 0.9):
            grid = GridSpec(8, 3.0, kappa)
            modes = [((2, 0, 0), 0.3), ((0, 1, 1), 0.1 - 0.2j)]
            f = SpectralField.from_modes(grid, modes)
            gmodes = []
            for k, c in modes:
                om = math.sqrt(sum(x * x for x in k) - kappa**2)
                gmodes.append((k, (1j * om - kappa) * c))
            g = SpectralField.from_modes(grid, gmodes)
            traj = solve_linear(WaveState(0.0, f, g), None, 10.0, 801)
            norms = sobolev_norm_stack(traj.u, grid, 4.0)
            mask = (traj.times >= 2.0) & (traj.times <= 10.0)
            rate = fit_decay_rate(traj.times[mask], norms[mask])
            assert abs(rate - kappa) <= 0.02 * kappa
