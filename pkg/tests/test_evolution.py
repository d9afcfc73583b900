import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ksbesov.evolution import (
    ConfigurationError,
    ConfigurationWarning,
    DivergenceError,
    EquationSpec,
    StepperConfig,
    energy_series,
    forcing_xi_from_eta,
    integrate,
    linear_symbol,
    manufactured_forcing,
    random_initial_condition,
    vanishing_viscosity_run,
)
from ksbesov.identities import energy_balance_residual
from ksbesov.spectral import GridSpec, RealField, _shift_array, mean


def ks_symbol_at(xi):
    g = GridSpec(2 * np.pi / xi, 8)  # mode 1 sits at xi
    return linear_symbol(EquationSpec(), g)[1].real


class TestSymbols:
    def test_ks_neutral_mode(self):
        assert ks_symbol_at(1.0) == pytest.approx(0.0, abs=1e-15)

    def test_ks_fastest_growth(self):
        assert ks_symbol_at(1 / math.sqrt(2)) == pytest.approx(0.25, rel=1e-14)

    def test_ks_damped(self):
        assert ks_symbol_at(2.0) == pytest.approx(-12.0, rel=1e-14)

    def test_other_kinds(self):
        g = GridSpec(2 * np.pi, 8)
        xi = g.xi_rfft
        np.testing.assert_allclose(linear_symbol(EquationSpec("CapillaryBurgers"), g).real, -xi ** 4)
        np.testing.assert_allclose(linear_symbol(EquationSpec("ForcedBurgers", 0.3), g).real, -0.3 * xi ** 2)


class TestConfig:
    def test_ks_takes_no_forcing(self):
        with pytest.raises(ValueError):
            EquationSpec("KS", forcing_g=lambda t: 0.0)

    def test_capillary_carries_g_only(self):
        with pytest.raises(ValueError):
            EquationSpec("CapillaryBurgers", forcing_xi=lambda t: 0.0)

    def test_viscosity_rules(self):
        with pytest.raises(ValueError):
            EquationSpec("ForcedBurgers", viscosity=-1.0)
        with pytest.raises(ValueError):
            EquationSpec("KS", viscosity=0.1)

    @pytest.mark.parametrize("kw", [{"dt": 0.0}, {"dt": -1.0}, {"record_every": 0}, {"scheme": "RK4"}])
    def test_stepper_config(self, kw):
        with pytest.raises(ValueError):
            StepperConfig(**kw)

    def test_stiffness_guard(self):
        g = GridSpec(64.0, 256)
        with pytest.raises(ConfigurationError):
            integrate(EquationSpec(), random_initial_condition(g, 0), StepperConfig(dt=0.1), 1.0)

    def test_t_end_must_be_multiple_of_dt(self, grid):
        with pytest.raises(ConfigurationError):
            integrate(EquationSpec(), random_initial_condition(grid, 0), StepperConfig(dt=0.03), 0.1)


class TestIntegrate:
    def test_zero_is_fixed(self):
        grid = GridSpec(22.0, 64)
        run = integrate(EquationSpec(), RealField(grid, np.zeros(grid.N)), StepperConfig(dt=0.01), 1.0)
        assert np.all(run.trajectory.frames == 0.0)

    def test_records_every_k_steps(self):
        grid = GridSpec(22.0, 64)
        run = integrate(EquationSpec(), random_initial_condition(grid, 1),
                        StepperConfig(dt=0.01, record_every=10), 1.0, t0=2.0)
        tr = run.trajectory
        assert tr.n_frames == 11
        assert tr.t0 == 2.0 and tr.dt_rec == pytest.approx(0.1)
        np.testing.assert_allclose(run.energy_series, energy_series(tr))

    @given(st.integers(0, 1000))
    def test_ks_mean_stays_zero(self, seed):
        g = GridSpec(22.0, 64)
        u0 = random_initial_condition(g, seed)
        run = integrate(EquationSpec(), RealField(g, u0.samples + 0.3), StepperConfig(dt=0.05, record_every=20), 5.0)
        assert np.max(np.abs(np.mean(run.trajectory.frames, axis=1))) <= 1e-10

    def test_energy_balance_well_resolved(self):
        g = GridSpec(22.0, 64)
        burn = integrate(EquationSpec(), random_initial_condition(g, 4), StepperConfig(dt=0.05, record_every=400), 40.0)
        u = burn.trajectory.frame(burn.trajectory.n_frames - 1)
        run = integrate(EquationSpec(), u, StepperConfig(dt=0.005), 2.0)
        assert energy_balance_residual(run).residual_rel <= 1e-4

    def test_linear_growth_rate(self):
        L = 2 * np.pi / 0.6
        g = GridSpec(L, 32)
        u0 = g.sample(lambda x: 1e-3 * np.cos(0.6 * x))
        run = integrate(EquationSpec(linear_only=True), u0, StepperConfig(dt=0.01, record_every=100), 3.0)
        E = run.energy_series
        rate = np.log(E[1:] / E[:-1])
        np.testing.assert_allclose(rate, 2 * (0.6 ** 2 - 0.6 ** 4), rtol=1e-12)

    def test_galilean_invariance(self):
        g = GridSpec(22.0, 64)
        u0 = random_initial_condition(g, 2)
        U = 0.7
        T, every = 4.0, 100
        ref = integrate(EquationSpec(), u0, StepperConfig(dt=0.01, record_every=every), T)
        moved = integrate(EquationSpec(), RealField(g, u0.samples + U), StepperConfig(dt=0.01, record_every=every),
                          T, enforce_zero_mean=False)
        # u(t, x) = U + w(t, x - U t)
        for k, t in enumerate(moved.trajectory.times):
            back = _shift_array(moved.trajectory.frames[k], g, U * t) - U
            np.testing.assert_allclose(back, ref.trajectory.frames[k], atol=1e-9)

    def test_divergence_detected(self, grid):
        k = 2 * np.pi / grid.L
        spec = EquationSpec("ForcedBurgers", viscosity=1.0, forcing_g=lambda t: 1e12 * np.sin(k * grid.x))
        with pytest.raises(DivergenceError) as info:
            integrate(spec, RealField(grid, np.zeros(grid.N)), StepperConfig(dt=0.01), 1.0)
        assert 0 < info.value.time <= 1.0

    def test_diagnostics(self):
        grid = GridSpec(22.0, 64)
        run = integrate(EquationSpec(), random_initial_condition(grid, 0), StepperConfig(dt=0.01), 0.1)
        assert 0 <= run.diagnostics["resolution_ratio"] <= 1


class TestManufactured:
    def test_zero(self, grid):
        eta = manufactured_forcing(lambda t, x: 0 * x, "ForcedBurgers", grid)
        assert np.max(np.abs(eta(0.3))) == 0.0

    def test_static_mode(self, grid):
        a, k = 0.4, 2 * np.pi / grid.L
        eta = manufactured_forcing(lambda t, x: a * np.sin(k * x) + 0 * t, "ForcedBurgers", grid)
        np.testing.assert_allclose(eta(1.0), a * a * k / 2 * np.sin(2 * k * grid.x), atol=1e-14)

    def test_pointwise_against_symbolic(self, grid):
        k = 2 * np.pi / grid.L
        x = grid.x
        eta = manufactured_forcing(lambda t, x: 0.1 * np.sin(k * x) * np.cos(t), "ForcedBurgers", grid)
        for t in (0.0, 0.7, 2.1):
            exact = -0.1 * np.sin(k * x) * np.sin(t) + 0.01 * k * np.sin(k * x) * np.cos(k * x) * np.cos(t) ** 2
            np.testing.assert_allclose(eta(t), exact, atol=1e-12)

    def test_capillary_and_ks_terms(self, grid):
        k = 2 * np.pi / grid.L
        u = lambda t, x: 0.1 * np.sin(k * x) + 0 * t
        base = manufactured_forcing(u, "ForcedBurgers", grid)(0.0)
        cap = manufactured_forcing(u, "CapillaryBurgers", grid)(0.0)
        ks = manufactured_forcing(u, "KS", grid)(0.0)
        tol = 64 * np.finfo(float).eps * grid.xi_rfft[-1] ** 4
        np.testing.assert_allclose(cap - base, 0.1 * k ** 4 * np.sin(k * grid.x), atol=tol)
        np.testing.assert_allclose(ks - cap, -0.1 * k ** 2 * np.sin(k * grid.x), atol=tol)

    @staticmethod
    def _burgers_error(scheme, dt, grid):
        k = 2 * np.pi / grid.L
        u_star = lambda t, x: 0.1 * np.sin(k * x) * np.cos(t)
        eta = manufactured_forcing(u_star, "ForcedBurgers", grid)
        spec = EquationSpec("ForcedBurgers", forcing_xi=forcing_xi_from_eta(eta, grid))
        run = integrate(spec, grid.sample(lambda x: u_star(0.0, x)), StepperConfig(scheme, dt), 1.0)
        return float(np.max(np.abs(run.trajectory.frames[-1] - u_star(1.0, grid.x))))

    def test_etdrk4_order(self, grid):
        e1 = self._burgers_error("ETDRK4", 0.1, grid)
        e2 = self._burgers_error("ETDRK4", 0.05, grid)
        assert e1 < 1e-6
        assert e1 / e2 >= 8.0

    def test_imex_order(self, grid):
        e1 = self._burgers_error("IMEX", 0.02, grid)
        e2 = self._burgers_error("IMEX", 0.01, grid)
        assert e1 / e2 >= 3.0


class TestVanishingViscosity:
    def test_large_viscosity_decays(self, grid):
        u0 = grid.sample(lambda x: np.sin(2 * np.pi * x / grid.L))
        [(eps, run)] = vanishing_viscosity_run(u0, [1.0], StepperConfig(dt=0.01, record_every=10), 2.0)
        E = run.energy_series
        assert np.all(np.diff(E) < 0)
        assert E[-1] < 0.5 * E[0]

    def test_zero_initial_data(self, grid):
        out = vanishing_viscosity_run(RealField(grid, np.zeros(grid.N)), [0.5, 0.25],
                                      StepperConfig(dt=0.01), 0.5)
        assert [e for e, _ in out] == [0.5, 0.25]
        assert all(np.all(r.trajectory.frames == 0) for _, r in out)

    def test_unresolved_viscosity_skipped(self, grid):
        u0 = grid.sample(lambda x: np.sin(2 * np.pi * x / grid.L))
        with pytest.warns(ConfigurationWarning):
            out = vanishing_viscosity_run(u0, [1.0, 1e-4], StepperConfig(dt=0.01), 0.1)
        assert [e for e, _ in out] == [1.0]

    @pytest.mark.parametrize("eps", [[], [0.1, 0.2], [0.1, 0.0]])
    def test_bad_lists(self, grid, eps):
        with pytest.raises(ValueError):
            vanishing_viscosity_run(RealField(grid, np.zeros(grid.N)), eps, StepperConfig(dt=0.01), 0.1)
