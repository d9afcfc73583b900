import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import optimize

from ksbesov.besov import (
    BesovParams,
    HGrid,
    LPFamily,
    abs_stability_ratio,
    agmon_check,
    besov_norm_fd,
    besov_norm_lp,
    conjugate_exponent,
    derivative_transfer_check,
    duality_bound_check,
    duality_pairing,
    interpolated_params,
    interpolation_check,
    lp_decompose,
    lp_profile,
    rescaled_norm,
    sobolev_check,
    structure_function,
    three_scale_split,
    transfer_field,
)
from ksbesov.spectral import DomainError, GridSpec, RealField, Trajectory, band_limited_noise, shift

seeds = st.integers(0, 2**32 - 1)
SMOOTH = st.sampled_from([0.3, 0.5, 0.7])
P_EXP = st.sampled_from([2.0, 3.0])
G = GridSpec(10.0, 64)


def sine(grid, n=1):
    return grid.sample(lambda x: np.sin(2 * np.pi * n * x / grid.L))


def sine_cube_moment(h, L):
    """int_0^L |D^h sin(2 pi x / L)|^3 dx."""
    return 8 * abs(np.sin(np.pi * h / L)) ** 3 * L * 4 / (3 * np.pi)


class TestParams:
    def test_validation(self):
        with pytest.raises(ValueError):
            BesovParams(0.5, 0.5, 2)
        with pytest.raises(ValueError):
            BesovParams(0.5, 2, 0.9)
        with pytest.raises(ValueError):
            BesovParams(math.nan, 2, 2)
        BesovParams(0.5, math.inf, math.inf)

    def test_dual(self):
        d = BesovParams(1 / 3, 3, math.inf).dual()
        assert d.s == pytest.approx(2 / 3) and d.p == pytest.approx(1.5) and d.r == 1.0
        assert conjugate_exponent(1.0) == math.inf

    def test_interpolated(self):
        bp = interpolated_params(BesovParams(0.3, 2, 2), BesovParams(0.7, 3, 3), 0.5)
        assert bp.s == pytest.approx(0.5)
        assert 1 / bp.p == pytest.approx(0.5 * (1 / 2 + 1 / 3))


class TestHGrid:
    def test_layout(self):
        hg = HGrid.for_grid(G)
        assert np.all(np.diff(hg.offsets) > 0)
        assert hg.offsets[0] >= G.dx / 4 * (1 - 1e-12)
        assert hg.offsets[-1] <= G.L / 2 * (1 + 1e-12)
        assert hg.h_lower == pytest.approx(G.dx / 4)

    @pytest.mark.parametrize("a,b", [(0.1, 4.9), (0.0, 5.0), (1.25, 3.75)])
    def test_weights_integrate_polynomials(self, a, b):
        hg = HGrid.span(G, a, b)
        lo = hg.h_lower if a == 0 else a
        assert np.sum(hg.weights) == pytest.approx(b - lo, rel=1e-12)
        # Gauss-Legendre in log h below 16 dx is accurate, not exact, on powers of h
        assert np.sum(hg.weights * hg.offsets ** 2) == pytest.approx((b ** 3 - lo ** 3) / 3, rel=1e-7)
        assert np.sum(hg.log_weights) == pytest.approx(math.log(b / lo), rel=1e-7)

    def test_rejects_bad_interval(self):
        with pytest.raises(ValueError):
            HGrid.span(G, 2.0, 1.0)
        with pytest.raises(ValueError):
            HGrid.span(G, 0.0, 1.0, h_first=G.dx / 8)


class TestLittlewoodPaley:
    def test_profile_support(self):
        xi = np.geomspace(0.1, 10, 2001)
        f = lp_profile(xi)
        assert np.all(f[(xi <= 0.5) | (xi >= 2)] == 0)
        assert np.all(f[(xi > 0.51) & (xi < 1.99)] > 0)
        assert lp_profile([0.0])[0] == 0.0

    @pytest.mark.parametrize("L,N", [(10.0, 64), (100.0, 256), (7.3, 128)])
    def test_partition_of_unity(self, L, N):
        fam = LPFamily.for_grid(GridSpec(L, N))
        np.testing.assert_allclose(fam.filters.sum(axis=0)[1:], 1.0, atol=1e-12)
        assert fam.filters[:, 0].sum() == 0.0

    def test_dilation(self):
        fam = LPFamily.for_grid(G)
        for k, f in zip(fam.ks, fam.filters):
            np.testing.assert_allclose(f, lp_profile(G.xi_rfft * 2.0 ** (-k)))

    @pytest.mark.parametrize("n", [1, 3, 8, 20])
    def test_single_mode_bands(self, n):
        fam = LPFamily.for_grid(G)
        parts = lp_decompose(sine(G, n), fam)
        live = [i for i, p in enumerate(parts) if np.max(np.abs(p.samples)) > 1e-14]
        assert 1 <= len(live) <= 2
        assert live == list(range(live[0], live[0] + len(live)))

    def test_constant(self):
        parts = lp_decompose(RealField(G, np.full(G.N, 4.0)), LPFamily.for_grid(G))
        assert max(np.max(np.abs(p.samples)) for p in parts) < 1e-14

    @given(seeds)
    def test_reconstruction(self, seed):
        u = band_limited_noise(G, seed, n_max=31)
        u = RealField(G, u.samples + 0.7)
        total = np.sum([p.samples for p in lp_decompose(u, LPFamily.for_grid(G))], axis=0)
        np.testing.assert_allclose(total, u.samples - 0.7, atol=1e-10)


class TestFiniteDifferenceNorm:
    def test_zero(self):
        tr = Trajectory(G, 0.0, 1.0, np.zeros((3, G.N)))
        assert besov_norm_fd(tr, BesovParams(1 / 3, 3, math.inf)).value == 0.0
        assert besov_norm_fd(tr, BesovParams(0.5, 2, 2)).value == 0.0

    @pytest.mark.parametrize("dt_rec", [1.0, 0.25])
    def test_sup_against_dense_scan(self, dt_rec):
        L = G.L
        tr = Trajectory(G, 0.0, dt_rec, sine(G).samples[None, :])

        def f(h):
            return (sine_cube_moment(h, L) * dt_rec) ** (1 / 3) / h ** (1 / 3)

        hs = np.linspace(1e-3, L / 2, 20001)
        i = int(np.argmax(f(hs)))
        best = optimize.minimize_scalar(lambda h: -f(h), bounds=(hs[max(i - 1, 0)], hs[i + 1]),
                                        method="bounded", options={"xatol": 1e-12})
        est = besov_norm_fd(tr, BesovParams(1 / 3, 3, math.inf))
        assert est.value == pytest.approx(-best.fun, rel=1e-6)
        assert est.h_argmax == pytest.approx(best.x, rel=1e-3)
        assert not est.flagged

    def test_structure_function_closed_form(self):
        hs = np.array([0.1, 1.3, 5.0, 7.7])
        # rectangle rule across the kinks of |D^h u|^3: quadrature accuracy only
        np.testing.assert_allclose(structure_function(sine(G), hs, 3.0), sine_cube_moment(hs, G.L),
                                   rtol=1e-5)
        np.testing.assert_allclose(structure_function(sine(G), hs, 2.0),
                                   4 * np.sin(np.pi * hs / G.L) ** 2 * G.L / 2, rtol=1e-12)

    def test_domain(self):
        u = sine(G)
        for bp in (BesovParams(1.2, 2, 2), BesovParams(0.0, 2, 2), BesovParams(1.0, 3, 3)):
            with pytest.raises(DomainError):
                besov_norm_fd(u, bp)

    def test_s_equal_one(self):
        u = sine(G)
        k = 2 * np.pi / G.L
        est = besov_norm_fd(u, BesovParams(1.0, 2, 2))
        assert est.value == pytest.approx(k * math.sqrt(G.L / 2), rel=1e-12)

    @given(seeds, SMOOTH, P_EXP)
    def test_r_monotone(self, seed, s, p):
        u = band_limited_noise(G, seed)
        vals = [besov_norm_fd(u, BesovParams(s, p, r)).value for r in (math.inf, p, 1.0)]
        assert vals[0] <= vals[1] <= vals[2]

    @given(seeds, st.floats(-20, 20))
    def test_translation_invariant_p2(self, seed, a):
        # |D^h u|^2 is band-limited, so the x-quadrature is exact for any shift
        u = band_limited_noise(G, seed)
        bp = BesovParams(0.5, 2, 2)
        assert besov_norm_fd(shift(u, a), bp).value == pytest.approx(besov_norm_fd(u, bp).value, rel=1e-10)

    @given(seeds, st.integers(-200, 200))
    def test_translation_invariant_grid_shift(self, seed, m):
        u = band_limited_noise(G, seed)
        bp = BesovParams(0.5, 3, 3)
        val = besov_norm_fd(shift(u, m * G.dx), bp).value
        assert val == pytest.approx(besov_norm_fd(u, bp).value, rel=1e-10)

    @given(seeds, st.floats(-20, 20))
    def test_translation_invariant_fractional_p3(self, seed, a):
        # the kinks of |D^h u|^3 limit the rectangle rule to quadrature accuracy
        u = band_limited_noise(G, seed)
        bp = BesovParams(0.5, 3, 3)
        assert besov_norm_fd(shift(u, a), bp).value == pytest.approx(besov_norm_fd(u, bp).value, rel=1e-5)

    @given(seeds)
    def test_abs_stability(self, seed):
        # ||a| - |b|| <= |a - b| makes c = 1 for the difference form
        assert abs_stability_ratio(band_limited_noise(G, seed), BesovParams(0.5, 3, 3)) <= 1.0 + 1e-12


class TestDyadicNorm:
    def test_zero(self):
        assert besov_norm_lp(RealField(G, np.zeros(G.N)), BesovParams(2, 2, 2)).value == 0.0

    def test_single_mode_against_parseval(self):
        n = 8
        u = sine(G, n)
        xi = 2 * np.pi * n / G.L
        direct = math.sqrt(xi ** 4 * 2 * 0.25) * math.sqrt(G.L)  # (sum xi^4 |u_n|^2)^{1/2} (L dt)^{1/2}
        ratio = besov_norm_lp(u, BesovParams(2, 2, 2)).value / direct
        # F(phi_k)(xi) > 0 only for xi / 2 < 2^k < 2 xi
        assert 0.25 <= ratio <= 4.0

    def test_r_monotone_exact(self):
        u = band_limited_noise(G, 3)
        vals = [besov_norm_lp(u, BesovParams(0.5, 3, r)).value for r in (math.inf, 3, 1)]
        assert vals[0] <= vals[1] <= vals[2]

    def test_negative_s_rejected(self):
        with pytest.raises(DomainError):
            besov_norm_lp(sine(G), BesovParams(-0.5, 2, 2))


class TestRescaled:
    def test_zero(self):
        assert rescaled_norm(Trajectory(G, 0, 1, np.zeros((2, G.N))), BesovParams(0.5, 2, 2)) == 0.0

    @pytest.mark.parametrize("method", ["fd", "lp"])
    def test_static_field_independent_of_T(self, method):
        f = sine(G).samples
        bp = BesovParams(1 / 3, 3, math.inf)
        one = rescaled_norm(Trajectory(G, 0, 0.5, f[None, :]), bp, method)
        many = rescaled_norm(Trajectory(G, 0, 0.5, np.tile(f, (7, 1))), bp, method)
        assert many == pytest.approx(one, rel=1e-12)

    def test_burn_in_trim(self):
        f = sine(G).samples
        tr = Trajectory(G, 0, 1.0, np.vstack([10 * f, f, f]))
        bp = BesovParams(0.5, 2, 2)
        assert rescaled_norm(tr, bp, t_burn=1.0) == pytest.approx(rescaled_norm(Trajectory(G, 0, 1, f), bp))

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            rescaled_norm(sine(G), BesovParams(0.5, 2, 2), "wavelet")


class TestDuality:
    def test_cosine(self):
        c = G.sample(lambda x: np.cos(2 * np.pi * x / G.L))
        d = duality_pairing(c, c)
        assert d.lhs == pytest.approx(math.pi, rel=1e-13)
        assert d.rel_error <= 1e-4

    def test_constant_phi(self):
        d = duality_pairing(RealField(G, np.full(G.N, 2.0)), band_limited_noise(G, 1))
        assert abs(d.lhs) < 1e-13 and abs(d.rhs) < 1e-13

    @given(seeds)
    def test_random_pairs(self, seed):
        d = duality_pairing(band_limited_noise(G, seed), band_limited_noise(G, seed + 1))
        assert d.rel_error <= 1e-4

    def test_bound_zero(self):
        rep = duality_bound_check(sine(G), RealField(G, np.zeros(G.N)), BesovParams(0.5, 2, 2))
        assert rep.lhs == 0.0 and rep.holds

    def test_bound_cosine(self):
        c = G.sample(lambda x: np.cos(2 * np.pi * x / G.L))
        assert duality_bound_check(c, c, BesovParams(0.5, 2, 2)).ratio <= 1.0

    @given(seeds, SMOOTH, P_EXP)
    def test_bound_random(self, seed, s, p):
        rep = duality_bound_check(band_limited_noise(G, seed), band_limited_noise(G, seed + 7),
                                  BesovParams(s, p, p))
        assert rep.ratio <= 1.0 + 1e-6

    def test_bound_domain(self):
        with pytest.raises(DomainError):
            duality_bound_check(sine(G), sine(G), BesovParams(1.0, 2, 2))


class TestInterpolation:
    B1, B2 = BesovParams(0.3, 2, 2), BesovParams(0.7, 3, 3)

    def test_single_mode(self):
        assert interpolation_check(sine(G, 4), self.B1, self.B2, 0.5).holds

    @pytest.mark.parametrize("theta", [0.0, 1.0])
    def test_endpoints(self, theta):
        rep = interpolation_check(band_limited_noise(G, 2), self.B1, self.B2, theta)
        assert rep.lhs == pytest.approx(rep.rhs, rel=1e-12)

    @given(seeds, st.floats(0.05, 0.95))
    def test_random(self, seed, theta):
        assert interpolation_check(band_limited_noise(G, seed), self.B1, self.B2, theta).holds

    def test_theta_range(self):
        with pytest.raises(ValueError):
            interpolation_check(sine(G), self.B1, self.B2, 1.5)


class TestDerivativeTransfer:
    def test_first_order_isometry(self):
        # the symbol -i sign(xi) has unit modulus, an isometry of each band in L^2
        fam = LPFamily.for_grid(G)
        for seed in range(5):
            rep = derivative_transfer_check(band_limited_noise(G, seed), 1, BesovParams(0.5, 2, 2), fam)
            assert rep.ratio <= 1.0 + 1e-10

    def test_single_mode_closed_form(self):
        # |d|^{-1} d^2 has symbol -|xi|, so the ratio is xi N_s / N_{s+1}
        n, bp = 5, BesovParams(0.4, 2, 2)
        u = sine(G, n)
        xi = 2 * np.pi * n / G.L
        expect = xi * besov_norm_lp(u, bp).value / besov_norm_lp(u, BesovParams(1.4, 2, 2)).value
        assert derivative_transfer_check(u, 2, bp).ratio == pytest.approx(expect, rel=1e-12)
        np.testing.assert_allclose(transfer_field(u, 2).samples, -xi * u.samples, atol=1e-13)

    def test_fourth_order_stable(self):
        fam = LPFamily.for_grid(G)
        r = np.array([derivative_transfer_check(band_limited_noise(G, s), 4, BesovParams(1 / 3, 3, 3), fam).ratio
                      for s in range(20)])
        assert np.max(np.abs(r / np.median(r) - 1)) <= 0.10

    def test_rejects_mean(self):
        with pytest.raises(DomainError):
            transfer_field(RealField(G, np.ones(G.N)), 2)
        with pytest.raises(ValueError):
            transfer_field(sine(G), 5)


class TestThreeScale:
    def test_single_mode_dense_oracle(self):
        from scipy import integrate

        L = G.L
        u = sine(G)
        ts = three_scale_split(u, L / 2)
        J = lambda h: sine_cube_moment(h, L)  # noqa: E731
        A = integrate.quad(lambda h: J(h) / h ** 2, 0, L / 2, epsabs=0, epsrel=1e-12, limit=200)[0]
        B = integrate.quad(lambda h: J(h) / h ** 2, L / 2, L, epsabs=0, epsrel=1e-12, limit=200)[0]
        C = sum(integrate.quad(lambda h: J(h) / h ** 2, n * L, (n + 1) * L, epsabs=0, epsrel=1e-12)[0]
                for n in range(1, 2000))
        # periods beyond 2000 L: J is L-periodic, so int J/h^2 ~ mean(J) / (2000 L)
        mean_J = integrate.quad(J, 0, L)[0] / L
        C += mean_J / (2000 * L)
        assert ts.A == pytest.approx(A, rel=1e-6)
        assert ts.B == pytest.approx(B, rel=1e-6)
        assert ts.C == pytest.approx(C, rel=1e-6)
        assert ts.reconstruction_error <= 1e-6

    @given(seeds, st.floats(0.05, 0.95))
    def test_bounds(self, seed, frac):
        ts = three_scale_split(band_limited_noise(G, seed), frac * G.L)
        assert ts.c_bound_holds and ts.b_bound_holds
        assert ts.reconstruction_error <= 1e-4

    def test_small_scale_flag(self):
        assert three_scale_split(sine(G), 2 * G.dx).flagged
        with pytest.raises(ValueError):
            three_scale_split(sine(G), G.L)


class TestElementaryInequalities:
    @given(seeds)
    def test_agmon(self, seed):
        lhs, rhs = agmon_check(band_limited_noise(G, seed, n_max=20))
        assert lhs <= rhs + 1e-10

    @given(seeds)
    def test_sobolev(self, seed):
        lhs, rhs = sobolev_check(band_limited_noise(G, seed, n_max=20))
        assert lhs <= rhs + 1e-10

    def test_sobolev_single_mode_equality(self):
        lhs, rhs = sobolev_check(sine(G, 3))
        assert lhs == pytest.approx(rhs, rel=1e-12)
