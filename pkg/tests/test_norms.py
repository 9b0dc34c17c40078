import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from phlab.dynamics import apply_boundary_conditions
from phlab.grid import make_grid
from phlab.norms import (NormParams, RadiusTooLargeError, TailWarning, boundary_trace_norm,
                         energy_identity_residual, estimate_radius_from_spectrum, lyapunov_functional,
                         mode_weight_series, norm_D, norm_X, norm_Y, norm_Z, norms_derivative_route,
                         norms_weight_route, weight_M)

from helpers import band_limited

# W_X(1) for r = 1, summed exactly as sum (m+1)^2 / (m!)^2 with rational arithmetic
W_X1_R1 = 7.740444313946792


@pytest.fixture(scope="module")
def grid():
    return make_grid(32, 2 * math.pi, 129, 20.0)


def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


class TestWeights:
    def test_weight_M(self):
        assert weight_M(0, 3.7) == 1.0
        assert weight_M(3, 2.0) == pytest.approx(16 / 6, rel=1e-14)
        assert weight_M(1, 1.0) == pytest.approx(2.0, rel=1e-14)
        with pytest.raises(ValueError):
            weight_M(-1, 2.0)

    def test_large_m_no_overflow(self):
        assert 0.0 <= weight_M(500, 2.0) < 1e-300

    def test_series_values(self):
        assert mode_weight_series(0.0, 2.0) == 1.0
        assert mode_weight_series(1.0, 1.0) == pytest.approx(W_X1_R1, rel=1e-13)
        assert mode_weight_series(2.0, 1.5) > mode_weight_series(1.0, 1.5)

    def test_series_y_kind(self):
        # sum m (m+1)^(2r) s^2m / (m!)^2 checked against direct summation
        direct = sum(m * (m + 1) ** 4 * 0.7 ** (2 * m) / math.factorial(m) ** 2 for m in range(60))
        assert mode_weight_series(0.7, 2.0, "Y") == pytest.approx(direct, rel=1e-13)
        assert mode_weight_series(0.0, 2.0, "Y") == 0.0

    def test_series_large_argument(self):
        # log-domain summation stays finite well past the factorial peak
        assert math.isfinite(mode_weight_series(150.0, 2.0))
        with pytest.raises(RadiusTooLargeError):
            mode_weight_series(500.0, 2.0)

    @given(st.floats(0.0, 20.0), st.floats(1.01, 4.0))
    def test_series_monotone_in_s(self, s, r):
        assert mode_weight_series(s * 1.1 + 0.01, r) > mode_weight_series(s, r)


class TestNormParams:
    @pytest.mark.parametrize("kw", [dict(r=1.0), dict(tau=0.0), dict(alpha=0.71), dict(m_max=4), dict(band=0)])
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            NormParams(**kw)


class TestWeightRoute:
    def test_zero(self, grid):
        rep = norms_weight_route(grid, grid.zeros(), NormParams())
        assert all(v == 0.0 for v in rep.as_dict().values())

    def test_x_independent_equals_weighted_l2(self, grid):
        _, Y = grid.mesh()
        g = Y * np.exp(-Y)
        p = NormParams(tau=1.3, alpha=0.4)
        assert norm_X(grid, g, p) == pytest.approx(grid.weighted_l2(g, 0.4), rel=1e-13)
        assert norm_Y(grid, g, p) == 0.0

    def test_single_mode_route_agreement(self, grid):
        X, Y = grid.mesh()
        g = np.exp(-Y) * (1 + 2 * Y) * np.cos(3 * X)
        p = NormParams(r=2.0, tau=0.8, alpha=0.3)
        a, b = norms_weight_route(grid, g, p), norms_derivative_route(grid, g, p)
        for key in ("normX", "normY", "normZ", "normD", "boundary_trace"):
            assert rel(a.as_dict()[key], b.as_dict()[key]) < 1e-8, key

    def test_single_mode_closed_form(self, grid):
        X, Y = grid.mesh()
        phi = np.exp(-Y)
        k, p = 2, NormParams(r=2.0, tau=0.5, alpha=0.2)
        g = phi[:, :] * np.cos(k * X)
        expected = math.sqrt(mode_weight_series(k * p.tau, p.r) * math.pi) * grid.weighted_l2(phi[:, :1] + 0 * X, p.alpha) / math.sqrt(grid.lx)
        assert norm_X(grid, g, p) == pytest.approx(expected, rel=1e-12)

    def test_per_mode_sums_to_total(self, grid, rng):
        g = band_limited(grid, rng)
        rep = norms_weight_route(grid, g, NormParams(tau=0.7))
        for key, total in (("X", rep.norm_X), ("Y", rep.norm_Y), ("Z", rep.norm_Z)):
            assert math.sqrt(rep.per_mode[key].sum()) == pytest.approx(total, rel=1e-12)
            assert np.all(rep.per_mode[key] >= 0)

    def test_tau_to_zero_limit(self, grid, rng):
        g = band_limited(grid, rng)
        p = NormParams(tau=1e-8, alpha=0.25)
        assert rel(norm_X(grid, g, p), grid.weighted_l2(g, 0.25)) < 1e-6

    def test_monotone_in_tau_and_alpha(self, grid, rng):
        g = band_limited(grid, rng)
        taus = [norm_X(grid, g, NormParams(tau=t)) for t in (0.2, 0.5, 1.0, 1.5)]
        alphas = [norm_X(grid, g, NormParams(alpha=a)) for a in (0.0, 0.2, 0.4, 0.6)]
        assert taus == sorted(taus) and alphas == sorted(alphas)

    @given(st.one_of(st.just(0.0), st.floats(1e-6, 1e3), st.floats(-1e3, -1e-6)))
    def test_homogeneous(self, c):
        grid = make_grid(16, 2 * math.pi, 33, 10.0)
        g = band_limited(grid, np.random.default_rng(3))
        p = NormParams(tau=0.6)
        assert norm_X(grid, c * g, p) == pytest.approx(abs(c) * norm_X(grid, g, p), rel=1e-12, abs=1e-300)

    def test_overflow_reported(self):
        grid = make_grid(256, 2 * math.pi, 16, 1.0)
        with pytest.raises(RadiusTooLargeError, match="radius too large"):
            norm_X(grid, grid.zeros(), NormParams(tau=8.0))

    def test_band_drops_high_modes(self, grid):
        X, Y = grid.mesh()
        low = np.exp(-Y) * np.cos(X)
        high = np.exp(-Y) * np.cos(14 * X)
        p = NormParams(band=10)
        assert norm_X(grid, low + high, p) == pytest.approx(norm_X(grid, low, p), rel=1e-13)
        assert norm_D(grid, low + high, p) == pytest.approx(norm_D(grid, low, p), rel=1e-13)

    def test_norm_Z_is_X_of_derivative(self, grid, rng):
        g = band_limited(grid, rng)
        p = NormParams()
        assert norm_Z(grid, g, p) == pytest.approx(norm_X(grid, grid.ddy(g), p), rel=1e-13)


class TestDerivativeRoute:
    def test_zero(self, grid):
        rep = norms_derivative_route(grid, grid.zeros(), NormParams())
        assert all(v == 0.0 for v in rep.as_dict().values())

    def test_tail_warning(self, grid, rng):
        g = band_limited(grid, rng)
        with pytest.warns(TailWarning):
            norms_derivative_route(grid, g, NormParams(tau=2.0), m_max=3)

    def test_D_matches_definition(self, grid, rng):
        g = band_limited(grid, rng, n_modes=4)
        p = NormParams(r=1.5, tau=0.6, alpha=0.3)
        total, h = 0.0, g.copy()
        for m in range(80):
            rows = np.sqrt(np.sum(h * h, axis=1) * grid.dx)
            total += (p.tau**m * weight_M(m, p.r) * np.max(np.exp(p.alpha * grid.y_coords) * rows)) ** 2
            h = grid.ddx(h)
        assert rel(norm_D(grid, g, p), math.sqrt(total)) < 1e-10
        assert rel(norms_derivative_route(grid, g, p).norm_D, math.sqrt(total)) < 1e-10


class TestTrace:
    def test_vanishing_at_wall(self, grid):
        X, Y = grid.mesh()
        assert boundary_trace_norm(grid, Y * np.exp(-Y) * np.cos(X), NormParams()) == 0.0

    def test_cosine(self, grid):
        X, _ = grid.mesh()
        g = grid.zeros()
        k, p = 3, NormParams(tau=0.4)
        g[0] = np.cos(k * X[0])
        expected = math.sqrt(mode_weight_series(k * p.tau, p.r) * grid.lx / 2)
        assert boundary_trace_norm(grid, g, p) == pytest.approx(expected, rel=1e-12)
        assert norms_derivative_route(grid, g, p).boundary_trace == pytest.approx(expected, rel=1e-10)

    def test_constant(self, grid):
        g = grid.zeros()
        g[0] = -2.5
        assert boundary_trace_norm(grid, g, NormParams()) == pytest.approx(2.5 * math.sqrt(grid.lx), rel=1e-14)


class TestEnergyIdentity:
    def test_zero(self, grid):
        assert energy_identity_residual(grid, grid.zeros(), 0.3) == 0.0

    @pytest.mark.parametrize("alpha", [0.0, 0.3])
    def test_second_order(self, alpha):
        errs = []
        for ny in (513, 1025, 2049):
            g = make_grid(8, 2 * math.pi, ny, 20.0)
            X, Y = g.mesh()
            f = apply_boundary_conditions(g, np.exp(-Y) * (1 + 2 * Y) * (1 + 0.5 * np.cos(X)))
            errs.append(energy_identity_residual(g, f, alpha))
        orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
        assert min(orders) > 1.9, orders

    def test_requires_robin(self, grid):
        _, Y = grid.mesh()
        with pytest.raises(ValueError, match="Robin"):
            energy_identity_residual(grid, np.exp(-Y), 0.3)


class TestRadiusEstimate:
    def _planted(self, grid, tau):
        X, Y = grid.mesh()
        g = np.zeros(grid.shape)
        for k in range(grid.nk - 1):
            g += math.exp(-tau * k) * np.cos(k * X) * np.exp(-Y)
        return g

    def test_planted(self):
        grid = make_grid(64, 2 * math.pi, 65, 10.0)
        assert rel(estimate_radius_from_spectrum(grid, self._planted(grid, 0.7)), 0.7) < 1e-2

    def test_flat(self):
        grid = make_grid(32, 2 * math.pi, 33, 10.0)
        assert abs(estimate_radius_from_spectrum(grid, self._planted(grid, 0.0))) < 1e-10

    def test_single_mode_error(self):
        grid = make_grid(32, 2 * math.pi, 33, 10.0)
        X, Y = grid.mesh()
        with pytest.raises(ValueError, match="modes"):
            estimate_radius_from_spectrum(grid, np.cos(2 * X) * np.exp(-Y))

    @given(st.floats(0.1, 1.0), st.floats(1e-6, 1e6))
    def test_exact_and_scale_invariant(self, tau, c):
        grid = make_grid(32, 2 * math.pi, 17, 5.0)
        g = self._planted(grid, tau)
        assert rel(estimate_radius_from_spectrum(grid, c * g), tau) < 1e-9


class TestLyapunov:
    def test_zero(self):
        assert np.all(lyapunov_functional([(0.0, 0.0, 0.0), (1.0, 0.0, 0.0)], 0.3) == 0.0)

    def test_degenerate_rate(self):
        a = math.sqrt(2) / 2
        E = lyapunov_functional([(t, 2.0, 0.0) for t in np.linspace(0, 3, 7)], a)
        assert np.allclose(E, 4.0, rtol=1e-13)

    def test_exact_decay_is_constant_without_Z(self):
        alpha = 0.3
        b = 1 - 2 * alpha**2
        hist = [(t, math.exp(-b * t), 0.0) for t in np.linspace(0, 2, 11)]
        assert np.allclose(lyapunov_functional(hist, alpha), 1.0, rtol=1e-13)

    def test_unordered(self):
        with pytest.raises(ValueError):
            lyapunov_functional([(1.0, 1.0, 0.0), (0.5, 1.0, 0.0)], 0.3)
