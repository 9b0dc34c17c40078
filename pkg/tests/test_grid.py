import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from phlab.grid import fd_weights, make_grid


def test_uniform_spacing():
    g = make_grid(8, 2 * math.pi, 16, 10, 0)
    assert np.allclose(np.diff(g.y_coords), 10 / 15, rtol=0, atol=1e-14)


def test_stretched_clusters_near_wall():
    g = make_grid(8, 2 * math.pi, 16, 10, 2)
    assert g.y_coords[1] < 10 / 15
    assert g.y_coords[-1] == pytest.approx(10.0)


def test_make_grid_preconditions():
    make_grid(8, 2 * math.pi, 17, 10, 0)
    for bad in [dict(nx=7), dict(nx=12), dict(ny=8), dict(lx=0.0), dict(ly=-1.0), dict(stretch=-0.5)]:
        kw = dict(nx=8, lx=2 * math.pi, ny=16, ly=10.0, stretch=0.0) | bad
        with pytest.raises(ValueError):
            make_grid(**kw)


def test_fd_weights_reproduce_polynomials():
    xs = np.array([0.0, 0.3, 0.9])
    w = fd_weights(0.0, xs, 1)
    assert w @ xs**2 == pytest.approx(0.0, abs=1e-13)
    assert w @ xs == pytest.approx(1.0)


class TestSpectral:
    def test_cosine_single_coefficient(self):
        g = make_grid(16, 3.0, 16, 1.0)
        X, _ = g.mesh()
        s = g.to_spectral(np.cos(2 * math.pi * X / g.lx))
        assert np.allclose(s[:, 1], 0.5)
        others = np.delete(s, 1, axis=1)
        assert np.max(np.abs(others)) < 1e-15

    def test_constant_only_mean(self):
        g = make_grid(16, 3.0, 16, 1.0)
        s = g.to_spectral(np.full(g.shape, 3.0))
        assert np.allclose(s[:, 0], 3.0)
        assert np.max(np.abs(s[:, 1:])) < 1e-15
        assert np.all(s[:, 0].imag == 0)

    def test_random_roundtrip(self, rng):
        g = make_grid(64, 2 * math.pi, 32, 1.0)
        f = rng.normal(size=g.shape)
        back = g.from_spectral(g.to_spectral(f))
        assert np.max(np.abs(back - f)) < 1e-13 * np.max(np.abs(f))

    @given(arrays(float, (16, 8), elements=st.floats(-1e6, 1e6)))
    def test_roundtrip_property(self, f):
        g = make_grid(8, 2 * math.pi, 16, 1.0)
        back = g.from_spectral(g.to_spectral(f))
        assert np.max(np.abs(back - f)) <= 1e-13 * max(np.max(np.abs(f)), 1e-300)


class TestDdx:
    def test_sine(self):
        g = make_grid(32, 5.0, 16, 1.0)
        X, _ = g.mesh()
        k = 2 * math.pi / g.lx
        assert np.max(np.abs(g.ddx(np.sin(k * X)) - k * np.cos(k * X))) < 1e-12

    def test_constant(self):
        g = make_grid(32, 5.0, 16, 1.0)
        assert np.all(g.ddx(np.full(g.shape, 7.0)) == 0.0)

    def test_separable(self):
        g = make_grid(32, 2 * math.pi, 33, 4.0)
        X, Y = g.mesh()
        k = 3 * 2 * math.pi / g.lx
        phi = np.exp(-Y)
        assert np.max(np.abs(g.ddx(np.sin(k * X) * phi) - k * np.cos(k * X) * phi)) < 1e-12


class TestDdy:
    def test_quadratic_exact(self):
        g = make_grid(8, 1.0, 21, 2.0)
        _, Y = g.mesh()
        d = g.ddy(Y**2)
        assert np.max(np.abs(d[1:-1] - 2 * Y[1:-1])) < 1e-12
        # second-order one-sided stencils are exact too
        assert np.max(np.abs(d - 2 * Y)) < 1e-11
        assert np.max(np.abs(g.ddy(Y**2, 2) - 2.0)) < 1e-10

    def test_constant(self):
        g = make_grid(8, 1.0, 21, 2.0, stretch=1.5)
        assert np.max(np.abs(g.ddy(np.full(g.shape, 4.0)))) < 1e-12

    def test_exponential_second_order(self):
        errs = []
        for ny in (65, 129, 257):
            g = make_grid(8, 1.0, ny, 10.0)
            _, Y = g.mesh()
            errs.append(np.max(np.abs(g.ddy(np.exp(-Y))[1:-1] + np.exp(-Y)[1:-1])))
        ratios = [errs[0] / errs[1], errs[1] / errs[2]]
        assert all(3.6 < r < 4.4 for r in ratios), ratios

    def test_bad_order(self):
        g = make_grid(8, 1.0, 16, 1.0)
        with pytest.raises(ValueError):
            g.ddy(g.zeros(), 3)


class TestExpKernel:
    def test_exponential(self):
        errs = []
        for ny in (101, 201):
            g = make_grid(8, 1.0, ny, 20.0)
            _, Y = g.mesh()
            errs.append(np.max(np.abs(g.exp_kernel_integral(np.exp(-Y), 1.0) - Y * np.exp(-Y))))
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)

    def test_zero(self):
        g = make_grid(8, 1.0, 32, 5.0)
        assert np.all(g.exp_kernel_integral(g.zeros(), 1.0) == 0.0)

    def test_constant(self):
        g = make_grid(8, 1.0, 64, 5.0, stretch=1.0)
        _, Y = g.mesh()
        # the linear interpolant of a constant is exact
        assert np.max(np.abs(g.exp_kernel_integral(np.ones(g.shape), 1.0) + np.expm1(-Y))) < 1e-14

    def test_rate_must_be_positive(self):
        g = make_grid(8, 1.0, 16, 1.0)
        with pytest.raises(ValueError):
            g.exp_kernel_integral(g.zeros(), 0.0)

    @given(arrays(float, (32, 8), elements=st.floats(-100, 100)), st.floats(0.1, 10.0))
    def test_monotone_and_bounded(self, f, rate):
        g = make_grid(8, 1.0, 32, 6.0, stretch=0.7)
        out = g.exp_kernel_integral(f, rate)
        bound = np.max(np.abs(f)) / rate
        assert np.max(np.abs(out)) <= bound * (1 + 1e-12) + 1e-300
        pos = g.exp_kernel_integral(np.abs(f), rate)
        assert np.all(pos >= 0)


class TestWeightedL2:
    def test_zero(self):
        g = make_grid(8, 2 * math.pi, 16, 1.0)
        assert g.weighted_l2(g.zeros(), 0.3) == 0.0

    def test_exponential_alpha0(self):
        g = make_grid(8, 2 * math.pi, 2001, 40.0)
        _, Y = g.mesh()
        assert g.weighted_l2(np.exp(-Y), 0.0) == pytest.approx(math.sqrt(math.pi), rel=1e-4)

    def test_exponential_alpha_half(self):
        g = make_grid(8, 3.0, 2001, 40.0)
        _, Y = g.mesh()
        assert g.weighted_l2(np.exp(-Y), 0.5) == pytest.approx(math.sqrt(3.0), rel=1e-4)

    def test_overflow_guard(self):
        g = make_grid(8, 1.0, 16, 1000.0)
        with pytest.raises(OverflowError):
            g.weighted_l2(g.zeros(), 0.7)

    @given(arrays(float, (16, 8), elements=st.floats(-1e3, 1e3)),
           arrays(float, (16, 8), elements=st.floats(-1e3, 1e3)),
           st.one_of(st.just(0.0), st.floats(1e-6, 50), st.floats(-50, -1e-6)), st.floats(0.0, 0.7))
    def test_norm_axioms(self, f, h, c, alpha):
        g = make_grid(8, 2 * math.pi, 16, 5.0)
        nf, nh = g.weighted_l2(f, alpha), g.weighted_l2(h, alpha)
        assert g.weighted_l2(c * f, alpha) == pytest.approx(abs(c) * nf, rel=1e-12, abs=1e-300)
        assert g.weighted_l2(f + h, alpha) <= (nf + nh) * (1 + 1e-12) + 1e-300
