import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from phlab.radius import (K_GATE, RadiusCollapseError, RadiusState, half_radius_check, integrated_relation_error,
                          radius_rhs, smallness_gate, step_radius)

# (2 sqrt 2)^(2/3) / (2 sqrt 2 - 1)^(2/3), evaluated independently with a cube root of the squared ratio
K_ORACLE = ((2 * math.sqrt(2)) ** 2 / (2 * math.sqrt(2) - 1) ** 2) ** (1 / 3)


def test_gate_constant():
    assert K_GATE == pytest.approx(K_ORACLE, rel=1e-14)
    assert K_GATE == pytest.approx(1.3376, abs=1e-4)


class TestRhs:
    def test_values(self):
        assert radius_rhs(1.0, 0.0, 0.0) == 0.0
        assert radius_rhs(1.0, 0.15, 0.05, 1.0) == pytest.approx(-0.2)
        assert radius_rhs(4.0, 0.15, 0.05) == pytest.approx(0.5 * radius_rhs(1.0, 0.15, 0.05))

    def test_nonpositive_tau(self):
        with pytest.raises(ValueError):
            radius_rhs(0.0, 1.0, 1.0)


class TestStep:
    def test_zero_norms(self):
        rs = step_radius(RadiusState.start(0.8), 0.0, 0.0, 0.1)
        assert rs.tau == 0.8

    def test_constant_norms_exact(self):
        rs, N, dt, C = RadiusState.start(1.0, C_ode=0.7), 0.3, 0.01, 0.7
        for _ in range(100):
            rs = step_radius(rs, 0.1, N - 0.1, dt)
        assert rs.tau**1.5 == pytest.approx(1.0 - 1.5 * C * N * 1.0, rel=1e-13)
        assert rs.t == pytest.approx(1.0)

    def test_matches_euler_to_second_order(self):
        errs = []
        for dt in (1e-2, 5e-3):
            exact = step_radius(RadiusState.start(1.0), 0.2, 0.1, dt).tau
            euler = 1.0 + dt * radius_rhs(1.0, 0.2, 0.1)
            errs.append(abs(exact - euler))
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)

    def test_collapse(self):
        with pytest.raises(RadiusCollapseError):
            step_radius(RadiusState.start(0.1), 1.0, 1.0, 1.0)

    def test_bad_dt(self):
        with pytest.raises(ValueError):
            step_radius(RadiusState.start(1.0), 0.0, 0.0, 0.0)

    @given(st.lists(st.tuples(st.floats(0, 0.05), st.floats(0, 0.05)), min_size=1, max_size=30))
    def test_history_non_increasing(self, norms):
        rs = RadiusState.start(1.0)
        for x, z in norms:
            rs = step_radius(rs, x, z, 0.1)
        taus = [tau for _, tau in rs.history]
        assert all(b <= a for a, b in zip(taus, taus[1:]))
        assert all(tau > 0 for tau in taus)


class TestGate:
    def test_pass(self):
        res = smallness_gate(1.0, 0.1, 1.0)
        assert res.passed and bool(res)
        assert 1.0 / K_GATE == pytest.approx(0.7476, abs=1e-4)
        assert res.margin == pytest.approx(1.0 / K_GATE - 0.1 ** (2 / 3), rel=1e-14)
        assert 0.1 ** (2 / 3) == pytest.approx(0.2154, abs=1e-4)

    def test_fail(self):
        assert not smallness_gate(1.0, 1.0, 1.0)

    def test_zero_data(self):
        res = smallness_gate(2.0, 0.0)
        assert res.passed and res.margin == pytest.approx(2.0 / K_GATE)

    def test_invalid(self):
        for args in ((0.0, 0.1, 1.0), (1.0, -0.1, 1.0), (1.0, 0.1, 0.0)):
            with pytest.raises(ValueError):
                smallness_gate(*args)


class TestHalfRadius:
    def test_empty_history(self):
        assert half_radius_check(RadiusState(tau=1.0, tau0=1.0))

    def test_constant(self):
        rs = RadiusState.start(1.0)
        for _ in range(5):
            rs = step_radius(rs, 0.0, 0.0, 1.0)
        assert half_radius_check(rs)

    def test_detects_drop(self):
        rs = step_radius(RadiusState.start(1.0), 0.6, 0.0, 1.0)
        assert rs.tau < 0.5 and not half_radius_check(rs)


def test_integrated_relation_on_exact_trajectory():
    t = [0.1 * i for i in range(11)]
    tau = [(1.0 - 1.5 * 0.2 * s) ** (2 / 3) for s in t]
    assert integrated_relation_error(t, tau, [0.15] * 11, [0.05] * 11) < 1e-14
    assert integrated_relation_error(t, tau, [0.3] * 11, [0.0] * 11) == pytest.approx(1 / 3)
