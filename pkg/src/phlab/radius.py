"""Bookkeeping for the shrinking analytic radius ``tau(t)``.

The radius obeys ``tau' = -C (|g|_X + |g|_Z) / sqrt(tau)``, which is exactly
integrable in ``tau^(3/2)``: ``d/dt tau^(3/2) = -1.5 C (|g|_X + |g|_Z)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

__all__ = [
    "K_GATE",
    "RadiusState",
    "RadiusCollapseError",
    "GateResult",
    "radius_rhs",
    "step_radius",
    "smallness_gate",
    "half_radius_check",
    "integrated_relation_error",
]

K_GATE = (2.0 * math.sqrt(2.0)) ** (2.0 / 3.0) / (2.0 * math.sqrt(2.0) - 1.0) ** (2.0 / 3.0)


class RadiusCollapseError(RuntimeError):
    pass


@dataclass(frozen=True)
class RadiusState:
    tau: float
    tau0: float
    C_ode: float = 1.0
    history: tuple[tuple[float, float], ...] = field(default=())

    def __post_init__(self):
        if not (self.tau > 0 and self.tau0 > 0 and self.C_ode > 0):
            raise ValueError("tau, tau0 and C_ode must be positive")

    @classmethod
    def start(cls, tau0: float, C_ode: float = 1.0, t0: float = 0.0) -> "RadiusState":
        return cls(tau=tau0, tau0=tau0, C_ode=C_ode, history=((t0, tau0),))

    @property
    def t(self) -> float:
        return self.history[-1][0] if self.history else 0.0


def radius_rhs(tau: float, normX: float, normZ: float, C: float = 1.0) -> float:
    if not tau > 0:
        raise ValueError(f"tau must be > 0, got {tau}")
    return -C * (normX + normZ) / math.sqrt(tau)


def step_radius(rs: RadiusState, normX: float, normZ: float, dt: float) -> RadiusState:
    """Advance ``tau^(3/2)`` by ``-1.5 C (normX + normZ) dt``.

    ``normX + normZ`` is taken constant over the step; pass the step average
    for a trapezoid-accurate update.
    """
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    bracket = rs.tau**1.5 - 1.5 * rs.C_ode * (normX + normZ) * dt
    if bracket <= 0:
        raise RadiusCollapseError(f"analytic radius collapses: tau^(3/2) would become {bracket:.3e}")
    tau = bracket ** (2.0 / 3.0)
    return replace(rs, tau=tau, history=rs.history + ((rs.t + dt, tau),))


@dataclass(frozen=True)
class GateResult:
    passed: bool
    margin: float

    def __bool__(self) -> bool:
        return self.passed


def smallness_gate(tau0: float, g0_normX: float, C1: float = 1.0) -> GateResult:
    """Check ``tau0 / K > C1^(2/3) |g(0)|_X^(2/3)``; ``margin`` is LHS - RHS."""
    if not (tau0 > 0 and C1 > 0) or g0_normX < 0:
        raise ValueError("tau0 and C1 must be positive and the norm nonnegative")
    margin = tau0 / K_GATE - C1 ** (2.0 / 3.0) * g0_normX ** (2.0 / 3.0)
    return GateResult(margin > 0, margin)


def half_radius_check(rs: RadiusState) -> bool:
    return all(tau > 0.5 * rs.tau0 for _, tau in rs.history)


def integrated_relation_error(t, tau, normX, normZ, C: float = 1.0) -> float:
    """Relative mismatch of ``tau^(3/2) - tau0^(3/2)`` against ``-1.5 C int (X + Z)``.

    The integral is the trapezoid rule over the samples. Returns the max
    absolute mismatch divided by the largest magnitude of the integral term.
    """
    t, tau = np.asarray(t, float), np.asarray(tau, float)
    s = np.asarray(normX, float) + np.asarray(normZ, float)
    integral = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(t) * (s[1:] + s[:-1]))])
    lhs = tau**1.5 - tau[0] ** 1.5
    rhs = -1.5 * C * integral
    scale = float(np.max(np.abs(rhs)))
    if scale == 0:
        return float(np.max(np.abs(lhs)))
    return float(np.max(np.abs(lhs - rhs)) / scale)
