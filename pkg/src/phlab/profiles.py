"""Hartmann background, good-unknown transform and field reconstructions."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from ._validation import check_field
from .grid import Grid

__all__ = [
    "ModelParams",
    "CompatibilityWarning",
    "hartmann_profile",
    "initial_good_unknown",
    "perturbation_good_unknown",
    "robin_residual",
    "reconstruct_u",
    "reconstruct_v",
    "recover_b",
]

ALPHA_MAX = math.sqrt(2.0) / 2.0


class CompatibilityWarning(UserWarning):
    """Initial data violates the Robin/no-slip compatibility conditions."""


@dataclass(frozen=True)
class ModelParams:
    u_bar: float = 1.0
    b_bar: float = 0.0
    alpha: float = 0.3
    r: float = 2.0
    tau0: float = 1.0
    damping_on: bool = True
    transport_on: bool = True
    diffusion_on: bool = True

    def __post_init__(self):
        if not 0.0 <= self.alpha < ALPHA_MAX:
            raise ValueError(f"alpha must lie in [0, sqrt(2)/2), got {self.alpha}")
        if not self.r > 1.0:
            raise ValueError(f"r must be > 1, got {self.r}")
        if not self.tau0 > 0.0:
            raise ValueError(f"tau0 must be > 0, got {self.tau0}")

    def replace(self, **changes) -> "ModelParams":
        return replace(self, **changes)

    @property
    def toggles(self) -> int:
        """Bitfield: bit 0 damping, bit 1 transport, bit 2 diffusion."""
        return int(self.damping_on) | int(self.transport_on) << 1 | int(self.diffusion_on) << 2


def hartmann_profile(grid: Grid, u_bar: float = 1.0) -> np.ndarray:
    """Steady Hartmann layer ``(1 - exp(-y)) u_bar`` replicated along x."""
    prof = -np.expm1(-grid.y_coords) * u_bar
    return np.repeat(prof[:, None], grid.nx, axis=1)


def robin_residual(grid: Grid, g: np.ndarray) -> np.ndarray:
    """Discrete ``(dg/dy - g)`` at ``y = 0`` for every x (one-sided stencil)."""
    row = grid.d1.getrow(0)
    return np.asarray(row @ g).ravel() - g[0]


def initial_good_unknown(grid: Grid, u10: np.ndarray, params: ModelParams,
                         tol: float = 1e-10) -> np.ndarray:
    """Good unknown ``g0 = d_y u10 + u10 - u_bar`` of the initial velocity.

    Evaluated on the perturbation ``u10 - hartmann`` so that the exact
    Hartmann profile maps to zero without differencing error. Warns with
    :class:`CompatibilityWarning` if ``u10`` misses no-slip or ``g0`` misses
    the Robin condition by more than ``tol``.
    """
    u10 = check_field(u10, grid, "u10")
    g0 = perturbation_good_unknown(grid, u10 - hartmann_profile(grid, params.u_bar))
    if np.max(np.abs(u10[0])) > tol:
        warnings.warn(f"u10 violates no-slip at y=0 (max |u10| = {np.max(np.abs(u10[0])):.3e})",
                      CompatibilityWarning, stacklevel=2)
    res = np.max(np.abs(robin_residual(grid, g0)))
    if res > tol:
        warnings.warn(f"initial good unknown violates the Robin condition (residual {res:.3e})",
                      CompatibilityWarning, stacklevel=2)
    return g0


def perturbation_good_unknown(grid: Grid, u0: np.ndarray) -> np.ndarray:
    """``d_y u0 + u0`` for a velocity perturbation given directly.

    Preferred over :func:`initial_good_unknown` when the perturbation is known
    on its own: subtracting the O(1) background leaves absolute roundoff in
    every tangential mode.
    """
    u0 = check_field(u0, grid, "u0")
    return grid.ddy(u0) + u0


def reconstruct_u(grid: Grid, g: np.ndarray) -> np.ndarray:
    """Velocity perturbation ``u(y) = int_0^y exp(-(y - z)) g(z) dz``."""
    return grid.exp_kernel_integral(check_field(g, grid, "g"), 1.0)


def reconstruct_v(grid: Grid, u: np.ndarray) -> np.ndarray:
    """Normal velocity from continuity, ``v = -int_0^y du/dx dz``."""
    return -grid.cumulative_y(grid.ddx(u))


def recover_b(grid: Grid, u1: np.ndarray, params: ModelParams, tol: float = 1e-6) -> np.ndarray:
    """Tangential magnetic field from ``d_y b1 = u_bar - u1``, anchored at ``b1(ly) = b_bar``."""
    u1 = check_field(u1, grid, "u1")
    mismatch = np.max(np.abs(u1[-1] - params.u_bar))
    if mismatch > tol:
        raise ValueError(f"u1 does not reach the far-field value u_bar at y=ly (mismatch {mismatch:.3e})")
    defect = params.u_bar - u1
    cum = grid.cumulative_y(defect)
    return params.b_bar - (cum[-1] - cum)
