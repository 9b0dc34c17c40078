"""Periodic-in-x, truncated half-line-in-y discretization.

Fields are plain ``numpy`` arrays of shape ``(ny, nx)``: row ``j`` holds all
tangential samples at height ``y_coords[j]`` (y-major ordering). Spectral
fields are the matching ``(ny, nx // 2 + 1)`` complex arrays of normalized
real-FFT coefficients, so a constant field ``c`` has ``coeffs[:, 0] == c``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.linalg import solve_banded

from ._validation import check_field

__all__ = ["Grid", "make_grid", "fd_weights"]

_MAX_WEIGHT_EXPONENT = 700.0


def fd_weights(x0: float, xs: np.ndarray, order: int) -> np.ndarray:
    """Finite-difference weights for the ``order``-th derivative at ``x0``.

    Fornberg's recursion on arbitrary (distinct) nodes ``xs``.
    """
    xs = np.asarray(xs, dtype=float)
    n = len(xs)
    c = np.zeros((n, order + 1))
    c1 = 1.0
    c4 = xs[0] - x0
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, order)
        c2 = 1.0
        c5 = c4
        c4 = xs[i] - x0
        for j in range(i):
            c3 = xs[i] - xs[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, order]


def _derivative_matrix(y: np.ndarray, order: int) -> sp.csr_matrix:
    # centered 3-point stencils inside; one-sided second-order stencils at the
    # ends (3 points for d/dy, 4 points for d2/dy2)
    ny = len(y)
    nb = 3 if order == 1 else 4
    rows, cols, vals = [], [], []
    for j in range(ny):
        if j == 0:
            idx = np.arange(nb)
        elif j == ny - 1:
            idx = np.arange(ny - nb, ny)
        else:
            idx = np.array([j - 1, j, j + 1])
        w = fd_weights(y[j], y[idx], order)
        rows.extend([j] * len(idx))
        cols.extend(idx.tolist())
        vals.extend(w.tolist())
    return sp.csr_matrix((vals, (rows, cols)), shape=(ny, ny))


def _trapezoid_weights(y: np.ndarray) -> np.ndarray:
    dy = np.diff(y)
    w = np.zeros_like(y)
    w[:-1] += 0.5 * dy
    w[1:] += 0.5 * dy
    return w


@dataclass(frozen=True, eq=False)
class Grid:
    """Tensor grid on ``[0, lx) x [0, ly]``.

    Use :func:`make_grid` to construct; the derived operators are built once
    in ``__post_init__`` and shared by every call.
    """

    nx: int
    lx: float
    ny: int
    ly: float
    y_coords: np.ndarray
    stretch: float = 0.0
    wavenumbers: np.ndarray = field(init=False)
    x_coords: np.ndarray = field(init=False)
    dx: float = field(init=False)
    quad_weights: np.ndarray = field(init=False)
    d1: sp.csr_matrix = field(init=False, repr=False)
    d2: sp.csr_matrix = field(init=False, repr=False)
    mode_multiplicity: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        y = np.asarray(self.y_coords, dtype=float)
        if y.shape != (self.ny,) or np.any(np.diff(y) <= 0):
            raise ValueError("y_coords must be strictly increasing with length ny")
        y.setflags(write=False)
        set_ = object.__setattr__
        set_(self, "y_coords", y)
        k = 2.0 * np.pi * np.arange(self.nx // 2 + 1) / self.lx
        set_(self, "wavenumbers", k)
        set_(self, "dx", self.lx / self.nx)
        set_(self, "x_coords", np.arange(self.nx) * (self.lx / self.nx))
        set_(self, "quad_weights", _trapezoid_weights(y))
        set_(self, "d1", _derivative_matrix(y, 1))
        set_(self, "d2", _derivative_matrix(y, 2))
        # rfft storage: interior modes stand for a +/-k pair
        mult = np.full(self.nx // 2 + 1, 2.0)
        mult[0] = 1.0
        mult[-1] = 1.0
        set_(self, "mode_multiplicity", mult)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def nk(self) -> int:
        return self.nx // 2 + 1

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(X, Y)`` coordinate arrays of shape ``(ny, nx)``."""
        return np.meshgrid(self.x_coords, self.y_coords)

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape)

    # -- spectral -----------------------------------------------------------

    def to_spectral(self, f: np.ndarray) -> np.ndarray:
        f = check_field(f, self)
        return np.fft.rfft(f, axis=-1) / self.nx

    def from_spectral(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s)
        if s.shape != (self.ny, self.nk):
            raise ValueError(f"spectral field must have shape {(self.ny, self.nk)}, got {s.shape}")
        return np.fft.irfft(s * self.nx, n=self.nx, axis=-1)

    def ddx(self, f: np.ndarray) -> np.ndarray:
        """Exact spectral x-derivative; the Nyquist mode is dropped."""
        s = self.to_spectral(f)
        s = s * (1j * self.wavenumbers)
        s[:, -1] = 0.0
        return self.from_spectral(s)

    def dealias(self, f: np.ndarray) -> np.ndarray:
        """Zero the tangential modes outside the 2/3-rule band."""
        s = np.fft.rfft(f, axis=-1)
        s[:, self.nx // 3:] = 0.0
        return np.fft.irfft(s, n=self.nx, axis=-1)

    # -- normal direction ---------------------------------------------------

    def ddy(self, f: np.ndarray, order: int = 1) -> np.ndarray:
        if order == 1:
            return self.d1 @ check_field(f, self)
        if order == 2:
            return self.d2 @ check_field(f, self)
        raise ValueError(f"order must be 1 or 2, got {order}")

    def integrate_y(self, f: np.ndarray) -> np.ndarray:
        """Trapezoid integral over ``[0, ly]`` of each column (or 1-D profile)."""
        return np.tensordot(self.quad_weights, f, axes=(0, 0))

    def cumulative_y(self, f: np.ndarray) -> np.ndarray:
        """Cumulative trapezoid ``int_0^y f dz``, zero at ``y = 0``."""
        dy = np.diff(self.y_coords)
        shape = (-1,) + (1,) * (np.ndim(f) - 1)
        inc = 0.5 * dy.reshape(shape) * (f[1:] + f[:-1])
        out = np.zeros(np.shape(f), dtype=np.result_type(f, float))
        np.cumsum(inc, axis=0, out=out[1:])
        return out

    def exp_kernel_integral(self, f: np.ndarray, rate: float) -> np.ndarray:
        """Column-wise ``I(y) = int_0^y exp(-rate (y - z)) f(z) dz``.

        Marches upward with the decayed previous value plus the exact kernel
        integral of the piecewise-linear interpolant of ``f``; ``exp(+y)`` is
        never formed. Positive weights keep the map monotone and bounded by
        ``max|f| / rate``.
        """
        if not rate > 0:
            raise ValueError(f"rate must be positive, got {rate}")
        f = np.asarray(f)
        if not np.iscomplexobj(f):
            f = f.astype(float, copy=False)
        h = rate * np.diff(self.y_coords)
        decay = np.exp(-h)
        em1 = -np.expm1(-h)  # 1 - e^{-h}
        # weights of f_j and f_{j+1}; series for tiny h avoids cancellation
        with np.errstate(invalid="ignore", divide="ignore"):
            w_new = np.where(h > 1e-4, (h - em1) / (h * rate), (h / 2 - h**2 / 6 + h**3 / 24) / rate)
            w_old = np.where(h > 1e-4, (em1 - h * decay) / (h * rate), (h / 2 - h**2 / 3 + h**3 / 8) / rate)
        # out[j+1] - decay[j] out[j] = w_old[j] f[j] + w_new[j] f[j+1]: lower bidiagonal
        shape = (-1,) + (1,) * (f.ndim - 1)
        rhs = np.zeros_like(f)
        rhs[1:] = w_old.reshape(shape) * f[:-1] + w_new.reshape(shape) * f[1:]
        ab = np.ones((2, len(self.y_coords)))
        ab[1, :-1] = -decay
        return solve_banded((1, 0), ab, rhs, check_finite=False)

    def weighted_l2(self, f: np.ndarray, alpha: float) -> float:
        """``sqrt(int int exp(2 alpha y) |f|^2 dx dy)`` (trapezoid in y)."""
        if alpha * self.ly >= _MAX_WEIGHT_EXPONENT:
            raise OverflowError(f"alpha * ly = {alpha * self.ly} exceeds {_MAX_WEIGHT_EXPONENT}")
        f = check_field(f, self)
        row = np.sum(f * f, axis=1) * self.dx
        return math.sqrt(float(np.dot(self.quad_weights * np.exp(2.0 * alpha * self.y_coords), row)))

    def weight(self, alpha: float) -> np.ndarray:
        """Quadrature weights times ``exp(2 alpha y)``."""
        if alpha * self.ly >= _MAX_WEIGHT_EXPONENT:
            raise OverflowError(f"alpha * ly = {alpha * self.ly} exceeds {_MAX_WEIGHT_EXPONENT}")
        return self.quad_weights * np.exp(2.0 * alpha * self.y_coords)


def make_grid(nx: int = 64, lx: float = 2 * np.pi, ny: int = 256, ly: float = 20.0,
              stretch: float = 0.0) -> Grid:
    """Build a :class:`Grid`.

    ``stretch > 0`` clusters points near the wall through
    ``y(s) = ly (exp(stretch s) - 1) / (exp(stretch) - 1)`` on uniform ``s``.
    """
    if int(nx) != nx or nx < 8 or (int(nx) & (int(nx) - 1)) != 0:
        raise ValueError(f"nx must be a power of two >= 8, got {nx}")
    if int(ny) != ny or ny < 16:
        raise ValueError(f"ny must be an integer >= 16, got {ny}")
    if not (lx > 0 and ly > 0):
        raise ValueError(f"lx and ly must be positive, got lx={lx}, ly={ly}")
    if stretch < 0:
        raise ValueError(f"stretch must be >= 0, got {stretch}")
    s = np.linspace(0.0, 1.0, int(ny))
    if stretch == 0:
        y = ly * s
    else:
        y = ly * np.expm1(stretch * s) / np.expm1(stretch)
    y[0], y[-1] = 0.0, ly
    return Grid(nx=int(nx), lx=float(lx), ny=int(ny), ly=float(ly), y_coords=y, stretch=float(stretch))
