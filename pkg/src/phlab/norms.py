"""Weighted analytic norms of tangentially periodic fields.

For a field ``g`` the four families of terms are

    X_m = |e^{a y} d_x^m g|_{L2}       tau^m M_m
    Y_m = |e^{a y} d_x^m g|_{L2}       tau^(m - 1/2) m^(1/2) M_m
    Z_m = |e^{a y} d_y d_x^m g|_{L2}   tau^m M_m
    D_m = |e^{a y} d_x^m g|_{Linf_y L2_x} tau^m M_m

with ``M_m = (m + 1)^r / m!``, and each norm is the root of the sum of
squares over ``m``. Two independent routes evaluate them:

* the weight-function route regroups the ``m``-sum per Fourier mode, so
  ``|g|_X^2 = sum_k W_X(k tau) * int e^{2 a y} |g_k(y)|^2 dy`` with
  ``W_X(s) = sum_m s^(2m) M_m^2``;
* the derivative route differentiates ``m`` times in x and applies the
  quadratures literally. It is the only route for ``D``.

The Nyquist mode is not differentiable on the grid (``Grid.ddx`` drops it),
so it carries the ``m = 0`` weight only, in both routes.
"""
from __future__ import annotations

import math
import warnings
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, logsumexp

from ._validation import check_field
from .grid import Grid
from .profiles import ALPHA_MAX, robin_residual

__all__ = [
    "NormParams",
    "NormReport",
    "RadiusTooLargeError",
    "TailWarning",
    "weight_M",
    "log_weight_M",
    "mode_weight_series",
    "log_mode_weight_series",
    "norm_X",
    "norm_Y",
    "norm_Z",
    "norm_D",
    "inner_X",
    "boundary_trace_norm",
    "norms_weight_route",
    "norms_derivative_route",
    "energy_identity_residual",
    "estimate_radius_from_spectrum",
    "lyapunov_functional",
]

_LOG_OVERFLOW = 700.0


class RadiusTooLargeError(OverflowError):
    """tau * k_max is too large for the weight series to be represented."""


class TailWarning(RuntimeWarning):
    """The derivative-route m-sum was truncated before its tail converged."""


@dataclass(frozen=True)
class NormParams:
    r: float = 2.0
    tau: float = 1.0
    alpha: float = 0.3
    m_max: int = 40
    series_tol: float = 1e-14
    # modes with index >= band are left out (None keeps the full spectrum)
    band: int | None = None

    def __post_init__(self):
        if not self.r > 1:
            raise ValueError(f"r must be > 1, got {self.r}")
        if not self.tau > 0:
            raise ValueError(f"tau must be > 0, got {self.tau}")
        if not 0 <= self.alpha < ALPHA_MAX:
            raise ValueError(f"alpha must lie in [0, sqrt(2)/2), got {self.alpha}")
        if self.m_max < 8:
            raise ValueError(f"m_max must be >= 8, got {self.m_max}")
        if self.band is not None and self.band < 1:
            raise ValueError(f"band must be >= 1, got {self.band}")


@dataclass
class NormReport:
    norm_X: float
    norm_Y: float
    norm_Z: float
    norm_D: float
    boundary_trace: float
    route: str
    per_mode: dict[str, np.ndarray] = field(default_factory=dict)

    def as_dict(self) -> dict[str, float]:
        return {"normX": self.norm_X, "normY": self.norm_Y, "normZ": self.norm_Z,
                "normD": self.norm_D, "boundary_trace": self.boundary_trace}


# -- weights -----------------------------------------------------------------


def log_weight_M(m, r: float):
    m = np.asarray(m, dtype=float)
    return r * np.log1p(m) - gammaln(m + 1.0)


def weight_M(m: int, r: float) -> float:
    """``(m + 1)^r / m!`` evaluated in the log domain."""
    if m < 0:
        raise ValueError(f"m must be >= 0, got {m}")
    return float(np.exp(log_weight_M(m, r)))


def _series_terms(log_s: float, r: float, kind: str, m: np.ndarray) -> np.ndarray:
    logs = 2.0 * m * log_s + 2.0 * log_weight_M(m, r)
    if kind == "Y":
        with np.errstate(divide="ignore"):
            logs = logs + np.log(m)
    elif kind != "X":
        raise ValueError(f"kind must be 'X' or 'Y', got {kind!r}")
    return logs


def log_mode_weight_series(s: float, r: float, kind: str = "X", tol: float = 1e-14) -> float:
    """Natural log of ``W(s)``; ``-inf`` for an identically zero series.

    ``W_X(s) = sum_m s^(2m) M_m^2`` and ``W_Y(s) = sum_m s^(2m) m M_m^2``.
    Terms are summed in blocks until the last term is below ``tol`` times
    the partial sum and the index is past the peak near ``m ~ s``.
    """
    if s < 0:
        raise ValueError(f"s must be >= 0, got {s}")
    if s == 0:
        return 0.0 if kind == "X" else -math.inf
    log_s = math.log(s)
    block = 64
    start = 0
    acc = -math.inf
    log_tol = math.log(tol)
    while True:
        m = np.arange(start, start + block, dtype=float)
        terms = _series_terms(log_s, r, kind, m)
        acc = float(np.logaddexp(acc, logsumexp(terms)))
        last = terms[-1]
        if m[-1] > s and last < acc + log_tol and terms[-1] < terms[-2]:
            return acc
        start += block
        block *= 2


def mode_weight_series(s: float, r: float, kind: str = "X", tol: float = 1e-14) -> float:
    """``W_X(s)`` or ``W_Y(s)``; raises if the value overflows a double."""
    lw = log_mode_weight_series(s, r, kind, tol)
    if lw > _LOG_OVERFLOW:
        raise RadiusTooLargeError(f"log W({s}) = {lw:.1f} exceeds {_LOG_OVERFLOW}")
    return math.exp(lw)


def _log_weights(grid: Grid, p: NormParams, kind: str) -> np.ndarray:
    """log of the per-mode series weight, Nyquist restricted to m = 0."""
    k = grid.wavenumbers
    m = np.arange(_m_needed(grid, p) + 1, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_s = np.log(k * p.tau)
        terms = _series_terms(0.0, p.r, kind, m)[:, None] + np.where(
            m[:, None] == 0, 0.0, 2.0 * m[:, None] * log_s[None, :])
    out = logsumexp(terms, axis=0)
    out[-1] = 0.0 if kind == "X" else -math.inf
    if p.band is not None:
        out[p.band:] = -math.inf
    if np.max(out) > _LOG_OVERFLOW:
        raise RadiusTooLargeError(
            f"radius too large for grid: tau * k_max = {p.tau * k[-2]:.3g} gives log W = {np.max(out):.1f}")
    return out


# -- weight-function route ---------------------------------------------------


def _mode_energy(grid: Grid, f: np.ndarray, alpha: float) -> np.ndarray:
    """``lx * mult_k * int e^{2 a y} |f_k(y)|^2 dy`` for every rfft mode."""
    fh = grid.to_spectral(f)
    w = grid.weight(alpha)
    return grid.lx * grid.mode_multiplicity * (w @ (fh.real**2 + fh.imag**2))


def _weighted_total(log_w: np.ndarray, energy: np.ndarray) -> tuple[float, np.ndarray]:
    per_mode = np.where(energy > 0, np.exp(log_w + np.log(np.where(energy > 0, energy, 1.0))), 0.0)
    return float(np.sqrt(per_mode.sum())), per_mode


def norm_X(grid: Grid, g: np.ndarray, p: NormParams) -> float:
    return _weighted_total(_log_weights(grid, p, "X"), _mode_energy(grid, g, p.alpha))[0]


def norm_Y(grid: Grid, g: np.ndarray, p: NormParams) -> float:
    lw = _log_weights(grid, p, "Y") - math.log(p.tau)
    return _weighted_total(lw, _mode_energy(grid, g, p.alpha))[0]


def norm_Z(grid: Grid, g: np.ndarray, p: NormParams) -> float:
    return _weighted_total(_log_weights(grid, p, "X"), _mode_energy(grid, grid.ddy(g), p.alpha))[0]


def inner_X(grid: Grid, f: np.ndarray, g: np.ndarray, p: NormParams) -> float:
    """Inner product inducing ``norm_X``: ``sum_m tau^2m M_m^2 <e^{ay} d^m f, e^{ay} d^m g>``."""
    fh, gh = grid.to_spectral(f), grid.to_spectral(g)
    cross = grid.weight(p.alpha) @ (fh.real * gh.real + fh.imag * gh.imag)
    per_mode = grid.lx * grid.mode_multiplicity * cross
    return float(np.dot(np.exp(_log_weights(grid, p, "X")), per_mode))


def boundary_trace_norm(grid: Grid, g: np.ndarray, p: NormParams) -> float:
    """X-type norm (no y-weight) of the wall trace ``g(x, 0)``."""
    g = check_field(g, grid, "g")
    th = np.fft.rfft(g[0]) / grid.nx
    energy = grid.lx * grid.mode_multiplicity * np.abs(th) ** 2
    return _weighted_total(_log_weights(grid, p, "X"), energy)[0]


def norms_weight_route(grid: Grid, g: np.ndarray, p: NormParams, with_D: bool = True) -> NormReport:
    """All norms through the per-mode weight functions (``D`` via derivatives)."""
    g = check_field(g, grid, "g")
    lwx = _log_weights(grid, p, "X")
    lwy = _log_weights(grid, p, "Y") - math.log(p.tau)
    eg = _mode_energy(grid, g, p.alpha)
    X, pX = _weighted_total(lwx, eg)
    Y, pY = _weighted_total(lwy, eg)
    Z, pZ = _weighted_total(lwx, _mode_energy(grid, grid.ddy(g), p.alpha))
    th = np.fft.rfft(g[0]) / grid.nx
    T, pT = _weighted_total(lwx, grid.lx * grid.mode_multiplicity * np.abs(th) ** 2)
    D = norm_D(grid, g, p) if with_D else float("nan")
    return NormReport(X, Y, Z, D, T, "weight_function", {"X": pX, "Y": pY, "Z": pZ, "trace": pT})


# -- derivative route ----------------------------------------------------------


def _m_needed(grid: Grid, p: NormParams) -> int:
    s = p.tau * grid.wavenumbers[-2]
    return max(p.m_max, int(math.ceil(s + 12.0 * math.sqrt(s) + 40.0)))


def _truncate(grid: Grid, f: np.ndarray, band: int) -> np.ndarray:
    s = np.fft.rfft(f, axis=-1)
    s[:, band:] = 0.0
    return np.fft.irfft(s, n=grid.nx, axis=-1)


def norms_derivative_route(grid: Grid, g: np.ndarray, p: NormParams, m_max: int | None = None) -> NormReport:
    """Norms from the literal definitions: repeated spectral ``d/dx`` and quadrature.

    The derivative is renormalized after each differentiation and the scale
    carried in the log domain. By default the sum runs far enough for the
    grid's largest wavenumber; an explicit ``m_max`` that stops early triggers
    a :class:`TailWarning` with the size of the last term.
    """
    g = check_field(g, grid, "g")
    m_top = _m_needed(grid, p) if m_max is None else int(m_max)
    ddx = grid.ddx if p.band is None else (lambda f: _truncate(grid, grid.ddx(f), p.band))
    w = grid.weight(p.alpha)
    sup_w = np.exp(p.alpha * grid.y_coords)
    log_tau = math.log(p.tau)

    nk = grid.nk
    acc = {key: np.zeros(nk) for key in ("X", "Y", "Z", "trace")}
    totals = dict.fromkeys(("X", "Y", "Z", "D", "trace"), 0.0)
    h = g.copy() if p.band is None else _truncate(grid, g, p.band)
    hy = grid.ddy(h)
    log_scale = 0.0
    last_term = 0.0
    for m in range(m_top + 1):
        if not np.any(h) and not np.any(hy):
            break
        log_c = 2.0 * (m * log_tau + float(log_weight_M(m, p.r))) + 2.0 * log_scale
        if log_c > _LOG_OVERFLOW:
            raise RadiusTooLargeError(f"derivative-route term m={m} overflows")
        c = math.exp(log_c)
        rows = np.sum(h * h, axis=1) * grid.dx
        rows_y = np.sum(hy * hy, axis=1) * grid.dx
        x_term = c * float(w @ rows)
        totals["X"] += x_term
        totals["Y"] += c * m / p.tau * float(w @ rows)
        totals["Z"] += c * float(w @ rows_y)
        totals["D"] += c * float(np.max(sup_w**2 * rows))
        totals["trace"] += c * float(rows[0])
        # per-mode split of the same terms
        hh = np.fft.rfft(h, axis=-1) / grid.nx
        hyh = np.fft.rfft(hy, axis=-1) / grid.nx
        e_mode = grid.lx * grid.mode_multiplicity * (w @ (np.abs(hh) ** 2))
        acc["X"] += c * e_mode
        acc["Y"] += c * m / p.tau * e_mode
        acc["Z"] += c * grid.lx * grid.mode_multiplicity * (w @ (np.abs(hyh) ** 2))
        acc["trace"] += c * grid.lx * grid.mode_multiplicity * np.abs(hh[0]) ** 2
        last_term = x_term
        h = ddx(h)
        hy = ddx(hy)
        scale = max(float(np.max(np.abs(h))), float(np.max(np.abs(hy))))
        if scale > 0:
            h /= scale
            hy /= scale
            log_scale += math.log(scale)
    else:
        if totals["X"] > 0 and last_term > p.series_tol * totals["X"]:
            warnings.warn(f"derivative-route tail not converged at m_max={m_top}: "
                          f"last term / sum = {last_term / totals['X']:.3e}", TailWarning, stacklevel=2)
    return NormReport(math.sqrt(totals["X"]), math.sqrt(totals["Y"]), math.sqrt(totals["Z"]),
                      math.sqrt(totals["D"]), math.sqrt(totals["trace"]), "derivative", acc)


def norm_D(grid: Grid, g: np.ndarray, p: NormParams) -> float:
    """``sqrt(sum_m D_m^2)`` with the y-supremum taken row by row.

    Each row's x-L2 norm of ``d_x^m g`` follows from Parseval, so all ``m``
    are handled by one matrix product in the log domain.
    """
    g = check_field(g, grid, "g")
    gh = grid.to_spectral(g)
    # row energies per mode; the Nyquist mode only enters at m = 0
    energy = grid.lx * grid.mode_multiplicity * np.abs(gh) ** 2
    if p.band is not None:
        energy[:, p.band:] = 0.0
    k = grid.wavenumbers[:-1]
    m = np.arange(_m_needed(grid, p) + 1, dtype=float)
    lw = 2.0 * (m * math.log(p.tau) + log_weight_M(m, p.r))
    with np.errstate(divide="ignore", invalid="ignore"):
        logk = np.log(k)
        log_km = np.where(m[:, None] == 0, 0.0, 2.0 * m[:, None] * logk[None, :])  # (M, nk - 1)
    shift = np.max(log_km, axis=1, keepdims=True)
    rows = energy[:, :-1] @ np.exp(log_km - shift).T  # (ny, M)
    rows[:, 0] += energy[:, -1]
    log_rows = np.log(np.where(rows > 0, rows, 1.0)) + shift.T
    weights = 2.0 * p.alpha * grid.y_coords[:, None]
    log_sup = np.max(np.where(rows > 0, log_rows + weights, -np.inf), axis=0)
    total = logsumexp(log_sup + lw) if np.any(np.isfinite(log_sup)) else -np.inf
    if total > _LOG_OVERFLOW:
        raise RadiusTooLargeError("D-norm overflows")
    return float(math.exp(0.5 * total)) if np.isfinite(total) else 0.0


# -- energy identity -----------------------------------------------------------


def energy_identity_residual(grid: Grid, g: np.ndarray, alpha: float, tol: float = 1e-6) -> float:
    """|LHS - RHS| of the weighted integration-by-parts identity (m = 0).

    LHS ``-int int g_yy e^{2 a y} g`` and RHS
    ``(1 - a) |g(., 0)|^2 + |e^{a y} g_y|^2 - 2 a^2 |e^{a y} g|^2``; the
    identity relies on the Robin condition, so ``g`` must satisfy it to
    within ``tol`` relative to ``max|g|``.
    """
    g = check_field(g, grid, "g")
    scale = float(np.max(np.abs(g)))
    if scale == 0:
        return 0.0
    res = float(np.max(np.abs(robin_residual(grid, g))))
    if res > tol * scale:
        raise ValueError(f"g violates the Robin condition (residual {res:.3e}); identity does not apply")
    w = grid.weight(alpha)
    lhs = -float(w @ np.sum(grid.ddy(g, 2) * g, axis=1)) * grid.dx
    trace = float(np.sum(g[0] ** 2)) * grid.dx
    gy = grid.ddy(g)
    rhs = ((1.0 - alpha) * trace + float(w @ np.sum(gy * gy, axis=1)) * grid.dx
           - 2.0 * alpha**2 * float(w @ np.sum(g * g, axis=1)) * grid.dx)
    return abs(lhs - rhs)


# -- spectral radius proxy -------------------------------------------------------


def estimate_radius_from_spectrum(grid: Grid, g: np.ndarray, k_window: Sequence[int] | slice | None = None,
                                  floor: float = 1e-13) -> float:
    """Fit ``|g_k| ~ exp(-tau k)``: least-squares slope of ``-log |g_k|_{L2_y}`` against ``k``.

    ``k_window`` selects rfft mode indices (default: all non-zero modes below
    Nyquist); modes with amplitude at or below ``floor`` times the largest
    amplitude are discarded, so the estimate is scale invariant.
    """
    g = check_field(g, grid, "g")
    gh = grid.to_spectral(g)
    amp = np.sqrt(grid.integrate_y(np.abs(gh) ** 2))
    idx = np.arange(grid.nk)
    if k_window is None:
        sel = idx[1:-1]
    elif isinstance(k_window, slice):
        sel = idx[k_window]
    else:
        sel = np.asarray(list(k_window), dtype=int)
    peak = float(np.max(amp))
    sel = sel[amp[sel] > floor * peak] if len(sel) and peak > 0 else sel[:0]
    if len(sel) < 4:
        raise ValueError(f"need >= 4 modes above {floor:g} in the window, found {len(sel)}")
    k = grid.wavenumbers[sel]
    slope = np.polyfit(k, -np.log(amp[sel]), 1)[0]
    return float(slope)


# -- Lyapunov functional -------------------------------------------------------


def lyapunov_functional(history: Sequence[tuple[float, float, float]], alpha: float) -> np.ndarray:
    """``E(t) = e^{2 b t} |g|_X^2 + int_0^t 2 e^{2 b s} |g|_Z^2 ds`` with ``b = 1 - 2 alpha^2``.

    ``history`` holds ``(t, normX, normZ)`` samples; the time integral is the
    cumulative trapezoid rule over the samples.
    """
    if len(history) == 0:
        return np.zeros(0)
    arr = np.asarray(history, dtype=float)
    t, nx_, nz = arr[:, 0], arr[:, 1], arr[:, 2]
    if np.any(np.diff(t) <= 0):
        raise ValueError("history must be strictly increasing in t")
    rate = 2.0 * (1.0 - 2.0 * alpha**2)
    growth = np.exp(rate * t)
    integrand = 2.0 * growth * nz**2
    integral = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(t) * (integrand[1:] + integrand[:-1]))])
    return growth * nx_**2 + integral
