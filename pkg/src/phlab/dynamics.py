"""Time evolution of the good unknown ``g``.

The evolution equation is

    g_t + (1 - e^{-y} + u) g_x + v g_y = -g + g_yy,
    (g_y - g)|_{y=0} = 0,   g(ly) = 0,

with ``u`` and ``v`` rebuilt from ``g`` at every evaluation. Time stepping is
the IMEX trapezoidal scheme: damping and normal diffusion are Crank-Nicolson
(one banded LU per step size, shared by all x columns), transport is Heun.
A primitive-variable stepper for the velocity perturbation ``u`` is kept for
cross-validation.
"""
from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
import scipy.fft as sfft
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from ._validation import check_field, check_positive
from .grid import Grid
from .profiles import ModelParams, robin_residual

__all__ = [
    "State",
    "Tendency",
    "SolverError",
    "CFLError",
    "assemble_rhs",
    "linearized_rhs",
    "apply_boundary_conditions",
    "step_imex",
    "run_simulation",
    "vorticity_residual",
    "step_primitive",
    "boundary_residual",
    "CFL_LIMIT",
]

CFL_LIMIT = 0.9


class SolverError(RuntimeError):
    pass


class CFLError(SolverError):
    def __init__(self, cfl: float, dt_max: float):
        super().__init__(f"CFL number {cfl:.3f} exceeds {CFL_LIMIT}; use dt <= {dt_max:.6g}")
        self.cfl = cfl
        self.dt_max = dt_max


@dataclass(frozen=True, eq=False)
class State:
    g: np.ndarray
    t: float
    params: ModelParams
    grid: Grid
    tau: float = float("nan")

    def __post_init__(self):
        object.__setattr__(self, "g", check_field(self.g, self.grid, "g"))
        if math.isnan(self.tau):
            object.__setattr__(self, "tau", self.params.tau0)

    def replace(self, **changes) -> "State":
        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class Tendency:
    transport: np.ndarray
    damping: np.ndarray
    diffusion: np.ndarray
    dg_dt: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "dg_dt", self.transport + self.damping + self.diffusion)


# -- right-hand side ---------------------------------------------------------


def _shear(grid: Grid) -> np.ndarray:
    return -np.expm1(-grid.y_coords)[:, None]


def _transport(grid: Grid, g: np.ndarray, linear: bool) -> tuple[np.ndarray, float]:
    """Transport tendency ``-(1 - e^{-y} + u) g_x - v g_y`` and the max speed."""
    nx, cut = grid.nx, grid.nx // 3
    ik = 1j * grid.wavenumbers
    gh = sfft.rfft(g, axis=-1)
    gxh = gh * ik
    gxh[:, -1] = 0.0
    shear = _shear(grid)
    if linear:
        gx = sfft.irfft(gxh, n=nx, axis=-1)
        return -shear * gx, float(np.max(shear))
    # products only see the 2/3-rule band, so u and v are built on it alone
    ghf = np.zeros_like(gh)
    ghf[:, :cut] = gh[:, :cut]
    uh = np.zeros_like(gh)
    uh[:, :cut] = grid.exp_kernel_integral(gh[:, :cut], 1.0)
    vh = -grid.cumulative_y(uh * ik)
    gf, gxf, u, v = sfft.irfft(np.stack([ghf, ghf * ik, uh, vh]), n=nx, axis=-1)
    gyf = grid.d1 @ gf
    ph = sfft.rfft(u * gxf + v * gyf, axis=-1)
    ph[:, cut:] = 0.0
    # the shear is x-independent, so the linear part is applied mode by mode
    out = sfft.irfft(-shear * gxh - ph, n=nx, axis=-1)
    speed = float(np.max(np.abs(shear + u)))
    return out, speed


def _guard(name: str, arr: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(arr)):
        raise SolverError(f"non-finite values in the {name} term")
    return arr


def _tendency(state: State, linear: bool) -> Tendency:
    grid, g, p = state.grid, state.g, state.params
    if p.transport_on:
        transport, _ = _transport(grid, g, linear)
    else:
        transport = np.zeros_like(g)
    damping = -g if p.damping_on else np.zeros_like(g)
    diffusion = grid.d2 @ g if p.diffusion_on else np.zeros_like(g)
    return Tendency(_guard("transport", transport), _guard("damping", damping),
                    _guard("diffusion", diffusion))


def assemble_rhs(state: State) -> Tendency:
    """Full nonlinear tendency of the good unknown, split by term."""
    return _tendency(state, linear=False)


def linearized_rhs(state: State) -> Tendency:
    """Tendency linearized about ``g = 0``: transport by the Hartmann shear only."""
    return _tendency(state, linear=True)


# -- boundary conditions -----------------------------------------------------


def apply_boundary_conditions(grid: Grid, g: np.ndarray) -> np.ndarray:
    """Set ``g(0)`` from the one-sided Robin stencil and ``g(ly) = 0``.

    On a uniform grid the wall value is ``(4 g1 - g2) / (3 + 2 dy)``.
    """
    g = np.array(g, dtype=float)
    row = grid.d1.getrow(0)
    c0 = row[0, 0]
    rest = np.asarray(row @ g).ravel() - c0 * g[0]
    g[0] = -rest / (c0 - 1.0)
    g[-1] = 0.0
    return g


# -- IMEX stepping -----------------------------------------------------------


def _implicit_operator(grid: Grid, damping: bool, diffusion: bool) -> sp.csr_matrix:
    ny = grid.ny
    op = sp.csr_matrix((ny, ny))
    if damping:
        op = op - sp.identity(ny, format="csr")
    if diffusion:
        op = op + grid.d2
    op = op.tolil()
    op[0, :] = 0.0
    op[ny - 1, :] = 0.0
    return op.tocsr()


@lru_cache(maxsize=32)
def _factorized(grid: Grid, dt: float, damping: bool, diffusion: bool, dirichlet_wall: bool):
    ny = grid.ny
    op = _implicit_operator(grid, damping, diffusion)
    lhs = (sp.identity(ny, format="csr") - 0.5 * dt * op).tolil()
    lhs[0, :] = 0.0
    if dirichlet_wall:
        lhs[0, 0] = 1.0
    else:
        lhs[0, :] = grid.d1.getrow(0).toarray()
        lhs[0, 0] -= 1.0
    lhs[ny - 1, :] = 0.0
    lhs[ny - 1, ny - 1] = 1.0
    return op, splu(lhs.tocsc())


def _solve(lu, rhs: np.ndarray) -> np.ndarray:
    """Column solve done mode by mode, so that roundoff stays relative to each
    tangential mode instead of leaking from the dominant ones into all."""
    rhs[0] = 0.0
    rhs[-1] = 0.0
    nx = rhs.shape[1]
    sh = sfft.rfft(rhs, axis=-1)
    nk = sh.shape[1]
    sol = lu.solve(np.concatenate([sh.real, sh.imag], axis=1))
    return sfft.irfft(sol[:, :nk] + 1j * sol[:, nk:], n=nx, axis=-1)


def _check_cfl(grid: Grid, speed: float, dt: float) -> None:
    cfl = speed * dt / grid.dx
    if cfl > CFL_LIMIT:
        raise CFLError(cfl, CFL_LIMIT * grid.dx / speed)


Forcing = Callable[[float], np.ndarray]


def step_imex(state: State, dt: float, linear: bool = False, forcing: Forcing | None = None) -> State:
    """Advance ``state`` by one IMEX trapezoidal step of size ``dt``.

    ``forcing(t)`` adds a source term, treated explicitly (used by the
    manufactured-solution studies).
    """
    dt = check_positive(dt, "dt")
    grid, p, g = state.grid, state.params, state.g
    op, lu = _factorized(grid, dt, p.damping_on, p.diffusion_on, False)

    def explicit(field_, t):
        if p.transport_on:
            n, speed = _transport(grid, field_, linear)
        else:
            n, speed = np.zeros_like(field_), 0.0
        if forcing is not None:
            n = n + forcing(t)
        return _guard("transport", n), speed

    n0, speed = explicit(g, state.t)
    _check_cfl(grid, speed, dt)
    base = g + 0.5 * dt * (op @ g)
    g1 = _solve(lu, base + dt * n0)
    n1, _ = explicit(g1, state.t + dt)
    g_new = _solve(lu, base + 0.5 * dt * (n0 + n1))
    g_new = apply_boundary_conditions(grid, _guard("solution", g_new))
    return replace(state, g=g_new, t=state.t + dt)


Observer = Callable[[State, Tendency], None]


def run_simulation(state0: State, t_end: float, dt: float, observer: Observer | None = None,
                   every: int = 1, linear: bool = False, forcing: Forcing | None = None,
                   on_step: Callable[[State, State], State] | None = None) -> State:
    """Step from ``state0.t`` to ``t_end``.

    ``dt`` is shrunk so that a whole number of steps lands on ``t_end``. The
    observer sees the initial state, every ``every``-th state and the final
    state. ``on_step(old, new)`` may return a modified new state (the radius
    tracker hooks in here).
    """
    span = t_end - state0.t
    if span < 0:
        raise ValueError(f"t_end={t_end} precedes the initial time {state0.t}")
    rhs = linearized_rhs if linear else assemble_rhs
    if span == 0:
        if observer is not None:
            observer(state0, rhs(state0))
        return state0
    n_steps = max(1, math.ceil(span / dt - 1e-9))
    dt = span / n_steps
    state = state0
    if observer is not None:
        observer(state, rhs(state))
    for i in range(1, n_steps + 1):
        try:
            new = step_imex(state, dt, linear=linear, forcing=forcing)
        except SolverError as exc:
            raise SolverError(f"step {i} (t={state.t:.6g}): {exc}") from exc
        if i == n_steps:
            new = replace(new, t=float(t_end))
        if on_step is not None:
            new = on_step(state, new)
        state = new
        if observer is not None and (i % every == 0 or i == n_steps):
            observer(state, rhs(state))
    return state


# -- diagnostics -------------------------------------------------------------


def vorticity_residual(levels: Sequence[State], margin: int = 2) -> float:
    """Max-norm residual of the vorticity equation at the middle of three levels.

    ``omega = d_y u`` with ``u`` rebuilt from ``g``; the time derivative is the
    three-point (possibly unequally spaced) centred difference. Rows within
    ``margin`` nodes of either end are excluded, where nested one-sided
    stencils are not consistent.
    """
    if len(levels) < 3:
        raise ValueError(f"need at least 3 stored time levels, got {len(levels)}")
    from .profiles import reconstruct_u, reconstruct_v

    s0, s1, s2 = levels[-3:]
    grid, p = s1.grid, s1.params
    om = [grid.ddy(reconstruct_u(grid, s.g)) for s in (s0, s1, s2)]
    h0, h1 = s1.t - s0.t, s2.t - s1.t
    w = fd_time_weights(h0, h1)
    om_t = w[0] * om[0] + w[1] * om[1] + w[2] * om[2]
    omega = om[1]
    u = reconstruct_u(grid, s1.g)
    v = reconstruct_v(grid, u)
    e = np.exp(-grid.y_coords)[:, None]
    res = om_t.copy()
    if p.transport_on:
        res += (1.0 - e) * grid.ddx(omega) - v * e
        res += grid.dealias(grid.dealias(u) * grid.dealias(grid.ddx(omega)))
        res += grid.dealias(grid.dealias(v) * grid.dealias(grid.ddy(omega)))
    if p.damping_on:
        res += omega
    if p.diffusion_on:
        res -= grid.ddy(omega, 2)
    return float(np.max(np.abs(res[margin:grid.ny - margin])))


def fd_time_weights(h0: float, h1: float) -> tuple[float, float, float]:
    """Second-order first-derivative weights at the middle of three levels."""
    return (-h1 / (h0 * (h0 + h1)), (h1 - h0) / (h0 * h1), h0 / (h1 * (h0 + h1)))


def step_primitive(grid: Grid, u: np.ndarray, dt: float, params: ModelParams, linear: bool = False) -> np.ndarray:
    """One IMEX step of the velocity-perturbation equation with ``u = 0`` at both ends.

    Solves ``u_t + (1 - e^{-y} + u) u_x + v (e^{-y} + u_y) = -u + u_yy``.
    """
    dt = check_positive(dt, "dt")
    u = check_field(u, grid, "u")
    op, lu = _factorized(grid, dt, params.damping_on, params.diffusion_on, True)
    e = np.exp(-grid.y_coords)[:, None]

    def explicit(w):
        if not params.transport_on:
            return np.zeros_like(w), 0.0
        from .profiles import reconstruct_v

        wx = grid.ddx(w)
        v = reconstruct_v(grid, w)
        out = -(1.0 - e) * wx - v * e
        if not linear:
            out -= grid.dealias(grid.dealias(w) * grid.dealias(wx))
            out -= grid.dealias(grid.dealias(v) * grid.dealias(grid.ddy(w)))
        return _guard("transport", out), float(np.max(np.abs(1.0 - e + w)))

    n0, speed = explicit(u)
    _check_cfl(grid, speed, dt)
    base = u + 0.5 * dt * (op @ u)
    u1 = _solve(lu, base + dt * n0)
    n1, _ = explicit(u1)
    u_new = _solve(lu, base + 0.5 * dt * (n0 + n1))
    u_new[0] = 0.0
    u_new[-1] = 0.0
    return u_new


def boundary_residual(state: State) -> float:
    """Max |(g_y - g)(y=0)| of ``state``."""
    return float(np.max(np.abs(robin_residual(state.grid, state.g))))
