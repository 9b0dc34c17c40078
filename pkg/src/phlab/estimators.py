"""scikit-learn style wrappers around the functional core.

Each estimator takes stacks of fields shaped ``(n_samples, ny, nx)`` (a
single ``(ny, nx)`` field is promoted). ``fit`` builds and stores the grid
(``grid_``) and checks the input against it; the heavy lifting stays in
:mod:`phlab.norms` and :mod:`phlab.dynamics`.
"""
from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_positive, check_stack
from .dynamics import State, run_simulation
from .grid import Grid, make_grid
from .norms import NormParams, estimate_radius_from_spectrum, norms_derivative_route, norms_weight_route
from .profiles import ModelParams

__all__ = ["AnalyticNormTransformer", "SpectralRadiusEstimator", "GoodUnknownSimulator"]

_NORM_FEATURES = ("normX", "normY", "normZ", "normD", "boundary_trace")


class _GridMixin:
    def _build_grid(self) -> Grid:
        return make_grid(self.nx, self.lx, self.ny, self.ly, self.stretch)

    def _fit_grid(self, X):
        self.grid_ = self._build_grid()
        check_stack(X, self.grid_)
        self.n_features_in_ = self.grid_.ny * self.grid_.nx
        return self


class AnalyticNormTransformer(_GridMixin, TransformerMixin, BaseEstimator):
    """Map fields to their analytic norms ``(X, Y, Z, D, trace)``.

    Parameters
    ----------
    nx, lx, ny, ly, stretch : grid parameters, as for :func:`phlab.grid.make_grid`.
    r, tau, alpha : norm parameters.
    route : {"weight", "derivative"}
        Weight-function route (fast) or the literal derivative series.
    band : int or None
        Keep only tangential modes below this index.
    """

    def __init__(self, nx=64, lx=2 * math.pi, ny=256, ly=20.0, stretch=0.0, r=2.0, tau=1.0, alpha=0.3,
                 route="weight", band=None):
        self.nx = nx
        self.lx = lx
        self.ny = ny
        self.ly = ly
        self.stretch = stretch
        self.r = r
        self.tau = tau
        self.alpha = alpha
        self.route = route
        self.band = band

    def fit(self, X, y=None):
        if self.route not in ("weight", "derivative"):
            raise ValueError(f"route must be 'weight' or 'derivative', got {self.route!r}")
        self.norm_params_ = NormParams(r=self.r, tau=self.tau, alpha=self.alpha, band=self.band)
        return self._fit_grid(X)

    def transform(self, X):
        check_is_fitted(self, "grid_")
        stack = check_stack(X, self.grid_)
        fn = norms_weight_route if self.route == "weight" else norms_derivative_route
        rows = []
        for g in stack:
            rep = fn(self.grid_, g, self.norm_params_)
            rows.append([rep.as_dict()[k] for k in _NORM_FEATURES])
        return np.asarray(rows, dtype=float)

    def get_feature_names_out(self, input_features=None):
        return np.asarray(_NORM_FEATURES, dtype=object)


class SpectralRadiusEstimator(_GridMixin, BaseEstimator):
    """Predict the analyticity radius of each field from its tangential spectrum."""

    def __init__(self, nx=64, lx=2 * math.pi, ny=256, ly=20.0, stretch=0.0, k_window=None, floor=1e-13):
        self.nx = nx
        self.lx = lx
        self.ny = ny
        self.ly = ly
        self.stretch = stretch
        self.k_window = k_window
        self.floor = floor

    def fit(self, X, y=None):
        return self._fit_grid(X)

    def predict(self, X):
        check_is_fitted(self, "grid_")
        stack = check_stack(X, self.grid_)
        return np.array([estimate_radius_from_spectrum(self.grid_, g, self.k_window, self.floor) for g in stack])


class GoodUnknownSimulator(_GridMixin, TransformerMixin, BaseEstimator):
    """Evolve initial good-unknown fields to ``t_end``.

    ``transform`` returns the evolved fields, ``predict`` the fitted decay rate
    of ``||e^{alpha y} g||`` between ``t_end / 2`` and ``t_end``.
    """

    def __init__(self, nx=64, lx=2 * math.pi, ny=256, ly=20.0, stretch=0.0, alpha=0.3, dt=1e-3, t_end=1.0,
                 linear=False, damping_on=True, transport_on=True, diffusion_on=True):
        self.nx = nx
        self.lx = lx
        self.ny = ny
        self.ly = ly
        self.stretch = stretch
        self.alpha = alpha
        self.dt = dt
        self.t_end = t_end
        self.linear = linear
        self.damping_on = damping_on
        self.transport_on = transport_on
        self.diffusion_on = diffusion_on

    def fit(self, X, y=None):
        check_positive(self.dt, "dt")
        check_positive(self.t_end, "t_end")
        self.params_ = ModelParams(alpha=self.alpha, damping_on=self.damping_on,
                                   transport_on=self.transport_on, diffusion_on=self.diffusion_on)
        return self._fit_grid(X)

    def _run(self, g0, observer=None, every=1):
        state = State(g=g0, t=0.0, params=self.params_, grid=self.grid_)
        return run_simulation(state, self.t_end, self.dt, observer=observer, every=every, linear=self.linear).g

    def transform(self, X):
        check_is_fitted(self, "grid_")
        return np.stack([self._run(g) for g in check_stack(X, self.grid_)])

    def predict(self, X):
        check_is_fitted(self, "grid_")
        rates = []
        n_steps = max(1, math.ceil(self.t_end / self.dt - 1e-9))
        every = max(1, n_steps // 40)
        for g in check_stack(X, self.grid_):
            samples = []
            self._run(g, lambda s, _t: samples.append((s.t, self.grid_.weighted_l2(s.g, self.alpha))), every)
            arr = np.array([row for row in samples if row[0] >= 0.5 * self.t_end])
            if len(arr) < 2 or np.any(arr[:, 1] <= 0):
                rates.append(math.nan)
                continue
            rates.append(float(np.polyfit(arr[:, 0], -np.log(arr[:, 1]), 1)[0]))
        return np.asarray(rates)
