"""scikit-learn style wrappers around the fitting routines.

``PolarizabilityEstimator`` learns (alpha_opt, sigma_abs) from a KDTLI
visibility-versus-power curve; ``SineFringeEstimator`` extracts offset,
amplitude and phase of a scanned fringe by linear least squares.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted, check_X_y, validate_data

from .errors import DegenerateSignalError
from .metrology import fit_visibility_curve, kdtli_power_model


def _as_column(X):
    X = np.asarray(X, dtype=float)
    return X.reshape(-1, 1) if X.ndim == 1 else X


class PolarizabilityEstimator(RegressorMixin, BaseEstimator):
    """Fit optical polarizability (and optionally absorption) to KDTLI data.

    Parameters
    ----------
    config : InterferometerConfig
        KDTLI geometry including ``waist_y`` and ``separation_length``.
    particle : ParticleSpec
        Mass and velocity distribution of the species.
    alpha_bounds : tuple of float
        Search interval for alpha_opt in C m^2/V.
    sigma_bounds : tuple of float or None
        Search interval for sigma_abs in m^2; None holds it at zero.
    n_points : int
        Velocity quadrature nodes.

    Attributes
    ----------
    alpha_ : float
    sigma_abs_ : float
    result_ : FitResult
    """

    def __init__(self, config=None, particle=None, alpha_bounds=(1e-40, 1e-36), sigma_bounds=None, n_points=16):
        self.config = config
        self.particle = particle
        self.alpha_bounds = alpha_bounds
        self.sigma_bounds = sigma_bounds
        self.n_points = n_points

    def fit(self, X, y):
        X, y = check_X_y(_as_column(X), y, y_numeric=True)
        self.n_features_in_ = X.shape[1]
        box = {"alpha": self.alpha_bounds}
        if self.sigma_bounds is not None:
            box["sigma"] = self.sigma_bounds
        self.result_ = fit_visibility_curve(np.c_[X[:, 0], y], self.config, self.particle, box, n_points=self.n_points)
        self.alpha_ = self.result_.alpha_opt
        self.sigma_abs_ = self.result_.sigma_abs
        return self

    def predict(self, X):
        check_is_fitted(self, "result_")
        X = _as_column(X)
        return kdtli_power_model(self.config, self.particle, X[:, 0], self.alpha_, self.sigma_abs_, self.n_points)


class SineFringeEstimator(RegressorMixin, BaseEstimator):
    """Least-squares sine fit ``c + a cos(2 pi x / d) + b sin(2 pi x / d)``.

    Parameters
    ----------
    period : float
        Fringe period in the units of X.

    Attributes
    ----------
    offset_, amplitude_, phase_, visibility_ : float
    """

    def __init__(self, period=1.0):
        self.period = period

    def _design(self, x):
        k = 2 * np.pi / self.period
        return np.column_stack([np.ones_like(x), np.cos(k * x), np.sin(k * x)])

    def fit(self, X, y):
        X, y = validate_data(self, _as_column(X), y, y_numeric=True)
        coef, *_ = np.linalg.lstsq(self._design(X[:, 0]), y, rcond=None)
        self.coef_ = coef
        self.offset_ = float(coef[0])
        self.amplitude_ = float(np.hypot(coef[1], coef[2]))
        # S = c + A cos(k x + phase)
        self.phase_ = float(np.arctan2(-coef[2], coef[1]))
        if self.offset_ <= 0:
            raise DegenerateSignalError("fitted fringe offset must be > 0")
        self.visibility_ = self.amplitude_ / self.offset_
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = validate_data(self, _as_column(X), reset=False)
        return self._design(X[:, 0]) @ self.coef_
