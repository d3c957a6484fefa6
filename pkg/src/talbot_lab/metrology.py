"""Quantum-assisted metrology on top of the fringe model.

Deflection and susceptibility, inertial phases, nanosphere polarizability
and the inverse problem of extracting (alpha_opt, sigma_abs) from a KDTLI
visibility-versus-laser-power curve.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from ._validation import as_float_array, check_nonnegative, check_positive, scalar_or_array
from .core import (
    C,
    EPS0,
    G_EARTH,
    H,
    KB,
    InterferometerConfig,
    MaterialMask,
    ParticleSpec,
    Scheme,
    talbot_time,
    velocity_quadrature,
)
from .errors import BoundaryWarning, ConfigurationError, DomainError, NonIdentifiableError
from .gratings import ionizing_talbot_closed
from .specialfn import bessel_i_complex, bessel_j, sinc


@dataclass(frozen=True)
class DeflectionField:
    """Electrode field: ``(E . grad) E_x`` in V^2/m^3, length s and drift l in m."""

    field_gradient_product: float
    electrode_length: float
    drift_distance: float

    def __post_init__(self):
        check_nonnegative(self.electrode_length, "electrode_length")
        check_nonnegative(self.drift_distance, "drift_distance")


def deflection_shift(chi, field: DeflectionField, mass, velocity):
    """Transverse beam shift ``chi (E.grad)E_x / (m v^2) * s (s/2 + l)``."""
    m = check_positive(mass, "mass")
    v = check_positive(velocity, "velocity")
    s, l = field.electrode_length, field.drift_distance
    return scalar_or_array(np.asarray(chi) * field.field_gradient_product / (m * v * v) * s * (s / 2 + l))


def susceptibility(alpha_stat, dipole_sq_mean, temperature):
    """Electric susceptibility ``alpha_stat + <d_x^2> / (k_B T)``."""
    T = check_positive(temperature, "temperature")
    d2 = check_nonnegative(dipole_sq_mean, "dipole_sq_mean")
    return scalar_or_array(np.asarray(alpha_stat, dtype=float) + d2 / (KB * T))


def coriolis_phase(s_normal, velocity, omega, T, period):
    """Rotation-induced fringe phase ``4 pi s.(v x Omega) T^2 / d``."""
    s = as_float_array(s_normal, "s_normal")
    if s.shape != (3,) or abs(np.linalg.norm(s) - 1) > 1e-9:
        raise DomainError("s_normal must be a unit 3-vector")
    v = as_float_array(velocity, "velocity")
    w = as_float_array(omega, "omega")
    d = float(check_positive(period, "period"))
    return float(4 * np.pi * s @ np.cross(v, w) * T * T / d)


def gravity_fall(total_time, g=G_EARTH):
    """Free-fall distance ``g t^2 / 2``."""
    t = check_nonnegative(total_time, "total_time")
    return scalar_or_array(0.5 * g * t * t)


def nanosphere_polarizability(radius, permittivity):
    """Clausius-Mossotti polarizability ``4 pi eps0 R^3 (eps - 1)/(eps + 2)``."""
    R = float(check_positive(radius, "radius"))
    eps = complex(permittivity)
    if eps == -2:
        raise DomainError("permittivity -2 sits on the Froehlich resonance pole")
    if math.isinf(abs(eps)):
        return complex(4 * math.pi * EPS0 * R**3)
    return 4 * math.pi * EPS0 * R**3 * (eps - 1) / (eps + 2)


# ---------------------------------------------------------------------------
# KDTLI power curve forward model


def _kdtli_geometry(config: InterferometerConfig, particle: ParticleSpec, n_points):
    if config.scheme is not Scheme.KDTLI:
        raise ConfigurationError("the power-curve model needs a KDTLI configuration")
    if config.waist_y is None or config.separation_length is None:
        raise ConfigurationError("the power-curve model needs waist_y and separation_length")
    if particle.velocity_dist is None:
        raise ConfigurationError("the power-curve model needs a velocity distribution")
    g1, _, g3 = config.gratings
    if not (isinstance(g1.kind, MaterialMask) and isinstance(g3.kind, MaterialMask)):
        raise ConfigurationError("KDTLI outer gratings must be material masks")
    v, w = velocity_quadrature(particle.velocity_dist, n_points)
    xi = config.separation_length / (v * talbot_time(particle.mass, config.period))
    return g1.kind.open_fraction, g3.kind.open_fraction, v, w, np.asarray(xi)


def kdtli_sin_visibility(f1, f3, phi0, xi, weights):
    """Velocity-averaged sinusoidal KDTLI visibility for a pure phase grating.

    ``2 |sinc(pi f1) sinc(pi f3) sum_v w_v J_2(phi0_v sin(pi xi_v))|``, with
    the velocity nodes on the last axis of ``phi0`` and ``xi``.
    """
    j2 = bessel_j(2, np.asarray(phi0) * np.sin(np.pi * np.asarray(xi)))
    return 2 * np.abs(sinc(np.pi * f1) * sinc(np.pi * f3) * np.sum(weights * j2, axis=-1))


def phase_per_watt(particle_alpha, waist_y, velocity):
    """KDTLI phi0 per watt of laser power."""
    return 4 * math.sqrt(2 * math.pi) * particle_alpha / (H * C * EPS0 * waist_y * velocity)


def photons_per_watt(sigma_abs, waist_y, velocity, wavelength):
    """KDTLI antinode photon number per watt of laser power."""
    return 4 * math.sqrt(2 * math.pi) * sigma_abs * wavelength / (math.pi * H * C * waist_y * velocity)


def kdtli_power_model(config, particle, powers, alpha, sigma=0.0, n_points=16):
    """Sinusoidal KDTLI visibility versus laser power.

    Absorption turns the middle grating into a depletion grating with
    ``n0 = 2 beta phi0``; with ``sigma = 0`` the pure phase-grating formula
    is evaluated directly.  ``alpha`` and ``sigma`` may be arrays of equal
    shape; the result then has shape ``alpha.shape + powers.shape``.
    """
    f1, f3, v, w, xi = _kdtli_geometry(config, particle, n_points)
    P = np.atleast_1d(check_nonnegative(powers, "powers"))
    alpha = np.asarray(alpha, dtype=float)
    sigma = np.broadcast_to(np.asarray(sigma, dtype=float), alpha.shape)
    a = alpha[..., np.newaxis, np.newaxis]
    phi0 = a * P[:, np.newaxis] * phase_per_watt(1.0, config.waist_y, v)
    if not np.any(sigma):
        return kdtli_sin_visibility(f1, f3, phi0, xi, w)
    s = sigma[..., np.newaxis, np.newaxis]
    n0 = s * P[:, np.newaxis] * photons_per_watt(1.0, config.waist_y, v, config.wavelength)
    b2 = ionizing_talbot_closed(2, xi, phi0, n0)
    b0 = np.exp(-n0 / 2) * bessel_i_complex(0, n0 / 2).real
    num = np.abs(sinc(np.pi * f1) * sinc(np.pi * f3) * np.sum(w * b2, axis=-1))
    return 2 * num / np.sum(w * b0, axis=-1)


# ---------------------------------------------------------------------------
# fitting

GRID_SIZE = 64
SIMPLEX_MAXITER = 500
SIMPLEX_TOL = 1e-10
HESSIAN_STEP = 1e-4


@dataclass(frozen=True)
class FitResult:
    """Least-squares estimate of the grating response of a particle.

    Half-widths are one-sigma values from the local quadratic expansion of
    the residual sum of squares and are approximate.
    """

    alpha_opt: float
    sigma_abs: float
    alpha_halfwidth: float
    sigma_halfwidth: float
    residual_norm: float
    iterations: int
    at_boundary: bool = False
    fit_sigma: bool = False


def _parse_box(search_box, fit_sigma):
    if isinstance(search_box, dict):
        a_box = search_box.get("alpha")
        s_box = search_box.get("sigma")
    else:
        a_box, s_box = (tuple(search_box) + (None,))[:2]
    if a_box is None:
        raise DomainError("search_box needs alpha bounds")
    a_lo, a_hi = (float(x) for x in a_box)
    if not (math.isfinite(a_lo) and math.isfinite(a_hi) and 0 < a_lo < a_hi):
        raise DomainError("alpha bounds must be positive, finite and increasing")
    if fit_sigma is None:
        fit_sigma = s_box is not None
    if fit_sigma:
        if s_box is None:
            raise DomainError("fitting sigma needs sigma bounds")
        s_lo, s_hi = (float(x) for x in s_box)
        if not (math.isfinite(s_lo) and math.isfinite(s_hi) and 0 <= s_lo < s_hi):
            raise DomainError("sigma bounds must be finite, non-negative and increasing")
        return np.array([[a_lo, a_hi], [s_lo, s_hi]]), True
    return np.array([[a_lo, a_hi]]), False


def fit_visibility_curve(data, config, particle, search_box, fit_sigma=None, n_points=16) -> FitResult:
    """Fit (alpha_opt, sigma_abs) to measured visibility-vs-power pairs.

    A 64-point (per dimension) grid scan over ``search_box`` seeds a
    Nelder-Mead refinement in normalized box coordinates.  The procedure
    contains no randomness, so identical inputs give identical results.

    Parameters
    ----------
    data : array_like, shape (n, 2)
        Rows of (laser power [W], measured sinusoidal visibility), n >= 5.
    config : InterferometerConfig
        KDTLI geometry with ``waist_y`` and ``separation_length``.
    particle : ParticleSpec
        Supplies mass and velocity distribution.
    search_box : dict or tuple
        ``{"alpha": (lo, hi), "sigma": (lo, hi)}``; without sigma bounds the
        cross-section is held at zero.
    fit_sigma : bool, optional
        Override whether sigma is a free parameter.

    Raises
    ------
    NonIdentifiableError
        If the data are all zero or the model does not vary over the box.
    """
    data = as_float_array(data, "data")
    if data.ndim != 2 or data.shape[1] != 2:
        raise DomainError("data must have shape (n, 2)")
    if data.shape[0] < 5:
        raise DomainError("at least five data points are required")
    powers, measured = data[:, 0], data[:, 1]
    if not np.any(measured):
        raise NonIdentifiableError("all measured visibilities are zero")
    box, fit_sigma = _parse_box(search_box, fit_sigma)
    lo, span = box[:, 0], box[:, 1] - box[:, 0]

    def to_params(u):
        return lo + span * np.asarray(u)

    def model(params):
        params = np.asarray(params, dtype=float)
        alpha = params[..., 0]
        sigma = params[..., 1] if fit_sigma else 0.0
        return kdtli_power_model(config, particle, powers, alpha, sigma, n_points)

    def rss(u):
        return float(np.sum((model(to_params(np.clip(u, 0.0, 1.0))) - measured) ** 2))

    axis = np.linspace(0.0, 1.0, GRID_SIZE)
    if fit_sigma:
        grid = np.stack(np.meshgrid(axis, axis, indexing="ij"), axis=-1).reshape(-1, 2)
    else:
        grid = axis[:, np.newaxis]
    curves = np.concatenate([model(to_params(chunk)) for chunk in np.array_split(grid, max(1, grid.shape[0] // 256))])
    if np.all(np.ptp(curves, axis=0) < 1e-14):
        raise NonIdentifiableError("model visibility does not depend on the fit parameters")
    costs = np.sum((curves - measured) ** 2, axis=1)
    start = grid[int(np.argmin(costs))]

    dim = grid.shape[1]
    simplex = [start]
    for k in range(dim):
        vertex = start.copy()
        vertex[k] += 1.0 / (GRID_SIZE - 1) if vertex[k] < 0.5 else -1.0 / (GRID_SIZE - 1)
        simplex.append(vertex)
    res = minimize(
        rss,
        start,
        method="Nelder-Mead",
        bounds=[(0.0, 1.0)] * dim,
        options={
            "maxiter": SIMPLEX_MAXITER,
            "xatol": SIMPLEX_TOL,
            "fatol": SIMPLEX_TOL * max(float(measured @ measured), 1e-300),
            "initial_simplex": np.array(simplex),
        },
    )
    u_best = np.clip(res.x, 0.0, 1.0)
    if rss(u_best) > costs.min():
        u_best = start
    best = to_params(u_best)
    at_boundary = bool(np.any((u_best < 1e-6) | (u_best > 1 - 1e-6)))
    if at_boundary:
        warnings.warn("fit optimum lies on the search-box boundary", BoundaryWarning, stacklevel=2)

    halfwidths = _halfwidths(lambda p: float(np.sum((model(p) - measured) ** 2)), best, data.shape[0])
    resid = float(np.sqrt(np.sum((model(best) - measured) ** 2)))
    return FitResult(
        alpha_opt=float(best[0]),
        sigma_abs=float(best[1]) if fit_sigma else 0.0,
        alpha_halfwidth=float(halfwidths[0]),
        sigma_halfwidth=float(halfwidths[1]) if fit_sigma else 0.0,
        residual_norm=resid,
        iterations=int(res.nit),
        at_boundary=at_boundary,
        fit_sigma=fit_sigma,
    )


def _halfwidths(cost, best, n_data):
    """One-sigma half-widths from a central-difference Hessian of the RSS."""
    dim = best.size
    steps = HESSIAN_STEP * np.where(best != 0, np.abs(best), 1.0)
    hess = np.empty((dim, dim))
    for i in range(dim):
        for j in range(i, dim):
            ei = np.eye(dim)[i] * steps[i]
            ej = np.eye(dim)[j] * steps[j]
            val = (cost(best + ei + ej) - cost(best + ei - ej) - cost(best - ei + ej) + cost(best - ei - ej)) / (
                4 * steps[i] * steps[j]
            )
            hess[i, j] = hess[j, i] = val
    dof = max(n_data - dim, 1)
    s2 = cost(best) / dof
    try:
        cov = 2 * s2 * np.linalg.inv(hess)
    except np.linalg.LinAlgError:
        return np.full(dim, np.nan)
    diag = np.diag(cov)
    return np.sqrt(np.where(diag >= 0, diag, np.nan))
