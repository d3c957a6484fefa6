"""Decoherence as multiplicative damping of the fringe harmonics.

A channel is an event rate Gamma(t) on [-T, T] together with the
characteristic function kappa(s) of the momentum kick per event.  The l-th
fringe harmonic picks up

    R_l = exp{ -int_{-T}^{T} dt Gamma(t) [1 - kappa(l d (T - |t|) / T_T)] }.

Continuous spontaneous localization acts like such a channel with a
constant rate (m / u)^2 lambda and a Gaussian kernel of width r_c.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

from ._validation import check_int, check_nonnegative, check_positive
from .core import AMU, C, HBAR, KB, talbot_time
from .errors import AccuracyError, DomainError
from .specialfn import erf, sinc

QUAD_RTOL = 1e-12


@dataclass(frozen=True)
class DecoherenceChannel:
    """Event rate plus momentum-kick characteristic function.

    Parameters
    ----------
    rate_fn : callable
        ``Gamma(t)`` in 1/s for t in [-T, T]; must be >= 0.
    kernel : callable
        ``kappa(s)`` for a path separation s in metres, with kappa(0) = 1.
    label : str
    loss_fn : callable, optional
        ``1 - kappa(s)`` evaluated without cancellation; derived from
        ``kernel`` when absent.
    constant_rate : float, optional
        Set when Gamma is constant, which lets the reduction integral use the
        symmetric half-interval only.
    """

    rate_fn: Callable
    kernel: Callable
    label: str = "channel"
    loss_fn: Optional[Callable] = None
    constant_rate: Optional[float] = None
    meta: dict = field(default_factory=dict, compare=False)

    @classmethod
    def constant(cls, rate, kernel, label="channel", loss_fn=None, **meta):
        rate = float(check_nonnegative(rate, "rate"))
        return cls(lambda t: rate, kernel, label, loss_fn, rate, dict(meta))

    def loss(self, s):
        if self.loss_fn is not None:
            return self.loss_fn(s)
        return 1.0 - np.real(self.kernel(s))

    def scaled(self, factor):
        """Same kernel with the rate multiplied by ``factor``."""
        rate_fn = self.rate_fn
        const = None if self.constant_rate is None else self.constant_rate * factor
        return DecoherenceChannel(
            lambda t: factor * rate_fn(t), self.kernel, self.label, self.loss_fn, const, dict(self.meta)
        )


@dataclass(frozen=True)
class CslParams:
    """CSL rate ``lambda_csl`` (1/s) and localization length ``r_c`` (m)."""

    lambda_csl: float
    r_c: float = 100e-9

    def __post_init__(self):
        check_positive(self.lambda_csl, "lambda_csl")
        check_positive(self.r_c, "r_c")


def _quad(func, a, b):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(func, a, b, epsabs=0.0, epsrel=QUAD_RTOL, limit=400)
        except integrate.IntegrationWarning as exc:
            raise AccuracyError(f"decoherence quadrature did not converge: {exc}") from exc
    if not math.isfinite(val) or err > 1e-9 * abs(val) + 1e-300:
        raise AccuracyError(f"decoherence quadrature error {err:.2e} too large for value {val:.6e}")
    return val


def decoherence_exponent(channel: DecoherenceChannel, n, mass, period, T):
    """The integral in the exponent of the reduction factor (>= 0)."""
    n = abs(check_int(n, "n"))
    T = float(check_positive(T, "T"))
    if n == 0:
        return 0.0
    tt = talbot_time(mass, period)
    scale = n * period / tt

    def integrand(t):
        return channel.rate_fn(t) * float(channel.loss(scale * (T - abs(t))))

    if channel.constant_rate is not None:
        if channel.constant_rate == 0:
            return 0.0
        return 2.0 * _quad(integrand, 0.0, T)
    return _quad(integrand, -T, 0.0) + _quad(integrand, 0.0, T)


def reduction_factor(channel: DecoherenceChannel, n, mass, period, T):
    """Damping factor R_n in (0, 1] of the n-th fringe harmonic."""
    return math.exp(-decoherence_exponent(channel, n, mass, period, T))


def apply_channels(signal, channels: Sequence[DecoherenceChannel], mass=None, T=None):
    """Damp every harmonic of ``signal`` by the product of channel factors.

    Factors are multiplied in sorted order so that the result does not
    depend on the order of ``channels``.
    """
    if not channels:
        return signal
    mass = signal.mass if mass is None else mass
    T = signal.time if T is None else T
    if mass is None or T is None:
        raise DomainError("applying decoherence needs the particle mass and separation time")
    amps = np.array(signal.amplitudes)
    for k, ell in enumerate(range(-signal.order, signal.order + 1)):
        if ell == 0:
            continue
        exps = sorted(decoherence_exponent(ch, abs(ell), mass, signal.period, T) for ch in channels)
        amps[k] = amps[k] * math.exp(-math.fsum(exps))
    return signal.with_amplitudes(amps)


# ---------------------------------------------------------------------------
# kernels


def gaussian_kernel(width):
    """kappa(s) = exp(-s^2 / (2 width^2))."""
    w = float(check_positive(width, "width"))

    def kernel(s):
        return np.exp(-0.5 * (np.asarray(s) / w) ** 2)

    def loss(s):
        return -np.expm1(-0.5 * (np.asarray(s) / w) ** 2)

    return kernel, loss


def resolving_kernel(s):
    """Every event fully reveals the path: kappa = 0 away from s = 0."""
    return np.where(np.asarray(s) == 0, 1.0, 0.0)


# ---------------------------------------------------------------------------
# thermal emission

OMEGA_GRID_POINTS = 4001


def _omega_grid(T_int):
    w0 = KB * T_int / HBAR
    return np.geomspace(w0 / 100, 100 * w0, OMEGA_GRID_POINTS)


def thermal_emission_rate(sigma_abs_fn, T_int):
    """Total emission rate and recoil kernel of a hot particle.

    The spectral rate ``(omega / pi c)^2 sigma(omega) exp(-hbar omega / kT)``
    is integrated on a logarithmic frequency grid spanning four decades
    around ``k T / hbar``.

    Returns
    -------
    rate : float
        Total emission rate in 1/s.
    kernel : callable
        ``kappa(s)``, the isotropic-recoil characteristic function.
    """
    T_int = float(check_positive(T_int, "T_int"))
    omega = _omega_grid(T_int)
    sigma = np.asarray(sigma_abs_fn(omega), dtype=float) * np.ones_like(omega)
    if np.any(sigma < 0) or not np.all(np.isfinite(sigma)):
        raise DomainError("absorption cross-section must be finite and >= 0")
    spectral = (omega / (np.pi * C)) ** 2 * sigma * np.exp(-HBAR * omega / (KB * T_int))
    weight = spectral * omega  # d omega = omega d(ln omega)
    peak = weight.max() if weight.size else 0.0
    if peak > 0 and weight[-1] > 1e-6 * peak:
        raise DomainError("emission spectrum does not decay inside the integration window")
    log_w = np.log(omega)
    rate = float(integrate.simpson(weight, x=log_w))
    if rate <= 0:
        return 0.0, lambda s: np.ones_like(np.asarray(s, dtype=float))

    def kernel(s):
        s = np.asarray(s, dtype=float)
        vals = integrate.simpson(weight * sinc(np.multiply.outer(s, omega) / C), x=log_w, axis=-1)
        return vals / rate

    return rate, kernel


def thermal_emission_channel(sigma_abs_fn, T_int):
    rate, kernel = thermal_emission_rate(sigma_abs_fn, T_int)
    return DecoherenceChannel.constant(rate, kernel, "thermal emission", T_int=T_int)


# ---------------------------------------------------------------------------
# collisions

N2_MASS_U = 28.0134


def collision_rate(pressure, sigma_eff, gas_mass_u=N2_MASS_U, gas_temperature=293.15, beam_velocity=0.0):
    """Kinetic-theory collision rate ``n_gas v_rel sigma_eff``.

    ``v_rel`` combines the mean thermal gas speed with the beam velocity in
    quadrature.
    """
    p = float(check_nonnegative(pressure, "pressure"))
    s = float(check_nonnegative(sigma_eff, "sigma_eff"))
    Tg = float(check_positive(gas_temperature, "gas_temperature"))
    m_gas = float(check_positive(gas_mass_u, "gas_mass_u")) * AMU
    n_gas = p / (KB * Tg)
    v_mean = math.sqrt(8 * KB * Tg / (math.pi * m_gas))
    v_rel = math.hypot(v_mean, float(beam_velocity))
    return n_gas * v_rel * s


def collisional_channel(
    pressure,
    sigma_eff,
    gas_mass_u=N2_MASS_U,
    gas_temperature=293.15,
    beam_velocity=0.0,
    kernel_width=None,
):
    """Rest-gas scattering channel.

    The default kernel is fully resolving, so each collision removes the
    particle from the interfering ensemble.  ``kernel_width`` (metres)
    switches to a Gaussian kernel for sensitivity studies.
    """
    rate = collision_rate(pressure, sigma_eff, gas_mass_u, gas_temperature, beam_velocity)
    if kernel_width is None:
        return DecoherenceChannel.constant(
            rate, resolving_kernel, "collisions", lambda s: 1.0 - resolving_kernel(s), pressure=pressure
        )
    kernel, loss = gaussian_kernel(kernel_width)
    return DecoherenceChannel.constant(rate, kernel, "collisions", loss, pressure=pressure)


# ---------------------------------------------------------------------------
# CSL


def _csl_bracket(x):
    """1 - sqrt(pi) erf(x) / (2 x), free of cancellation for small x."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = x < 0.5
    if np.any(small):
        xs = x[small]
        x2 = xs * xs
        # sum_k>=1 (-1)^(k+1) x^(2k) / (k! (2k+1))
        term = x2.copy()
        total = term / 3
        for k in range(2, 30):
            term = -term * x2 / k
            total = total + term / (2 * k + 1)
        out[small] = total
    big = ~small
    if np.any(big):
        xb = x[big]
        out[big] = 1.0 - math.sqrt(math.pi) * erf(xb) / (2 * xb)
    return out


def csl_rate(params: CslParams, mass):
    return (float(mass) / AMU) ** 2 * params.lambda_csl


def csl_exponent(params: CslParams, mass, period, T, talbot=None, n=1):
    """Exponent ``-ln R_n`` of the closed-form CSL damping factor.

    Stays finite for heavy particles where the factor itself underflows.
    """
    m = float(check_positive(mass, "mass"))
    d = float(check_positive(period, "period"))
    T = float(check_positive(T, "T"))
    n = abs(check_int(n, "n"))
    if n == 0:
        return 0.0
    tt = talbot_time(m, d) if talbot is None else float(check_positive(talbot, "talbot"))
    x = n * d * T / (2 * params.r_c * tt)
    return 2 * csl_rate(params, m) * T * float(_csl_bracket(x))


def csl_visibility_factor(params: CslParams, mass, period, T, talbot=None, n=1):
    """Closed-form CSL damping of the n-th fringe harmonic.

    ``exp{-2 (m/u)^2 lambda T [1 - sqrt(pi) r_c T_T / (n d T) erf(n d T / 2 r_c T_T)]}``
    """
    return math.exp(-csl_exponent(params, mass, period, T, talbot, n))


def csl_as_channel(params: CslParams, mass) -> DecoherenceChannel:
    """CSL as a constant-rate channel with kernel exp(-s^2 / 4 r_c^2)."""
    kernel, loss = gaussian_kernel(math.sqrt(2) * params.r_c)
    return DecoherenceChannel.constant(csl_rate(params, mass), kernel, "CSL", loss)


CSL_NULL_LOSS = 0.05


def csl_exclusion_bound(observed, predicted, mass, period, T, talbot=None, r_c=100e-9, null_loss=CSL_NULL_LOSS):
    """Largest CSL rate compatible with an observed visibility.

    Solves ``observed = predicted * factor(lambda)``.  Ratios above
    ``1 - null_loss`` (no resolvable suppression) are clamped to that loss;
    ratios above 1 return ``inf`` because no rate can raise the contrast.
    """
    obs = float(observed)
    pred = float(check_positive(predicted, "predicted"))
    if not (obs > 0):
        raise DomainError(f"observed visibility must be > 0, got {observed}")
    ratio = obs / pred
    if ratio > 1:
        return math.inf
    ratio = min(ratio, 1.0 - null_loss)
    m = float(check_positive(mass, "mass"))
    d = float(check_positive(period, "period"))
    tt = talbot_time(m, d) if talbot is None else float(talbot)
    bracket = float(_csl_bracket(d * T / (2 * r_c * tt)))
    return -math.log(ratio) / (2 * (m / AMU) ** 2 * T * bracket)
