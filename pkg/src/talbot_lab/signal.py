"""Three-grating fringe signals and visibilities for TL, KDTLI and OTIMA.

The detected transmission behind G3 as a function of its lateral shift
``x_s`` is a Fourier series

    S(x_s) = sum_l S_l exp(2 pi i l x_s / d),
    S_l = A1_{-l} A3_{-l} B2_{2l}(l T / T_T) exp(-2 pi i l a T^2 / d).

Grating displacements, the tilt-induced G2 shift and gravity are all pure
phases on S_l; velocity spread and pulse-timing imbalance reduce |S_l|.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from ._validation import as_float_array, check_int, check_nonnegative, check_positive, scalar_or_array
from .core import (
    GratingSpec,
    InterferometerConfig,
    ParticleSpec,
    Scheme,
    talbot_time,
    velocity_quadrature,
)
from .errors import ConfigurationError, DegenerateSignalError, DomainError
from .gratings import (
    _entire_coefficient,
    kdtli_phi0,
    otima_pulse_params,
    talbot_coeff,
)
from .specialfn import bessel_i_complex, sinc

VISIBILITY_GRID = 1024


@dataclass(frozen=True)
class FringeSignal:
    """Fourier amplitudes ``S_l``, ``l = -order .. order``, of a fringe scan.

    ``mass`` and ``time`` record the particle mass and the grating
    separation time the amplitudes were computed for (None for
    velocity-averaged signals, where T differs between nodes).
    """

    period: float
    amplitudes: np.ndarray
    scheme: Scheme
    mass: float | None = None
    time: float | None = None

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.ndim != 1 or amps.size % 2 == 0:
            raise DomainError("amplitudes must be a 1-d array of odd length")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def order(self):
        return (self.amplitudes.size - 1) // 2

    @property
    def offset(self):
        return float(self.amplitudes[self.order].real)

    def harmonic(self, ell):
        ell = int(ell)
        if abs(ell) > self.order:
            return 0j
        return complex(self.amplitudes[ell + self.order])

    def with_amplitudes(self, amplitudes):
        return FringeSignal(self.period, amplitudes, self.scheme, self.mass, self.time)


@dataclass(frozen=True)
class VisibilityResult:
    v_full: float
    v_sin: float
    phase: float


def evaluate(signal: FringeSignal, x_s):
    """Transmitted fraction at G3 shift ``x_s`` (metres)."""
    x = np.asarray(x_s, dtype=float)
    ell = np.arange(-signal.order, signal.order + 1)
    phases = np.exp(2j * np.pi * np.multiply.outer(x, ell) / signal.period)
    return scalar_or_array((phases @ signal.amplitudes).real)


def _refine_extremum(signal, x0, sign):
    """Polish a grid extremum; ``sign`` is +1 for a maximum, -1 for a minimum."""
    d = signal.period
    step = d / VISIBILITY_GRID
    res = minimize_scalar(
        lambda x: -sign * evaluate(signal, x),
        bounds=(x0 - step, x0 + step),
        method="bounded",
        options={"xatol": 1e-12 * d},
    )
    return sign * max(-res.fun, sign * evaluate(signal, x0))


def visibility(signal: FringeSignal) -> VisibilityResult:
    """Full (max/min) and sinusoidal visibility of a fringe signal.

    Raises
    ------
    DegenerateSignalError
        If the offset S_0 vanishes.
    """
    s0 = signal.offset
    if not (s0 > 0):
        raise DegenerateSignalError(f"fringe offset must be > 0, got {s0}")
    s1 = signal.harmonic(1)
    v_sin = 2 * abs(s1) / s0
    if signal.order == 0 or not np.any(signal.amplitudes[signal.order + 1 :]):
        return VisibilityResult(0.0, v_sin, 0.0)
    xs = np.arange(VISIBILITY_GRID) * signal.period / VISIBILITY_GRID
    vals = evaluate(signal, xs)
    smax = _refine_extremum(signal, xs[np.argmax(vals)], 1.0)
    smin = _refine_extremum(signal, xs[np.argmin(vals)], -1.0)
    v_full = (smax - smin) / (smax + smin) if smax + smin > 0 else 1.0
    return VisibilityResult(float(min(max(v_full, 0.0), 1.0)), v_sin, float(np.angle(s1)))


# ---------------------------------------------------------------------------
# geometry helpers


def tilt_scan_shift(height, tilt):
    """Effective G2 displacement ``h (1 - cos theta)`` of a tilted beam."""
    h = check_nonnegative(height, "height")
    th = check_nonnegative(tilt, "tilt")
    return scalar_or_array(2 * h * np.sin(th / 2) ** 2)


def total_fringe_phase(dx1, dx2, dx3, period):
    """Fringe phase ``(2 pi / d)(dx1 - 2 dx2 + dx3)`` from grating shifts."""
    d = check_positive(period, "period")
    return scalar_or_array(2 * np.pi / d * (np.asarray(dx1) - 2 * np.asarray(dx2) + np.asarray(dx3)))


def _imbalance_argument(divergence, velocity, period, delta_t):
    return 2 * np.pi * velocity * np.tan(divergence) * delta_t / period


def timing_imbalance_envelope(divergence, velocity, period, delta_t):
    """Contrast left after averaging the imbalance phase over beam angles.

    Transverse angles uniform in [-alpha, alpha] turn the phase
    ``2 pi v tan(a) dT / d`` into ``sinc(2 pi v tan(alpha) dT / d)``; its
    first zero sits at ``dT = d / (2 v tan alpha)``.
    """
    a = check_nonnegative(divergence, "divergence")
    v = check_positive(velocity, "velocity")
    d = check_positive(period, "period")
    dt = as_float_array(delta_t, "delta_t")
    return scalar_or_array(np.abs(sinc(_imbalance_argument(a, v, d, dt))))


def fit_divergence(delta_t, contrast, velocity, period, bounds=(1e-6, 0.1)):
    """Beam divergence from a contrast-vs-imbalance scan.

    Fits ``c0 |sinc(2 pi v tan(alpha) dT / d)|`` by least squares with the
    amplitude ``c0`` eliminated analytically.

    Returns
    -------
    alpha : float
        Half-opening angle in rad.
    c0 : float
        Contrast at zero imbalance.
    """
    dt = as_float_array(delta_t, "delta_t")
    y = as_float_array(contrast, "contrast")
    if dt.shape != y.shape or dt.size < 3:
        raise DomainError("need at least three matching (delta_t, contrast) samples")

    def profile(alpha):
        return np.abs(sinc(_imbalance_argument(alpha, velocity, period, dt)))

    def cost(log_alpha):
        f = profile(math.exp(log_alpha))
        c0 = f @ y / max(f @ f, 1e-300)
        return float(np.sum((y - c0 * f) ** 2))

    lo, hi = math.log(bounds[0]), math.log(bounds[1])
    grid = np.linspace(lo, hi, 400)
    costs = [cost(g) for g in grid]
    k = int(np.argmin(costs))
    res = minimize_scalar(
        cost, bounds=(grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]), method="bounded", options={"xatol": 1e-12}
    )
    alpha = math.exp(res.x)
    f = profile(alpha)
    return alpha, float(f @ y / (f @ f))


# ---------------------------------------------------------------------------
# generic three-grating pipeline


def _particle_mass(particle):
    if isinstance(particle, ParticleSpec):
        return particle.mass
    return float(check_positive(particle, "mass"))


def _middle_grating(config: InterferometerConfig, particle, velocity):
    g2 = config.gratings[1]
    if config.scheme is Scheme.KDTLI and config.laser_power is not None:
        if not isinstance(particle, ParticleSpec):
            raise ConfigurationError("a laser-defined KDTLI grating needs a ParticleSpec, not a bare mass")
        if config.waist_y is None or velocity is None:
            raise ConfigurationError("laser-defined KDTLI grating needs waist_y and a velocity")
        phi0 = kdtli_phi0(particle, config.laser_power, config.waist_y, velocity)
        return GratingSpec.phase(g2.period, phi0)
    return g2


def fringe_phase_offset(config: InterferometerConfig, time):
    """Equivalent G3 displacement collecting shifts, tilt and free fall."""
    dx1, dx2, dx3 = config.grating_shifts
    shift = dx1 - 2 * (dx2 + tilt_scan_shift(config.tilt_height, config.tilt_angle)) + dx3
    return shift - config.acceleration * time**2


def _harmonic_orders(config, order):
    order = config.fourier_order if order is None else check_int(order, "order", minimum=1)
    return np.arange(-order, order + 1)


def tl_fringe(
    config: InterferometerConfig,
    particle,
    velocity=None,
    mode: str = "quantum",
    channels: Sequence = (),
    order=None,
) -> FringeSignal:
    """Fringe amplitudes for a single longitudinal velocity.

    Parameters
    ----------
    config : InterferometerConfig
    particle : ParticleSpec or float
        Particle, or its mass in kg when no laser-derived grating needs it.
    velocity : float, optional
        Longitudinal velocity; required for stationary setups, for a
        laser-defined KDTLI grating and for the timing-imbalance envelope.
    mode : {'quantum', 'classical'}
        Classical mode swaps the G2 Talbot coefficients for their ballistic
        counterparts.
    channels : sequence of DecoherenceChannel
        Applied to every harmonic.
    """
    mass = _particle_mass(particle)
    if config.separation_time is None and velocity is None:
        raise ConfigurationError("a stationary interferometer needs a velocity")
    if velocity is not None:
        check_positive(velocity, "velocity")
    T = config.separation_time_for(velocity)
    d = config.period
    tt = talbot_time(mass, d)
    ell = _harmonic_orders(config, order)
    g1, _, g3 = config.gratings
    g2 = _middle_grating(config, particle, velocity)
    a1 = talbot_coeff(g1, "quantum")(-ell, 0.0)
    a3 = talbot_coeff(g3, "quantum")(-ell, 0.0)
    b2 = talbot_coeff(g2, mode)(2 * ell, ell * T / tt)
    amps = a1 * a3 * b2 * np.exp(2j * np.pi * ell * fringe_phase_offset(config, T) / d)
    amps = amps * _envelope_factors(config, velocity, ell)
    signal = FringeSignal(d, amps, config.scheme, mass, T)
    if channels:
        from .decoherence import apply_channels

        signal = apply_channels(signal, channels)
    return signal


def _envelope_factors(config, velocity, ell):
    if config.divergence == 0 or config.timing_imbalance == 0:
        return 1.0
    if velocity is None:
        raise ConfigurationError("the timing-imbalance envelope needs a velocity")
    arg = _imbalance_argument(config.divergence, velocity, config.period, config.timing_imbalance)
    return sinc(ell * arg)


def _average(signals, weights, config, mass):
    amps = sum(w * s.amplitudes for s, w in zip(signals, weights))
    T = config.separation_time
    return FringeSignal(config.period, amps, config.scheme, mass, T)


def averaged_fringe(
    config: InterferometerConfig,
    particle: ParticleSpec,
    mode: str = "quantum",
    channels: Sequence = (),
    n_points: int = 32,
    order=None,
) -> FringeSignal:
    """Fringe amplitudes averaged over the particle's velocity distribution.

    Amplitudes, not visibilities, are averaged.
    """
    if particle.velocity_dist is None:
        if config.separation_time is None:
            raise ConfigurationError("particle has no velocity distribution")
        return tl_fringe(config, particle, None, mode, channels, order)
    v, w = velocity_quadrature(particle.velocity_dist, n_points)
    signals = [tl_fringe(config, particle, vi, mode, channels, order) for vi in v]
    if len(signals) == 1:
        return signals[0]
    return _average(signals, w, config, particle.mass)


def kdtli_visibility(
    config: InterferometerConfig, particle: ParticleSpec, mode: str = "quantum", n_points: int = 32
) -> VisibilityResult:
    """Velocity-averaged KDTLI visibility.

    With a laser-defined G2 the phase ``phi0(v)`` scales as 1/v at each
    velocity node; otherwise the G2 phase in ``config`` is used as is.
    """
    if config.scheme is not Scheme.KDTLI:
        raise ConfigurationError(f"expected a KDTLI configuration, got {config.scheme.value}")
    return visibility(averaged_fringe(config, particle, mode, n_points=n_points))


# ---------------------------------------------------------------------------
# OTIMA


def otima_grating_params(config: InterferometerConfig, particle: ParticleSpec, pulse_energies):
    """Per-pulse ``(phi0, n0)`` from pulse energies and the spot peak."""
    if config.spot_peak is None:
        raise ConfigurationError("OTIMA pulse energies need config.spot_peak")
    energies = tuple(pulse_energies)
    if len(energies) != 3:
        raise ConfigurationError("three pulse energies are required")
    out = []
    for e in energies:
        if e == 0:
            out.append((0.0, 0.0))
        else:
            out.append(otima_pulse_params(particle, e, config.spot_peak, config.wavelength))
    return out


def with_pulse_energies(config: InterferometerConfig, particle: ParticleSpec, pulse_energies):
    """Copy of an OTIMA config whose gratings follow from pulse energies."""
    return _with_pulse_params(config, otima_grating_params(config, particle, pulse_energies))


def _with_pulse_params(config, params):
    d = config.period
    gratings = tuple(GratingSpec.ionizing(d, phi0, n0) for phi0, n0 in params)
    return config.replace(gratings=gratings)


def otima_amplitudes(n0s, phi0_mid, xi, order, phase=None):
    """Closed-form OTIMA amplitudes for harmonics ``l = -order .. order``.

    Parameters
    ----------
    n0s : tuple of float
        Mean absorbed photon numbers of the three pulses.
    phi0_mid : float
        Eikonal phase of the middle pulse.
    xi : float
        Pulse separation in units of the Talbot time.
    phase : ndarray, optional
        Extra phase factor per harmonic.
    """
    n1, n2, n3 = n0s
    ell = np.arange(-order, order + 1)
    lam = np.abs(ell)
    zc = phi0_mid * np.sin(np.pi * ell * xi)
    zi = 0.5 * n2 * np.cos(np.pi * ell * xi)
    num = np.where(ell >= 0, zc - zi, zc + zi)
    den = np.where(ell >= 0, zc + zi, zc - zi)
    root = np.sqrt((zc * zc - zi * zi).astype(complex))
    scale = max(abs(phi0_mid), 0.5 * n2, 1e-300)
    # J_{2l} is even, so the root's branch drops out; a vanishing denominator is a
    # removable 0 * inf that the series form handles
    safe = np.abs(den) > 1e-6 * scale
    mid = np.empty(ell.shape, dtype=complex)
    ratio = np.where(safe, num / np.where(safe, den, 1.0), 0.0)
    mid[safe] = ratio[safe] ** lam[safe] * _bessel_j_even(2 * lam[safe], root[safe])
    if np.any(~safe):
        p = 0.5 * (zc - zi)
        q = -0.5 * (zc + zi)
        mid[~safe] = _entire_coefficient(2 * ell[~safe], p[~safe], q[~safe])
    outer = bessel_i_complex(lam, 0.5 * n1).real * bessel_i_complex(lam, 0.5 * n3).real
    amps = math.exp(-(n1 + n2 + n3) / 2) * outer * mid
    if phase is not None:
        amps = amps * phase
    return amps


def _bessel_j_even(n, z):
    # J_n at a possibly imaginary root: J_n(z) = i^-n I_n(i z)
    return (1j) ** (-(n % 4)) * bessel_i_complex(n, 1j * z)


def otima_signal(
    config: InterferometerConfig,
    particle: ParticleSpec,
    pulse_energies=None,
    velocity=None,
    channels: Sequence = (),
) -> FringeSignal:
    """OTIMA fringe amplitudes from the dedicated closed form.

    Without ``pulse_energies`` the grating parameters stored in ``config``
    are used; otherwise they are derived per pulse.
    """
    if config.scheme is not Scheme.OTIMA:
        raise ConfigurationError(f"expected an OTIMA configuration, got {config.scheme.value}")
    if pulse_energies is not None:
        config = with_pulse_energies(config, particle, pulse_energies)
    g1, g2, g3 = config.gratings
    T = config.separation_time_for(velocity)
    d = config.period
    xi = T / talbot_time(particle.mass, d)
    ell = np.arange(-config.fourier_order, config.fourier_order + 1)
    phase = np.exp(2j * np.pi * ell * fringe_phase_offset(config, T) / d) * _envelope_factors(config, velocity, ell)
    amps = otima_amplitudes((g1.n0, g2.n0, g3.n0), g2.phi0, xi, config.fourier_order, phase)
    signal = FringeSignal(d, amps, config.scheme, particle.mass, T)
    if channels:
        from .decoherence import apply_channels

        signal = apply_channels(signal, channels)
    return signal


@dataclass(frozen=True)
class MassScanPoint:
    mass: float
    v_sin: float
    delta_sn: float


def otima_mass_scan(
    config: InterferometerConfig,
    particle_template: ParticleSpec,
    masses,
    pulse_energies=None,
    velocity=None,
    scale_with_mass: bool = False,
):
    """Normalized signal difference ``(S_R - S_O) / S_O`` over a mass list.

    ``S_R`` is the signal at the configured fringe phase (x_s = 0 plus any
    configured shifts) and ``S_O`` the non-interfering l = 0 transmission.
    With ``scale_with_mass`` the template's polarizability and absorption
    cross-section grow in proportion to the mass, as for clusters built
    from identical units; otherwise the grating parameters stay fixed.

    Returns
    -------
    list of MassScanPoint
    """
    masses = np.atleast_1d(check_positive(masses, "masses"))
    out = []
    for m in masses:
        factor = m / particle_template.mass if scale_with_mass else 1.0
        p = ParticleSpec(
            mass=float(m),
            alpha_opt=particle_template.alpha_opt * factor,
            sigma_abs=particle_template.sigma_abs * factor,
            velocity_dist=particle_template.velocity_dist,
        )
        sig = otima_signal(config, p, pulse_energies, velocity)
        s_o = sig.offset
        if not (s_o > 0):
            raise DegenerateSignalError("OTIMA transmission vanishes")
        s_r = evaluate(sig, 0.0)
        out.append(MassScanPoint(float(m), 2 * abs(sig.harmonic(1)) / s_o, (s_r - s_o) / s_o))
    return out
