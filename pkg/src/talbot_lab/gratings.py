"""Grating transmission functions, Fourier amplitudes and Talbot coefficients.

A grating of period d is described by its complex transmission
``t(x) = sum_n b_n exp(2 pi i n x / d)``.  The Talbot coefficients

    B_n(xi) = sum_j b_j conj(b_{j-n}) exp[i pi (n - 2 j) xi]

are the Fourier amplitudes of the near-field density at the dimensionless
time ``xi``.  Closed forms exist for the standing-wave phase grating and the
absorptive (ionizing) standing-wave grating; the direct sum is kept as an
independent route.  Classical counterparts ``C_n(xi)`` replace interference
by ballistic lensing through the eikonal momentum kick.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ._validation import check_int, check_nonnegative, check_positive, scalar_or_array
from .core import C, EPS0, H, GratingSpec, IonizingGrating, MaterialMask, ParticleSpec, PhaseGrating
from .errors import AccuracyError, DegenerateParticleError, DomainError, TruncationWarning
from .specialfn import bessel_i_complex, bessel_j, sinc

TAIL_TOLERANCE = 1e-10


@dataclass(frozen=True)
class FourierCoeffs:
    """Amplitudes indexed ``n = -order_max .. order_max``."""

    order_max: int
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != (2 * self.order_max + 1,):
            raise DomainError("values must have length 2*order_max + 1")
        if not np.all(np.isfinite(vals)):
            raise DomainError("Fourier coefficients must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def orders(self):
        return np.arange(-self.order_max, self.order_max + 1)

    def __getitem__(self, n):
        n = np.asarray(n)
        inside = np.abs(n) <= self.order_max
        idx = np.clip(n + self.order_max, 0, 2 * self.order_max)
        return scalar_or_array(np.where(inside, self.values[idx], 0.0))

    def tail(self):
        """Largest magnitude at the truncation boundary."""
        return float(max(abs(self.values[0]), abs(self.values[-1])))


@dataclass(frozen=True)
class TalbotCoeffFn:
    """Callable ``(n, xi) -> complex`` with provenance.

    ``label`` is ``"quantum"`` or ``"classical"``; ``spec`` is the grating the
    coefficients belong to (None for coefficients built from raw amplitudes).
    """

    func: Callable
    label: str
    spec: GratingSpec | None = None

    def __call__(self, n, xi):
        n = np.asarray(n)
        xi = np.asarray(xi, dtype=float)
        return scalar_or_array(self.func(*np.broadcast_arrays(n, xi)))


def default_order(phi0=0.0, n0=0.0):
    """Fourier truncation order adequate for a standing-wave grating."""
    return max(8, math.ceil(2 * (abs(phi0) + n0)) + 6)


# ---------------------------------------------------------------------------
# transmission functions and Fourier amplitudes


def transmission(spec: GratingSpec, x):
    """Complex transmission t(x); material slits are centred on x = k d."""
    x = np.asarray(x, dtype=float)
    d = spec.period
    kind = spec.kind
    if isinstance(kind, MaterialMask):
        u = (x / d + 0.5) % 1.0 - 0.5
        return scalar_or_array(np.where(np.abs(u) < kind.open_fraction / 2, 1.0 + 0j, 0.0 + 0j))
    c2 = np.cos(np.pi * x / d) ** 2
    if isinstance(kind, PhaseGrating):
        return scalar_or_array(np.exp(1j * kind.phi0 * c2))
    return scalar_or_array(np.exp((1j * kind.phi0 - kind.n0 / 2) * c2))


def mask_fourier(open_fraction, order_max=None):
    """Fourier amplitudes A_n = f sinc(pi n f) of a slit mask."""
    f = float(open_fraction)
    if not (0 < f < 1):
        raise DomainError(f"open fraction must lie in (0, 1), got {f}")
    order_max = 64 if order_max is None else check_int(order_max, "order_max", minimum=0)
    n = np.arange(-order_max, order_max + 1)
    return FourierCoeffs(order_max, f * sinc(np.pi * n * f))


def phase_grating_bn(phi0, order_max=None):
    """b_n = i^n exp(i phi0/2) J_n(phi0/2) of the standing-wave phase grating."""
    order_max = default_order(phi0) if order_max is None else check_int(order_max, "order_max", minimum=1)
    n = np.arange(-order_max, order_max + 1)
    vals = (1j) ** (n % 4) * np.exp(0.5j * phi0) * bessel_j(n, phi0 / 2)
    return FourierCoeffs(order_max, vals)


def ionizing_grating_bn(phi0, n0, order_max=None):
    """b_n = e^z I_n(z), z = i phi0/2 - n0/4, of the photo-depletion grating."""
    check_nonnegative(n0, "n0")
    order_max = default_order(phi0, n0) if order_max is None else check_int(order_max, "order_max", minimum=1)
    n = np.arange(-order_max, order_max + 1)
    z = 0.5j * phi0 - n0 / 4
    return FourierCoeffs(order_max, np.exp(z) * bessel_i_complex(n, z))


def grating_bn(spec: GratingSpec, order_max=None):
    kind = spec.kind
    if isinstance(kind, MaterialMask):
        return mask_fourier(kind.open_fraction, order_max)
    if isinstance(kind, PhaseGrating):
        return phase_grating_bn(kind.phi0, order_max)
    return ionizing_grating_bn(kind.phi0, kind.n0, order_max)


def absorption_probability(k, x, n0, period):
    """Poisson probability of absorbing k photons at position x.

    The mean photon number is ``n0 cos^2(2 pi x / lambda)`` with the
    standing-wave wavelength ``lambda = 2 d``.
    """
    k = check_int(k, "k", minimum=0)
    check_nonnegative(n0, "n0")
    d = check_positive(period, "period")
    nx = n0 * np.cos(np.pi * np.asarray(x, dtype=float) / d) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        logp = -nx + k * np.log(nx) - math.lgamma(k + 1)
    p = np.where(nx > 0, np.exp(logp), 1.0 if k == 0 else 0.0)
    return scalar_or_array(p)


# ---------------------------------------------------------------------------
# grating strength parameters


def kdtli_phi0(particle: ParticleSpec, laser_power, waist_y, velocity):
    """Peak eikonal phase of a Gaussian standing-wave beam crossed at v_z."""
    P = check_positive(laser_power, "laser_power")
    w = check_positive(waist_y, "waist_y")
    v = check_positive(velocity, "velocity")
    return scalar_or_array(4 * math.sqrt(2 * math.pi) * particle.alpha_opt * P / (H * C * EPS0 * w * v))


def kdtli_n0(particle: ParticleSpec, laser_power, waist_y, velocity, wavelength):
    """Mean absorbed photon number at the antinodes of the KDTLI standing wave.

    Photon fluence at the antinode times the absorption cross-section; it
    keeps ``n0 / (2 phi0)`` equal to the intensity-free ratio ``beta``.
    """
    P = check_positive(laser_power, "laser_power")
    w = check_positive(waist_y, "waist_y")
    v = check_positive(velocity, "velocity")
    lam = check_positive(wavelength, "wavelength")
    return scalar_or_array(4 * math.sqrt(2 * math.pi) * particle.sigma_abs * lam * P / (math.pi * H * C * w * v))


def otima_pulse_params(particle: ParticleSpec, pulse_energy, spot_peak, wavelength):
    """(phi0, n0) of a short standing-wave pulse.

    ``spot_peak`` is f(0, 0), the peak of the normalized spot profile in
    1/m^2.  The absorbed photon number is written without a 1/eps0 factor so
    that it is dimensionless (fluence times cross-section).
    """
    E = check_positive(pulse_energy, "pulse_energy")
    f00 = check_positive(spot_peak, "spot_peak")
    lam = check_positive(wavelength, "wavelength")
    phi0 = 4 * math.pi * particle.alpha_opt * E * f00 / (H * C * EPS0)
    n0 = 4 * particle.sigma_abs * E * lam * f00 / (H * C)
    return scalar_or_array(phi0), scalar_or_array(n0)


def pulse_energy_for_n0(particle: ParticleSpec, n0, spot_peak, wavelength):
    """Pulse energy that yields the requested antinode photon number."""
    check_nonnegative(n0, "n0")
    if particle.sigma_abs <= 0:
        raise DegenerateParticleError("sigma_abs must be > 0 to reach a finite n0")
    return n0 * H * C / (4 * particle.sigma_abs * wavelength * spot_peak)


def beta_parameter(particle: ParticleSpec, wavelength):
    """Absorption-to-phase ratio ``sigma eps0 lambda / (2 pi alpha)``."""
    lam = check_positive(wavelength, "wavelength")
    if particle.alpha_opt == 0:
        raise DegenerateParticleError("beta is undefined for zero optical polarizability")
    return scalar_or_array(particle.sigma_abs * EPS0 * lam / (2 * math.pi * particle.alpha_opt))


# ---------------------------------------------------------------------------
# Talbot coefficients


def _entire_coefficient(n, p, q):
    """Fourier coefficient of exp(p e^{i th} + q e^{-i th}) at order n.

    Equals sum_k p^(n+k) q^k / (k! (n+k)!) for n >= 0 (p, q swapped for
    n < 0), an entire function of p and q.  Written as (p/s)^n I_n(2 s) with
    s^2 = p q it is independent of the sign chosen for s, so no branch
    choice enters.
    """
    n, p, q = np.broadcast_arrays(np.asarray(n), np.asarray(p, dtype=complex), np.asarray(q, dtype=complex))
    order = np.abs(n)
    lead = np.where(n >= 0, p, q)
    w = p * q
    out = np.empty(n.shape, dtype=complex)
    small = np.abs(w) <= 1.0
    if np.any(small):
        o, a, ws = order[small], lead[small], w[small]
        term = a**o / np.exp(np.array([math.lgamma(k + 1) for k in o.ravel()]).reshape(o.shape))
        total = term.copy()
        for k in range(1, 30):
            term = term * ws / (k * (o + k))
            total = total + term
        out[small] = total
    big = ~small
    if np.any(big):
        s = np.sqrt(w[big])
        out[big] = (lead[big] / s) ** order[big] * bessel_i_complex(order[big], 2 * s)
    return out


def ionizing_talbot_closed(n, xi, phi0, n0):
    """Addition-theorem form of the ionizing-grating Talbot coefficients."""
    xi = np.asarray(xi, dtype=float)
    zeta_coh = phi0 * np.sin(np.pi * xi)
    zeta_ion = 0.5 * n0 * np.cos(np.pi * xi)
    p = 0.5 * (zeta_coh - zeta_ion)
    q = -0.5 * (zeta_coh + zeta_ion)
    return np.exp(-np.asarray(n0) / 2) * _entire_coefficient(n, p, q)


def _mask_overlap_coeffs(n, xi, f):
    """B_n(xi) of a slit mask: Fourier amplitudes of t(x - xi d/2) t(x + xi d/2).

    The product of two shifted slit indicators is again a union of at most
    two intervals per period, so the infinite amplitude sum has an exact
    finite form.
    """
    n, xi = np.broadcast_arrays(np.asarray(n), np.asarray(xi, dtype=float))
    delta = xi % 1.0
    shift = -xi / 2
    out = np.zeros(n.shape, dtype=complex)
    # overlap of [-f/2, f/2] with [delta - f/2, delta + f/2] and its image one period down
    intervals = (
        (delta - f / 2, np.full_like(delta, f / 2), delta < f),
        (np.full_like(delta, -f / 2), delta - 1 + f / 2, delta > 1 - f),
    )
    nz = n != 0
    safe_n = np.where(nz, n, 1)
    for lo, hi, present in intervals:
        a = lo + shift
        b = hi + shift
        width = np.where(present, hi - lo, 0.0)
        ft = (np.exp(-2j * np.pi * safe_n * a) - np.exp(-2j * np.pi * safe_n * b)) / (2j * np.pi * safe_n)
        out += np.where(present, np.where(nz, ft, width), 0.0)
    return out


def talbot_coeff_quantum(spec: GratingSpec) -> TalbotCoeffFn:
    """Closed-form quantum Talbot coefficients B_n(xi) of a grating."""
    kind = spec.kind
    if isinstance(kind, PhaseGrating):
        phi0 = kind.phi0

        def func(n, xi):
            return np.asarray(bessel_j(n, phi0 * np.sin(np.pi * xi)), dtype=complex)

    elif isinstance(kind, IonizingGrating):
        phi0, n0 = kind.phi0, kind.n0

        def func(n, xi):
            return ionizing_talbot_closed(n, xi, phi0, n0)

    else:
        f = kind.open_fraction

        def func(n, xi):
            return _mask_overlap_coeffs(n, xi, f)

    return TalbotCoeffFn(func, "quantum", spec)


def talbot_coeff_direct(coeffs: FourierCoeffs) -> TalbotCoeffFn:
    """Talbot coefficients by direct summation over grating amplitudes."""
    if coeffs.tail() > TAIL_TOLERANCE:
        warnings.warn(
            f"grating amplitudes truncated at |n| = {coeffs.order_max} with tail {coeffs.tail():.2e}",
            TruncationWarning,
            stacklevel=2,
        )
    b = coeffs.values
    j = coeffs.orders

    def func(n, xi):
        out = np.zeros(n.shape, dtype=complex)
        for jj, bj in zip(j, b):
            if bj == 0:
                continue
            out += bj * np.conj(coeffs[jj - n]) * np.exp(1j * np.pi * (n - 2 * jj) * xi)
        return out

    return TalbotCoeffFn(func, "quantum", None)


# classical coefficients -----------------------------------------------------

_MAX_QUADRATURE = 1 << 20
_CLASSICAL_RTOL = 1e-7


def _kick_profile(spec: GratingSpec, u):
    """|t|^2 and d * dphi/dx sampled at u = x/d."""
    kind = spec.kind
    weight = np.exp(-kind.n0 * np.cos(np.pi * u) ** 2) if isinstance(kind, IonizingGrating) else np.ones_like(u)
    kick = -np.pi * kind.phi0 * np.sin(2 * np.pi * u)
    return weight, kick


def _classical_fft(spec, xi_values, npts):
    u = np.arange(npts) / npts
    weight, kick = _kick_profile(spec, u)
    integrand = weight[np.newaxis, :] * np.exp(-1j * np.outer(xi_values, kick))
    return np.fft.fft(integrand, axis=1) / npts


def _classical_coeffs(spec, n, xi, quadrature_points):
    out = np.empty(n.shape, dtype=complex)
    flat_n = n.ravel()
    flat_xi = xi.ravel()
    uniq, inverse = np.unique(flat_xi, return_inverse=True)
    res = np.empty(flat_n.shape, dtype=complex)
    bandwidth = np.pi * abs(spec.phi0) * np.abs(uniq)
    nmax_per = np.zeros(len(uniq), dtype=int)
    np.maximum.at(nmax_per, inverse, np.abs(flat_n))
    start = np.maximum(quadrature_points, 2 * (bandwidth + nmax_per) + 64)
    npts_per = (2 ** np.ceil(np.log2(start))).astype(int)
    for npts in np.unique(npts_per):
        group = np.nonzero(npts_per == npts)[0]
        for chunk in np.array_split(group, max(1, len(group) * npts // 4_000_000 + 1)):
            members = np.isin(inverse, chunk)
            pos = np.searchsorted(chunk, inverse[members])
            nn = flat_n[members]
            m = int(npts)
            coarse = _classical_fft(spec, uniq[chunk], m)[pos, nn % m]
            while True:
                if 2 * m > _MAX_QUADRATURE:
                    raise AccuracyError("classical Talbot coefficient quadrature did not converge")
                fine = _classical_fft(spec, uniq[chunk], 2 * m)[pos, nn % (2 * m)]
                change = np.abs(fine - coarse)
                if np.all(change <= _CLASSICAL_RTOL * np.maximum(np.abs(fine), 1e-6)):
                    break
                coarse, m = fine, 2 * m
            res[members] = fine
    out[...] = res.reshape(n.shape)
    return out


def talbot_coeff_classical(spec: GratingSpec, quadrature_points: int = 256) -> TalbotCoeffFn:
    """Classical (ballistic) Talbot coefficients C_n(xi).

    Evaluated by trapezoidal quadrature over one period, doubled until two
    successive levels agree to 1e-7.  A slit mask without phase profile
    exerts no force, so its coefficients are exactly its Fourier amplitudes.
    """
    quadrature_points = check_int(quadrature_points, "quadrature_points", minimum=256)
    kind = spec.kind
    if isinstance(kind, MaterialMask):
        f = kind.open_fraction

        def func(n, xi):
            return (f * sinc(np.pi * n * f) + 0 * xi).astype(complex)

    else:

        def func(n, xi):
            if n.size == 0:
                return np.zeros(n.shape, dtype=complex)
            return _classical_coeffs(spec, n, xi, quadrature_points)

    return TalbotCoeffFn(func, "classical", spec)


def talbot_coeff(spec: GratingSpec, mode: str = "quantum") -> TalbotCoeffFn:
    if mode == "quantum":
        return talbot_coeff_quantum(spec)
    if mode == "classical":
        return talbot_coeff_classical(spec)
    raise DomainError(f"mode must be 'quantum' or 'classical', got {mode!r}")


def mean_transmission(spec: GratingSpec):
    """Period average of |t(x)|^2, i.e. A_0."""
    return float(talbot_coeff_quantum(spec)(0, 0.0).real)
