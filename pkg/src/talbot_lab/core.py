"""Physical constants, domain types and the elementary matter-wave scales.

All lengths are in metres, times in seconds, masses in kilograms and
polarizabilities in SI units (C m^2 / V) unless a helper says otherwise.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from ._validation import check_int, check_positive, scalar_or_array
from .errors import ConfigurationError, DomainError


@dataclass(frozen=True)
class PhysicalConstants:
    h: float = 6.62607015e-34
    hbar: float = 6.62607015e-34 / (2 * math.pi)
    c: float = 299792458.0
    eps0: float = 8.8541878128e-12
    kB: float = 1.380649e-23
    amu: float = 1.66053906660e-27
    g_earth: float = 9.80665
    omega_earth: float = 7.2921159e-5


CONSTANTS = PhysicalConstants()

H = CONSTANTS.h
HBAR = CONSTANTS.hbar
C = CONSTANTS.c
EPS0 = CONSTANTS.eps0
KB = CONSTANTS.kB
AMU = CONSTANTS.amu
G_EARTH = CONSTANTS.g_earth
OMEGA_EARTH = CONSTANTS.omega_earth
DEBYE = 1e-21 / C  # C m


def polarizability_from_volume(volume_A3):
    """Convert a polarizability volume in cubic angstrom to SI (C m^2/V)."""
    return 4 * math.pi * EPS0 * np.asarray(volume_A3, dtype=float) * 1e-30


# ---------------------------------------------------------------------------
# velocity distributions


@dataclass(frozen=True)
class VelocityDist:
    """Longitudinal velocity distribution of the beam.

    Use the ``delta``, ``gaussian`` and ``tabulated`` constructors rather
    than instantiating directly.
    """

    kind: str
    v0: float = 0.0
    fwhm: float = 0.0
    velocities: Tuple[float, ...] = ()
    weights: Tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind == "delta":
            check_positive(self.v0, "v0")
        elif self.kind == "gaussian":
            check_positive(self.v0, "v0")
            check_positive(self.fwhm, "fwhm")
        elif self.kind == "tabulated":
            if len(self.velocities) == 0:
                raise DomainError("tabulated velocity distribution is empty")
            if len(self.velocities) != len(self.weights):
                raise DomainError("velocities and weights differ in length")
            check_positive(self.velocities, "velocities")
            w = np.asarray(self.weights, dtype=float)
            if np.any(w < 0) or not np.isfinite(w).all() or w.sum() <= 0:
                raise DomainError("weights must be non-negative with positive sum")
        else:
            raise DomainError(f"unknown velocity distribution kind {self.kind!r}")

    @classmethod
    def delta(cls, v0):
        return cls("delta", v0=float(v0))

    @classmethod
    def gaussian(cls, v0, fwhm):
        return cls("gaussian", v0=float(v0), fwhm=float(fwhm))

    @classmethod
    def tabulated(cls, velocities, weights):
        return cls(
            "tabulated",
            velocities=tuple(float(v) for v in velocities),
            weights=tuple(float(w) for w in weights),
        )

    @property
    def mean(self):
        v, w = velocity_quadrature(self)
        return float(np.dot(v, w))


FWHM_PER_SIGMA = 2 * math.sqrt(2 * math.log(2))


def velocity_quadrature(dist: VelocityDist, n_points: int = 32):
    """Discretize a velocity distribution into nodes and normalized weights.

    Gaussian distributions use Gauss-Legendre nodes on ``v0 +- 4 sigma``,
    clipped to positive velocities; weights include the Gaussian density
    and are renormalized to unit sum.

    Returns
    -------
    velocities, weights : ndarray
    """
    n_points = check_int(n_points, "n_points", minimum=1)
    if dist.kind == "delta":
        return np.array([dist.v0]), np.array([1.0])
    if dist.kind == "tabulated":
        v = np.asarray(dist.velocities, dtype=float)
        w = np.asarray(dist.weights, dtype=float)
        return v.copy(), w / w.sum()
    sigma = dist.fwhm / FWHM_PER_SIGMA
    lo = max(dist.v0 - 4 * sigma, 1e-9 * dist.v0)
    hi = dist.v0 + 4 * sigma
    x, gl_w = np.polynomial.legendre.leggauss(n_points)
    v = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
    w = gl_w * np.exp(-0.5 * ((v - dist.v0) / sigma) ** 2)
    return v, w / w.sum()


@dataclass(frozen=True)
class ParticleSpec:
    """Interfering particle: mass and its response to the grating light."""

    mass: float
    alpha_opt: float = 0.0
    sigma_abs: float = 0.0
    alpha_stat: float = 0.0
    dipole_sq_mean: float = 0.0
    velocity_dist: Optional[VelocityDist] = None

    def __post_init__(self):
        check_positive(self.mass, "mass")
        if not math.isfinite(self.alpha_opt):
            raise DomainError("alpha_opt must be finite")
        if not (self.sigma_abs >= 0):
            raise DomainError(f"sigma_abs must be >= 0, got {self.sigma_abs}")
        if not (self.dipole_sq_mean >= 0):
            raise DomainError("dipole_sq_mean must be >= 0")

    @classmethod
    def from_amu(cls, mass_u, **kwargs):
        return cls(mass=float(mass_u) * AMU, **kwargs)

    @property
    def mass_u(self):
        return self.mass / AMU

    def with_mass(self, mass):
        return ParticleSpec(
            mass=mass,
            alpha_opt=self.alpha_opt,
            sigma_abs=self.sigma_abs,
            alpha_stat=self.alpha_stat,
            dipole_sq_mean=self.dipole_sq_mean,
            velocity_dist=self.velocity_dist,
        )


# ---------------------------------------------------------------------------
# gratings and interferometer geometry


@dataclass(frozen=True)
class MaterialMask:
    open_fraction: float

    def __post_init__(self):
        if not (0 < self.open_fraction < 1):
            raise DomainError(f"open_fraction must lie in (0, 1), got {self.open_fraction}")


@dataclass(frozen=True)
class PhaseGrating:
    phi0: float

    def __post_init__(self):
        if not math.isfinite(self.phi0):
            raise DomainError("phi0 must be finite")


@dataclass(frozen=True)
class IonizingGrating:
    phi0: float
    n0: float

    def __post_init__(self):
        if not math.isfinite(self.phi0):
            raise DomainError("phi0 must be finite")
        if not (self.n0 >= 0) or not math.isfinite(self.n0):
            raise DomainError(f"n0 must be >= 0, got {self.n0}")


GratingKind = Union[MaterialMask, PhaseGrating, IonizingGrating]


@dataclass(frozen=True)
class GratingSpec:
    period: float
    kind: GratingKind

    def __post_init__(self):
        check_positive(self.period, "period")
        if not isinstance(self.kind, (MaterialMask, PhaseGrating, IonizingGrating)):
            raise DomainError(f"unsupported grating kind {self.kind!r}")

    @classmethod
    def mask(cls, period, open_fraction):
        return cls(period, MaterialMask(open_fraction))

    @classmethod
    def phase(cls, period, phi0):
        return cls(period, PhaseGrating(phi0))

    @classmethod
    def ionizing(cls, period, phi0, n0):
        return cls(period, IonizingGrating(phi0, n0))

    @property
    def phi0(self):
        return getattr(self.kind, "phi0", 0.0)

    @property
    def n0(self):
        return getattr(self.kind, "n0", 0.0)


class Scheme(str, enum.Enum):
    TL = "TL"
    KDTLI = "KDTLI"
    OTIMA = "OTIMA"


@dataclass(frozen=True)
class InterferometerConfig:
    """Three-grating geometry.

    Stationary setups (TL, KDTLI) set ``separation_length``; the pulsed
    OTIMA scheme sets ``separation_time``.  ``laser_power`` and ``waist_y``
    describe the KDTLI standing wave; when given, the middle-grating phase is
    recomputed for every velocity node.  ``spot_peak`` is the peak of the
    normalized OTIMA pulse spot profile in 1/m^2.  ``grating_shifts`` are
    lateral displacements of G1, G2, G3; ``tilt_height``/``tilt_angle``
    describe a tilted G2 beam; ``divergence``/``timing_imbalance`` switch on
    the pulse-timing contrast envelope.
    """

    scheme: Scheme
    gratings: Tuple[GratingSpec, GratingSpec, GratingSpec]
    separation_length: Optional[float] = None
    separation_time: Optional[float] = None
    acceleration: float = 0.0
    fourier_order: int = 5
    laser_power: Optional[float] = None
    waist_y: Optional[float] = None
    spot_peak: Optional[float] = None
    grating_shifts: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    tilt_height: float = 0.0
    tilt_angle: float = 0.0
    divergence: float = 0.0
    timing_imbalance: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        object.__setattr__(self, "gratings", tuple(self.gratings))
        if len(self.gratings) != 3:
            raise ConfigurationError("exactly three gratings are required")
        periods = {g.period for g in self.gratings}
        if len(periods) != 1:
            raise ConfigurationError("all three grating periods must be equal")
        if (self.separation_length is None) == (self.separation_time is None):
            raise ConfigurationError("give exactly one of separation_length / separation_time")
        sep = self.separation_length if self.separation_time is None else self.separation_time
        if not (sep > 0):
            raise ConfigurationError("separation must be > 0")
        check_int(self.fourier_order, "fourier_order", minimum=1)
        g1, g2, g3 = self.gratings
        if self.scheme is Scheme.KDTLI:
            if not (isinstance(g1.kind, MaterialMask) and isinstance(g3.kind, MaterialMask)):
                raise ConfigurationError("KDTLI needs material masks as G1 and G3")
            if not isinstance(g2.kind, PhaseGrating):
                raise ConfigurationError("KDTLI needs a phase grating as G2")
        if self.scheme is Scheme.OTIMA:
            if not all(isinstance(g.kind, IonizingGrating) for g in self.gratings):
                raise ConfigurationError("OTIMA needs three ionizing gratings")
        if self.divergence < 0 or self.tilt_angle < 0 or self.tilt_height < 0:
            raise ConfigurationError("divergence, tilt_angle and tilt_height must be >= 0")

    @property
    def period(self):
        return self.gratings[0].period

    @property
    def wavelength(self):
        """Wavelength of a standing-wave grating with this period."""
        return 2 * self.period

    def separation_time_for(self, velocity):
        if self.separation_time is not None:
            return self.separation_time
        return self.separation_length / velocity

    def replace(self, **changes):
        from dataclasses import replace

        return replace(self, **changes)


# ---------------------------------------------------------------------------
# elementary scales


def talbot_time(mass, period):
    """Talbot time ``m d^2 / h`` in seconds."""
    m = check_positive(mass, "mass")
    d = check_positive(period, "period")
    return scalar_or_array(m * d * d / H)


def talbot_length(mass, velocity, period):
    """Talbot length ``v T_T = d^2 / lambda_dB`` in metres."""
    v = check_positive(velocity, "velocity")
    return scalar_or_array(v * np.asarray(talbot_time(mass, period)))


def de_broglie_wavelength(mass, velocity):
    m = check_positive(mass, "mass")
    v = check_positive(velocity, "velocity")
    return scalar_or_array(H / (m * v))
