"""Near-field matter-wave interferometry: Talbot-Lau, KDTLI and OTIMA.

Fringe amplitudes are built from grating Fourier coefficients and the
Talbot coefficients of the diffracting element; decoherence channels damp
them harmonic by harmonic.
"""

from .carpet import CarpetGrid, carpet, classical_carpet
from .core import (
    CONSTANTS,
    GratingSpec,
    InterferometerConfig,
    IonizingGrating,
    MaterialMask,
    ParticleSpec,
    PhaseGrating,
    PhysicalConstants,
    Scheme,
    VelocityDist,
    de_broglie_wavelength,
    polarizability_from_volume,
    talbot_length,
    talbot_time,
    velocity_quadrature,
)
from .decoherence import (
    CslParams,
    DecoherenceChannel,
    apply_channels,
    collisional_channel,
    csl_as_channel,
    csl_exclusion_bound,
    csl_exponent,
    csl_visibility_factor,
    decoherence_exponent,
    reduction_factor,
    thermal_emission_channel,
    thermal_emission_rate,
)
from .errors import (
    AccuracyError,
    BoundaryWarning,
    ConfigurationError,
    DegenerateParticleError,
    DegenerateSignalError,
    DomainError,
    NonIdentifiableError,
    TalbotLabError,
    TruncationWarning,
)
from .gratings import (
    FourierCoeffs,
    TalbotCoeffFn,
    absorption_probability,
    beta_parameter,
    ionizing_grating_bn,
    kdtli_phi0,
    mask_fourier,
    otima_pulse_params,
    phase_grating_bn,
    talbot_coeff_classical,
    talbot_coeff_direct,
    talbot_coeff_quantum,
)
from .metrology import (
    DeflectionField,
    FitResult,
    coriolis_phase,
    deflection_shift,
    fit_visibility_curve,
    gravity_fall,
    nanosphere_polarizability,
    susceptibility,
)
from .signal import (
    FringeSignal,
    VisibilityResult,
    averaged_fringe,
    evaluate,
    kdtli_visibility,
    otima_mass_scan,
    otima_signal,
    tilt_scan_shift,
    timing_imbalance_envelope,
    tl_fringe,
    total_fringe_phase,
    visibility,
)

__version__ = "0.1.0"

__all__ = [
    "CarpetGrid",
    "carpet",
    "classical_carpet",
    "AccuracyError",
    "BoundaryWarning",
    "CONSTANTS",
    "ConfigurationError",
    "CslParams",
    "DecoherenceChannel",
    "DeflectionField",
    "DegenerateParticleError",
    "DegenerateSignalError",
    "DomainError",
    "FitResult",
    "FourierCoeffs",
    "FringeSignal",
    "GratingSpec",
    "InterferometerConfig",
    "IonizingGrating",
    "MaterialMask",
    "NonIdentifiableError",
    "ParticleSpec",
    "PhaseGrating",
    "PhysicalConstants",
    "Scheme",
    "TalbotCoeffFn",
    "TalbotLabError",
    "TruncationWarning",
    "VelocityDist",
    "VisibilityResult",
    "absorption_probability",
    "apply_channels",
    "averaged_fringe",
    "beta_parameter",
    "collisional_channel",
    "coriolis_phase",
    "csl_as_channel",
    "csl_exclusion_bound",
    "csl_exponent",
    "csl_visibility_factor",
    "de_broglie_wavelength",
    "decoherence_exponent",
    "deflection_shift",
    "evaluate",
    "fit_visibility_curve",
    "gravity_fall",
    "ionizing_grating_bn",
    "kdtli_phi0",
    "kdtli_visibility",
    "mask_fourier",
    "nanosphere_polarizability",
    "otima_mass_scan",
    "otima_pulse_params",
    "otima_signal",
    "phase_grating_bn",
    "polarizability_from_volume",
    "reduction_factor",
    "susceptibility",
    "talbot_coeff_classical",
    "talbot_coeff_direct",
    "talbot_coeff_quantum",
    "talbot_length",
    "talbot_time",
    "thermal_emission_channel",
    "thermal_emission_rate",
    "tilt_scan_shift",
    "timing_imbalance_envelope",
    "tl_fringe",
    "total_fringe_phase",
    "velocity_quadrature",
    "visibility",
    "__version__",
]
