import math
import warnings

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from talbot_lab.core import AMU, GratingSpec, ParticleSpec, polarizability_from_volume
from talbot_lab.errors import DegenerateParticleError, DomainError, TruncationWarning
from talbot_lab.gratings import (
    FourierCoeffs,
    absorption_probability,
    beta_parameter,
    grating_bn,
    ionizing_grating_bn,
    ionizing_talbot_closed,
    kdtli_phi0,
    mask_fourier,
    mean_transmission,
    otima_pulse_params,
    phase_grating_bn,
    pulse_energy_for_n0,
    talbot_coeff,
    talbot_coeff_classical,
    talbot_coeff_direct,
    talbot_coeff_quantum,
    transmission,
)

mp.mp.dps = 30

B0_ION = 0.645035270449150        # e^{-1/2} I_0(1/2)
A0_ION_XI0 = 0.465759607593640    # e^{-1} I_0(1)
J2_HALF_PI_SQ = 0.0691885689047826  # J_2(pi^2 / 2)


def brute_fourier(spec, n, npts=1 << 14):
    x = np.arange(npts) / npts * spec.period
    t = transmission(spec, x)
    return np.fft.fft(t)[n % npts] / npts


def test_mask_fourier_values():
    c = mask_fourier(0.42, 32)
    assert c[0] == pytest.approx(0.42)
    assert c[1] == pytest.approx(0.42 * math.sin(math.pi * 0.42) / (math.pi * 0.42), rel=1e-14)
    assert c[-3] == c[3]
    assert c[1000] == 0


def test_phase_grating_amplitudes_match_fft():
    spec = GratingSpec.phase(1e-7, 2.3)
    b = phase_grating_bn(2.3, 20)
    for n in range(-6, 7):
        assert abs(b[n] - brute_fourier(spec, n)) < 1e-12


def test_ionizing_amplitudes_match_fft():
    spec = GratingSpec.ionizing(1e-7, 1.1, 0.8)
    b = ionizing_grating_bn(1.1, 0.8, 24)
    for n in range(-6, 7):
        assert abs(b[n] - brute_fourier(spec, n)) < 1e-12


def test_ionizing_b0_frozen():
    assert abs(ionizing_grating_bn(0.0, 2.0)[0] - B0_ION) < 1e-14


def test_mask_amplitudes_match_fft():
    spec = GratingSpec.mask(1e-7, 0.5)
    # FFT of a hard-edged indicator converges slowly; 1/N level agreement suffices
    for n in range(0, 4):
        assert abs(mask_fourier(0.5)[n] - brute_fourier(spec, n, 1 << 16)) < 1e-4


def test_phase_grating_unitarity():
    b = phase_grating_bn(3.0, 30)
    assert np.sum(np.abs(b.values) ** 2) == pytest.approx(1.0, abs=1e-14)


def test_fourier_coeffs_validation():
    with pytest.raises(DomainError):
        FourierCoeffs(2, np.ones(4))
    with pytest.raises(DomainError):
        FourierCoeffs(1, [1, np.nan, 1])


def test_absorption_probability_frozen():
    # n0 = 2 at an antinode: P(0) = e^{-2}
    assert absorption_probability(0, 0.0, 2.0, 1e-7) == pytest.approx(math.exp(-2), rel=1e-15)
    assert absorption_probability(1, 0.0, 2.0, 1e-7) == pytest.approx(2 * math.exp(-2), rel=1e-14)
    # node of the standing wave at x = d/2
    assert absorption_probability(0, 0.5e-7, 2.0, 1e-7) == pytest.approx(1.0, abs=1e-15)
    assert absorption_probability(3, 0.5e-7, 2.0, 1e-7) == pytest.approx(0.0, abs=1e-15)


@settings(max_examples=50, deadline=None)
@given(st.floats(min_value=0, max_value=30), st.floats(min_value=-1, max_value=1))
def test_absorption_poisson_normalized(n0, x):
    total = math.fsum(absorption_probability(k, x * 1e-7, n0, 1e-7) for k in range(200))
    assert abs(total - 1) < 1e-12


def test_transmission_mask_geometry():
    spec = GratingSpec.mask(1.0, 0.4)
    assert transmission(spec, 0.0) == 1
    assert transmission(spec, 0.19) == 1
    assert transmission(spec, 0.21) == 0
    assert transmission(spec, 1.1) == 1


# Talbot coefficients ------------------------------------------------------


@pytest.mark.parametrize("phi0", [0.5, math.pi, 6.0])
def test_phase_grating_closed_vs_direct(phi0):
    spec = GratingSpec.phase(1e-7, phi0)
    closed = talbot_coeff_quantum(spec)
    direct = talbot_coeff_direct(phase_grating_bn(phi0, 40))
    n = np.arange(-6, 7)[:, None]
    xi = np.linspace(0, 2, 41)[None, :]
    assert np.max(np.abs(closed(n, xi) - direct(n, xi))) < 1e-12


@pytest.mark.parametrize("phi0,n0", [(0.0, 1.0), (0.5, 1.0), (3.0, 2.0), (10.0, 0.3), (2.0, 8.0)])
def test_ionizing_closed_vs_direct(phi0, n0):
    spec = GratingSpec.ionizing(1e-7, phi0, n0)
    closed = talbot_coeff_quantum(spec)
    direct = talbot_coeff_direct(ionizing_grating_bn(phi0, n0, 60))
    n = np.arange(-8, 9)[:, None]
    xi = np.linspace(-1, 2, 61)[None, :]
    assert np.max(np.abs(closed(n, xi) - direct(n, xi))) < 1e-12


def test_ionizing_closed_against_mpmath_quadrature():
    # B_n(xi) = (1/d) int t(x - xi d/2) conj t(x + xi d/2) e^{-2 pi i n x/d} dx
    phi0, n0, xi, n = 1.3, 0.9, 0.37, 2

    def t(u):
        c2 = mp.cos(mp.pi * u) ** 2
        return mp.exp((1j * phi0 - n0 / 2) * c2)

    ref = mp.quad(lambda u: t(u - xi / 2) * mp.conj(t(u + xi / 2)) * mp.exp(-2j * mp.pi * n * u), [0, 1])
    assert abs(ionizing_talbot_closed(n, xi, phi0, n0) - complex(ref)) < 1e-13


def test_ionizing_frozen_xi0():
    spec = GratingSpec.ionizing(1e-7, 0.7, 2.0)
    assert abs(talbot_coeff_quantum(spec)(0, 0.0) - A0_ION_XI0) < 1e-14


def test_phase_grating_frozen():
    spec = GratingSpec.phase(1e-7, math.pi)
    assert abs(talbot_coeff_quantum(spec)(2, 0.5) - 0.4854339326315091) < 1e-13
    assert abs(talbot_coeff_quantum(spec)(2, 1 / 6) - float(mp.besselj(2, mp.pi / 2))) < 1e-13


def test_talbot_coeff_hermiticity():
    for spec in (GratingSpec.phase(1e-7, 2.0), GratingSpec.ionizing(1e-7, 1.0, 1.5), GratingSpec.mask(1e-7, 0.3)):
        B = talbot_coeff_quantum(spec)
        for n in (1, 2, 5):
            for xi in (0.1, 0.37, 1.4):
                assert abs(B(-n, xi) - np.conj(B(n, -xi))) < 1e-13


def test_mask_overlap_against_direct():
    spec = GratingSpec.mask(1e-7, 0.37)
    closed = talbot_coeff_quantum(spec)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        direct = talbot_coeff_direct(mask_fourier(0.37, 4000))
    for n in (0, 1, 3):
        for xi in (0.0, 0.2, 0.5):
            assert abs(closed(n, xi) - direct(n, xi)) < 2e-4


def test_mask_overlap_exact_cases():
    B = talbot_coeff_quantum(GratingSpec.mask(1e-7, 0.4))
    assert B(0, 0.0) == pytest.approx(0.4)
    assert B(0, 1.0) == pytest.approx(0.4)  # full self-image
    assert B(0, 0.5) == pytest.approx(0.0, abs=1e-15)  # slits displaced by d/2, no overlap
    assert B(1, 2.0) == pytest.approx(mask_fourier(0.4)[1], abs=1e-15)


def test_mean_transmission():
    assert mean_transmission(GratingSpec.phase(1e-7, 2.0)) == pytest.approx(1.0)
    assert mean_transmission(GratingSpec.mask(1e-7, 0.42)) == pytest.approx(0.42)
    assert mean_transmission(GratingSpec.ionizing(1e-7, 1.0, 2.0)) == pytest.approx(A0_ION_XI0, rel=1e-13)


def test_direct_sum_warns_on_truncation():
    with pytest.warns(TruncationWarning):
        talbot_coeff_direct(mask_fourier(0.4, 8))


# classical -------------------------------------------------------------------


def test_classical_mask_equals_amplitudes():
    C = talbot_coeff_classical(GratingSpec.mask(1e-7, 0.42))
    for n in range(5):
        assert C(n, 0.73) == pytest.approx(mask_fourier(0.42)[n])


def test_classical_phase_grating_is_bessel():
    # a sinusoidal kick gives C_n(xi) = J_n(pi phi0 xi) exactly
    C = talbot_coeff_classical(GratingSpec.phase(1e-7, math.pi))
    assert abs(C(2, 0.5) - J2_HALF_PI_SQ) < 1e-10
    for n, xi in [(1, 0.2), (3, 1.7), (0, 0.9)]:
        assert abs(C(n, xi) - float(mp.besselj(n, mp.pi * mp.pi * xi))) < 1e-10


def test_classical_ionizing_against_mpmath():
    phi0, n0, xi, n = 2.0, 1.0, 0.3, 1
    C = talbot_coeff_classical(GratingSpec.ionizing(1e-7, phi0, n0))
    ref = mp.quad(
        lambda u: mp.exp(-n0 * mp.cos(mp.pi * u) ** 2)
        * mp.exp(1j * xi * mp.pi * phi0 * mp.sin(2 * mp.pi * u))
        * mp.exp(-2j * mp.pi * n * u),
        [0, 0.5, 1],
    )
    assert abs(C(n, xi) - complex(ref)) < 1e-9


def test_classical_quantum_agree_small_phase_short_time():
    spec = GratingSpec.phase(1e-7, 0.2)
    Q, Cl = talbot_coeff_quantum(spec), talbot_coeff_classical(spec)
    xi = 1e-3
    assert abs(Q(1, xi) - Cl(1, xi)) < 1e-6


def test_talbot_coeff_mode_dispatch():
    spec = GratingSpec.phase(1e-7, 1.0)
    assert talbot_coeff(spec).label == "quantum"
    assert talbot_coeff(spec, "classical").label == "classical"
    with pytest.raises(DomainError):
        talbot_coeff(spec, "semi")


def test_grating_bn_dispatch():
    assert grating_bn(GratingSpec.mask(1e-7, 0.5), 4).order_max == 4
    assert grating_bn(GratingSpec.phase(1e-7, 1.0), 5)[0] == phase_grating_bn(1.0, 5)[0]


# laser-defined grating strengths ---------------------------------------------


def test_kdtli_phi0_scaling():
    p = ParticleSpec(1000 * AMU, alpha_opt=float(polarizability_from_volume(100.0)))
    a = kdtli_phi0(p, 1.0, 1e-3, 200.0)
    assert kdtli_phi0(p, 2.0, 1e-3, 200.0) == pytest.approx(2 * a)
    assert kdtli_phi0(p, 1.0, 1e-3, 400.0) == pytest.approx(a / 2)
    assert a > 0


def test_otima_params_and_inverse():
    p = ParticleSpec(1000 * AMU, alpha_opt=1e-38, sigma_abs=1e-21)
    lam, f00 = 157e-9, 1e7
    phi0, n0 = otima_pulse_params(p, 1e-3, f00, lam)
    assert n0 / (2 * phi0) == pytest.approx(beta_parameter(p, lam), rel=1e-12)
    E = pulse_energy_for_n0(p, n0, f00, lam)
    assert E == pytest.approx(1e-3, rel=1e-12)
    with pytest.raises(DegenerateParticleError):
        pulse_energy_for_n0(ParticleSpec(AMU, alpha_opt=1e-38), 1.0, f00, lam)
    with pytest.raises(DegenerateParticleError):
        beta_parameter(ParticleSpec(AMU), lam)


def test_frozen_amplitudes():
    # sin(0.48 pi) / pi and J_1(pi / 2), 25-digit mpmath values
    assert abs(mask_fourier(0.48)[1] - 0.3176817743343841) < 1e-15
    assert abs(abs(phase_grating_bn(math.pi)[1]) - 0.5668240889058739) < 1e-14
    assert np.sum(np.abs(phase_grating_bn(math.pi, 8).values) ** 2) == pytest.approx(1.0, abs=1e-10)
    assert np.allclose(phase_grating_bn(0.0, 4).values, np.eye(9)[4])
    assert np.allclose(ionizing_grating_bn(0.0, 0.0, 4).values, np.eye(9)[4])


def test_ionizing_zero_phase_reduces_to_absorption_average():
    # B_0(0) = <exp(-n0 cos^2)> = e^{-1} I_0(1) at n0 = 2
    B = talbot_coeff_quantum(GratingSpec.ionizing(1e-7, 0.0, 2.0))
    assert abs(B(0, 0.0) - A0_ION_XI0) < 1e-14


@pytest.mark.parametrize("phi0", [0.5, 2.0, 6.0])
@pytest.mark.parametrize("n0", [0.0, 1.0, 3.0])
def test_classical_quadrature_matches_substitution_rule(phi0, n0):
    # classical coefficients follow from the quantum closed form with
    # zeta_coh -> phi0 pi xi and zeta_ion -> n0 / 2
    from talbot_lab.gratings import _entire_coefficient

    C = talbot_coeff_classical(GratingSpec.ionizing(1e-7, phi0, n0))
    n = np.arange(-6, 7)[:, None]
    xi = np.linspace(0, 2, 21)[None, :]
    zc, zi = phi0 * np.pi * xi, n0 / 2 + 0 * xi
    substituted = np.exp(-n0 / 2) * _entire_coefficient(n, (zc - zi) / 2, -(zc + zi) / 2)
    assert np.max(np.abs(C(n, xi) - substituted)) < 1e-9
