import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import kdtli_config
from talbot_lab.core import AMU, CONSTANTS, ParticleSpec, talbot_time
from talbot_lab.decoherence import (
    CslParams,
    DecoherenceChannel,
    _csl_bracket,
    apply_channels,
    collision_rate,
    collisional_channel,
    csl_as_channel,
    csl_exclusion_bound,
    csl_visibility_factor,
    decoherence_exponent,
    gaussian_kernel,
    reduction_factor,
    thermal_emission_channel,
    thermal_emission_rate,
)
from talbot_lab.errors import AccuracyError, DomainError
from talbot_lab.signal import tl_fringe, visibility
from talbot_lab.specialfn import erf

D = 78.5e-9
HBAR, KB, C = CONSTANTS.hbar, CONSTANTS.kB, CONSTANTS.c


def test_trivial_channels():
    m, T = 1e4 * AMU, 1e-3
    zero_rate = DecoherenceChannel.constant(0.0, lambda s: np.zeros_like(s))
    no_kick = DecoherenceChannel.constant(50.0, lambda s: np.ones_like(np.asarray(s, dtype=float)))
    assert reduction_factor(zero_rate, 1, m, D, T) == 1.0
    assert reduction_factor(no_kick, 3, m, D, T) == 1.0
    resolving = collisional_channel(1e-5, 1e-18)
    gamma = resolving.constant_rate
    assert reduction_factor(resolving, 1, m, D, T) == pytest.approx(math.exp(-2 * gamma * T), rel=1e-12)
    assert reduction_factor(resolving, 0, m, D, T) == 1.0


def test_time_dependent_rate_uses_full_interval():
    m, T = 1e4 * AMU, 1e-3
    k, loss = gaussian_kernel(50e-9)
    ramp = DecoherenceChannel(lambda t: 100.0 * (1 + t / T), k, "ramp", loss)
    flat = DecoherenceChannel.constant(100.0, k, "flat", loss)
    # the odd part of the ramp integrates to zero against the even loss profile
    assert decoherence_exponent(ramp, 1, m, D, T) == pytest.approx(decoherence_exponent(flat, 1, m, D, T), rel=1e-10)


def test_gaussian_channel_analytic():
    m, T, w, gamma = 1e5 * AMU, 2e-3, 80e-9, 30.0
    k, loss = gaussian_kernel(w)
    ch = DecoherenceChannel.constant(gamma, k, "g", loss)
    tt = talbot_time(m, D)
    for n in (1, 2, 3):
        a = n * D / (tt * w * math.sqrt(2))
        analytic = 2 * gamma * T * (1 - math.sqrt(math.pi) / (2 * a * T) * erf(a * T))
        assert decoherence_exponent(ch, n, m, D, T) == pytest.approx(analytic, rel=1e-10)


def test_reduction_decreases_with_order():
    ch = csl_as_channel(CslParams(1e-8), 1e6 * AMU)
    r = [reduction_factor(ch, n, 1e6 * AMU, D, 5e-3) for n in (1, 2, 3)]
    assert 1 >= r[0] >= r[1] >= r[2] > 0


def test_csl_example_value():
    m = 1e6 * AMU
    tt = talbot_time(m, D)
    assert tt == pytest.approx(15.4e-3, rel=0.01)
    f = csl_visibility_factor(CslParams(1e-10), m, D, tt)
    assert f == pytest.approx(0.86, abs=0.005)


@pytest.mark.parametrize("mass_u", [1e3, 1e5, 1e6])
@pytest.mark.parametrize("xi", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("r_c", [50e-9, 100e-9, 1e-6])
def test_csl_channel_equivalence(mass_u, xi, r_c):
    m = mass_u * AMU
    T = xi * talbot_time(m, D)
    params = CslParams(1e-10, r_c)
    closed = csl_visibility_factor(params, m, D, T)
    quad = reduction_factor(csl_as_channel(params, m), 1, m, D, T)
    assert quad == pytest.approx(closed, rel=1e-9)


def test_csl_limits():
    m = 1e5 * AMU
    assert csl_visibility_factor(CslParams(1e-10), m, D, 1e-12) == pytest.approx(1.0, abs=1e-15)
    assert csl_visibility_factor(CslParams(1e-10, 1.0), m, D, 1e-3) == pytest.approx(1.0, abs=1e-12)
    assert reduction_factor(csl_as_channel(CslParams(1e-30), m), 1, m, D, 1e-3) == pytest.approx(1.0, abs=1e-15)


def test_csl_bracket_series_matches_direct():
    xs = np.array([1e-4, 0.1, 0.3, 0.49, 0.5, 0.51, 2.0])
    direct = 1 - math.sqrt(math.pi) * np.array([erf(x) for x in xs]) / (2 * xs)
    got = _csl_bracket(xs)
    assert np.allclose(got[1:], direct[1:], rtol=1e-12)
    assert got[0] == pytest.approx(1e-8 / 3, rel=1e-6)


def test_csl_exclusion_bound():
    m, T = 1e5 * AMU, 5e-3
    tt = talbot_time(m, D)
    bracket = float(_csl_bracket(D * T / (2 * 100e-9 * tt)))
    lam = csl_exclusion_bound(0.1, 0.2, m, D, T)
    assert lam == pytest.approx(math.log(2) / (2 * (m / AMU) ** 2 * T * bracket), rel=1e-12)
    assert csl_visibility_factor(CslParams(lam), m, D, T) == pytest.approx(0.5, rel=1e-10)
    equal = csl_exclusion_bound(0.2, 0.2, m, D, T)
    assert csl_visibility_factor(CslParams(equal), m, D, T) == pytest.approx(0.95, rel=1e-10)
    assert csl_exclusion_bound(0.15, 0.2, m, D, T) < lam
    assert csl_exclusion_bound(0.3, 0.2, m, D, T) == math.inf
    with pytest.raises(DomainError):
        csl_exclusion_bound(0.0, 0.2, m, D, T)


def test_thermal_constant_cross_section():
    sigma0 = 1e-21
    for T_int in (500.0, 1500.0, 5000.0):
        rate, kernel = thermal_emission_rate(lambda w: sigma0, T_int)
        analytic = 2 * sigma0 * (KB * T_int / HBAR) ** 3 / (math.pi**2 * C**2)
        assert rate == pytest.approx(analytic, rel=1e-3)
        assert kernel(0.0) == pytest.approx(1.0, abs=1e-12)
        assert abs(kernel(1e-6)) <= 1 + 1e-12


def test_thermal_rate_cubic_scaling():
    r1, _ = thermal_emission_rate(lambda w: 1e-21, 800.0)
    r2, _ = thermal_emission_rate(lambda w: 1e-21, 8000.0)
    assert r2 / r1 == pytest.approx(1000.0, rel=0.005)


def test_thermal_divergent_spectrum():
    with pytest.raises(DomainError):
        w0 = KB * 1000.0 / HBAR
        thermal_emission_rate(lambda w: 1e-21 * np.exp(2 * w / w0), 1000.0)


def test_thermal_zero_cross_section():
    rate, kernel = thermal_emission_rate(lambda w: 0.0, 1000.0)
    assert rate == 0.0 and kernel(1e-7) == 1.0


def test_thermal_channel_damps():
    ch = thermal_emission_channel(lambda w: 1e-20, 3000.0)
    r = reduction_factor(ch, 1, 1e4 * AMU, 266e-9, 1e-3)
    assert 0 < r < 1


def test_collision_rate_kinetics():
    p, s = 1e-6, 1e-18
    n_gas = p / (KB * 293.15)
    v_mean = math.sqrt(8 * KB * 293.15 / (math.pi * 28.0134 * AMU))
    assert collision_rate(p, s) == pytest.approx(n_gas * v_mean * s, rel=1e-12)
    assert collision_rate(2 * p, s) == pytest.approx(2 * collision_rate(p, s), rel=1e-14)
    assert collision_rate(p, s, beam_velocity=300.0) > collision_rate(p, s)


def test_pressure_doubling_squares_suppression():
    m, T = 1e4 * AMU, 2e-3
    r1 = reduction_factor(collisional_channel(1e-5, 5e-18), 1, m, D, T)
    r2 = reduction_factor(collisional_channel(2e-5, 5e-18), 1, m, D, T)
    assert r2 == pytest.approx(r1**2, rel=1e-12)
    assert reduction_factor(collisional_channel(0.0, 5e-18), 1, m, D, T) == 1.0


def test_partially_resolving_collisions():
    ch = collisional_channel(1e-5, 5e-18, kernel_width=20e-9)
    r = reduction_factor(ch, 1, 1e4 * AMU, D, 2e-3)
    assert reduction_factor(collisional_channel(1e-5, 5e-18), 1, 1e4 * AMU, D, 2e-3) <= r < 1


def test_apply_channels_semantics(kdtli_particle):
    cfg = kdtli_config(0.5)
    sig = tl_fringe(cfg, kdtli_particle, 200.0)
    assert apply_channels(sig, []) is sig
    ch = csl_as_channel(CslParams(1e-6), kdtli_particle.mass)
    damped = apply_channels(sig, [ch])
    assert damped.offset == sig.offset
    assert visibility(damped).v_sin < visibility(sig).v_sin
    twice = apply_channels(sig, [ch, ch])
    doubled = apply_channels(sig, [ch.scaled(2.0)])
    assert np.allclose(twice.amplitudes, doubled.amplitudes, rtol=1e-12, atol=0)


@settings(max_examples=20, deadline=None)
@given(
    st.floats(min_value=1e-9, max_value=1e-4),
    st.floats(min_value=1e-8, max_value=1e-5),
    st.floats(min_value=1e-7, max_value=1e-3),
)
def test_channel_composition_commutes(pressure, lam, width):
    cfg = kdtli_config(0.45)
    p = ParticleSpec(1e3 * AMU)
    sig = tl_fringe(cfg, p, 200.0)
    k, loss = gaussian_kernel(width)
    chans = [
        collisional_channel(pressure, 1e-18),
        csl_as_channel(CslParams(lam), p.mass),
        DecoherenceChannel.constant(10.0, k, "g", loss),
    ]
    a = apply_channels(sig, chans)
    b = apply_channels(sig, chans[::-1])
    c = apply_channels(sig, [chans[1], chans[2], chans[0]])
    assert np.array_equal(np.abs(a.amplitudes), np.abs(b.amplitudes))
    assert np.array_equal(np.abs(a.amplitudes), np.abs(c.amplitudes))


def test_apply_channels_needs_mass_and_time():
    from talbot_lab.core import Scheme
    from talbot_lab.signal import FringeSignal

    sig = FringeSignal(D, [0.1, 1.0, 0.1], Scheme.TL)
    with pytest.raises(DomainError):
        apply_channels(sig, [collisional_channel(1e-6, 1e-18)])


def test_quadrature_failure_is_accuracy_error():
    m = 1e4 * AMU
    wild = DecoherenceChannel.constant(1.0, lambda s: np.cos(1e9 * np.asarray(s) / 1e-9), "wild")
    with pytest.raises(AccuracyError):
        reduction_factor(wild, 1, m, D, 1.0)
