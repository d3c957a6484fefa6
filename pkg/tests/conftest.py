import math

import numpy as np
import pytest

from talbot_lab.core import (
    AMU,
    GratingSpec,
    InterferometerConfig,
    ParticleSpec,
    Scheme,
    VelocityDist,
    polarizability_from_volume,
    talbot_length,
)

KDTLI_PERIOD = 266e-9
OTIMA_PERIOD = 78.5e-9


@pytest.fixture
def kdtli_particle():
    return ParticleSpec(
        1000 * AMU,
        alpha_opt=float(polarizability_from_volume(100.0)),
        velocity_dist=VelocityDist.delta(200.0),
    )


def kdtli_config(L_over_LT=0.5, phi0=math.pi, f=0.42, mass=1000 * AMU, v=200.0, **kw):
    d = KDTLI_PERIOD
    L = L_over_LT * talbot_length(mass, v, d)
    gratings = (GratingSpec.mask(d, f), GratingSpec.phase(d, phi0), GratingSpec.mask(d, f))
    return InterferometerConfig(Scheme.KDTLI, gratings, separation_length=L, **kw)


def otima_config(T, phi0=0.5, n0=1.0, **kw):
    d = OTIMA_PERIOD
    g = GratingSpec.ionizing(d, phi0, n0)
    return InterferometerConfig(Scheme.OTIMA, (g, g, g), separation_time=T, **kw)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = {}


def record_acceptance(k, ok, detail):
    line = f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[k] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
