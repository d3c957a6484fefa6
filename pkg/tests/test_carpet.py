import math
import warnings

import numpy as np
import pytest

from talbot_lab.carpet import carpet, classical_carpet
from talbot_lab.core import GratingSpec
from talbot_lab.errors import DomainError, TruncationWarning
from talbot_lab.gratings import mean_transmission, talbot_coeff_quantum, transmission

D = 1e-7
X = np.arange(128) / 128


def test_phase_grating_revival_is_flat():
    # a pure phase grating has |t|^2 = 1, and so does its full revival
    g = carpet(talbot_coeff_quantum(GratingSpec.phase(D, math.pi)), [0.0, 1.0, 2.0], X)
    assert np.max(np.abs(g.density - 1.0)) < 1e-12


@pytest.mark.parametrize("phi0,n0", [(0.5, 1.0), (2.0, 3.0), (0.0, 2.0)])
def test_ionizing_self_image(phi0, n0):
    spec = GratingSpec.ionizing(D, phi0, n0)
    g = carpet(talbot_coeff_quantum(spec), [0.0, 2.0], X)
    expected = np.abs(transmission(spec, X * D)) ** 2
    assert np.max(np.abs(g.density - expected)) < 1e-10


def test_ionizing_half_shifted_image_at_one_talbot_time():
    spec = GratingSpec.ionizing(D, 0.0, 2.0)
    g = carpet(talbot_coeff_quantum(spec), [1.0], X)
    expected = np.abs(transmission(spec, (X + 0.5) * D)) ** 2
    assert np.max(np.abs(g.density[0] - expected)) < 1e-10


def test_row_means_conserved():
    for spec in (GratingSpec.phase(D, 3.0), GratingSpec.ionizing(D, 1.5, 2.0)):
        g = carpet(talbot_coeff_quantum(spec), np.linspace(0, 2, 13), X)
        assert np.max(np.abs(g.row_means() - mean_transmission(spec))) < 1e-9


def test_density_real_nonnegative():
    g = carpet(talbot_coeff_quantum(GratingSpec.ionizing(D, 2.0, 1.0)), np.linspace(0, 2, 21), X)
    assert g.density.min() > -1e-9
    assert g.imag_residue < 1e-10


def test_mask_carpet_truncation_warning_and_order():
    spec = GratingSpec.mask(D, 0.4)
    with pytest.warns(TruncationWarning):
        g = carpet(talbot_coeff_quantum(spec), [0.0], X, order_max=8)
    assert g.density.shape == (1, 128)


def test_classical_carpet_differs_from_quantum():
    spec = GratingSpec.phase(D, math.pi)
    t = np.linspace(0.05, 0.5, 10)
    q = carpet(talbot_coeff_quantum(spec), t, X)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        c = classical_carpet(spec, t, X)
    assert c.label == "classical"
    assert np.max(np.abs(q.density - c.density)) > 0.05
    assert np.allclose(c.row_means(), 1.0, atol=1e-8)


def test_classical_mask_carpet_static():
    spec = GratingSpec.mask(D, 0.5)
    c = classical_carpet(spec, [0.3, 1.1], X, order_max=16)
    assert np.allclose(c.density[0], c.density[1])


def test_carpet_rejects_negative_time():
    with pytest.raises(DomainError):
        carpet(talbot_coeff_quantum(GratingSpec.phase(D, 1.0)), [-0.1], X)
