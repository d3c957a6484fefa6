"""Near-field density behind a single grating under plane-wave illumination."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ._validation import as_float_array, check_int
from .core import GratingSpec, MaterialMask
from .errors import DomainError, TruncationWarning
from .gratings import TalbotCoeffFn, default_order, talbot_coeff_classical

CARPET_TAIL = 1e-6


@dataclass(frozen=True)
class CarpetGrid:
    """Density w_t(x) sampled on (t / T_T, x / d).

    ``density[i, j]`` belongs to ``times[i]`` and ``positions[j]``.  Values
    are the raw truncated Fourier sums; small negative ringing is kept.
    """

    times: np.ndarray
    positions: np.ndarray
    density: np.ndarray
    label: str = "quantum"
    imag_residue: float = 0.0

    def row_means(self):
        return self.density.mean(axis=1)


def _carpet_order(coeff_fn):
    spec = coeff_fn.spec
    if spec is None:
        return 16
    if isinstance(spec.kind, MaterialMask):
        return 64
    if coeff_fn.label == "classical":
        # caustics from ballistic lensing are not band limited
        return 64
    return default_order(spec.phi0, spec.n0) + 4


def carpet(coeff_fn: TalbotCoeffFn, times, positions, order_max=None) -> CarpetGrid:
    """Evaluate ``w_t(x) = sum_n B_n(n t / T_T) exp(2 pi i n x / d)``.

    Parameters
    ----------
    coeff_fn : TalbotCoeffFn
        Quantum or classical Talbot coefficients of the grating.
    times : array_like
        Propagation times in units of the Talbot time, all >= 0.
    positions : array_like
        Transverse positions in units of the period.
    order_max : int, optional
        Harmonics |n| <= order_max are summed.

    Returns
    -------
    CarpetGrid
    """
    times = np.atleast_1d(as_float_array(times, "times"))
    positions = np.atleast_1d(as_float_array(positions, "positions"))
    if np.any(times < 0):
        raise DomainError("carpet times must be >= 0")
    order_max = _carpet_order(coeff_fn) if order_max is None else check_int(order_max, "order_max", minimum=0)
    n = np.arange(-order_max, order_max + 1)
    coeffs = np.asarray(coeff_fn(n[np.newaxis, :], n[np.newaxis, :] * times[:, np.newaxis]))
    coeffs = np.atleast_2d(coeffs)
    edge = max(np.max(np.abs(coeffs[:, 0])), np.max(np.abs(coeffs[:, -1])))
    if order_max > 0 and edge > CARPET_TAIL:
        warnings.warn(
            f"carpet truncated at |n| = {order_max} with edge amplitude {edge:.2e}",
            TruncationWarning,
            stacklevel=2,
        )
    # w is real, so the coefficient at -n must be the conjugate of that at n
    sym = 0.5 * (coeffs + np.conj(coeffs[:, ::-1]))
    phases = np.exp(2j * np.pi * np.outer(n, positions))
    raw = coeffs @ phases
    dens = sym @ phases
    residue = float(np.max(np.abs(raw.imag))) if raw.size else 0.0
    return CarpetGrid(times, positions, dens.real, coeff_fn.label, residue)


def classical_carpet(spec: GratingSpec, times, positions, order_max=None) -> CarpetGrid:
    """Carpet of ballistic trajectories behind the grating."""
    return carpet(talbot_coeff_classical(spec), times, positions, order_max)
