"""Integer-order Bessel functions, the error function and sinc.

The Bessel routines use Miller's backward recurrence normalized with the
Neumann sum identities, which covers complex arguments of the modified
function (needed for absorptive standing-wave gratings) with a single
code path.  Every function broadcasts over NumPy arrays.
"""

import math

import numpy as np

from ._validation import scalar_or_array

_RESCALE_AT = 1e150
_RESCALE_BY = 1e-150


def _miller_start(nmax, amax):
    m = int(max(nmax, amax)) + 25 + int(6 * math.sqrt(max(nmax, amax, 1.0)))
    return m + (m % 2)


def _bessel_table(z, nmax, modified):
    """Orders 0..nmax of J_n (modified=False) or I_n (modified=True) at z.

    ``z`` must be nonzero and, for the modified case, have Re z >= 0.
    Returns an array of shape (nmax + 1,) + z.shape.
    """
    m = _miller_start(nmax, float(np.max(np.abs(z))) if z.size else 0.0)
    sign = 1.0 if modified else -1.0
    table = np.zeros((nmax + 1,) + z.shape, dtype=z.dtype)
    f_next = np.zeros_like(z)
    f_cur = np.full_like(z, 1e-300)
    # Neumann sums: J_0 + 2 sum J_2k = 1 and I_0 + 2 sum I_k = e^z
    norm = np.zeros_like(z)
    two_over_z = 2.0 / z
    for k in range(m, 0, -1):
        f_prev = k * two_over_z * f_cur + sign * f_next
        f_next, f_cur = f_cur, f_prev
        # f_cur now holds order k - 1
        if k - 1 <= nmax:
            table[k - 1] = f_cur
        if modified:
            norm = norm + (2.0 * f_cur if k - 1 > 0 else f_cur)
        elif (k - 1) % 2 == 0:
            norm = norm + (2.0 * f_cur if k - 1 > 0 else f_cur)
        big = np.abs(f_cur) > _RESCALE_AT
        if np.any(big):
            scale = np.where(big, _RESCALE_BY, 1.0)
            f_cur = f_cur * scale
            f_next = f_next * scale
            norm = norm * scale
            table *= scale
    if modified:
        return table * (np.exp(z) / norm)
    return table / norm


_SMALL_ARG = 1e-6


def _small_series(order, z, modified):
    """Three terms of sum (+-z^2/4)^k (z/2)^n / (k! (n+k)!) for |z| < 1e-6.

    The Miller recurrence would overflow at its first step for such
    arguments; the leading power is formed in log space so that it can
    underflow gracefully instead.
    """
    order = np.asarray(order)
    lead = np.exp(order * np.log(z / 2) - np.array([math.lgamma(k + 1) for k in order.ravel()]).reshape(order.shape))
    q = (z * z / 4) * (1.0 if modified else -1.0)
    return lead * (1 + q / (order + 1) * (1 + q / (2 * (order + 2))))


def _gather(table, order):
    idx = np.broadcast_to(order, table.shape[1:])
    return np.take_along_axis(table, idx[np.newaxis], axis=0)[0]


def bessel_j(n, x):
    """Bessel function of the first kind J_n(x), integer n, real x."""
    n = np.asarray(n)
    if not np.issubdtype(n.dtype, np.integer):
        if not np.all(n == np.round(n)):
            raise ValueError("bessel_j needs integer orders")
        n = n.astype(int)
    x = np.asarray(x, dtype=float)
    n, x = np.broadcast_arrays(n, x)
    order = np.abs(n)
    ax = np.abs(x)
    out = np.zeros(x.shape, dtype=float)
    zero = ax == 0
    out[zero & (order == 0)] = 1.0
    tiny = ~zero & (ax < _SMALL_ARG)
    if np.any(tiny):
        out[tiny] = _small_series(order[tiny], ax[tiny], modified=False)
    nz = ~zero & ~tiny
    if np.any(nz):
        xs = ax[nz]
        table = _bessel_table(xs, int(order[nz].max()), modified=False)
        out[nz] = _gather(table, order[nz])
    # J_{-n} = (-1)^n J_n and J_n(-x) = (-1)^n J_n(x)
    flip = ((n < 0) ^ (x < 0)) & (order % 2 == 1)
    out = np.where(flip, -out, out)
    return scalar_or_array(out)


def bessel_i_complex(n, z):
    """Modified Bessel function I_n(z), integer n, complex z."""
    n = np.asarray(n)
    if not np.issubdtype(n.dtype, np.integer):
        if not np.all(n == np.round(n)):
            raise ValueError("bessel_i_complex needs integer orders")
        n = n.astype(int)
    z = np.asarray(z, dtype=complex)
    n, z = np.broadcast_arrays(n, z)
    order = np.abs(n)
    # I_n(-z) = (-1)^n I_n(z) moves everything to Re z >= 0
    reflect = z.real < 0
    zr = np.where(reflect, -z, z)
    out = np.zeros(z.shape, dtype=complex)
    zero = zr == 0
    out[zero & (order == 0)] = 1.0
    tiny = ~zero & (np.abs(zr) < _SMALL_ARG)
    if np.any(tiny):
        out[tiny] = _small_series(order[tiny], zr[tiny], modified=True)
    nz = ~zero & ~tiny
    if np.any(nz):
        table = _bessel_table(zr[nz], int(order[nz].max()), modified=True)
        out[nz] = _gather(table, order[nz])
    out = np.where(reflect & (order % 2 == 1), -out, out)
    return scalar_or_array(out)


def bessel_j_complex(n, z):
    """J_n(z) for complex z through J_n(z) = i^-n I_n(i z)."""
    n = np.asarray(n)
    return scalar_or_array(np.asarray((1j) ** (-(n % 4)) * bessel_i_complex(n, 1j * np.asarray(z))))


_ERF_CF_DEPTH = 80


def _erf_series(x):
    # erf(x) = 2/sqrt(pi) * sum_k (-1)^k x^(2k+1) / (k! (2k+1))
    x2 = x * x
    term = x.copy()
    total = x.copy()
    for k in range(1, 60):
        term = -term * x2 / k
        total = total + term / (2 * k + 1)
    return 2.0 / math.sqrt(math.pi) * total


def _erfc_cf(x):
    # erfc(x) = exp(-x^2)/sqrt(pi) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    frac = np.zeros_like(x)
    for k in range(_ERF_CF_DEPTH, 0, -1):
        frac = (k / 2.0) / (x + frac)
    return np.exp(-x * x) / math.sqrt(math.pi) / (x + frac)


def erf(x):
    """Error function, absolute error below 1e-15 on the real line."""
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    out = np.empty_like(ax)
    small = ax <= 2.5
    out[small] = _erf_series(ax[small])
    large = ~small
    if np.any(large):
        out[large] = 1.0 - _erfc_cf(ax[large])
    out = np.where(np.isinf(ax), 1.0, out)
    return scalar_or_array(np.copysign(out, x))


def sinc(x):
    """Unnormalized sinc, sin(x)/x with sinc(0) = 1."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-4
    safe = np.where(small, 1.0, x)
    x2 = x * x
    out = np.where(small, 1.0 - x2 / 6.0 + x2 * x2 / 120.0, np.sin(safe) / safe)
    return scalar_or_array(out)
