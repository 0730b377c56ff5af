"""Complete elliptic integrals K(m), E(m) by the arithmetic-geometric mean.

Parameter convention throughout the package: ``m = k**2``.  The jitted
helpers take the complementary parameter ``m1 = 1 - m`` because the ring
kernels can form it without cancellation near the singular limit.
"""

import math

import numba
import numpy as np

_HALF_PI = 0.5 * math.pi
_AGM_TOL = 1e-15


@numba.njit(cache=True, fastmath=False)
def ellip_ke_comp(m1):
    """(K, E) as functions of the complementary parameter m1 = 1 - m, 0 < m1 <= 1."""
    a = 1.0
    b = math.sqrt(m1)
    m = 1.0 - m1
    # E = K * (1 - sum_n 2**(n-1) c_n**2), c_0**2 = m
    acc = 0.5 * m
    weight = 0.5
    for _ in range(40):
        c = 0.5 * (a - b)
        a_next = 0.5 * (a + b)
        b = math.sqrt(a * b)
        a = a_next
        weight *= 2.0
        acc += weight * c * c
        if abs(c) <= _AGM_TOL * a:
            break
    k = _HALF_PI / a
    return k, k * (1.0 - acc)


def elliptic_KE(m):
    """Complete elliptic integrals of the first and second kind, K(m) and E(m).

    Accepts a scalar or array ``m`` in [0, 1).  Raises ``ValueError`` for
    ``m >= 1`` (kernel singularity) and for negative ``m``.
    """
    arr = np.asarray(m, dtype=float)
    if np.any(arr < 0.0):
        raise ValueError("elliptic parameter m must be >= 0")
    if np.any(arr >= 1.0):
        raise ValueError("kernel singularity: elliptic parameter m >= 1")
    if arr.ndim == 0:
        return ellip_ke_comp(1.0 - float(arr))
    k, e = _ke_vec(1.0 - arr.ravel())
    return k.reshape(arr.shape), e.reshape(arr.shape)


@numba.njit(cache=True)
def _ke_vec(m1):
    k = np.empty_like(m1)
    e = np.empty_like(m1)
    for i in range(m1.size):
        k[i], e[i] = ellip_ke_comp(m1[i])
    return k, e
