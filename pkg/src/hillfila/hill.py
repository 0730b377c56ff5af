"""Closed-form Hill's spherical vortex: the exact oracle for the numerics.

The vortex is the unit-strength indicator of the unit ball, travelling along
+z at ``W = 2/15``.  Points exactly on the unit sphere take the interior
branch (both branches agree there for the continuous quantities).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.integrate import solve_ivp

W_HILL = Fraction(2, 15)


@dataclass(frozen=True)
class HillConstants:
    W: float = float(W_HILL)
    strength: float = 1.0


HILL = HillConstants()


def _rz(p):
    return np.asarray(p[0], dtype=float), np.asarray(p[1], dtype=float)


def hill_xi(p, const: HillConstants = HILL):
    """Relative vorticity: strength inside the open unit ball, 0 outside.

    The value on the sphere itself is unspecified (measure zero); this
    implementation returns 0 there.
    """
    r, z = _rz(p)
    return np.where(r * r + z * z < 1.0, const.strength, 0.0)[()]


def hill_stream(p, const: HillConstants = HILL):
    r, z = _rz(p)
    x2 = r * r + z * z
    inside = x2 <= 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        ext = 0.5 * const.W * r * r / x2 ** 1.5
    out = np.where(inside, 0.5 * const.W * r * r * (2.5 - 1.5 * x2), ext)
    return out[()]


def hill_velocity(p, const: HillConstants = HILL):
    """(u_r, u_z) of Hill's vortex in the lab frame."""
    r, z = _rz(p)
    W = const.W
    x2 = r * r + z * z
    inside = x2 <= 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        x5 = x2 ** 2.5
        x3 = x2 ** 1.5
        ur_ext = 1.5 * W * r * z / x5
        uz_ext = W / x3 * (1.0 - 1.5 * r * r / x2)
    ur = np.where(inside, 1.5 * W * r * z, ur_ext)
    uz = np.where(inside, 0.5 * W * (5.0 - 3.0 * x2 - 3.0 * r * r), uz_ext)
    return ur[()], uz[()]


def comoving_stream(p, const: HillConstants = HILL):
    """Stream function in the frame moving with the vortex; zero on the sphere and axis."""
    r, z = _rz(p)
    W = const.W
    x2 = r * r + z * z
    inside = x2 <= 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        ext = 0.5 * W * r * r * (1.0 / x2 ** 1.5 - 1.0)
    out = np.where(inside, 0.5 * W * r * r * 1.5 * (1.0 - x2), ext)
    return out[()]


def axis_velocity(z, const: HillConstants = HILL):
    """Co-moving axial velocity on r = 0: u_z(0, z) - W."""
    z = np.asarray(z, dtype=float)
    W = const.W
    az = np.abs(z)
    with np.errstate(divide="ignore", invalid="ignore"):
        ext = W / az ** 3 * (1.0 - az ** 3)
    return np.where(az <= 1.0, 1.5 * W * (1.0 - z * z), ext)[()]


def axis_trajectory_interior(z0: float, t, const: HillConstants = HILL):
    """Closed-form co-moving axial trajectory for |z0| < 1."""
    if not abs(z0) < 1.0:
        raise ValueError("outside interior case: need |z0| < 1")
    t = np.asarray(t, dtype=float)
    c = 0.5 * math.log((1.0 - z0) / (1.0 + z0))
    # (e^{3Wt} - e^{2c}) / (e^{3Wt} + e^{2c}) written without overflow
    return np.tanh(1.5 * const.W * t - c)[()]


def axis_trajectory_exterior(z0: float, t, const: HillConstants = HILL, rtol: float = 1e-10):
    """Co-moving axial trajectory for |z0| > 1, integrated numerically.

    Uses an adaptive embedded Runge-Kutta integrator (DOP853) at ``rtol``.
    """
    if not abs(z0) > 1.0:
        raise ValueError("outside exterior case: need |z0| > 1")
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t_arr < 0):
        raise ValueError("t must be >= 0")
    t_end = float(t_arr.max())
    if t_end == 0.0:
        out = np.full(t_arr.shape, float(z0))
    else:
        sol = solve_ivp(lambda _t, y: [float(axis_velocity(y[0], const))], (0.0, t_end), [z0],
                        method="DOP853", rtol=rtol, atol=1e-14, dense_output=True)
        out = sol.sol(t_arr)[0]
    return out[0] if np.ndim(t) == 0 else out


def overlap_f(tau):
    """Volume of the symmetric difference of the unit ball and its shift by tau."""
    a = np.abs(np.asarray(tau, dtype=float))
    return np.where(a <= 2.0, math.pi / 6.0 * a * (12.0 - a * a), 8.0 * math.pi / 3.0)[()]


# closed-form integrals of the Hill vortex used by the monitors
HILL_L1 = 4.0 * math.pi / 3.0          # |B|
HILL_R2_L1 = 8.0 * math.pi / 15.0      # int_B r^2 dx
HILL_IMPULSE = 0.5 * HILL_R2_L1
HILL_UMAX = 2.5 * float(W_HILL)        # |u| is largest at the centre
