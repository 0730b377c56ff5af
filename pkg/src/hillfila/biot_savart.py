"""Axisymmetric Biot-Savart evaluation u = K[xi] for patch and blob sources.

Patches are integrated by a midpoint rule over lattice cells of side
``h_quad``; partially covered cells use their exactly clipped area and
centroid, and cells near each target are split recursively down to
``h_quad / 2**floor_levels``.  Blobs sum regularized ring kernels with the
squared axial offset replaced by ``dz**2 + core_radius**2``.

Summation order is fixed (raster order over cells, storage order over
blobs), so batch results are bit-identical to target-by-target evaluation.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence, Union

import numba
import numpy as np

from . import _kernels as _k
from .elliptic import elliptic_KE
from .geometry import Contour, GeometryError, moments

__all__ = [
    "PatchSource", "BlobSource", "VorticitySource", "elliptic_KE", "ring_stream_kernel",
    "ring_velocity_kernel", "stream_at", "velocity_at", "velocity_batch", "stream_batch",
    "feng_sverak_bound", "set_threads",
]


if "NUMBA_THREADING_LAYER" not in os.environ:
    # skip TBB: an outdated system TBB only produces a warning before falling back
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]


def set_threads(n: int | None = None) -> int:
    """Cap numba worker threads (``HILLFILA_THREADS`` by default)."""
    if n is None:
        env = os.environ.get("HILLFILA_THREADS")
        if not env:
            return numba.get_num_threads()
        n = int(env)
    n = max(1, min(int(n), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(n)
    return n


@dataclass(frozen=True, eq=False)
class PatchSource:
    """Constant relative vorticity ``xi_value`` inside disjoint closed contours."""

    contours: tuple[Contour, ...]
    xi_value: float = 1.0
    h_quad: float = 1.0 / 64.0
    floor_levels: int = 6

    def __post_init__(self):
        cs = tuple(self.contours) if not isinstance(self.contours, Contour) else (self.contours,)
        object.__setattr__(self, "contours", cs)
        if not cs:
            raise GeometryError("empty geometry")
        for c in cs:
            if not c.closed or len(c) < 3:
                raise GeometryError("patch contours must be closed with >= 3 nodes")
        if not self.h_quad > 0:
            raise ValueError("h_quad must be positive")

    @cached_property
    def mask(self):
        vr = np.concatenate([c.nodes[:, 0] for c in self.contours])
        vz = np.concatenate([c.nodes[:, 1] for c in self.contours])
        lens = np.array([len(c) for c in self.contours], dtype=np.int64)
        starts = np.concatenate([[0], np.cumsum(lens)[:-1]]).astype(np.int64)
        return _k.build_mask(vr, vz, starts, lens, float(self.h_quad), float(self.xi_value))

    @property
    def floor(self) -> float:
        return self.h_quad / 2.0 ** self.floor_levels

    def translated(self, dz: float) -> "PatchSource":
        return PatchSource(tuple(c.translated(dz) for c in self.contours), self.xi_value,
                           self.h_quad, self.floor_levels)

    # integrals of xi over R^3 (exact for the polygons)
    def l1(self) -> float:
        return abs(self.xi_value) * sum(2 * math.pi * moments(c)[1] for c in self.contours)

    def l1_r2(self) -> float:
        return abs(self.xi_value) * sum(2 * math.pi * moments(c)[3] for c in self.contours)

    def linf(self) -> float:
        return abs(self.xi_value)


@dataclass(frozen=True, eq=False)
class BlobSource:
    """Lagrangian blobs: positions, relative vorticity, 3D volume weights.

    ``core_radius`` is a scalar or one value per blob (mixed-resolution
    seeding); it is stored per blob either way.
    """

    r: np.ndarray
    z: np.ndarray
    xi: np.ndarray
    vol: np.ndarray
    core_radius: np.ndarray | float

    def __post_init__(self):
        for name in ("r", "z", "xi", "vol"):
            a = np.ascontiguousarray(np.asarray(getattr(self, name), dtype=float).ravel())
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if not (self.r.shape == self.z.shape == self.xi.shape == self.vol.shape):
            raise ValueError("blob arrays must share one shape")
        core = np.ascontiguousarray(np.broadcast_to(
            np.asarray(self.core_radius, dtype=float), self.r.shape))
        core.setflags(write=False)
        object.__setattr__(self, "core_radius", core)
        if np.any(self.vol <= 0):
            raise ValueError("blob volume weights must be positive")
        if np.any(~(self.core_radius > 0)):
            raise ValueError("core_radius must be positive")
        if np.any(self.r < 0):
            raise ValueError("blob r must be >= 0")

    def __len__(self):
        return self.r.size

    @property
    def area(self) -> np.ndarray:
        """Meridional area weight dr dz recovered from the conserved 3D volume."""
        with np.errstate(divide="ignore"):
            return self.vol / (2.0 * math.pi * self.r)

    @property
    def circulation(self) -> np.ndarray:
        # omega_theta dr dz = r xi dr dz = xi dV / (2 pi)
        return self.xi * self.vol / (2.0 * math.pi)

    def translated(self, dz: float) -> "BlobSource":
        return BlobSource(self.r, self.z + dz, self.xi, self.vol, self.core_radius)

    def l1(self) -> float:
        return float(np.sum(np.abs(self.xi) * self.vol))

    def l1_r2(self) -> float:
        return float(np.sum(self.r ** 2 * np.abs(self.xi) * self.vol))

    def linf(self) -> float:
        return float(np.max(np.abs(self.xi))) if self.xi.size else 0.0


VorticitySource = Union[PatchSource, BlobSource]


def _ring_check(r, rp, dz):
    if r < 0 or not rp > 0:
        raise ValueError("need r >= 0 and rp > 0")
    if r == rp and dz == 0:
        raise ValueError("coincident source and target: kernel is singular")


def ring_stream_kernel(r: float, rp: float, dz: float) -> float:
    """Green's function G with psi(r, z) = int G(r, r', z - z') omega_theta(r', z') dr' dz'.

    Full-precision reference (AGM); the quadrature sums use a faster jitted
    form of the same expression.
    """
    _ring_check(r, rp, dz)
    a = (r + rp) ** 2 + dz * dz
    m = 4.0 * r * rp / a
    if m == 0.0:
        return 0.0
    if m < _k.SMALL_M:
        bracket = math.pi / 32.0 * m * m * _k._horner(_k._PSI_C, m)
    else:
        k, e = elliptic_KE(m)
        bracket = (1.0 - 0.5 * m) * k - e
    return math.sqrt(a) / (2.0 * math.pi) * bracket


def ring_velocity_kernel(r: float, rp: float, dz: float) -> tuple[float, float]:
    """(u_r, u_z) at (r, z) per unit circulation of a ring at (rp, z - dz)."""
    _ring_check(r, rp, dz)
    s = r * r + rp * rp + dz * dz
    a = s + 2.0 * r * rp
    bq = (r - rp) ** 2 + dz * dz
    m = 4.0 * r * rp / a
    k, e = elliptic_KE(m)
    pref = 1.0 / (2.0 * math.pi * math.sqrt(a))
    uz = pref * (k + (rp * rp - r * r - dz * dz) / bq * e)
    if r == 0.0:
        return 0.0, uz
    if m < _k.SMALL_M:
        bracket = 3.0 * math.pi / 32.0 * m * m * _k._horner(_k._UR_C, m)
    else:
        bracket = -k + s / bq * e
    return pref * (dz / r) * bracket, uz


def _targets(targets) -> tuple[np.ndarray, np.ndarray]:
    t = np.asarray(targets, dtype=float).reshape(-1, 2)
    if np.any(t[:, 0] < 0):
        raise ValueError("targets must have r >= 0")
    return np.ascontiguousarray(t[:, 0]), np.ascontiguousarray(t[:, 1])


def _evaluate(src: VorticitySource, targets, want_psi: bool) -> np.ndarray:
    tr, tz = _targets(targets)
    if isinstance(src, PatchSource):
        m = src.mask
        return _k.patch_batch(tr, tz, float(src.h_quad), float(src.xi_value), m[0], m[1], m[2],
                              m[3], m[4], m[5], m[7], m[8], m[9], m[10], m[11], m[12],
                              float(src.floor), want_psi)
    if isinstance(src, BlobSource):
        return _k.blob_batch(tr, tz, src.r, src.z, src.circulation, src.core_radius,
                             want_psi)
    raise TypeError(f"unknown vorticity source {type(src).__name__}")


def velocity_batch(src: VorticitySource, targets) -> np.ndarray:
    """Velocities (N, 2) = (u_r, u_z) at the targets; parallel over targets."""
    return _evaluate(src, targets, False)


def stream_batch(src: VorticitySource, targets) -> np.ndarray:
    return _evaluate(src, targets, True)[:, 0]


def velocity_at(src: VorticitySource, p) -> tuple[float, float]:
    u = velocity_batch(src, [p])[0]
    return float(u[0]), float(u[1])


def stream_at(src: VorticitySource, p) -> float:
    return float(stream_batch(src, [p])[0])


def feng_sverak_bound(l1: float, l1w: float, linf: float, c0: float) -> float:
    """c0 * |r^2 xi|_1^(1/4) * |xi|_1^(1/4) * |xi|_inf^(1/2)."""
    if min(l1, l1w, linf) < 0:
        raise ValueError("norms must be non-negative")
    if not c0 > 0:
        raise ValueError("c0 must be positive")
    return c0 * l1w ** 0.25 * l1 ** 0.25 * linf ** 0.5
