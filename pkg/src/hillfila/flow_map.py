"""Particle paths through a sampled velocity history, and axis-fate classification."""

from __future__ import annotations

import bisect
import csv
import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .biot_savart import VorticitySource, velocity_batch
from .geometry import R_AXIS_SNAP, HalfPlanePoint


class Interpolation(enum.Enum):
    CONSTANT = "piecewise-constant-in-t"
    LINEAR = "linear-in-t"


class Fate(enum.Enum):
    TAIL = "Tail"
    INTERIOR_TO_FRONT = "Interior-to-Front"
    AHEAD_TO_FRONT = "Ahead-to-Front"


@dataclass(frozen=True)
class VelocityHistory:
    times: tuple[float, ...]
    sources: tuple[VorticitySource, ...]
    interpolation: Interpolation = Interpolation.LINEAR

    def __post_init__(self):
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        object.__setattr__(self, "sources", tuple(self.sources))
        if len(self.times) != len(self.sources) or not self.times:
            raise ValueError("history needs one source per time and at least one entry")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("history times must be strictly increasing")

    @property
    def span(self) -> tuple[float, float]:
        return self.times[0], self.times[-1]

    def velocity(self, t: float, pts) -> np.ndarray:
        t0, t1 = self.span
        tol = 1e-9 * max(1.0, abs(t1))
        if t < t0 - tol or t > t1 + tol:
            raise ValueError(f"t={t:.6g} outside history span [{t0:.6g}, {t1:.6g}]")
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        k = min(max(bisect.bisect_right(self.times, t) - 1, 0), len(self.times) - 1)
        u0 = velocity_batch(self.sources[k], pts)
        if self.interpolation is Interpolation.CONSTANT or k + 1 == len(self.times):
            return u0
        ta, tb = self.times[k], self.times[k + 1]
        th = (t - ta) / (tb - ta)
        if th <= 0.0:
            return u0
        u1 = velocity_batch(self.sources[k + 1], pts)
        return (1.0 - th) * u0 + th * u1


def _snap(y: np.ndarray) -> np.ndarray:
    y[:, 0] = np.abs(y[:, 0])
    y[y[:, 0] < R_AXIS_SNAP, 0] = 0.0
    return y


def advect_many(h: VelocityHistory, t0: float, x0, t1: float, dt: float):
    """RK4 paths of several seeds at once: returns (times, positions[n_t, n_seed, 2])."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    lo, hi = h.span
    tol = 1e-9 * max(1.0, abs(hi))
    if not (lo - tol <= t0 <= hi + tol and lo - tol <= t1 <= hi + tol):
        raise ValueError("query outside history span")
    if t1 < t0:
        raise ValueError("backward advection is not supported")
    y = np.array(x0, dtype=float).reshape(-1, 2)
    if np.any(y[:, 0] < 0):
        raise ValueError("seed with r < 0")
    on_axis = y[:, 0] == 0.0
    n = int(math.ceil((t1 - t0) / dt - 1e-9)) if t1 > t0 else 0
    times = [t0]
    out = [y.copy()]
    t = t0
    for k in range(1, n + 1):
        tn = min(t0 + k * dt, t1)
        s = tn - t
        k1 = h.velocity(t, y)
        k2 = h.velocity(t + 0.5 * s, _snap(y + 0.5 * s * k1))
        k3 = h.velocity(t + 0.5 * s, _snap(y + 0.5 * s * k2))
        k4 = h.velocity(tn, _snap(y + s * k3))
        y = _snap(y + s / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4))
        y[on_axis, 0] = 0.0
        t = tn
        times.append(t)
        out.append(y.copy())
    return np.array(times), np.array(out)


def advect(h: VelocityHistory, t0: float, x0, t1: float, dt: float
           ) -> list[tuple[float, HalfPlanePoint]]:
    times, ys = advect_many(h, t0, [tuple(x0)], t1, dt)
    return [(float(t), HalfPlanePoint(float(p[0, 0]), float(p[0, 1]))) for t, p in zip(times, ys)]


def classify_axis_fate(path: Sequence[tuple[float, HalfPlanePoint]], tau_series,
                       margin: float = 0.1, tol: float = 1e-3) -> Fate:
    """Classify an axis path by the relative position z - tau(t).

    ``tau_series`` is a pair (times, taus), interpolated linearly; ``tol``
    absorbs the noise of the shift estimate in the monotonicity checks.
    """
    t = np.array([p[0] for p in path], dtype=float)
    r = np.array([p[1][0] for p in path], dtype=float)
    z = np.array([p[1][1] for p in path], dtype=float)
    if np.any(r != 0.0):
        raise ValueError("path leaves the axis")
    ts, taus = (np.asarray(a, dtype=float) for a in tau_series)
    rel = z - np.interp(t, ts, taus)
    steps = np.diff(rel)
    decreasing = bool(np.all(steps <= tol)) and rel[-1] < rel[0]
    increasing = bool(np.all(steps >= -tol)) and rel[-1] > rel[0]
    in_band = np.abs(rel - 1.0) <= margin
    if decreasing and np.all(rel < -1.0):
        return Fate.TAIL
    if increasing and rel[0] < 1.0 and in_band.any():
        return Fate.INTERIOR_TO_FRONT
    if decreasing and rel[0] > 1.0 and in_band.any():
        return Fate.AHEAD_TO_FRONT
    raise ValueError("axis path fits none of the three fates")


def first_front_time(path, tau_series, margin: float = 0.1) -> float:
    """First sample time at which z - tau lies within ``margin`` of +1 (nan if never)."""
    ts, taus = (np.asarray(a, dtype=float) for a in tau_series)
    for t, p in path:
        if abs(p[1] - float(np.interp(t, ts, taus)) - 1.0) <= margin:
            return float(t)
    return math.nan


def write_path_csv(path_file, path) -> None:
    with open(path_file, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "r", "z"])
        for t, p in path:
            w.writerow(["%.17g" % t, "%.17g" % p[0], "%.17g" % p[1]])


def read_path_csv(path_file) -> list[tuple[float, HalfPlanePoint]]:
    with open(path_file, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [(float(r["t"]), HalfPlanePoint(float(r["r"]), float(r["z"]))) for r in rows]
