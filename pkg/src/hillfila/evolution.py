"""Time advance of the transported relative vorticity.

Patches move their boundary nodes with classical RK4 (the quadrature mask is
rebuilt from the staged nodes at every stage), then remesh and snap to the
axis.  Blobs move with RK4 and keep their vorticity and 3D volume weights.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence, Union

import numpy as np

from .biot_savart import BlobSource, PatchSource, velocity_batch
from .geometry import R_AXIS_SNAP, Contour, remesh, self_intersects

log = logging.getLogger(__name__)


class StepError(RuntimeError):
    pass


class StepRejected(StepError):
    """The step produced a self-intersecting contour; retry with ``suggested_dt``."""

    def __init__(self, message: str, suggested_dt: float):
        super().__init__(message)
        self.suggested_dt = suggested_dt


class ResolutionExhausted(StepError):
    pass


@dataclass(frozen=True)
class PatchNumerics:
    h_min: float = 0.0125
    h_max: float = 0.05
    curvature_budget: float = 0.1
    h_quad: float = 1.0 / 64.0
    floor_levels: int = 6
    max_nodes: int = 20000
    frozen_stage_mask: bool = False


@dataclass(frozen=True)
class PatchState:
    t: float
    contours: tuple[Contour, ...]
    xi_value: float = 1.0

    def source(self, h_quad: float = 1.0 / 64.0, floor_levels: int = 6) -> PatchSource:
        return PatchSource(self.contours, self.xi_value, h_quad, floor_levels)


@dataclass(frozen=True)
class BlobState:
    t: float
    blobs: BlobSource
    reflections: int = 0

    def source(self, *_args, **_kw) -> BlobSource:
        return self.blobs


State = Union[PatchState, BlobState]


def _split(y: np.ndarray, sizes: Sequence[int]) -> list[np.ndarray]:
    return np.split(y, np.cumsum(sizes)[:-1])


def _patch_velocity(y: np.ndarray, sizes, xi, num: PatchNumerics, src=None) -> np.ndarray:
    if src is None:
        cs = tuple(Contour(part, closed=True) for part in _split(y, sizes))
        src = PatchSource(cs, xi, num.h_quad, num.floor_levels)
    return velocity_batch(src, y)


def _reflect(y: np.ndarray) -> np.ndarray:
    y = y.copy()
    np.abs(y[:, 0], out=y[:, 0])
    y[y[:, 0] < R_AXIS_SNAP, 0] = 0.0
    return y


def _rk4(y0: np.ndarray, dt: float, vel: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    k1 = vel(y0)
    k2 = vel(_reflect(y0 + 0.5 * dt * k1))
    k3 = vel(_reflect(y0 + 0.5 * dt * k2))
    k4 = vel(_reflect(y0 + dt * k3))
    y = y0 + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    # axis nodes carry u_r = 0 exactly and stay put in r
    y[y0[:, 0] == 0.0, 0] = 0.0
    return y


def step_patch(s: PatchState, dt: float, num: PatchNumerics = PatchNumerics()) -> PatchState:
    if dt < 0:
        raise ValueError("dt must be non-negative")
    if dt == 0:
        return s
    sizes = [len(c) for c in s.contours]
    y0 = np.concatenate([c.nodes for c in s.contours])
    frozen = s.source(num.h_quad, num.floor_levels) if num.frozen_stage_mask else None
    y = _rk4(y0, dt, lambda yy: _patch_velocity(yy, sizes, s.xi_value, num, frozen))
    y = _reflect(y)
    out = []
    for part in _split(y, sizes):
        c = remesh(Contour(part, closed=True), num.h_min, num.h_max, num.curvature_budget)
        if self_intersects(c):
            raise StepRejected(f"self-intersection at t={s.t + dt:.6g}", dt / 2.0)
        out.append(c)
    total = sum(len(c) for c in out)
    if total > num.max_nodes:
        raise ResolutionExhausted(f"resolution exhausted: {total} nodes > {num.max_nodes}")
    return PatchState(s.t + dt, tuple(out), s.xi_value)


def step_blobs(s: BlobState, dt: float) -> BlobState:
    if dt < 0:
        raise ValueError("dt must be non-negative")
    if dt == 0:
        return s
    b = s.blobs

    def vel(yy):
        src = BlobSource(yy[:, 0], yy[:, 1], b.xi, b.vol, b.core_radius)
        return velocity_batch(src, yy)

    y0 = np.column_stack([b.r, b.z])
    y = _rk4(y0, dt, vel)
    flipped = int(np.count_nonzero(y[:, 0] < 0.0))
    y = _reflect(y)
    nb = BlobSource(y[:, 0], y[:, 1], b.xi, b.vol, b.core_radius)
    return BlobState(s.t + dt, nb, s.reflections + flipped)


def step(s: State, dt: float, num: PatchNumerics = PatchNumerics()) -> State:
    if isinstance(s, PatchState):
        return step_patch(s, dt, num)
    return step_blobs(s, dt)


@dataclass
class RunResult:
    states: list = field(default_factory=list)
    records: list = field(default_factory=list)
    status: str = "completed"
    message: str = ""
    final: State | None = None

    @property
    def completed(self) -> bool:
        return self.status == "completed"


def _advance(s: State, dt: float, num: PatchNumerics, depth: int, max_halvings: int) -> State:
    try:
        return step(s, dt, num)
    except StepRejected as exc:
        if depth >= max_halvings:
            raise
        log.debug("step rejected at t=%g (%s); halving", s.t, exc)
        half = exc.suggested_dt
        mid = _advance(s, half, num, depth + 1, max_halvings)
        return _advance(mid, dt - half, num, depth + 1, max_halvings)


def run(s0: State, dt: float, t_end: float, *, numerics: PatchNumerics = PatchNumerics(),
        observers: Iterable[Callable[[State], object]] = (), observe_every: int = 1,
        snapshot_every: int = 0, on_snapshot: Callable[[State, int], None] | None = None,
        max_halvings: int = 5) -> RunResult:
    """Fixed-step loop to ``t_end``.

    Observers are called on the initial state and every ``observe_every``
    steps (and on the last state); whatever they return that is not None is
    collected in ``records``.  Snapshots (kept in ``states`` and passed to
    ``on_snapshot``) follow ``snapshot_every``.  A run whose contours keep
    self-touching after ``max_halvings`` step halvings stops cleanly with
    status ``"self-touch"``; other step errors propagate.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if t_end < 0:
        raise ValueError("t_end must be non-negative")
    observers = list(observers)
    res = RunResult()
    nsteps = int(math.ceil(t_end / dt - 1e-9)) if t_end > 0 else 0
    t0 = s0.t

    def observe(st):
        for obs in observers:
            rec = obs(st)
            if rec is not None:
                res.records.append(rec)

    def snapshot(st, k):
        res.states.append(st)
        if on_snapshot is not None:
            on_snapshot(st, k)

    s = s0
    observe(s)
    if snapshot_every:
        snapshot(s, 0)
    for k in range(1, nsteps + 1):
        t_target = min(t0 + k * dt, t0 + t_end)
        h = t_target - s.t
        try:
            s = _advance(s, h, numerics, 0, max_halvings)
        except StepRejected as exc:
            res.status = "self-touch"
            res.message = f"stopped at t={s.t:.6g}: filament self-touch ({exc})"
            log.warning(res.message)
            break
        s = replace(s, t=t_target)
        last = k == nsteps
        if k % observe_every == 0 or last:
            observe(s)
        if snapshot_every and (k % snapshot_every == 0 or last):
            snapshot(s, k)
    res.final = s
    return res
