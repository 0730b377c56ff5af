"""Analytic-oracle checks run by ``hillfila validate``."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .biot_savart import PatchSource, stream_at, velocity_batch
from .diagnostics import estimate_tau
from .elliptic import elliptic_KE
from .evolution import PatchNumerics, PatchState, run
from .geometry import AxiBall, remesh, revolved_volume
from .hill import (W_HILL, axis_trajectory_exterior, axis_trajectory_interior, axis_velocity,
                   hill_velocity, overlap_f)

W = float(W_HILL)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    limit: float
    seconds: float

    def row(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"{flag}  {self.name:<42s} {self.value:12.4e}  (limit {self.limit:.1e}, {self.seconds:.1f}s)"


def rk4_axis(z0: float, t_end: float, dt: float = 1e-3) -> float:
    f = lambda z: float(axis_velocity(z))
    z = z0
    for _ in range(int(round(t_end / dt))):
        k1 = f(z)
        k2 = f(z + 0.5 * dt * k1)
        k3 = f(z + 0.5 * dt * k2)
        k4 = f(z + dt * k3)
        z += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return z


def gauss_legendre_KE(m: float, n: int = 64) -> tuple[float, float]:
    x, w = np.polynomial.legendre.leggauss(n)
    th = 0.25 * math.pi * (x + 1.0)
    s = 1.0 - m * np.sin(th) ** 2
    return (0.25 * math.pi * float(np.sum(w / np.sqrt(s))),
            0.25 * math.pi * float(np.sum(w * np.sqrt(s))))


def _hill_source(h_quad: float, nodes: int = 1024) -> PatchSource:
    return PatchSource((AxiBall().contour(nodes),), 1.0, h_quad)


def check_biot_savart(h_quad: float = 1.0 / 64.0, n: int = 21) -> float:
    rs = np.linspace(0.0, 2.0, n)
    zs = np.linspace(-2.0, 2.0, n)
    rr, zz = (a.ravel() for a in np.meshgrid(rs, zs))
    keep = np.abs(np.hypot(rr, zz) - 1.0) > 2.0 * h_quad
    pts = np.column_stack([rr[keep], zz[keep]])
    u = velocity_batch(_hill_source(h_quad), pts)
    ur, uz = hill_velocity((pts[:, 0], pts[:, 1]))
    err = np.hypot(u[:, 0] - ur, u[:, 1] - uz)
    return float(err.max() / np.hypot(ur, uz).max())


def check_stream(h_quad: float = 1.0 / 64.0) -> float:
    return abs(stream_at(_hill_source(h_quad), (1.0, 0.0)) * 15.0 - 1.0)


def check_interior_trajectory() -> float:
    return abs(float(axis_trajectory_interior(0.0, 5.0)) - rk4_axis(0.0, 5.0))


def check_exterior_trajectory() -> float:
    z = float(axis_trajectory_exterior(1.5, 100.0))
    return 0.0 if 1.0 < z < 1.001 else abs(z - 1.0)


def check_overlap(samples: int = 1_000_000, seed: int = 12345) -> float:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for tau in (0.5, 1.0, 1.5, 2.0):
        # box [-1, 1]^2 x [-1, 1 + tau] holds both balls
        p = rng.uniform([-1, -1, -1], [1, 1, 1 + tau], size=(samples, 3))
        a = np.sum(p ** 2, axis=1) < 1.0
        p[:, 2] -= tau
        b = np.sum(p ** 2, axis=1) < 1.0
        est = np.count_nonzero(a ^ b) / samples * 4.0 * (2.0 + tau)
        worst = max(worst, abs(est / float(overlap_f(tau)) - 1.0))
    return worst


def check_elliptic() -> float:
    worst = 0.0
    for m in (0.0, 0.1, 0.5, 0.9):
        k, e = elliptic_KE(m)
        kq, eq = gauss_legendre_KE(m)
        worst = max(worst, abs(k - kq) / kq, abs(e - eq) / eq)
    return worst


def check_short_run(t_end: float = 0.5, dt: float = 0.05) -> float:
    num = PatchNumerics(h_quad=1.0 / 64.0)
    c = remesh(AxiBall().contour(128), num.h_min, num.h_max, num.curvature_budget)
    s0 = PatchState(0.0, (c,))
    res = run(s0, dt, t_end, numerics=num)
    v0, v1 = revolved_volume(s0.contours[0]), revolved_volume(res.final.contours[0])
    tau = estimate_tau(res.final, 0.0)
    return max(abs(v1 / v0 - 1.0), abs(tau / (W * t_end) - 1.0) / 5.0)


CHECKS: list[tuple[str, Callable[[], float], float]] = [
    ("elliptic K,E vs Gauss-Legendre", check_elliptic, 1e-12),
    ("Biot-Savart vs Hill velocity (h=1/64)", check_biot_savart, 2e-2),
    ("stream function psi(1,0) vs 1/15", check_stream, 1e-2),
    ("interior axis trajectory vs RK4", check_interior_trajectory, 1e-8),
    ("exterior axis trajectory z0=1.5", check_exterior_trajectory, 1e-12),
    ("overlap f(tau) vs Monte Carlo (1e6)", check_overlap, 1e-2),
    ("short Hill run: volume, speed", check_short_run, 1e-2),
]


def run_validation(echo: Callable[[str], None] = print) -> list[CheckResult]:
    results = []
    for name, fn, limit in CHECKS:
        t0 = time.perf_counter()
        try:
            val = float(fn())
        except Exception as exc:  # a crashing check is a failed check
            echo(f"FAIL  {name}: {exc!r}")
            results.append(CheckResult(name, False, math.nan, limit, time.perf_counter() - t0))
            continue
        res = CheckResult(name, val <= limit, val, limit, time.perf_counter() - t0)
        echo(res.row())
        results.append(res)
    return results
