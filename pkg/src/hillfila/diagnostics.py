"""Diagnostics: shift tracking, geometry growth, conserved quantities, monitors.

All volume integrals carry the 2 pi r meridional weight.
"""

from __future__ import annotations

import csv
import math
from dataclasses import astuple, dataclass, fields
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from . import _kernels as _k
from .biot_savart import BlobSource, PatchSource, stream_batch, velocity_batch
from .evolution import BlobState, PatchState
from .geometry import Contour, arc_length, distance_to_segments, moments, revolved_diameter
from .hill import HILL_L1, HILL_R2_L1, HILL_UMAX, W_HILL

W = float(W_HILL)
JUMP_GUARD = 0.5
BALL_NODES = 2048

# Feng-Sverak ratio of the Hill vortex itself, the reference value for the monitor
C0_HILL = HILL_UMAX / (HILL_R2_L1 ** 0.25 * HILL_L1 ** 0.25)


class ShiftTrackingLost(RuntimeError):
    pass


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    tau: float
    speed_residual: float
    diameter: float
    perimeter: float
    r_ins: float
    impulse: float
    energy: float
    l1: float
    l2: float
    linf: float
    sup_vorticity: float
    max_dr_xi: float
    fs_ratio: float


CSV_HEADER = [f.name for f in fields(DiagnosticsRecord)]


class ConservedQuantities(NamedTuple):
    impulse: float
    energy: float
    l1: float
    l2: float
    linf: float


# ---------------------------------------------------------------------------
# discrepancy against the shifted Hill vortex

def _ball_polygon(tau: float, n: int = BALL_NODES):
    th = np.linspace(0.0, math.pi, n + 1)
    qr = np.sin(th)
    qz = tau - np.cos(th)
    qr[0] = qr[-1] = 0.0
    return np.ascontiguousarray(qr), np.ascontiguousarray(qz)


def _patch_parts(s: PatchState, tau: float, nball: int):
    qr, qz = _ball_polygon(tau, nball)
    _, b_r, _, b_r3 = _k.poly_moments(qr, qz, qr.size)
    a_r = a_r3 = i_r = i_r3 = 0.0
    for c in s.contours:
        xr = np.ascontiguousarray(c.nodes[:, 0])
        xz = np.ascontiguousarray(c.nodes[:, 1])
        cap = 4 * (xr.size + qr.size)
        br, bz, cr, cz = (np.empty(cap) for _ in range(4))
        k = _k.clip_convex(xr, xz, xr.size, qr, qz, qr.size, br, bz, cr, cz)
        _, m1, _, m3 = _k.poly_moments(xr, xz, xr.size)
        a_r += m1
        a_r3 += m3
        if k >= 3:
            _, m1, _, m3 = _k.poly_moments(br, bz, k)
            i_r += m1
            i_r3 += m3
    xi = s.xi_value
    tp = 2.0 * math.pi
    # regions A\B, A&B, B\A carry |xi|, |xi - 1|, 1
    va, vi, vb = tp * (a_r - i_r), tp * i_r, tp * (b_r - i_r)
    wa, wi, wb = tp * (a_r3 - i_r3), tp * i_r3, tp * (b_r3 - i_r3)
    l1 = abs(xi) * va + abs(xi - 1.0) * vi + vb
    l2 = math.sqrt(max(xi * xi * va + (xi - 1.0) ** 2 * vi + vb, 0.0))
    r2 = abs(xi) * wa + abs(xi - 1.0) * wi + wb
    return l1, l2, r2


@dataclass(frozen=True)
class _BlobGrid:
    """Blob field smoothed onto cell centres ((i + 1/2) h, z0 + (k + 1/2) h)."""

    h: float
    z0: float
    rc: np.ndarray
    zc: np.ndarray
    field: np.ndarray

    @classmethod
    def build(cls, b: BlobSource, zlo: float, zhi: float, h: float | None = None):
        eps = b.core_radius / 2.0
        if h is None:
            h = 0.5 * float(np.median(eps))
        eps = np.maximum(eps, h)
        pad = 2.0 * float(eps.max()) + h
        rmax = max(float(b.r.max()) + pad, 1.0 + 2 * h)
        z0 = min(float(b.z.min()) - pad, zlo - 2 * h)
        z1 = max(float(b.z.max()) + pad, zhi + 2 * h)
        nr = int(math.ceil(rmax / h))
        nz = int(math.ceil((z1 - z0) / h))
        q = b.xi * b.vol / (2.0 * math.pi * np.maximum(b.r, 1e-300))
        q = np.where(b.r > 0, q, 0.0)
        f = _k.deposit(0.5 * h, z0 + 0.5 * h, h, nr, nz, b.r, b.z, q, eps)
        rc = (np.arange(nr) + 0.5) * h
        zc = z0 + (np.arange(nz) + 0.5) * h
        return cls(h, z0, rc, zc, f)

    def parts(self, tau: float):
        d = np.hypot(self.rc[:, None], self.zc[None, :] - tau) - 1.0
        frac = np.clip(0.5 - d / self.h, 0.0, 1.0)
        diff = self.field - frac
        w = 2.0 * math.pi * self.rc[:, None] * self.h * self.h
        ad = np.abs(diff)
        return (float(np.sum(ad * w)), math.sqrt(float(np.sum(diff * diff * w))),
                float(np.sum(ad * w * self.rc[:, None] ** 2)))


def discrepancy_parts(state, tau: float, *, ball_nodes: int = BALL_NODES,
                      h_eval: float | None = None) -> tuple[float, float, float]:
    """(L1, L2, r^2-weighted L1) of xi(. + tau e_z) - xi_H."""
    if isinstance(state, PatchState):
        return _patch_parts(state, tau, ball_nodes)
    return _BlobGrid.build(state.blobs, tau - 1.0, tau + 1.0, h_eval).parts(tau)


def discrepancy_norm(state, tau: float, **kw) -> float:
    return sum(discrepancy_parts(state, tau, **kw))


def golden_section(f, a: float, b: float, tol: float = 1e-6) -> float:
    """Minimizer of a unimodal f on [a, b] to absolute tolerance ``tol``."""
    g = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - g * (b - a)
    d = a + g * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def estimate_tau(state, tau_prev: float = 0.0, bracket: float = 0.5, tol: float = 1e-6,
                 **kw) -> float:
    """Warm-started golden-section minimizer of the discrepancy norm."""
    if isinstance(state, BlobState):
        grid = _BlobGrid.build(state.blobs, tau_prev - 2 * bracket - 1.0,
                               tau_prev + 2 * bracket + 1.0, kw.get("h_eval"))
        f = lambda tau: sum(grid.parts(tau))
    else:
        f = lambda tau: discrepancy_norm(state, tau, **kw)
    for b in (bracket, 2.0 * bracket):
        lo, hi = tau_prev - b, tau_prev + b
        x = golden_section(f, lo, hi, tol)
        if min(x - lo, hi - x) > 2.0 * tol:
            return x
    raise ShiftTrackingLost(f"shift tracking lost near tau={tau_prev:.6g}")


# ---------------------------------------------------------------------------
# geometry of the patch

def _contours(obj) -> Sequence[Contour]:
    if isinstance(obj, PatchState):
        return obj.contours
    if isinstance(obj, Contour):
        return (obj,)
    return tuple(obj)


def inscription_radius(c, h_ins: float = 0.01) -> float:
    """Radius of the largest axis-centred ball inside the patch (0 if it misses the axis)."""
    best = 0.0
    for con in _contours(c):
        for zlo, zhi in _merge(con.axis_segments()):
            if zhi - zlo <= 0:
                continue
            rho = lambda zc: float(distance_to_segments(con, [(0.0, zc)], skip_axis=True)[0])
            zs = np.linspace(zlo, zhi, max(int(math.ceil((zhi - zlo) / h_ins)), 1) + 1)
            d = distance_to_segments(con, np.column_stack([np.zeros_like(zs), zs]),
                                     skip_axis=True)
            k = int(np.argmax(d))
            a, b = max(zlo, zs[k] - h_ins), min(zhi, zs[k] + h_ins)
            res = minimize_scalar(lambda zc: -rho(zc), bounds=(a, b), method="bounded",
                                  options={"xatol": 1e-9})
            best = max(best, float(d[k]), -float(res.fun))
    return best


def _merge(intervals):
    out = []
    for lo, hi in sorted(intervals):
        if out and lo <= out[-1][1]:
            out[-1][1] = max(out[-1][1], hi)
        else:
            out.append([lo, hi])
    return [tuple(x) for x in out]


def patch_diameter(s: PatchState) -> float:
    nodes = np.concatenate([c.nodes for c in s.contours])
    return revolved_diameter(Contour(nodes, closed=False))


def patch_perimeter(s: PatchState) -> float:
    return sum(arc_length(c) for c in s.contours)


def blob_diameter(s: BlobState, xi_min: float = 0.0) -> float:
    b = s.blobs
    keep = np.abs(b.xi) > xi_min
    return revolved_diameter(Contour(np.column_stack([b.r[keep], b.z[keep]]), closed=False))


# ---------------------------------------------------------------------------
# conserved quantities and monitors

def _shift_to_lattice(s: PatchState, h: float) -> PatchState:
    # energy is translation invariant; pinning the rear point to the lattice
    # keeps the quadrature error from flickering as the patch moves
    zmin = min(float(c.z.min()) for c in s.contours)
    dz = -(zmin - h * math.floor(zmin / h))
    return PatchState(s.t, tuple(c.translated(dz) for c in s.contours), s.xi_value)


def patch_energy(s: PatchState, h_quad: float = 1.0 / 64.0, h_energy: float | None = None,
                 floor_levels: int = 6) -> float:
    """pi * int psi xi r dr dz, psi sampled at cell centroids of a lattice of side h_energy."""
    h_energy = 2.0 * h_quad if h_energy is None else h_energy
    s = _shift_to_lattice(s, h_energy)
    coarse = PatchSource(s.contours, s.xi_value, h_energy)
    m = coarse.mask
    pts = np.column_stack([m[3], m[4]])
    psi = stream_batch(s.source(h_quad, floor_levels), pts)
    return math.pi * float(np.sum(psi * m[5]))


def blob_energy(s: BlobState) -> float:
    b = s.blobs
    psi = stream_batch(b, np.column_stack([b.r, b.z]))
    return 0.5 * float(np.sum(psi * b.xi * b.vol))


def conserved_suite(state, *, h_quad: float = 1.0 / 64.0, h_energy: float | None = None,
                    with_energy: bool = True) -> ConservedQuantities:
    """(impulse, energy, l1, l2, linf); energy is nan when ``with_energy`` is off."""
    if isinstance(state, PatchState):
        xi = state.xi_value
        m1 = sum(moments(c)[1] for c in state.contours)
        m3 = sum(moments(c)[3] for c in state.contours)
        vol = 2.0 * math.pi * m1
        en = patch_energy(state, h_quad, h_energy) if with_energy else math.nan
        return ConservedQuantities(math.pi * xi * m3, en, abs(xi) * vol,
                                   abs(xi) * math.sqrt(vol), abs(xi))
    b = state.blobs
    en = blob_energy(state) if with_energy else math.nan
    return ConservedQuantities(0.5 * float(np.sum(b.r ** 2 * b.xi * b.vol)), en,
                               b.l1(), math.sqrt(float(np.sum(b.xi ** 2 * b.vol))), b.linf())


def sup_vorticity(state) -> float:
    """sup of r |xi| (the size of the azimuthal vorticity)."""
    if isinstance(state, PatchState):
        return abs(state.xi_value) * max(float(c.r.max()) for c in state.contours)
    b = state.blobs
    return float(np.max(b.r * np.abs(b.xi)))


_MIN_COVER = 0.05


def max_dr_xi(state, h_probe: float = 1.0 / 256.0) -> float:
    """Largest |d xi / dr| of the blob field averaged onto a probe grid.

    The grid value is the area-weighted mean of the blob values under a cubic
    B-spline of the core width.  Normalizing by the deposited area keeps the
    estimate bounded by |xi|_inf where strained blobs pile up.  It is still
    resolution limited and saturates at O(|xi|_inf / max(h_probe, core)).
    """
    if isinstance(state, PatchState):
        raise TypeError("patch gradients are distributional")
    b = state.blobs
    eps = np.maximum(b.core_radius, h_probe)
    pad = 2.0 * float(eps.max()) + h_probe
    z0 = float(b.z.min()) - pad
    nr = int(math.ceil((float(b.r.max()) + pad) / h_probe)) + 2
    nz = int(math.ceil((float(b.z.max()) + pad - z0) / h_probe)) + 1
    area = np.where(b.r > 0, b.vol / (2.0 * math.pi * np.maximum(b.r, 1e-300)), 0.0)
    f = _k.deposit(0.0, z0, h_probe, nr, nz, b.r, b.z, b.xi * area, eps)
    cover = _k.deposit(0.0, z0, h_probe, nr, nz, b.r, b.z, area, eps)
    # thinly covered nodes past the cloud's edge fade to zero instead of extrapolating
    f /= np.maximum(cover, _MIN_COVER)
    if nr < 3:
        return 0.0
    g = (f[2:, :] - f[:-2, :]) / (2.0 * h_probe)
    return float(np.max(np.abs(g)))


def _umax_targets(state) -> np.ndarray:
    if isinstance(state, BlobState):
        return np.column_stack([state.blobs.r, state.blobs.z])
    pts = [c.nodes for c in state.contours]
    for c in state.contours:
        for lo, hi in _merge(c.axis_segments()):
            zs = np.linspace(lo, hi, 33)
            pts.append(np.column_stack([np.zeros_like(zs), zs]))
        m = PatchSource((c,), 1.0, 1.0 / 8.0).mask
        pts.append(np.column_stack([m[3], m[4]]))
    return np.concatenate(pts)


def fs_ratio(umax: float, l1: float, l1w: float, linf: float) -> float:
    """|u|_inf / (|r^2 xi|_1^(1/4) |xi|_1^(1/4) |xi|_inf^(1/2))."""
    den = l1w ** 0.25 * l1 ** 0.25 * linf ** 0.5
    return umax / den if den > 0 else math.nan


@dataclass
class Monitor:
    """Observer turning states into DiagnosticsRecords with a tracked shift."""

    h_quad: float = 1.0 / 64.0
    h_energy: float | None = None
    bracket: float = 0.5
    jump_guard: float = JUMP_GUARD
    h_ins: float = 0.01
    h_probe: float = 1.0 / 256.0
    tau_prev: float = 0.0
    with_energy: bool = True

    def __call__(self, state) -> DiagnosticsRecord:
        tau = estimate_tau(state, self.tau_prev, self.bracket)
        if abs(tau - self.tau_prev) > self.jump_guard:
            raise ShiftTrackingLost(
                f"shift tracking lost: jump {tau - self.tau_prev:.3g} at t={state.t:.6g}")
        self.tau_prev = tau
        cq = conserved_suite(state, h_quad=self.h_quad, h_energy=self.h_energy,
                             with_energy=self.with_energy)
        src = state.source(self.h_quad)
        u = velocity_batch(src, _umax_targets(state))
        umax = float(np.max(np.hypot(u[:, 0], u[:, 1])))
        if isinstance(state, PatchState):
            diam, perim = patch_diameter(state), patch_perimeter(state)
            r_ins = inscription_radius(state, self.h_ins)
            dr = math.nan
        else:
            diam, perim, r_ins = blob_diameter(state), math.nan, math.nan
            dr = max_dr_xi(state, self.h_probe)
        l1 = src.l1()
        l1w = src.l1_r2()
        linf = src.linf()
        imp, en, l1c, l2, li = cq
        return DiagnosticsRecord(
            t=state.t, tau=tau, speed_residual=abs(tau - W * state.t), diameter=diam,
            perimeter=perim, r_ins=r_ins, impulse=imp, energy=en, l1=l1c, l2=l2, linf=li,
            sup_vorticity=sup_vorticity(state), max_dr_xi=dr,
            fs_ratio=fs_ratio(umax, l1, l1w, linf))


def format_value(x: float) -> str:
    return "%.17g" % x


class DiagnosticsWriter:
    """Streams records to CSV, flushing each row so aborted runs keep their output."""

    def __init__(self, path):
        self._fh = open(path, "w", newline="")
        self._w = csv.writer(self._fh, lineterminator="\n")
        self._w.writerow(CSV_HEADER)
        self._fh.flush()

    def write(self, rec: DiagnosticsRecord) -> None:
        self._w.writerow([format_value(v) for v in astuple(rec)])
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_diagnostics_csv(path) -> list[DiagnosticsRecord]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [DiagnosticsRecord(**{k: float(v) for k, v in row.items()}) for row in rows]
