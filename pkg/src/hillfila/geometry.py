"""Meridional half-plane geometry: points, contours, balls, polygon utilities.

Coordinates are ``(r, z)`` with ``r >= 0``.  A closed contour is the boundary
of a cross-section; when it touches the symmetry axis the axis portion is a
single straight chord between two *junction* nodes with ``r == 0``.
Positive orientation means counter-clockwise in the ``(r, z)`` plane, i.e.
interior on the left.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

import numba
import numpy as np

from . import _kernels as _k

R_AXIS_SNAP = 1e-12


class GeometryError(ValueError):
    pass


class HalfPlanePoint(NamedTuple):
    r: float
    z: float


@dataclass(frozen=True)
class AxiBall:
    """Ball of radius ``radius`` centred at ``center_z`` on the axis."""

    center_z: float = 0.0
    radius: float = 1.0

    def __post_init__(self):
        if not self.radius > 0:
            raise GeometryError("ball radius must be positive")

    def contains(self, r, z):
        r = np.asarray(r, dtype=float)
        z = np.asarray(z, dtype=float)
        return r * r + (z - self.center_z) ** 2 < self.radius ** 2

    def shell(self, r, z, lam: float):
        """Predicate for the spherical shell 1 - lam <= |x - center| / radius <= 1 + lam."""
        d = np.hypot(r, np.asarray(z, dtype=float) - self.center_z) / self.radius
        return (d >= 1.0 - lam) & (d <= 1.0 + lam)

    def contour(self, n: int = 128) -> "Contour":
        th = np.linspace(0.0, math.pi, n + 1)
        nodes = np.column_stack([self.radius * np.sin(th),
                                 self.center_z - self.radius * np.cos(th)])
        nodes[0, 0] = nodes[-1, 0] = 0.0
        return Contour(nodes, closed=True)


class Contour:
    """Polyline in the half-plane.  Immutable by convention; ``nodes`` is (N, 2).

    Construction snaps ``r < r_axis_snap`` to the axis and, for closed
    contours, normalizes to positive orientation.
    """

    __slots__ = ("nodes", "closed")

    def __init__(self, nodes, closed: bool = True, r_axis_snap: float = R_AXIS_SNAP):
        arr = np.array(nodes, dtype=float).reshape(-1, 2)
        if np.any(arr[:, 0] < -r_axis_snap):
            raise GeometryError("contour node with r < 0")
        arr[arr[:, 0] < r_axis_snap, 0] = 0.0
        if closed and arr.shape[0] >= 3 and signed_area(arr) < 0:
            arr = arr[::-1].copy()
        arr.setflags(write=False)
        object.__setattr__(self, "nodes", arr)
        object.__setattr__(self, "closed", bool(closed))

    def __setattr__(self, name, value):
        raise AttributeError("Contour is immutable")

    def __len__(self):
        return self.nodes.shape[0]

    def __repr__(self):
        return f"Contour(n={len(self)}, closed={self.closed})"

    @property
    def r(self):
        return self.nodes[:, 0]

    @property
    def z(self):
        return self.nodes[:, 1]

    def points(self) -> list[HalfPlanePoint]:
        return [HalfPlanePoint(float(a), float(b)) for a, b in self.nodes]

    def translated(self, dz: float) -> "Contour":
        return Contour(self.nodes + np.array([0.0, dz]), self.closed)

    def scaled(self, factor: float) -> "Contour":
        return Contour(self.nodes * factor, self.closed)

    def segments(self):
        """(start, end) arrays of the segments, closing segment included."""
        a = self.nodes
        if self.closed:
            return a, np.roll(a, -1, axis=0)
        return a[:-1], a[1:]

    def axis_segments(self) -> list[tuple[float, float]]:
        """z-intervals of segments lying on the axis."""
        p, q = self.segments()
        on = (p[:, 0] == 0.0) & (q[:, 0] == 0.0)
        return [(min(a, b), max(a, b)) for a, b in zip(p[on, 1], q[on, 1])]


def signed_area(nodes) -> float:
    x = nodes[:, 0]
    y = nodes[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _require_nonempty(c: Contour):
    if len(c) == 0:
        raise GeometryError("empty geometry")


def revolved_diameter(c: Contour) -> float:
    """Diameter of the solid obtained by revolving the contour about the axis."""
    _require_nonempty(c)
    return _diameter(np.ascontiguousarray(c.nodes))


@numba.njit(cache=True)
def _diameter(a):
    best = 0.0
    n = a.shape[0]
    for i in range(n):
        ri = a[i, 0]
        zi = a[i, 1]
        for j in range(i, n):
            s = ri + a[j, 0]
            d = zi - a[j, 1]
            v = s * s + d * d
            if v > best:
                best = v
    return math.sqrt(best)


def arc_length(c: Contour) -> float:
    """Total polyline length, closing segment included for closed contours."""
    if len(c) < 2:
        raise GeometryError("arc length needs at least 2 nodes")
    p, q = c.segments()
    return float(np.sum(np.hypot(q[:, 0] - p[:, 0], q[:, 1] - p[:, 1])))


def moments(c: Contour) -> tuple[float, float, float, float]:
    """(area, int r dA, int z dA, int r^3 dA) over the enclosed cross-section."""
    a = np.ascontiguousarray(c.nodes)
    return _k.poly_moments(a[:, 0].copy(), a[:, 1].copy(), a.shape[0])


def revolved_volume(c: Contour) -> float:
    """Volume of the solid of revolution: 2 pi times the first r-moment (Pappus)."""
    if not c.closed:
        raise GeometryError("volume requires a closed contour")
    return 2.0 * math.pi * moments(c)[1]


def contains(c: Contour, p) -> bool | np.ndarray:
    """Even-odd containment.  Points exactly on the boundary may go either way."""
    if not c.closed:
        raise GeometryError("containment requires a closed contour")
    pts = np.asarray(p, dtype=float)
    single = pts.ndim == 1
    pts = pts.reshape(-1, 2)
    a = np.ascontiguousarray(c.nodes)
    out = _contains_many(a, pts)
    return bool(out[0]) if single else out


@numba.njit(cache=True)
def _contains_many(a, pts):
    n = a.shape[0]
    out = np.zeros(pts.shape[0], dtype=np.bool_)
    for k in range(pts.shape[0]):
        x = pts[k, 0]
        y = pts[k, 1]
        inside = False
        for i in range(n):
            j = i + 1 if i + 1 < n else 0
            y0 = a[i, 1]
            y1 = a[j, 1]
            if (y0 <= y) != (y1 <= y):
                xc = a[i, 0] + (y - y0) / (y1 - y0) * (a[j, 0] - a[i, 0])
                if xc > x:
                    inside = not inside
        out[k] = inside
    return out


def distance_to_segments(c: Contour, pts, skip_axis: bool = False) -> np.ndarray:
    """Unsigned distance from each point to the contour's segments."""
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    p, q = c.segments()
    if skip_axis:
        keep = ~((p[:, 0] == 0.0) & (q[:, 0] == 0.0))
        p, q = p[keep], q[keep]
    if p.shape[0] == 0:
        return np.full(pts.shape[0], np.inf)
    return _seg_dist(np.ascontiguousarray(p), np.ascontiguousarray(q), pts)


@numba.njit(cache=True)
def _seg_dist(p, q, pts):
    out = np.empty(pts.shape[0])
    for k in range(pts.shape[0]):
        x = pts[k, 0]
        y = pts[k, 1]
        best = np.inf
        for i in range(p.shape[0]):
            dx = q[i, 0] - p[i, 0]
            dy = q[i, 1] - p[i, 1]
            l2 = dx * dx + dy * dy
            t = 0.0
            if l2 > 0.0:
                t = ((x - p[i, 0]) * dx + (y - p[i, 1]) * dy) / l2
                t = min(1.0, max(0.0, t))
            ex = p[i, 0] + t * dx - x
            ey = p[i, 1] + t * dy - y
            d = ex * ex + ey * ey
            if d < best:
                best = d
        out[k] = math.sqrt(best)
    return out


def signed_distance(c: Contour, pts) -> np.ndarray:
    """Distance to the revolved surface, negative inside.

    Axis segments are not part of the surface of the body of revolution.
    """
    d = distance_to_segments(c, pts, skip_axis=True)
    inside = contains(c, np.asarray(pts, dtype=float).reshape(-1, 2))
    return np.where(inside, -d, d)


# ---------------------------------------------------------------------------
# curvature and remeshing

def node_curvature(nodes: np.ndarray, closed: bool) -> np.ndarray:
    """Curvature from the circumscribed circle of each node triple; 0 on the axis and at open ends."""
    n = nodes.shape[0]
    kappa = np.zeros(n)
    if n < 3:
        return kappa
    if closed:
        a = np.roll(nodes, 1, axis=0)
        c = np.roll(nodes, -1, axis=0)
        idx = np.arange(n)
    else:
        a = nodes[:-2]
        c = nodes[2:]
        idx = np.arange(1, n - 1)
    b = nodes[idx]
    ab = np.hypot(*(b - a).T)
    bc = np.hypot(*(c - b).T)
    ca = np.hypot(*(a - c).T)
    cross = np.abs((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1])
                   - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))
    denom = ab * bc * ca
    with np.errstate(divide="ignore", invalid="ignore"):
        k = np.where(denom > 0, 2.0 * cross / denom, 0.0)
    kappa[idx] = k
    kappa[nodes[:, 0] == 0.0] = 0.0
    return kappa


def _midpoint(nodes: np.ndarray, i: int, closed: bool) -> np.ndarray:
    """Four-point interpolatory midpoint of segment (i, i+1).

    A segment touching the axis uses the mirror image of its other end as the
    ghost control point, which makes the interpolant cross the axis at a
    right angle as a smooth surface of revolution does.
    """
    n = nodes.shape[0]
    j = (i + 1) % n
    p1 = nodes[i]
    p2 = nodes[j]
    if p1[0] == 0.0 and p2[0] == 0.0:
        return 0.5 * (p1 + p2)
    if p1[0] == 0.0:
        p0 = np.array([-p2[0], p2[1]])
    elif closed or i > 0:
        p0 = nodes[(i - 1) % n]
    else:
        p0 = 2 * p1 - p2
    if p2[0] == 0.0:
        p3 = np.array([-p1[0], p1[1]])
    elif closed or j + 1 < n:
        p3 = nodes[(j + 1) % n]
    else:
        p3 = 2 * p2 - p1
    m = (-p0 + 9.0 * p1 + 9.0 * p2 - p3) / 16.0
    if m[0] < 0.0:
        m[0] = 0.0
    return m


def _pinned(nodes: np.ndarray, closed: bool) -> np.ndarray:
    n = nodes.shape[0]
    pin = np.zeros(n, dtype=bool)
    on = nodes[:, 0] == 0.0
    if closed:
        pin |= on & (~np.roll(on, 1) | ~np.roll(on, -1))
    else:
        pin[0] = pin[-1] = True
        if n > 2:
            pin[1:-1] |= on[1:-1] & (~on[:-2] | ~on[2:])
    return pin


def remesh(c: Contour, h_min: float, h_max: float, curvature_budget: float,
           max_passes: int = 60) -> Contour:
    """Insert nodes where spacing or spacing x curvature is too large, drop
    nodes closer than ``h_min``.  Axis chords are exact and never split;
    axis junctions and open-contour endpoints are never removed.
    """
    if not (h_min > 0 and h_max > 0 and curvature_budget > 0):
        raise GeometryError("remesh parameters must be positive")
    if h_min >= h_max:
        raise GeometryError("h_min must be smaller than h_max")
    nodes = np.array(c.nodes)
    closed = c.closed
    for _ in range(max_passes):
        changed = False
        # insertion
        n = nodes.shape[0]
        nseg = n if closed else n - 1
        kappa = node_curvature(nodes, closed)
        out = []
        for i in range(nseg):
            out.append(nodes[i])
            j = (i + 1) % n
            p1, p2 = nodes[i], nodes[j]
            if p1[0] == 0.0 and p2[0] == 0.0:
                continue
            s = math.hypot(p2[0] - p1[0], p2[1] - p1[1])
            kap = max(kappa[i], kappa[j])
            if s > h_max or (s * kap > curvature_budget and s >= 2.0 * h_min):
                out.append(_midpoint(nodes, i, closed))
                changed = True
        if not closed:
            out.append(nodes[-1])
        nodes = np.array(out)
        # removal
        n = nodes.shape[0]
        pin = _pinned(nodes, closed)
        keep = np.ones(n, dtype=bool)
        i = 0
        while i < n:
            if not pin[i] and n - (~keep).sum() > 3:
                prv = i - 1
                while prv >= 0 and not keep[prv]:
                    prv -= 1
                if prv < 0:
                    prv = (n - 1) if closed else None
                nxt = (i + 1) % n if closed else (i + 1 if i + 1 < n else None)
                if prv is not None and nxt is not None and keep[prv] and nxt != i:
                    a, b, d = nodes[prv], nodes[i], nodes[nxt]
                    s_prev = math.hypot(*(b - a))
                    s_next = math.hypot(*(d - b))
                    if min(s_prev, s_next) < h_min and math.hypot(*(d - a)) <= h_max:
                        keep[i] = False
                        changed = True
                        i += 2
                        continue
            i += 1
        nodes = nodes[keep]
        if not changed:
            break
    return Contour(nodes, closed)


# ---------------------------------------------------------------------------
# self-intersection

def self_intersects(c: Contour) -> bool:
    """True if any two non-adjacent segments touch or cross."""
    if len(c) < 4:
        return False
    p, q = c.segments()
    return bool(_sweep_intersect(np.ascontiguousarray(p), np.ascontiguousarray(q), c.closed))


@numba.njit(cache=True)
def _orient(ax, ay, bx, by, cx, cy):
    v = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    if v > 0.0:
        return 1
    if v < 0.0:
        return -1
    return 0


@numba.njit(cache=True)
def _on_seg(ax, ay, bx, by, cx, cy):
    return min(ax, bx) <= cx <= max(ax, bx) and min(ay, by) <= cy <= max(ay, by)


@numba.njit(cache=True)
def _seg_cross(p, q, i, j):
    ax, ay, bx, by = p[i, 0], p[i, 1], q[i, 0], q[i, 1]
    cx, cy, dx, dy = p[j, 0], p[j, 1], q[j, 0], q[j, 1]
    o1 = _orient(ax, ay, bx, by, cx, cy)
    o2 = _orient(ax, ay, bx, by, dx, dy)
    o3 = _orient(cx, cy, dx, dy, ax, ay)
    o4 = _orient(cx, cy, dx, dy, bx, by)
    if o1 != o2 and o3 != o4:
        return True
    if o1 == 0 and _on_seg(ax, ay, bx, by, cx, cy):
        return True
    if o2 == 0 and _on_seg(ax, ay, bx, by, dx, dy):
        return True
    if o3 == 0 and _on_seg(cx, cy, dx, dy, ax, ay):
        return True
    if o4 == 0 and _on_seg(cx, cy, dx, dy, bx, by):
        return True
    return False


@numba.njit(cache=True)
def _sweep_intersect(p, q, closed):
    n = p.shape[0]
    lo = np.empty(n)
    hi = np.empty(n)
    for i in range(n):
        lo[i] = min(p[i, 1], q[i, 1])
        hi[i] = max(p[i, 1], q[i, 1])
    order = np.argsort(lo, kind="mergesort")
    for a in range(n):
        i = order[a]
        ri0 = min(p[i, 0], q[i, 0])
        ri1 = max(p[i, 0], q[i, 0])
        for b in range(a + 1, n):
            j = order[b]
            if lo[j] > hi[i]:
                break
            if abs(i - j) == 1 or (closed and abs(i - j) == n - 1):
                continue
            if max(p[j, 0], q[j, 0]) < ri0 or min(p[j, 0], q[j, 0]) > ri1:
                continue
            if _seg_cross(p, q, i, j):
                return True
    return False


# ---------------------------------------------------------------------------
# snapshot files

def write_contour_csv(path, c: Contour, t: float) -> None:
    lines = [f"# t={t!r} nodes={len(c)} closed={int(c.closed)}"]
    lines += [f"{r:.17g},{z:.17g}" for r, z in c.nodes]
    Path(path).write_text("\n".join(lines) + "\n")


def write_contours_csv(path, contours: Sequence[Contour], t: float) -> None:
    """Several contours in one file, each introduced by its own header line."""
    lines = []
    for c in contours:
        lines.append(f"# t={t!r} nodes={len(c)} closed={int(c.closed)}")
        lines += [f"{r:.17g},{z:.17g}" for r, z in c.nodes]
    Path(path).write_text("\n".join(lines) + "\n")


def read_contours_csv(path) -> tuple[float, list[Contour]]:
    t = math.nan
    out: list[Contour] = []
    cur: list[list[float]] = []
    closed = True
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            if cur:
                out.append(Contour(cur, closed))
                cur = []
            fields = dict(tok.split("=", 1) for tok in line[1:].split())
            t = float(fields["t"])
            closed = fields.get("closed", "1") == "1"
            continue
        r, z = line.split(",")
        cur.append([float(r), float(z)])
    if cur:
        out.append(Contour(cur, closed))
    return t, out


def read_contour_csv(path) -> tuple[float, Contour]:
    t, cs = read_contours_csv(path)
    if len(cs) != 1:
        raise GeometryError(f"expected one contour in {path}, found {len(cs)}")
    return t, cs[0]
