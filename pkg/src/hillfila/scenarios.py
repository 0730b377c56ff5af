"""Initial data for the experiments: Hill, spheroids, a seeded axis segment, smooth fields."""

from __future__ import annotations

import math

import numpy as np

from .biot_savart import BlobSource
from .config import ConfigError, ScenarioConfig
from .evolution import BlobState, PatchNumerics, PatchState
from .geometry import AxiBall, Contour, remesh, signed_distance

XI_CUTOFF = 1e-12


def numerics_from(cfg: ScenarioConfig) -> PatchNumerics:
    return PatchNumerics(h_min=cfg.h_min, h_max=cfg.h_max,
                         curvature_budget=cfg.curvature_budget, h_quad=cfg.h_quad,
                         floor_levels=cfg.floor_levels, max_nodes=cfg.max_nodes,
                         frozen_stage_mask=cfg.frozen_stage_mask)


def spheroid_contour(a: float, b: float, n: int = 128) -> Contour:
    """Meridional half-ellipse with semi-axis a in r and b in z."""
    th = np.linspace(0.0, math.pi, n + 1)
    nodes = np.column_stack([a * np.sin(th), -b * np.cos(th)])
    nodes[0, 0] = nodes[-1, 0] = 0.0
    return Contour(nodes)


def seeded_segment_contour(delta: float, width: float = 0.5, n: int = 128) -> Contour:
    """Unit ball with a smooth bulge pulled out along the rear axis.

    Polar radius R(th) = 1 + (delta/2) exp(-((pi - th)/width)^2), th measured
    from +z.  The cross-section contains {r = 0, -1 - delta/2 <= z <= 1},
    lies in B(1 + delta) and contains B(1), and R'(pi) = 0 so the surface is
    smooth where it meets the axis.
    """
    th = np.linspace(0.0, math.pi, n + 1)
    rad = 1.0 + 0.5 * delta * np.exp(-((math.pi - th) / width) ** 2)
    nodes = np.column_stack([rad * np.sin(th), rad * np.cos(th)])
    nodes[0, 0] = nodes[-1, 0] = 0.0
    return Contour(nodes)


def base_contour(cfg: ScenarioConfig) -> Contour:
    if cfg.scenario in ("hill", "front-peak") or (cfg.scenario == "smooth-hill"
                                                    and cfg.base == "ball"):
        return AxiBall().contour(cfg.nodes)
    if cfg.scenario in ("prolate", "oblate"):
        return spheroid_contour(cfg.a, cfg.b, cfg.nodes)
    return seeded_segment_contour(cfg.delta_margin, cfg.bump_width, cfg.nodes)


def _lattice(h: float, rmax: float, zlo: float, zhi: float):
    """Cell centres of the lattice aligned to r = 0 and z = 0."""
    rs = (np.arange(int(math.ceil(rmax / h))) + 0.5) * h
    j0, j1 = int(math.floor(zlo / h)), int(math.ceil(zhi / h))
    zs = (np.arange(j0, j1) + 0.5) * h
    rr, zz = np.meshgrid(rs, zs, indexing="ij")
    return rr.ravel(), zz.ravel()


def smooth_step(x):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        f = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
        g = np.where(x < 1, np.exp(-1.0 / np.where(x < 1, 1.0 - x, 1.0)), 0.0)
    return f / (f + g)


def mollified_indicator(c: Contour, r, z, width: float):
    """Smooth indicator of the cross-section, falling from 1 to 0 across |d| < width.

    d is the signed distance to the contour, so the support is {d < width}.
    """
    d = signed_distance(c, np.column_stack([r, z]))
    return smooth_step((width - d) / (2.0 * width))


def _blobs(r, z, xi, h, core_factor):
    keep = xi > XI_CUTOFF
    r, z, xi = r[keep], z[keep], xi[keep]
    vol = 2.0 * math.pi * r * h * h
    return r, z, xi, vol, np.full(r.shape, core_factor * h)


def smooth_blobs(c: Contour, width: float, h: float, core_factor: float):
    pad = width + h
    rmax = float(c.r.max()) + pad
    r, z = _lattice(h, rmax, float(c.z.min()) - pad, float(c.z.max()) + pad)
    return _blobs(r, z, mollified_indicator(c, r, z, width), h, core_factor)


def front_peak_blobs(cfg: ScenarioConfig):
    """Mollified Hill background plus a Gaussian peak near the front stagnation point.

    The peak of height m_peak and radius sigma sits at (r0, 1 - sigma).  A box
    around it is seeded on the finer ``peak_spacing`` lattice; coarse cells
    inside the box are left out so no volume is counted twice.
    """
    ball = AxiBall().contour(cfg.nodes)
    h, hp = cfg.blob_spacing, cfg.peak_spacing
    zp = 1.0 - cfg.sigma
    reach = 4.0 * cfg.sigma
    box_r = h * math.ceil((cfg.r0 + reach) / h)
    box_z0 = h * math.floor((zp - reach) / h)
    box_z1 = h * math.ceil((zp + reach) / h)

    def field(r, z):
        bump = cfg.m_peak * np.exp(-((r - cfg.r0) ** 2 + (z - zp) ** 2) / cfg.sigma ** 2)
        return mollified_indicator(ball, r, z, cfg.mollify) + bump

    pad = cfg.mollify + h
    r, z = _lattice(h, 1.0 + pad, -1.0 - pad, 1.0 + pad)
    outside = ~((r < box_r) & (z > box_z0) & (z < box_z1))
    coarse = _blobs(r[outside], z[outside], field(r[outside], z[outside]), h, cfg.core_factor)
    r, z = _lattice(hp, box_r, box_z0, box_z1)
    fine = _blobs(r, z, field(r, z), hp, cfg.core_factor)
    return tuple(np.concatenate([a, b]) for a, b in zip(coarse, fine))


def make_scenario(cfg: ScenarioConfig):
    """Initial PatchState or BlobState for a resolved configuration."""
    cfg = cfg.resolved()
    limit = 1.0 + cfg.delta_margin
    if cfg.scenario == "front-peak":
        r, z, xi, vol, core = front_peak_blobs(cfg)
    elif cfg.scenario == "smooth-hill":
        r, z, xi, vol, core = smooth_blobs(base_contour(cfg), cfg.mollify, cfg.blob_spacing,
                                           cfg.core_factor)
    else:
        c = base_contour(cfg)
        _check_support(np.hypot(c.r, c.z), limit, cfg)
        c = remesh(c, cfg.h_min, cfg.h_max, cfg.curvature_budget)
        return PatchState(0.0, (c,), 1.0)
    _check_support(np.hypot(r, z), limit, cfg)
    return BlobState(0.0, BlobSource(r, z, xi, vol, core))


def _check_support(radii, limit, cfg):
    if np.max(radii) > limit * (1 + 1e-12):
        raise ConfigError(f"initial support leaves B(1 + {cfg.delta_margin:g}); "
                          "raise delta_margin or shrink the shape")
