"""Snapshot files for patch and blob states, and loading a run back as a velocity history."""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from .biot_savart import BlobSource, PatchSource
from .evolution import BlobState, PatchState
from .flow_map import VelocityHistory
from .geometry import read_contours_csv, write_contours_csv

_BLOB_HEADER = re.compile(r"#\s*t=(\S+)\s+blobs=(\d+)")


def snapshot_name(state, step: int) -> str:
    kind = "contour" if isinstance(state, PatchState) else "blobs"
    return f"{kind}_{step:07d}.csv"


def write_snapshot(path, state) -> None:
    if isinstance(state, PatchState):
        write_contours_csv(path, state.contours, state.t)
        return
    b = state.blobs
    with open(path, "w") as fh:
        fh.write(f"# t={state.t:.17g} blobs={len(b)}\n")
        for row in zip(b.r, b.z, b.xi, b.vol, b.core_radius):
            fh.write(",".join("%.17g" % v for v in row) + "\n")


def read_snapshot(path, xi_value: float = 1.0):
    path = Path(path)
    if path.name.startswith("blobs_"):
        with open(path) as fh:
            m = _BLOB_HEADER.match(fh.readline())
            if not m:
                raise ValueError(f"{path}: bad blob snapshot header")
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        if data.shape[0] != int(m.group(2)):
            raise ValueError(f"{path}: blob count mismatch")
        return BlobState(float(m.group(1)), BlobSource(*data.T[:4], data[:, 4]))
    t, contours = read_contours_csv(path)
    return PatchState(t, tuple(contours), xi_value)


def list_snapshots(run_dir) -> list[Path]:
    d = Path(run_dir) / "snapshots"
    return sorted(list(d.glob("contour_*.csv")) + list(d.glob("blobs_*.csv")))


def load_history(run_dir, h_quad: float, floor_levels: int = 6,
                 xi_value: float = 1.0) -> VelocityHistory:
    times, sources = [], []
    for p in list_snapshots(run_dir):
        st = read_snapshot(p, xi_value)
        if times and st.t <= times[-1]:
            continue
        times.append(st.t)
        sources.append(st.source(h_quad, floor_levels) if isinstance(st, PatchState)
                       else st.blobs)
    if not times:
        raise FileNotFoundError(f"no snapshots under {run_dir}")
    return VelocityHistory(tuple(times), tuple(sources))
