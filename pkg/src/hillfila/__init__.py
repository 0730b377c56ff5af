"""Axisymmetric vortex-patch and vortex-blob simulator around Hill's spherical vortex."""

from .biot_savart import (BlobSource, PatchSource, feng_sverak_bound, stream_at, stream_batch,
                          velocity_at, velocity_batch)
from .elliptic import elliptic_KE
from .evolution import BlobState, PatchNumerics, PatchState, run, step_blobs, step_patch
from .geometry import AxiBall, Contour, HalfPlanePoint

__all__ = [
    "AxiBall", "BlobSource", "BlobState", "Contour", "HalfPlanePoint", "PatchNumerics",
    "PatchSource", "PatchState", "elliptic_KE", "feng_sverak_bound", "run", "step_blobs",
    "step_patch", "stream_at", "stream_batch", "velocity_at", "velocity_batch",
]
