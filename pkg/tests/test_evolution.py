import math

import numpy as np
import pytest
from scipy.spatial.distance import directed_hausdorff

from hillfila import evolution
from hillfila.biot_savart import BlobSource, PatchSource, feng_sverak_bound, velocity_batch
from hillfila.diagnostics import C0_HILL, estimate_tau
from hillfila.evolution import (BlobState, PatchNumerics, PatchState, ResolutionExhausted,
                                StepRejected, run, step, step_blobs, step_patch)
from hillfila.geometry import AxiBall, Contour, remesh, revolved_volume

from conftest import W

NUM = PatchNumerics()


def hill_state(n=128):
    c = remesh(AxiBall().contour(n), NUM.h_min, NUM.h_max, NUM.curvature_budget)
    return PatchState(0.0, (c,))


def blob_hill(h=1 / 32, core_factor=2.0):
    rs = (np.arange(int(round(1 / h))) + 0.5) * h
    zs = (np.arange(-int(round(1 / h)), int(round(1 / h))) + 0.5) * h
    r, z = (a.ravel() for a in np.meshgrid(rs, zs))
    keep = r * r + z * z < 1
    r, z = r[keep], z[keep]
    return BlobState(0.0, BlobSource(r, z, np.ones_like(r), 2 * math.pi * r * h * h,
                                     core_factor * h))


@pytest.fixture(scope="module")
def hill_run_t2():
    return run(hill_state(), 0.05, 2.0, observers=[lambda s: (s.t, estimate_tau(s))],
               observe_every=5)


def test_dt_zero_is_identity():
    s = hill_state()
    assert step_patch(s, 0.0) is s
    b = blob_hill(1 / 8)
    assert step_blobs(b, 0.0) is b


def test_negative_dt_rejected():
    with pytest.raises(ValueError):
        step_patch(hill_state(), -0.1)
    with pytest.raises(ValueError):
        step_blobs(blob_hill(1 / 8), -0.1)


def test_hill_patch_translates_rigidly(hill_run_t2):
    s = hill_run_t2.final
    assert s.t == pytest.approx(2.0)
    nodes = s.contours[0].nodes
    th = np.linspace(0, math.pi, 4001)
    circle = np.column_stack([np.sin(th), 2 * W - np.cos(th)])
    d = max(directed_hausdorff(nodes, circle)[0], directed_hausdorff(circle, nodes)[0])
    assert d < 0.02


def test_hill_patch_speed_from_tau_series(hill_run_t2):
    t, tau = np.array(hill_run_t2.records).T
    assert np.polyfit(t, tau, 1)[0] == pytest.approx(W, rel=0.05)


def test_hill_patch_volume_and_axis(hill_run_t2):
    c = hill_run_t2.final.contours[0]
    assert revolved_volume(c) == pytest.approx(4 * math.pi / 3, rel=1e-3)
    assert c.nodes[0, 0] == 0.0 and c.nodes[-1, 0] == 0.0
    assert np.all(c.r >= 0)


def test_frozen_field_rk4_is_locally_reversible():
    src = PatchSource((AxiBall().contour(256),), 1.0, 1 / 32)
    vel = lambda y: velocity_batch(src, y)
    y0 = np.array([[0.3, 0.2], [0.8, -0.4], [1.3, 0.5]])
    errs = []
    for dt in (0.2, 0.1):
        back = evolution._rk4(evolution._rk4(y0, dt, vel), -dt, vel)
        errs.append(np.max(np.abs(back - y0)))
    assert errs[0] < 0.2 ** 3
    # third order or better; the quadrature field is only piecewise smooth
    assert errs[1] < errs[0] / 6


def test_self_intersection_rejects_step(monkeypatch):
    monkeypatch.setattr(evolution, "self_intersects", lambda c: True)
    with pytest.raises(StepRejected) as info:
        step_patch(hill_state(32), 0.04)
    assert info.value.suggested_dt == pytest.approx(0.02)


def test_node_cap_raises_resolution_exhausted():
    with pytest.raises(ResolutionExhausted, match="resolution exhausted"):
        step_patch(hill_state(), 0.01, PatchNumerics(max_nodes=20))


def test_run_stops_cleanly_on_persistent_self_touch(monkeypatch):
    calls = []

    def always_reject(s, dt, num=NUM):
        calls.append(dt)
        raise StepRejected("touch", dt / 2)

    monkeypatch.setattr(evolution, "step", always_reject)
    res = run(hill_state(32), 0.1, 1.0, observers=[lambda s: s.t], max_halvings=3)
    assert res.status == "self-touch" and not res.completed
    assert res.final.t == 0.0 and res.records == [0.0]
    assert min(calls) == pytest.approx(0.1 / 8)


def test_run_recovers_by_halving(monkeypatch):
    taken = []

    def fussy(s, dt, num=NUM):
        if dt > 0.03:
            raise StepRejected("touch", dt / 2)
        taken.append(dt)
        return PatchState(s.t + dt, s.contours, s.xi_value)

    monkeypatch.setattr(evolution, "step", fussy)
    res = run(hill_state(32), 0.1, 0.3, observers=[lambda s: s.t])
    assert res.completed
    assert res.final.t == pytest.approx(0.3)
    assert sum(taken) == pytest.approx(0.3) and max(taken) <= 0.03


def test_t_end_zero_gives_initial_row_only():
    res = run(hill_state(32), 0.05, 0.0, observers=[lambda s: s.t])
    assert res.records == [0.0] and res.final.t == 0.0


def test_run_observer_and_snapshot_stride():
    seen = []
    res = run(hill_state(32), 0.05, 0.35, observers=[lambda s: s.t], observe_every=3,
              snapshot_every=2, on_snapshot=lambda s, k: seen.append(k),
              numerics=PatchNumerics(h_quad=1 / 16))
    assert res.records == pytest.approx([0.0, 0.15, 0.30, 0.35])
    assert seen == [0, 2, 4, 6, 7]


def test_run_argument_errors():
    with pytest.raises(ValueError):
        run(hill_state(32), 0.0, 1.0)
    with pytest.raises(ValueError):
        run(hill_state(32), 0.1, -1.0)


def test_run_is_deterministic():
    num = PatchNumerics(h_quad=1 / 32)
    a = run(hill_state(64), 0.05, 0.2, numerics=num).final.contours[0].nodes
    b = run(hill_state(64), 0.05, 0.2, numerics=num).final.contours[0].nodes
    assert np.array_equal(a, b)


def test_blob_hill_centre_of_mass_moves_at_hill_speed():
    s0 = blob_hill(1 / 32)
    res = run(s0, 0.05, 2.0)
    b0, b1 = s0.blobs, res.final.blobs
    w = b0.xi * b0.vol
    dz = np.sum(w * b1.z) / np.sum(w) - np.sum(w * b0.z) / np.sum(w)
    assert dz == pytest.approx(2 * W, rel=0.03)
    assert np.array_equal(b1.xi, b0.xi) and np.array_equal(b1.vol, b0.vol)
    assert np.all(b1.r >= 0)


def test_blob_reflection_is_counted(monkeypatch):
    inward = lambda src, y: np.tile([-1.0, 0.0], (len(np.asarray(y)), 1))
    monkeypatch.setattr(evolution, "velocity_batch", inward)
    b = BlobSource([0.05, 0.5], [1.0, 0.0], [1.0, 1.0], [1.0, 1.0], 0.05)
    s = step_blobs(BlobState(0.0, b, 2), 0.1)
    assert s.reflections == 3
    assert s.blobs.r.tolist() == pytest.approx([0.05, 0.4])


def test_single_far_blob_obeys_velocity_bound():
    b = BlobSource([5.0], [3.0], [1.0], [0.2], 0.1)
    pts = np.column_stack([np.linspace(0, 8, 81), np.full(81, 3.0)])
    umax = np.max(np.hypot(*velocity_batch(b, pts).T))
    assert umax <= feng_sverak_bound(b.l1(), b.l1_r2(), b.linf(), C0_HILL)


def test_generic_step_dispatch():
    s = blob_hill(1 / 8)
    assert isinstance(step(s, 0.01), BlobState)
    assert isinstance(step(hill_state(32), 0.01, PatchNumerics(h_quad=1 / 16)), PatchState)
