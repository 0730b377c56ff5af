import math

import numpy as np
import pytest

from hillfila.biot_savart import PatchSource
from hillfila.flow_map import (Fate, Interpolation, VelocityHistory, advect, advect_many,
                               classify_axis_fate, first_front_time, read_path_csv,
                               write_path_csv)
from hillfila.geometry import AxiBall, HalfPlanePoint
from hillfila.hill import axis_trajectory_interior

from conftest import W


@pytest.fixture(scope="module")
def hill_history():
    base = PatchSource((AxiBall().contour(1024),), 1.0, 1 / 64)
    times = np.arange(0, 21) * 0.25
    return VelocityHistory(tuple(times), tuple(base.translated(W * t) for t in times))


def test_interior_seed_follows_closed_form(hill_history):
    path = advect(hill_history, 0.0, (0.0, 0.0), 5.0, 0.05)
    t = np.array([p[0] for p in path])
    z = np.array([p[1].z for p in path])
    assert np.max(np.abs(z - W * t - axis_trajectory_interior(0.0, t))) < 1e-3


def test_front_stagnation_point_is_fixed(hill_history):
    path = advect(hill_history, 0.0, (0.0, 1.0), 5.0, 0.05)
    assert max(abs(p.z - W * t - 1.0) for t, p in path) < 2e-3


def test_axis_paths_stay_on_axis(hill_history):
    times, ys = advect_many(hill_history, 0.0, [[0.0, -1.5], [0.0, 0.4], [0.0, 2.0]], 3.0, 0.1)
    assert np.all(ys[:, :, 0] == 0.0)


def test_off_axis_paths_keep_r_nonnegative(hill_history):
    _, ys = advect_many(hill_history, 0.0, [[0.01, 0.9], [0.3, -0.99], [1e-13, 0.2]], 5.0, 0.1)
    assert np.all(ys[:, :, 0] >= 0.0)


def test_flow_map_composition(hill_history):
    x0 = (0.4, -0.3)
    direct = advect(hill_history, 0.0, x0, 4.0, 0.05)[-1][1]
    mid = advect(hill_history, 0.0, x0, 1.5, 0.05)[-1][1]
    composed = advect(hill_history, 1.5, mid, 4.0, 0.05)[-1][1]
    assert math.dist(direct, composed) < 1e-10


def test_same_start_and_end_time(hill_history):
    assert advect(hill_history, 1.0, (0.2, 0.3), 1.0, 0.1) == [(1.0, HalfPlanePoint(0.2, 0.3))]


def test_span_and_argument_errors(hill_history):
    with pytest.raises(ValueError, match="span"):
        advect(hill_history, 0.0, (0.0, 0.0), 6.0, 0.1)
    with pytest.raises(ValueError, match="span"):
        hill_history.velocity(-1.0, [(0.0, 0.0)])
    with pytest.raises(ValueError):
        advect(hill_history, 0.0, (0.0, 0.0), 1.0, 0.0)
    with pytest.raises(ValueError):
        advect(hill_history, 2.0, (0.0, 0.0), 1.0, 0.1)
    with pytest.raises(ValueError):
        advect(hill_history, 0.0, (-0.1, 0.0), 1.0, 0.1)


def test_history_validation():
    src = PatchSource((AxiBall().contour(32),), 1.0, 1 / 8)
    with pytest.raises(ValueError, match="increasing"):
        VelocityHistory((0.0, 0.0), (src, src))
    with pytest.raises(ValueError):
        VelocityHistory((0.0,), ())


def test_linear_and_constant_interpolation(hill_history):
    pts = [(0.5, 0.5)]
    t = 0.1
    u0 = hill_history.velocity(0.0, pts)
    u1 = hill_history.velocity(0.25, pts)
    lin = hill_history.velocity(t, pts)
    assert np.allclose(lin, 0.6 * u0 + 0.4 * u1, rtol=0, atol=1e-15)
    const = VelocityHistory(hill_history.times, hill_history.sources, Interpolation.CONSTANT)
    assert np.array_equal(const.velocity(t, pts), u0)


def _axis_path(t, z):
    return [(float(a), HalfPlanePoint(0.0, float(b))) for a, b in zip(t, z)]


def test_classify_three_fates():
    t = np.linspace(0, 20, 201)
    taus = (t, W * t)
    tail = _axis_path(t, W * t - 1.5 - 0.1 * t)
    interior = _axis_path(t, W * t + np.tanh(t / 5))
    ahead = _axis_path(t, W * t + 1 + 0.5 * np.exp(-t / 3))
    assert classify_axis_fate(tail, taus) is Fate.TAIL
    assert classify_axis_fate(interior, taus) is Fate.INTERIOR_TO_FRONT
    assert classify_axis_fate(ahead, taus) is Fate.AHEAD_TO_FRONT
    assert first_front_time(interior, taus) == pytest.approx(t[np.argmax(np.tanh(t / 5) >= 0.9)])
    assert math.isnan(first_front_time(tail, taus))


def test_classify_rejects_off_axis_and_unclassifiable():
    t = np.linspace(0, 5, 11)
    taus = (t, 0 * t)
    with pytest.raises(ValueError, match="axis"):
        classify_axis_fate([(0.0, HalfPlanePoint(0.1, 0.0))], taus)
    wobble = _axis_path(t, 0.5 + 0.3 * np.sin(3 * t))
    with pytest.raises(ValueError):
        classify_axis_fate(wobble, taus)


def test_path_csv_round_trip(tmp_path, hill_history):
    path = advect(hill_history, 0.0, (0.3, 0.1), 1.0, 0.1)
    write_path_csv(tmp_path / "p.csv", path)
    assert (tmp_path / "p.csv").read_text().splitlines()[0] == "t,r,z"
    assert read_path_csv(tmp_path / "p.csv") == path
