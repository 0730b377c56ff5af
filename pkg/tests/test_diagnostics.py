import math

import numpy as np
import pytest
from scipy import integrate

from hillfila.biot_savart import BlobSource
from hillfila.diagnostics import (C0_HILL, CSV_HEADER, DiagnosticsRecord, DiagnosticsWriter,
                                  Monitor, ShiftTrackingLost, blob_energy, conserved_suite,
                                  discrepancy_norm, discrepancy_parts, estimate_tau,
                                  golden_section, inscription_radius, max_dr_xi, patch_diameter,
                                  patch_energy, read_diagnostics_csv, sup_vorticity)
from hillfila.evolution import BlobState, PatchState
from hillfila.geometry import AxiBall, Contour, contains
from hillfila.hill import hill_velocity, overlap_f

from conftest import W

E_HILL = 8 * math.pi / 315


def hill_patch(tau=0.0, n=1024):
    return PatchState(0.0, (AxiBall(center_z=tau).contour(n),))


def star_contour(rng, n=400):
    th = np.linspace(0, math.pi, n + 1)
    k = np.arange(1, 5)
    amp = rng.uniform(-0.12, 0.12, size=4) / k
    rad = 1 + np.sum(amp[:, None] * np.cos(k[:, None] * th[None, :]), axis=0)
    nodes = np.column_stack([rad * np.sin(th), -rad * np.cos(th)])
    nodes[0, 0] = nodes[-1, 0] = 0.0
    return Contour(nodes)


def blob_ball(h=1 / 32, center=0.0, core_factor=2.0):
    rs = (np.arange(int(round(1 / h))) + 0.5) * h
    zs = (np.arange(-int(round(1 / h)), int(round(1 / h))) + 0.5) * h
    r, z = (a.ravel() for a in np.meshgrid(rs, zs))
    keep = r * r + z * z < 1
    r, z = r[keep], z[keep] + center
    return BlobState(0.0, BlobSource(r, z, np.ones_like(r), 2 * math.pi * r * h * h,
                                     core_factor * h))


# -- shift tracking ---------------------------------------------------------

def test_discrepancy_vanishes_at_true_shift():
    l1, l2, r2 = discrepancy_parts(hill_patch(0.3), 0.3)
    # only polygon-vs-polygon slivers remain; L2 is their square root
    assert l1 < 1e-5 and r2 < 1e-5 and l2 < 5e-3


@pytest.mark.parametrize("dtau", [0.1, 0.3, 1.0, 2.0])
def test_discrepancy_l1_part_is_overlap(dtau):
    l1, l2, _ = discrepancy_parts(hill_patch(0.3), 0.3 + dtau)
    assert l1 == pytest.approx(overlap_f(dtau), rel=1e-2)
    assert l2 == pytest.approx(math.sqrt(l1), rel=1e-12)


def test_discrepancy_value_example():
    assert discrepancy_parts(hill_patch(), 0.3)[0] == pytest.approx(1.8707, rel=1e-3)


def test_discrepancy_is_continuous_in_tau():
    s = hill_patch(0.1)
    taus = np.linspace(-0.5, 0.7, 241)
    vals = np.array([discrepancy_norm(s, t) for t in taus])
    d = taus[1] - taus[0]
    # L1 and r^2 L1 are 2 pi Lipschitz; L2 is the square root of L1
    assert np.max(np.abs(np.diff(vals))) <= 4 * math.pi * d + math.sqrt(2 * math.pi * d) + 1e-6


@pytest.mark.parametrize("shift", [0.3, -0.45, 0.123456])
def test_estimate_tau_recovers_translation(shift):
    assert estimate_tau(hill_patch(shift), 0.0) == pytest.approx(shift, abs=1e-6)


def test_estimate_tau_widens_once_then_fails():
    assert estimate_tau(hill_patch(0.8), 0.0, bracket=0.5) == pytest.approx(0.8, abs=1e-6)
    with pytest.raises(ShiftTrackingLost, match="shift tracking lost"):
        estimate_tau(hill_patch(1.6), 0.0, bracket=0.5)


def test_estimate_tau_on_blobs():
    assert estimate_tau(blob_ball(center=0.3), 0.0) == pytest.approx(0.3, abs=5e-3)


def test_golden_section_on_parabola():
    assert golden_section(lambda x: (x - 0.37) ** 2, -1, 2, 1e-8) == pytest.approx(0.37, abs=1e-8)


# -- geometry -----------------------------------------------------------------

def test_inscription_radius_of_half_disk():
    assert inscription_radius(AxiBall().contour(512), 0.01) == pytest.approx(1.0, abs=0.01)


def notched_disk():
    th = np.linspace(0, math.pi, 401)
    nodes = np.column_stack([np.sin(th), -np.cos(th)])
    # cut a notch into the south pole: the axis now starts at z = -0.5
    keep = th > 0.45
    nodes = np.vstack([[0.0, -0.5], nodes[keep]])
    nodes[-1, 0] = 0.0
    return Contour(nodes)


def brute_force_inscription(c, n_z=400, n_rho=400):
    best = 0.0
    phi = np.linspace(0, math.pi, 181)
    for zc in np.linspace(c.z.min(), c.z.max(), n_z):
        if not contains(c, (1e-9, zc)):
            continue
        for rho in np.linspace(0, 1.2, n_rho)[1:]:
            pts = np.column_stack([rho * np.sin(phi), zc - rho * np.cos(phi)])
            pts[:, 0] = np.maximum(pts[:, 0], 1e-9)
            if not np.all(contains(c, pts)):
                break
            best = max(best, rho)
    return best


def test_inscription_radius_notch_against_brute_force():
    c = notched_disk()
    r = inscription_radius(c, 0.01)
    assert r < 1.0
    assert r == pytest.approx(brute_force_inscription(c), abs=0.02)


def test_inscription_radius_two_components():
    s = PatchState(0.0, (AxiBall(0.0, 0.3).contour(256), AxiBall(1.0, 0.2).contour(256)))
    assert inscription_radius(s, 0.01) == pytest.approx(0.3, abs=0.01)


def test_inscription_radius_off_axis_component_is_zero():
    ring = Contour([[0.5, -0.1], [0.7, -0.1], [0.7, 0.1], [0.5, 0.1]])
    assert inscription_radius(ring) == 0.0


def test_inscription_radius_at_most_half_diameter():
    rng = np.random.default_rng(7)
    for _ in range(5):
        s = PatchState(0.0, (star_contour(rng),))
        assert inscription_radius(s) <= patch_diameter(s) / 2 + 1e-12


def test_sup_vorticity_attained_on_boundary():
    rng = np.random.default_rng(8)
    for _ in range(5):
        c = star_contour(rng)
        s = PatchState(0.0, (c,), 1.7)
        pts = np.column_stack([rng.uniform(0, 1.3, 40000), rng.uniform(-1.3, 1.3, 40000)])
        inside = pts[contains(c, pts)]
        dense = 1.7 * inside[:, 0].max()
        assert sup_vorticity(s) >= dense
        assert sup_vorticity(s) == pytest.approx(dense, rel=2e-2)


def test_sup_vorticity_of_hill_is_translation_invariant():
    assert sup_vorticity(hill_patch()) == pytest.approx(1.0)
    assert sup_vorticity(hill_patch(0.77)) == sup_vorticity(hill_patch())


# -- conserved quantities -----------------------------------------------------

def direct_hill_energy():
    """(1/2) int |u_H|^2 dx in spherical coordinates, with the r > 4 tail done analytically."""
    def dens(rho, th):
        ur, uz = hill_velocity((rho * math.sin(th), rho * math.cos(th)))
        return 0.5 * (ur * ur + uz * uz) * 2 * math.pi * rho * rho * math.sin(th)

    core = sum(integrate.dblquad(lambda rho, th: dens(rho, th), 0, math.pi, a, b,
                                 epsabs=1e-12, epsrel=1e-10)[0] for a, b in ((0, 1), (1, 4)))
    # exterior |u|^2 = rho^-6 g(theta): integrate g at rho = 1 and use int_4^inf rho^-4 = 1/192
    g = integrate.quad(lambda th: dens(1.0, th), 0, math.pi)[0]
    return core + g / (3 * 4 ** 3)


def test_hill_energy_closed_form_and_pairing():
    direct = direct_hill_energy()
    assert direct == pytest.approx(E_HILL, rel=1e-8)
    assert patch_energy(hill_patch(n=512), 1 / 64) == pytest.approx(direct, rel=2e-2)


def test_conserved_suite_for_hill():
    q = conserved_suite(hill_patch(n=2048), h_quad=1 / 64)
    assert q.impulse == pytest.approx(4 * math.pi / 15, rel=1e-5)
    assert q.l1 == pytest.approx(4 * math.pi / 3, rel=1e-5)
    assert q.l2 == pytest.approx(math.sqrt(4 * math.pi / 3), rel=1e-5)
    assert q.linf == 1.0
    assert q.energy == pytest.approx(E_HILL, rel=2e-3)
    assert math.isnan(conserved_suite(hill_patch(n=64), with_energy=False).energy)


def test_conserved_suite_for_blob_hill():
    q = conserved_suite(blob_ball(1 / 32))
    assert q.l1 == pytest.approx(4 * math.pi / 3, rel=1e-2)
    assert q.impulse == pytest.approx(4 * math.pi / 15, rel=2e-2)
    assert q.linf == 1.0
    assert blob_energy(blob_ball(1 / 32)) == pytest.approx(E_HILL, rel=5e-2)


# -- gradient monitor ---------------------------------------------------------

def test_max_dr_xi_of_gaussian_bump():
    h, s = 1 / 64, 0.15
    rs = (np.arange(64) + 0.5) * h
    zs = (np.arange(-40, 40) + 0.5) * h
    r, z = (a.ravel() for a in np.meshgrid(rs, zs))
    xi = np.exp(-((r - 0.5) ** 2 + z ** 2) / s ** 2)
    st = BlobState(0.0, BlobSource(r, z, xi, 2 * math.pi * r * h * h, 2 * h))
    exact = math.sqrt(2) / s * math.exp(-0.5)
    assert max_dr_xi(st, 1 / 256) == pytest.approx(exact, rel=0.1)


def test_max_dr_xi_ignores_blob_pileup():
    # doubling every blob in place doubles the raw deposit but not the field
    h, s = 1 / 64, 0.15
    rs = (np.arange(64) + 0.5) * h
    r, z = (a.ravel() for a in np.meshgrid(rs, (np.arange(-40, 40) + 0.5) * h))
    xi = np.exp(-((r - 0.5) ** 2 + z ** 2) / s ** 2)
    vol = 2 * math.pi * r * h * h
    one = BlobState(0.0, BlobSource(r, z, xi, vol, 2 * h))
    two = BlobState(0.0, BlobSource(np.r_[r, r], np.r_[z, z], np.r_[xi, xi], np.r_[vol, vol],
                                    2 * h))
    assert max_dr_xi(two) == pytest.approx(max_dr_xi(one), rel=1e-9)


def test_max_dr_xi_of_zero_field_and_patch_error():
    r = np.linspace(0.1, 0.9, 9)
    st = BlobState(0.0, BlobSource(r, 0 * r, 0 * r, 0.01 + 0 * r, 0.05))
    assert max_dr_xi(st) == 0.0
    with pytest.raises(TypeError, match="distributional"):
        max_dr_xi(hill_patch(n=64))


# -- monitor and CSV ----------------------------------------------------------

def test_monitor_record_for_hill():
    rec = Monitor()(hill_patch(n=512))
    assert rec.tau == pytest.approx(0.0, abs=1e-6) and rec.speed_residual < 1e-6
    assert rec.diameter == pytest.approx(2.0) and rec.perimeter == pytest.approx(math.pi + 2, rel=1e-4)
    assert rec.r_ins == pytest.approx(1.0, abs=1e-3)
    assert rec.sup_vorticity == pytest.approx(1.0)
    assert rec.fs_ratio == pytest.approx(C0_HILL, rel=1e-2)
    assert math.isnan(rec.max_dr_xi)


def test_monitor_guards_against_jumps():
    m = Monitor(with_energy=False)
    with pytest.raises(ShiftTrackingLost, match="jump"):
        m(hill_patch(0.7, n=256))


def test_hill_feng_sverak_constant():
    assert C0_HILL == pytest.approx((1 / 3) / ((8 * math.pi / 15) ** 0.25 * (4 * math.pi / 3) ** 0.25))


def test_csv_header_and_nan_round_trip(tmp_path):
    assert ",".join(CSV_HEADER) == ("t,tau,speed_residual,diameter,perimeter,r_ins,impulse,"
                                    "energy,l1,l2,linf,sup_vorticity,max_dr_xi,fs_ratio")
    rec = DiagnosticsRecord(0.1, 0.0133, 1e-5, 2.0, math.pi, 1.0, 0.8, 0.08, 4.1, 2.0, 1.0,
                            1.0, math.nan, 0.2)
    with DiagnosticsWriter(tmp_path / "d.csv") as w:
        w.write(rec)
    text = (tmp_path / "d.csv").read_text().splitlines()
    assert text[1].split(",")[12] == "nan"
    back = read_diagnostics_csv(tmp_path / "d.csv")[0]
    assert back.t == rec.t and back.perimeter == rec.perimeter and math.isnan(back.max_dr_xi)
