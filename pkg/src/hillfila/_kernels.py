"""Jitted ring kernels, polygon clipping and quadrature sums.

Everything here works on plain float arrays; the public wrappers live in
``biot_savart`` and ``geometry``.  Ring kernels are per unit circulation
(``Gamma = omega_theta dr dz``) and use the Stokes stream function
convention ``u_r = -d_z psi / r``, ``u_z = d_r psi / r``.
"""

import math

import numba
import numpy as np

INV_2PI = 1.0 / (2.0 * math.pi)
SMALL_M = 0.1  # below this the brackets cancel badly; series are exact to ~1e-9
# (1 - m/2) K - E = (pi/32) m^2 (1 + 0.75 m + ...)
_PSI_C = np.array([1.0, 0.75, 0.5859375, 0.478515625, 0.40374755859375,
                   0.3489532470703125, 0.30715155601501465, 0.27424246072769165])
# -K + E (2 - m) / (2 - 2m) = (3 pi/32) m^2 (1 + 1.25 m + ...)
_UR_C = np.array([1.0, 1.25, 1.3671875, 1.435546875, 1.48040771484375,
                  1.5121307373046875, 1.5357577800750732, 1.5540406107902527])
REFINE_RATIO = 4.0
# Maclaurin coefficients of (2/pi) K(m) and (2/pi) E(m)
_K_C = np.array([1.0, 0.25, 0.140625, 0.09765625, 0.07476806640625, 0.0605621337890625,
                 0.050889015197753906, 0.043878793716430664, 0.038565346039831638])
_E_C = np.array([1.0, -0.25, -0.046875, -0.01953125, -0.01068115234375,
                 -0.0067291259765625, -0.0046262741088867188, -0.0033752918243408203,
                 -0.0025710230693221092])


@numba.njit(cache=True)
def _horner(c, m):
    acc = 0.0
    for i in range(c.size - 1, -1, -1):
        acc = acc * m + c[i]
    return acc


@numba.njit(cache=True)
def ke_fast(m, m1):
    """K, E for the quadrature sums: Maclaurin series for small m, otherwise
    the Hastings log-polynomial forms (absolute error below 2e-8)."""
    if m < SMALL_M:
        return 0.5 * math.pi * _horner(_K_C, m), 0.5 * math.pi * _horner(_E_C, m)
    x = m1
    lg = -math.log(x)
    k = ((((0.01451196212 * x + 0.03742563713) * x + 0.03590092383) * x
          + 0.09666344259) * x + 1.38629436112) \
        + ((((0.00441787012 * x + 0.03328355346) * x + 0.06880248576) * x
            + 0.12498593597) * x + 0.5) * lg
    e = ((((0.01736506451 * x + 0.04757383546) * x + 0.06260601220) * x
          + 0.44325141463) * x + 1.0) \
        + ((((0.00526449639 * x + 0.04069697526) * x + 0.09200180037) * x
            + 0.24998368310) * x) * lg
    return k, e


@numba.njit(cache=True)
def ring_psi(r, rp, dz2):
    """Stream function at radius r of a unit ring at radius rp; dz2 = squared axial offset."""
    p = 2.0 * r * rp
    a = r * r + rp * rp + dz2 + p
    if p == 0.0 or a == 0.0:
        return 0.0
    m = 2.0 * p / a
    if m < SMALL_M:
        bracket = (math.pi / 32.0) * m * m * _horner(_PSI_C, m)
    else:
        bq = (r - rp) * (r - rp) + dz2
        k, e = ke_fast(m, bq / a)
        bracket = (1.0 - 0.5 * m) * k - e
    return INV_2PI * math.sqrt(a) * bracket


@numba.njit(cache=True)
def ring_vel(r, rp, dz, dz2):
    """(u_r, u_z) at (r, z) from a unit ring at (rp, z - dz); dz2 may carry a core term."""
    s = r * r + rp * rp + dz2
    p = 2.0 * r * rp
    a = s + p
    bq = (r - rp) * (r - rp) + dz2
    ia = 1.0 / a
    m = 2.0 * p * ia
    k, e = ke_fast(m, bq * ia)
    pref = INV_2PI * math.sqrt(ia)
    uz = pref * (k + (rp * rp - r * r - dz2) / bq * e)
    if r == 0.0:
        return 0.0, uz
    if m < SMALL_M:
        bracket = (3.0 * math.pi / 32.0) * m * m * _horner(_UR_C, m)
    else:
        bracket = -k + s / bq * e
    return pref * (dz / r) * bracket, uz


# ---------------------------------------------------------------------------
# polygons

@numba.njit(cache=True)
def poly_moments(xr, xz, n):
    """Area, int r dA, int z dA, int r^3 dA of the closed polygon xr[:n], xz[:n]."""
    area = 0.0
    mr = 0.0
    mz = 0.0
    mr3 = 0.0
    for i in range(n):
        j = i + 1 if i + 1 < n else 0
        x0 = xr[i]
        y0 = xz[i]
        x1 = xr[j]
        y1 = xz[j]
        cr = x0 * y1 - x1 * y0
        area += cr
        mr += cr * (x0 + x1)
        mz += cr * (y0 + y1)
        mr3 += cr * (x0 * x0 * x0 + x0 * x0 * x1 + x0 * x1 * x1 + x1 * x1 * x1)
    return 0.5 * area, mr / 6.0, mz / 6.0, mr3 / 20.0


@numba.njit(cache=True)
def _clip_edge(inr, inz, n, outr, outz, axis, bound, keep_greater):
    """One Sutherland-Hodgman pass against the line coord[axis] = bound."""
    m = 0
    if n == 0:
        return 0
    pr = inr[n - 1]
    pz = inz[n - 1]
    pv = pr if axis == 0 else pz
    pin = pv >= bound if keep_greater else pv <= bound
    for i in range(n):
        cr = inr[i]
        cz = inz[i]
        cv = cr if axis == 0 else cz
        cin = cv >= bound if keep_greater else cv <= bound
        if cin != pin:
            t = (bound - pv) / (cv - pv)
            if axis == 0:
                outr[m] = bound
                outz[m] = pz + t * (cz - pz)
            else:
                outr[m] = pr + t * (cr - pr)
                outz[m] = bound
            m += 1
        if cin:
            outr[m] = cr
            outz[m] = cz
            m += 1
        pr = cr
        pz = cz
        pv = cv
        pin = cin
    return m


@numba.njit(cache=True)
def clip_box(xr, xz, n, r0, r1, z0, z1, br, bz, cr, cz):
    """Clip polygon against the box; result in (br, bz)[:k], returns k.

    Scratch arrays br, bz, cr, cz need room for n + 4 vertices.
    """
    k = _clip_edge(xr, xz, n, br, bz, 0, r0, True)
    k = _clip_edge(br, bz, k, cr, cz, 0, r1, False)
    k = _clip_edge(cr, cz, k, br, bz, 1, z0, True)
    k = _clip_edge(br, bz, k, cr, cz, 1, z1, False)
    for i in range(k):
        br[i] = cr[i]
        bz[i] = cz[i]
    return k


@numba.njit(cache=True)
def clip_convex(xr, xz, n, qr, qz, nq, br, bz, cr, cz):
    """Clip polygon (xr, xz)[:n] by a positively oriented convex polygon (qr, qz)[:nq].

    Result lands in (br, bz); scratch arrays need n + nq vertices.
    """
    k = n
    for i in range(n):
        br[i] = xr[i]
        bz[i] = xz[i]
    for e in range(nq):
        f = e + 1 if e + 1 < nq else 0
        ar = qr[e]
        az = qz[e]
        dr = qr[f] - ar
        dz = qz[f] - az
        m = 0
        if k == 0:
            return 0
        pr = br[k - 1]
        pz = bz[k - 1]
        ps = dr * (pz - az) - dz * (pr - ar)
        for i in range(k):
            sr = br[i]
            sz = bz[i]
            ss = dr * (sz - az) - dz * (sr - ar)
            if (ss >= 0.0) != (ps >= 0.0):
                t = ps / (ps - ss)
                cr[m] = pr + t * (sr - pr)
                cz[m] = pz + t * (sz - pz)
                m += 1
            if ss >= 0.0:
                cr[m] = sr
                cz[m] = sz
                m += 1
            pr = sr
            pz = sz
            ps = ss
        k = m
        for i in range(k):
            br[i] = cr[i]
            bz[i] = cz[i]
    return k


@numba.njit(cache=True)
def _seg_hits_box(x0, y0, x1, y1, bx0, bx1, by0, by1):
    # Liang-Barsky on the closed box
    t0 = 0.0
    t1 = 1.0
    dx = x1 - x0
    dy = y1 - y0
    for side in range(4):
        if side == 0:
            p = -dx
            q = x0 - bx0
        elif side == 1:
            p = dx
            q = bx1 - x0
        elif side == 2:
            p = -dy
            q = y0 - by0
        else:
            p = dy
            q = by1 - y0
        if p == 0.0:
            if q < 0.0:
                return False
        else:
            t = q / p
            if p < 0.0:
                if t > t1:
                    return False
                if t > t0:
                    t0 = t
            else:
                if t < t0:
                    return False
                if t < t1:
                    t1 = t
    return True


# ---------------------------------------------------------------------------
# patch quadrature mask

@numba.njit(cache=True)
def build_mask(vr, vz, ring_start, ring_len, h, xi):
    """Rasterize disjoint closed polygons onto the lattice (i h, j h).

    Returns cell arrays (raster order, j-major) and the clipped polygon
    pieces of the partially covered cells.
    """
    nring = ring_start.size
    rmax = 0.0
    zmin = np.inf
    zmax = -np.inf
    maxlen = 0
    for q in range(nring):
        s = ring_start[q]
        for v in range(s, s + ring_len[q]):
            rmax = max(rmax, vr[v])
            zmin = min(zmin, vz[v])
            zmax = max(zmax, vz[v])
        maxlen = max(maxlen, ring_len[q])
    ni = int(math.floor(rmax / h)) + 1
    j0 = int(math.floor(zmin / h))
    nj = int(math.floor(zmax / h)) - j0 + 1
    state = np.zeros((nj, ni), dtype=np.int8)

    # cells crossed by non-axis edges
    for q in range(nring):
        s = ring_start[q]
        n = ring_len[q]
        for a in range(n):
            b = a + 1 if a + 1 < n else 0
            x0 = vr[s + a]
            y0 = vz[s + a]
            x1 = vr[s + b]
            y1 = vz[s + b]
            if x0 == 0.0 and x1 == 0.0:
                continue
            ia = max(int(math.floor(min(x0, x1) / h)), 0)
            ib = min(int(math.floor(max(x0, x1) / h)), ni - 1)
            ja = max(int(math.floor(min(y0, y1) / h)) - j0, 0)
            jb = min(int(math.floor(max(y0, y1) / h)) - j0, nj - 1)
            for jj in range(ja, jb + 1):
                for ii in range(ia, ib + 1):
                    if state[jj, ii] == 2:
                        continue
                    if _seg_hits_box(x0, y0, x1, y1, ii * h, (ii + 1) * h,
                                     (jj + j0) * h, (jj + j0 + 1) * h):
                        state[jj, ii] = 2

    # scanline fill of the remaining cells by centre parity
    xs = np.empty(vr.size + 4)
    for jj in range(nj):
        yc = (jj + j0 + 0.5) * h
        nx = 0
        for q in range(nring):
            s = ring_start[q]
            n = ring_len[q]
            for a in range(n):
                b = a + 1 if a + 1 < n else 0
                y0 = vz[s + a]
                y1 = vz[s + b]
                if (y0 <= yc) != (y1 <= yc):
                    x0 = vr[s + a]
                    x1 = vr[s + b]
                    xs[nx] = x0 + (yc - y0) / (y1 - y0) * (x1 - x0)
                    nx += 1
        if nx == 0:
            continue
        xsort = np.sort(xs[:nx])
        p = 0
        for ii in range(ni):
            xc = (ii + 0.5) * h
            while p < nx and xsort[p] < xc:
                p += 1
            if state[jj, ii] == 0 and (p % 2) == 1:
                state[jj, ii] = 1

    ncell = 0
    for jj in range(nj):
        for ii in range(ni):
            if state[jj, ii] != 0:
                ncell += 1
    ci = np.empty(ncell, dtype=np.int64)
    cj = np.empty(ncell, dtype=np.int64)
    cfull = np.zeros(ncell, dtype=np.bool_)
    ccr = np.empty(ncell)
    ccz = np.empty(ncell)
    cgam = np.empty(ncell)
    carea = np.empty(ncell)
    pstart = np.zeros(ncell, dtype=np.int64)
    pend = np.zeros(ncell, dtype=np.int64)

    cap = 16 * ncell + 64
    pvr = np.empty(cap)
    pvz = np.empty(cap)
    pcap = 2 * ncell + 8
    piece_vs = np.empty(pcap, dtype=np.int64)
    piece_vl = np.empty(pcap, dtype=np.int64)
    npiece = 0
    nv = 0
    br = np.empty(maxlen + 8)
    bz = np.empty(maxlen + 8)
    sr = np.empty(maxlen + 8)
    sz = np.empty(maxlen + 8)

    c = 0
    for jj in range(nj):
        for ii in range(ni):
            st = state[jj, ii]
            if st == 0:
                continue
            x0 = ii * h
            y0 = (jj + j0) * h
            ci[c] = ii
            cj[c] = jj + j0
            if st == 1:
                cfull[c] = True
                ccr[c] = x0 + 0.5 * h
                ccz[c] = y0 + 0.5 * h
                carea[c] = h * h
                cgam[c] = xi * ccr[c] * h * h
                pstart[c] = npiece
                pend[c] = npiece
                c += 1
                continue
            area = 0.0
            mr = 0.0
            mz = 0.0
            pstart[c] = npiece
            for q in range(nring):
                s = ring_start[q]
                k = clip_box(vr[s:], vz[s:], ring_len[q], x0, x0 + h, y0, y0 + h,
                             br, bz, sr, sz)
                if k < 3:
                    continue
                a_, mr_, mz_, _ = poly_moments(br, bz, k)
                if a_ <= 1e-14 * h * h:
                    continue
                area += a_
                mr += mr_
                mz += mz_
                if nv + k > cap:
                    cap = 2 * (nv + k)
                    tr = np.empty(cap)
                    tz = np.empty(cap)
                    tr[:nv] = pvr[:nv]
                    tz[:nv] = pvz[:nv]
                    pvr = tr
                    pvz = tz
                if npiece + 1 > pcap:
                    pcap = 2 * pcap
                    t1 = np.empty(pcap, dtype=np.int64)
                    t2 = np.empty(pcap, dtype=np.int64)
                    t1[:npiece] = piece_vs[:npiece]
                    t2[:npiece] = piece_vl[:npiece]
                    piece_vs = t1
                    piece_vl = t2
                pvr[nv:nv + k] = br[:k]
                pvz[nv:nv + k] = bz[:k]
                piece_vs[npiece] = nv
                piece_vl[npiece] = k
                nv += k
                npiece += 1
            pend[c] = npiece
            if area <= 1e-14 * h * h:
                continue  # slot reused by the next cell
            carea[c] = area
            # clamp: slivers lose their centroid to round-off
            ccr[c] = min(max(mr / area, x0), x0 + h)
            ccz[c] = min(max(mz / area, y0), y0 + h)
            cgam[c] = xi * mr
            c += 1
    return (ci[:c], cj[:c], cfull[:c], ccr[:c], ccz[:c], cgam[:c], carea[:c],
            pstart[:c], pend[:c], piece_vs[:npiece].copy(), piece_vl[:npiece].copy(),
            pvr[:nv].copy(), pvz[:nv].copy())


# ---------------------------------------------------------------------------
# per-target quadrature with near-target refinement

@numba.njit(cache=True)
def _sub_moments(c, x0, y0, s, cfull, pstart, pend, piece_vs, piece_vl, pvr, pvz,
                 br, bz, sr, sz):
    if cfull[c]:
        return s * s, (x0 + 0.5 * s) * s * s, (y0 + 0.5 * s) * s * s
    area = 0.0
    mr = 0.0
    mz = 0.0
    for p in range(pstart[c], pend[c]):
        vs = piece_vs[p]
        k = clip_box(pvr[vs:], pvz[vs:], piece_vl[p], x0, x0 + s, y0, y0 + s,
                     br, bz, sr, sz)
        if k < 3:
            continue
        a_, mr_, mz_, _ = poly_moments(br, bz, k)
        area += a_
        mr += mr_
        mz += mz_
    return area, mr, mz


@numba.njit(cache=True)
def patch_target(tr, tz, h, xi, ci, cj, cfull, ccr, ccz, cgam, pstart, pend,
                 piece_vs, piece_vl, pvr, pvz, floor, want_psi):
    """Velocity (or stream function) at one target from the masked patch.

    Cells whose centre lies within REFINE_RATIO * size of the target are
    split into four until the floor size; a floor cell containing the target
    is dropped (its local contribution vanishes to leading order).
    """
    ur = 0.0
    uz = 0.0
    psi = 0.0
    maxpiece = 8
    for p in range(piece_vl.size):
        maxpiece = max(maxpiece, piece_vl[p] + 8)
    br = np.empty(maxpiece)
    bz = np.empty(maxpiece)
    sr = np.empty(maxpiece)
    sz = np.empty(maxpiece)
    stack_x = np.empty(512)
    stack_y = np.empty(512)
    stack_s = np.empty(512)
    stack_c = np.empty(512, dtype=np.int64)
    near = REFINE_RATIO * h
    for c in range(ci.size):
        xc = (ci[c] + 0.5) * h
        yc = (cj[c] + 0.5) * h
        dx = tr - xc
        dy = tz - yc
        if dx * dx + dy * dy >= near * near or h <= floor:
            if h <= floor and abs(dx) <= 0.5 * h and abs(dy) <= 0.5 * h:
                continue
            dzc = tz - ccz[c]
            if dzc == 0.0 and tr == ccr[c]:
                continue
            if want_psi:
                psi += cgam[c] * ring_psi(tr, ccr[c], dzc * dzc)
            else:
                a_, b_ = ring_vel(tr, ccr[c], dzc, dzc * dzc)
                ur += cgam[c] * a_
                uz += cgam[c] * b_
            continue
        top = 0
        hs = 0.5 * h
        for q in range(4):
            stack_x[top] = ci[c] * h + (q % 2) * hs
            stack_y[top] = cj[c] * h + (q // 2) * hs
            stack_s[top] = hs
            stack_c[top] = c
            top += 1
        while top > 0:
            top -= 1
            x0 = stack_x[top]
            y0 = stack_y[top]
            s = stack_s[top]
            xs = x0 + 0.5 * s
            ys = y0 + 0.5 * s
            dx = tr - xs
            dy = tz - ys
            d2 = dx * dx + dy * dy
            if d2 < (REFINE_RATIO * s) ** 2 and s > floor and top + 4 <= 512:
                hs = 0.5 * s
                for q in range(4):
                    stack_x[top] = x0 + (q % 2) * hs
                    stack_y[top] = y0 + (q // 2) * hs
                    stack_s[top] = hs
                    stack_c[top] = c
                    top += 1
                continue
            if abs(dx) <= 0.5 * s and abs(dy) <= 0.5 * s:
                continue
            area, mr, mz = _sub_moments(c, x0, y0, s, cfull, pstart, pend, piece_vs,
                                        piece_vl, pvr, pvz, br, bz, sr, sz)
            if area <= 1e-14 * s * s:
                continue
            rc = min(max(mr / area, x0), x0 + s)
            zc = min(max(mz / area, y0), y0 + s)
            gam = xi * mr
            dzc = tz - zc
            if dzc == 0.0 and tr == rc:
                continue
            if want_psi:
                psi += gam * ring_psi(tr, rc, dzc * dzc)
            else:
                a_, b_ = ring_vel(tr, rc, dzc, dzc * dzc)
                ur += gam * a_
                uz += gam * b_
    if tr == 0.0:
        ur = 0.0
    return ur, uz, psi


@numba.njit(cache=True, parallel=True)
def patch_batch(trs, tzs, h, xi, ci, cj, cfull, ccr, ccz, cgam, pstart, pend,
                piece_vs, piece_vl, pvr, pvz, floor, want_psi):
    n = trs.size
    out = np.empty((n, 2))
    for t in numba.prange(n):
        ur, uz, psi = patch_target(trs[t], tzs[t], h, xi, ci, cj, cfull, ccr, ccz, cgam,
                                   pstart, pend, piece_vs, piece_vl, pvr, pvz, floor,
                                   want_psi)
        if want_psi:
            out[t, 0] = psi
            out[t, 1] = 0.0
        else:
            out[t, 0] = ur
            out[t, 1] = uz
    return out


# ---------------------------------------------------------------------------
# blobs

@numba.njit(cache=True, parallel=True)
def blob_batch(trs, tzs, br, bz, bgam, delta, want_psi):
    """Regularized ring sums: dz^2 -> dz^2 + delta_j^2 in every kernel term."""
    n = trs.size
    out = np.empty((n, 2))
    d2 = delta * delta
    for t in numba.prange(n):
        r = trs[t]
        z = tzs[t]
        a0 = 0.0
        a1 = 0.0
        for j in range(br.size):
            dz = z - bz[j]
            if want_psi:
                a0 += bgam[j] * ring_psi(r, br[j], dz * dz + d2[j])
            else:
                u, w = ring_vel(r, br[j], dz, dz * dz + d2[j])
                a0 += bgam[j] * u
                a1 += bgam[j] * w
        out[t, 0] = a0
        out[t, 1] = a1
    return out


@numba.njit(cache=True)
def _bspline(q):
    q = abs(q)
    if q < 1.0:
        return 2.0 / 3.0 - q * q + 0.5 * q * q * q
    if q < 2.0:
        t = 2.0 - q
        return t * t * t / 6.0
    return 0.0


@numba.njit(cache=True)
def deposit(r0, z0, h, nr, nz, br, bz, bq, beps):
    """Smooth the blob charges bq onto grid nodes (r0 + i h, z0 + j h).

    Each blob spreads with a tensor cubic B-spline of width beps[j]; a mirror
    copy at -r keeps the field even across the axis.
    """
    out = np.zeros((nr, nz))
    for j in range(br.size):
        e = beps[j]
        w = bq[j] / (e * e)
        for s in range(2):
            rc = br[j] if s == 0 else -br[j]
            if s == 1 and br[j] > 2.0 * e:
                break
            i0 = max(0, int(math.floor((rc - 2.0 * e - r0) / h)))
            i1 = min(nr - 1, int(math.ceil((rc + 2.0 * e - r0) / h)))
            k0 = max(0, int(math.floor((bz[j] - 2.0 * e - z0) / h)))
            k1 = min(nz - 1, int(math.ceil((bz[j] + 2.0 * e - z0) / h)))
            for i in range(i0, i1 + 1):
                wr = _bspline((r0 + i * h - rc) / e)
                if wr == 0.0:
                    continue
                for k in range(k0, k1 + 1):
                    out[i, k] += w * wr * _bspline((z0 + k * h - bz[j]) / e)
    return out
