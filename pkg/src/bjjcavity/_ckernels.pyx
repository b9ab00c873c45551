# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled counterparts of :mod:`bjjcavity._pykernels` (same signatures, same results)."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, sin, cos, fabs, ceil, pow

cdef double TWO_PI = 6.283185307179586

cnp.import_array()

cdef enum:
    STATUS_OK = 0
    STATUS_POLE = 1
    STATUS_STEP_LIMIT = 2

cdef double C2 = 1.0 / 5, C3 = 3.0 / 10, C4 = 4.0 / 5, C5 = 8.0 / 9
cdef double A21 = 1.0 / 5
cdef double A31 = 3.0 / 40, A32 = 9.0 / 40
cdef double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9
cdef double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561, A54 = -212.0 / 729
cdef double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247, A64 = 49.0 / 176, A65 = -5103.0 / 18656
cdef double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192, B5 = -2187.0 / 6784, B6 = 11.0 / 84
cdef double E1 = -71.0 / 57600, E3 = 71.0 / 16695, E4 = -71.0 / 1920
cdef double E5 = 17253.0 / 339200, E6 = -22.0 / 525, E7 = 1.0 / 40

from ._pykernels import _P

cdef double P[7][4]
for _i in range(7):
    for _j in range(4):
        P[_i][_j] = _P[_i][_j]

cdef double SAFE = 0.9
cdef double BETA = 0.04
cdef double EXPO1 = 0.2 - 0.04 * 0.75
cdef double FAC_MIN = 0.2
cdef double FAC_MAX = 10.0


cdef struct Field:
    double r
    double s
    double B
    double C2
    double eps_pole
    int nk
    double *kt
    double *ka


cdef inline double tilt(Field *f, double t) nogil:
    cdef int lo, hi, mid
    cdef double a, w
    if f.nk == 1 or t <= f.kt[0]:
        a = f.ka[0]
    elif t >= f.kt[f.nk - 1]:
        a = f.ka[f.nk - 1]
    else:
        # bisect_right(kt, t) - 1
        lo = 0
        hi = f.nk
        while lo < hi:
            mid = (lo + hi) // 2
            if t < f.kt[mid]:
                hi = mid
            else:
                lo = mid + 1
        lo -= 1
        w = (t - f.kt[lo]) / (f.kt[lo + 1] - f.kt[lo])
        a = f.ka[lo] + w * (f.ka[lo + 1] - f.ka[lo])
    return f.s * a * a


cdef inline bint rhs(Field *f, double t, double z, double phi, double *dz, double *dphi) nogil:
    cdef double one_minus = 1.0 - z * z
    cdef double root, d
    if not one_minus >= f.eps_pole:
        return False
    root = sqrt(one_minus)
    d = z - f.B
    dz[0] = -root * sin(phi)
    dphi[0] = z * cos(phi) / root + f.r * z + tilt(f, t) / (d * d + f.C2)
    return True


cdef inline double _max(double a, double b) nogil:
    return a if a > b else b


cdef inline double _min(double a, double b) nogil:
    return a if a < b else b


cdef double initial_step(Field *f, double t, double z, double phi, double fz, double fp,
                         double rtol, double atol, double h_max) nogil:
    cdef double sk_z = atol + rtol * fabs(z)
    cdef double sk_p = atol + rtol * fabs(phi)
    cdef double d0 = sqrt(0.5 * ((z / sk_z) ** 2 + (phi / sk_p) ** 2))
    cdef double d1 = sqrt(0.5 * ((fz / sk_z) ** 2 + (fp / sk_p) ** 2))
    cdef double h0, d2, dm, h1, gz, gp
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    h0 = _min(h0, h_max)
    if not rhs(f, t + h0, z + h0 * fz, phi + h0 * fp, &gz, &gp):
        return h0
    d2 = sqrt(0.5 * (((gz - fz) / sk_z) ** 2 + ((gp - fp) / sk_p) ** 2)) / h0
    dm = _max(d1, d2)
    if dm <= 1e-15:
        h1 = _max(1e-6, h0 * 1e-3)
    else:
        h1 = pow(0.01 / dm, 0.2)
    return _min(_min(100.0 * h0, h1), h_max)


def integrate_dopri(double z0, double phi0, double r, double s, double B, double C,
                    knot_t, knot_a, sample_times,
                    double rtol, double atol, double h_max, long max_steps,
                    double eps_pole, bint record_steps):
    cdef double[::1] kt = np.ascontiguousarray(knot_t, dtype=np.float64)
    cdef double[::1] ka = np.ascontiguousarray(knot_a, dtype=np.float64)
    cdef double[::1] ts = np.ascontiguousarray(sample_times, dtype=np.float64)
    cdef Py_ssize_t n = ts.shape[0]
    zs_arr = np.empty(n)
    phis_arr = np.empty(n)
    cdef double[::1] zs = zs_arr
    cdef double[::1] phis = phis_arr
    steps = []

    cdef Field f
    f.r = r
    f.s = s
    f.B = B
    f.C2 = C * C
    f.eps_pole = eps_pole
    f.nk = kt.shape[0]
    f.kt = &kt[0]
    f.ka = &ka[0]

    cdef double t = ts[0], t_end = ts[n - 1]
    cdef double z = z0, phi = phi0
    cdef double k1z, k1p, k2z, k2p, k3z, k3p, k4z, k4p, k5z, k5p, k6z, k6p, k7z, k7p
    cdef double zn = 0.0, pn = 0.0, h, h_new, h_min_pole, facold, err, fac, fac11
    cdef double ez, ep, sk_z, sk_p, t_new, th, th2, th3, th4, dz, dp, w
    cdef bint last, ok, last_rejected = False
    cdef long n_accept = 0, n_reject = 0, n_fev
    cdef Py_ssize_t filled = 1
    cdef int row
    cdef double kzs[7]
    cdef double kps[7]

    zs[0] = z
    phis[0] = phi
    if record_steps:
        steps.append((t, z, phi))

    n_fev = 1
    if not rhs(&f, t, z, phi, &k1z, &k1p):
        return STATUS_POLE, filled, zs_arr, phis_arr, steps, (0, 0, n_fev)
    h = initial_step(&f, t, z, phi, k1z, k1p, rtol, atol, h_max)
    n_fev += 1
    h_min_pole = 1e-14 * _max(1.0, fabs(t_end))
    facold = 1e-4

    while filled < n:
        if n_accept + n_reject >= max_steps:
            return STATUS_STEP_LIMIT, filled, zs_arr, phis_arr, steps, (n_accept, n_reject, n_fev)
        last = False
        if t + h >= t_end:
            h = t_end - t
            last = True

        ok = (rhs(&f, t + C2 * h, z + h * A21 * k1z, phi + h * A21 * k1p, &k2z, &k2p)
              and rhs(&f, t + C3 * h, z + h * (A31 * k1z + A32 * k2z),
                      phi + h * (A31 * k1p + A32 * k2p), &k3z, &k3p)
              and rhs(&f, t + C4 * h, z + h * (A41 * k1z + A42 * k2z + A43 * k3z),
                      phi + h * (A41 * k1p + A42 * k2p + A43 * k3p), &k4z, &k4p)
              and rhs(&f, t + C5 * h,
                      z + h * (A51 * k1z + A52 * k2z + A53 * k3z + A54 * k4z),
                      phi + h * (A51 * k1p + A52 * k2p + A53 * k3p + A54 * k4p), &k5z, &k5p)
              and rhs(&f, t + h,
                      z + h * (A61 * k1z + A62 * k2z + A63 * k3z + A64 * k4z + A65 * k5z),
                      phi + h * (A61 * k1p + A62 * k2p + A63 * k3p + A64 * k4p + A65 * k5p),
                      &k6z, &k6p))
        if ok:
            zn = z + h * (B1 * k1z + B3 * k3z + B4 * k4z + B5 * k5z + B6 * k6z)
            pn = phi + h * (B1 * k1p + B3 * k3p + B4 * k4p + B5 * k5p + B6 * k6p)
            ok = rhs(&f, t + h, zn, pn, &k7z, &k7p)
        n_fev += 6

        if not ok:
            n_reject += 1
            h *= 0.25
            last_rejected = True
            if h < h_min_pole:
                return STATUS_POLE, filled, zs_arr, phis_arr, steps, (n_accept, n_reject, n_fev)
            continue

        ez = h * (E1 * k1z + E3 * k3z + E4 * k4z + E5 * k5z + E6 * k6z + E7 * k7z)
        ep = h * (E1 * k1p + E3 * k3p + E4 * k4p + E5 * k5p + E6 * k6p + E7 * k7p)
        sk_z = atol + rtol * _max(fabs(z), fabs(zn))
        sk_p = atol + rtol * _min(_max(fabs(phi), fabs(pn)), TWO_PI)
        err = sqrt(0.5 * ((ez / sk_z) ** 2 + (ep / sk_p) ** 2))

        fac11 = pow(err, EXPO1)
        if err <= 1.0:
            fac = fac11 / pow(facold, BETA)
            fac = _max(1.0 / FAC_MAX, _min(1.0 / FAC_MIN, fac / SAFE))
            h_new = _min(h / fac, h_max)
            if last_rejected:
                h_new = _min(h_new, h)
            facold = _max(err, 1e-4)
            n_accept += 1
            last_rejected = False

            t_new = t_end if last else t + h
            if filled < n and ts[filled] <= t_new:
                kzs[0] = k1z; kzs[1] = k2z; kzs[2] = k3z; kzs[3] = k4z
                kzs[4] = k5z; kzs[5] = k6z; kzs[6] = k7z
                kps[0] = k1p; kps[1] = k2p; kps[2] = k3p; kps[3] = k4p
                kps[4] = k5p; kps[5] = k6p; kps[6] = k7p
            while filled < n and ts[filled] <= t_new:
                if ts[filled] == t_new:
                    zs[filled] = zn
                    phis[filled] = pn
                else:
                    th = (ts[filled] - t) / h
                    th2 = th * th
                    th3 = th2 * th
                    th4 = th3 * th
                    dz = 0.0
                    dp = 0.0
                    for row in range(7):
                        w = P[row][0] * th + P[row][1] * th2 + P[row][2] * th3 + P[row][3] * th4
                        dz += w * kzs[row]
                        dp += w * kps[row]
                    zs[filled] = z + h * dz
                    phis[filled] = phi + h * dp
                filled += 1
            t = t_new
            z = zn
            phi = pn
            k1z = k7z
            k1p = k7p
            if record_steps:
                steps.append((t, z, phi))
            h = h_new
            if 1.0 - z * z < 2.0 * eps_pole:
                return STATUS_POLE, filled, zs_arr, phis_arr, steps, (n_accept, n_reject, n_fev)
        else:
            n_reject += 1
            h = h / _min(1.0 / FAC_MIN, fac11 / SAFE)
            last_rejected = True

    return STATUS_OK, filled, zs_arr, phis_arr, steps, (n_accept, n_reject, n_fev)


def integrate_rk4(double z0, double phi0, double r, double s, double B, double C,
                  knot_t, knot_a, sample_times, double h_max, long max_steps,
                  double eps_pole, bint record_steps):
    cdef double[::1] kt = np.ascontiguousarray(knot_t, dtype=np.float64)
    cdef double[::1] ka = np.ascontiguousarray(knot_a, dtype=np.float64)
    cdef double[::1] ts = np.ascontiguousarray(sample_times, dtype=np.float64)
    cdef Py_ssize_t n = ts.shape[0]
    zs_arr = np.empty(n)
    phis_arr = np.empty(n)
    cdef double[::1] zs = zs_arr
    cdef double[::1] phis = phis_arr
    steps = []

    cdef Field f
    f.r = r
    f.s = s
    f.B = B
    f.C2 = C * C
    f.eps_pole = eps_pole
    f.nk = kt.shape[0]
    f.kt = &kt[0]
    f.ka = &ka[0]

    cdef double z = z0, phi = phi0, t0, span, h, t
    cdef double k1z, k1p, k2z, k2p, k3z, k3p, k4z, k4p
    cdef long n_steps = 0, n_fev = 1, m, j
    cdef Py_ssize_t i, filled = 1

    zs[0] = z
    phis[0] = phi
    if record_steps:
        steps.append((ts[0], z, phi))
    if not rhs(&f, ts[0], z, phi, &k1z, &k1p):
        return STATUS_POLE, filled, zs_arr, phis_arr, steps, (0, 0, 1)
    n_fev = 0

    for i in range(1, n):
        t0 = ts[i - 1]
        span = ts[i] - t0
        m = <long>ceil(span / h_max - 1e-9)
        if m < 1:
            m = 1
        h = span / m
        for j in range(m):
            if n_steps >= max_steps:
                return STATUS_STEP_LIMIT, filled, zs_arr, phis_arr, steps, (n_steps, 0, n_fev)
            t = t0 + j * h
            n_fev += 4
            if not (rhs(&f, t, z, phi, &k1z, &k1p)
                    and rhs(&f, t + 0.5 * h, z + 0.5 * h * k1z, phi + 0.5 * h * k1p, &k2z, &k2p)
                    and rhs(&f, t + 0.5 * h, z + 0.5 * h * k2z, phi + 0.5 * h * k2p, &k3z, &k3p)
                    and rhs(&f, t + h, z + h * k3z, phi + h * k3p, &k4z, &k4p)):
                return STATUS_POLE, filled, zs_arr, phis_arr, steps, (n_steps, 0, n_fev)
            z = z + h / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z)
            phi = phi + h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
            n_steps += 1
            if not 1.0 - z * z >= eps_pole:
                return STATUS_POLE, filled, zs_arr, phis_arr, steps, (n_steps, 0, n_fev)
            if record_steps:
                steps.append((t0 + (j + 1) * h if j + 1 < m else ts[i], z, phi))
        zs[i] = z
        phis[i] = phi
        filled += 1
    return STATUS_OK, filled, zs_arr, phis_arr, steps, (n_steps, 0, n_fev)


def marching_segments(values, centers, double level, bint periodic):
    cdef double[:, ::1] v = np.ascontiguousarray(values, dtype=np.float64)
    cdef double[:, ::1] cen = np.ascontiguousarray(centers, dtype=np.float64)
    cdef Py_ssize_t nz = v.shape[0], nphi = v.shape[1]
    cdef Py_ssize_t i, j, jr, off = nz * nphi, k = 0
    cdef long e0, e1, e2, e3
    cdef bint a, b, c, d, x0, x1, x2, x3, cab
    cdef int cnt
    cdef long ce[4]
    out_arr = np.empty((2 * (nz - 1) * (nphi - 1), 2), dtype=np.int64)
    cdef long long[:, ::1] out = out_arr

    for i in range(nz - 1):
        for j in range(nphi - 1):
            a = v[i, j] >= level
            b = v[i + 1, j] >= level
            c = v[i + 1, j + 1] >= level
            d = v[i, j + 1] >= level
            x0 = a != b
            x1 = b != c
            x2 = d != c
            x3 = a != d
            cnt = x0 + x1 + x2 + x3
            if cnt == 0:
                continue
            jr = j + 1
            if periodic and jr == nphi - 1:
                jr = 0
            e0 = i * nphi + j
            e1 = off + (i + 1) * (nphi - 1) + j
            e2 = i * nphi + jr
            e3 = off + i * (nphi - 1) + j
            if cnt == 2:
                cnt = 0
                if x0:
                    ce[cnt] = e0
                    cnt += 1
                if x1:
                    ce[cnt] = e1
                    cnt += 1
                if x2:
                    ce[cnt] = e2
                    cnt += 1
                if x3:
                    ce[cnt] = e3
                    cnt += 1
                out[k, 0] = ce[0]
                out[k, 1] = ce[1]
                k += 1
            else:
                cab = cen[i, j] >= level
                if a != cab:
                    out[k, 0] = e3
                    out[k, 1] = e0
                    out[k + 1, 0] = e1
                    out[k + 1, 1] = e2
                else:
                    out[k, 0] = e0
                    out[k, 1] = e1
                    out[k + 1, 0] = e2
                    out[k + 1, 1] = e3
                k += 2
    return out_arr[:k].copy()
