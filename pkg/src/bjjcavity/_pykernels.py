"""Pure-Python implementations of the hot loops.

Mirrors ``_ckernels.pyx`` call for call; :mod:`bjjcavity._backend` picks
one at import time.  Status codes returned by the integrators:
``0`` finished, ``1`` pole approach, ``2`` step limit.
"""

import math
from bisect import bisect_right

import numpy as np

# phi is integrated unwrapped; its error scale stops growing after one turn
_TWO_PI = 2.0 * math.pi

STATUS_OK = 0
STATUS_POLE = 1
STATUS_STEP_LIMIT = 2

# Dormand-Prince 5(4)
_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = (-71 / 57600, 71 / 16695, -71 / 1920,
                                17253 / 339200, -22 / 525, 1 / 40)
# continuous extension, rows = stages 1..7 (stage 2 row is zero), cols = theta^1..theta^4
_P = (
    (1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432),
    (0.0, 0.0, 0.0, 0.0),
    (0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799),
    (0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072),
    (0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632),
    (0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844),
    (0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423),
)

_SAFE = 0.9
_BETA = 0.04
_EXPO1 = 0.2 - _BETA * 0.75
_FAC_MIN = 0.2
_FAC_MAX = 10.0


class _Field:
    """Right-hand side with a piecewise-linear pump; ``None`` means pole guard hit."""

    def __init__(self, r, s, B, C, knot_t, knot_a, eps_pole):
        self.r = r
        self.s = s
        self.B = B
        self.C2 = C * C
        self.knot_t = [float(x) for x in knot_t]
        self.knot_a = [float(x) for x in knot_a]
        self.eps_pole = eps_pole

    def tilt(self, t):
        kt, ka = self.knot_t, self.knot_a
        if len(kt) == 1 or t <= kt[0]:
            a = ka[0]
        elif t >= kt[-1]:
            a = ka[-1]
        else:
            k = bisect_right(kt, t) - 1
            w = (t - kt[k]) / (kt[k + 1] - kt[k])
            a = ka[k] + w * (ka[k + 1] - ka[k])
        return self.s * a * a

    def __call__(self, t, z, phi):
        one_minus = 1.0 - z * z
        if not one_minus >= self.eps_pole:
            return None
        root = math.sqrt(one_minus)
        d = z - self.B
        return (-root * math.sin(phi),
                z * math.cos(phi) / root + self.r * z + self.tilt(t) / (d * d + self.C2))


def _initial_step(f, t, z, phi, fz, fp, rtol, atol, h_max):
    sk_z = atol + rtol * abs(z)
    sk_p = atol + rtol * abs(phi)
    d0 = math.sqrt(0.5 * ((z / sk_z) ** 2 + (phi / sk_p) ** 2))
    d1 = math.sqrt(0.5 * ((fz / sk_z) ** 2 + (fp / sk_p) ** 2))
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    h0 = min(h0, h_max)
    k = f(t + h0, z + h0 * fz, phi + h0 * fp)
    if k is None:
        return h0
    d2 = math.sqrt(0.5 * (((k[0] - fz) / sk_z) ** 2 + ((k[1] - fp) / sk_p) ** 2)) / h0
    dm = max(d1, d2)
    h1 = max(1e-6, h0 * 1e-3) if dm <= 1e-15 else (0.01 / dm) ** 0.2
    return min(100.0 * h0, h1, h_max)


def integrate_dopri(z0, phi0, r, s, B, C, knot_t, knot_a, sample_times,
                    rtol, atol, h_max, max_steps, eps_pole, record_steps):
    """Adaptive Dormand-Prince 5(4) with PI step control and dense output.

    ``sample_times`` must be increasing and start at the initial time.
    Returns ``(status, n_filled, zs, phis, steps, stats)`` where ``steps`` is
    a list of ``(t, z, phi)`` accepted-step states (empty unless requested)
    and ``stats = (n_accept, n_reject, n_fev)``.
    """
    f = _Field(r, s, B, C, knot_t, knot_a, eps_pole)
    ts = np.asarray(sample_times, dtype=np.float64)
    n = ts.shape[0]
    zs = np.empty(n)
    phis = np.empty(n)
    steps = []
    t = float(ts[0])
    t_end = float(ts[-1])
    z, phi = float(z0), float(phi0)
    zs[0], phis[0] = z, phi
    filled = 1
    if record_steps:
        steps.append((t, z, phi))

    k1 = f(t, z, phi)
    n_fev = 1
    if k1 is None:
        return STATUS_POLE, filled, zs, phis, steps, (0, 0, n_fev)
    k1z, k1p = k1
    h = _initial_step(f, t, z, phi, k1z, k1p, rtol, atol, h_max)
    n_fev += 1
    h_min_pole = 1e-14 * max(1.0, abs(t_end))
    facold = 1e-4
    last_rejected = False
    n_accept = n_reject = 0

    while filled < n:
        if n_accept + n_reject >= max_steps:
            return STATUS_STEP_LIMIT, filled, zs, phis, steps, (n_accept, n_reject, n_fev)
        last = False
        if t + h >= t_end:
            h = t_end - t
            last = True

        ok = False
        k2 = f(t + _C2 * h, z + h * _A21 * k1z, phi + h * _A21 * k1p)
        if k2 is not None:
            k2z, k2p = k2
            k3 = f(t + _C3 * h, z + h * (_A31 * k1z + _A32 * k2z),
                   phi + h * (_A31 * k1p + _A32 * k2p))
            if k3 is not None:
                k3z, k3p = k3
                k4 = f(t + _C4 * h, z + h * (_A41 * k1z + _A42 * k2z + _A43 * k3z),
                       phi + h * (_A41 * k1p + _A42 * k2p + _A43 * k3p))
                if k4 is not None:
                    k4z, k4p = k4
                    k5 = f(t + _C5 * h,
                           z + h * (_A51 * k1z + _A52 * k2z + _A53 * k3z + _A54 * k4z),
                           phi + h * (_A51 * k1p + _A52 * k2p + _A53 * k3p + _A54 * k4p))
                    if k5 is not None:
                        k5z, k5p = k5
                        k6 = f(t + h,
                               z + h * (_A61 * k1z + _A62 * k2z + _A63 * k3z + _A64 * k4z + _A65 * k5z),
                               phi + h * (_A61 * k1p + _A62 * k2p + _A63 * k3p + _A64 * k4p + _A65 * k5p))
                        if k6 is not None:
                            k6z, k6p = k6
                            zn = z + h * (_B1 * k1z + _B3 * k3z + _B4 * k4z + _B5 * k5z + _B6 * k6z)
                            pn = phi + h * (_B1 * k1p + _B3 * k3p + _B4 * k4p + _B5 * k5p + _B6 * k6p)
                            k7 = f(t + h, zn, pn)
                            if k7 is not None:
                                k7z, k7p = k7
                                ok = True
        n_fev += 6

        if not ok:
            # a stage crossed the pole guard: shrink and retry
            n_reject += 1
            h *= 0.25
            last_rejected = True
            if h < h_min_pole:
                return STATUS_POLE, filled, zs, phis, steps, (n_accept, n_reject, n_fev)
            continue

        ez = h * (_E1 * k1z + _E3 * k3z + _E4 * k4z + _E5 * k5z + _E6 * k6z + _E7 * k7z)
        ep = h * (_E1 * k1p + _E3 * k3p + _E4 * k4p + _E5 * k5p + _E6 * k6p + _E7 * k7p)
        sk_z = atol + rtol * max(abs(z), abs(zn))
        sk_p = atol + rtol * min(max(abs(phi), abs(pn)), _TWO_PI)
        err = math.sqrt(0.5 * ((ez / sk_z) ** 2 + (ep / sk_p) ** 2))

        fac11 = err ** _EXPO1
        if err <= 1.0:
            fac = fac11 / facold ** _BETA
            fac = max(1.0 / _FAC_MAX, min(1.0 / _FAC_MIN, fac / _SAFE))
            h_new = min(h / fac, h_max)
            if last_rejected:
                h_new = min(h_new, h)
            facold = max(err, 1e-4)
            n_accept += 1
            last_rejected = False

            t_new = t_end if last else t + h
            while filled < n and ts[filled] <= t_new:
                if ts[filled] == t_new:
                    zs[filled], phis[filled] = zn, pn
                else:
                    th = (ts[filled] - t) / h
                    th2 = th * th
                    th3 = th2 * th
                    th4 = th3 * th
                    ks_z = (k1z, k2z, k3z, k4z, k5z, k6z, k7z)
                    ks_p = (k1p, k2p, k3p, k4p, k5p, k6p, k7p)
                    dz = dp = 0.0
                    for row, kz, kp in zip(_P, ks_z, ks_p):
                        w = row[0] * th + row[1] * th2 + row[2] * th3 + row[3] * th4
                        dz += w * kz
                        dp += w * kp
                    zs[filled] = z + h * dz
                    phis[filled] = phi + h * dp
                filled += 1
            t, z, phi = t_new, zn, pn
            k1z, k1p = k7z, k7p
            if record_steps:
                steps.append((t, z, phi))
            h = h_new
            if 1.0 - z * z < 2.0 * eps_pole:
                # parked against the guard: stages keep failing while h never gets small
                return STATUS_POLE, filled, zs, phis, steps, (n_accept, n_reject, n_fev)
        else:
            n_reject += 1
            h = h / min(1.0 / _FAC_MIN, fac11 / _SAFE)
            last_rejected = True

    return STATUS_OK, filled, zs, phis, steps, (n_accept, n_reject, n_fev)


def integrate_rk4(z0, phi0, r, s, B, C, knot_t, knot_a, sample_times,
                  h_max, max_steps, eps_pole, record_steps):
    """Classical fourth-order Runge-Kutta with a step dividing every sample interval."""
    f = _Field(r, s, B, C, knot_t, knot_a, eps_pole)
    ts = np.asarray(sample_times, dtype=np.float64)
    n = ts.shape[0]
    zs = np.empty(n)
    phis = np.empty(n)
    steps = []
    z, phi = float(z0), float(phi0)
    zs[0], phis[0] = z, phi
    filled = 1
    n_steps = n_fev = 0
    if record_steps:
        steps.append((float(ts[0]), z, phi))
    if f(float(ts[0]), z, phi) is None:
        return STATUS_POLE, filled, zs, phis, steps, (0, 0, 1)

    for i in range(1, n):
        t0 = float(ts[i - 1])
        span = float(ts[i]) - t0
        m = max(1, int(math.ceil(span / h_max - 1e-9)))
        h = span / m
        for j in range(m):
            if n_steps >= max_steps:
                return STATUS_STEP_LIMIT, filled, zs, phis, steps, (n_steps, 0, n_fev)
            t = t0 + j * h
            k1 = f(t, z, phi)
            k2 = k1 and f(t + 0.5 * h, z + 0.5 * h * k1[0], phi + 0.5 * h * k1[1])
            k3 = k2 and f(t + 0.5 * h, z + 0.5 * h * k2[0], phi + 0.5 * h * k2[1])
            k4 = k3 and f(t + h, z + h * k3[0], phi + h * k3[1])
            n_fev += 4
            if k4 is None:
                return STATUS_POLE, filled, zs, phis, steps, (n_steps, 0, n_fev)
            z = z + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
            phi = phi + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
            n_steps += 1
            if not 1.0 - z * z >= eps_pole:
                return STATUS_POLE, filled, zs, phis, steps, (n_steps, 0, n_fev)
            if record_steps:
                steps.append((t0 + (j + 1) * h if j + 1 < m else float(ts[i]), z, phi))
        zs[i], phis[i] = z, phi
        filled += 1
    return STATUS_OK, filled, zs, phis, steps, (n_steps, 0, n_fev)


def marching_segments(values, centers, level, periodic):
    """Marching-squares segments as pairs of edge ids.

    ``values`` is ``(nz, nphi)``; ``centers`` holds one sample per cell used
    to split the two ambiguous configurations.  Edge ids: the edge between
    rows ``i, i+1`` at column ``j`` is ``i * nphi + j`` (column ``nphi - 1``
    folded onto ``0`` when ``periodic``); the edge between columns ``j, j+1``
    at row ``i`` is ``nz * nphi + i * (nphi - 1) + j``.  Segments come out in
    cell order, rows outer.
    """
    v = np.asarray(values, dtype=np.float64)
    nz, nphi = v.shape
    above = v >= level
    a = above[:-1, :-1]
    b = above[1:, :-1]
    c = above[1:, 1:]
    d = above[:-1, 1:]
    ii, jj = np.meshgrid(np.arange(nz - 1), np.arange(nphi - 1), indexing="ij")
    jr = jj + 1
    if periodic:
        jr = np.where(jr == nphi - 1, 0, jr)
    off = nz * nphi
    e0 = ii * nphi + jj
    e1 = off + (ii + 1) * (nphi - 1) + jj
    e2 = ii * nphi + jr
    e3 = off + ii * (nphi - 1) + jj
    x0, x1, x2, x3 = a != b, b != c, d != c, a != d
    count = x0.astype(int) + x1 + x2 + x3

    edges = np.stack([e0, e1, e2, e3], axis=-1)
    crosses = np.stack([x0, x1, x2, x3], axis=-1)
    out = np.full((nz - 1, nphi - 1, 2, 2), -1, dtype=np.int64)

    two = count == 2
    # the two crossed edges of each simple cell, in edge order
    order = np.argsort(~crosses, axis=-1, kind="stable")[..., :2]
    picked = np.take_along_axis(edges, order, axis=-1)
    out[two, 0, :] = picked[two]

    four = count == 4
    if np.any(four):
        center_above = np.asarray(centers, dtype=np.float64) >= level
        # corners on the opposite side from the centre are cut off
        cut_a_c = four & (a != center_above)
        cut_b_d = four & ~cut_a_c
        out[cut_a_c, 0, 0] = e3[cut_a_c]
        out[cut_a_c, 0, 1] = e0[cut_a_c]
        out[cut_a_c, 1, 0] = e1[cut_a_c]
        out[cut_a_c, 1, 1] = e2[cut_a_c]
        out[cut_b_d, 0, 0] = e0[cut_b_d]
        out[cut_b_d, 0, 1] = e1[cut_b_d]
        out[cut_b_d, 1, 0] = e2[cut_b_d]
        out[cut_b_d, 1, 1] = e3[cut_b_d]

    flat = out.reshape(-1, 2)
    return flat[flat[:, 0] >= 0].copy()
