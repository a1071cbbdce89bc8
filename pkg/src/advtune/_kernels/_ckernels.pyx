# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: oriented-rectangle overlap, Gibbs pair energy,
footprint rasterization and weighted Gaussian KDE.

Mirrors ``_pykernels`` function for function.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, sqrt, exp, expm1, log1p, fabs, floor, ceil, hypot

cnp.import_array()

cdef double SQRT_2PI = sqrt(2.0 * 3.141592653589793)


cdef inline void _corners(const double[:] r, double* xs, double* ys) noexcept nogil:
    cdef double c = cos(r[4]), s = sin(r[4])
    cdef double hw = r[2], hd = r[3]
    cdef double us[4]
    cdef double vs[4]
    cdef int i
    us[0] = -hw; vs[0] = -hd
    us[1] = hw; vs[1] = -hd
    us[2] = hw; vs[2] = hd
    us[3] = -hw; vs[3] = hd
    for i in range(4):
        xs[i] = r[0] + us[i] * c - vs[i] * s
        ys[i] = r[1] + us[i] * s + vs[i] * c


cdef int _clip(double* px, double* py, int n, double ax, double ay,
               double bx, double by, double* ox, double* oy) noexcept nogil:
    cdef double ex = bx - ax, ey = by - ay
    cdef double sp, sc, t
    cdef int i, m = 0
    cdef double prx, pry, cx, cy
    if n == 0:
        return 0
    prx = px[n - 1]; pry = py[n - 1]
    sp = ex * (pry - ay) - ey * (prx - ax)
    for i in range(n):
        cx = px[i]; cy = py[i]
        sc = ex * (cy - ay) - ey * (cx - ax)
        if sc >= 0.0:
            if sp < 0.0:
                t = sp / (sp - sc)
                ox[m] = prx + t * (cx - prx); oy[m] = pry + t * (cy - pry); m += 1
            ox[m] = cx; oy[m] = cy; m += 1
        elif sp >= 0.0:
            t = sp / (sp - sc)
            ox[m] = prx + t * (cx - prx); oy[m] = pry + t * (cy - pry); m += 1
        prx = cx; pry = cy; sp = sc
    return m


cdef double _overlap(const double[:] a, const double[:] b) noexcept nogil:
    cdef double ax[4]
    cdef double ay[4]
    cdef double bx[4]
    cdef double by[4]
    cdef double p1x[16]
    cdef double p1y[16]
    cdef double p2x[16]
    cdef double p2y[16]
    cdef double *sx = p1x
    cdef double *sy = p1y
    cdef double *dx = p2x
    cdef double *dy = p2y
    cdef double *tx
    cdef double *ty
    cdef int i, j, n = 4
    cdef double acc, amin, frac
    if hypot(a[0] - b[0], a[1] - b[1]) > hypot(a[2], a[3]) + hypot(b[2], b[3]):
        return 0.0
    _corners(a, ax, ay)
    _corners(b, bx, by)
    for i in range(4):
        p1x[i] = ax[i]; p1y[i] = ay[i]
    for i in range(4):
        j = (i + 1) % 4
        n = _clip(sx, sy, n, bx[i], by[i], bx[j], by[j], dx, dy)
        if n == 0:
            return 0.0
        tx = sx; ty = sy
        sx = dx; sy = dy
        dx = tx; dy = ty
    if n < 3:
        return 0.0
    acc = 0.0
    for i in range(n):
        j = (i + 1) % n
        acc += sx[i] * sy[j] - sx[j] * sy[i]
    amin = 4.0 * min(a[2] * a[3], b[2] * b[3])
    frac = fabs(acc) * 0.5 / amin
    if frac < 0.0:
        return 0.0
    if frac > 1.0:
        return 1.0
    return frac


def overlap_fraction(a, b):
    cdef double[:] av = np.ascontiguousarray(a, dtype=np.float64).ravel()
    cdef double[:] bv = np.ascontiguousarray(b, dtype=np.float64).ravel()
    return _overlap(av, bv)


cdef inline double _pair_energy(double L, double k, double cap) noexcept nogil:
    cdef double x
    if L <= 0.0:
        return 0.0
    x = k * L
    if x >= log1p(cap):
        return cap
    return min(expm1(x), cap)


def pair_energy(double L, double k, double cap):
    return _pair_energy(L, k, cap)


def gibbs_energy(rects, double k, double cap):
    cdef double[:, :] R = np.ascontiguousarray(rects, dtype=np.float64).reshape(-1, 5)
    cdef Py_ssize_t n = R.shape[0], i, j
    cdef double total = 0.0, L
    with nogil:
        for i in range(n):
            for j in range(i + 1, n):
                L = _overlap(R[i], R[j])
                if L > 0.0:
                    total += _pair_energy(L, k, cap)
                    if total >= cap:
                        total = cap
                        break
            if total >= cap:
                break
    return total


def max_overlap(rects):
    cdef double[:, :] R = np.ascontiguousarray(rects, dtype=np.float64).reshape(-1, 5)
    cdef Py_ssize_t n = R.shape[0], i, j
    cdef double best = 0.0, L
    with nogil:
        for i in range(n):
            for j in range(i + 1, n):
                L = _overlap(R[i], R[j])
                if L > best:
                    best = L
    return best


cdef void _paint(const double[:] r, int value, double x0, double ytop, double cw,
                 double ch, int H, int W, int[:, :] out) noexcept nogil:
    cdef double c = cos(r[4]), s = sin(r[4])
    cdef double rad = hypot(r[2], r[3])
    cdef int j0, j1, i0, i1, i, j
    cdef double px, py, ddx, ddy, u, v
    # cell-index bounding box of the circumscribed circle
    j0 = <int>floor((r[0] - rad - x0) / cw - 0.5)
    j1 = <int>ceil((r[0] + rad - x0) / cw - 0.5)
    i0 = <int>floor((ytop - (r[1] + rad)) / ch - 0.5)
    i1 = <int>ceil((ytop - (r[1] - rad)) / ch - 0.5)
    if j0 < 0: j0 = 0
    if i0 < 0: i0 = 0
    if j1 > W - 1: j1 = W - 1
    if i1 > H - 1: i1 = H - 1
    for i in range(i0, i1 + 1):
        py = ytop - (i + 0.5) * ch
        ddy = py - r[1]
        for j in range(j0, j1 + 1):
            px = x0 + (j + 0.5) * cw
            ddx = px - r[0]
            u = ddx * c + ddy * s
            v = -ddx * s + ddy * c
            if fabs(u) <= r[2] and fabs(v) <= r[3]:
                out[i, j] = value


def paint_labels(rects, class_ids, double x0, double ytop, double cw, double ch,
                 int H, int W):
    """Paint rectangles in the given order; later rows overwrite earlier."""
    cdef double[:, :] R = np.ascontiguousarray(rects, dtype=np.float64).reshape(-1, 5)
    cdef int[:] C = np.ascontiguousarray(class_ids, dtype=np.int32).ravel()
    out = np.full((H, W), -1, dtype=np.int32)
    cdef int[:, :] O = out
    cdef Py_ssize_t n = R.shape[0], t
    with nogil:
        for t in range(n):
            _paint(R[t], C[t], x0, ytop, cw, ch, H, W, O)
    return out


def paint_mask(rects, double x0, double ytop, double cw, double ch, int H, int W):
    cdef double[:, :] R = np.ascontiguousarray(rects, dtype=np.float64).reshape(-1, 5)
    out = np.zeros((H, W), dtype=np.int32)
    cdef int[:, :] O = out
    cdef Py_ssize_t n = R.shape[0], t
    with nogil:
        for t in range(n):
            _paint(R[t], 1, x0, ytop, cw, ch, H, W, O)
    return out.astype(np.uint8)


def weighted_kde(x, w, grid, double h):
    cdef double[:] X = np.ascontiguousarray(x, dtype=np.float64).ravel()
    cdef double[:] Wt = np.ascontiguousarray(w, dtype=np.float64).ravel()
    cdef double[:] G = np.ascontiguousarray(grid, dtype=np.float64).ravel()
    cdef Py_ssize_t n = X.shape[0], m = G.shape[0], i, g
    out = np.zeros(m, dtype=np.float64)
    cdef double[:] O = out
    cdef double norm = 1.0 / (h * SQRT_2PI)
    cdef double inv = 1.0 / (2.0 * h * h)
    cdef double acc, d
    with nogil:
        for g in range(m):
            acc = 0.0
            for i in range(n):
                d = G[g] - X[i]
                acc += Wt[i] * exp(-d * d * inv)
            O[g] = acc * norm
    return out
