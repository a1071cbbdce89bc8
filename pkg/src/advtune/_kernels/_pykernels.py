"""Pure-Python/numpy implementations of the hot kernels.

Used when the compiled ``_ckernels`` extension is not built, or when
``ADVTUNE_PURE_PYTHON=1`` is set. Signatures and results match the
Cython module exactly up to floating point summation order.

Rectangles are rows ``(cx, cy, half_w, half_d, theta)``.
"""
import math

import numpy as np

_SQRT_2PI = math.sqrt(2.0 * math.pi)


def rect_corners(r):
    cx, cy, hw, hd, th = r
    c, s = math.cos(th), math.sin(th)
    pts = []
    for u, v in ((-hw, -hd), (hw, -hd), (hw, hd), (-hw, hd)):
        pts.append((cx + u * c - v * s, cy + u * s + v * c))
    return pts


def _clip(subject, a, b):
    # keep the part of `subject` left of the directed edge a->b
    out = []
    n = len(subject)
    if n == 0:
        return out
    ex, ey = b[0] - a[0], b[1] - a[1]

    def side(p):
        return ex * (p[1] - a[1]) - ey * (p[0] - a[0])

    prev = subject[-1]
    sp = side(prev)
    for cur in subject:
        sc = side(cur)
        if sc >= 0.0:
            if sp < 0.0:
                t = sp / (sp - sc)
                out.append((prev[0] + t * (cur[0] - prev[0]),
                            prev[1] + t * (cur[1] - prev[1])))
            out.append(cur)
        elif sp >= 0.0:
            t = sp / (sp - sc)
            out.append((prev[0] + t * (cur[0] - prev[0]),
                        prev[1] + t * (cur[1] - prev[1])))
        prev, sp = cur, sc
    return out


def _area(poly):
    n = len(poly)
    if n < 3:
        return 0.0
    acc = 0.0
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        acc += x0 * y1 - x1 * y0
    return abs(acc) * 0.5


def overlap_fraction(a, b):
    a = tuple(float(v) for v in a)
    b = tuple(float(v) for v in b)
    ra = math.hypot(a[2], a[3])
    rb = math.hypot(b[2], b[3])
    if math.hypot(a[0] - b[0], a[1] - b[1]) > ra + rb:
        return 0.0
    poly = rect_corners(a)
    cb = rect_corners(b)
    for i in range(4):
        poly = _clip(poly, cb[i], cb[(i + 1) % 4])
        if not poly:
            return 0.0
    inter = _area(poly)
    amin = 4.0 * min(a[2] * a[3], b[2] * b[3])
    frac = inter / amin
    if frac < 0.0:
        return 0.0
    if frac > 1.0:
        return 1.0
    return frac


def pair_energy(L, k, cap):
    if L <= 0.0:
        return 0.0
    x = k * L
    if x >= math.log1p(cap):
        return cap
    return min(math.expm1(x), cap)


def gibbs_energy(rects, k, cap):
    rects = np.asarray(rects, dtype=np.float64).reshape(-1, 5)
    n = rects.shape[0]
    total = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            L = overlap_fraction(rects[i], rects[j])
            if L > 0.0:
                total += pair_energy(L, k, cap)
                if total >= cap:
                    return cap
    return total


def max_overlap(rects):
    rects = np.asarray(rects, dtype=np.float64).reshape(-1, 5)
    n = rects.shape[0]
    best = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            best = max(best, overlap_fraction(rects[i], rects[j]))
    return best


def _cell_centers(x0, ytop, cw, ch, H, W):
    xs = x0 + (np.arange(W) + 0.5) * cw
    ys = ytop - (np.arange(H) + 0.5) * ch
    return np.meshgrid(xs, ys)


def _inside(r, px, py):
    cx, cy, hw, hd, th = (float(v) for v in r)
    c, s = math.cos(th), math.sin(th)
    dx = px - cx
    dy = py - cy
    u = dx * c + dy * s
    v = -dx * s + dy * c
    return (np.abs(u) <= hw) & (np.abs(v) <= hd)


def paint_labels(rects, class_ids, x0, ytop, cw, ch, H, W):
    """Paint rectangles in the given order; later rows overwrite earlier."""
    rects = np.asarray(rects, dtype=np.float64).reshape(-1, 5)
    out = np.full((H, W), -1, dtype=np.int32)
    px, py = _cell_centers(x0, ytop, cw, ch, H, W)
    for r, c in zip(rects, class_ids):
        out[_inside(r, px, py)] = int(c)
    return out


def paint_mask(rects, x0, ytop, cw, ch, H, W):
    rects = np.asarray(rects, dtype=np.float64).reshape(-1, 5)
    out = np.zeros((H, W), dtype=np.uint8)
    px, py = _cell_centers(x0, ytop, cw, ch, H, W)
    for r in rects:
        out[_inside(r, px, py)] = 1
    return out


def weighted_kde(x, w, grid, h):
    x = np.asarray(x, dtype=np.float64).ravel()
    w = np.asarray(w, dtype=np.float64).ravel()
    grid = np.asarray(grid, dtype=np.float64).ravel()
    out = np.zeros(grid.shape[0], dtype=np.float64)
    if x.size == 0:
        return out
    norm = 1.0 / (h * _SQRT_2PI)
    inv = 1.0 / (2.0 * h * h)
    # chunk over samples to bound memory for large inputs
    step = max(1, 2 ** 20 // max(1, grid.size))
    for lo in range(0, x.size, step):
        d = grid[:, None] - x[None, lo:lo + step]
        out += np.exp(-(d * d) * inv) @ w[lo:lo + step]
    return out * norm
