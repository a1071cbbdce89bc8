import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def raster_overlap(a, b, n=1000):
    """Oracle for intersection-over-min-area by point sampling on an n x n grid."""
    def inside(r, x, y):
        cx, cy, hw, hd, th = r
        c, s = np.cos(th), np.sin(th)
        u = (x - cx) * c + (y - cy) * s
        v = -(x - cx) * s + (y - cy) * c
        return (np.abs(u) <= hw) & (np.abs(v) <= hd)

    rad = max(np.hypot(a[2], a[3]), np.hypot(b[2], b[3]))
    lo = min(a[0], b[0]) - rad, min(a[1], b[1]) - rad
    hi = max(a[0], b[0]) + rad, max(a[1], b[1]) + rad
    xs = lo[0] + (np.arange(n) + 0.5) * (hi[0] - lo[0]) / n
    ys = lo[1] + (np.arange(n) + 0.5) * (hi[1] - lo[1]) / n
    X, Y = np.meshgrid(xs, ys)
    ia, ib = inside(a, X, Y), inside(b, X, Y)
    return (ia & ib).sum() / min(ia.sum(), ib.sum())


_CRITERIA: list[str] = []


@pytest.fixture
def criterion():
    """``criterion(n, ok, detail)`` records a PASS/FAIL line and asserts ``ok``."""
    def report(n, ok, detail):
        line = f"criterion {n}: {'PASS' if ok else 'FAIL'} | {detail}"
        _CRITERIA.append(line)
        print(line)
        assert ok, line
    return report


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_CRITERIA, key=lambda s: (len(s.split(":")[0]), s)):
            terminalreporter.write_line(line)
