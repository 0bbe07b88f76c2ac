"""Smoke test for the extension module.

Build and install it first:
    pip install --no-build-isolation ./crates/python
then run `python3 python/smoke_test.py` or `pytest python/`.
"""

import cmath
import math

import torus_equidist_py as te

SAMPLE = "x1^13 + x1*x2^12 + x2^13 + 1; x1^12*x2 - x2^13 - x1*x2 + 1"


def test_cyclotomic():
    roots = te.solve("x^12 - 1")
    assert len(roots) == 12
    for (z,) in roots:
        assert abs(z**12 - 1) < 1e-12
    assert abs(te.angle_discrepancy(roots) - 1 / 12) < 1e-12
    assert te.radius_discrepancy(roots, 0.1) == 0.0


def test_sample_system():
    assert te.mixed_volume(SAMPLE) == 169
    roots = te.solve(SAMPLE)
    assert len(roots) == 169
    lo, hi = te.eta(SAMPLE)
    assert 0 < lo <= hi
    assert te.angle_discrepancy(roots) < 1


def test_points_roundtrip():
    pts = [[cmath.exp(2j * math.pi * k / 5)] for k in range(5)]
    assert abs(te.angle_discrepancy(pts) - 0.2) < 1e-12


def test_errors():
    try:
        te.solve("x1^2 + *")
    except ValueError:
        pass
    else:
        raise AssertionError("parse error not raised")


def test_window_check():
    rows = te.window_check(0)
    assert rows and all(ok for *_, ok in rows)


if __name__ == "__main__":
    for name, f in list(globals().items()):
        if name.startswith("test_"):
            f()
            print(f"{name}: ok")
