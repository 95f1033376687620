from __future__ import annotations

import math

import numpy as np

from taudet.series import PowerSeries


def _taylor(fn_coeffs, order):
    return PowerSeries(np.array(fn_coeffs[:order], dtype=complex))


def test_mul_matches_convolution():
    a = PowerSeries([1, 2, 3, 4])
    b = PowerSeries([2, 0, 1, 5])
    prod = a * b
    assert np.allclose(prod.c, [2, 4, 7, 15])


def test_reciprocal_roundtrip():
    a = PowerSeries([2.0, -1.0, 0.5, 0.25, 1.0])
    r = a.reciprocal()
    assert np.allclose((a * r).c, [1, 0, 0, 0, 0], atol=1e-14)


def test_compose_exp_of_2x():
    order = 8
    exp_s = _taylor([1 / math.factorial(k) for k in range(order)], order)
    inner = PowerSeries(np.zeros(order))
    inner.c[1] = 2.0
    comp = exp_s.compose(inner)
    expected = [2.0 ** k / math.factorial(k) for k in range(order)]
    assert np.allclose(comp.c, expected, atol=1e-12)


def test_invert_recovers_arcsin_from_sin():
    order = 9
    sin_c = np.zeros(order)
    for k in range(order):
        if k % 2 == 1:
            sin_c[k] = (-1) ** ((k - 1) // 2) / math.factorial(k)
    inv = PowerSeries(sin_c).invert()
    # arcsin series: x + x^3/6 + 3 x^5/40 + 15 x^7/336
    expected = np.zeros(order)
    expected[1] = 1.0
    expected[3] = 1.0 / 6.0
    expected[5] = 3.0 / 40.0
    expected[7] = 15.0 / 336.0
    assert np.allclose(inv.c, expected, atol=1e-12)


def test_sqrt_squares_back():
    a = PowerSeries([4.0, 1.0, -0.5, 0.25, 0.125, -1.0])
    s = a.sqrt()
    assert np.allclose((s * s).c, a.c, atol=1e-12)
    assert abs(s.c[0] - 2.0) < 1e-14


def test_fractional_power_cube_root():
    a = PowerSeries([8.0, 12.0, 6.0, 1.0, 0.0, 0.0, 0.0])  # (2+x)^3
    r = a.pow(1.0 / 3.0)
    assert np.allclose(r.c[:2], [2.0, 1.0], atol=1e-12)
    assert np.max(np.abs(r.c[2:])) < 1e-12


def test_schwarzian_of_moebius_vanishes():
    # f = (2x+1)/(x+3) expanded at 0
    order = 10
    num = PowerSeries.constant(1.0, order) + PowerSeries.x(order) * 2.0
    den = PowerSeries.constant(3.0, order) + PowerSeries.x(order)
    f = num * den.reciprocal()
    s = f.schwarzian()
    assert np.max(np.abs(s.c)) < 1e-10


def test_schwarzian_of_tan():
    order = 12
    tan_c = np.zeros(order)
    tan_c[1] = 1.0
    tan_c[3] = 1.0 / 3.0
    tan_c[5] = 2.0 / 15.0
    tan_c[7] = 17.0 / 315.0
    tan_c[9] = 62.0 / 2835.0
    tan_c[11] = 1382.0 / 155925.0
    s = PowerSeries(tan_c).schwarzian()
    # {tan, x} = 2 exactly
    assert abs(s.c[0] - 2.0) < 1e-12
    assert np.max(np.abs(s.c[1:5])) < 1e-10


def test_evaluate_horner():
    a = PowerSeries([1.0, -2.0, 3.0])
    xs = np.array([0.0, 1.0, 1j])
    assert np.allclose(a(xs), [1.0, 2.0, 1.0 - 2j + 3j * 1j], atol=1e-14)
