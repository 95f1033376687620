from __future__ import annotations

import numpy as np
import pytest
from scipy.special import factorial, i0

from taudet.errors import ContourQuadratureFailure
from taudet.quadrature import (
    cauchy_taylor_coeffs,
    quad_path,
    quad_periodic,
    quad_segment,
    quad_segment_endpoint_sqrt,
)


def test_segment_polynomial_exact():
    val = quad_segment(lambda x: x ** 2, 0.0, 1.0)
    assert abs(val - 1.0 / 3.0) < 1e-14


def test_segment_complex_endpoint():
    val = quad_segment(np.exp, 0.0, 1j)
    assert abs(val - (np.exp(1j) - 1.0)) < 1e-13


def test_segment_vector_integrand():
    def f(x):
        return np.stack([np.ones_like(x), x, x ** 2], axis=-1)

    val = quad_segment(f, 0.0, 2.0)
    assert np.allclose(val, [2.0, 2.0, 8.0 / 3.0], atol=1e-13)


def test_segment_near_singularity_adapts():
    # integrable spike at x = -1e-3 just off the contour
    val = quad_segment(lambda x: 1.0 / (x + 1e-3 + 1j * 1e-3), 0.0, 1.0)
    expected = np.log(1.0 + 1e-3 + 1j * 1e-3) - np.log(1e-3 + 1j * 1e-3)
    assert abs(val - expected) < 1e-9 * abs(expected)


def test_endpoint_sqrt_substitution():
    val = quad_segment_endpoint_sqrt(lambda x: 1.0 / np.sqrt(x), 0.0, 1.0,
                                     at_start=True)
    assert abs(val - 2.0) < 1e-12
    # reversed orientation flips the sign
    rev = quad_segment_endpoint_sqrt(lambda x: 1.0 / np.sqrt(x), 1.0, 0.0,
                                     at_start=False)
    assert abs(rev + 2.0) < 1e-12


def test_periodic_bessel_moment():
    val = quad_periodic(lambda t: np.exp(np.cos(t)))
    assert abs(val - 2.0 * np.pi * i0(1.0)) < 1e-12


def test_periodic_winding_integral():
    # oint dz/z over |z| = 3 traversed once
    def f(t):
        z = 3.0 * np.exp(1j * t)
        dz = 3j * np.exp(1j * t)
        return dz / z

    val = quad_periodic(f)
    assert abs(val - 2j * np.pi) < 1e-12


def test_periodic_rejects_rough_integrand():
    with pytest.raises(ContourQuadratureFailure):
        quad_periodic(lambda t: np.abs(np.sin(37.0 * t)) ** 0.3,
                      rtol=1e-13, n_max=2048)


def test_cauchy_taylor_exponential():
    coeffs = cauchy_taylor_coeffs(np.exp, 0.0, 0.7, 8)
    assert np.allclose(coeffs, 1.0 / factorial(np.arange(8)), atol=1e-12)


def test_cauchy_taylor_pole_outside_circle():
    # f = 1/(1-x): coefficients all 1, radius must stay below the pole
    coeffs = cauchy_taylor_coeffs(lambda x: 1.0 / (1.0 - x), 0.0, 0.5, 6)
    assert np.allclose(coeffs, np.ones(6), atol=1e-10)


def test_quad_path_two_segments():
    val = quad_path(np.exp, [0.0, 0.5 + 0.5j, 1.0])
    assert abs(val - (np.e - 1.0)) < 1e-12


def test_quad_path_sheeted_integrand():
    def f(x, sheet):
        return sheet * np.ones_like(x)

    val = quad_path(f, [0.0, 1.0, 2.0], sheets=[1, -1])
    assert abs(val) < 1e-14
