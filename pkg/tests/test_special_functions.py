from __future__ import annotations

import numpy as np
import pytest
from scipy.special import gamma

from taudet.errors import (
    InvalidDimension,
    NonPositiveImaginaryPart,
    TruncationFailure,
)
from taudet.special_functions import (
    RiemannTheta,
    ThetaCharacteristic,
    dedekind_eta,
    enumerate_characteristics,
    eta_log_derivative,
    theta,
)


def brute_theta_1d(z, b, alpha=0.0, beta=0.0, nmax=60):
    n = np.arange(-nmax, nmax + 1) + alpha
    return np.sum(np.exp(1j * np.pi * n * n * b + 2j * np.pi * n * (z + beta)))


def brute_theta_2d(z, B, nmax=30):
    rng = np.arange(-nmax, nmax + 1)
    n1, n2 = np.meshgrid(rng, rng, indexing="ij")
    n = np.stack([n1.ravel(), n2.ravel()], axis=1).astype(float)
    quad = np.einsum("ij,jk,ik->i", n, B, n)
    lin = n @ np.asarray(z)
    return np.sum(np.exp(1j * np.pi * quad + 2j * np.pi * lin))


class TestDedekindEta:
    def test_literal_product_at_i(self):
        q = np.exp(-2.0 * np.pi)
        prod = np.prod(1.0 - q ** np.arange(1, 201))
        expected = np.exp(-np.pi / 12.0) * prod
        assert abs(dedekind_eta(1j) - expected) < 1e-14

    def test_closed_form_at_i(self):
        expected = gamma(0.25) / (2.0 * np.pi ** 0.75)
        assert abs(dedekind_eta(1j) - expected) < 1e-12

    def test_modular_transform(self):
        sigma = 0.31 + 0.67j
        lhs = dedekind_eta(-1.0 / sigma)
        rhs = np.sqrt(-1j * sigma) * dedekind_eta(sigma)
        assert abs(lhs - rhs) < 1e-12 * abs(rhs)

    def test_small_imaginary_part_robust(self):
        sigma = 0.25 + 0.004j
        lhs = dedekind_eta(sigma)
        rhs = dedekind_eta(-1.0 / sigma) / np.sqrt(-1j * sigma)
        assert abs(lhs - rhs) < 1e-10 * abs(rhs)

    def test_rejects_lower_half_plane(self):
        with pytest.raises(NonPositiveImaginaryPart):
            dedekind_eta(0.5 - 0.1j)
        with pytest.raises(NonPositiveImaginaryPart):
            dedekind_eta(0.7)

    def test_large_imaginary_part(self):
        v = dedekind_eta(400j)
        assert abs(v - np.exp(-400 * np.pi / 12.0)) < 1e-60
        # far beyond double range the value underflows quietly
        assert dedekind_eta(1e6j) == 0.0

    def test_log_derivative_vs_finite_difference(self):
        sigma = 0.2 + 1.1j
        h = 1e-6
        fd = (np.log(dedekind_eta(sigma + h)) -
              np.log(dedekind_eta(sigma - h))) / (2 * h)
        assert abs(eta_log_derivative(sigma) - fd) < 1e-8

    def test_log_derivative_small_im(self):
        sigma = -0.4 + 0.02j
        h = 1e-7
        fd = (np.log(dedekind_eta(sigma + h)) -
              np.log(dedekind_eta(sigma - h))) / (2 * h)
        assert abs(eta_log_derivative(sigma) - fd) < 1e-6 * abs(fd)


class TestThetaGenusOne:
    B = np.array([[0.5 + 1.3j]])

    def test_matches_brute_sum(self):
        z = np.array([0.17 - 0.4j])
        expected = brute_theta_1d(z[0], self.B[0, 0])
        assert abs(theta(z, self.B) - expected) < 1e-12 * abs(expected)

    def test_characteristic_matches_brute_sum(self):
        z = np.array([0.23 + 0.11j])
        char = ThetaCharacteristic((1,), (1,))
        expected = brute_theta_1d(z[0], self.B[0, 0], alpha=0.5, beta=0.5)
        got = theta(z, self.B, char=char)
        assert abs(got - expected) < 1e-12 * abs(expected)

    def test_odd_characteristic_vanishes_at_origin(self):
        char = ThetaCharacteristic((1,), (1,))
        assert char.is_odd
        val = theta(np.zeros(1), self.B, char=char)
        assert abs(val) < 1e-12

    def test_derivative_matches_brute_sum(self):
        z = np.array([0.1 + 0.2j])
        nmax = 60
        n = np.arange(-nmax, nmax + 1)
        b = self.B[0, 0]
        expected = np.sum(2j * np.pi * n *
                          np.exp(1j * np.pi * n * n * b + 2j * np.pi * n * z[0]))
        got = theta(z, self.B, derivs=(0,))
        assert abs(got - expected) < 1e-11 * max(1.0, abs(expected))


class TestThetaGenusTwo:
    B = np.array([[0.3 + 1.1j, 0.2 + 0.1j],
                  [0.2 + 0.1j, -0.1 + 0.9j]])

    def test_matches_brute_sum(self):
        z = np.array([0.11 - 0.23j, -0.31 + 0.14j])
        expected = brute_theta_2d(z, self.B)
        assert abs(theta(z, self.B) - expected) < 1e-11 * abs(expected)

    def test_lattice_shift_identity(self):
        th = RiemannTheta(self.B)
        z = np.array([0.21 + 0.37j, -0.05 - 0.12j])
        m = np.array([2.0, -1.0])
        shifted = th.value(z + self.B @ m)
        factor = np.exp(-1j * np.pi * m @ self.B @ m - 2j * np.pi * m @ z)
        assert abs(shifted - factor * th.value(z)) < 1e-10 * abs(shifted)

    def test_integer_shift_invariance(self):
        th = RiemannTheta(self.B)
        z = np.array([0.4 - 0.6j, 0.3 + 0.25j])
        assert abs(th.value(z + np.array([3.0, -2.0])) - th.value(z)) \
            < 1e-11 * abs(th.value(z))

    def test_large_argument_reduction(self):
        th = RiemannTheta(self.B)
        z = np.array([0.05 + 0.1j, -0.2 + 0.03j])
        m = np.array([5.0, -3.0])
        big = th.value(z + self.B @ m)
        factor = np.exp(-1j * np.pi * m @ self.B @ m - 2j * np.pi * m @ z)
        assert abs(big - factor * th.value(z)) < 1e-9 * abs(big)

    def test_derivatives_match_finite_differences(self):
        th = RiemannTheta(self.B)
        z = np.array([0.13 + 0.21j, -0.17 + 0.09j])
        h = 1e-5
        e0 = np.array([h, 0.0])
        e1 = np.array([0.0, h])
        fd0 = (th.value(z + e0) - th.value(z - e0)) / (2 * h)
        got0 = th.value(z, derivs=(0,))
        assert abs(got0 - fd0) < 1e-6 * max(1.0, abs(fd0))
        fd01 = (th.value(z + e0 + e1) - th.value(z + e0 - e1) -
                th.value(z - e0 + e1) + th.value(z - e0 - e1)) / (4 * h * h)
        got01 = th.value(z, derivs=(0, 1))
        assert abs(got01 - fd01) < 1e-5 * max(1.0, abs(fd01))

    def test_derivative_index_order_irrelevant(self):
        th = RiemannTheta(self.B)
        z = np.array([0.31 - 0.05j, 0.12 + 0.18j])
        assert th.value(z, derivs=(0, 1)) == pytest.approx(
            th.value(z, derivs=(1, 0)), rel=1e-12)

    def test_characteristic_shift_identity(self):
        th = RiemannTheta(self.B)
        z = np.array([0.07 + 0.12j, -0.21 + 0.05j])
        char = ThetaCharacteristic((1, 0), (0, 1))
        a = np.array(char.alpha) / 2.0
        b = np.array(char.beta) / 2.0
        expected = np.exp(1j * np.pi * a @ self.B @ a +
                          2j * np.pi * a @ (z + b)) * \
            th.value(z + self.B @ a + b)
        got = th.value(z, char=char)
        assert abs(got - expected) < 1e-10 * abs(expected)

    def test_characteristic_derivative_vs_fd(self):
        th = RiemannTheta(self.B)
        char = ThetaCharacteristic((1, 1), (1, 0))
        z = np.array([0.19 - 0.08j, 0.27 + 0.16j])
        h = 1e-5
        e1 = np.array([0.0, h])
        fd = (th.value(z + e1, char=char) - th.value(z - e1, char=char)) / (2 * h)
        got = th.value(z, char=char, derivs=(1,))
        assert abs(got - fd) < 1e-6 * max(1.0, abs(fd))

    def test_batch_matches_pointwise(self):
        th = RiemannTheta(self.B)
        rng = np.random.default_rng(7)
        Z = rng.normal(size=(6, 2)) * 0.3 + 1j * rng.normal(size=(6, 2)) * 0.2
        batch = th.values(Z)
        single = np.array([th.value(z) for z in Z])
        assert np.allclose(batch, single, rtol=1e-12)

    def test_parity_symmetry(self):
        th = RiemannTheta(self.B)
        char = ThetaCharacteristic((1, 0), (1, 1))
        sign = -1.0 if char.is_odd else 1.0
        z = np.array([0.23 + 0.08j, -0.11 + 0.19j])
        lhs = th.value(-z, char=char)
        rhs = sign * th.value(z, char=char)
        assert abs(lhs - rhs) < 1e-10 * abs(rhs)


class TestValidation:
    def test_imaginary_part_must_be_positive_definite(self):
        B = np.array([[0.2 - 0.5j]])
        with pytest.raises(NonPositiveImaginaryPart):
            RiemannTheta(B)
        B2 = np.array([[1j, 0.0], [0.0, -1j]])
        with pytest.raises(NonPositiveImaginaryPart):
            RiemannTheta(B2)

    def test_dimension_checks(self):
        B = np.array([[0.3 + 1.1j, 0.1], [0.1, 1.2j]])
        th = RiemannTheta(B)
        with pytest.raises(InvalidDimension):
            th.value(np.zeros(3))
        with pytest.raises(InvalidDimension):
            th.value(np.zeros(2), derivs=(2,))
        with pytest.raises(InvalidDimension):
            RiemannTheta(np.array([[1j, 0.1]]))
        with pytest.raises(InvalidDimension):
            th.value(np.zeros(2), char=ThetaCharacteristic((1,), (0,)))

    def test_truncation_cap(self):
        B = 1e-5 * 1j * np.eye(2)
        th = RiemannTheta(B)
        with pytest.raises(TruncationFailure):
            th.value(np.array([0.3, 0.4]))


class TestCharacteristics:
    @pytest.mark.parametrize("g,n_odd,n_even", [(1, 1, 3), (2, 6, 10),
                                                (3, 28, 36)])
    def test_parity_counts(self, g, n_odd, n_even):
        odds = enumerate_characteristics(g, parity="odd")
        evens = enumerate_characteristics(g, parity="even")
        assert len(odds) == n_odd
        assert len(evens) == n_even
        assert len(enumerate_characteristics(g)) == 4 ** g

    def test_parity_definition(self):
        c = ThetaCharacteristic((1, 1), (1, 1))
        assert not c.is_odd  # <alpha, beta> = 2, even
        c2 = ThetaCharacteristic((1, 0), (1, 0))
        assert c2.is_odd
