"""Riemann theta functions, half-integer characteristics, Dedekind eta.

The theta series is summed over an axis-aligned integer box that contains
the Gaussian-decay ellipsoid of every requested argument, so a batch of
arguments shares a single lattice enumeration.  Arguments are first reduced
by the exact lattice quasi-periodicity, which keeps the enumeration box
small and the phase arithmetic well conditioned.  Characteristics are
folded into an exponential prefactor and an argument shift; derivatives of
prefactor times series are expanded by the Leibniz rule over the derivative
multi-index.

Accuracy contract: truncation error is controlled relative to the Gaussian
envelope exp(pi <y, Y^-1 y>) of the reduced argument, y = Im z, Y = Im B.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product as _iproduct

import numpy as np

from .errors import (
    InvalidDimension,
    NonPositiveImaginaryPart,
    TruncationFailure,
)

_TWO_PI_I = 2j * np.pi


@dataclass(frozen=True)
class ThetaCharacteristic:
    """Half-integer characteristic; entries are 0/1 meaning 0 or 1/2."""

    alpha: tuple
    beta: tuple

    def __post_init__(self):
        object.__setattr__(self, "alpha", tuple(int(v) for v in self.alpha))
        object.__setattr__(self, "beta", tuple(int(v) for v in self.beta))
        if len(self.alpha) != len(self.beta):
            raise InvalidDimension("alpha and beta must have equal length")
        if any(v not in (0, 1) for v in self.alpha + self.beta):
            raise ValueError("characteristic entries must be 0 or 1")

    @property
    def genus(self) -> int:
        return len(self.alpha)

    @property
    def is_odd(self) -> bool:
        return sum(a * b for a, b in zip(self.alpha, self.beta)) % 2 == 1

    def half_vectors(self):
        return (np.array(self.alpha, dtype=float) / 2.0,
                np.array(self.beta, dtype=float) / 2.0)


def enumerate_characteristics(g: int, parity: str | None = None):
    """All 4**g half-integer characteristics, optionally filtered by parity."""
    if parity not in (None, "odd", "even"):
        raise ValueError("parity must be None, 'odd' or 'even'")
    out = []
    for bits in _iproduct((0, 1), repeat=2 * g):
        c = ThetaCharacteristic(bits[:g], bits[g:])
        if parity is None or (parity == "odd") == c.is_odd:
            out.append(c)
    return out


def _subset_masks(d: int):
    return range(1 << d)


class RiemannTheta:
    """Theta function of a fixed period matrix B (symmetric, Im B > 0)."""

    def __init__(self, B, shell_cap: int = 40, count_cap: int = 4_000_000):
        B = np.asarray(B, dtype=complex)
        if B.ndim != 2 or B.shape[0] != B.shape[1]:
            raise InvalidDimension("B must be a square matrix")
        scale = max(np.max(np.abs(B)), 1.0)
        if np.max(np.abs(B - B.T)) > 1e-8 * scale:
            raise ValueError("B must be symmetric")
        Y = B.imag.copy()
        eigs = np.linalg.eigvalsh(0.5 * (Y + Y.T))
        if eigs[0] <= 0:
            raise NonPositiveImaginaryPart(
                f"Im B must be positive definite (min eig {eigs[0]:.3e})")
        self.B = 0.5 * (B + B.T)
        self.g = B.shape[0]
        self.Y = Y
        self.Yinv = np.linalg.inv(Y)
        M = np.linalg.cholesky(np.pi * Y)
        self._MT = M.T
        # per-axis bounding-box factors for the ellipsoid ||MT u|| <= R
        MT_inv = np.linalg.inv(self._MT)
        self._axis_r = np.linalg.norm(MT_inv, axis=1)
        self._shell_cap = shell_cap
        self._count_cap = count_cap

    # -- public API -------------------------------------------------------

    def value(self, z, char: ThetaCharacteristic | None = None,
              derivs=(), tol: float = 1e-12) -> complex:
        out = self.values(np.asarray(z, dtype=complex)[None, :], char=char,
                          derivs=derivs, tol=tol)
        return complex(out[0])

    def values(self, Z, char: ThetaCharacteristic | None = None,
               derivs=(), tol: float = 1e-12) -> np.ndarray:
        """Theta (or one z-derivative) at a batch of arguments, shape (m,)."""
        res = self.value_bundle(Z, [tuple(derivs)], char=char, tol=tol)
        return res[0]

    def value_bundle(self, Z, deriv_multis, char=None, tol: float = 1e-12):
        """Several z-derivatives sharing one lattice pass.

        Returns an array of shape (len(deriv_multis), m) aligned with the
        requested multi-indices.
        """
        Z = np.atleast_2d(np.asarray(Z, dtype=complex))
        m, width = Z.shape
        if width != self.g:
            raise InvalidDimension(
                f"arguments have width {width}, expected {self.g}")
        multis = [tuple(sorted(int(i) for i in mu)) for mu in deriv_multis]
        for mu in multis:
            if any(i < 0 or i >= self.g for i in mu):
                raise InvalidDimension(f"derivative index {mu} out of range")

        if char is not None:
            if char.genus != self.g:
                raise InvalidDimension("characteristic genus mismatch")
            a, b = char.half_vectors()
            Z_eff = Z + (self.B @ a + b)[None, :]
            c_const = (1j * np.pi * a @ self.B @ a +
                       _TWO_PI_I * a @ b) * np.ones(m, dtype=complex)
            mu_vec = np.tile(a, (m, 1))
            shift = self.B @ a + b
        else:
            Z_eff = Z
            c_const = np.zeros(m, dtype=complex)
            mu_vec = np.zeros((m, self.g))
            shift = np.zeros(self.g)

        # lattice reduction of the argument
        red = -np.round(Z_eff.imag @ self.Yinv.T)
        Z_red = Z_eff + red @ self.B
        nint = -np.round(Z_red.real)
        Z_red = Z_red + nint
        # theta(z_eff) = exp(i pi <m,Bm> + 2 pi i <m, z_eff>) theta(z_red)
        quad_red = np.einsum("ij,jk,ik->i", red, self.B, red)
        c_const = c_const + 1j * np.pi * quad_red + \
            _TWO_PI_I * np.einsum("ij,j->i", red, shift)
        mu_vec = mu_vec + red

        # every sub-multi-index needed by the Leibniz expansion
        needed = set()
        for mu in multis:
            d = len(mu)
            for mask in _subset_masks(d):
                residual = tuple(sorted(mu[j] for j in range(d)
                                        if not (mask >> j) & 1))
                needed.add(residual)
        needed = sorted(needed)
        core = self._core_bundle(Z_red, needed, tol)

        prefactor = np.exp(c_const + _TWO_PI_I *
                           np.einsum("ij,ij->i", mu_vec, Z))
        out = np.empty((len(multis), m), dtype=complex)
        for row, mu in enumerate(multis):
            d = len(mu)
            acc = np.zeros(m, dtype=complex)
            for mask in _subset_masks(d):
                fac = np.ones(m, dtype=complex)
                residual = []
                for j in range(d):
                    if (mask >> j) & 1:
                        fac = fac * (_TWO_PI_I * mu_vec[:, mu[j]])
                    else:
                        residual.append(mu[j])
                acc = acc + fac * core[tuple(sorted(residual))]
            out[row] = prefactor * acc
        return out

    # -- core lattice sum -------------------------------------------------

    def _core_bundle(self, Z_red, multis, tol):
        m = Z_red.shape[0]
        y = Z_red.imag
        centers = -(y @ self.Yinv.T)
        d_max = max((len(mu) for mu in multis), default=0)
        R = self._choose_radius(tol, d_max, np.max(np.abs(centers), initial=0.0))

        lo = np.floor(centers.min(axis=0) - R * self._axis_r).astype(int)
        hi = np.ceil(centers.max(axis=0) + R * self._axis_r).astype(int)
        sizes = hi - lo + 1
        total = int(np.prod(sizes.astype(float)))
        if total > self._count_cap or total <= 0:
            raise TruncationFailure(
                f"lattice enumeration needs {total} points "
                f"(cap {self._count_cap}); Im B too small for genus {self.g}")
        axes = [np.arange(lo[j], hi[j] + 1) for j in range(self.g)]
        grid = np.meshgrid(*axes, indexing="ij")
        n = np.stack([gax.ravel() for gax in grid], axis=1).astype(float)

        quad = 1j * np.pi * np.einsum("ij,jk,ik->i", n, self.B, n)
        lin = _TWO_PI_I * (n @ Z_red.T)
        terms = np.exp(quad[:, None] + lin)
        out = {}
        for mu in multis:
            if mu:
                fac = np.ones(n.shape[0], dtype=complex)
                for idx in mu:
                    fac = fac * (_TWO_PI_I * n[:, idx])
                out[mu] = fac @ terms
            else:
                out[mu] = terms.sum(axis=0)
        return out

    def _choose_radius(self, tol, d_max, center_span):
        r_max = float(np.max(self._axis_r))
        for R in range(2, self._shell_cap + 1):
            tail = 0.0
            for k in range(R, R + 60):
                count = np.prod(2.0 * (k + 1) * self._axis_r + 2.0)
                wmax = center_span + (k + 1) * r_max + 1.0
                tail += count * np.exp(-k * k) * (2.0 * np.pi * wmax) ** d_max
                if tail > 0.5 * tol and k == R:
                    break
            if tail <= 0.5 * tol:
                return R
        raise TruncationFailure(
            f"no truncation radius up to {self._shell_cap} reaches "
            f"tolerance {tol:g}")


def theta(z, B, char: ThetaCharacteristic | None = None, derivs=(),
          tol: float = 1e-12) -> complex:
    """One-shot theta evaluation; use RiemannTheta directly for caching."""
    return RiemannTheta(B).value(z, char=char, derivs=derivs, tol=tol)


# -- Dedekind eta ---------------------------------------------------------

def _reduce_to_fundamental(sigma: complex):
    """Modular reduction; returns (sigma', multiplicative factor) with
    eta(sigma) = factor * eta(sigma')."""
    factor = 1.0 + 0.0j
    for _ in range(200):
        n = round(sigma.real)
        if n != 0:
            sigma -= n
            factor *= np.exp(1j * np.pi * n / 12.0)
        if abs(sigma) < 0.999:
            new = -1.0 / sigma
            factor *= np.sqrt(-1j * new)
            sigma = new
        else:
            return sigma, factor
    raise TruncationFailure("modular reduction did not terminate")


def dedekind_eta(sigma: complex, tol: float = 1e-15) -> complex:
    """Dedekind eta on the upper half-plane.

    Values whose magnitude is below the double-precision floor (very large
    Im sigma) underflow quietly to 0.
    """
    sigma = complex(sigma)
    if sigma.imag <= 0:
        raise NonPositiveImaginaryPart("eta requires Im sigma > 0")
    sigma, factor = _reduce_to_fundamental(sigma)
    q = np.exp(_TWO_PI_I * sigma)
    absq = abs(q)
    n_terms = max(5, int(np.ceil(np.log(tol) / np.log(absq))) if absq > 0 else 5)
    ks = np.arange(1, n_terms + 1)
    prod = np.prod(1.0 - q ** ks)
    with np.errstate(under="ignore"):
        return complex(factor * np.exp(1j * np.pi * sigma / 12.0) * prod)


def eta_log_derivative(sigma: complex, tol: float = 1e-15) -> complex:
    """d/d sigma of log eta, computed from the weight-2 Eisenstein series."""
    sigma = complex(sigma)
    if sigma.imag <= 0:
        raise NonPositiveImaginaryPart("requires Im sigma > 0")
    n = round(sigma.real)
    if n != 0:
        return eta_log_derivative(sigma - n, tol)
    if abs(sigma) < 0.999:
        inner = eta_log_derivative(-1.0 / sigma, tol)
        return inner / sigma ** 2 - 0.5 / sigma
    q = np.exp(_TWO_PI_I * sigma)
    absq = abs(q)
    n_terms = max(5, int(np.ceil(np.log(tol) / np.log(absq))))
    ks = np.arange(1, n_terms + 1)
    qk = q ** ks
    e2 = 1.0 - 24.0 * np.sum(ks * qk / (1.0 - qk))
    return complex(1j * np.pi * e2 / 12.0)
