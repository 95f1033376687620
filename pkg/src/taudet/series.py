"""Truncated complex power series.

Small fixed-order Taylor arithmetic for local-frame work: distinguished
parameters at zeros of a differential, residues, Schwarzian derivatives.
Coefficients are numpy complex arrays c[k] for x^k; all binary operations
truncate to the shorter order.
"""
from __future__ import annotations

import numpy as np


class PowerSeries:
    __slots__ = ("c",)

    def __init__(self, coeffs):
        self.c = np.asarray(coeffs, dtype=complex)
        if self.c.ndim != 1 or self.c.size == 0:
            raise ValueError("coefficients must be a nonempty 1-d array")

    @property
    def order(self) -> int:
        return self.c.size

    @classmethod
    def x(cls, order: int) -> "PowerSeries":
        c = np.zeros(order, dtype=complex)
        if order > 1:
            c[1] = 1.0
        return cls(c)

    @classmethod
    def constant(cls, value, order: int) -> "PowerSeries":
        c = np.zeros(order, dtype=complex)
        c[0] = value
        return cls(c)

    def truncate(self, order: int) -> "PowerSeries":
        if order <= self.order:
            return PowerSeries(self.c[:order])
        c = np.zeros(order, dtype=complex)
        c[:self.order] = self.c
        return PowerSeries(c)

    def __add__(self, other):
        if np.isscalar(other):
            c = self.c.copy()
            c[0] += other
            return PowerSeries(c)
        n = min(self.order, other.order)
        return PowerSeries(self.c[:n] + other.c[:n])

    __radd__ = __add__

    def __neg__(self):
        return PowerSeries(-self.c)

    def __sub__(self, other):
        if np.isscalar(other):
            return self + (-other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if np.isscalar(other):
            return PowerSeries(self.c * other)
        n = min(self.order, other.order)
        return PowerSeries(np.convolve(self.c[:n], other.c[:n])[:n])

    __rmul__ = __mul__

    def __truediv__(self, other):
        if np.isscalar(other):
            return PowerSeries(self.c / other)
        return self * other.reciprocal()

    def reciprocal(self) -> "PowerSeries":
        if self.c[0] == 0:
            raise ZeroDivisionError("reciprocal of series with zero constant term")
        n = self.order
        out = np.zeros(n, dtype=complex)
        out[0] = 1.0 / self.c[0]
        for k in range(1, n):
            out[k] = -np.dot(self.c[1:k + 1], out[k - 1::-1][:k]) / self.c[0]
        return PowerSeries(out)

    def derivative(self) -> "PowerSeries":
        if self.order == 1:
            return PowerSeries([0.0])
        return PowerSeries(self.c[1:] * np.arange(1, self.order))

    def antiderivative(self) -> "PowerSeries":
        c = np.zeros(self.order + 1, dtype=complex)
        c[1:] = self.c / np.arange(1, self.order + 1)
        return PowerSeries(c)

    def compose(self, inner: "PowerSeries") -> "PowerSeries":
        """self(inner(x)); inner must have zero constant term."""
        if abs(inner.c[0]) > 0:
            raise ValueError("composition requires inner series with c0 = 0")
        n = min(self.order, inner.order)
        acc = PowerSeries.constant(self.c[min(n, self.order) - 1], n)
        for k in range(n - 2, -1, -1):
            acc = acc * inner.truncate(n) + self.c[k]
        return acc

    def invert(self) -> "PowerSeries":
        """Compositional inverse; requires c0 = 0, c1 != 0."""
        if self.c[0] != 0 or self.c[1] == 0:
            raise ValueError("inversion requires c0 = 0 and c1 != 0")
        n = self.order
        g = PowerSeries(np.zeros(n, dtype=complex))
        g.c[1] = 1.0 / self.c[1]
        # Newton iteration g <- g - (f(g) - x) / f'(g)
        for _ in range(int(np.ceil(np.log2(n))) + 2):
            fg = self.compose(g)
            fpg = self.derivative().truncate(n).compose(g)
            delta = (fg - PowerSeries.x(n)) * fpg.reciprocal()
            g = g - delta
        return g

    def log1p_style(self) -> "PowerSeries":
        """log(self) for series with c0 = 1."""
        if abs(self.c[0] - 1.0) > 1e-12:
            raise ValueError("log1p_style requires c0 = 1")
        # log f = integral of f'/f
        return (self.derivative().truncate(self.order) *
                self.reciprocal()).antiderivative().truncate(self.order)

    def pow(self, p) -> "PowerSeries":
        """self**p for arbitrary complex p; principal branch on c0."""
        c0 = self.c[0]
        if c0 == 0:
            raise ValueError("pow requires nonzero constant term")
        u = self / c0
        logu = u.log1p_style()
        # exp(p log u) via series exponential
        n = self.order
        out = PowerSeries.constant(1.0, n)
        term = PowerSeries.constant(1.0, n)
        plog = logu * p
        for k in range(1, n + 2):
            term = (term * plog) / k
            out = out + term
        return out * (c0 ** p)

    def sqrt(self) -> "PowerSeries":
        return self.pow(0.5)

    def __call__(self, x):
        x = np.asarray(x, dtype=complex)
        res = np.zeros_like(x)
        for ck in self.c[::-1]:
            res = res * x + ck
        return res if res.shape else complex(res)

    def schwarzian(self) -> "PowerSeries":
        """Schwarzian derivative {self, x} as a series; needs c1 != 0."""
        d1 = self.derivative()
        if d1.c[0] == 0:
            raise ValueError("Schwarzian requires nonvanishing first derivative")
        ell = d1.derivative() * d1.reciprocal()
        return ell.derivative() - (ell * ell) * 0.5

    def __repr__(self):
        return f"PowerSeries({np.array2string(self.c, precision=6)})"
