"""Truncated Taylor-jet arithmetic on numpy arrays.

A jet of order K stores ``c[k] = f^{(k)}(t) / k!`` for k = 0..K at every
sample point, so derivatives come out exact up to rounding instead of
through finite differences.
"""

from __future__ import annotations

import math

import numpy as np


class Jet:
    __slots__ = ("c",)

    def __init__(self, coeffs: np.ndarray):
        self.c = coeffs

    @property
    def order(self) -> int:
        return self.c.shape[0] - 1

    @classmethod
    def variable(cls, t, order: int) -> "Jet":
        t = np.asarray(t, dtype=float)
        c = np.zeros((order + 1,) + t.shape)
        c[0] = t
        if order >= 1:
            c[1] = 1.0
        return cls(c)

    @classmethod
    def constant(cls, value, order: int, shape=()) -> "Jet":
        c = np.zeros((order + 1,) + tuple(shape))
        c[0] = value
        return cls(c)

    def value(self) -> np.ndarray:
        return self.c[0]

    def derivative(self, k: int) -> np.ndarray:
        return self.c[k] * math.factorial(k)

    def _coerce(self, other) -> "Jet":
        if isinstance(other, Jet):
            return other
        return Jet.constant(other, self.order, self.c.shape[1:])

    def __add__(self, other):
        if isinstance(other, Jet):
            return Jet(self.c + other.c)
        c = self.c.copy()
        c[0] = c[0] + other
        return Jet(c)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.c)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c * other)
        a, b = self.c, other.c
        out = np.zeros(np.broadcast_shapes(a.shape, b.shape))
        for k in range(out.shape[0]):
            acc = out[k]
            for j in range(k + 1):
                acc += a[j] * b[k - j]
        return Jet(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c / other)
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def reciprocal(self) -> "Jet":
        b = self.c
        q = np.zeros_like(b)
        q[0] = 1.0 / b[0]
        for k in range(1, b.shape[0]):
            acc = np.zeros_like(b[0])
            for j in range(1, k + 1):
                acc += b[j] * q[k - j]
            q[k] = -acc * q[0]
        return Jet(q)

    def exp(self) -> "Jet":
        a = self.c
        e = np.zeros_like(a)
        e[0] = np.exp(a[0])
        for k in range(1, a.shape[0]):
            acc = np.zeros_like(a[0])
            for j in range(1, k + 1):
                acc += j * a[j] * e[k - j]
            e[k] = acc / k
        return Jet(e)

    def power(self, alpha: float) -> "Jet":
        """``self ** alpha`` for a strictly positive base."""
        a = self.c
        p = np.zeros_like(a)
        p[0] = a[0] ** alpha
        inv = 1.0 / a[0]
        for k in range(1, a.shape[0]):
            acc = np.zeros_like(a[0])
            for j in range(1, k + 1):
                acc += ((alpha + 1.0) * j - k) * a[j] * p[k - j]
            p[k] = acc * inv / k
        return Jet(p)

    def __pow__(self, n):
        if isinstance(n, int) and n >= 0:
            out = Jet.constant(1.0, self.order, self.c.shape[1:])
            for _ in range(n):
                out = out * self
            return out
        return self.power(float(n))


def compose_coefficients(jet: Jet) -> np.ndarray:
    """Derivative array ``[f, f', f'', ...]`` stacked along axis 0."""
    fact = np.array([math.factorial(k) for k in range(jet.order + 1)], dtype=float)
    return jet.c * fact.reshape((-1,) + (1,) * (jet.c.ndim - 1))
