"""Truncated power-series arithmetic.

Two small algebras live here:

* :class:`Taylor` -- univariate series ``sum_j c[j] u**j`` truncated at a
  fixed order, batched over trailing array axes.  Geometry uses it to get
  exact derivatives of the raw curve parametrizations.
* :class:`Poly` -- multivariate polynomials truncated at a total degree,
  stored as ``{exponent tuple: coefficient}``.  The stationary-phase engine
  builds phases and amplitudes with it.
"""

from __future__ import annotations

import math
from typing import Callable, Dict, Iterable, Tuple

import numpy as np


def _as_coeffs(x, order, like):
    c = np.zeros((order + 1,) + like.shape[1:], dtype=np.result_type(like, x))
    c[0] = x
    return c


class Taylor:
    """Truncated univariate Taylor series with batched coefficients.

    ``c`` has shape ``(order + 1, *batch)``.
    """

    __array_priority__ = 1000

    def __init__(self, coeffs):
        self.c = np.asarray(coeffs)

    @classmethod
    def variable(cls, x0, order):
        """Series of ``x0 + u``."""
        x0 = np.asarray(x0, dtype=float)
        c = np.zeros((order + 1,) + x0.shape, dtype=float)
        c[0] = x0
        if order >= 1:
            c[1] = 1.0
        return cls(c)

    @classmethod
    def constant(cls, value, order, shape=()):
        value = np.asarray(value)
        c = np.zeros((order + 1,) + np.broadcast_shapes(shape, value.shape), dtype=value.dtype if value.dtype.kind == "c" else float)
        c[0] = value
        return cls(c)

    @property
    def order(self):
        return self.c.shape[0] - 1

    def _coerce(self, other):
        if isinstance(other, Taylor):
            return other.c
        return _as_coeffs(other, self.order, self.c)

    def __add__(self, other):
        return Taylor(self.c + self._coerce(other))

    __radd__ = __add__

    def __neg__(self):
        return Taylor(-self.c)

    def __sub__(self, other):
        return Taylor(self.c - self._coerce(other))

    def __rsub__(self, other):
        return Taylor(self._coerce(other) - self.c)

    def __mul__(self, other):
        if not isinstance(other, Taylor):
            return Taylor(self.c * other)
        a, b = self.c, other.c
        n = self.order
        out = np.zeros(np.broadcast_shapes(a.shape, b.shape), dtype=np.result_type(a, b))
        for k in range(n + 1):
            out[k] = np.sum(a[: k + 1] * b[k::-1], axis=0)
        return Taylor(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Taylor):
            return Taylor(self.c / other)
        a = np.broadcast_to(self.c, np.broadcast_shapes(self.c.shape, other.c.shape))
        b = other.c
        q = np.zeros(a.shape, dtype=np.result_type(a, b))
        for k in range(self.order + 1):
            acc = a[k] - (np.sum(b[1 : k + 1] * q[k - 1 :: -1][:k], axis=0) if k else 0)
            q[k] = acc / b[0]
        return Taylor(q)

    def __rtruediv__(self, other):
        return Taylor(self._coerce(other)) / self

    def __pow__(self, alpha):
        a = self.c
        p = np.zeros(a.shape, dtype=np.result_type(a, float))
        p[0] = a[0] ** alpha
        for k in range(1, self.order + 1):
            i = np.arange(1, k + 1).reshape((-1,) + (1,) * (a.ndim - 1))
            p[k] = np.sum((alpha * i - (k - i)) * a[1 : k + 1] * p[k - 1 :: -1][:k], axis=0) / (k * a[0])
        return Taylor(p)

    def sqrt(self):
        return self ** 0.5

    def exp(self):
        a = self.c
        e = np.zeros(a.shape, dtype=np.result_type(a, float))
        e[0] = np.exp(a[0])
        for k in range(1, self.order + 1):
            i = np.arange(1, k + 1).reshape((-1,) + (1,) * (a.ndim - 1))
            e[k] = np.sum(i * a[1 : k + 1] * e[k - 1 :: -1][:k], axis=0) / k
        return Taylor(e)

    def log(self):
        a = self.c
        out = np.zeros(a.shape, dtype=np.result_type(a, float))
        out[0] = np.log(a[0])
        for k in range(1, self.order + 1):
            i = np.arange(1, k).reshape((-1,) + (1,) * (a.ndim - 1))
            s = np.sum(i * out[1:k] * a[k - 1 : 0 : -1], axis=0) if k > 1 else 0
            out[k] = (a[k] - s / k) / a[0]
        return Taylor(out)

    def sincos(self):
        a = self.c
        s = np.zeros(a.shape, dtype=np.result_type(a, float))
        c = np.zeros_like(s)
        s[0], c[0] = np.sin(a[0]), np.cos(a[0])
        for k in range(1, self.order + 1):
            i = np.arange(1, k + 1).reshape((-1,) + (1,) * (a.ndim - 1))
            ia = i * a[1 : k + 1]
            s[k] = np.sum(ia * c[k - 1 :: -1][:k], axis=0) / k
            c[k] = -np.sum(ia * s[k - 1 :: -1][:k], axis=0) / k
        return Taylor(s), Taylor(c)

    def sin(self):
        return self.sincos()[0]

    def cos(self):
        return self.sincos()[1]

    def derivatives(self):
        """Derivative values ``d^j/du^j`` at ``u = 0``."""
        fact = np.array([math.factorial(j) for j in range(self.order + 1)], dtype=float)
        return self.c * fact.reshape((-1,) + (1,) * (self.c.ndim - 1))

    def compose(self, inner: "Taylor") -> "Taylor":
        """``self(inner(u))`` where ``inner`` has zero constant term."""
        out = Taylor(np.zeros_like(inner.c, dtype=np.result_type(self.c, inner.c)))
        for k in range(self.order, -1, -1):
            out = out * inner + self.c[k]
        return out

    def revert(self) -> "Taylor":
        """Series inverse ``u(x)`` of ``x = self(u)``; requires c0 = 0, c1 != 0."""
        n = self.order
        x = Taylor.variable(np.zeros(self.c.shape[1:]), n)
        u = x / self.c[1]
        for _ in range(n):
            u = u - (self.compose(u) - x) / self.c[1]
        return u


Monomial = Tuple[int, ...]


class Poly:
    """Multivariate polynomial truncated at total degree ``deg``."""

    def __init__(self, nvar: int, deg: int, terms: Dict[Monomial, complex] | None = None):
        self.nvar = nvar
        self.deg = deg
        self.terms: Dict[Monomial, complex] = {}
        if terms:
            for m, v in terms.items():
                if sum(m) <= deg and v != 0:
                    self.terms[m] = self.terms.get(m, 0) + v

    @classmethod
    def const(cls, nvar, deg, value):
        return cls(nvar, deg, {(0,) * nvar: value})

    @classmethod
    def var(cls, nvar, deg, i, shift=0.0):
        e = [0] * nvar
        e[i] = 1
        return cls(nvar, deg, {(0,) * nvar: shift, tuple(e): 1.0})

    @classmethod
    def univariate(cls, nvar, deg, i, coeffs: Iterable):
        """``sum_j coeffs[j] * x_i**j``."""
        terms = {}
        for j, c in enumerate(coeffs):
            e = [0] * nvar
            e[i] = j
            terms[tuple(e)] = c
        return cls(nvar, deg, terms)

    def copy(self):
        return Poly(self.nvar, self.deg, dict(self.terms))

    def constant_term(self):
        return self.terms.get((0,) * self.nvar, 0.0)

    def _wrap(self, other):
        if isinstance(other, Poly):
            return other
        return Poly.const(self.nvar, self.deg, other)

    def __add__(self, other):
        other = self._wrap(other)
        out = dict(self.terms)
        for m, v in other.terms.items():
            out[m] = out.get(m, 0) + v
        return Poly(self.nvar, min(self.deg, other.deg), out)

    __radd__ = __add__

    def __neg__(self):
        return Poly(self.nvar, self.deg, {m: -v for m, v in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._wrap(other))

    def __rsub__(self, other):
        return self._wrap(other) - self

    def __mul__(self, other):
        if not isinstance(other, Poly):
            return Poly(self.nvar, self.deg, {m: v * other for m, v in self.terms.items()})
        deg = min(self.deg, other.deg)
        out: Dict[Monomial, complex] = {}
        for m1, v1 in self.terms.items():
            d1 = sum(m1)
            for m2, v2 in other.terms.items():
                if d1 + sum(m2) > deg:
                    continue
                m = tuple(a + b for a, b in zip(m1, m2))
                out[m] = out.get(m, 0) + v1 * v2
        return Poly(self.nvar, deg, out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Poly):
            return self * other.apply_series(_series_pow(other.constant_term(), -1.0, self.deg))
        return self * (1.0 / other)

    def apply_series(self, derivs_over_fact):
        """``f(self)`` given ``f``'s Taylor coefficients at the constant term."""
        c0 = self.constant_term()
        delta = self - c0
        out = Poly.const(self.nvar, self.deg, derivs_over_fact[0])
        power = Poly.const(self.nvar, self.deg, 1.0)
        for n in range(1, min(len(derivs_over_fact), self.deg + 1)):
            power = power * delta
            if not power.terms:
                break
            out = out + power * derivs_over_fact[n]
        return out

    def pow(self, alpha):
        return self.apply_series(_series_pow(self.constant_term(), alpha, self.deg))

    def sqrt(self):
        return self.pow(0.5)

    def log(self):
        c0 = self.constant_term()
        coeffs = [np.log(c0)] + [(-1) ** (n + 1) / (n * c0 ** n) for n in range(1, self.deg + 1)]
        return self.apply_series(coeffs)

    def homogeneous(self, d):
        return {m: v for m, v in self.terms.items() if sum(m) == d}

    def truncate(self, deg):
        return Poly(self.nvar, deg, self.terms)

    def map_coeffs(self, fn: Callable):
        return Poly(self.nvar, self.deg, {m: fn(v) for m, v in self.terms.items()})

    def substitute(self, polys):
        """Compose with ``x_i -> polys[i]`` (each without constant term)."""
        deg = min(p.deg for p in polys)
        out = Poly.const(polys[0].nvar, deg, 0.0)
        cache = {}
        for m, v in self.terms.items():
            term = Poly.const(polys[0].nvar, deg, v)
            for i, e in enumerate(m):
                if e:
                    key = (i, e)
                    if key not in cache:
                        cache[key] = _poly_power(polys[i], e)
                    term = term * cache[key]
            out = out + term
        return out


def _poly_power(p, e):
    out = Poly.const(p.nvar, p.deg, 1.0)
    for _ in range(e):
        out = out * p
    return out


def _series_pow(c0, alpha, n):
    """Taylor coefficients of ``x**alpha`` at ``x = c0``."""
    coeffs = []
    binom = 1.0
    for j in range(n + 1):
        coeffs.append(binom * c0 ** (alpha - j))
        binom *= (alpha - j) / (j + 1)
    return coeffs
