"""Hankel and Bessel functions, WKB amplitudes, Bessel zeros, free Green's function.

Production values come from :mod:`scipy.special`.  An independent reference
route (power series for |z| <= 12, Hankel's asymptotic expansion beyond, both
summed in 40-digit arithmetic) backs the self-test and the oracle tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Tuple

import mpmath
import numpy as np
from scipy import special
from scipy.optimize import brentq

from .errors import DiagonalError, DomainError, RangeError

SWITCH_RADIUS = 12.0
N_MAX = 600
K_MIN_LOG = 2.0


@dataclass(frozen=True)
class SpectralParameter:
    """Complex wavenumber k + i*tau (constant) or k + i*tau*log k (logarithmic)."""

    k: float
    tau: float = 0.0
    scaling: str = "constant"

    def __post_init__(self):
        if self.k <= 0:
            raise DomainError("k must be positive")
        if self.tau < 0:
            raise DomainError("tau must be non-negative")
        if self.scaling not in ("constant", "logarithmic"):
            raise DomainError(f"unknown scaling {self.scaling!r}")
        if self.scaling == "logarithmic" and self.k < K_MIN_LOG:
            raise DomainError("logarithmic scaling needs k >= 2")

    @property
    def imag_part(self) -> float:
        return self.tau if self.scaling == "constant" else self.tau * math.log(self.k)

    @property
    def kappa(self) -> complex:
        return complex(self.k, self.imag_part)


def _kappa(sp) -> complex:
    return sp.kappa if isinstance(sp, SpectralParameter) else complex(sp)


# ---------------------------------------------------------------------------
# Hankel functions

def hankel1(nu: int, z):
    """H^(1)_nu(z) for nu in {0, 1}, principal branch, Im z >= 0."""
    if nu not in (0, 1):
        raise DomainError("only orders 0 and 1 are supported")
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise DomainError("H^(1) is singular at z = 0")
    if np.any(z.imag < 0):
        raise DomainError("Im z must be >= 0")
    return special.hankel1(nu, z)


def hankel1_n(n, z):
    """Integer-order H^(1)_n(z) (used by the disc formulas)."""
    return special.hankel1(n, np.asarray(z, dtype=complex))


def hankel1_prime_n(n, z):
    return special.h1vp(n, np.asarray(z, dtype=complex))


_MP_DPS = 40


def _series_JY(nu: int, z: complex):
    with mpmath.workdps(_MP_DPS):
        z = mpmath.mpc(z)
        h = z / 2
        h2 = h * h
        euler = mpmath.euler
        J = mpmath.mpc(0)
        term = h ** nu / mpmath.factorial(nu)
        k = 0
        # J_nu
        while True:
            J += term
            k += 1
            term = -term * h2 / (k * (k + nu))
            if abs(term) < mpmath.mpf(10) ** (-_MP_DPS) * max(abs(J), 1):
                break
        logh = mpmath.log(h)
        if nu == 0:
            s = mpmath.mpc(0)
            term = mpmath.mpc(1)
            Hk = mpmath.mpf(0)
            k = 0
            while True:
                k += 1
                term = -term * h2 / (k * k)
                Hk += mpmath.mpf(1) / k
                add = -term * Hk
                s += add
                if abs(add) < mpmath.mpf(10) ** (-_MP_DPS) * max(abs(s), 1) and k > 2:
                    break
            Y = (2 / mpmath.pi) * (logh + euler) * J + (2 / mpmath.pi) * s
        else:
            s = mpmath.mpc(0)
            term = h
            psi1, psi2 = -euler, -euler + 1
            k = 0
            while True:
                add = (psi1 + psi2) * term
                s += add
                k += 1
                term = -term * h2 / (k * (k + 1))
                psi1 += mpmath.mpf(1) / k
                psi2 += mpmath.mpf(1) / (k + 1)
                if abs(add) < mpmath.mpf(10) ** (-_MP_DPS) * max(abs(s), 1) and k > 2:
                    break
            Y = -2 / (mpmath.pi * z) + (2 / mpmath.pi) * logh * J - s / mpmath.pi
        return J, Y


def wkb_coefficients(nu, count) -> List[complex]:
    """c_j with H_nu(z) ~ sqrt(2/(pi z)) e^{i(z - nu pi/2 - pi/4)} sum_j c_j z^{-j}."""
    out = []
    c = 1.0 + 0j
    for j in range(count):
        out.append(c)
        l = j + 1
        c = c * 1j * (4 * nu * nu - (2 * l - 1) ** 2) / (l * 8)
    return out


def _asymptotic_H(nu: int, z: complex, min_terms=8):
    with mpmath.workdps(_MP_DPS):
        z = mpmath.mpc(z)
        total = mpmath.mpc(0)
        c = mpmath.mpc(1)
        prev = None
        j = 0
        while j < 200:
            term = c / z ** j
            if prev is not None and j >= min_terms and abs(term) > abs(prev):
                break
            total += term
            if abs(term) < mpmath.mpf(10) ** (-30):
                break
            prev = term
            l = j + 1
            c = c * mpmath.mpc(0, 1) * (4 * nu * nu - (2 * l - 1) ** 2) / (l * 8)
            j += 1
        pref = mpmath.sqrt(2 / (mpmath.pi * z)) * mpmath.exp(1j * (z - nu * mpmath.pi / 2 - mpmath.pi / 4))
        return pref * total


def hankel1_series(nu: int, z: complex) -> complex:
    with mpmath.workdps(_MP_DPS):
        J, Y = _series_JY(nu, z)
        # J and Y each grow like e^{|Im z|}; combine before rounding to double
        return complex(J + 1j * Y)


def hankel1_asymptotic(nu: int, z: complex) -> complex:
    return complex(_asymptotic_H(nu, z))


def hankel1_reference(nu: int, z: complex) -> complex:
    """Independent evaluation: series inside the switch radius, asymptotic outside."""
    if nu not in (0, 1):
        raise DomainError("only orders 0 and 1 are supported")
    if z == 0:
        raise DomainError("H^(1) is singular at z = 0")
    return hankel1_series(nu, z) if abs(z) <= SWITCH_RADIUS else hankel1_asymptotic(nu, z)


def wkb_amplitude(nu: int, z):
    """a_nu(z) = H^(1)_nu(z) e^{-iz}; semiclassical regime |z| >= 0.1 only."""
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z) < 0.1):
        raise DomainError("wkb_amplitude needs |z| >= 0.1")
    # hankel1e already carries the factor e^{-iz}
    return special.hankel1e(nu, z)


# ---------------------------------------------------------------------------
# Bessel J and zeros

def _check_order(n):
    if n < 0 or n > N_MAX:
        raise RangeError(f"order {n} outside [0, {N_MAX}]")


def bessel_j(n: int, x):
    _check_order(n)
    return special.jv(n, x)


def bessel_j_prime(n: int, x):
    _check_order(n)
    return special.jvp(n, x)


_AIRY_ZEROS = None


def _initial_zero_guess(n: int, m: int) -> float:
    if n <= 2 * m + 4:
        beta = (m + 0.5 * n - 0.25) * math.pi
        mu = 4.0 * n * n
        e = 8.0 * beta
        return beta - (mu - 1) / e - 4 * (mu - 1) * (7 * mu - 31) / (3 * e ** 3)
    global _AIRY_ZEROS
    if _AIRY_ZEROS is None or len(_AIRY_ZEROS) < m:
        _AIRY_ZEROS = -special.ai_zeros(max(m, 64))[0]
    a = _AIRY_ZEROS[m - 1]
    t = (0.5 * n) ** (1.0 / 3.0)
    return n + a * t + 0.15 * a * a / t


def _newton_zero(n, x):
    for _ in range(50):
        f = special.jv(n, x)
        d = special.jvp(n, x)
        step = f / d
        x -= step
        if abs(step) < 1e-15 * x:
            break
    return x


@lru_cache(maxsize=None)
def _zeros_by_scan(n: int, upto: float) -> Tuple[float, ...]:
    # no zeros of J_n below n; consecutive zeros are more than 2.9 apart
    x = np.arange(max(n, 0.5) * 0.999, upto + 1.0, 0.5)
    v = special.jv(n, x)
    idx = np.nonzero(v[:-1] * v[1:] < 0)[0]
    out = []
    for i in idx:
        r = brentq(lambda t: special.jv(n, t), x[i], x[i + 1], xtol=1e-15, rtol=1e-15)
        out.append(_newton_zero(n, r))
    return tuple(out)


def bessel_zero(n: int, m: int) -> float:
    """m-th positive zero of J_n: asymptotic initial guess refined by Newton.

    The Newton result is validated against a bracketing scan and replaced by
    the scanned root if it landed on a neighbouring zero.
    """
    _check_order(n)
    if m < 1:
        raise RangeError("zero index m must be >= 1")
    x = _newton_zero(n, _initial_zero_guess(n, m))
    upto = x + 4.0
    roots = _zeros_by_scan(n, float(math.ceil(upto)))
    while len(roots) < m:
        upto += 4.0 * (m - len(roots)) + 4.0
        roots = _zeros_by_scan(n, float(math.ceil(upto)))
    target = roots[m - 1]
    return x if abs(x - target) < 1e-9 else target


@lru_cache(maxsize=8)
def bessel_zeros_upto(lam_max: float) -> Tuple[np.ndarray, np.ndarray]:
    """All zeros j_{n,m} <= lam_max with their multiplicities (1 for n = 0, else 2)."""
    vals, mult = [], []
    n = 0
    while n <= lam_max and n <= N_MAX:
        roots = [r for r in _zeros_by_scan(n, float(math.ceil(lam_max))) if r <= lam_max]
        if not roots:
            break
        vals.extend(roots)
        mult.extend([1 if n == 0 else 2] * len(roots))
        n += 1
    if n > N_MAX:
        raise RangeError("lam_max needs orders above n_max")
    order = np.argsort(vals)
    return np.asarray(vals)[order], np.asarray(mult)[order]


# ---------------------------------------------------------------------------
# Green's function

def free_green(sp, x, y):
    """G0 = (i/4) H0(kappa |x - y|), so (Delta + kappa^2) G0 = -delta."""
    kap = _kappa(sp)
    r = np.linalg.norm(np.asarray(x, float) - np.asarray(y, float), axis=-1)
    if np.any(r == 0):
        raise DiagonalError("x == y")
    return 0.25j * special.hankel1(0, kap * r)


def free_green_normal_derivative(sp, x, q, normal_at_q):
    """Derivative of G0(x, q) in q along ``normal_at_q``."""
    kap = _kappa(sp)
    d = np.asarray(q, float) - np.asarray(x, float)
    r = np.linalg.norm(d, axis=-1)
    if np.any(r == 0):
        raise DiagonalError("x == q")
    cos = np.sum(d * np.asarray(normal_at_q, float), axis=-1) / r
    return -0.25j * kap * special.hankel1(1, kap * r) * cos


def selftest_table() -> List[Dict]:
    """Fixed table of reference values for regression diffing."""
    rows = []
    for nu in (0, 1):
        for z in (0.5, 1.0, 3 + 0.1j, 12.0, 12.0001, 50 + 2j, 500.0):
            a = complex(hankel1(nu, z))
            b = hankel1_reference(nu, complex(z))
            rows.append({"nu": nu, "z": [complex(z).real, complex(z).imag], "scipy": [a.real, a.imag], "reference": [b.real, b.imag], "rel_diff": abs(a - b) / abs(b)})
    for n, m in ((0, 1), (1, 1), (5, 3), (40, 2)):
        rows.append({"n": n, "m": m, "zero": bessel_zero(n, m)})
    return rows
