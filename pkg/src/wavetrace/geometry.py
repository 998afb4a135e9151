"""Smooth closed plane curves in arclength parametrization.

A curve is specified by a raw periodic parametrization ``t -> (X(t), Y(t))``
on ``[0, 2*pi)``, traversed counter-clockwise.  Raw coordinates are written
with :class:`~wavetrace.jets.Taylor` arithmetic so any derivative order is
available exactly.  The arclength map ``t -> s(t)`` is computed spectrally
from FFT samples of the speed and inverted with Newton's method.

Conventions: the normal is the inward one (left of the tangent); curvature
is positive for convex boundaries (unit circle has curvature +1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Optional, Sequence

import numpy as np

from .errors import NonSimpleCurve, OrderUnavailable, ToleranceNotMet, ConfigError
from .jets import Taylor

TWO_PI = 2.0 * math.pi
DEFAULT_REPARAM_TOL = 1e-11
GRAPH_DEGREE_CAP = 16
ANALYTIC_ORDER_CAP = 30


# ---------------------------------------------------------------------------
# raw shapes

def _smooth_step(u: Taylor) -> Taylor:
    """C-infinity step from 0 (u <= 0) to 1 (u >= 1), evaluated on (0, 1)."""
    a = (-1.0 / u).exp()
    b = (-1.0 / (1.0 - u)).exp()
    return a / (a + b)


class _RawShape:
    name = ""
    order_cap = ANALYTIC_ORDER_CAP

    def xy(self, t: Taylor):
        raise NotImplementedError

    def params(self) -> Dict:
        raise NotImplementedError


class _Circle(_RawShape):
    name = "circle"

    def __init__(self, radius=1.0):
        if radius <= 0:
            raise ConfigError("circle radius must be positive")
        self.radius = float(radius)

    def xy(self, t):
        s, c = t.sincos()
        return c * self.radius, s * self.radius

    def params(self):
        return {"params": [self.radius]}


class _Ellipse(_RawShape):
    name = "ellipse"

    def __init__(self, a, b):
        if a <= 0 or b <= 0:
            raise ConfigError("ellipse semi-axes must be positive")
        self.a, self.b = float(a), float(b)

    def xy(self, t):
        s, c = t.sincos()
        return c * self.a, s * self.b

    def params(self):
        return {"params": [self.a, self.b]}


class _Fourier(_RawShape):
    """Star-shaped curve with radius r(t) = c0 + sum c_m cos(mt) + s_m sin(mt)."""

    name = "fourier"

    def __init__(self, cos_coeffs: Sequence[float], sin_coeffs: Sequence[float] = ()):
        self.cos = [float(v) for v in cos_coeffs] or [1.0]
        self.sin = [float(v) for v in sin_coeffs]

    def radius(self, t: Taylor) -> Taylor:
        r = Taylor.constant(self.cos[0], t.order, t.c.shape[1:])
        for m in range(1, max(len(self.cos), len(self.sin) + 1)):
            s, c = (t * m).sincos()
            if m < len(self.cos) and self.cos[m]:
                r = r + c * self.cos[m]
            if m - 1 < len(self.sin) and self.sin[m - 1]:
                r = r + s * self.sin[m - 1]
        return r

    def xy(self, t):
        r = self.radius(t)
        s, c = t.sincos()
        return r * c, r * s

    def params(self):
        return {"fourier_cos": list(self.cos), "fourier_sin": list(self.sin)}


class _GraphPair(_RawShape):
    """Domain whose top and bottom boundaries near x = 0 are y = f+(x), y = f-(x).

    ``f+`` and ``f-`` are power series in the global chart (coefficient lists
    of x**j).  Away from the two graphs the curve is closed by a C-infinity
    blend: X = w cos t, Y = m(X) + d(X) S(t), with m, d the mean and half
    difference of f+/f- and S equal to sign(sin t) for |cos t| <= c0 and to
    sin t for |cos t| >= c1.  On |x| < c0*w the boundary is exactly the two
    graphs, so local jets there equal the supplied series.
    """

    name = "graph_pair"
    order_cap = GRAPH_DEGREE_CAP

    def __init__(self, f_plus, f_minus, halfwidth=0.9, c0=0.5, c1=0.9):
        if len(f_plus) > GRAPH_DEGREE_CAP + 1 or len(f_minus) > GRAPH_DEGREE_CAP + 1:
            raise ConfigError("graph_pair series exceed the degree cap of 16")
        self.fp = np.array(f_plus, dtype=float)
        self.fm = np.array(f_minus, dtype=float)
        self.w, self.c0, self.c1 = float(halfwidth), float(c0), float(c1)
        xs = np.linspace(-self.w, self.w, 401)
        if np.any(np.polyval(self.fp[::-1], xs) <= np.polyval(self.fm[::-1], xs)):
            raise NonSimpleCurve("graph_pair requires f+ > f- on [-halfwidth, halfwidth]")

    @staticmethod
    def _poly(coeffs, x: Taylor):
        out = Taylor.constant(0.0, x.order, x.c.shape[1:])
        for c in coeffs[::-1]:
            out = out * x + c
        return out

    def xy(self, t):
        s, c = t.sincos()
        x = c * self.w
        m = (self._poly(self.fp, x) + self._poly(self.fm, x)) * 0.5
        d = (self._poly(self.fp, x) - self._poly(self.fm, x)) * 0.5
        sgn = np.sign(s.c[0])
        sgn_c = np.where(c.c[0] < 0, -1.0, 1.0)
        u_raw = (self.c1 - np.abs(c.c[0])) / (self.c1 - self.c0)
        inside = (u_raw > 0) & (u_raw < 1)
        # blend weight is only evaluated where it lies strictly in (0, 1)
        mid = _const_like(c.c, 0.5 * (self.c0 + self.c1))
        cabs = Taylor(np.where(inside, c.c * sgn_c, mid))
        wgt = _smooth_step((self.c1 - cabs) / (self.c1 - self.c0))
        weight = Taylor(np.where(inside, wgt.c, np.where(u_raw >= 1, _const_like(c.c, 1.0), 0.0)))
        S = weight * sgn + s * (1.0 - weight)
        return x, m + d * S

    def params(self):
        return {"f_plus": self.fp.tolist(), "f_minus": self.fm.tolist(), "halfwidth": self.w}


def _const_like(c, value):
    out = np.zeros_like(c)
    out[0] = value
    return out


def make_shape(spec: Dict) -> _RawShape:
    shape = spec.get("shape")
    p = list(spec.get("params", []))
    if shape == "circle":
        return _Circle(*(p or [1.0]))
    if shape == "ellipse":
        if len(p) != 2:
            raise ConfigError("ellipse needs params [a, b]")
        return _Ellipse(*p)
    if shape == "fourier":
        return _Fourier(spec.get("fourier_cos", [1.0]), spec.get("fourier_sin", []))
    if shape == "graph_pair":
        return _GraphPair(spec["f_plus"], spec["f_minus"], spec.get("halfwidth", 0.9))
    raise ConfigError(f"unknown shape {shape!r}")


# ---------------------------------------------------------------------------
# arclength curve

@dataclass(frozen=True)
class Frame:
    point: np.ndarray  # (..., 2)
    tangent: np.ndarray
    normal: np.ndarray
    curvature: np.ndarray


class BoundaryCurve:
    """Arclength-parametrized closed curve (immutable)."""

    def __init__(self, shape: _RawShape, reparam_tol: float = DEFAULT_REPARAM_TOL):
        self.shape = shape
        self.reparam_tol = float(reparam_tol)
        self._build_table()
        self._check_simple()

    # -- construction -----------------------------------------------------
    def _speed(self, t):
        X, Y = self.shape.xy(Taylor.variable(t, 1))
        return np.hypot(X.c[1], Y.c[1])

    def _build_table(self):
        n = 64
        while True:
            t = TWO_PI * np.arange(n) / n
            sp = self._speed(t)
            coef = np.fft.rfft(sp) / n
            tail = np.max(np.abs(coef[-max(4, n // 16):]))
            if tail < 1e-3 * self.reparam_tol * abs(coef[0]):
                break
            n *= 2
            if n > 2 ** 17:
                raise ToleranceNotMet("arclength table did not converge")
        self._nfft = n
        self._coef = coef
        self.total_length = float(TWO_PI * coef[0].real)
        self._tgrid = np.linspace(0.0, TWO_PI, 4 * n + 1)
        self._sgrid = self._s_of_t(self._tgrid)

    def _s_of_t(self, t):
        t = np.asarray(t, dtype=float)
        m = np.arange(1, len(self._coef))
        w = np.where(m == self._nfft // 2, 1.0, 2.0) if self._nfft % 2 == 0 else 2.0
        c = self._coef[1:] * w
        ph = np.multiply.outer(t, m)
        # periodic part of the integral of sum c_m e^{imt}
        per = np.real((np.exp(1j * ph) - 1.0) @ (c / (1j * m)))
        return self._coef[0].real * t + per

    def param_of(self, phi):
        """Raw parameter t with arclength s(t) = phi (mod perimeter)."""
        phi = np.asarray(phi, dtype=float)
        P = self.total_length
        wraps = np.floor(phi / P)
        red = phi - wraps * P
        t = np.interp(red, self._sgrid, self._tgrid)
        for _ in range(30):
            err = self._s_of_t(t) - red
            t = t - err / self._speed(t)
            if np.all(np.abs(err) < 1e-3 * self.reparam_tol):
                break
        else:
            if np.max(np.abs(err)) > self.reparam_tol:
                raise ToleranceNotMet("arclength inversion did not converge")
        return t + TWO_PI * wraps

    def _check_simple(self, n=512):
        t = TWO_PI * np.arange(n) / n
        X, Y = self.shape.xy(Taylor.variable(t, 0))
        p = np.stack([X.c[0], Y.c[0]], axis=-1)
        q = np.roll(p, -1, axis=0)
        d = q - p
        cross = lambda a, b: a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]
        A, B = p[:, None], p[None, :]
        dA, dB = d[:, None], d[None, :]
        den = cross(dA, dB)
        with np.errstate(divide="ignore", invalid="ignore"):
            ua = cross(B - A, dB) / den
            ub = cross(B - A, dA) / den
        idx = np.arange(n)
        gap = np.abs(idx[:, None] - idx[None, :])
        gap = np.minimum(gap, n - gap)
        hit = (gap > 1) & (np.abs(den) > 0) & (ua > 0) & (ua < 1) & (ub > 0) & (ub < 1)
        if np.any(hit):
            raise NonSimpleCurve("curve self-intersects on the sample grid")
        area = 0.5 * np.sum(cross(p, q))
        if area <= 0:
            raise NonSimpleCurve("curve must be traversed counter-clockwise")

    # -- evaluation -------------------------------------------------------
    def raw_jets(self, t, order):
        if order > self.shape.order_cap:
            raise OrderUnavailable(f"order {order} exceeds {self.shape.order_cap} for {self.shape.name}")
        return self.shape.xy(Taylor.variable(t, order))

    def derivatives(self, phi, order):
        """Arclength derivatives q^(j)(phi), j = 0..order, shape (order+1, ..., 2)."""
        t = self.param_of(phi)
        X, Y = self.raw_jets(t, order)
        # arclength as series in u: s(t+u) - s(t) = int_0^u |q'|
        dX = _deriv_series(X)
        dY = _deriv_series(Y)
        speed = (dX * dX + dY * dY).sqrt()
        sarc = _integrate_series(speed)
        u = sarc.revert()
        Xs, Ys = X.compose(u) - X.c[0], Y.compose(u) - Y.c[0]
        out = np.stack([Xs.derivatives(), Ys.derivatives()], axis=-1)
        out[0, ..., 0] = X.c[0]
        out[0, ..., 1] = Y.c[0]
        return out

    def eval_frame(self, phi) -> Frame:
        t = self.param_of(phi)
        X, Y = self.raw_jets(t, 2)
        x1, y1 = X.c[1], Y.c[1]
        x2, y2 = 2.0 * X.c[2], 2.0 * Y.c[2]
        sp = np.hypot(x1, y1)
        T = np.stack([x1 / sp, y1 / sp], axis=-1)
        nu = np.stack([-T[..., 1], T[..., 0]], axis=-1)
        kappa = (x1 * y2 - y1 * x2) / sp ** 3
        return Frame(np.stack([X.c[0], Y.c[0]], axis=-1), T, nu, kappa)

    def point(self, phi):
        return self.eval_frame(phi).point

    def boundary_jets(self, phi0, order):
        """Taylor jet f^(0..order)(0) of the boundary as a graph over the tangent line.

        Abscissa runs along the tangent (direction of increasing arclength),
        ordinate along the inward normal.
        """
        order = int(order)
        if order < 2:
            raise OrderUnavailable("jets need order >= 2")
        t0 = float(self.param_of(phi0))
        X, Y = self.raw_jets(t0, order)
        fr = self.eval_frame(phi0)
        T, nu = fr.tangent, fr.normal
        dx, dy = X - X.c[0], Y - Y.c[0]
        xi = dx * T[0] + dy * T[1]
        eta = dx * nu[0] + dy * nu[1]
        f = eta.compose(xi.revert())
        jets = f.derivatives()
        jets[0] = 0.0
        jets[1] = 0.0
        return jets

    def perimeter(self):
        return self.total_length

    def spec(self) -> Dict:
        d = {"shape": self.shape.name, "reparam_tol": self.reparam_tol}
        d.update(self.shape.params())
        return d

    def is_convex(self, n=1024):
        k = self.eval_frame(np.linspace(0, self.total_length, n, endpoint=False)).curvature
        return bool(np.all(k > 0))

    def __repr__(self):
        return f"BoundaryCurve({self.spec()!r}, length={self.total_length:.12g})"


def _deriv_series(s: Taylor) -> Taylor:
    n = s.order
    c = np.zeros_like(s.c)
    j = np.arange(1, n + 1).reshape((-1,) + (1,) * (s.c.ndim - 1))
    c[:n] = s.c[1:] * j
    return Taylor(c)


def _integrate_series(s: Taylor) -> Taylor:
    n = s.order
    c = np.zeros_like(s.c)
    j = np.arange(1, n + 1).reshape((-1,) + (1,) * (s.c.ndim - 1))
    c[1:] = s.c[:n] / j
    return Taylor(c)


def arclength_reparametrize(raw_curve_spec, reparam_tol: Optional[float] = None) -> BoundaryCurve:
    """Build a :class:`BoundaryCurve` from a spec dict or re-tabulate an existing curve."""
    if isinstance(raw_curve_spec, BoundaryCurve):
        tol = reparam_tol if reparam_tol is not None else raw_curve_spec.reparam_tol
        return BoundaryCurve(raw_curve_spec.shape, tol)
    spec = dict(raw_curve_spec)
    tol = reparam_tol if reparam_tol is not None else spec.get("reparam_tol", DEFAULT_REPARAM_TOL)
    return BoundaryCurve(make_shape(spec), tol)


def circle(radius=1.0, reparam_tol=DEFAULT_REPARAM_TOL):
    return BoundaryCurve(_Circle(radius), reparam_tol)


def ellipse(a, b, reparam_tol=DEFAULT_REPARAM_TOL):
    return BoundaryCurve(_Ellipse(a, b), reparam_tol)


def fourier(cos_coeffs, sin_coeffs=(), reparam_tol=DEFAULT_REPARAM_TOL):
    return BoundaryCurve(_Fourier(cos_coeffs, sin_coeffs), reparam_tol)


def graph_pair(f_plus, f_minus, halfwidth=0.9, reparam_tol=DEFAULT_REPARAM_TOL):
    return BoundaryCurve(_GraphPair(f_plus, f_minus, halfwidth), reparam_tol)


def eval_frame(curve: BoundaryCurve, phi) -> Frame:
    return curve.eval_frame(phi)


def boundary_jets(curve: BoundaryCurve, phi0, order) -> np.ndarray:
    return curve.boundary_jets(phi0, order)
