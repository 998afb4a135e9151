"""Stationary phase, Hankel-cutoff transforms and wave invariants of reflecting orbits.

Stationary-phase convention (isolated non-degenerate critical point x0)::

    int e^{i k Phi(x)} A(x; k) dx
        ~ e^{i k Phi(x0)} (2 pi / k)^{q/2} |det H|^{-1/2} e^{i pi sgn(H) / 4}
          * sum_j c_j k^{-j}

with ``A = sum_n A_n k^{-n}`` and ``c_j = sum_{i + n = j} L_i A_n``.  The
operators ``L_i`` are evaluated through Gaussian (Wick) moments with
covariance ``H^{-1}``::

    L_i a = sum_{nu - mu = i, 2 nu >= 3 mu} i^{-i} (-1)^nu / mu!
            * E[(g^mu a)_{degree 2 nu}],      g = Phi - Phi(x0) - x.Hx/2.

Orbit integrals.  Near a periodic orbit with vertices ``Q_p`` the trace of
``N^M`` is an M-fold integral over abscissas ``x_p`` along the vertex
tangents, ``P_p(x) = Q_p + x T_p + f_p(x) nu_p`` (``f_p`` the boundary
jet).  Each link contributes

    -(i kappa/2) H1(kappa r) (P_{p+1} - P_p).n_{p+1} / r,   n = nu - f' T,

(the arclength element cancels the normal's length), and the WKB form of
H1 turns this into ``e^{-5 i pi/4} sqrt(kappa / 2 pi) r^{-1/2} e^{i kappa r}
(...) sum_n a_n (kappa r)^{-n}``.
"""

from __future__ import annotations

import cmath
import csv
import io
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, special

from .billiards import PeriodicOrbit, degen_tol, length_hessian
from .errors import DegenerateAngle, DegenerateHessian, DegenerateOrbit, JetOrderUnavailable, RegimeError
from .geometry import BoundaryCurve
from .jets import Poly
from .layers import bump
from .specfun import wkb_coefficients

LINK_PHASE = cmath.exp(-1.25j * math.pi)


# ---------------------------------------------------------------------------
# stationary phase engine

@dataclass
class OscillatoryIntegralJet:
    """Jets of phase and amplitude at an isolated critical point (the origin).

    ``phase`` is a Poly (value, zero gradient, Hessian, higher terms);
    ``amp`` lists Polys ``A_n`` for the amplitude ``sum_n A_n k^{-n}``.
    """

    dim: int
    phase: Poly
    amp: List[Poly]
    codim: int
    critical_value: float
    labels: Tuple[str, ...] = ()

    @property
    def order(self) -> int:
        return self.phase.deg

    def gradient(self) -> np.ndarray:
        g = np.zeros(self.dim, dtype=complex)
        for m, v in self.phase.homogeneous(1).items():
            g[m.index(1)] = v
        return g

    def hessian(self) -> np.ndarray:
        H = np.zeros((self.dim, self.dim), dtype=complex)
        for m, v in self.phase.homogeneous(2).items():
            idx = [i for i, e in enumerate(m) for _ in range(e)]
            i, j = idx
            if i == j:
                H[i, i] = 2 * v
            else:
                H[i, j] = H[j, i] = v
        return H


def _gaussian_moment_table(C: np.ndarray, deg: int) -> Dict[Tuple[int, ...], complex]:
    """E[x^alpha] for a centred Gaussian with covariance C (formal if C is indefinite)."""
    n = C.shape[0]
    q = Poly(n, deg, {})
    for i in range(n):
        for j in range(n):
            e = [0] * n
            e[i] += 1
            e[j] += 1
            q = q + Poly(n, deg, {tuple(e): 0.5 * C[i, j]})
    ex = q.apply_series([1.0 / math.factorial(m) for m in range(deg + 1)])
    out = {}
    for m, v in ex.terms.items():
        out[m] = v * math.prod(math.factorial(e) for e in m)
    return out


def _expect(p: Poly, d: int, moments) -> complex:
    return sum(v * moments.get(m, 0.0) for m, v in p.homogeneous(d).items())


def _split_phase(phase: Poly):
    """Constant, Hessian part and the cubic-and-higher remainder g."""
    rest = Poly(phase.nvar, phase.deg, {m: v for m, v in phase.terms.items() if sum(m) >= 3})
    return phase.constant_term(), rest


def _signature(H: np.ndarray) -> int:
    ev = np.linalg.eigvalsh(H.real)
    return int(np.sum(ev > 0) - np.sum(ev < 0))


def stationary_phase_coefficients(jet: OscillatoryIntegralJet, R: int):
    """c_0..c_R (prefactor not included), plus |det H|, sgn H."""
    if R < 0:
        raise ValueError("R must be >= 0")
    if jet.phase.deg < 2 * R + 2 or any(a.deg < 2 * R for a in jet.amp):
        raise JetOrderUnavailable(f"order {R} needs phase jets to {2 * R + 2} and amplitude jets to {2 * R}")
    if np.max(np.abs(jet.gradient())) > 1e-8 * max(1.0, abs(jet.critical_value)):
        raise ValueError("phase gradient does not vanish at the expansion point")
    H = jet.hessian()
    if np.max(np.abs(H.imag)) > 1e-12 * max(1.0, np.max(np.abs(H.real))):
        raise ValueError("complex Hessian is not supported")
    H = H.real
    detH = float(np.linalg.det(H))
    if abs(detH) < degen_tol(H):
        raise DegenerateHessian(f"|det H| = {abs(detH):.3e}")
    Cov = np.linalg.inv(H)
    _, g = _split_phase(jet.phase)
    deg = 6 * R + 2 if R else 2
    moments = _gaussian_moment_table(Cov, max(deg, 2))
    n = jet.dim
    g = Poly(n, max(deg, 3), g.terms)
    gpow = [Poly.const(n, g.deg, 1.0)]
    for mu in range(1, 2 * R + 1):
        gpow.append(gpow[-1] * g)
    coeffs = []
    for j in range(R + 1):
        total = 0j
        for nidx in range(min(j, len(jet.amp) - 1) + 1):
            i = j - nidx
            a = jet.amp[nidx]
            for mu in range(0, 2 * i + 1):
                nu = i + mu
                if 2 * nu < 3 * mu:
                    continue
                prod = a if mu == 0 else _mul_upto(gpow[mu], a, 2 * nu)
                total += (1j) ** (-i) * (-1) ** nu / math.factorial(mu) * _expect(prod, 2 * nu, moments)
        coeffs.append(total)
    return coeffs, abs(detH), _signature(H)


def _mul_upto(p: Poly, q: Poly, d: int) -> Poly:
    """Degree-d part of p*q without truncating at either operand's degree."""
    out: Dict = {}
    for m1, v1 in p.terms.items():
        s1 = sum(m1)
        if s1 > d:
            continue
        for m2, v2 in q.terms.items():
            if s1 + sum(m2) != d:
                continue
            m = tuple(a + b for a, b in zip(m1, m2))
            out[m] = out.get(m, 0) + v1 * v2
    return Poly(p.nvar, d, out)


@dataclass
class StationaryPhaseResult:
    coefficients: List[complex]
    prefactor: complex
    terms: List[complex]
    value: complex
    det_h: float
    signature: int


def stationary_phase(jet: OscillatoryIntegralJet, k, R: int) -> StationaryPhaseResult:
    """Expansion through order R; ``terms[j] = prefactor * c_j`` and value = e^{ik Phi0} sum_j terms[j] k^{-j}."""
    c, det_abs, sgn = stationary_phase_coefficients(jet, R)
    k = complex(k)
    q = jet.codim
    pref = (2 * np.pi / k) ** (q / 2) * det_abs ** -0.5 * cmath.exp(1j * np.pi * sgn / 4)
    terms = [pref * cj for cj in c]
    val = cmath.exp(1j * k * jet.critical_value) * sum(t * k ** (-j) for j, t in enumerate(terms))
    return StationaryPhaseResult(c, pref, terms, val, det_abs, sgn)


# ---------------------------------------------------------------------------
# orbit integrals

@dataclass
class VertexJet:
    point: np.ndarray
    tangent: np.ndarray
    normal: np.ndarray
    f: np.ndarray  # Taylor coefficients f^(j)(0)/j! of the boundary graph over the tangent


def vertex_jets(curve: BoundaryCurve, config, order: int) -> List[VertexJet]:
    out = []
    fact = np.array([math.factorial(j) for j in range(order + 1)], float)
    for phi in config:
        fr = curve.eval_frame(float(phi))
        jets = curve.boundary_jets(float(phi), order)
        out.append(VertexJet(np.asarray(fr.point, float), np.asarray(fr.tangent, float), np.asarray(fr.normal, float), jets / fact))
    return out


def _vertex_position(v: VertexJet, nvar, deg, i):
    x = Poly.var(nvar, deg, i)
    f = Poly.univariate(nvar, deg, i, v.f)
    return [v.point[c] + x * v.tangent[c] + f * v.normal[c] for c in range(2)]


def _vertex_normal(v: VertexJet, nvar, deg, i):
    """Unnormalized normal nu - f' T (its length cancels the arclength element)."""
    fp = Poly.univariate(nvar, deg, i, [j * v.f[j] for j in range(1, len(v.f))])
    return [Poly.const(nvar, deg, v.normal[c]) - fp * v.tangent[c] for c in range(2)]


def orbit_phase_amplitude(verts: Sequence[VertexJet], deg: int, n_wkb: int):
    """Phase sum_p r_p and amplitude coefficients Pi_n (kappa^{-n} parts, kappa^{M/2} and constants stripped)."""
    M = len(verts)
    pos = [_vertex_position(v, M, deg, i) for i, v in enumerate(verts)]
    nrm = [_vertex_normal(v, M, deg, i) for i, v in enumerate(verts)]
    wkb = wkb_coefficients(1, n_wkb + 1)
    phase = Poly.const(M, deg, 0.0)
    amp = [Poly.const(M, deg, 1.0)] + [Poly.const(M, deg, 0.0)] * n_wkb
    for p in range(M):
        q = (p + 1) % M
        d = [pos[q][c] - pos[p][c] for c in range(2)]
        r2 = d[0] * d[0] + d[1] * d[1]
        r = r2.sqrt()
        phase = phase + r
        cosf = (d[0] * nrm[q][0] + d[1] * nrm[q][1]) / r
        base = cosf * r.pow(-0.5)
        rinv = r.pow(-1.0)
        link = []
        rp = Poly.const(M, deg, 1.0)
        for n in range(n_wkb + 1):
            link.append(base * rp * wkb[n])
            rp = rp * rinv
        new = []
        for n in range(n_wkb + 1):
            acc = Poly.const(M, deg, 0.0)
            for a in range(n + 1):
                acc = acc + amp[a] * link[n - a]
            new.append(acc)
        amp = new
    return phase, amp


def _cyclic_shift_count(config, P) -> int:
    """Number of distinct cyclic shifts of the vertex list (m for an r-fold iterate of an m-gon)."""
    M = len(config)
    c = np.mod(np.asarray(config, float), P)
    for m in range(1, M + 1):
        if M % m == 0:
            d = np.abs(np.roll(c, -m) - c)
            if np.all(np.minimum(d, P - d) < 1e-8 * P):
                return m
    return M


def _is_reverse_a_shift(config, P) -> bool:
    c = np.mod(np.asarray(config, float), P)
    rev = c[::-1]
    for s in range(len(c)):
        d = np.abs(np.roll(rev, s) - c)
        if np.all(np.minimum(d, P - d) < 1e-8 * P):
            return True
    return False


def _check_orbit(curve, orbit: PeriodicOrbit):
    if orbit.stability == "degenerate" or abs(orbit.det_h) < degen_tol(orbit.hessian):
        raise DegenerateOrbit("wave invariants need a non-degenerate orbit", orbit)


def _branch_coefficients(curve, config, R, jet_order=None):
    """Stationary-phase data of Tr N^M at one critical configuration.

    Returns (L, |det H|, sgn H, d_0..d_R) with
    Tr N^M ~ e^{i kappa L} e^{-5 i pi M/4} |det H|^{-1/2} e^{i pi sgn/4} sum_j d_j kappa^{-j}.
    """
    deg = jet_order or 2 * R + 2
    verts = vertex_jets(curve, config, deg)
    phase, amp = orbit_phase_amplitude(verts, deg, R)
    jet = OscillatoryIntegralJet(len(config), phase, [a.truncate(2 * R) for a in amp], len(config), float(phase.constant_term().real))
    c, det_abs, sgn = stationary_phase_coefficients(jet, R)
    return jet.critical_value, det_abs, sgn, c


def invariants_from_branches(branches, M, S, J):
    """B_0..B_{J-1}: coefficients of kappa^{-j} in the demodulated trace of the M-th term."""
    sign = (-1) ** (M + 1) / M
    B = np.zeros(J, dtype=complex)
    for L, det_abs, sgn, d in branches:
        pre = 1j * sign * S * LINK_PHASE ** M * det_abs ** -0.5 * cmath.exp(1j * np.pi * sgn / 4)
        for j in range(J):
            B[j] += pre * (1j * L * d[j] - ((j - 1) * d[j - 1] if j >= 1 else 0.0))
    return B


@dataclass
class WaveInvariantTable:
    orbit_id: str
    r: int
    entries: List[Tuple[int, complex]]
    metadata: Dict = field(default_factory=dict)

    @property
    def B(self) -> np.ndarray:
        return np.array([v for _, v in self.entries])

    def normalized(self) -> np.ndarray:
        return normalized_invariants(self.B)

    def to_json(self):
        return {
            "orbit": self.orbit_id,
            "r": self.r,
            "entries": [{"j": j, "re": complex(v).real, "im": complex(v).imag} for j, v in self.entries],
            "metadata": self.metadata,
        }


def wave_invariants(curve: BoundaryCurve, orbit: PeriodicOrbit, r: int, J: int, tau: float = 0.0, delta: float = 0.75,
                    window=None, jet_order: Optional[int] = None) -> WaveInvariantTable:
    """Coefficients B_j (j = 0..J-1, leading first) of the principal term M = r m.

    The demodulated trace term behaves like sum_j B_j kappa^{-j}, kappa =
    k + i tau log k.  Orbit and time-reversed orbit are summed; when the
    reversal is a cyclic shift (bouncing balls) it is counted once.
    """
    _check_orbit(curve, orbit)
    if J < 1:
        raise ValueError("J >= 1 required")
    if window is not None:
        a, b = window.support
        if not a < r * orbit.length < b:
            raise ValueError("r L is outside the window support")
    P = curve.total_length
    cfg = np.tile(orbit.config, r)
    M = len(cfg)
    S = _cyclic_shift_count(cfg, P)
    R = J - 1
    branches = [_branch_coefficients(curve, cfg, R, jet_order)]
    if not _is_reverse_a_shift(cfg, P):
        branches.append(_branch_coefficients(curve, cfg[::-1].copy(), R, jet_order))
    B = invariants_from_branches(branches, M, S, J)
    oid = "orbit(" + ",".join(f"{float(v):.6f}" for v in orbit.config) + ")"
    meta = {"tau": tau, "delta": delta, "M": M, "shifts": S, "branches": len(branches), "length": float(orbit.length)}
    return WaveInvariantTable(oid, r, [(j, complex(B[j])) for j in range(J)], meta)


def normalized_invariants(B) -> np.ndarray:
    """beta_0 = log B_0 and beta_{j-1} = N_j [kappa^{-(j-1)}] log(sum B_m kappa^{-m}) for j >= 2.

    N_j = i^{j-1} (-1)^{j+1} 2^{j-1} j! makes the linear coefficient of
    f^{(2j)} at a normal-incidence vertex p equal to (h^{pp})^j.
    """
    B = np.asarray(B, dtype=complex)
    J = len(B)
    # log of the series 1 + sum_{m>=1} (B_m/B_0) x^m
    u = B / B[0]
    lg = np.zeros(J, dtype=complex)
    for n in range(1, J):
        s = sum(m * lg[m] * u[n - m] for m in range(1, n))
        lg[n] = u[n] - s / n
    out = np.zeros(J, dtype=complex)
    out[0] = np.log(B[0])
    for j in range(2, J + 1):
        Nj = (1j) ** (j - 1) * (-1) ** (j + 1) * 2 ** (j - 1) * math.factorial(j)
        out[j - 1] = Nj * lg[j - 1]
    return out


def build_orbit_integral(curve: BoundaryCurve, orbit: PeriodicOrbit, r: int, window=None, R: int = 1) -> OscillatoryIntegralJet:
    """Jet of the (t, mu, x_1..x_M) integral for the r-fold orbit, M = r m.

    Phase ``(1 - mu) t + mu L(x)`` in shifted variables (t - rL, mu - 1, x);
    amplitude ``(i L(x) + d/dkappa)`` applied to the WKB product, written as
    a series in k^{-1} with kappa = k mu.  The overall factor
    ``(i k/2 pi) ((-1)^{M+1}/M) e^{-5 i pi M/4} (k/2 pi)^{M/2}`` is recorded
    in ``labels`` bookkeeping only; ``rho_hat`` is taken as 1 (plateau).
    """
    _check_orbit(curve, orbit)
    cfg = np.tile(orbit.config, r)
    M = len(cfg)
    deg = 2 * R + 2
    if window is not None:
        a, b = window.support
        if not a < r * orbit.length < b:
            raise ValueError("r L is outside the window support")
    verts = vertex_jets(curve, cfg, deg)
    phase_x, amp_x = orbit_phase_amplitude(verts, deg, R)
    n = M + 2
    L0 = float(phase_x.constant_term().real)
    lift = lambda p: Poly(n, deg, {(0, 0) + m: v for m, v in p.terms.items()})
    tt = Poly.var(n, deg, 0)
    mm = Poly.var(n, deg, 1)
    Lx = lift(phase_x)
    # (1 - mu) t + mu L  with t = L0 + tt, mu = 1 + mm
    phase = Lx + mm * (Lx - L0) - mm * tt
    half = M / 2.0
    amps = []
    for j in range(R + 1):
        mpow = (1 + mm).pow(half - j)
        a = lift(amp_x[j]) * Lx * 1j * mpow
        if j >= 1:
            a = a + lift(amp_x[j - 1]) * (half - j + 1) * mpow
        amps.append(a.truncate(2 * R))
    labels = ("t", "mu") + tuple(f"x{p}" for p in range(M))
    return OscillatoryIntegralJet(n, phase, amps, n, L0, labels)


def invariants_via_time_integral(curve, orbit, r, J) -> np.ndarray:
    """Same B_j as wave_invariants, from stationary phase in all M + 2 variables."""
    _check_orbit(curve, orbit)
    P = curve.total_length
    cfg = np.tile(orbit.config, r)
    M = len(cfg)
    S = _cyclic_shift_count(cfg, P)
    sign = (-1) ** (M + 1) / M
    total = np.zeros(J, dtype=complex)
    orbits = [orbit]
    if not _is_reverse_a_shift(cfg, P):
        rev = PeriodicOrbit(**{**orbit.__dict__})
        rev.config = orbit.config[::-1].copy()
        orbits.append(rev)
    for o in orbits:
        jet = build_orbit_integral(curve, o, r, None, J - 1)
        c, det_abs, sgn = stationary_phase_coefficients(jet, J - 1)
        pre = 1j * sign * S * LINK_PHASE ** M * det_abs ** -0.5 * cmath.exp(1j * np.pi * sgn / 4)
        total += pre * np.asarray(c)
    return total


# ---------------------------------------------------------------------------
# Hankel-cutoff transforms

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(32)


def _panel_integral(fn, a, b, width=0.5):
    n = max(1, int(math.ceil((b - a) / width)))
    edges = np.linspace(a, b, n + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])[:, None]
    half = 0.5 * (edges[1:] - edges[:-1])[:, None]
    x = (mid + half * _GL_NODES[None, :]).ravel()
    w = (half * _GL_WEIGHTS[None, :]).ravel()
    return np.sum(w * fn(x))


def _quad_complex(fn, a, b):
    re = integrate.quad(lambda x: fn(x).real, a, b, limit=200, epsabs=1e-14, epsrel=1e-13)[0]
    im = integrate.quad(lambda x: fn(x).imag, a, b, limit=200, epsabs=1e-14, epsrel=1e-13)[0]
    return re + 1j * im


@dataclass
class HankelTransformResult:
    numeric: complex
    closed_form: complex
    residual: float


def hankel_closed_form(a, b, r=0.0):
    """int_0^inf H0(b sqrt(r^2 + u^2)) cos(a u) du = e^{i r w}/w, w = sqrt(b^2 - a^2) (principal branch)."""
    w = np.sqrt(complex(b) ** 2 - a * a)
    return np.exp(1j * r * w) / w


def hankel_closed_form_literal_offset(a, b, r):
    """Literal offset closed form -i e^{-i r w}/w, kept for comparison reports."""
    w = np.sqrt(complex(b) ** 2 - a * a)
    return -1j * np.exp(-1j * r * w) / w


def hankel_cutoff_transform(a: float, b: complex, k: float, delta: float, variant: str = "flat", r: float = 0.0,
                            C: float = 1.0) -> HankelTransformResult:
    """Numerically evaluate int_0^inf chi(k^{-delta} x) cos(a x) H0(b x) dx (flat) or with H0(b sqrt(r^2 + x^2)) (offset).

    chi is the plateau bump (1 on [0, 1/2], 0 beyond 1), so the integral
    runs over [0, k^delta].
    """
    b = complex(b)
    if not -1 < a < 1 or b.real < 1 or b.imag <= 0:
        raise RegimeError("need a in (-1, 1), Re b >= 1, Im b > 0")
    if not 0.5 < delta < 1:
        raise RegimeError("delta must lie in (1/2, 1)")
    if abs(a - b) < C * k ** (-1 + delta):
        raise RegimeError(f"|a - b| = {abs(a - b):.3g} below C k^(delta-1) = {C * k ** (-1 + delta):.3g}")
    X = k ** delta
    chi = lambda x: bump(np.asarray(x) / X)
    if variant == "flat":
        head = _quad_complex(lambda x: np.cos(a * x) * special.hankel1(0, b * x), 0.0, 1.0)
        fn = lambda x: chi(x) * np.cos(a * x) * special.hankel1(0, b * x)
        val = head + _panel_integral(fn, 1.0, X)
        cf = hankel_closed_form(a, b)
    elif variant == "offset":
        if r <= 0:
            raise RegimeError("offset variant needs r > 0")
        fn = lambda x: chi(x) * np.cos(a * x) * special.hankel1(0, b * np.sqrt(r * r + np.asarray(x) ** 2))
        val = _panel_integral(fn, 0.0, X)
        cf = hankel_closed_form(a, b, r)
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return HankelTransformResult(complex(val), complex(cf), float(abs(val - cf)))


# ---------------------------------------------------------------------------
# explicit formula and coefficient extraction

READINGS = ("cos_over_2", "cos_of_half")


def _alpha_denominator(alpha, reading):
    if reading == "cos_over_2":
        return 2.0 - 2.0 * math.cos(alpha) / 2.0
    if reading == "cos_of_half":
        return 2.0 - 2.0 * math.cos(alpha / 2.0)
    raise ValueError(f"reading must be one of {READINGS}")


def wtf_eval(r, j, h11, h1q, alpha, f3, f2j, f2jm1, reading: Optional[str] = None) -> float:
    """Literal evaluation of the bouncing-ball formula for B_{r, j-1} + B_{-r, j-1}.

    The denominator of the f''' f^(2j-1) term is ambiguous; pass
    ``reading`` ("cos_over_2": 2 - cos(alpha), "cos_of_half": 2 - 2 cos(alpha/2))
    whenever that term is non-zero.
    """
    if not 0.0 < alpha < 2 * math.pi:
        raise DegenerateAngle("alpha must lie in (0, 2 pi)")
    if len(h1q) != 2 * r:
        raise ValueError("h1q needs 2r entries")
    lead = 2.0 * h11 ** j * f2j
    cross = f3 * f2jm1
    if cross == 0:
        return r * lead
    if reading is None:
        raise ValueError("the f''' term needs an explicit denominator reading")
    den = _alpha_denominator(alpha, reading)
    if abs(den) < 1e-14:
        raise DegenerateAngle("vanishing denominator")
    tail = h11 ** (j - 2) * sum(h ** 3 for h in h1q)
    return r * (lead + (2.0 * h11 ** j / den + tail) * cross)


def _vertex_phi(curve: BoundaryCurve, point):
    from scipy.optimize import minimize_scalar

    P = curve.total_length
    grid = np.linspace(0, P, 257)
    d = np.linalg.norm(curve.point(grid) - np.asarray(point, float)[None, :], axis=1)
    i = int(np.argmin(d))
    res = minimize_scalar(lambda p: float(np.hypot(*(curve.point(p) - np.asarray(point, float)))),
                          bounds=(grid[max(i - 1, 0)], grid[min(i + 1, 256)]), method="bounded", options={"xatol": 1e-14})
    return float(res.x)


def bouncing_ball_on_axis(curve: BoundaryCurve, top=(0.0, None), bottom=(0.0, None)) -> PeriodicOrbit:
    """Bouncing ball through the boundary points on the y-axis (graph-pair domains)."""
    from .billiards import find_periodic_orbit

    P = curve.total_length
    ys = curve.point(np.linspace(0, P, 2049))
    near = np.abs(ys[:, 0]) < 0.02
    ytop = float(np.max(ys[near, 1])) if top[1] is None else top[1]
    ybot = float(np.min(ys[near, 1])) if bottom[1] is None else bottom[1]
    seed = [_vertex_phi(curve, (0.0, ytop)), _vertex_phi(curve, (0.0, ybot))]
    orb = find_periodic_orbit(curve, 2, seeds=seed)
    for phi, x0 in zip(orb.config, (0.0, 0.0)):
        if abs(curve.point(phi)[0] - x0) > 1e-8:
            raise DegenerateOrbit("Newton left the symmetry axis", orb)
    return orb


def _graph_domain(f_plus, f_minus):
    from .geometry import graph_pair

    return graph_pair(list(f_plus), list(f_minus))


def _inward_perturbation(f_plus, f_minus, n, d_top, d_bottom):
    """Raw graph coefficients after changing the n-th inward-normal jets by d_top / d_bottom.

    Top vertex: tangent (-1, 0), inward ordinate 1 - y, so the inward jet is
    -(-1)^n f_+^(n); bottom: tangent (1, 0), inward jet f_-^(n).
    """
    fp = list(f_plus) + [0.0] * max(0, n + 1 - len(f_plus))
    fm = list(f_minus) + [0.0] * max(0, n + 1 - len(f_minus))
    fact = math.factorial(n)
    fp[n] += -((-1) ** n) * d_top / fact
    fm[n] += d_bottom / fact
    return fp, fm


def normalized_invariant(f_plus, f_minus, r, j) -> complex:
    """beta_{j-1} of the axis bouncing ball of the graph-pair domain."""
    curve = _graph_domain(f_plus, f_minus)
    orb = bouncing_ball_on_axis(curve)
    return complex(normalized_invariants(wave_invariants(curve, orb, r, j).B)[j - 1])


def _fd4(fn, step):
    """Fourth-order central first derivative and a curvature indicator."""
    fpp, fp, f0, fm, fmm = fn(2 * step), fn(step), fn(0.0), fn(-step), fn(-2 * step)
    d1 = (-fpp + 8 * fp - 8 * fm + fmm) / (12 * step)
    d2 = (fp - 2 * f0 + fm) / step ** 2
    return d1, d2


@dataclass
class ThmSumCoefficients:
    a_plus: complex
    a_minus: complex
    b_plus: complex
    b_minus: complex
    nonlinearity: float
    h11: float


def thm_sum_v_extract(f_plus, f_minus, r: int, j: int, step: float = 1e-4) -> ThmSumCoefficients:
    """Linear coefficients of beta_{j-1} in the top jets f_pm^(2j), f_pm^(2j-1) at the axis bouncing ball.

    Jets are taken in the inward-normal convention at each vertex (the
    convention in which both vertices of a mirror-symmetric domain carry
    equal jets).  ``nonlinearity`` is the largest second difference seen.
    """
    if j < 1:
        raise ValueError("j >= 1")
    out = {}
    curv = 0.0
    for name, n, top in (("a_plus", 2 * j, True), ("a_minus", 2 * j, False), ("b_plus", 2 * j - 1, True), ("b_minus", 2 * j - 1, False)):
        if n < 2:
            out[name] = 0j  # f' is fixed by criticality of the orbit
            continue

        def beta(d):
            fp, fm = _inward_perturbation(f_plus, f_minus, n, d if top else 0.0, 0.0 if top else d)
            return normalized_invariant(fp, fm, r, j)

        d1, d2 = _fd4(beta, step)
        out[name] = d1
        curv = max(curv, abs(d2))
    curve = _graph_domain(f_plus, f_minus)
    orb = bouncing_ball_on_axis(curve)
    Hinv = np.linalg.inv(length_hessian(curve, np.tile(orb.config, r))[0])
    return ThmSumCoefficients(out["a_plus"], out["a_minus"], out["b_plus"], out["b_minus"], curv, float(Hinv[0, 0]))


def symmetric_jet_coefficient(f_plus, f_minus, r: int, j: int, step: float = 1e-4):
    """d beta_{j-1} / d f^(2j) with both vertices' inward jets moved together; returns (value, 2 r (h^11)^j)."""
    def beta(d):
        fp, fm = _inward_perturbation(f_plus, f_minus, 2 * j, d, d)
        return normalized_invariant(fp, fm, r, j)

    d1, _ = _fd4(beta, step)
    curve = _graph_domain(f_plus, f_minus)
    orb = bouncing_ball_on_axis(curve)
    Hinv = np.linalg.inv(length_hessian(curve, np.tile(orb.config, r))[0])
    return d1, 2 * r * Hinv[0, 0] ** j


@dataclass
class AlphaReadingReport:
    r: int
    j: int
    alpha: float
    measured: complex
    readings: Dict[str, float]
    matches: List[str]
    rel_tol: float

    def to_json(self):
        return {
            "r": self.r,
            "j": self.j,
            "alpha": self.alpha,
            "measured": [complex(self.measured).real, complex(self.measured).imag],
            "readings": self.readings,
            "matches": self.matches,
            "rel_tol": self.rel_tol,
        }


def alpha_reading_report(f_plus, f_minus, r: int = 1, j: int = 2, step: float = 1e-2, rel_tol: float = 1e-3) -> AlphaReadingReport:
    """Measure the f''' f^(2j-1) coefficient of beta_{j-1} and compare with both denominator readings.

    Odd jets are moved so the domain stays up-down symmetric (f_- = -f_+):
    in the inward convention the bottom vertex gets the opposite sign.  For
    j = 2 the coefficient is half the second derivative in f'''; for j > 2
    it is the mixed derivative in (f''', f^(2j-1)).
    """
    def beta(d3, dodd):
        fp, fm = _inward_perturbation(f_plus, f_minus, 3, d3, -d3)
        if j > 2:
            fp, fm = _inward_perturbation(fp, fm, 2 * j - 1, dodd, -dodd)
        return normalized_invariant(fp, fm, r, j)

    h = step
    if j == 2:
        measured = (beta(h, 0) - 2 * beta(0, 0) + beta(-h, 0)) / (2 * h * h)
    elif j > 2:
        measured = (beta(h, h) - beta(h, -h) - beta(-h, h) + beta(-h, -h)) / (4 * h * h)
    else:
        raise ValueError("the f''' term needs j >= 2")
    curve = _graph_domain(f_plus, f_minus)
    orb = bouncing_ball_on_axis(curve)
    Hinv = np.linalg.inv(length_hessian(curve, np.tile(orb.config, r))[0])
    h11 = float(Hinv[0, 0])
    h1q = [float(Hinv[0, q]) for q in range(2 * r)]
    alpha = float(orb.elliptic_angle) if orb.elliptic_angle is not None else float("nan")
    readings = {}
    for name in READINGS:
        for label, a in (("", alpha), ("_iterate_angle", r * alpha % (2 * math.pi))):
            try:
                readings[name + label] = wtf_eval(r, j, h11, h1q, a, 1.0, 0.0, 1.0, reading=name)
            except DegenerateAngle:
                readings[name + label] = float("nan")
    matches = [k for k, v in readings.items() if abs(v - measured.real) <= rel_tol * max(abs(measured), 1e-300)]
    return AlphaReadingReport(r, j, alpha, complex(measured), readings, matches, rel_tol)


def comparison_csv(rows) -> str:
    """CSV with columns j, r, pipeline, wtf, trace_fit, rel_err (17 significant digits)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["j", "r", "pipeline", "wtf", "trace_fit", "rel_err"])
    for row in rows:
        w.writerow([row["j"], row["r"]] + [format(float(row[c]), ".17g") if row.get(c) is not None else "" for c in ("pipeline", "wtf", "trace_fit", "rel_err")])
    return buf.getvalue()
