"""Regularized resolvent traces.

Fourier convention, used everywhere in the package::

    rho(zeta) = int rho_hat(t) exp(i zeta t) dt

``rho_hat`` is a smooth plateau bump around a target length, so ``rho`` is
entire and decays faster than any power on horizontal lines.

Boundary-integral trace terms come from the logarithmic derivative of the
Fredholm determinant of ``I + N``:

    T_M(k) = (i / 2 pi) int rho(k - mu) ((-1)^(M+1) / M) d/dkappa Tr N(kappa)^M dmu,
    kappa = mu + i s,  s = tau log k  (held fixed over the mu-integral),

whose sum over M reproduces ``sum_j rho(k + i s - lambda_j)`` over the
Dirichlet eigenvalues.  ``d/dkappa Tr N^M = M Tr(N^(M-1) dN)``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import special

from .errors import DegenerateOrbit, IllConditionedFit, ResolutionError, TruncationError, WindowNotIsolated
from .layers import _Grid, _grid, assemble, bump
from .specfun import bessel_zeros_upto

M_CAP = 8
# rho(x) < 1e-15 * rho(0) once eps * |x| exceeds this
_DECAY_RADIUS = 1600.0


@dataclass(frozen=True)
class TraceWindow:
    """Window rho_hat(t) = bump((t - L_center)/epsilon): 1 within epsilon/2 of the centre, 0 beyond epsilon."""

    L_center: float
    epsilon: float
    tau: float = 0.0
    scaling: str = "logarithmic"

    def __post_init__(self):
        if self.epsilon <= 0 or self.L_center <= 0:
            raise ValueError("L_center and epsilon must be positive")
        if self.L_center - self.epsilon <= 0:
            raise ValueError("support of rho_hat must lie in t > 0")
        if self.tau < 0:
            raise ValueError("tau must be non-negative")
        if self.scaling not in ("constant", "logarithmic"):
            raise ValueError(f"unknown scaling {self.scaling!r}")

    @property
    def support(self) -> Tuple[float, float]:
        return (self.L_center - self.epsilon, self.L_center + self.epsilon)

    def rho_hat(self, t):
        return bump((np.asarray(t, float) - self.L_center) / self.epsilon)

    def shift(self, k) -> float:
        """Imaginary part s of the spectral parameter k + i s."""
        if self.scaling == "constant":
            return self.tau
        return self.tau * math.log(k)

    def t_grid(self, max_freq: float, refine: int = 1):
        a, b = self.support
        n = int(math.ceil((b - a) * (abs(max_freq) + _DECAY_RADIUS / self.epsilon) / (2 * np.pi)))
        n = 64 * int(math.ceil(n / 64)) * refine
        h = (b - a) / n
        t = a + h * (np.arange(n) + 0.5)
        return t, h

    def rho(self, zeta, refine: int = 1):
        zeta = np.asarray(zeta, dtype=complex)
        flat = zeta.ravel()
        mx = float(np.max(np.abs(flat.real))) if flat.size else 0.0
        t, h = self.t_grid(mx, refine)
        w = self.rho_hat(t) * h
        out = np.empty(flat.shape, dtype=complex)
        for i0 in range(0, flat.size, 2048):
            z = flat[i0 : i0 + 2048]
            out[i0 : i0 + 2048] = np.exp(1j * np.outer(z, t)) @ w
        return out.reshape(zeta.shape)


@dataclass(frozen=True)
class CombinedWindow:
    """Linear combination sum c_i rho_hat_i of windows (used for linearity checks)."""

    terms: Tuple[Tuple[complex, TraceWindow], ...]

    @property
    def tau(self):
        return self.terms[0][1].tau

    @property
    def epsilon(self):
        return min(w.epsilon for _, w in self.terms)

    @property
    def support(self):
        return (min(w.support[0] for _, w in self.terms), max(w.support[1] for _, w in self.terms))

    def shift(self, k):
        return self.terms[0][1].shift(k)

    def rho(self, zeta, refine: int = 1):
        return sum(c * w.rho(zeta, refine) for c, w in self.terms)


def rho(window, zeta, refine: int = 1):
    return window.rho(zeta, refine)


# ---------------------------------------------------------------------------
# isolation

def check_isolation(window, lengths: Sequence[float], target: Optional[float] = None, tol: float = 1e-9):
    """Raise WindowNotIsolated unless ``target`` is the only length in the support.

    With ``target`` None the window must contain exactly one distinct length.
    """
    a, b = window.support
    inside = sorted({round(float(L), 9) for L in lengths if a < L < b})
    if target is None:
        if len(inside) != 1:
            raise WindowNotIsolated(f"window ({a}, {b}) contains lengths {inside}")
        return inside[0]
    others = [L for L in inside if abs(L - target) > tol]
    if others:
        raise WindowNotIsolated(f"window ({a}, {b}) also contains lengths {others}")
    if not any(abs(L - target) <= tol for L in inside):
        raise WindowNotIsolated(f"target length {target} is not inside ({a}, {b})")
    return target


# ---------------------------------------------------------------------------
# disc oracle

def spectral_trace_disc(window, k: float, lambda_max: float, radius: float = 1.0, refine: int = 1) -> complex:
    """sum_j mult_j rho(k + i s - lambda_j) over Dirichlet eigenvalues of the disc up to lambda_max."""
    if lambda_max < k + 10.0 / window.epsilon:
        raise TruncationError(f"lambda_max {lambda_max} below k + 10/epsilon")
    lam, mult = bessel_zeros_upto(float(lambda_max * radius))
    lam = lam / radius
    s = window.shift(k)
    zeta = complex(k, s) - lam
    return complex(np.sum(mult * window.rho(zeta, refine)))


def demodulate(k, value, L, tau, scaling="logarithmic"):
    """value * e^{-ikL} * k^{tau L}; for constant scaling the damping is e^{tau L}."""
    k = np.asarray(k, float)
    damp = k ** (tau * L) if scaling == "logarithmic" else np.exp(tau * L) * np.ones_like(k)
    return np.asarray(value) * np.exp(-1j * k * L) * damp


# ---------------------------------------------------------------------------
# boundary-integral trace terms

def _mu_nodes(k, h_mu, halfwidth):
    m = int(math.ceil(halfwidth / h_mu))
    return k + h_mu * np.arange(-m, m + 1)


def _patch_weights(g: _Grid, vertices, halfwidth):
    w = np.zeros(g.n)
    for v in vertices:
        d = (g.phi - v + g.P / 2) % g.P - g.P / 2
        w = np.maximum(w, bump(d / halfwidth))
    return w


def _orbit_cross_geometry(g: _Grid, A, B, wa, wb):
    """Distances and the product of both link cosines for pairs (i in A, j in B)."""
    d = g.pts[B][None, :, :] - g.pts[A][:, None, :]
    r = np.hypot(d[..., 0], d[..., 1])
    cos_ab = np.sum(d * g.nu[B][None, :, :], axis=-1) / r  # normal at the column point
    cos_ba = -np.sum(d * g.nu[A][:, None, :], axis=-1) / r
    h = g.P / g.n
    return r, wa[:, None] * wb[None, :] * cos_ab * cos_ba * h * h


def bem_trace_term(curve, window, k: float, M: int, mode: str = "full", vertices: Optional[Sequence[float]] = None,
                   n_nodes: Optional[int] = None, mu_halfwidth: float = 40.0, h_mu: Optional[float] = None,
                   patch_halfwidth: float = 1.0) -> complex:
    """M-th term of the boundary-integral trace expansion at k (+ i tau log k).

    ``mode="full"`` uses the whole Nystrom matrices (Tr N^(M-1) dN).
    ``mode="orbit"`` (M = 2 only) keeps the cross terms between smooth
    patches around the two ``vertices`` of a bouncing-ball orbit; this is
    the orbit's localized contribution and costs O(n_patch^2) per mu node.

    The mu-integral is a trapezoid rule with step ``h_mu`` over
    k +- mu_halfwidth.  The rule is exact up to aliasing: a length t in the
    integrand leaks into the window only if t + 2 pi j / h_mu lies in the
    window support for some j != 0.  The default 2 pi/12 keeps the lengths
    0, 4 and 8 clear of a [2, 6] window.
    """
    if not 0 <= M <= M_CAP:
        raise ValueError(f"M must lie in [0, {M_CAP}]")
    if M == 0:
        # Tr N^0 = n does not depend on kappa
        return 0j
    s = window.shift(k)
    h_mu = h_mu or 2 * np.pi / 12
    mus = _mu_nodes(k, h_mu, mu_halfwidth)
    ppw = 6.0 if mode == "orbit" else 8.0
    n = n_nodes or 2 * int(math.ceil(ppw * mus.max() * curve.total_length / (4 * np.pi)))
    if n % 2:
        n += 1
    if n < 6.0 * mus.max() * curve.total_length / (2 * np.pi) - 1:
        raise ResolutionError("node count does not resolve the largest mu")
    g = _grid(curve, n)
    rw = window.rho(k - mus)
    sign = (-1) ** (M + 1) / M
    acc = 0j
    if mode == "full":
        for mu, wt in zip(mus, rw):
            kap = complex(mu, s)
            N = assemble(curve, kap, n, "N", check=False).matrix
            dN = assemble(curve, kap, n, "dN", check=False).matrix
            P = np.eye(n, dtype=complex)
            for _ in range(M - 1):
                P = P @ N
            acc += wt * M * np.sum(P * dN.T)
    elif mode == "orbit":
        if M != 2 or vertices is None or len(vertices) != 2:
            raise ValueError("orbit mode needs M = 2 and two vertices")
        psi = _patch_weights(g, [vertices[0]], patch_halfwidth)
        chi = _patch_weights(g, [vertices[1]], patch_halfwidth)
        A = np.nonzero(psi > 0)[0]
        B = np.nonzero(chi > 0)[0]
        if np.intersect1d(A, B).size:
            raise ValueError("patches overlap")
        r, wc = _orbit_cross_geometry(g, A, B, psi[A], chi[B])
        for mu, wt in zip(mus, rw):
            kap = complex(mu, s)
            z = kap * r
            # N_ij dN_ji + dN_ij N_ji over both cross blocks
            t = 2.0 * np.sum(wc * (-0.5j * kap * special.hankel1(1, z)) * (-0.5j * z * special.hankel1(0, z)))
            acc += wt * M * t
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return complex(1j / (2 * np.pi) * sign * h_mu * acc)


# ---------------------------------------------------------------------------
# expansion fit

@dataclass
class ExpansionFit:
    L: float
    tau: float
    J: int
    j0: int
    B: np.ndarray
    covariance_proxy: np.ndarray
    residual: float
    condition: float

    def to_json(self):
        return {
            "L": self.L,
            "tau": self.tau,
            "J": self.J,
            "first_power": self.j0,
            "B": [[complex(b).real, complex(b).imag] for b in self.B],
            "residual": self.residual,
            "condition": self.condition,
        }


def fit_expansion(samples, L: float, tau: float, J: int, j0: int = 0, orbit=None, scaling: str = "logarithmic",
                  max_condition: float = 1e10) -> ExpansionFit:
    """Least-squares fit of demodulated samples to sum_{j=j0}^{j0+J-1} B_j k^{-j}.

    ``orbit`` (a PeriodicOrbit) is checked first: degenerate orbit families
    have a different k-power and are refused.
    """
    if orbit is not None and getattr(orbit, "stability", None) == "degenerate":
        raise DegenerateOrbit("expansion assumes a non-degenerate orbit", orbit)
    ks = np.array([float(s[0]) for s in samples])
    vals = np.array([complex(s[1]) for s in samples])
    if len(ks) < 2 * J + 2:
        raise IllConditionedFit(f"need at least {2 * J + 2} samples, got {len(ks)}")
    if ks.max() < 2 * ks.min() * (1 - 1e-12):
        raise IllConditionedFit("samples must span at least one octave in k")
    d = demodulate(ks, vals, L, tau, scaling)
    kref = float(np.exp(np.mean(np.log(ks))))
    A = np.stack([(ks / kref) ** (-(j0 + j)) for j in range(J)], axis=1).astype(complex)
    cond = float(np.linalg.cond(A))
    if not np.isfinite(cond) or cond > max_condition:
        raise IllConditionedFit(f"design matrix condition {cond:.3e}")
    coef, *_ = np.linalg.lstsq(A, d, rcond=None)
    res = d - A @ coef
    rel = float(np.linalg.norm(res) / max(np.linalg.norm(d), 1e-300))
    dof = max(len(ks) - J, 1)
    sigma2 = float(np.sum(np.abs(res) ** 2) / dof)
    cov = sigma2 * np.linalg.inv(A.conj().T @ A)
    scale = np.array([kref ** (j0 + j) for j in range(J)])
    return ExpansionFit(L, tau, J, j0, coef * scale, cov * np.outer(scale, scale), rel, cond)


# ---------------------------------------------------------------------------
# outputs

def scan_csv(rows, L, tau, scaling="logarithmic") -> str:
    """CSV text with columns k, re_trace, im_trace, demod_re, demod_im."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "re_trace", "im_trace", "demod_re", "demod_im"])
    for k, v in rows:
        d = complex(demodulate(k, v, L, tau, scaling))
        w.writerow([_g17(k), _g17(complex(v).real), _g17(complex(v).imag), _g17(d.real), _g17(d.imag)])
    return buf.getvalue()


def _g17(x) -> str:
    return format(float(x), ".17g")
