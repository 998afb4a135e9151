"""Boundary integral operators, layer potentials and Neumann-series experiments.

Conventions
-----------
* ``G0(x, y) = (i/4) H0(kappa |x - y|)``, ``kappa = k + i*Im``.
* ``N(q, q') = 2 d/dnu_{q'} G0(q, q') = -(i kappa/2) H1(kappa r) (q' - q).nu' / r``
  with ``nu`` the inward normal; on the diagonal it tends to ``curvature/(2 pi)``.
* The double layer ``Dl f(x) = int dG0(x, q)/dnu_q f(q) ds`` has interior
  boundary value ``f/2 + N f / 2``.
* Dirichlet Green's function: ``G = G0 - 2 Dl (I + N)^{-1} G0(., y)``.

Nystrom matrices use the Kress logarithmic split on an equispaced
arclength grid.  ``N`` and its kappa-derivative ``dN`` are assembled with
the same weights so that traces of products are consistent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import special

from .errors import ResolutionError, SolveFailure, TargetTooClose
from .geometry import BoundaryCurve
from .specfun import _kappa, free_green, free_green_normal_derivative

EULER_GAMMA = 0.5772156649015329
DEFAULT_DELTA = 0.75
NODES_PER_WAVELENGTH_RULE = 8.0


# ---------------------------------------------------------------------------
# cutoff profile

def smooth_step(u):
    """C-infinity step: 0 for u <= 0, 1 for u >= 1."""
    u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.where(u > 0, np.exp(-1.0 / np.where(u > 0, u, 1.0)), 0.0)
        b = np.where(u < 1, np.exp(-1.0 / np.where(u < 1, 1.0 - u, 1.0)), 0.0)
    return a / (a + b)


def bump(x):
    """Even plateau bump: 1 on |x| <= 1/2, 0 on |x| >= 1, smooth in between."""
    return smooth_step(2.0 * (1.0 - np.abs(np.asarray(x, dtype=float))))


@dataclass(frozen=True)
class CutoffSpec:
    delta: float = DEFAULT_DELTA

    def __post_init__(self):
        if not 0.5 < self.delta < 1.0:
            raise ValueError("delta must lie strictly between 1/2 and 1")

    def chi(self, x):
        return bump(x)


# ---------------------------------------------------------------------------
# kernel

_TAYLOR_GAP, _TAYLOR_ORDER = 1e-2, 12


def n_kernel(curve: BoundaryCurve, sp, phi, phi2):
    """N(q(phi), q(phi2)); the diagonal value is curvature/(2 pi)."""
    kap = _kappa(sp)
    phi, phi2 = np.broadcast_arrays(np.asarray(phi, float), np.asarray(phi2, float))
    f1 = curve.eval_frame(phi)
    f2 = curve.eval_frame(phi2)
    d = f2.point - f1.point
    dn = np.asarray(np.sum(d * f2.normal, axis=-1))
    P = curve.total_length
    gap = (phi2 - phi + 0.5 * P) % P - 0.5 * P
    near = (np.abs(gap) < _TAYLOR_GAP) & (gap != 0)
    if np.any(near):
        # q - q' by Taylor series about phi2: the plain difference loses ~eps/gap^2 in d.nu'
        g = -gap[near]
        D = curve.derivatives(phi2[near], _TAYLOR_ORDER)
        nu = f2.normal[near]
        dd = np.zeros_like(D[0])
        dnn = np.zeros(g.shape)
        for j in range(_TAYLOR_ORDER, 0, -1):
            c = g ** j / math.factorial(j)
            dd -= D[j] * c[..., None]
            if j >= 2:
                dnn -= np.sum(D[j] * nu, axis=-1) * c
        d[near] = dd
        dn[near] = dnn
    r = np.hypot(d[..., 0], d[..., 1])
    diag = r < 1e-300
    rs = np.where(diag, 1.0, r)
    cos = dn / rs
    val = -0.5j * kap * special.hankel1(1, kap * rs) * cos
    return np.where(diag, f1.curvature / (2 * np.pi) + 0j, val)


def n_kernel_small_gap(curve: BoundaryCurve, phi, gap):
    """Two-term small-gap series of N at fixed phi (kappa-independent leading part).

    Uses (q' - q).nu' = -gap^2 kappa/2 - gap^3 kappa'/3 + O(gap^4) and
    r = |gap| (1 - kappa^2 gap^2/24): N ~ kappa/(2 pi) + gap kappa'/(3 pi).
    """
    D = curve.derivatives(phi, 3)
    fr = curve.eval_frame(phi)
    # kappa' from q''' . nu = kappa'
    kp = float(D[3] @ fr.normal)
    return fr.curvature / (2 * np.pi) + gap * kp / (3 * np.pi)


@dataclass
class BoundaryOperator:
    nodes: np.ndarray
    weights: np.ndarray
    matrix: np.ndarray
    sp: object
    kind: str
    curve: BoundaryCurve = field(repr=False, default=None)

    @property
    def n(self):
        return len(self.nodes)

    def apply(self, f):
        return self.matrix @ f


class _Grid:
    """Geometry of an equispaced arclength grid; pair matrices are built on first use."""

    def __init__(self, curve: BoundaryCurve, n: int):
        self.curve = curve
        self.n = n
        self.P = curve.total_length
        self.phi = self.P * np.arange(n) / n
        fr = curve.eval_frame(self.phi)
        self.pts, self.T, self.nu, self.kap = fr.point, fr.tangent, fr.normal, fr.curvature
        self.scale = self.P / (2 * np.pi)
        self._pairs = None

    def _build_pairs(self):
        n = self.n
        d = self.pts[None, :, :] - self.pts[:, None, :]
        r = np.hypot(d[..., 0], d[..., 1])
        np.fill_diagonal(r, 1.0)
        cos_n = np.sum(d * self.nu[None, :, :], axis=-1) / r  # (q_j - q_i).nu_j / r
        m = np.arange(n)
        dt = 2 * np.pi * m / n
        with np.errstate(divide="ignore"):
            logs = np.log(4.0 * np.sin(dt / 2) ** 2)
        logs[0] = 0.0
        idx = (m[None, :] - m[:, None]) % n
        self._pairs = (r, cos_n, logs[idx], _kress_weights(n)[idx])

    @property
    def r(self):
        if self._pairs is None:
            self._build_pairs()
        return self._pairs[0]

    @property
    def cos_n(self):
        if self._pairs is None:
            self._build_pairs()
        return self._pairs[1]

    @property
    def logmat(self):
        if self._pairs is None:
            self._build_pairs()
        return self._pairs[2]

    @property
    def kress(self):
        if self._pairs is None:
            self._build_pairs()
        return self._pairs[3]


_GRID_CACHE = {}


def _grid(curve, n):
    key = (id(curve), n)
    hit = _GRID_CACHE.get(key)
    if hit is None or hit.curve is not curve:
        if len(_GRID_CACHE) > 4:
            _GRID_CACHE.clear()
        hit = _Grid(curve, n)
        _GRID_CACHE[key] = hit
    return hit


def _kress_weights(n):
    """R(m): weights for int_0^{2pi} log(4 sin^2((t - s)/2)) f(s) ds at s = t - 2 pi m / n."""
    if n % 2:
        raise ResolutionError("Kress quadrature needs an even number of nodes")
    N = n // 2
    m = np.arange(n)
    l = np.arange(1, N)
    ang = 2 * np.pi * np.outer(m, l) / n
    return -(2 * np.pi / N) * (np.cos(ang) @ (1.0 / l)) - (np.pi / N ** 2) * np.cos(np.pi * m)


def _check_resolution(curve, k, n):
    need = NODES_PER_WAVELENGTH_RULE * k * curve.total_length / (2 * np.pi)
    if n < need:
        raise ResolutionError(f"{n} nodes below the rule of thumb {need:.0f}")


def _n_parts(g: _Grid, kap, rows=slice(None), cols=slice(None), derivative=False):
    r = g.r[rows, cols]
    cos = g.cos_n[rows, cols]
    z = kap * r
    if not derivative:
        K = -0.5j * kap * special.hankel1(1, z) * cos
        K1 = (kap / (2 * np.pi)) * special.jv(1, z) * cos
    else:
        K = -0.5j * z * special.hankel1(0, z) * cos
        K1 = (1.0 / (2 * np.pi)) * z * special.jv(0, z) * cos
    return K * g.scale, K1 * g.scale


def _log_part_cutoff(g: _Grid, kap):
    """Localize the logarithmic part where J_n(kappa r) grows like e^{Im kappa r}.

    Plateau for r Im(kappa) <= 3, zero beyond 6; flat at r = 0, so the
    split stays smooth.  A no-op for nearly real kappa.
    """
    im = abs(complex(kap).imag)
    if im * g.r.max() <= 3.0:
        return None
    r = g.r.copy()
    np.fill_diagonal(r, 0.0)
    return bump(r * im / 6.0)


def _assemble_n(g: _Grid, kap, derivative=False):
    n = g.n
    K, K1 = _n_parts(g, kap, derivative=derivative)
    cut = _log_part_cutoff(g, kap)
    if cut is not None:
        K1 = K1 * cut
    K2 = K - K1 * g.logmat
    diag = np.zeros(n, dtype=complex) if derivative else g.kap / (2 * np.pi) * g.scale + 0j
    np.fill_diagonal(K2, diag)
    np.fill_diagonal(K1, 0.0)
    return g.kress * K1 + (2 * np.pi / n) * K2


def _assemble_s(g: _Grid, kap):
    n = g.n
    z = kap * g.r
    K = 0.25j * special.hankel1(0, z) * g.scale
    K1 = -(1.0 / (4 * np.pi)) * special.jv(0, z) * g.scale
    cut = _log_part_cutoff(g, kap)
    if cut is not None:
        K1 = K1 * cut
    K2 = K - K1 * g.logmat
    d = (0.25j - (1 / (2 * np.pi)) * (np.log(kap / 2) + EULER_GAMMA + np.log(g.scale))) * g.scale
    np.fill_diagonal(K2, d)
    np.fill_diagonal(K1, -(1.0 / (4 * np.pi)) * g.scale)
    return g.kress * K1 + (2 * np.pi / n) * K2


def assemble(curve: BoundaryCurve, sp, n_nodes: int, kind: str = "N", cutoff: Optional[CutoffSpec] = None, check=True) -> BoundaryOperator:
    """Nystrom matrix of N, dN/dkappa ("dN"), S, or the cutoff pieces N0/N1."""
    kap = _kappa(sp)
    if check:
        _check_resolution(curve, kap.real, n_nodes)
    g = _grid(curve, n_nodes)
    if kind in ("N", "N0", "N1"):
        mat = _assemble_n(g, kap)
    elif kind == "dN":
        mat = _assemble_n(g, kap, derivative=True)
    elif kind == "S":
        mat = _assemble_s(g, kap)
    else:
        raise ValueError(f"unknown kind {kind!r}")
    op = BoundaryOperator(g.phi.copy(), np.full(n_nodes, g.P / n_nodes), mat, sp, "N" if kind in ("N0", "N1") else kind, curve)
    if kind in ("N0", "N1"):
        n0, n1 = split(op, cutoff or CutoffSpec())
        return n0 if kind == "N0" else n1
    return op


def split(Nop: BoundaryOperator, cutoff: CutoffSpec):
    """N0 = chi(k^{1-delta}|q - q'|) N and N1 = N - N0, entrywise."""
    if Nop.kind != "N":
        raise ValueError("split needs an N operator")
    g = _grid(Nop.curve, Nop.n)
    k = _kappa(Nop.sp).real
    r = g.r.copy()
    np.fill_diagonal(r, 0.0)
    w = cutoff.chi(k ** (1.0 - cutoff.delta) * r)
    n0 = Nop.matrix * w
    n1 = Nop.matrix - n0
    mk = lambda m, kind: BoundaryOperator(Nop.nodes, Nop.weights, m, Nop.sp, kind, Nop.curve)
    return mk(n0, "N0"), mk(n1, "N1")


def n1_wkb(curve, sp, phi, phi2):
    """Leading WKB form of N at separated points: k^{1/2} * amplitude * e^{i kappa r}."""
    kap = _kappa(sp)
    f1, f2 = curve.eval_frame(phi), curve.eval_frame(phi2)
    d = f2.point - f1.point
    r = float(np.hypot(*d))
    cos = float(d @ f2.normal) / r
    amp = -0.5j * np.sqrt(2 / (np.pi * r)) * np.exp(-0.75j * np.pi) * np.sqrt(kap / abs(kap)) * cos
    return np.sqrt(abs(kap)) * amp * np.exp(1j * kap * r)


# ---------------------------------------------------------------------------
# disc oracles

def disc_eigenvalue(n, kappa, radius=1.0):
    """Eigenvalue of N on e^{in theta} for the disc of the given radius."""
    z = complex(kappa) * radius
    return 1.0 - 1j * np.pi * z * special.hankel1(n, z) * special.jvp(n, z)


def disc_eigenvalue_quadrature(n, kappa, radius=1.0):
    """Fourier coefficient of the disc kernel by adaptive quadrature (independent of Bessel algebra)."""
    from scipy.integrate import quad

    kap = complex(kappa)

    def kern(th):
        # q = R(1, 0), q' = R(cos th, sin th); (q'-q).nu' / r = -r/(2R)
        r = 2 * radius * abs(math.sin(th / 2))
        if r == 0:
            return 1.0 / (2 * np.pi * radius)
        return -0.5j * kap * special.hankel1(1, kap * r) * (-r / (2 * radius))

    def part(fn):
        re = quad(lambda t: (fn(t)).real, 0, 2 * np.pi, limit=400, epsabs=1e-13, epsrel=1e-13, points=[np.pi])[0]
        im = quad(lambda t: (fn(t)).imag, 0, 2 * np.pi, limit=400, epsabs=1e-13, epsrel=1e-13, points=[np.pi])[0]
        return re + 1j * im

    return part(lambda t: kern(t) * np.exp(1j * n * t) * radius)


# ---------------------------------------------------------------------------
# layer potentials and Green's function

def layer_eval(curve: BoundaryCurve, sp, density, targets, kind: str = "double"):
    density = np.asarray(density)
    n = density.shape[0]
    g = _grid(curve, n)
    X = np.atleast_2d(np.asarray(targets, dtype=float))
    d = g.pts[None, :, :] - X[:, None, :]
    dist = np.hypot(d[..., 0], d[..., 1])
    if np.min(dist) <= g.P / n:
        raise TargetTooClose("target closer to the boundary than one node spacing")
    w = g.P / n
    if kind == "single":
        K = free_green(sp, X[:, None, :], g.pts[None, :, :])
    elif kind == "double":
        K = free_green_normal_derivative(sp, X[:, None, :], g.pts[None, :, :], g.nu[None, :, :])
    else:
        raise ValueError(f"unknown kind {kind!r}")
    return (K * w) @ density


def _dirichlet_density(curve, sp, y, n, method, M0):
    g = _grid(curve, n)
    N = assemble(curve, sp, n, "N", check=False).matrix
    rhs = -2.0 * free_green(sp, g.pts, np.asarray(y, float)[None, :])
    if method == "direct_solve":
        A = np.eye(n) + N
        cond = np.linalg.cond(A)
        if cond > 1e12:
            raise SolveFailure(f"I + N is ill-conditioned (cond {cond:.2e})")
        return np.linalg.solve(A, rhs)
    if method == "neumann_series":
        out = rhs.copy()
        term = rhs.copy()
        for _ in range(M0):
            term = -(N @ term)
            out = out + term
        return out
    raise ValueError(f"unknown method {method!r}")


def dirichlet_green(curve: BoundaryCurve, sp, x, y, method="direct_solve", M0=12, n_nodes=None):
    kap = _kappa(sp)
    n = n_nodes or _default_nodes(curve, kap.real)
    mu = _dirichlet_density(curve, sp, y, n, method, M0)
    x = np.atleast_2d(np.asarray(x, float))
    g0 = free_green(sp, x, np.asarray(y, float)[None, :])
    return g0 + layer_eval(curve, sp, mu, x, "double")


def dirichlet_green_on_boundary(curve, sp, y, n_nodes=None, method="direct_solve", M0=12):
    """Boundary trace of the Dirichlet Green's function (should vanish)."""
    kap = _kappa(sp)
    n = n_nodes or _default_nodes(curve, kap.real)
    g = _grid(curve, n)
    mu = _dirichlet_density(curve, sp, y, n, method, M0)
    N = assemble(curve, sp, n, "N", check=False).matrix
    g0 = free_green(sp, g.pts, np.asarray(y, float)[None, :])
    return g0 + 0.5 * mu + 0.5 * (N @ mu)


def disc_dirichlet_green_modal(kappa, x, y, n_terms=None):
    """Unit-disc Dirichlet Green's function by the Graf modal series."""
    kap = complex(kappa)
    x, y = np.asarray(x, float), np.asarray(y, float)
    rx, ry = np.hypot(*x), np.hypot(*y)
    th = math.atan2(x[1], x[0]) - math.atan2(y[1], y[0])
    rmax, rmin = max(rx, ry), min(rx, ry)
    nt = n_terms or int(2 * abs(kap) + 40)
    tot = 0j
    for m in range(-nt, nt + 1):
        free = special.hankel1(m, kap * rmax) * special.jv(m, kap * rmin)
        refl = special.hankel1(m, kap) * special.jv(m, kap * rx) * special.jv(m, kap * ry) / special.jv(m, kap)
        tot += (free - refl) * np.exp(1j * m * th)
    return 0.25j * tot


def graf_free_green(kappa, x, y, n_terms):
    kap = complex(kappa)
    x, y = np.asarray(x, float), np.asarray(y, float)
    rx, ry = np.hypot(*x), np.hypot(*y)
    th = math.atan2(x[1], x[0]) - math.atan2(y[1], y[0])
    m = np.arange(-n_terms, n_terms + 1)
    return 0.25j * np.sum(special.hankel1(m, kap * max(rx, ry)) * special.jv(m, kap * min(rx, ry)) * np.exp(1j * m * th))


def _default_nodes(curve, k):
    n = int(math.ceil(NODES_PER_WAVELENGTH_RULE * k * curve.total_length / (2 * np.pi)))
    n = max(n, 64)
    return n + (n % 2)


# ---------------------------------------------------------------------------
# boundary return operator

@dataclass(frozen=True)
class InteriorCutoff:
    """Smooth window around the chord from q(phi_a) to q(phi_b).

    The window is a plateau bump across the chord (half-width ``width``) times
    a plateau bump along it that vanishes within ``end_margin`` of each end.
    """

    phi_a: float
    phi_b: float
    width: float
    end_margin: float = 0.15
    points_per_wavelength: float = 6.0


def boundary_return(curve: BoundaryCurve, sp, cutoff: Optional[InteriorCutoff], n_nodes: int, rows=None, cols=None) -> BoundaryOperator:
    """Matrix of S^tr chi Dl: entries int_Omega G0(q_i, x) chi(x) dG0(x, q_j)/dnu_j dx * w_j."""
    kap = _kappa(sp)
    g = _grid(curve, n_nodes)
    rows = np.arange(n_nodes) if rows is None else np.asarray(rows)
    cols = np.arange(n_nodes) if cols is None else np.asarray(cols)
    out = np.zeros((len(rows), len(cols)), dtype=complex)
    if cutoff is None:
        return BoundaryOperator(g.phi[rows], np.full(len(rows), g.P / n_nodes), out, sp, "R", curve)
    qa, qb = curve.point(cutoff.phi_a), curve.point(cutoff.phi_b)
    ell = float(np.hypot(*(qb - qa)))
    e = (qb - qa) / ell
    perp = np.array([-e[1], e[0]])
    wl = 2 * np.pi / kap.real
    h = wl / cutoff.points_per_wavelength
    s = np.arange(h / 2, ell, h)
    u = np.arange(-cutoff.width, cutoff.width + h / 2, h)
    S, U = np.meshgrid(s, u, indexing="ij")
    m = cutoff.end_margin
    along = smooth_step(S / m) * smooth_step((ell - S) / m)
    across = bump(U / cutoff.width)
    chi = (along * across).ravel()
    keep = chi > 0
    X = (qa[None, :] + S.ravel()[:, None] * e[None, :] + U.ravel()[:, None] * perp[None, :])[keep]
    wts = chi[keep] * h * h
    if ell / h > 4000:
        raise ResolutionError("interior grid too large")
    Gq = free_green(sp, g.pts[rows][:, None, :], X[None, :, :])
    Dq = free_green_normal_derivative(sp, X[None, :, :], g.pts[cols][:, None, :], g.nu[cols][:, None, :])
    out = (Gq * wts[None, :]) @ Dq.T * (g.P / n_nodes)
    return BoundaryOperator(g.phi[rows], np.full(len(rows), g.P / n_nodes), out, sp, "R", curve)


# ---------------------------------------------------------------------------
# tail decay

def orbit_window(curve: BoundaryCurve, n_nodes: int, vertices: Sequence[float], half_width: float, k: float, xi_fraction: float = 0.5):
    """Microlocal window near the reflection points and near-normal directions.

    Spatial plateau bumps around each vertex combined with a Fourier cutoff
    keeping tangential frequencies |xi| <= xi_fraction * k.  Returned as an
    n x n matrix W = X F^{-1} Xi F X (X spatial, Xi frequency).
    """
    g = _grid(curve, n_nodes)
    P = g.P
    x = np.zeros(n_nodes)
    for v in vertices:
        d = (g.phi - v + P / 2) % P - P / 2
        x = np.maximum(x, bump(d / half_width))
    freq = 2 * np.pi * np.fft.fftfreq(n_nodes, d=P / n_nodes)
    xi = bump(freq / (2 * xi_fraction * k))
    F = np.fft.fft(np.eye(n_nodes), axis=0)
    Finv = np.fft.ifft(np.eye(n_nodes), axis=0)
    mid = Finv @ (xi[:, None] * F)
    return x[:, None] * mid * x[None, :]


def tail_decay(curve: BoundaryCurve, k_list, M0_list, tau_list, vertices, half_width=0.5, n_nodes=None, n_mu=1, mu_halfwidth=0.0,
               part: str = "N", cutoff: Optional[CutoffSpec] = None):
    """Frobenius norms of W N^{M0} W at kappa = k + i tau log k.

    ``n_mu > 1`` averages the operator power over Gauss-Legendre nodes in
    [k - mu_halfwidth, k + mu_halfwidth] with weights of the plateau bump,
    a light-weight stand-in for the rho-smoothing.
    ``part="N1"`` uses only the off-diagonal piece of the cutoff split, so
    every factor is a genuine link (|sigma| = 0 in the damping law).
    Returns rows (k, tau, M0, frobenius_norm).
    """
    rows = []
    for k in k_list:
        n = n_nodes or _default_nodes(curve, k)
        W = orbit_window(curve, n, vertices, half_width, k)
        if n_mu > 1:
            x, w = np.polynomial.legendre.leggauss(n_mu)
            mus = k + mu_halfwidth * x
            wts = w * bump(0.5 * x)
            wts = wts / wts.sum()
        else:
            mus, wts = np.array([k]), np.array([1.0])
        for tau in tau_list:
            s = tau * math.log(k)
            acc = {M0: 0 for M0 in M0_list}
            for mu, wt in zip(mus, wts):
                if part == "N":
                    N = assemble(curve, complex(mu, s), n, "N", check=False).matrix
                elif part == "N1":
                    N = assemble(curve, complex(mu, s), n, "N1", cutoff=cutoff, check=False).matrix
                else:
                    raise ValueError(f"unknown part {part!r}")
                powers = {0: W @ W}
                cur = np.eye(n, dtype=complex)
                for M0 in range(1, max(M0_list) + 1):
                    cur = cur @ N
                    if M0 in M0_list:
                        powers[M0] = W @ cur @ W
                for M0 in M0_list:
                    acc[M0] = acc[M0] + wt * powers[M0]
            for M0 in M0_list:
                rows.append((float(k), float(tau), int(M0), float(np.linalg.norm(acc[M0]))))
    return rows


def fit_damping_constant(rows, L_gamma, M0_min=1):
    """Fit C in |W N^{M0} W|^2 ~ exp(-2 C tau log k M0 L_gamma) across tau at each (k, M0).

    Returns the mean fitted C and the per-(k, M0) values.
    """
    from collections import defaultdict

    groups = defaultdict(list)
    for k, tau, M0, nrm in rows:
        if M0 >= M0_min and nrm > 0:
            groups[(k, M0)].append((tau, nrm))
    per = {}
    for (k, M0), pts in groups.items():
        if len(pts) < 2:
            continue
        t = np.array([p[0] for p in pts])
        y = np.log(np.array([p[1] for p in pts]) ** 2)
        slope = np.polyfit(t, y, 1)[0]
        per[(k, M0)] = -slope / (2 * math.log(k) * M0 * L_gamma)
    if not per:
        raise ValueError("need at least two tau values per (k, M0)")
    return float(np.mean(list(per.values()))), per
