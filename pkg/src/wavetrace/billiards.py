"""Billiard dynamics: length functional, Snell polygons, monodromy, length spectrum.

Phase space coordinates are ``(phi, p)`` with ``phi`` the arclength of the
reflection point and ``p`` the tangential component of the outgoing unit
velocity (``p = sin`` of the angle to the inward normal).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy.optimize import brentq, minimize

from .errors import (
    DegenerateOrbit,
    GrazingRay,
    NoConvergence,
    NoIntersection,
    NonConvexCurve,
    SingularConfig,
)
from .geometry import BoundaryCurve

GRAZING_GUARD = 1e-8
NEWTON_TOL = 1e-12
DEDUP_TOL = 1e-8
CROSS_TOL = 1e-6
MONODROMY_STEP = 1e-5


def collision_gap(curve: BoundaryCurve) -> float:
    return 1e-6 * curve.total_length


def _cyclic_gaps(curve, phis):
    P = curve.total_length
    red = np.mod(phis, P)
    d = np.abs(red - np.roll(red, -1))
    return np.minimum(d, P - d)


def _check(curve, config):
    phis = np.asarray(config, dtype=float)
    if phis.ndim != 1 or phis.size < 2:
        raise SingularConfig("a polygon needs at least two vertices")
    if np.min(_cyclic_gaps(curve, phis)) < collision_gap(curve):
        raise SingularConfig("consecutive vertices collide")
    return phis


def _edges(curve, phis):
    fr = curve.eval_frame(phis)
    d = np.roll(fr.point, -1, axis=0) - fr.point
    r = np.hypot(d[:, 0], d[:, 1])
    return fr, d / r[:, None], r


def length(curve: BoundaryCurve, config) -> float:
    """Closed polygon length (includes the edge from the last vertex back to the first)."""
    phis = _check(curve, config)
    return float(np.sum(_edges(curve, phis)[2]))


def length_gradient(curve: BoundaryCurve, config) -> np.ndarray:
    phis = _check(curve, config)
    fr, u, _ = _edges(curve, phis)
    T = fr.tangent
    incoming = np.roll(u, 1, axis=0)
    return np.sum(incoming * T, axis=1) - np.sum(u * T, axis=1)


def length_hessian(curve: BoundaryCurve, config) -> Tuple[np.ndarray, np.ndarray]:
    """Hessian of the closed length functional and the mixed partials b_j."""
    phis = _check(curve, config)
    M = phis.size
    fr, u, r = _edges(curve, phis)
    T, nu, kap = fr.tangent, fr.normal, fr.curvature
    H = np.zeros((M, M))
    b = np.zeros(M)
    for j in range(M):
        jn = (j + 1) % M
        uTj, uTn = u[j] @ T[j], u[j] @ T[jn]
        d_jj = (1.0 - uTj ** 2) / r[j] - kap[j] * (u[j] @ nu[j])
        d_nn = (1.0 - uTn ** 2) / r[j] + kap[jn] * (u[j] @ nu[jn])
        b[j] = (-(T[j] @ T[jn]) + uTj * uTn) / r[j]
        H[j, j] += d_jj
        H[jn, jn] += d_nn
        H[j, jn] += b[j]
        H[jn, j] += b[j]
    return H, b


def interior_length_gradient(curve: BoundaryCurve, x, phi_first, phi_last) -> np.ndarray:
    """Gradient in x of |x - q(phi_first)| + |x - q(phi_last)|.

    Vanishes exactly when x lies on the chord between the two points, which
    is how interior critical points are checked to sit on orbit links.
    """
    x = np.asarray(x, dtype=float)
    a = curve.point(phi_first)
    c = curve.point(phi_last)
    return (x - a) / np.linalg.norm(x - a) + (x - c) / np.linalg.norm(x - c)


def angle_extension_defect(curve: BoundaryCurve, phi, phi2) -> float:
    """cos angle(q(phi) - q(phi2), nu(phi)) + kappa(phi)|phi2 - phi| / 2, which is O(gap^2)."""
    fr = curve.eval_frame(phi)
    d = fr.point - curve.point(phi2)
    return float(d @ fr.normal / np.linalg.norm(d) + 0.5 * fr.curvature * abs(phi2 - phi))


# ---------------------------------------------------------------------------
# billiard map

@dataclass(frozen=True)
class BilliardState:
    phi: float
    p: float


class _Samples:
    def __init__(self, curve, n=1024):
        self.phi = np.linspace(0.0, curve.total_length, n, endpoint=False)
        self.pts = curve.point(self.phi)


_SAMPLE_CACHE = {}


def _samples(curve):
    key = id(curve)
    hit = _SAMPLE_CACHE.get(key)
    if hit is None or hit[0] is not curve:
        hit = (curve, _Samples(curve))
        _SAMPLE_CACHE[key] = hit
    return hit[1]


def billiard_map(curve: BoundaryCurve, state: BilliardState) -> BilliardState:
    p = float(state.p)
    if abs(p) >= 1.0:
        raise GrazingRay("|p| must be < 1")
    fr = curve.eval_frame(state.phi)
    q0 = fr.point
    v = p * fr.tangent + math.sqrt(1.0 - p * p) * fr.normal
    S = _samples(curve)
    P = curve.total_length

    def g(phi):
        d = curve.point(phi) - q0
        return v[0] * d[1] - v[1] * d[0]

    rel = S.pts - q0
    cr = v[0] * rel[:, 1] - v[1] * rel[:, 0]
    ahead = rel @ v
    phi0 = state.phi % P
    best = None
    n = len(S.phi)
    for i in range(n):
        j = (i + 1) % n
        if cr[i] == 0.0 or cr[i] * cr[j] < 0:
            if ahead[i] <= 0 and ahead[j] <= 0:
                continue
            lo = S.phi[i]
            hi = S.phi[j] if j else P
            # skip the bracket containing the launch point
            if _arc_contains(lo, hi, phi0, P, pad=1e-9 * P):
                continue
            root = brentq(g, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=200) if cr[i] != 0.0 else lo
            s = (curve.point(root) - q0) @ v
            if s > 1e-12 and (best is None or s < best[1]):
                best = (root, s)
    if best is None:
        raise NoIntersection("ray does not meet the boundary again")
    phi1 = best[0] % P
    T1 = curve.eval_frame(phi1).tangent
    p1 = float(v @ T1)
    if abs(p1) >= 1.0 - GRAZING_GUARD:
        raise GrazingRay("next intersection is tangential")
    return BilliardState(phi1, p1)


def _arc_contains(lo, hi, x, P, pad):
    return lo - pad <= x <= hi + pad


def iterate_map(curve, state, m):
    for _ in range(m):
        state = billiard_map(curve, state)
    return state


def _fd_jacobian(curve, state, m, step):
    P = curve.total_length
    J = np.zeros((2, 2))
    base = np.array([state.phi, state.p])
    for c in range(2):
        e = np.zeros(2)
        e[c] = step
        sp = iterate_map(curve, BilliardState(*(base + e)), m)
        sm = iterate_map(curve, BilliardState(*(base - e)), m)
        dphi = (sp.phi - sm.phi + P / 2) % P - P / 2
        J[:, c] = [dphi / (2 * step), (sp.p - sm.p) / (2 * step)]
    return J


def monodromy(curve, state, m, step=MONODROMY_STEP, richardson=True):
    """Centered finite-difference Jacobian of the m-fold billiard map in (phi, p).

    With ``richardson`` the steps ``2*step`` and ``step`` are combined to
    cancel the O(step^2) error, which matters for strongly hyperbolic orbits.
    """
    J1 = _fd_jacobian(curve, state, m, step)
    if not richardson:
        return J1
    J2 = _fd_jacobian(curve, state, m, 2 * step)
    return (4.0 * J1 - J2) / 3.0


# ---------------------------------------------------------------------------
# periodic orbits

@dataclass
class PeriodicOrbit:
    config: np.ndarray
    length: float
    hessian: np.ndarray
    b_offdiag: np.ndarray
    det_h: float
    stability: str
    det_i_minus_p: Optional[float] = None
    det_i_minus_p_monodromy: Optional[float] = None
    trace_p: Optional[float] = None
    elliptic_angle: Optional[float] = None
    inverse_hessian: Optional[np.ndarray] = None
    rotation_number: Optional[Tuple[int, int]] = None
    gradient_norm: float = 0.0

    @property
    def M(self):
        return len(self.config)

    def reversed(self, curve=None) -> "PeriodicOrbit":
        cfg = self.config[::-1].copy()
        out = PeriodicOrbit(**{**self.__dict__})
        out.config = cfg
        if curve is not None:
            out.hessian, out.b_offdiag = length_hessian(curve, cfg)
            out.det_h = float(np.linalg.det(out.hessian))
            if out.det_i_minus_p is not None:
                out.det_i_minus_p = kt_det_i_minus_p(out.hessian, out.b_offdiag)
        return out

    def iterate(self, curve, r: int) -> np.ndarray:
        """Vertex list of the r-fold traversal."""
        return np.tile(self.config, r)

    def to_json(self):
        return {
            "vertices": [float(v) for v in self.config],
            "length": float(self.length),
            "detH": float(self.det_h),
            "detIminusP": None if self.det_i_minus_p is None else float(self.det_i_minus_p),
            "stability": self.stability,
            "alpha": None if self.elliptic_angle is None else float(self.elliptic_angle),
            "rotation": None if self.rotation_number is None else list(self.rotation_number),
        }


def kt_det_i_minus_p(H, b, literal: bool = False) -> float:
    """det(I - P) from the length Hessian: -det(-H) / prod(b).

    ``literal=True`` returns -det(H) / prod(b), which agrees only for an
    even number of links.
    """
    H = np.asarray(H, float)
    sign = 1.0 if literal else (-1.0) ** H.shape[0]
    return float(-sign * np.linalg.det(H) / np.prod(b))


def degen_tol(H) -> float:
    return 1e-10 * max(1.0, float(np.max(np.abs(H)))) ** H.shape[0]


def newton_orbit(curve, config, newton_tol=NEWTON_TOL, maxiter=60):
    """Newton iteration on the gradient with backtracking on |grad|^2."""
    x = np.array(config, dtype=float)
    g = length_gradient(curve, x)
    for _ in range(maxiter):
        gn = np.linalg.norm(g)
        if gn < newton_tol:
            return x, gn
        H, _ = length_hessian(curve, x)
        step = np.linalg.lstsq(H, -g, rcond=1e-13)[0]
        t = 1.0
        while t > 1e-6:
            trial = x + t * step
            try:
                gt = length_gradient(curve, trial)
            except SingularConfig:
                t *= 0.5
                continue
            if np.linalg.norm(gt) < (1 - 1e-4 * t) * gn or np.linalg.norm(gt) < newton_tol:
                break
            t *= 0.5
        else:
            break
        x, g = trial, gt
    gn = np.linalg.norm(g)
    if gn < newton_tol:
        return x, gn
    raise NoConvergence(f"Newton stalled at |grad| = {gn:.3e}")


def poincare_data(curve: BoundaryCurve, orbit: PeriodicOrbit) -> PeriodicOrbit:
    """Fill det(I-P) (Hessian identity and monodromy), stability, angle and H^{-1}."""
    H, b = orbit.hessian, orbit.b_offdiag
    if abs(np.linalg.det(H)) < degen_tol(H):
        raise DegenerateOrbit("length Hessian is singular", orbit)
    orbit.det_i_minus_p = kt_det_i_minus_p(H, b)
    fr = curve.eval_frame(orbit.config[0])
    u = curve.point(orbit.config[1]) - fr.point
    u /= np.linalg.norm(u)
    state = BilliardState(float(orbit.config[0] % curve.total_length), float(u @ fr.tangent))
    Pm = monodromy(curve, state, orbit.M)
    orbit.det_i_minus_p_monodromy = float(np.linalg.det(np.eye(2) - Pm))
    tr = float(np.trace(Pm))
    orbit.trace_p = tr
    if abs(abs(tr) - 2.0) < 1e-7:
        orbit.stability = "degenerate"
    elif abs(tr) < 2.0:
        orbit.stability = "elliptic"
        orbit.elliptic_angle = float(math.acos(tr / 2.0))
    else:
        orbit.stability = "hyperbolic"
    orbit.inverse_hessian = np.linalg.inv(H)
    return orbit


def _make_orbit(curve, x, gn, rotation=None):
    H, b = length_hessian(curve, x)
    return PeriodicOrbit(
        config=np.mod(x, curve.total_length),
        length=length(curve, x),
        hessian=H,
        b_offdiag=b,
        det_h=float(np.linalg.det(H)),
        stability="unknown",
        rotation_number=rotation,
        gradient_norm=float(gn),
    )


def _canonical(curve, cfg):
    P = curve.total_length
    return np.sort(np.mod(cfg, P))


def _same_orbit(curve, a, b):
    if a.M != b.M or abs(a.length - b.length) > DEDUP_TOL * max(1.0, a.length):
        return False
    ca, cb = _canonical(curve, a.config), _canonical(curve, b.config)
    P = curve.total_length
    # circular distances, so phases just below P match phases near 0
    d = np.abs(ca[:, None] - cb[None, :])
    d = np.minimum(d, P - d) < 1e-6 * P
    return bool(np.all(d.any(axis=1)) and np.all(d.any(axis=0)))


def rotation_seed(curve, M, p, phase=0.0):
    P = curve.total_length
    return phase + P * p * np.arange(M) / M


def _seed_list(curve, M, seeds):
    P = curve.total_length
    if seeds is None:
        seeds = {"grid": 8}
    if isinstance(seeds, dict):
        out = []
        if "rotation" in seeds:
            p, q = seeds["rotation"]
            for ph in np.linspace(0, P / q, seeds.get("phases", 4), endpoint=False):
                out.append(rotation_seed(curve, M, p, ph))
        if "grid" in seeds:
            n = int(seeds["grid"])
            axes = [np.arange(n) * P / n] * min(M, 3)
            mesh = np.meshgrid(*axes, indexing="ij")
            pts = np.stack([m.ravel() for m in mesh], axis=1)
            for row in pts:
                cfg = np.concatenate([row, rotation_seed(curve, M, 1, row[-1])[min(M, 3):]]) if M > 3 else row
                out.append(cfg)
        return out
    arr = np.asarray(seeds, dtype=float)
    return [arr] if arr.ndim == 1 else list(arr)


def find_periodic_orbits(curve, M, seeds=None, newton_tol=NEWTON_TOL) -> List[PeriodicOrbit]:
    """All distinct M-link Snell polygons reached from the seeds, sorted by length."""
    if M < 2:
        raise ValueError("M >= 2 required")
    found: List[PeriodicOrbit] = []
    rot = tuple(seeds["rotation"]) if isinstance(seeds, dict) and "rotation" in seeds else None
    for cfg in _seed_list(curve, M, seeds):
        if len(cfg) != M:
            raise ValueError("seed length does not match M")
        try:
            x, gn = newton_orbit(curve, cfg, newton_tol)
            orb = _make_orbit(curve, x, gn, rot)
        except (NoConvergence, SingularConfig):
            continue
        if np.min(_cyclic_gaps(curve, orb.config)) < 1e-4 * curve.total_length:
            continue
        if not any(_same_orbit(curve, orb, o) for o in found):
            found.append(orb)
    if not found:
        raise NoConvergence("no seed converged to a Snell polygon")
    for orb in found:
        try:
            poincare_data(curve, orb)
        except DegenerateOrbit:
            orb.stability = "degenerate"
    found.sort(key=lambda o: o.length)
    return found


def find_periodic_orbit(curve, M, seeds=None, newton_tol=NEWTON_TOL) -> PeriodicOrbit:
    """The orbit reached from the first converging seed.

    Degenerate orbits come back with ``stability == "degenerate"`` and no
    Poincare data rather than raising.
    """
    if M < 2:
        raise ValueError("M >= 2 required")
    rot = tuple(seeds["rotation"]) if isinstance(seeds, dict) and "rotation" in seeds else None
    for cfg in _seed_list(curve, M, seeds):
        try:
            x, gn = newton_orbit(curve, cfg, newton_tol)
            orb = _make_orbit(curve, x, gn, rot)
        except (NoConvergence, SingularConfig):
            continue
        if np.min(_cyclic_gaps(curve, orb.config)) < 1e-4 * curve.total_length:
            continue
        try:
            poincare_data(curve, orb)
        except DegenerateOrbit:
            orb.stability = "degenerate"
        return orb
    raise NoConvergence("no seed converged to a Snell polygon")


def birkhoff_orbits(curve, p, q, phases=8) -> List[PeriodicOrbit]:
    """Periodic orbits of rotation number p/q: the length maximizer plus saddles found by Newton."""
    P = curve.total_length
    out: List[PeriodicOrbit] = []
    for ph in np.linspace(0, P / q, phases, endpoint=False):
        seed = rotation_seed(curve, q, p, ph)
        res = minimize(lambda x: -length(curve, x), seed, jac=lambda x: -length_gradient(curve, x), method="BFGS", options={"gtol": 1e-10})
        for cfg in (res.x, seed):
            try:
                x, gn = newton_orbit(curve, cfg)
                orb = _make_orbit(curve, x, gn, (p, q))
            except (NoConvergence, SingularConfig):
                continue
            if not _has_winding(curve, orb.config, p):
                continue
            if not any(_same_orbit(curve, orb, o) for o in out):
                out.append(orb)
    for orb in out:
        try:
            poincare_data(curve, orb)
        except DegenerateOrbit:
            orb.stability = "degenerate"
    return out


def _has_winding(curve, cfg, p):
    P = curve.total_length
    steps = np.mod(np.diff(np.concatenate([cfg, cfg[:1]])), P)
    return int(round(np.sum(steps) / P)) == p and np.all(steps > 0)


def enumerate_length_spectrum(curve, L_max, q_max=12) -> List[Tuple[float, Tuple[int, int], Optional[PeriodicOrbit]]]:
    """Sorted (length, rotation number, orbit) triples with length <= L_max.

    Rotation classes (p, q) with coprime p, q, 1 <= p <= q/2 and q <= q_max
    are searched; iterates are not listed separately.  Boundary (gliding)
    lengths m * perimeter are appended with rotation (m, 0) and no orbit.
    """
    if not curve.is_convex():
        raise NonConvexCurve("length spectrum enumeration needs a strictly convex curve")
    out = []
    for q in range(2, q_max + 1):
        for p in range(1, q // 2 + 1):
            if math.gcd(p, q) != 1:
                continue
            for orb in birkhoff_orbits(curve, p, q):
                if orb.length <= L_max:
                    out.append((orb.length, (p, q), orb))
    m = 1
    while m * curve.total_length <= L_max:
        out.append((m * curve.total_length, (m, 0), None))
        m += 1
    out.sort(key=lambda e: e[0])
    dedup = []
    for e in out:
        if dedup and abs(e[0] - dedup[-1][0]) < DEDUP_TOL and e[1] == dedup[-1][1]:
            continue
        dedup.append(e)
    return dedup
