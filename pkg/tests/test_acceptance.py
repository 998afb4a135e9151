"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest -s tests/test_acceptance.py`` to see the lines, or
directly with ``python3 tests/test_acceptance.py``.  Tolerances and
runtime budgets are fixed below and are not tuned to the measured values.
"""

import cmath
import math
import time

import numpy as np
import pytest
from scipy import integrate

from wavetrace.billiards import find_periodic_orbit, find_periodic_orbits, kt_det_i_minus_p, rotation_seed
from wavetrace.geometry import circle, ellipse
from wavetrace.jets import Poly
from wavetrace.layers import assemble, disc_eigenvalue, disc_eigenvalue_quadrature, fit_damping_constant, tail_decay
from wavetrace.trace import TraceWindow, bem_trace_term, demodulate, fit_expansion, spectral_trace_disc
from wavetrace.waveinv import (
    OscillatoryIntegralJet,
    alpha_reading_report,
    hankel_cutoff_transform,
    stationary_phase,
    symmetric_jet_coefficient,
    wave_invariants,
)

SYM_FP = [1.0, 0.0, -0.3, 0.0, -0.05]
SYM_FM = [-v for v in SYM_FP]


def _report(label, ok, detail, elapsed, budget):
    ok = bool(ok) and elapsed < budget
    print(f"ACCEPTANCE {label} {'PASS' if ok else 'FAIL'}: {detail} [{elapsed:.1f} s, budget {budget:.0f} s]")
    return ok


def _timed(fn):
    t0 = time.perf_counter()
    ok, detail = fn()
    return ok, detail, time.perf_counter() - t0


# ---------------------------------------------------------------------------

def crit1():
    c = circle(1.0)
    worst = 0.0
    for p, q in ((1, 3), (1, 4), (2, 5)):
        o = find_periodic_orbit(c, q, seeds=[rotation_seed(c, q, p)])
        worst = max(worst, abs(o.length - 2 * q * math.sin(math.pi * p / q)))
    dia = find_periodic_orbit(c, 2, seeds=[rotation_seed(c, 2, 1)])
    ok = worst < 1e-9 and abs(dia.det_h) < 1e-10 and dia.stability == "degenerate"
    return ok, f"max length error {worst:.2e} (tol 1e-9), diameter |det H| {abs(dia.det_h):.2e} (tol 1e-10)"


def crit2():
    e = ellipse(2.0, 1.0)
    orbs = {round(o.length): o for o in find_periodic_orbits(e, 2)}
    minor, major = orbs[4], orbs[8]
    errs = []
    for o in (minor, major):
        kt = kt_det_i_minus_p(o.hessian, o.b_offdiag, literal=True)
        errs.append(abs(kt - o.det_i_minus_p_monodromy))
    ok = max(errs) < 1e-5 and minor.stability == "elliptic" and major.stability == "hyperbolic"
    return ok, (f"|KT - monodromy| minor {errs[0]:.2e}, major {errs[1]:.2e} (tol 1e-5); "
                f"minor {minor.stability}, major {major.stability}")


def crit3():
    kap = 15.0 + 0.5j
    n = 512
    c = circle(1.0)
    N = assemble(c, kap, n).matrix
    th = 2 * np.pi * np.arange(n) / n
    vec_err, val_err = 0.0, 0.0
    for m in range(-40, 41):
        v = np.exp(1j * m * th)
        Nv = N @ v
        lam = np.vdot(v, Nv) / np.vdot(v, v)
        vec_err = max(vec_err, np.linalg.norm(Nv - lam * v) / np.linalg.norm(v))
        val_err = max(val_err, abs(lam - disc_eigenvalue_quadrature(m, kap)))
    closed = max(abs(disc_eigenvalue(m, kap) - disc_eigenvalue_quadrature(m, kap)) for m in (0, 7, 40))
    ok = vec_err < 1e-7 and val_err < 1e-6
    return ok, (f"eigenvector residual {vec_err:.2e} (tol 1e-7), eigenvalue vs quadrature oracle {val_err:.2e} "
                f"(tol 1e-6), closed form vs oracle {closed:.2e}")


def crit4():
    a_vals = (-0.5, -0.25, 0.0, 0.25, 0.5)
    b_vals = [complex(x, 0.02) for x in (1.0, 1.25, 1.5, 2.0, 3.0)]
    worst = {"flat": (0.0, None), "offset": (0.0, None)}
    for a in a_vals:
        for b in b_vals:
            for variant, kw in (("flat", {}), ("offset", {"r": 0.7})):
                res = hankel_cutoff_transform(a, b, 1e3, 0.75, variant, **kw).residual
                if res > worst[variant][0]:
                    worst[variant] = (res, (a, b))
    ok = worst["flat"][0] < 1e-5 and worst["offset"][0] < 1e-5
    fmt = lambda w: f"{w[0]:.2e} at a={w[1][0]}, b={w[1][1]}"
    return ok, f"max residual flat {fmt(worst['flat'])}, offset r=0.7 {fmt(worst['offset'])} (tol 1e-5)"


def crit5():
    k, lam = 100.0, 200.0
    peak = spectral_trace_disc(TraceWindow(4.0, 0.45), k, lam)
    ctrl = spectral_trace_disc(TraceWindow(3.5, 0.45), k, lam)
    contrast = abs(demodulate(k, peak, 4.0, 0.0)) / abs(demodulate(k, ctrl, 3.5, 0.0))
    taus = np.array([0.0, 0.25, 0.5, 1.0])
    raw = [abs(spectral_trace_disc(TraceWindow(4.0, 0.45, tau=t), k, lam)) for t in taus]
    slope = np.polyfit(taus * math.log(k), np.log(raw), 1)[0]
    exp_err = abs(slope / -4.0 - 1)
    ok = contrast >= 100 and exp_err < 0.1
    return ok, f"contrast {contrast:.0f} (need >= 100), tau exponent {slope:.3f} vs -4 (rel err {exp_err:.3f}, tol 0.1)"


def _quartic_exact(k):
    rot = cmath.exp(1j * math.pi / 8)
    f = lambda s: rot * cmath.exp(1j * k * ((rot * s) ** 2 / 2 + (rot * s) ** 4 / 4))
    kw = dict(limit=400, epsabs=1e-15, epsrel=1e-13)
    return (integrate.quad(lambda s: f(s).real, -np.inf, np.inf, **kw)[0]
            + 1j * integrate.quad(lambda s: f(s).imag, -np.inf, np.inf, **kw)[0])


def crit6():
    fres = OscillatoryIntegralJet(1, Poly(1, 8, {(2,): 0.5}), [Poly.const(1, 8, 1.0)], 1, 0.0)
    k = 37.0
    ferr = abs(stationary_phase(fres, k, 3).value - math.sqrt(2 * math.pi / k) * cmath.exp(0.25j * math.pi))
    quart = OscillatoryIntegralJet(1, Poly(1, 8, {(2,): 0.5, (4,): 0.25}), [Poly.const(1, 8, 1.0)], 1, 0.0)
    ks = np.array([50.0, 100.0, 200.0])
    exact = [_quartic_exact(k) for k in ks]
    slopes = {}
    for R in (1, 2):
        err = [abs(stationary_phase(quart, k, R).value / ex - 1) for k, ex in zip(ks, exact)]
        slopes[R] = -np.polyfit(np.log(ks), np.log(err), 1)[0]
    ok = ferr < 1e-13 and all(slopes[R] >= R + 0.5 for R in slopes)
    return ok, (f"Fresnel error {ferr:.1e} (tol 1e-13), quartic error exponents "
                + ", ".join(f"R={R}: {s:.2f} (need >= {R + 0.5})" for R, s in slopes.items()))


def crit7a():
    worst = 0.0
    parts = []
    for j in (1, 2):
        for r in (1, 2):
            val, pred = symmetric_jet_coefficient(SYM_FP, SYM_FM, r, j)
            err = abs(val - pred)
            worst = max(worst, err)
            parts.append(f"(j={j},r={r}) {val.real:.6g} vs {pred:.6g}")
    return worst < 1e-6, f"max |extracted - 2r(h11)^j| {worst:.1e} (tol 1e-6); " + "; ".join(parts)


def crit7b():
    rep = alpha_reading_report(SYM_FP, SYM_FM, r=1, j=2)
    readings = ", ".join(f"{k} {v:.6g}" for k, v in rep.readings.items() if not k.endswith("iterate_angle"))
    return bool(rep.matches), (f"measured f'''^2 coefficient {rep.measured.real:.6g}; readings {readings}; "
                               f"matching within {rep.rel_tol:g}: {rep.matches or 'none'}")


def crit8():
    e = ellipse(2.0, 1.0)
    orb = next(o for o in find_periodic_orbits(e, 2) if abs(o.length - 4.0) < 1e-9)
    B = wave_invariants(e, orb, 1, 2).B
    P = e.total_length
    w = TraceWindow(4.0, 2.0)
    ks = np.arange(60.0, 140.01, 10.0)
    vals = [bem_trace_term(e, w, k, 2, mode="orbit", vertices=[orb.config[0], orb.config[1]], patch_halfwidth=2.0)
            for k in ks]
    fit = fit_expansion(list(zip(ks, vals)), 4.0, 0.0, 2, j0=0, orbit=orb)
    rel = abs(fit.B[1] / B[1] - 1)
    lead = abs(fit.B[0] / B[0] - 1)
    return rel < 0.1, (f"B_1 pipeline {complex(B[1]):.6g}, trace fit {complex(fit.B[1]):.6g}, rel diff {rel:.3f} "
                       f"(tol 0.1); leading rel diff {lead:.1e}; perimeter {P:.4f}")


def crit9():
    e = ellipse(2.0, 1.0)
    P = e.total_length
    M0s = list(range(0, 9))
    taus = [0.5, 1.0, 1.5, 2.0]
    rows = tail_decay(e, [40.0, 60.0], M0s, taus, [P / 4, 3 * P / 4], half_width=0.5)
    mono = True
    for k in (40.0, 60.0):
        for t in taus:
            seq = [r[3] for r in rows if r[0] == k and r[1] == t and r[2] >= 3]
            mono &= all(b < a for a, b in zip(seq, seq[1:]))
    C, per = fit_damping_constant(rows, 4.0, M0_min=3)
    spread = np.std(list(per.values())) / abs(C)
    return mono and C > 0, f"monotone beyond M0=3: {mono}; fitted C = {C:.4f} (> 0 required, spread {spread:.2f})"


CRITERIA = [
    ("1", crit1, 5),
    ("2", crit2, 10),
    ("3", crit3, 30),
    ("4", crit4, 60),
    ("5", crit5, 600),
    ("6", crit6, 60),
    ("7a", crit7a, 600),
    ("7b", crit7b, 600),
    ("8", crit8, 1800),
    ("9", crit9, 600),
]


@pytest.mark.parametrize("label,fn,budget", CRITERIA, ids=[c[0] for c in CRITERIA])
def test_criterion(label, fn, budget):
    ok, detail, elapsed = _timed(fn)
    assert _report(label, ok, detail, elapsed, budget)


if __name__ == "__main__":
    results = []
    for label, fn, budget in CRITERIA:
        ok, detail, elapsed = _timed(fn)
        results.append(_report(label, ok, detail, elapsed, budget))
    print(f"{sum(results)}/{len(results)} criteria pass")
