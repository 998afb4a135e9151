import cmath
import json
import math

import numpy as np
import pytest
from scipy import integrate

from wavetrace.billiards import find_periodic_orbits, length_hessian
from wavetrace.errors import DegenerateAngle, DegenerateHessian, DegenerateOrbit, RegimeError
from wavetrace.geometry import graph_pair
from wavetrace.jets import Poly
from wavetrace.waveinv import (
    READINGS,
    OscillatoryIntegralJet,
    _branch_coefficients,
    alpha_reading_report,
    bouncing_ball_on_axis,
    build_orbit_integral,
    comparison_csv,
    hankel_closed_form,
    hankel_closed_form_literal_offset,
    hankel_cutoff_transform,
    invariants_from_branches,
    invariants_via_time_integral,
    stationary_phase,
    thm_sum_v_extract,
    wave_invariants,
    wtf_eval,
)

FP = [1.0, 0.0, -0.3, 0.0, -0.05]
FM = [-v for v in FP]


def _jet1(phase_terms, amps):
    return OscillatoryIntegralJet(1, Poly(1, 8, phase_terms), amps, 1, 0.0)


def _quartic_exact(k, amp=lambda x: 1.0):
    # rotate x = e^{i pi/8} s: both x^2 and x^4 terms then decay along the real s axis
    rot = cmath.exp(1j * math.pi / 8)

    def f(s):
        x = rot * s
        return rot * cmath.exp(1j * k * (x * x / 2 + x ** 4 / 4)) * amp(x)

    kw = dict(limit=400, epsabs=1e-15, epsrel=1e-13)
    re = integrate.quad(lambda s: f(s).real, -np.inf, np.inf, **kw)[0]
    im = integrate.quad(lambda s: f(s).imag, -np.inf, np.inf, **kw)[0]
    return re + 1j * im


QUARTIC = _jet1({(2,): 0.5, (4,): 0.25}, [Poly.const(1, 8, 1.0)])


# ---------------------------------------------------------------------------
# stationary phase engine

def test_fresnel_is_exact():
    jet = _jet1({(2,): 0.5}, [Poly.const(1, 8, 1.0)])
    for k in (3.0, 37.0, 400.0):
        sp = stationary_phase(jet, k, 3)
        assert abs(sp.value - math.sqrt(2 * math.pi / k) * cmath.exp(0.25j * math.pi)) < 1e-13
        assert all(abs(c) < 1e-14 for c in sp.coefficients[1:])


def test_negative_definite_signature():
    jet = _jet1({(2,): -0.5}, [Poly.const(1, 8, 1.0)])
    sp = stationary_phase(jet, 10.0, 0)
    assert sp.signature == -1
    assert abs(sp.value - math.sqrt(2 * math.pi / 10) * cmath.exp(-0.25j * math.pi)) < 1e-13


def test_quartic_matches_quadrature():
    k = 50.0
    sp = stationary_phase(QUARTIC, k, 2)
    exact = _quartic_exact(k)
    assert abs(sp.value / exact - 1) < 1e-3


@pytest.mark.parametrize("R", [1, 2])
def test_quartic_error_order(R):
    ks = np.array([50.0, 100.0, 200.0])
    err = [abs(stationary_phase(QUARTIC, k, R).value / _quartic_exact(k) - 1) for k in ks]
    slope = -np.polyfit(np.log(ks), np.log(err), 1)[0]
    assert slope >= R + 0.5


def test_symbol_order_scaling():
    # amplitude of order -1 in one variable: integral ~ k^{-3/2}
    ks = np.array([50.0, 100.0, 200.0])
    vals = [abs(_quartic_exact(k, lambda x: (1 + x * x)) / k) for k in ks]
    slope = np.polyfit(np.log(ks), np.log(vals), 1)[0]
    assert slope == pytest.approx(-1.5, rel=0.02)


def test_degenerate_hessian_refused():
    with pytest.raises(DegenerateHessian):
        stationary_phase(_jet1({(4,): 1.0}, [Poly.const(1, 8, 1.0)]), 10.0, 1)


# ---------------------------------------------------------------------------
# Hankel transforms

def test_hankel_closed_form_at_a_zero():
    b = 1 + 0.02j
    assert abs(hankel_closed_form(0.0, b) - 1 / b) < 1e-15


def test_hankel_flat_residual_center():
    res = hankel_cutoff_transform(0.0, 1 + 0.02j, 1e3, 0.75)
    assert res.closed_form == pytest.approx(1 / (1 + 0.02j))
    assert res.residual < 1e-6


def test_hankel_flat_residual_spec_point():
    res = hankel_cutoff_transform(0.5, 1 + 0.02j, 1e3, 0.75)
    print("flat residual at a=0.5, b=1+0.02i:", res.residual)
    assert res.residual < 1e-6


@pytest.mark.parametrize("a,b", [(0.0, 1 + 0.02j), (0.25, 1.5 + 0.02j)])
def test_hankel_residual_decreases_with_delta(a, b):
    res = [hankel_cutoff_transform(a, b, 1e3, d).residual for d in (0.6, 0.75, 0.9)]
    assert res[0] > res[1] > res[2]


def test_hankel_offset_identity():
    a, b, r = 0.3, 1.5 + 0.02j, 0.7
    res = hankel_cutoff_transform(a, b, 1e3, 0.75, "offset", r=r)
    assert res.residual < 1e-5
    # the literal -i e^{-irw}/w is not what the integral evaluates to
    assert abs(res.numeric - hankel_closed_form_literal_offset(a, b, r)) > 0.1


def test_hankel_regime_guards():
    with pytest.raises(RegimeError):
        hankel_cutoff_transform(0.9, 1 + 0.02j, 1e3, 0.75)
    with pytest.raises(RegimeError):
        hankel_cutoff_transform(0.0, 1 + 0.0j, 1e3, 0.75)
    with pytest.raises(RegimeError):
        hankel_cutoff_transform(0.0, 1 + 0.02j, 1e3, 0.75, "offset")


# ---------------------------------------------------------------------------
# orbit integrals

@pytest.fixture(scope="module")
def minor_axis(ell):
    return next(o for o in find_periodic_orbits(ell, 2) if abs(o.length - 4.0) < 1e-9)


@pytest.mark.parametrize("r", [1, 2])
def test_orbit_integral_critical_data(ell, minor_axis, r):
    jet = build_orbit_integral(ell, minor_axis, r, R=1)
    assert jet.critical_value == pytest.approx(r * 4.0, abs=1e-12)
    assert np.max(np.abs(jet.gradient())) < 1e-12
    H = jet.hessian()
    Hx, _ = length_hessian(ell, np.tile(minor_axis.config, r))
    assert np.max(np.abs(H[2:, 2:] - Hx)) < 1e-8
    assert np.allclose(H[:2, :2], [[0, -1], [-1, 0]], atol=1e-12)
    assert np.max(np.abs(H[:2, 2:])) < 1e-12
    assert abs(np.linalg.det(H) + np.linalg.det(Hx)) < 1e-8


def test_time_integral_route_agrees(ell, minor_axis, flower):
    for curve, orb in ((ell, minor_axis), (flower, find_periodic_orbits(flower, 3)[0])):
        B = wave_invariants(curve, orb, 1, 3).B
        Bt = invariants_via_time_integral(curve, orb, 1, 3)
        assert np.allclose(B, Bt, rtol=1e-10, atol=1e-12 * abs(B[0]))


def test_degenerate_orbit_refused(unit_circle):
    from wavetrace.billiards import find_periodic_orbit, rotation_seed

    dia = find_periodic_orbit(unit_circle, 2, seeds=[rotation_seed(unit_circle, 2, 1)])
    with pytest.raises(DegenerateOrbit):
        wave_invariants(unit_circle, dia, 1, 2)


def test_time_reversal_branches(flower):
    orb = find_periodic_orbits(flower, 3)[0]
    fwd = _branch_coefficients(flower, orb.config, 2)
    rev = _branch_coefficients(flower, orb.config[::-1].copy(), 2)
    # each branch enters once per cyclic relabelling of the vertices
    Bf = invariants_from_branches([fwd], 3, 3, 3)
    Br = invariants_from_branches([rev], 3, 3, 3)
    assert np.allclose(Bf, Br, rtol=1e-10, atol=0)
    total = wave_invariants(flower, orb, 1, 3).B
    assert np.allclose(total, 2 * Bf, rtol=1e-10, atol=0)


def test_jet_truncation(sym_graph):
    # entries B_0..B_J; B_J is the first that sees the (2J+2)-jet
    J = 2
    base = wave_invariants(sym_graph, bouncing_ball_on_axis(sym_graph), 1, J + 1).B

    def with_coeff(n, d):
        fp = FP + [0.0] * (n + 1 - len(FP))
        fp[n] += d
        c = graph_pair(fp, FM)
        return wave_invariants(c, bouncing_ball_on_axis(c), 1, J + 1).B

    assert np.allclose(with_coeff(2 * J + 3, 0.05), base, rtol=0, atol=1e-9)
    assert abs(with_coeff(2 * J + 2, 0.05)[J] - base[J]) > 1e-6


# ---------------------------------------------------------------------------
# explicit formula

def test_wtf_examples():
    assert wtf_eval(1, 2, 0.5, [0.5, 0.1], 1.0, 0.0, 1.0, 0.0) == 0.5
    assert wtf_eval(2, 3, 0.3, [0.3, 0.1, 0.2, 0.1], 1.0, 0.0, 0.0, 0.0) == 0.0
    for reading in READINGS:
        assert wtf_eval(1, 2, 0.5, [0.5, 0.1], 1.0, 0.0, 0.0, 0.0, reading=reading) == 0.0


def test_wtf_linearity_and_homogeneity():
    h1 = [0.4, 0.2]
    for reading in READINGS:
        f = lambda f2j, f2jm1: wtf_eval(1, 3, 0.4, h1, 2.0, 0.7, f2j, f2jm1, reading=reading)
        assert f(2.0, 1.0) - f(0.0, 1.0) == pytest.approx(2 * (f(1.0, 1.0) - f(0.0, 1.0)), rel=1e-12)
        assert f(1.0, 3.0) - f(1.0, 0.0) == pytest.approx(3 * (f(1.0, 1.0) - f(1.0, 0.0)), rel=1e-12)
    lead = lambda r: wtf_eval(r, 2, 0.4, [0.4] * (2 * r), 2.0, 0.0, 1.3, 0.0)
    assert lead(2) == pytest.approx(2 * lead(1), rel=1e-14)
    assert lead(3) == pytest.approx(3 * lead(1), rel=1e-14)


def test_wtf_readings_differ_and_guards():
    a = wtf_eval(1, 2, 0.5, [0.5, 0.1], 1.0, 1.0, 0.0, 1.0, reading="cos_over_2")
    b = wtf_eval(1, 2, 0.5, [0.5, 0.1], 1.0, 1.0, 0.0, 1.0, reading="cos_of_half")
    assert a != b
    with pytest.raises(ValueError):
        wtf_eval(1, 2, 0.5, [0.5, 0.1], 1.0, 1.0, 0.0, 1.0)
    with pytest.raises(DegenerateAngle):
        wtf_eval(1, 2, 0.5, [0.5, 0.1], 0.0, 0.0, 1.0, 0.0)
    with pytest.raises(DegenerateAngle):
        wtf_eval(1, 2, 0.5, [0.5, 0.1], 2 * math.pi, 0.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        wtf_eval(2, 2, 0.5, [0.5, 0.1], 1.0, 0.0, 1.0, 0.0)


def test_comparison_csv():
    text = comparison_csv([{"j": 1, "r": 1, "pipeline": 0.1, "wtf": 0.1 + 1e-12, "trace_fit": None, "rel_err": 1e-11}])
    lines = text.splitlines()
    assert lines[0] == "j,r,pipeline,wtf,trace_fit,rel_err"
    assert lines[1].split(",")[:2] == ["1", "1"]
    cells = lines[1].split(",")
    assert float(cells[3]) == 0.1 + 1e-12 and cells[4] == ""


# ---------------------------------------------------------------------------
# coefficient extraction (finite differences through the whole pipeline)

@pytest.mark.slow
def test_thm_sum_v_symmetric_split():
    c = thm_sum_v_extract(FP, FM, 1, 2)
    assert abs(c.a_plus - c.a_minus) < 1e-8
    # the symmetric total 2 r (h11)^j splits evenly between the vertices
    assert abs(c.a_plus - c.h11 ** 2) < 1e-6
    assert abs(c.b_plus) < 1e-8 and abs(c.b_minus) < 1e-8


@pytest.mark.slow
def test_thm_sum_v_polynomial_in_h():
    base = thm_sum_v_extract(FP, FM, 1, 1)
    coef = base.a_plus / base.h11
    fp2 = [1.0, 0.0, -0.35, 0.0, -0.05]
    moved = thm_sum_v_extract(fp2, [-v for v in fp2], 1, 1)
    assert abs(moved.h11 - base.h11) > 1e-2
    assert abs(moved.a_plus - coef * moved.h11) < 1e-6


@pytest.mark.slow
def test_alpha_reading_report_is_complete():
    rep = alpha_reading_report(FP, FM, 1, 2)
    doc = json.loads(json.dumps(rep.to_json()))
    assert set(READINGS) <= set(doc["readings"])
    assert math.isfinite(doc["measured"][0]) and abs(doc["measured"][1]) < 1e-9
    assert 0 < doc["alpha"] < 2 * math.pi
    print("alpha report", doc)
