import math

import numpy as np
import pytest

from wavetrace.billiards import enumerate_length_spectrum, find_periodic_orbit, rotation_seed
from wavetrace.errors import DegenerateOrbit, IllConditionedFit, ResolutionError, TruncationError, WindowNotIsolated
from wavetrace.specfun import bessel_zeros_upto
from wavetrace.trace import (
    CombinedWindow,
    TraceWindow,
    bem_trace_term,
    check_isolation,
    demodulate,
    fit_expansion,
    rho,
    scan_csv,
    spectral_trace_disc,
)

W4 = TraceWindow(4.0, 0.45)


def test_window_validation():
    with pytest.raises(ValueError):
        TraceWindow(0.3, 0.5)
    with pytest.raises(ValueError):
        TraceWindow(4.0, 0.45, tau=-1.0)
    assert W4.rho_hat(4.2) == 1.0 and W4.rho_hat(4.46) == 0.0
    assert 0 < W4.rho_hat(4.3) < 1


def test_rho_shift_covariance():
    s = 0.3
    w2 = TraceWindow(4.0 + s, 0.45)
    for z in (10 + 2j, -3.5 + 0.5j, 40.0):
        assert abs(w2.rho(z) - np.exp(1j * z * s) * W4.rho(z)) < 1e-12 * abs(W4.rho(0.0))


def test_rho_rapid_decay():
    # fit C_6 on [0, 800] and confirm the bound holds further out, down to roundoff
    x = np.arange(0.0, 1600.0, 0.5)
    a = np.abs(rho(W4, x))
    env = (1 + x) ** 6
    fit = x <= 800
    C = np.max(a[fit] * env[fit])
    assert np.isfinite(C)
    floor = 1e-13 * a[0]
    assert np.all(a[~fit] <= C / env[~fit] + floor)
    assert np.max(a[~fit] * env[~fit]) < C


def test_rho_quadrature_self_convergence():
    z = 10 + 2j
    assert abs(W4.rho(z, refine=2) - W4.rho(z)) < 1e-12


def test_rho_at_zero_is_window_area():
    # plateau of width epsilon plus two ramps that are odd about their midpoints
    assert W4.rho(0.0) == pytest.approx(1.5 * 0.45, rel=1e-12)


def test_disc_trace_linearity():
    w1, w2 = TraceWindow(4.0, 0.45), TraceWindow(3.0, 0.3)
    a, b = 2.0, -0.5j
    cw = CombinedWindow(((a, w1), (b, w2)))
    k = 50.0
    lhs = spectral_trace_disc(cw, k, 120.0)
    rhs = a * spectral_trace_disc(w1, k, 120.0) + b * spectral_trace_disc(w2, k, 120.0)
    assert abs(lhs - rhs) < 1e-10 * abs(rhs)


def test_truncation_guard():
    with pytest.raises(TruncationError):
        spectral_trace_disc(W4, 60.0, 65.0)


@pytest.mark.parametrize("k", [50.0, 80.0])
def test_conjugate_branch_negligible(k):
    lam, mult = bessel_zeros_upto(k + 60.0)
    main = spectral_trace_disc(W4, k, k + 60.0)
    conj = complex(np.sum(mult * W4.rho(k + lam)))
    assert abs(conj) < 1e-10 * abs(main)


def test_poisson_contrast_at_diameter():
    k = 100.0
    peak = abs(spectral_trace_disc(W4, k, 200.0))
    ctrl = abs(spectral_trace_disc(TraceWindow(3.5, 0.45), k, 200.0))
    assert peak > 100 * ctrl


def test_demodulated_signal_is_slowly_varying():
    ks = np.arange(60.0, 64.01, 0.25)
    raw = np.array([spectral_trace_disc(W4, k, 130.0) for k in ks])
    d = demodulate(ks, raw, 4.0, 0.0)
    # the carrier turns by a full radian per step; the envelope barely moves
    assert np.max(np.abs(np.diff(np.abs(d)))) < 0.02 * np.max(np.abs(d))
    assert np.max(np.abs(np.diff(np.unwrap(np.angle(d))))) < 0.05


def test_tau_rescaling_of_amplitude():
    k = 100.0
    a0 = abs(spectral_trace_disc(TraceWindow(4.0, 0.45, tau=0.0), k, 200.0))
    a1 = abs(spectral_trace_disc(TraceWindow(4.0, 0.45, tau=0.5), k, 200.0))
    assert a1 / a0 == pytest.approx(k ** (-0.5 * 4.0), rel=0.2)


def test_isolation(ell):
    lengths = [L for L, _, _ in enumerate_length_spectrum(ell, 9.0, 4)]
    assert check_isolation(TraceWindow(4.0, 0.45), lengths) == pytest.approx(4.0)
    with pytest.raises(WindowNotIsolated):
        check_isolation(TraceWindow(8.4, 0.45), lengths)
    with pytest.raises(WindowNotIsolated):
        check_isolation(TraceWindow(6.0, 0.45), lengths, target=4.0)


def _synthetic(ks, B, L=4.0, tau=0.5):
    amp = sum(b * ks ** -(j + 1) for j, b in enumerate(B))
    return list(zip(ks, amp * np.exp(1j * ks * L) * ks ** (-tau * L)))


def test_fit_exact_recovery():
    ks = np.linspace(60, 140, 9)
    B = [1.3 - 0.4j, -7.0 + 2.0j]
    fit = fit_expansion(_synthetic(ks, B), 4.0, 0.5, 2, j0=1)
    assert np.allclose(fit.B, B, rtol=1e-10, atol=0)
    assert fit.residual < 1e-12


def test_fit_noise_monte_carlo(rng):
    ks = np.linspace(60, 140, 9)
    B = [1.3 - 0.4j, -7.0 + 2.0j]
    clean = _synthetic(ks, B)
    errs = []
    for _ in range(100):
        noisy = [(k, v * (1 + 0.01 * rng.standard_normal())) for k, v in clean]
        errs.append(abs(fit_expansion(noisy, 4.0, 0.5, 2, j0=1).B[0] / B[0] - 1))
    assert max(errs) < 0.05


def test_fit_guards(unit_circle):
    ks = np.linspace(60, 140, 9)
    data = _synthetic(ks, [1.0, 0.0])
    with pytest.raises(IllConditionedFit):
        fit_expansion(data[:5], 4.0, 0.5, 2)
    with pytest.raises(IllConditionedFit):
        fit_expansion(_synthetic(np.linspace(60, 100, 9), [1.0]), 4.0, 0.5, 2)
    diameter = find_periodic_orbit(unit_circle, 2, seeds=[rotation_seed(unit_circle, 2, 1)])
    with pytest.raises(DegenerateOrbit):
        fit_expansion(data, 4.0, 0.5, 2, orbit=diameter)


def test_scan_csv_columns():
    text = scan_csv([(60.0, 1 + 2j)], 4.0, 0.0)
    lines = text.splitlines()
    assert lines[0] == "k,re_trace,im_trace,demod_re,demod_im"
    row = [float(v) for v in lines[1].split(",")]
    d = complex(demodulate(60.0, 1 + 2j, 4.0, 0.0))
    assert row[:3] == [60.0, 1.0, 2.0] and row[3] == d.real and row[4] == d.imag


def test_bem_argument_guards(ell):
    with pytest.raises(ValueError):
        bem_trace_term(ell, W4, 40.0, 9)
    with pytest.raises(ResolutionError):
        bem_trace_term(ell, W4, 40.0, 2, n_nodes=64)
    with pytest.raises(ValueError):
        bem_trace_term(ell, W4, 40.0, 2, mode="orbit", vertices=[0.0])


@pytest.mark.slow
def test_free_term_vanishes_against_orbit_term(ell):
    P = ell.total_length
    verts = [0.25 * P, 0.75 * P]
    m2 = bem_trace_term(ell, W4, 80.0, 2, mode="orbit", vertices=verts, patch_halfwidth=2.0, mu_halfwidth=8.0)
    m0 = bem_trace_term(ell, W4, 80.0, 0)
    assert abs(m2) > 0
    assert abs(m0) < 1e-6 * abs(m2)


@pytest.mark.slow
def test_orbit_term_tracks_disc_oracle_carrier(ell):
    # the demodulated M=2 term changes slowly between nearby k
    P = ell.total_length
    verts = [0.25 * P, 0.75 * P]
    kw = dict(mode="orbit", vertices=verts, patch_halfwidth=2.0, mu_halfwidth=8.0)
    ks = np.array([60.0, 60.5])
    vals = [bem_trace_term(ell, TraceWindow(4.0, 2.0), k, 2, **kw) for k in ks]
    d = demodulate(ks, np.array(vals), 4.0, 0.0)
    assert abs(d[1] / d[0] - 1) < 0.05
    assert math.isfinite(abs(d[0]))
