import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reslab.correlations import (
    CorrelationSeries,
    backward_correlations,
    correlation_sequence,
    correlation_spectrum,
    fit_decay_rate,
    generating_function,
    match_all,
    mean_subtract,
    pade_poles,
    pade_scan,
    resolvent_pairing,
)
from reslab.errors import NotMeanZero, UntrustedSpectrum
from reslab.galerkin import assemble_transfer_matrix, transfer_spectrum
from reslab.observables import FourierObservable


@pytest.fixture(scope="module")
def operator_series(desk, desk_spectrum, desk_observables):
    f, g = desk_observables
    return correlation_sequence(desk, f, g, 10, spectrum=desk_spectrum)


@pytest.fixture(scope="module")
def sin_series(desk, desk_spectrum):
    h = mean_subtract(FourierObservable.sin_mode((0, 1)), desk_spectrum, desk)
    return h, correlation_sequence(desk, h, h, 24, spectrum=desk_spectrum)


def test_observable_reality():
    with pytest.raises(ValueError):
        FourierObservable.from_dict({(1, 0): 1.0})
    f = FourierObservable.cos_mode((1, 2), 3.0)
    x = np.random.default_rng(0).random((5, 2))
    assert np.allclose(f(x), 3 * np.cos(2 * np.pi * (x[:, 0] + 2 * x[:, 1])))
    s = FourierObservable.sin_mode((0, 1))
    assert np.allclose(s(x), np.sin(2 * np.pi * x[:, 1]))
    assert np.allclose((f * s)(x), f(x) * s(x))


def test_linear_mode_bookkeeping(cat):
    sp = transfer_spectrum(assemble_transfer_matrix(cat, 6))
    f = mean_subtract(FourierObservable.cos_mode((1, 0)), sp, cat)
    g = mean_subtract(FourierObservable.cos_mode((0, 1)), sp, cat)
    c = correlation_sequence(cat, f, g, 8, spectrum=sp).c
    assert np.all(c[2:] == 0.0)


def test_square_positive(desk, desk_spectrum, desk_observables):
    f, _ = desk_observables
    c = correlation_sequence(desk, f, f, 0, spectrum=desk_spectrum).c
    assert c[0] > 0


def test_mean_checks(desk, desk_spectrum):
    with pytest.raises(NotMeanZero):
        correlation_sequence(desk, FourierObservable.constant(1.0), FourierObservable.constant(1.0), 3,
                             spectrum=desk_spectrum)
    with pytest.raises(NotMeanZero):
        correlation_sequence(desk, FourierObservable.from_dict({}), FourierObservable.from_dict({}), 3,
                             spectrum=desk_spectrum)


def test_operator_needs_spectrum(desk, desk_observables, cat):
    f, g = desk_observables
    with pytest.raises(UntrustedSpectrum):
        correlation_sequence(desk, f, g, 3, "operator")
    other = transfer_spectrum(assemble_transfer_matrix(cat, 4))
    with pytest.raises(UntrustedSpectrum):
        correlation_sequence(desk, f, g, 3, "operator", spectrum=other)


def test_cross_method(desk, operator_series, desk_observables):
    f, g = desk_observables
    traj = correlation_sequence(desk, f, g, 10, "trajectory", seed=42)
    assert np.max(np.abs(traj.c - operator_series.c)) <= 2e-3


def test_time_reversal(desk, desk_observables):
    f, g = desk_observables
    back = backward_correlations(desk, f, g, 10)
    fwd = correlation_sequence(desk, g, f, 10, "trajectory").c
    assert np.max(np.abs(back - fwd)) <= 2e-3


def test_generating_function_basics():
    s = CorrelationSeries(np.array([0.5**n for n in range(40)]), "synthetic", 39)
    assert generating_function(s, 0) == 1.0
    assert generating_function(s, 0.5) == pytest.approx(4 / 3, abs=1e-10)


def test_generating_convergence(sin_series):
    _, s = sin_series
    c = s.c
    assert abs(generating_function(c, 0.8) - generating_function(c[:-5], 0.8)) < 1e-6


def test_resolvent_identity(desk, desk_spectrum, sin_series):
    h, s = sin_series
    for z in (0.8, -0.8, 0.5j):
        assert abs(generating_function(s, z) - resolvent_pairing(desk, h, h, desk_spectrum, z)) <= 1e-6


def test_decay_envelope(sin_series, desk_spectrum):
    rho = fit_decay_rate(sin_series[1])
    assert rho > 1
    assert abs(1 / rho - desk_spectrum.gap) <= 5e-2


def test_white_spectrum():
    s = CorrelationSeries(np.array([0.7, 0.0, 0.0, 0.0]), "synthetic", 3)
    for w in (0.0, 1.0, 2.5):
        v = correlation_spectrum(None, None, None, w, series_fg=s, series_gf=s)
        assert v.value == pytest.approx(0.7)


def test_spectrum_real_for_same_observable(sin_series):
    _, s = sin_series
    for w in np.linspace(0, math.pi, 7):
        v = correlation_spectrum(None, None, None, w, series_fg=s, series_gf=s)
        assert abs(v.value.imag) <= 1e-14 and v.truncation_error < 1e-10


def test_spectrum_vs_trajectory_dft(desk, desk_spectrum, desk_observables):
    f, g = desk_observables
    fg = correlation_sequence(desk, f, g, 20, spectrum=desk_spectrum)
    gf = correlation_sequence(desk, g, f, 20, spectrum=desk_spectrum)
    fwd = correlation_sequence(desk, f, g, 20, "trajectory").c
    bwd = backward_correlations(desk, f, g, 20)
    lags = np.arange(-20, 21)
    two_sided = np.concatenate([bwd[:0:-1], fwd])
    window = np.hanning(len(lags) + 2)[1:-1] / np.hanning(len(lags) + 2)[1:-1].max()
    for w in np.linspace(-math.pi, math.pi, 9):
        dft = np.sum(window * two_sided * np.exp(1j * w * lags))
        v = correlation_spectrum(desk, f, g, w, series_fg=fg, series_gf=gf).value
        assert abs(v - dft) <= 5e-3


def test_pade_geometric():
    p = pade_poles([0.5**n for n in range(12)], 0, 1)
    assert len(p.poles) == 1 and abs(p.poles[0] - 2.0) <= 1e-10


def test_pade_two_modes():
    c = [2 * 0.6**n - 0.5 * (-0.3) ** n for n in range(4)]
    p = pade_poles(c, 1, 2)
    assert np.allclose(sorted(p.poles, key=abs), [1 / 0.6, -1 / 0.3], atol=1e-9)


@given(
    st.lists(st.floats(0.1, 0.9), min_size=1, max_size=3, unique=True),
    st.lists(st.floats(0.5, 2.0), min_size=3, max_size=3),
    st.lists(st.booleans(), min_size=3, max_size=3),
)
@settings(max_examples=50, deadline=None)
def test_pade_rational_exact(mods, amps, signs):
    lams = [m if s else -m for m, s in zip(mods, signs)]
    if len({round(v, 3) for v in lams}) < len(lams):
        return
    lams = sorted(lams, key=abs)
    if len(lams) > 1 and min(abs(a - b) for i, a in enumerate(lams) for b in lams[i + 1 :]) < 0.05:
        return
    M = len(lams)
    c = [sum(a * lam**n for a, lam in zip(amps, lams)) for n in range(2 * M + 4)]
    p = pade_poles(c, M - 1, M)
    want = sorted(1 / np.array(lams), key=abs)
    got = sorted(p.poles, key=abs)
    assert len(got) == M
    assert np.max(np.abs(np.array(got) - want) / np.abs(want)) <= 1e-9


def test_pade_froissart_filter():
    c = [0.5**n for n in range(12)]
    p = pade_poles(c, 4, 4)
    assert len(p.poles) == 1 and abs(p.poles[0] - 2.0) <= 1e-8


def test_pade_degree_check():
    with pytest.raises(ValueError):
        pade_poles([1.0, 0.5, 0.25], 2, 2)


def test_pade_desk_leading_pole(sin_series, desk_spectrum):
    _, s = sin_series
    p = pade_scan(s)
    lead = p.poles[p.trusted][0]
    assert abs(lead * desk_spectrum.trusted_eigenvalues[1] - 1) <= 1e-3


def test_pade_json(sin_series):
    doc = json.loads(pade_scan(sin_series[1]).to_json())
    assert {"poles", "degrees", "condition_estimate"} <= set(doc)


def test_match_all_cat(cat):
    from reslab.determinant import det_coefficients, det_zeros

    sp = transfer_spectrum(assemble_transfer_matrix(cat, 4))
    h = mean_subtract(FourierObservable.sin_mode((0, 1)), sp, cat)
    s = correlation_sequence(cat, h, h, 24, spectrum=sp).with_srb_mode()
    rep = match_all(cat, det_zeros(det_coefficients([1.0] * 10), 5), sp, pade_scan(s, (4, 5, 6)))
    assert len(rep.triples) == 1
    t = rep.triples[0]
    assert t.zero == 1 and t.eigenvalue == 1 and abs(t.pole - 1) <= 1e-12


def test_match_all_empty():
    rep = match_all(None, [], [], None)
    assert rep.triples == [] and rep.unmatched_zeros == [] and rep.unmatched_poles == []
    assert "zero z" in rep.to_markdown()


def test_match_all_desk(desk, desk_gamma, desk_spectrum, sin_series):
    from reslab.determinant import det_coefficients, det_zeros

    _, s = sin_series
    poles = pade_scan(s.with_srb_mode(), (4, 5, 6))
    R = 1 / 0.2137
    rep = match_all(desk, det_zeros(det_coefficients(desk_gamma), R), desk_spectrum, poles, radius=R)
    full = [t for t in rep.full_triples() if abs(t.zero - 1) > 1e-3]
    assert full
    for t in full:
        assert t.zero_eigen_residual <= 1e-2 and t.pole_zero_residual <= 1e-2
    json.loads(rep.to_json())
