import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from stretchblow.certificate import (CertificateRefused, HypothesisReport, check_hypothesis,
                                     issue_certificate, monitor_bound)
from stretchblow.simulator import burgers_blowup_time, numeric_derivative
from stretchblow.spectral import Grid, SpectralField
from stretchblow.weights import catalog_pair

CLM = catalog_pair("clm_torus")


def clm_J_oracle():
    val, _ = integrate.quad(lambda x: (np.log(2.0) + 2 * np.log(np.abs(np.sin(x / 2)))) * (1 + np.cos(x)), 0, 2 * np.pi,
                            points=[np.pi], epsabs=1e-13, epsrel=1e-12, limit=500)
    return val / (2 * np.pi)


def report(J, **kw):
    base = dict(sign_ok=True, pairing=1.0, jensen_integral=J, integrable=True)
    base.update(kw)
    return HypothesisReport(**base)


def test_oracle_value_itself():
    assert clm_J_oracle() == pytest.approx(-1 - math.log(2), abs=1e-12)


def test_clm_torus_J():
    rep = check_hypothesis(SpectralField.from_function(CLM.grid, lambda x: -np.sin(x)), CLM)
    assert rep.sign_ok and rep.integrable
    assert abs(rep.jensen_integral - clm_J_oracle()) <= 1e-8
    assert rep.pairing == pytest.approx(0.5, rel=1e-12)  # int sin^2 / 2pi


def test_clm_torus_wrong_sign_refused():
    rep = check_hypothesis(SpectralField.from_function(CLM.grid, np.sin), CLM)
    assert not rep.sign_ok
    with pytest.raises(CertificateRefused) as exc:
        issue_certificate(rep)
    assert exc.value.condition == "sign"


def test_zero_data_refused_on_pairing():
    rep = check_hypothesis(SpectralField.from_function(CLM.grid, lambda x: 0 * x), CLM)
    assert rep.pairing == 0.0
    with pytest.raises(CertificateRefused) as exc:
        issue_certificate(rep)
    assert exc.value.condition == "pairing"


def burgers_data(x):
    return 4 * x / (1 + x**2) ** 3 * np.exp(-x**2)


def test_burgers_line_certificate_against_quadrature():
    # on |x| <= 16 nothing underflows, so the comparison isolates the quadrature
    p = catalog_pair("burgers_line", Grid.box(2048, 16.0))
    rep = check_hypothesis(SpectralField.from_function(p.grid, burgers_data), p)
    assert rep.sign_ok and rep.integrable
    L = p.grid.length / 2
    mass, _ = integrate.quad(p.w2, -L, L, epsabs=0, epsrel=1e-13, limit=400)
    # log(w0 W1 / W2) = log(16 x^2 exp(-x^2) / (1 + x^2)^4)
    f = lambda x: (np.log(16 * x * x) - x * x - 4 * np.log1p(x * x)) * p.w2(x) / mass
    J, _ = integrate.quad(f, 0, L, epsabs=1e-13, epsrel=1e-12, limit=800)
    assert rep.jensen_integral == pytest.approx(2 * J, abs=1e-6)
    cert = issue_certificate(rep)
    # soundness: characteristics cross before the certified time
    T = burgers_blowup_time(numeric_derivative(burgers_data), -L, L)
    assert T <= cert.T_bound


def test_clm_soundness():
    cert = issue_certificate(check_hypothesis(SpectralField.from_function(CLM.grid, lambda x: -np.sin(x)), CLM))
    assert 2.0 <= cert.T_bound


@pytest.mark.parametrize("J, c, T", [(-1 - math.log(2), 1 / (2 * math.e), 2 * math.e),
                                     (0.0, 1.0, 1.0), (-math.log(2), 0.5, 2.0)])
def test_issue_certificate_values(J, c, T):
    cert = issue_certificate(report(J))
    assert cert.c_star == math.exp(J)
    assert cert.c_star == pytest.approx(c, rel=1e-15) and cert.T_bound == pytest.approx(T, rel=1e-15)
    assert cert.T_bound * cert.c_star == pytest.approx(1.0, rel=1e-15)


def test_integrability_refusal():
    with pytest.raises(CertificateRefused) as exc:
        issue_certificate(report(float("nan"), integrable=False))
    assert exc.value.condition == "integrability"


def test_monitor_equality_case():
    c = 0.3
    t = np.linspace(0, 3, 31)
    mon = monitor_bound(t, c / (1 - c * t), c)
    assert mon.ok and np.max(np.abs(mon.slack)) <= 1e-14


def test_monitor_flags_constant_series():
    mon = monitor_bound([0.0, 0.5], [0.25, 0.25], 0.5)
    assert not mon.ok and mon.violations[0] == 0


def test_monitor_rejects_times_past_bound():
    with pytest.raises(ValueError):
        monitor_bound([0.0, 2.5], [1.0, 1.0], 0.5)


def test_J_resolution_convergence():
    Js = []
    for n in (256, 512):
        g = Grid.torus(n)
        Js.append(check_hypothesis(SpectralField.from_function(g, lambda x: -np.sin(x)),
                                   catalog_pair("clm_torus", g)).jensen_integral)
    assert abs(Js[0] - Js[1]) <= 1e-6 * abs(Js[1])


def test_riesz12_torus_certificate_converges():
    p = catalog_pair("riesz12_torus")
    w0 = SpectralField.from_function(p.grid, lambda x, y: np.sin(x) * np.sin(y))
    rep = check_hypothesis(w0, p)
    assert rep.sign_ok and rep.integrable and rep.pairing > 0


@given(st.floats(0.1, 6.0), st.floats(0.05, 0.5))
def test_flipping_sign_on_a_set_refuses(center, width):
    g = CLM.grid
    def f(x):
        flip = np.abs(np.angle(np.exp(1j * (x - center)))) < width
        return np.where(flip, 1.0, -1.0) * (-np.sin(x)) + 0 * x
    rep = check_hypothesis(SpectralField(g, f(g.nodes), f), CLM)
    x = g.nodes
    hit = (np.abs(np.angle(np.exp(1j * (x - center)))) < width) & (np.abs(np.sin(x)) > 1e-6)
    if hit.any():
        assert not rep.sign_ok


def test_report_serializes_tolerances():
    rep = check_hypothesis(SpectralField.from_function(CLM.grid, lambda x: -np.sin(x)), CLM)
    d = rep.to_dict()
    for key in ("sign_tolerance", "log_floor", "convergence_tolerance", "clip_stability_tolerance", "grid"):
        assert key in d


def test_underflowed_data_is_clipped_and_reported():
    p = catalog_pair("burgers_line")  # box half-width 32: exp(-x^2) underflows near the edges
    rep = check_hypothesis(SpectralField.from_function(p.grid, burgers_data), p)
    assert rep.sign_ok and rep.integrable and any(rep.clipped_nodes)
    assert any("clipped" in n for n in rep.notes)
