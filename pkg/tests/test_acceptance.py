"""Acceptance criteria 1-12, each at its stated tolerance and time limit.

Every test records one ``criterion N: PASS|FAIL`` line; the lines are
repeated in the pytest terminal summary.  Run alone with
``pytest tests/test_acceptance.py -v``.
"""
import math
import time
from importlib import resources
from pathlib import Path

import numpy as np
import pytest
from scipy import integrate

from conftest import ACCEPTANCE_LINES
from stretchblow.certificate import check_hypothesis, issue_certificate, monitor_bound
from stretchblow.cli import run_scenario, run_suite
from stretchblow.polar import ALPHA_SCAN, ConeAngularProfile, dominance_scan, ha_experiment
from stretchblow.simulator import (BlowupThresholds, Scenario, burgers_blowup_time, clm_blowup_time,
                                   dissipation_study, oracle_residual, run)
from stretchblow.spectral import (Grid, SpectralField, adjoint, apply_multiplier, derivative, hilbert,
                                  inner_product, l2_norm, neg_identity, random_field, riesz,
                                  riesz_product, zero_operator)
from stretchblow.weights import catalog_pair, numeric_weight

DATA = resources.files("stretchblow") / "data"
SEED = 20240601


def verdict(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def clm_scenario(weight=True):
    g = Grid.torus(1024)
    return Scenario(g, hilbert(), lambda x: -np.sin(x), 1e-3, 2.5, integrator="rk4",
                    weight_pair=catalog_pair("clm_torus", g) if weight else None,
                    diagnostics=("Linf", "M_functional", "spectral_tail"), sample_every=10)


def test_criterion_01_operator_identities():
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    g1, g2 = Grid.torus(256), Grid.torus(256, ndim=2)
    worst = {}
    h = apply_multiplier(SpectralField.from_function(g1, np.cos), hilbert()).values
    worst["H(cos)=sin"] = np.max(np.abs(h - np.sin(g1.nodes)))
    f = random_field(g1, rng, mean_zero=True)
    hh = apply_multiplier(apply_multiplier(f, hilbert()), hilbert())
    worst["H^2=-Id"] = np.max(np.abs(hh.values + f.values)) / f.sup_norm()
    f2 = random_field(g2, rng, mean_zero=True, below_nyquist=False)
    s = apply_multiplier(f2, riesz_product(1, 1)).values + apply_multiplier(f2, riesz_product(2, 2)).values
    worst["R1^2+R2^2=-Id"] = np.max(np.abs(s + f2.values)) / f2.sup_norm()
    adj = 0.0
    ops = {g1: [derivative(0, 1), hilbert(), neg_identity(1), zero_operator(1)],
           g2: [derivative(0, 2), derivative(1, 2), riesz(1), riesz(2), riesz_product(1, 2),
                riesz_product(1, 1), riesz_product(2, 2), neg_identity(2)]}
    for g, lst in ops.items():
        for op in lst:
            a, b = random_field(g, rng), random_field(g, rng)
            lhs = inner_product(apply_multiplier(a, op), b)
            rhs = inner_product(a, apply_multiplier(b, adjoint(op)))
            adj = max(adj, abs(lhs - rhs) / (l2_norm(a) * l2_norm(b)))
    worst["adjointness"] = adj
    dt = time.perf_counter() - t0
    ok = max(worst.values()) <= 1e-10 and dt < 5
    verdict(1, ok, f"max defect {max(worst.values()):.2e} (tol 1e-10), {dt:.2f}s (< 5s)")


def test_criterion_02_negativity():
    t0 = time.perf_counter()
    g = Grid.torus(256, ndim=2)
    worst = -math.inf
    for seed in range(100):
        f = random_field(g, np.random.default_rng(SEED + seed), below_nyquist=False)
        worst = max(worst, inner_product(apply_multiplier(f, riesz_product(1, 1)), f) / l2_norm(f) ** 2)
    dt = time.perf_counter() - t0
    verdict(2, worst <= 1e-12 and dt < 5, f"max <R1^2 f, f>/|f|^2 = {worst:.3e} (<= 1e-12), {dt:.2f}s (< 5s)")


def test_criterion_03_weight_pairs():
    t0 = time.perf_counter()
    errs = {}
    for name in ("clm_torus", "riesz12_torus", "burgers_line", "clm_line"):
        p = catalog_pair(name)
        w1_exact = p.periodic_w1 or p.w1
        _, w1 = numeric_weight(p.op, p.periodic_w2 or p.w2, p.grid).sample()
        exact = np.broadcast_to(w1_exact(*p.grid.mesh()), p.grid.shape)
        mask = np.ones(p.grid.shape, bool)
        if p.grid.is_line:
            mask = np.abs(p.grid.mesh()[0]) <= p.grid.length / 8
        errs[name] = float(np.max(np.abs(w1 - exact)[mask]) / np.max(np.abs(exact)))
    g = Grid.box(4096, 32.0)
    _, w1 = numeric_weight(derivative(0, 1), lambda x: 1 / (1 + x**2) ** 2, g).sample()
    x = g.nodes
    m = np.abs(x) <= 8
    ex = 4 * x / (1 + x**2) ** 3
    errs["burgers_line_box"] = float(np.max(np.abs(w1 - ex)[m]) / np.max(np.abs(ex)))
    dt = time.perf_counter() - t0
    worst = max(errs.values())
    verdict(3, worst <= 1e-6 and dt < 30, f"max relative W1 error {worst:.2e} (<= 1e-6) over {sorted(errs)}, {dt:.2f}s")


def test_criterion_04_certificate_value():
    t0 = time.perf_counter()
    # oracle: int log(1 - cos x)(1 + cos x) dx / 2pi, with 1 - cos x = 2 sin^2(x/2)
    val, _ = integrate.quad(lambda x: (np.log(2.0) + 2 * np.log(np.abs(np.sin(x / 2)))) * (1 + np.cos(x)),
                            0, 2 * np.pi, points=[np.pi], epsabs=1e-13, epsrel=1e-12, limit=500)
    J_oracle = val / (2 * np.pi)
    p = catalog_pair("clm_torus", Grid.torus(1024))
    cert = issue_certificate(check_hypothesis(SpectralField.from_function(p.grid, lambda x: -np.sin(x)), p))
    dt = time.perf_counter() - t0
    eJ = abs(cert.jensen_integral - J_oracle)
    eT = abs(cert.T_bound - 2 * math.e)
    ok = eJ <= 1e-8 and eT <= 1e-7 and dt < 10
    verdict(4, ok, f"|J - oracle| = {eJ:.1e} (1e-8), |T_bound - 2e| = {eT:.1e} (1e-7), {dt:.2f}s")


def test_criterion_05_certificate_soundness():
    t0 = time.perf_counter()
    g = Grid.torus(1024)
    res_clm = oracle_residual("clm", g, lambda x: -np.sin(x), [0.5, 1.0, 1.5, 1.8])
    res_bur = oracle_residual("burgers", g, np.sin, [0.25, 0.5, 0.75, 0.9], df=np.cos)
    x = g.nodes
    T_clm = clm_blowup_time(-np.sin(x), np.cos(x))
    T_bur = burgers_blowup_time(np.cos, 0.0, 2 * np.pi)
    sc = clm_scenario()
    cert = issue_certificate(check_hypothesis(sc.initial_field(), sc.weight_pair))
    br_clm = run(sc).blowup_bracket
    bur = Scenario(g, derivative(0, 1), np.sin, 1e-3, 1.5, integrator="rk4",
                   thresholds=BlowupThresholds(tail_fraction=1e-4), sample_every=10)
    br_bur = run(bur).blowup_bracket
    dt = time.perf_counter() - t0
    ok = (res_clm <= 1e-6 and res_bur <= 1e-6 and br_clm is not None and 1.8 <= br_clm[0] and br_clm[1] <= 2.2
          and T_clm <= cert.T_bound and br_bur is not None and all(abs(b - T_bur) <= 0.05 * T_bur for b in br_bur)
          and dt < 120)
    verdict(5, ok, f"residuals {res_clm:.1e}/{res_bur:.1e}; CLM bracket [{br_clm[0]:.5f}, {br_clm[1]:.5f}] "
                   f"vs 2, T_bound {cert.T_bound:.5f}; Burgers bracket [{br_bur[0]:.4f}, {br_bur[1]:.4f}] "
                   f"vs {T_bur:.4f}; {dt:.1f}s")


def test_criterion_06_trajectory_bound():
    t0 = time.perf_counter()
    sc = clm_scenario()
    cert = issue_certificate(check_hypothesis(sc.initial_field(), sc.weight_pair))
    tr = run(sc)
    keep = tr.times <= 1.8
    mon = monitor_bound(tr.times[keep], tr.diagnostics["M_functional"][keep], cert.c_star, rtol=1e-3)
    dt = time.perf_counter() - t0
    rel = float(np.min(mon.slack / tr.diagnostics["M_functional"][keep]))
    verdict(6, mon.ok and dt < 120, f"{keep.sum()} samples t <= 1.8, min slack/M = {rel:.3e} (>= -1e-3), {dt:.1f}s")


def test_criterion_07_dissipation():
    t0 = time.perf_counter()
    g = Grid.torus(256, ndim=2)
    w0 = SpectralField.from_function(g, lambda x, y: 1.5 + np.cos(x) * np.cos(y) + 0.3 * np.sin(2 * x + y))
    st = dissipation_study(w0, 0.2, (0.02, 0.01, 0.005, 0.0025), rtol=1e-6)
    dt = time.perf_counter() - t0
    ok = st.observed_order >= 0.9 and st.monotone and dt < 180
    verdict(7, ok, f"residuals {['%.2e' % r for r in st.residuals]}, observed order {st.observed_order:.3f} (>= 0.9), "
                   f"monotone {st.monotone} (1e-6 per step), {dt:.1f}s")


def test_criterion_08_polar_machinery(tmp_path):
    t0 = time.perf_counter()
    rep, code = run_scenario(DATA / "polar_machinery.cfg", tmp_path)
    dt = time.perf_counter() - t0
    checks = rep["checks"]
    detail = ", ".join(f"{k} {v['value']:.1e}" for k, v in sorted(checks.items()))
    ok = code == 0 and len(checks) == 6 and all(c["pass"] for c in checks.values()) and dt < 60
    verdict(8, ok, f"{detail}; {dt:.1f}s (< 60s)")


def test_criterion_09_dominance():
    t0 = time.perf_counter()
    scan = dominance_scan(ALPHA_SCAN, 1.0, 1.0)
    passing = [d for d in scan if d.passes]
    dt = time.perf_counter() - t0
    ok = bool(passing) and passing[0].r[0] <= 1e-6 and passing[0].r[-1] >= 1e6 and dt < 60
    first = passing[0] if passing else None
    detail = (f"passing alpha {first.alpha:g}, min margin {first.min_margin:.3e} at r = {first.argmin:.2e}"
              if first else "no alpha passes")
    verdict(9, ok, f"{detail}; {dt:.1f}s")


def test_criterion_10_sign_experiment():
    t0 = time.perf_counter()
    alpha = next(d.alpha for d in dominance_scan(ALPHA_SCAN, 1.0, 1.0) if d.passes)
    grid = Grid.box(2048, 12.8, ndim=2)
    main = ha_experiment(alpha, ConeAngularProfile.default(center=np.pi / 2), grid=grid)
    ctrl = ha_experiment(alpha, ConeAngularProfile.default(center=0.0), grid=grid)
    ratios = [ha_experiment(a, grid=grid).l2_over_l1 for a in sorted(ALPHA_SCAN, reverse=True)]
    dt = time.perf_counter() - t0
    nonneg = main.relative_min >= -1e-3
    control = ctrl.relative_min <= 10 * main.relative_min if main.relative_min < 0 else ctrl.relative_min < -1e-2
    grows = all(b > a for a, b in zip(ratios, ratios[1:]))
    ok = nonneg and control and grows and dt < 300
    verdict(10, ok, f"alpha {alpha:g}: min R1^2 W/max W = {main.relative_min:.3e} (>= -1e-3: {nonneg}); "
                    f"control {ctrl.relative_min:.3e} (10x more negative: {control}); "
                    f"L2/L1 grows {grows}; {dt:.1f}s")


def test_criterion_11_non_example():
    t0 = time.perf_counter()
    g = Grid.torus(128, ndim=2)
    sc = Scenario(g, neg_identity(2), lambda x, y: (1 + np.cos(x)) * (1 + np.sin(y)) + 0.5 * np.exp(np.cos(x + y)),
                  1e-3, 5.0)
    w0 = sc.initial_field().values
    bad = []
    tr = run(sc, on_sample=lambda t, s: bad.append(not (np.all(s.values >= 0) and np.all(s.values <= w0))))
    dt = time.perf_counter() - t0
    ok = tr.termination == "reached_t_end" and not any(bad) and dt < 30
    verdict(11, ok, f"{len(bad)} samples, violations {sum(bad)}, termination {tr.termination}, {dt:.1f}s")


def test_criterion_12_determinism(tmp_path):
    manifest = DATA / "acceptance.txt"
    run_suite(manifest, tmp_path / "a", seed=SEED, workers=4)
    run_suite(manifest, tmp_path / "b", seed=SEED, workers=4)
    a = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*.csv"))
    b = sorted(p.relative_to(tmp_path / "b") for p in (tmp_path / "b").rglob("*.csv"))
    same = a == b and all((tmp_path / "a" / p).read_bytes() == (tmp_path / "b" / p).read_bytes() for p in a)
    verdict(12, bool(a) and same, f"{len(a)} CSV files compared, bit-identical {same}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
