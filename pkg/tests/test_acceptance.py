"""End-to-end acceptance runs; each test prints one PASS/FAIL line.

Also runnable directly: ``python3 tests/test_acceptance.py``.
"""

import math
import time

import numpy as np
import pytest

from ellipvol.errors import NonPositiveVariance
from ellipvol.linalg import Spectrum
from ellipvol.runner.config import ExperimentConfig, near_identity_spectrum
from ellipvol.runner.experiment import run_experiment, samples_to_csv
from ellipvol.runner.validate import (
    Suite,
    check_exact_identities,
    check_quadratic_forms,
    check_sphere_moments,
)
from ellipvol.sampling import RadialLaw, RandomStream
from ellipvol.stats import classify_regime
from ellipvol.theory import (
    estimate_t_matrix,
    norming_constants,
    simulate_ztilde,
    t_matrix_identity,
    variance_limit,
    ztilde_second_moment,
)


@pytest.fixture
def report(capsys):
    def emit(label, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {label}: {detail}")
        assert ok, detail
    return emit


def _suite_detail(suite, elapsed):
    bad = [c.name for c in suite.checks if not c.passed]
    head = f"{len(suite.checks) - len(bad)}/{len(suite.checks)} checks in {elapsed:.1f} s"
    return head + ("" if not bad else f"; failing: {bad[:3]}")


def test_c1_exact_identities(report):
    suite = Suite()
    t0 = time.perf_counter()
    check_exact_identities(suite)
    dt = time.perf_counter() - t0
    report("criterion 1 exact identities", suite.ok and dt < 30, _suite_detail(suite, dt))


def test_c2_sphere_moments(report):
    suite = Suite()
    t0 = time.perf_counter()
    check_sphere_moments(suite)
    dt = time.perf_counter() - t0
    report("criterion 2 sphere moments", suite.ok and dt < 60, _suite_detail(suite, dt))


def test_c3_t_matrix(report):
    t0 = time.perf_counter()
    n, p = 16, 8
    exact = t_matrix_identity(n, p).values
    est = estimate_t_matrix(Spectrum.identity(n), p, 500, RandomStream(3, 0), renormalize=False)
    z_entry = float(np.max(np.abs(est.values - exact) / est.std_errors))
    near = estimate_t_matrix(near_identity_spectrum(n, 1.0), p, 500, RandomStream(3, 1),
                             renormalize=False)
    z_row = float(np.max(np.abs(near.row_sums - near.row_targets) / near.row_std_errors))
    dt = time.perf_counter() - t0
    ok = z_entry <= 5 and z_row <= 5 and dt < 120
    report("criterion 3 t-matrix", ok,
           f"max entry |z| {z_entry:.2f}, max row-sum |z| {z_row:.2e}, {dt:.1f} s")


def test_c4_norming_convergence(report):
    n = 400
    p = int(0.5 * n)
    nc = norming_constants(Spectrum.identity(n), p, t_matrix_identity(n, p))
    gap = abs(nc.sigma2 - variance_limit(0.5))
    raised = False
    try:
        norming_constants(Spectrum.identity(4), 2, t_matrix_identity(4, 2))
    except NonPositiveVariance:
        raised = True
    report("criterion 4 norming constants", gap <= 0.02 and raised,
           f"sigma^2 {nc.sigma2:.6f}, limit {variance_limit(0.5):.6f}, gap {gap:.4f}; "
           f"n=4 p=2 raises NonPositiveVariance: {raised}")


def _clt_line(rep):
    g = rep.gof
    return (f"KS p {g.ks_p_value:.3f}, mean {g.mean:+.4f}, var {g.variance:.4f}, "
            f"{sum(rep.timings.values()):.1f} s")


def _clt_ok(rep, limit):
    g = rep.gof
    return (g.ks_p_value > 0.01 and abs(g.mean) <= 0.15 and abs(g.variance - 1) <= 0.25
            and sum(rep.timings.values()) < limit)


@pytest.mark.slow
def test_c5_main_clt_identity(report):
    cfg = ExperimentConfig(n=300, p=150, replicates=1000, master_seed=2024, threads=4)
    rep = run_experiment(cfg)
    ok = rep.regime.regime == "NormalLimit" and _clt_ok(rep, 300)
    report("criterion 5 CLT identity spectrum", ok, _clt_line(rep))


@pytest.mark.slow
def test_c5_main_clt_near_identity(report):
    cfg = ExperimentConfig(n=300, p=150, replicates=1000, master_seed=2025, threads=4,
                           spectrum_spec={"kind": "near_identity", "c": 1.0}, mc_draws=200)
    rep = run_experiment(cfg)
    ok = rep.regime.regime == "NormalLimit" and _clt_ok(rep, 1200)
    report("criterion 5 CLT near-identity spectrum", ok, _clt_line(rep))


@pytest.mark.slow
def test_c6_stable_regime(report):
    cfg = ExperimentConfig(n=300, p=150, replicates=1000, master_seed=7, threads=4,
                           radial_spec={"kind": "LogCauchy", "location": 0.0, "scale": 1.0})
    rep = run_experiment(cfg)
    # the runner's fit is a two-sample KS against 10 x 1000 reference draws
    ks = rep.gof
    ok = (rep.regime.regime == "StableLimit" and rep.regime.alpha == 1
          and ks.reference == "StableTwoSample(1)" and ks.ks_p_value > 0.01)
    report("criterion 6 stable regime", ok,
           f"{rep.regime.regime}({rep.regime.alpha:g}), KS p {ks.ks_p_value:.3f}")


def test_c6_normal_regime(report):
    r = classify_regime(RadialLaw.degenerate(), 150, 0.6)
    report("criterion 6 normal regime", r.regime == "NormalLimit",
           f"Degenerate1 -> {r.regime} (CLT itself checked under criterion 5)")


@pytest.mark.slow
def test_c6_mixed_regime(report):
    n, p = 300, 150
    sigma = norming_constants(Spectrum.identity(n), p, t_matrix_identity(n, p)).sigma
    sd = (sigma / 2) / math.sqrt(p)
    cfg = ExperimentConfig(n=n, p=p, replicates=1000, master_seed=8, threads=4,
                           radial_spec={"kind": "LogNormal", "mean": 0.0, "sd": sd})
    rep = run_experiment(cfg)
    tau = rep.regime.tau
    ks = rep.gof
    ok = rep.regime.regime == "Mixed" and abs(tau - 1) < 1e-12 and ks.ks_p_value > 0.01
    report("criterion 6 mixed regime", ok,
           f"{rep.regime.regime}(tau={tau:.6f}), KS p {ks.ks_p_value:.3f}, var {ks.variance:.3f}")


@pytest.mark.slow
def test_c7_ztilde(report):
    n = 60
    spec = Spectrum.identity(n)
    parts = []
    ok = True
    for i in (1, 10, 29):
        res = simulate_ztilde(spec, i, 5000, RandomStream(60, i))
        z = res["z"]
        m = z.size
        z_mean = z.mean() / (z.std(ddof=1) / math.sqrt(m))
        theo = ztilde_second_moment(n, float(res["tr_q2"].mean()), float(res["tr_q"].var(ddof=1))).value
        z2 = z * z
        z_second = (z2.mean() - theo) / (z2.std(ddof=1) / math.sqrt(m))
        ok &= abs(z_mean) <= 5 and abs(z_second) <= 5
        parts.append(f"i={i}: mean |z| {abs(z_mean):.2f}, 2nd-moment |z| {abs(z_second):.2f}")
    report("criterion 7 Z-tilde moments", ok, "; ".join(parts))


def test_c8_quadratic_forms(report):
    suite = Suite()
    t0 = time.perf_counter()
    check_quadratic_forms(suite)
    dt = time.perf_counter() - t0
    report("criterion 8 quadratic-form moments", suite.ok,
           f"max |z| {suite.checks[0].measured:.2f}, {dt:.1f} s")


def test_c9_determinism(report):
    base = dict(n=80, p=40, replicates=200, master_seed=99,
                spectrum_spec={"kind": "near_identity", "c": 1.0}, mc_draws=50,
                radial_spec={"kind": "LogNormal", "mean": 0.0, "sd": 0.05})
    csvs = [samples_to_csv(run_experiment(ExperimentConfig(threads=t, **base)).samples)
            for t in (1, 4)]
    same = csvs[0].encode() == csvs[1].encode()
    report("criterion 9 determinism", same, f"CSV byte-identical across threads 1 and 4: {same}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
