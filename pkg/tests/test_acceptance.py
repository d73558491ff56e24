"""Acceptance suite: every criterion prints one PASS/FAIL line.

Heavy Monte Carlo criteria run at their stated replicate counts and use
process-level parallelism; all randomness is counter-derived from fixed
master seeds, so results are reproducible run to run.
"""

import math
import os
import time
from fractions import Fraction

import numpy as np
from scipy.optimize import brentq
from scipy.stats import beta as beta_dist
from scipy.stats import multivariate_normal, norm

from auxtrial.data import TrialDataset
from auxtrial.experiments import MethodSpec, simulate_groupseq_oc, simulate_multitest_oc
from auxtrial.groupseq import boundary_thresholds, hsd_spending, posterior_sample
from auxtrial.multitest import (WeightedBonfConfig, auxiliary_augmented_test,
                                bonferroni_test, enumerate_single_patient_rules, holm_test)
from auxtrial.presets import (default_prior, default_sequential_design,
                              sequential_scenario, subgroup_scenario)
from auxtrial.prior import hermite_rule, prior_predictive_report
from auxtrial.scenarios import solve_joint
from auxtrial.utility import MultitestUtilityEngine, UtilitySpec, optimize_params

WORKERS = min(8, os.cpu_count() or 1)


def report(criterion, ok, detail):
    print(f"ACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'} - {detail}")
    return ok


def test_criterion_01_exact_enumeration():
    start = time.perf_counter()
    rows = enumerate_single_patient_rules()
    by_label = {r.label: r for r in rows}
    utilities = {
        "Y": Fraction(299, 800), "Y*S": Fraction(399, 800),
        "Y*(1-S)": Fraction(-1, 8), "never": Fraction(0),
    }
    checks = [abs(float(by_label[k].expected_utility) - float(v)) <= 1e-10
              for k, v in utilities.items()]
    n_valid = sum(r.level_valid for r in rows)
    elapsed = time.perf_counter() - start
    ok = all(checks) and n_valid == 4 and elapsed < 1.0
    assert report("01 exact-enumeration",
                  ok, f"utilities {[float(by_label[k].expected_utility) for k in utilities]}, "
                      f"{n_valid} level-valid rules, {elapsed:.3f}s")


def _multitest_run(kind, ratios, replicates, seed, groups=2, beta=4.45,
                   extra_methods=()):
    methods = [MethodSpec("auxiliary-augmented", beta=beta), MethodSpec("bonferroni"),
               MethodSpec("holm"), MethodSpec("auxiliary-only"), *extra_methods]
    out = {}
    for ratio in ratios:
        scenario = subgroup_scenario(kind, ratio, groups)
        records = simulate_multitest_oc([scenario], methods, 0.05, replicates,
                                        seed + int(ratio), WORKERS)
        out[ratio] = {r.method: r for r in records}
    return out


def test_criterion_02_scenario2_rejections_and_fwer():
    targets_aa = {1: 0.039, 2: 0.036, 10: 0.041}
    targets_bf = {1: 0.029, 2: 0.025, 10: 0.028}
    targets_fwer = {1: 0.052, 2: 0.053, 10: 0.058}
    runs = _multitest_run(2, (1, 2, 10), 5000, 1200)
    fails = []
    for ratio in (1, 2, 10):
        aa = runs[ratio]["auxiliary-augmented"]
        bf = runs[ratio]["bonferroni"]
        if abs(aa.group_rejection[0] - targets_aa[ratio]) > 0.012:
            fails.append(f"AA H01 R={ratio}: {aa.group_rejection[0]:.4f}")
        if abs(bf.group_rejection[0] - targets_bf[ratio]) > 0.012:
            fails.append(f"Bonf H01 R={ratio}: {bf.group_rejection[0]:.4f}")
        if abs(aa.fwer - targets_fwer[ratio]) > 0.012:
            fails.append(f"AA FWER R={ratio}: {aa.fwer:.4f}")
    detail = "; ".join(
        f"R={r}: AA {runs[r]['auxiliary-augmented'].group_rejection[0]:.3f}/"
        f"FWER {runs[r]['auxiliary-augmented'].fwer:.3f}/"
        f"Bonf {runs[r]['bonferroni'].group_rejection[0]:.3f}" for r in (1, 2, 10))
    test_criterion_02_scenario2_rejections_and_fwer.cache = runs
    assert report("02 multitest-scenario2", not fails, detail + (f" | {fails}" if fails else ""))


def test_criterion_03_auxiliary_only_fwer():
    runs = getattr(test_criterion_02_scenario2_rejections_and_fwer, "cache", None)
    if runs is None:
        runs = _multitest_run(2, (1, 2, 10), 5000, 1200)
    targets = {1: 0.825, 2: 0.825, 10: 0.830}
    vals = {r: runs[r]["auxiliary-only"].fwer for r in (1, 2, 10)}
    ok = all(abs(vals[r] - targets[r]) <= 0.02 for r in (1, 2, 10))
    assert report("03 auxiliary-only-fwer", ok,
                  "; ".join(f"R={r}: {vals[r]:.3f} (target {targets[r]})" for r in vals))


def test_criterion_04_scenario4_gain():
    runs = _multitest_run(4, (1,), 5000, 1400)
    aa = runs[1]["auxiliary-augmented"].group_rejection[0]
    bf = runs[1]["bonferroni"].group_rejection[0]
    gain = aa - bf
    ok = abs(gain - 0.07) <= 0.025
    assert report("04 scenario4-gain", ok, f"AA {aa:.3f} - Bonferroni {bf:.3f} = {gain:.3f}")


def test_criterion_05_six_group_suite():
    reps = 2000  # spec allows 2000 with the widened 0.03 tolerance
    runs4 = _multitest_run(4, (1,), reps, 1500, groups=6, beta=11.4)
    runs5 = _multitest_run(5, (1,), reps, 1600, groups=6, beta=11.4)
    vals = {
        "scn4 AA": (runs4[1]["auxiliary-augmented"].group_rejection[0], 0.799),
        "scn4 Holm": (runs4[1]["holm"].group_rejection[0], 0.631),
        "scn5 AA": (runs5[1]["auxiliary-augmented"].group_rejection[0], 0.276),
        "scn5 Holm": (runs5[1]["holm"].group_rejection[0], 0.633),
    }
    ok = all(abs(v - t) <= 0.03 for v, t in vals.values())
    assert report("05 six-group-suite", ok,
                  "; ".join(f"{k}: {v:.3f} (target {t})" for k, (v, t) in vals.items()))


def test_criterion_06_bootstrap_calibration():
    reps = 1000
    cal = MethodSpec("auxiliary-augmented", beta=11.4, calibrate=True, bootstrap_samples=2000)
    fails = []
    fwer_detail = []
    uncal_at_100 = None
    for ratio in (15, 20, 50, 100):
        scenario = subgroup_scenario(1, ratio, 6)
        records = simulate_multitest_oc(
            [scenario], [MethodSpec("auxiliary-augmented", beta=11.4), cal],
            0.05, reps, 1700 + ratio, WORKERS)
        by = {r.method: r for r in records}
        mcse = math.sqrt(0.05 * 0.95 / reps)
        cal_fwer = by["auxiliary-augmented-calibrated"].fwer
        unc_fwer = by["auxiliary-augmented"].fwer
        fwer_detail.append(f"R={ratio}: uncal {unc_fwer:.3f} cal {cal_fwer:.3f}")
        if cal_fwer > 0.05 + 3 * mcse:
            fails.append(f"calibrated FWER at R={ratio}: {cal_fwer:.4f}")
        if ratio == 100:
            uncal_at_100 = unc_fwer
    if uncal_at_100 is not None and uncal_at_100 <= 0.05:
        fails.append(f"uncalibrated FWER at R=100 not inflated: {uncal_at_100:.4f}")

    # power cost of calibration on the two-group effect scenarios
    cost_detail = []
    cal2 = MethodSpec("auxiliary-augmented", beta=4.45, calibrate=True, bootstrap_samples=2000)
    for ratio, bound in ((1, 0.01), (10, 0.04)):
        for kind in (3, 4):
            scenario = subgroup_scenario(kind, ratio, 2)
            records = simulate_multitest_oc(
                [scenario], [MethodSpec("auxiliary-augmented", beta=4.45), cal2],
                0.05, 2000, 1800 + 10 * kind + ratio, WORKERS)
            by = {r.method: r for r in records}
            cost = (by["auxiliary-augmented"].group_rejection[0]
                    - by["auxiliary-augmented-calibrated"].group_rejection[0])
            cost_detail.append(f"scn{kind} R={ratio}: {cost:+.4f}")
            if cost > bound + 0.011:  # binomial MC allowance at 2000 replicates
                fails.append(f"power cost scn{kind} R={ratio}: {cost:.4f} > {bound}")
    assert report("06 bootstrap-calibration", not fails,
                  "; ".join(fwer_detail + cost_detail) + (f" | {fails}" if fails else ""))


def test_criterion_07_prior_predictive_report():
    hyper = default_prior(2, spike_prob=0.9)
    rep = prior_predictive_report(hyper, 200, [0.6, 0.4], 5000, 2024)
    vals = {
        "P(Y|SOC)": (rep.rows["proportion_primary_soc"]["mean"], 0.238, 0.01),
        "P(S|SOC)": (rep.rows["proportion_auxiliary_soc"]["mean"], 0.349, 0.01),
        "corr(Y,S)": (rep.rows["outcome_correlation"]["mean"], 0.138, 0.02),
        "TE-corr": (rep.te_correlation, 0.29, 0.04),
    }
    ok = all(abs(v - t) <= tol for v, t, tol in vals.values())
    assert report("07 prior-predictive", ok,
                  "; ".join(f"{k}: {v:.3f} (target {t}±{tol})" for k, (v, t, tol) in vals.items()))


def test_criterion_08_utility_optimization():
    hyper = default_prior(2, spike_prob=0.1)
    engine = MultitestUtilityEngine(alpha=0.05, n_total=200, prevalence=[0.6, 0.4])
    results = {}
    for lam, lo, hi in ((0.5, 3.0, 6.0), (1.0, 2.7, 4.7)):
        curve = optimize_params("grid", [(0.0, 20.0)], hyper,
                                UtilitySpec(kind="multitest", penalty=lam), engine,
                                replicates=5000, seed=2100, grid_size=41)
        argmax = float(curve.argmax_param[0])
        zero_idx = 0
        diff = curve.argmax_value - curve.smoothed[zero_idx]
        combined_se = math.sqrt(curve.se[zero_idx] ** 2
                               + curve.se[int(np.argmax(curve.smoothed))] ** 2)
        results[lam] = (argmax, lo <= argmax <= hi, diff, combined_se)
    interval_ok = results[0.5][1] and results[1.0][1]
    margin_ok = results[0.5][2] > 2 * results[0.5][3]
    detail = (f"lambda=0.5 argmax {results[0.5][0]:.2f} (band [3,6]), "
              f"U(argmax)-U(0)={results[0.5][2]:.4f} vs 2se={2 * results[0.5][3]:.4f}; "
              f"lambda=1.0 argmax {results[1.0][0]:.2f} (band [2.7,4.7])")
    assert report("08 utility-optimization", interval_ok and margin_ok, detail)


def test_criterion_09_boundary_computation():
    # single look
    one = boundary_thresholds((200,), 2.0, 0.05)
    ok1 = abs(one.thresholds[0] - 1.6449) <= 1e-4

    # two looks: first threshold from the spending closed form, second from
    # an independent bivariate-normal quadrature oracle
    two = boundary_thresholds((100, 200), 2.0, 0.05)
    abar1 = hsd_spending(0.5, 2.0, 0.05)
    z1_oracle = float(norm.isf(abar1))
    ok2 = abs(two.thresholds[0] - z1_oracle) <= 1e-4
    rho = math.sqrt(0.5)

    def crossing(z2):
        joint = multivariate_normal.cdf([z1_oracle, z2], mean=[0, 0],
                                        cov=[[1, rho], [rho, 1]])
        return norm.cdf(z1_oracle) - joint - (0.05 - abar1)

    z2_oracle = brentq(crossing, 0.5, 5.0, xtol=1e-12)
    ok3 = abs(two.thresholds[1] - z2_oracle) <= 1e-4

    # global-null crossing probability by large-scale Gaussian simulation
    rng = np.random.default_rng(0)
    total = 20_000_000
    crossed = 0
    for _ in range(20):
        q1 = rng.standard_normal(total // 20)
        q2 = rho * q1 + math.sqrt(1 - rho * rho) * rng.standard_normal(total // 20)
        crossed += int(np.sum((q1 > two.thresholds[0])
                              | ((q1 <= two.thresholds[0]) & (q2 > two.thresholds[1]))))
    rate = crossed / total
    ok4 = abs(rate - 0.05) <= 2e-4
    assert report("09 boundary-computation", ok1 and ok2 and ok3 and ok4,
                  f"z(T=1)={one.thresholds[0]:.5f}; z1={two.thresholds[0]:.5f} "
                  f"(oracle {z1_oracle:.5f}); z2={two.thresholds[1]:.5f} "
                  f"(oracle {z2_oracle:.5f}); null crossing {rate:.5f}")


def test_criterion_10_sequential_table():
    reps = 1000
    hyper = default_prior(1, spike_prob=0.1)
    aa = default_sequential_design()
    ao = default_sequential_design("auxiliary-only")
    cells = [
        ("scn1 AA", sequential_scenario(1, 1), aa,
         dict(power=(0.048, 0.02), expected_n=(107.6, 6.0))),
        ("scn2 AuxOnly", sequential_scenario(2, 1), ao, dict(power=(0.958, 0.02))),
        ("scn4 AA", sequential_scenario(4, 1), aa,
         dict(power=(0.892, 0.03), expected_n=(130.7, 6.0))),
        ("scn5 AA", sequential_scenario(5, 1), aa,
         dict(power=(0.519, 0.04), expected_n=(101.0, 4.0), interim=(0.511, 0.05))),
    ]
    fails, details = [], []
    for i, (label, scenario, design, targets) in enumerate(cells):
        record = simulate_groupseq_oc([scenario], [design], hyper, reps,
                                      3000 + i, WORKERS)[0]
        got = dict(power=record.power, expected_n=record.expected_n,
                   interim=record.interim)
        details.append(f"{label}: power {record.power:.3f} interim {record.interim:.3f} "
                       f"E[N] {record.expected_n:.1f}")
        for key, (target, tol) in targets.items():
            if abs(got[key] - target) > tol:
                fails.append(f"{label} {key}={got[key]:.3f} (target {target}±{tol})")
    assert report("10 sequential-table", not fails,
                  "; ".join(details) + (f" | {fails}" if fails else ""))


def _posterior_grid_oracle(patients, hyper, n=40):
    """Dense grid integration of the joint-model posterior (both mixture
    components), marginal means and spike probability."""
    nodes, weights = hermite_rule(hyper.gh_nodes)

    def cell_prob(eta_y, eta_s, y, s):
        py = 1 / (1 + np.exp(-(eta_y[..., None] + nodes)))
        ps = 1 / (1 + np.exp(-(eta_s[..., None] + nodes)))
        return ((py if y else 1 - py) * (ps if s else 1 - ps)) @ weights

    zy0 = np.linspace(-4.0, 1.0, n)
    zs0 = np.linspace(-3.3, 1.7, n)
    zs1 = np.linspace(-3.8, 3.8, n)
    cy = np.linspace(5e-4, 1 - 5e-4, n)
    d = lambda v: float(v[1] - v[0])
    p_zy0 = norm.pdf(zy0, hyper.intercept_y_mean[0], hyper.intercept_y_sd[0]) * d(zy0)
    p_zs0 = norm.pdf(zs0, hyper.intercept_s_mean[0], hyper.intercept_s_sd[0]) * d(zs0)
    p_zs1 = norm.pdf(zs1, hyper.slab_mean[0], math.sqrt(hyper.slab_var[0])) * d(zs1)
    p_cy = beta_dist.pdf(cy, hyper.beta_shape_v[0], hyper.beta_shape_o[0]) * d(cy)
    xi = hyper.spike_prob

    base0 = np.ones((n, n))
    for c, y, s in patients:
        base0 *= cell_prob(zy0[:, None] + 0 * zs0, 0 * zy0[:, None] + zs0[None, :], y, s)
    base0 *= p_zy0[:, None] * p_zs0[None, :]
    w0 = xi * base0.sum()
    acc = dict(zy0=xi * (base0.sum(1) * zy0).sum(), zs0=xi * (base0.sum(0) * zs0).sum(),
               zs1=0.0, cy=w0 * float((p_cy * cy).sum() / p_cy.sum()))
    w1 = 0.0
    for i3, v3 in enumerate(zs1):
        for i4, v4 in enumerate(cy):
            lik = np.ones((n, n))
            for c, y, s in patients:
                lik *= cell_prob(zy0[:, None] + v4 * v3 * c + 0 * zs0,
                                 0 * zy0[:, None] + zs0[None, :] + v3 * c, y, s)
            wgt = (1 - xi) * p_zs1[i3] * p_cy[i4] * lik * p_zy0[:, None] * p_zs0[None, :]
            tot = wgt.sum()
            w1 += tot
            acc["zy0"] += (wgt.sum(1) * zy0).sum()
            acc["zs0"] += (wgt.sum(0) * zs0).sum()
            acc["zs1"] += tot * v3
            acc["cy"] += tot * v4
    z = w0 + w1
    return {"spike": w0 / z, "zy0": acc["zy0"] / z, "zs0": acc["zs0"] / z,
            "zs1": acc["zs1"] / z, "cy": acc["cy"] / z}


def test_criterion_11_posterior_oracle():
    hyper = default_prior(1, spike_prob=0.9)
    fails, details = [], []
    for label, patients in (("1-patient", [(1, 1, 0)]),
                            ("3-patient", [(1, 1, 1), (0, 0, 1), (1, 0, 0)])):
        oracle = _posterior_grid_oracle(patients, hyper)
        data = TrialDataset(
            group=np.zeros(len(patients), dtype=int),
            arm=np.array([p[0] for p in patients]),
            primary=np.array([p[1] for p in patients]),
            auxiliary=np.array([p[2] for p in patients]),
            enroll_order=np.arange(len(patients)),
            primary_observed=np.ones(len(patients), dtype=bool), k_count=1)
        post = posterior_sample(data, hyper, draws=80000, seed=42, burn=5000)
        got = {"spike": float(post.spike_probability()[0]),
               "zy0": float(post.intercept_y.mean()), "zs0": float(post.intercept_s.mean()),
               "zs1": float(post.slope_s.mean()), "cy": float(post.c_y.mean())}
        for key in ("zy0", "zs0", "zs1", "cy"):
            if abs(got[key] - oracle[key]) > 0.02:
                fails.append(f"{label} {key}: {got[key]:.4f} vs oracle {oracle[key]:.4f}")
        if abs(got["spike"] - oracle["spike"]) > 0.03:
            fails.append(f"{label} spike: {got['spike']:.4f} vs {oracle['spike']:.4f}")
        details.append(f"{label} max |err| "
                       f"{max(abs(got[k] - oracle[k]) for k in got):.4f}")
    assert report("11 posterior-oracle", not fails,
                  "; ".join(details) + (f" | {fails}" if fails else ""))


def test_criterion_12_property_suite():
    from auxtrial.multitest import softmax_weights
    from auxtrial.cli import main as cli_main
    import tempfile
    import yaml

    start = time.perf_counter()
    rng = np.random.default_rng(99)
    ok = True
    notes = []

    # softmax normalization and shift invariance
    for _ in range(500):
        k = int(rng.integers(1, 7))
        beta = float(rng.normal(0, 5))
        sbar = rng.normal(0, 0.5, k)
        w = softmax_weights(np.full(k, beta), sbar)
        shifted = softmax_weights(np.full(k, beta), sbar + float(rng.normal()))
        if abs(w.sum() - 1) > 1e-12 or not np.allclose(w, shifted, atol=1e-12):
            ok = False
    notes.append("softmax")

    # beta=0 equals Bonferroni on 1e5 random inputs
    from conftest import make_summary
    config = WeightedBonfConfig(alpha=0.05, beta=0.0)
    mismatch = 0
    n_inputs = 100_000
    ks = rng.integers(1, 5, n_inputs)
    pvs = rng.random(n_inputs * 4)
    sbars = rng.normal(0, 0.3, n_inputs * 4)
    pos = 0
    for i in range(n_inputs):
        k = int(ks[i])
        summaries = [make_summary(group=j, pvalue=float(pvs[pos + j]),
                                  sbar=float(sbars[pos + j])) for j in range(k)]
        pos += k
        aa = auxiliary_augmented_test(summaries, config)
        bf = bonferroni_test(summaries, 0.05)
        if [d.reject for d in aa] != [d.reject for d in bf]:
            mismatch += 1
    ok = ok and mismatch == 0
    notes.append(f"beta0-equivalence ({mismatch} mismatches)")

    # Holm rejections contain Bonferroni rejections
    holm_ok = True
    for _ in range(3000):
        k = int(rng.integers(1, 7))
        summaries = [make_summary(group=j, pvalue=float(rng.random() * 0.15))
                     for j in range(k)]
        bf = bonferroni_test(summaries, 0.05)
        hm = holm_test(summaries, 0.05)
        if any(b.reject and not h.reject for b, h in zip(bf, hm)):
            holm_ok = False
    ok = ok and holm_ok
    notes.append("holm-dominance")

    # joint-cell odds-ratio round trip
    joint_ok = True
    for p_y in np.linspace(0.05, 0.95, 5):
        for p_s in np.linspace(0.05, 0.95, 5):
            for ratio in (0.1, 0.5, 1.0, 2.0, 10.0, 100.0):
                cell = solve_joint(float(p_y), float(p_s), ratio)
                if abs(cell.odds_ratio - ratio) / ratio > 1e-8:
                    joint_ok = False
    ok = ok and joint_ok
    notes.append("joint-round-trip")

    # spending endpoints and continuity at zero shape
    spend_ok = (hsd_spending(0.0, 2.0, 0.05) == 0.0
                and abs(hsd_spending(1.0, 2.0, 0.05) - 0.05) < 1e-12
                and abs(hsd_spending(0.3, 1e-6, 0.05) - 0.015) < 1e-6
                and abs(hsd_spending(0.3, -1e-6, 0.05) - 0.015) < 1e-6)
    ok = ok and spend_ok
    notes.append("spending")

    # determinism across worker counts
    cfg = {
        "mode": "multitest-sim", "seed": 5150, "replicates": 400,
        "scenarios": [{"preset": {"family": "subgroup", "kind": 4, "odds_ratio": 2}}],
        "methods": [{"name": "auxiliary-augmented", "beta": 4.45}, {"name": "holm"}],
    }
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "cfg.yaml")
        with open(path, "w") as fh:
            yaml.safe_dump(cfg, fh)
        out1, out2 = os.path.join(tmp, "a"), os.path.join(tmp, "b")
        cli_main(["simulate", "--config", path, "--workers", "1", "--out", out1])
        cli_main(["simulate", "--config", path, "--workers", str(max(2, WORKERS)), "--out", out2])
        with open(os.path.join(out1, "results.csv"), "rb") as fh:
            bytes1 = fh.read()
        with open(os.path.join(out2, "results.csv"), "rb") as fh:
            bytes2 = fh.read()
    ok = ok and bytes1 == bytes2
    notes.append("worker-determinism")

    elapsed = time.perf_counter() - start
    ok = ok and elapsed < 60.0
    assert report("12 property-suite", ok, f"{', '.join(notes)}; {elapsed:.1f}s")


def test_retro_harness_null_type_i():
    # synthetic-pool end-to-end run of the resample-with-perturbation harness:
    # the null scenario controls type I error
    from auxtrial.experiments import simulate_retro_oc

    rng = np.random.default_rng(314)
    pool_y = (rng.random(250) < 0.35).astype(int)
    pool_s = ((rng.random(250) < 0.5) | (pool_y == 1)).astype(int)
    hyper = default_prior(1, spike_prob=0.1)
    design = default_sequential_design(draws=800, burn=300)
    reps = 400
    records = simulate_retro_oc(pool_y, pool_s, [(0.0, 0.0)], 200, [design], hyper,
                                reps, 3100, WORKERS)
    rate = records[0].power
    mcse = math.sqrt(0.05 * 0.95 / reps)
    ok = rate <= 0.05 + 3 * mcse
    assert report("retro-harness null type-I", ok, f"rate {rate:.4f} vs bound {0.05 + 3 * mcse:.4f}")
