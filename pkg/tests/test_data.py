import math

import numpy as np
import pytest
from scipy.stats import kstest, norm

from auxtrial.data import TrialDataset, compute_summaries, restrict_to_stage
from auxtrial.errors import BadStage


def build_dataset(y1, y0, s1=None, s0=None):
    """Two-arm single-group dataset from outcome vectors."""
    y1 = np.asarray(y1); y0 = np.asarray(y0)
    s1 = np.zeros_like(y1) if s1 is None else np.asarray(s1)
    s0 = np.zeros_like(y0) if s0 is None else np.asarray(s0)
    n1, n0 = y1.size, y0.size
    return TrialDataset(
        group=np.zeros(n1 + n0, dtype=int),
        arm=np.concatenate([np.ones(n1, dtype=int), np.zeros(n0, dtype=int)]),
        primary=np.concatenate([y1, y0]),
        auxiliary=np.concatenate([s1, s0]),
        enroll_order=np.arange(n1 + n0),
        primary_observed=np.ones(n1 + n0, dtype=bool),
        k_count=1,
    )


def binary_vector(n, successes):
    v = np.zeros(n, dtype=int)
    v[:successes] = 1
    return v


def test_summary_closed_form():
    # 60/60 arms, rates 0.4 vs 0.2; oracle = closed-form arithmetic plus a
    # high-precision normal CDF
    data = build_dataset(binary_vector(60, 24), binary_vector(60, 12))
    s = compute_summaries(data)[0]
    assert s.n1 == 60 and s.n0 == 60
    assert s.ybar_diff == pytest.approx(0.2)
    var = 0.4 * 0.6 / 60 + 0.2 * 0.8 / 60
    assert s.var_hat == pytest.approx(var, rel=1e-12)
    assert s.z == pytest.approx(0.2 / math.sqrt(var), rel=1e-12)
    assert s.pvalue == pytest.approx(0.007152939217714871, abs=1e-9)


def test_summary_symmetric_null():
    data = build_dataset(binary_vector(60, 12), binary_vector(60, 12))
    s = compute_summaries(data)[0]
    assert s.z == 0.0
    assert s.pvalue == pytest.approx(0.5)


def test_null_pvalues_uniform():
    # asymptotic uniformity of the one-sided p-value under the null. The
    # statistic lives on a lattice at n=100/arm (the tie atom alone carries
    # ~0.05 mass), so the Kolmogorov distance cannot drop below ~0.04 at any
    # simulation size; the frozen bound covers the discreteness envelope.
    rng = np.random.default_rng(5)
    pvs = []
    for _ in range(10_000):
        y1 = (rng.random(100) < 0.2).astype(int)
        y0 = (rng.random(100) < 0.2).astype(int)
        p1, p0 = y1.mean(), y0.mean()
        var = p1 * (1 - p1) / 100 + p0 * (1 - p0) / 100
        if var == 0:
            continue
        pvs.append(norm.sf((p1 - p0) / math.sqrt(var)))
    stat = kstest(pvs, "uniform").statistic
    assert stat < 0.05


def test_degenerate_variance_continuity_correction():
    data = build_dataset(np.ones(10, dtype=int), np.zeros(10, dtype=int))
    s = compute_summaries(data)[0]
    q1, q0 = 10.5 / 11, 0.5 / 11
    expected_var = q1 * (1 - q1) / 10 + q0 * (1 - q0) / 10
    assert s.var_hat == pytest.approx(expected_var, rel=1e-12)
    assert math.isfinite(s.z)


def test_empty_arm_flagged_not_fatal():
    n = 10
    data = TrialDataset(
        group=np.array([0] * n + [1] * n), arm=np.array([1] * n + [0, 1] * (n // 2)),
        primary=np.zeros(2 * n, dtype=int), auxiliary=np.zeros(2 * n, dtype=int),
        enroll_order=np.arange(2 * n), primary_observed=np.ones(2 * n, dtype=bool),
        k_count=2,
    )
    summaries = compute_summaries(data)
    assert summaries[0].error == "empty_arm"
    assert summaries[1].error is None


def test_pvalue_consistent_with_z():
    rng = np.random.default_rng(11)
    for _ in range(50):
        y1 = (rng.random(40) < 0.4).astype(int)
        y0 = (rng.random(40) < 0.3).astype(int)
        s = compute_summaries(build_dataset(y1, y0))[0]
        assert abs(s.pvalue - norm.sf(s.z)) < 1e-12


def test_permutation_invariance(rng):
    y1 = (rng.random(30) < 0.4).astype(int)
    y0 = (rng.random(25) < 0.2).astype(int)
    s1 = (rng.random(30) < 0.6).astype(int)
    s0 = (rng.random(25) < 0.5).astype(int)
    base = build_dataset(y1, y0, s1, s0)
    ref = compute_summaries(base)[0]
    for _ in range(10):
        perm = rng.permutation(base.n_patients)
        shuffled = TrialDataset(
            group=base.group[perm], arm=base.arm[perm], primary=base.primary[perm],
            auxiliary=base.auxiliary[perm], enroll_order=base.enroll_order[perm],
            primary_observed=base.primary_observed[perm], k_count=1,
        )
        got = compute_summaries(shuffled)[0]
        assert got.z == pytest.approx(ref.z, abs=1e-12)
        assert got.sbar_diff == pytest.approx(ref.sbar_diff, abs=1e-12)


def test_restrict_to_stage_cases(rng):
    n = 200
    data = TrialDataset(
        group=np.zeros(n, dtype=int), arm=rng.integers(0, 2, n),
        primary=rng.integers(0, 2, n), auxiliary=rng.integers(0, 2, n),
        enroll_order=rng.permutation(n), primary_observed=np.ones(n, dtype=bool),
        k_count=1,
    )
    interim = restrict_to_stage(data, 100, 100)
    assert interim.n_patients == 100
    assert interim.primary_observed.all()

    lagged = restrict_to_stage(data, 100, 140)
    assert lagged.n_patients == 140
    assert lagged.primary_observed.sum() == 100
    order = np.argsort(lagged.enroll_order)
    assert not lagged.primary_observed[order][100:].any()

    full = restrict_to_stage(data, 200, 200)
    assert np.array_equal(np.sort(full.enroll_order), np.sort(data.enroll_order))
    assert full.primary_observed.all()


def test_restrict_nesting_idempotent(rng):
    n = 120
    data = TrialDataset(
        group=np.zeros(n, dtype=int), arm=rng.integers(0, 2, n),
        primary=rng.integers(0, 2, n), auxiliary=rng.integers(0, 2, n),
        enroll_order=rng.permutation(n), primary_observed=np.ones(n, dtype=bool),
        k_count=1,
    )
    twice = restrict_to_stage(restrict_to_stage(data, 80, 100), 40, 60)
    once = restrict_to_stage(data, 40, 60)
    for name in ("group", "arm", "primary", "auxiliary", "enroll_order", "primary_observed"):
        assert np.array_equal(getattr(twice, name), getattr(once, name))


def test_restrict_bad_stage():
    data = build_dataset(binary_vector(5, 2), binary_vector(5, 1))
    with pytest.raises(BadStage):
        restrict_to_stage(data, 8, 6)
    with pytest.raises(BadStage):
        restrict_to_stage(data, 5, 20)


def test_csv_round_trip(tmp_path, rng):
    n = 50
    data = TrialDataset(
        group=rng.integers(0, 3, n), arm=rng.integers(0, 2, n),
        primary=rng.integers(0, 2, n), auxiliary=rng.integers(0, 2, n),
        enroll_order=rng.permutation(n),
        primary_observed=rng.random(n) < 0.8, k_count=3,
    )
    path = tmp_path / "trial.csv"
    data.to_csv(path)
    back = TrialDataset.from_csv(path, k_count=3)
    for name in ("group", "arm", "primary", "auxiliary", "enroll_order", "primary_observed"):
        assert np.array_equal(getattr(back, name), getattr(data, name))


def test_dataset_validation():
    with pytest.raises(ValueError):
        TrialDataset(group=[0, 0], arm=[0, 1], primary=[0, 2], auxiliary=[0, 0],
                     enroll_order=[0, 1], primary_observed=[True, True], k_count=1)
    with pytest.raises(ValueError):
        TrialDataset(group=[0, 0], arm=[0, 1], primary=[0, 1], auxiliary=[0, 0],
                     enroll_order=[1, 1], primary_observed=[True, True], k_count=1)
    with pytest.raises(ValueError):
        TrialDataset(group=[0, 1], arm=[0, 1], primary=[0, 1], auxiliary=[0, 0],
                     enroll_order=[0, 1], primary_observed=[True, True], k_count=1)
