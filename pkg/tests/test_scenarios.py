import math

import numpy as np
import pytest
from scipy.stats import chisquare

from auxtrial.errors import EmptyPool
from auxtrial.presets import subgroup_scenario
from auxtrial.scenarios import ScenarioSpec, resample_perturb, simulate_trial, solve_joint


def brute_force_p11(p_y, p_s, ratio):
    """Grid-search oracle: p11 minimizing the odds-ratio error."""
    lo = max(0.0, p_y + p_s - 1.0) + 1e-9
    hi = min(p_y, p_s) - 1e-9
    grid = np.linspace(lo, hi, 200_001)
    odds = grid * (1 - p_y - p_s + grid) / ((p_y - grid) * (p_s - grid))
    return grid[np.argmin(np.abs(np.log(odds) - math.log(ratio)))]


def test_solve_joint_independence():
    cell = solve_joint(0.2, 0.5, 1.0)
    assert cell.p11 == pytest.approx(0.1, abs=1e-15)


@pytest.mark.parametrize("ratio, expected", [(10.0, 0.17454863459675785), (2.0, 0.12715838525995198)])
def test_solve_joint_known_roots(ratio, expected):
    cell = solve_joint(0.2, 0.5, ratio)
    assert cell.p11 == pytest.approx(expected, abs=1e-10)
    assert cell.p11 == pytest.approx(brute_force_p11(0.2, 0.5, ratio), abs=1e-5)


def test_solve_joint_round_trip_grid():
    for p_y in np.linspace(0.05, 0.95, 7):
        for p_s in np.linspace(0.05, 0.95, 7):
            for ratio in (0.1, 0.5, 1.0, 2.0, 10.0, 100.0):
                cell = solve_joint(float(p_y), float(p_s), ratio)
                assert cell.p11 + cell.p10 + cell.p01 + cell.p00 == pytest.approx(1.0, abs=1e-12)
                assert cell.p11 + cell.p10 == pytest.approx(p_y, abs=1e-10)
                assert cell.p11 + cell.p01 == pytest.approx(p_s, abs=1e-10)
                assert cell.odds_ratio == pytest.approx(ratio, rel=1e-8)


def test_simulate_trial_group_sizes():
    spec = subgroup_scenario(1, 1.0)
    sizes = []
    for rep in range(3000):
        data = simulate_trial(spec, np.random.default_rng((42, rep)))
        sizes.append(int((data.group == 0).sum()))
    assert np.mean(sizes) == pytest.approx(120, abs=1.5)


def test_simulate_trial_null_rejection_rate():
    spec = subgroup_scenario(1, 1.0)
    rejections = []
    for rep in range(3000):
        data = simulate_trial(spec, np.random.default_rng((43, rep)))
        for k in range(2):
            m1 = (data.group == k) & (data.arm == 1)
            m0 = (data.group == k) & (data.arm == 0)
            p1, p0 = data.primary[m1].mean(), data.primary[m0].mean()
            var = p1 * (1 - p1) / m1.sum() + p0 * (1 - p0) / m0.sum()
            rejections.append((p1 - p0) / math.sqrt(var) > 1.96 if var > 0 else False)
    assert np.mean(rejections) == pytest.approx(0.025, abs=0.007)


def test_simulate_trial_deterministic():
    spec = subgroup_scenario(4, 10.0)
    a = simulate_trial(spec, 123)
    b = simulate_trial(spec, 123)
    for name in ("group", "arm", "primary", "auxiliary"):
        assert np.array_equal(getattr(a, name), getattr(b, name))


def test_simulate_trial_cell_frequencies():
    # chi-square goodness of fit of the four outcome cells at 1e6 draws
    spec = ScenarioSpec(
        p_primary=[[0.3, 0.3]], p_auxiliary=[[0.6, 0.6]], odds_ratio=[[5.0, 5.0]],
        prevalence=[1.0], n_total=1_000_000,
    )
    data = simulate_trial(spec, 7)
    cell = solve_joint(0.3, 0.6, 5.0)
    counts = np.zeros(4)
    idx = 2 * data.primary + data.auxiliary
    for i in range(4):
        counts[i] = (idx == i).sum()
    expected = data.n_patients * np.array([cell.p00, cell.p01, cell.p10, cell.p11])
    assert chisquare(counts, expected[[0, 1, 2, 3]][np.argsort([0, 1, 2, 3])]).pvalue > 0.001


def test_resample_perturb_null_exchangeable():
    rng = np.random.default_rng(9)
    pool_y = rng.integers(0, 2, 500)
    pool_s = rng.integers(0, 2, 500)
    data = resample_perturb(pool_y, pool_s, 0.0, 0.0, 100_000, 11)
    for values in (data.primary, data.auxiliary):
        p1 = values[data.arm == 1].mean()
        p0 = values[data.arm == 0].mean()
        n1 = (data.arm == 1).sum()
        se = math.sqrt(0.5 / n1 + 0.5 / (data.n_patients - n1))
        assert abs(p1 - p0) < 4 * se


def test_resample_perturb_discordant():
    rng = np.random.default_rng(10)
    pool_y = rng.integers(0, 2, 400)
    pool_s = rng.integers(0, 2, 400)
    data = resample_perturb(pool_y, pool_s, 0.0, 0.5, 200_000, 12)
    y1 = data.primary[data.arm == 1].mean()
    y0 = data.primary[data.arm == 0].mean()
    assert abs(y1 - y0) < 0.01
    s1 = data.auxiliary[data.arm == 1].mean()
    s0 = data.auxiliary[data.arm == 0].mean()
    assert s1 > s0 + 0.1


def test_resample_perturb_degenerate_pool():
    data = resample_perturb([0], [0], 1.0, 1.0, 1000, 3)
    treated = data.arm == 1
    assert data.primary[treated].all() and data.auxiliary[treated].all()
    assert not data.primary[~treated].any() and not data.auxiliary[~treated].any()


def test_resample_perturb_empty_pool():
    with pytest.raises(EmptyPool):
        resample_perturb([], [], 0.0, 0.0, 10, 1)


def test_scenario_validation():
    with pytest.raises(ValueError):
        ScenarioSpec(p_primary=[[0.0, 0.2]], p_auxiliary=[[0.5, 0.5]],
                     odds_ratio=[[1.0, 1.0]], prevalence=[1.0], n_total=10)
    with pytest.raises(ValueError):
        ScenarioSpec(p_primary=[[0.2, 0.2]], p_auxiliary=[[0.5, 0.5]],
                     odds_ratio=[[1.0, 1.0]], prevalence=[0.5, 0.4], n_total=10)
