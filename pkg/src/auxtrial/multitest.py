"""Subgroup hypothesis testing with auxiliary-informed weights.

The main procedure rejects a group's null when its one-sided p-value falls
below alpha times a softmax weight driven by that group's observed auxiliary
effect; classical Bonferroni and Holm and an auxiliary-outcome-only test
serve as comparators. A parametric bootstrap recalibrates the working alpha
when correlated summaries inflate the familywise error rate in small
samples. An exact enumerator scores every decision rule of a stylized
single-patient design.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import ceil, isnan, sqrt

import numpy as np
from scipy.stats import norm

from .data import GroupSummary, TrialDataset
from .errors import DegenerateCovariance, EmptyArm


@dataclass(frozen=True)
class WeightedBonfConfig:
    """Coefficients and level for the auxiliary-weighted procedure.

    ``beta`` may be a scalar (shared across groups) or a length-K vector.
    ``calibrated_alpha`` replaces ``alpha`` as the working level when set.
    ``prior_weights`` optionally multiplies the softmax numerators (e.g. a
    monotone transform of group prevalences); defaults to all ones.
    """

    alpha: float
    beta: float | np.ndarray
    calibrated_alpha: float | None = None
    prior_weights: np.ndarray | None = None

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.calibrated_alpha is not None and not 0 <= self.calibrated_alpha <= 1:
            raise ValueError("calibrated_alpha must lie in [0, 1]")

    def beta_vector(self, k_count: int) -> np.ndarray:
        beta = np.asarray(self.beta, dtype=float)
        if beta.ndim == 0:
            return np.full(k_count, float(beta))
        if beta.shape != (k_count,):
            raise ValueError("beta length does not match the number of groups")
        return beta

    @property
    def effective_alpha(self) -> float:
        return self.alpha if self.calibrated_alpha is None else self.calibrated_alpha


@dataclass(frozen=True)
class TestDecision:
    group: int
    reject: bool
    weight: float
    threshold: float
    degraded: bool = False


def softmax_weights(beta, sbar, prior_weights=None) -> np.ndarray:
    """Normalized exp(beta_k * sbar_k), stabilized by max subtraction;
    optional positive prior weights multiply the numerators."""
    beta = np.asarray(beta, dtype=float)
    sbar = np.asarray(sbar, dtype=float)
    if beta.shape != sbar.shape or beta.ndim != 1 or beta.size < 1:
        raise ValueError("beta and sbar must be 1-D of equal length >= 1")
    logits = beta * sbar
    if prior_weights is not None:
        pw = np.asarray(prior_weights, dtype=float)
        if pw.shape != sbar.shape or np.any(pw <= 0):
            raise ValueError("prior_weights must be positive, one per group")
        logits = logits + np.log(pw)
    logits = logits - logits.max()
    w = np.exp(logits)
    return w / w.sum()


def _pvalues(summaries: list[GroupSummary], use_auxiliary: bool) -> tuple[np.ndarray, np.ndarray]:
    pv = np.array([s.aux_pvalue if use_auxiliary else s.pvalue for s in summaries])
    bad = np.array([s.error is not None for s in summaries])
    return pv, bad


def auxiliary_augmented_test(summaries: list[GroupSummary],
                             config: WeightedBonfConfig) -> list[TestDecision]:
    """Reject group k when its primary p-value is at most the working alpha
    times the auxiliary-driven softmax weight. Groups with an empty arm are
    never rejected and are flagged as degraded (their weight term uses a
    zero auxiliary effect so the remaining weights stay normalized)."""
    k = len(summaries)
    beta = config.beta_vector(k)
    sbar = np.array([0.0 if s.error is not None or isnan(s.sbar_diff) else s.sbar_diff
                     for s in summaries])
    weights = softmax_weights(beta, sbar, config.prior_weights)
    alpha = config.effective_alpha
    pv, bad = _pvalues(summaries, use_auxiliary=False)
    out = []
    for i, s in enumerate(summaries):
        threshold = alpha * weights[i]
        reject = bool(not bad[i] and pv[i] <= threshold)
        out.append(TestDecision(s.group, reject, float(weights[i]), threshold, bool(bad[i])))
    return out


def bonferroni_test(summaries: list[GroupSummary], alpha: float) -> list[TestDecision]:
    k = len(summaries)
    pv, bad = _pvalues(summaries, use_auxiliary=False)
    threshold = alpha / k
    return [TestDecision(s.group, bool(not bad[i] and pv[i] <= threshold), 1.0 / k,
                         threshold, bool(bad[i]))
            for i, s in enumerate(summaries)]


def holm_test(summaries: list[GroupSummary], alpha: float) -> list[TestDecision]:
    """Step-down: ascending p-values are rejected while pv_(j) <= alpha/(K-j)."""
    k = len(summaries)
    pv, bad = _pvalues(summaries, use_auxiliary=False)
    order_pv = np.where(bad, np.inf, pv)
    order = np.argsort(order_pv, kind="stable")
    reject = np.zeros(k, dtype=bool)
    thresholds = np.empty(k)
    alive = True
    for j, idx in enumerate(order):
        thresholds[idx] = alpha / (k - j)
        if alive and order_pv[idx] <= thresholds[idx]:
            reject[idx] = True
        else:
            alive = False
    return [TestDecision(s.group, bool(reject[i] and not bad[i]), 1.0 / k,
                         float(thresholds[i]), bool(bad[i]))
            for i, s in enumerate(summaries)]


def auxiliary_only_test(summaries: list[GroupSummary], alpha: float) -> list[TestDecision]:
    """Bonferroni applied to p-values computed from the auxiliary effects."""
    k = len(summaries)
    pv, bad = _pvalues(summaries, use_auxiliary=True)
    threshold = alpha / k
    return [TestDecision(s.group, bool(not bad[i] and pv[i] <= threshold), 1.0 / k,
                         threshold, bool(bad[i]))
            for i, s in enumerate(summaries)]


def decisions_to_rows(scenario: str, method: str, decisions: list[TestDecision]) -> list[dict]:
    """Decision-level records ready for CSV emission."""
    return [
        {"scenario": scenario, "method": method, "group": d.group,
         "reject": int(d.reject), "weight": d.weight}
        for d in decisions
    ]


def write_decisions_csv(path, rows: list[dict]) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["scenario", "method", "group",
                                                "reject", "weight"])
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


@dataclass(frozen=True)
class CalibrationResult:
    alpha_prime: float
    bootstrap_samples: int
    seed: int | None
    candidate_thresholds: np.ndarray

    def fwer_hat(self, t: float) -> float:
        """Estimated familywise error rate of the procedure run at working
        level t; a nondecreasing step function of t."""
        return float(np.mean(self.candidate_thresholds < t))

    def metadata(self) -> dict:
        return {"alpha_prime": self.alpha_prime, "bootstrap_samples": self.bootstrap_samples,
                "seed": self.seed}


def bootstrap_calibrate(sbar_tilde, sigma_tilde, beta, alpha: float,
                        bootstrap_samples: int, seed,
                        prior_weights=None) -> CalibrationResult:
    """Parametric bootstrap of the familywise error rate under zero primary
    effects, and the working level that matches it to ``alpha``.

    Per resample and group, (auxiliary, primary) effect summaries are drawn
    from a bivariate normal with mean (sbar_tilde_k, 0) and covariance
    sigma_tilde_k (ordered auxiliary first); weights and p-values are rebuilt
    from them. The estimated FWER is a step function jumping at
    pv_k/omega_k, so its alpha crossing is found by an exact scan of those
    candidates, not by bisection.
    """
    sbar_tilde = np.asarray(sbar_tilde, dtype=float)
    sigma_tilde = np.asarray(sigma_tilde, dtype=float)
    k = sbar_tilde.shape[0]
    if sigma_tilde.shape != (k, 2, 2):
        raise ValueError("sigma_tilde must have shape (K, 2, 2)")
    if bootstrap_samples < 1000:
        raise ValueError("bootstrap_samples must be at least 1000")
    beta = np.broadcast_to(np.asarray(beta, dtype=float), (k,))

    roots = np.empty((k, 2, 2))
    sd_y = np.empty(k)
    for i in range(k):
        cov = 0.5 * (sigma_tilde[i] + sigma_tilde[i].T)
        vals, vecs = np.linalg.eigh(cov)
        if vals.min() < -1e-10 * max(1.0, abs(vals.max())):
            raise DegenerateCovariance(f"covariance for group {i} is not PSD")
        roots[i] = vecs @ np.diag(np.sqrt(np.clip(vals, 0.0, None)))
        sd_y[i] = sqrt(max(cov[1, 1], 0.0))
        if sd_y[i] == 0.0:
            raise DegenerateCovariance(f"group {i} has zero primary-effect variance")

    rng = np.random.default_rng(seed)
    z = rng.standard_normal((bootstrap_samples, k, 2))
    draws = np.einsum("kij,bkj->bki", roots, z)
    s_draw = draws[:, :, 0] + sbar_tilde
    y_draw = draws[:, :, 1]

    logits = beta * s_draw
    if prior_weights is not None:
        logits = logits + np.log(np.asarray(prior_weights, dtype=float))
    logits -= logits.max(axis=1, keepdims=True)
    w = np.exp(logits)
    w /= w.sum(axis=1, keepdims=True)
    pv = norm.sf(y_draw / sd_y)

    per_draw_min = np.min(pv / w, axis=1)
    order = np.sort(per_draw_min)
    m = ceil(alpha * bootstrap_samples)
    alpha_prime = float(min(max(order[m - 1], 0.0), 1.0))
    seed_out = int(seed) if isinstance(seed, (int, np.integer)) else None
    return CalibrationResult(alpha_prime, bootstrap_samples, seed_out, order)


def plugin_summary_covariance(data: TrialDataset) -> tuple[np.ndarray, np.ndarray]:
    """Plug-in binomial estimates of the auxiliary effects and of the 2x2
    covariance of (auxiliary, primary) effect estimates per group, from
    fully observed patients."""
    k_count = data.k_count
    sbar = np.zeros(k_count)
    cov = np.zeros((k_count, 2, 2))
    obs = data.primary_observed
    for k in range(k_count):
        for arm in (0, 1):
            mask = obs & (data.group == k) & (data.arm == arm)
            n = int(mask.sum())
            if n == 0:
                raise EmptyArm(f"group {k} has no patients in arm {arm}")
            y = data.primary[mask].astype(float)
            s = data.auxiliary[mask].astype(float)
            p_y, p_s = y.mean(), s.mean()
            p_both = float((y * s).mean())
            cov[k, 0, 0] += p_s * (1 - p_s) / n
            cov[k, 1, 1] += p_y * (1 - p_y) / n
            cross = (p_both - p_y * p_s) / n
            cov[k, 0, 1] += cross
            cov[k, 1, 0] += cross
            sbar[k] += p_s if arm == 1 else -p_s
    return sbar, cov


@dataclass(frozen=True)
class RuleRow:
    """One candidate decision rule of the single-patient design: the action
    taken for each (primary, auxiliary) data value, whether the rule is a
    valid level-alpha test, and its exact expected utility."""

    rejects_on: tuple[tuple[int, int], ...]
    actions: tuple[int, int, int, int]
    level_valid: bool
    expected_utility: Fraction

    @property
    def label(self) -> str:
        named = {
            (): "never",
            ((0, 0), (0, 1), (1, 0), (1, 1)): "always",
            ((1, 0), (1, 1)): "Y",
            ((1, 1),): "Y*S",
            ((1, 0),): "Y*(1-S)",
            ((0, 1), (1, 1)): "S",
        }
        return named.get(self.rejects_on, "{" + ",".join(f"{y}{s}" for y, s in self.rejects_on) + "}")


def enumerate_single_patient_rules(alpha: Fraction = Fraction(1, 20),
                                   penalty: Fraction = Fraction(100)) -> list[RuleRow]:
    """Exact enumeration for a one-patient trial with two binary outcomes.

    The primary success probability must exceed ``alpha`` under the
    alternative; the prior is uniform on that probability with the auxiliary
    success probability degenerate at 0 below the cutoff and at 1 above it.
    Each of the 16 data-to-action maps gets (a) a type-I-error check, taking
    the supremum over all null parameter pairs (the auxiliary probability
    ranges over [0, 1] even though the prior pins it), and (b) a closed-form
    expected utility with reward 1 for a true positive and ``penalty`` for a
    false positive.
    """
    rows = []
    one = Fraction(1)
    # integral of theta over [alpha, 1] and [0, alpha]
    int_theta_hi = (one - alpha * alpha) / 2
    int_theta_lo = alpha * alpha / 2
    int_one_hi = one - alpha
    int_one_lo = alpha
    for code in range(16):
        # actions[2*y + s] = decision on observing (Y=y, S=s)
        actions = tuple((code >> (2 * y + s)) & 1 for y in (0, 1) for s in (0, 1))
        a00, a01, a10, a11 = actions

        level_valid = True
        for ty in (Fraction(0), alpha):
            for ts in (Fraction(0), Fraction(1)):
                size = (a11 * ty * ts + a10 * ty * (1 - ts)
                        + a01 * (1 - ty) * ts + a00 * (1 - ty) * (1 - ts))
                if size > alpha:
                    level_valid = False
        # above the cutoff the auxiliary outcome is always 1; below, always 0
        utility = (a11 * int_theta_hi + a01 * (int_one_hi - int_theta_hi)
                   - penalty * (a10 * int_theta_lo + a00 * (int_one_lo - int_theta_lo)))
        rejects_on = tuple((y, s) for y in (0, 1) for s in (0, 1) if actions[2 * y + s])
        rows.append(RuleRow(rejects_on, actions, level_valid, utility))
    return rows
