"""Joint Bayesian logistic model used for design optimization.

Both outcomes follow logistic regressions on the arm indicator that share a
per-patient Gaussian latent term, which induces their correlation. The
auxiliary-effect slope carries a spike-and-slab prior and the primary-effect
slope is a Beta-distributed fraction of it, so effects on the two outcomes
correlate a priori without being proportional.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .data import TrialDataset
from .seeding import as_rng, rng_for


@lru_cache(maxsize=8)
def hermite_rule(n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes scaled for integrals against a standard normal: the integral of
    f against N(0, sigma^2) is sum(w * f(sigma * x))."""
    x, w = np.polynomial.hermite.hermgauss(n_nodes)
    return math.sqrt(2.0) * x, w / math.sqrt(math.pi)


def logistic(x):
    return 1.0 / (1.0 + np.exp(-x))


def marginal_success_prob(linear: float, sigma: float, n_nodes: int = 30) -> float:
    """P(outcome = 1) after integrating the shared Gaussian latent term."""
    x, w = hermite_rule(n_nodes)
    return float(np.sum(w * logistic(linear + sigma * x)))


@dataclass(frozen=True)
class PriorHyperparams:
    """Per-group hyperparameters; scalars broadcast to all groups.

    ``spike_prob`` is the point mass on "no effects" (1 means every draw has
    zero slopes). ``c_spike`` optionally adds a point mass at zero to the
    effect fraction, default off.
    """

    k_count: int
    intercept_y_mean: np.ndarray
    intercept_y_sd: np.ndarray
    intercept_s_mean: np.ndarray
    intercept_s_sd: np.ndarray
    sigma2: np.ndarray
    spike_prob: float
    slab_mean: np.ndarray
    slab_var: np.ndarray
    beta_shape_v: np.ndarray
    beta_shape_o: np.ndarray
    c_spike: float = 0.0
    gh_nodes: int = 30

    def __post_init__(self):
        k = self.k_count
        for name in ("intercept_y_mean", "intercept_y_sd", "intercept_s_mean",
                     "intercept_s_sd", "sigma2", "slab_mean", "slab_var",
                     "beta_shape_v", "beta_shape_o"):
            arr = np.broadcast_to(np.asarray(getattr(self, name), dtype=float), (k,)).copy()
            object.__setattr__(self, name, arr)
        for name in ("intercept_y_sd", "intercept_s_sd", "sigma2", "slab_var",
                     "beta_shape_v", "beta_shape_o"):
            if np.any(getattr(self, name) <= 0):
                raise ValueError(f"{name} entries must be positive")
        if not 0.0 <= self.spike_prob <= 1.0:
            raise ValueError("spike_prob must lie in [0, 1]")
        if not 0.0 <= self.c_spike <= 1.0:
            raise ValueError("c_spike must lie in [0, 1]")
        if self.gh_nodes < 30:
            raise ValueError("gh_nodes must be at least 30")

    @property
    def sigma(self) -> np.ndarray:
        return np.sqrt(self.sigma2)


@dataclass(frozen=True)
class ThetaDraw:
    """One parameter draw; slope_y = c_y * slope_s holds exactly and
    gamma is the latent-integrated difference in primary success rates."""

    intercept_y: np.ndarray
    intercept_s: np.ndarray
    slope_s: np.ndarray
    c_y: np.ndarray
    spike: np.ndarray
    gamma: np.ndarray = field(default=None)

    @property
    def slope_y(self) -> np.ndarray:
        return self.c_y * self.slope_s


def compute_gamma(intercept_y, slope_y, sigma, n_nodes: int = 30) -> np.ndarray:
    iy = np.atleast_1d(np.asarray(intercept_y, dtype=float))
    sy = np.broadcast_to(np.asarray(slope_y, dtype=float), iy.shape)
    sg = np.broadcast_to(np.asarray(sigma, dtype=float), iy.shape)
    return np.array([
        marginal_success_prob(a + b, s, n_nodes) - marginal_success_prob(a, s, n_nodes)
        for a, b, s in zip(iy, sy, sg)
    ])


def sample_theta(hyper: PriorHyperparams, seed) -> ThetaDraw:
    rng = as_rng(seed)
    k = hyper.k_count
    iy = rng.normal(hyper.intercept_y_mean, hyper.intercept_y_sd)
    is_ = rng.normal(hyper.intercept_s_mean, hyper.intercept_s_sd)
    spike = rng.random(k) < hyper.spike_prob
    slope_s = np.where(spike, 0.0, rng.normal(hyper.slab_mean, np.sqrt(hyper.slab_var)))
    c_y = rng.beta(hyper.beta_shape_v, hyper.beta_shape_o)
    if hyper.c_spike > 0.0:
        c_y = np.where(rng.random(k) < hyper.c_spike, 0.0, c_y)
    gamma = compute_gamma(iy, c_y * slope_s, hyper.sigma, hyper.gh_nodes)
    gamma = np.where(spike, 0.0, gamma)
    return ThetaDraw(intercept_y=iy, intercept_s=is_, slope_s=slope_s,
                     c_y=c_y, spike=spike, gamma=gamma)


def sample_trial_from_prior(hyper: PriorHyperparams, theta: ThetaDraw, n_total: int,
                            prevalence, seed) -> TrialDataset:
    """Simulate a trial given a parameter draw: shared latent per patient,
    then conditionally independent Bernoulli outcomes."""
    rng = as_rng(seed)
    prevalence = np.asarray(prevalence, dtype=float)
    group = rng.choice(hyper.k_count, size=n_total, p=prevalence)
    arm = rng.integers(0, 2, size=n_total)
    eps = rng.normal(0.0, 1.0, size=n_total) * hyper.sigma[group]
    slope_y = theta.slope_y
    lin_y = theta.intercept_y[group] + slope_y[group] * arm + eps
    lin_s = theta.intercept_s[group] + theta.slope_s[group] * arm + eps
    primary = (rng.random(n_total) < logistic(lin_y)).astype(np.int64)
    auxiliary = (rng.random(n_total) < logistic(lin_s)).astype(np.int64)
    return TrialDataset(
        group=group, arm=arm, primary=primary, auxiliary=auxiliary,
        enroll_order=np.arange(n_total), primary_observed=np.ones(n_total, dtype=bool),
        k_count=hyper.k_count,
    )


PREDICTIVE_ROWS = (
    "proportion_primary_soc",
    "proportion_primary_treated",
    "difference_primary",
    "proportion_auxiliary_soc",
    "proportion_auxiliary_treated",
    "difference_auxiliary",
    "outcome_correlation",
)

_STATS = ("mean", "min", "q1", "median", "q3", "max")


@dataclass(frozen=True)
class PriorPredictiveReport:
    rows: dict
    te_correlation: float
    replicates: int

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["characteristic"] + list(_STATS))
            for name in PREDICTIVE_ROWS:
                writer.writerow([name] + [f"{self.rows[name][s]:.6g}" for s in _STATS])
            writer.writerow(["te_correlation", f"{self.te_correlation:.6g}"] + [""] * 5)


def _six_stats(values: np.ndarray) -> dict:
    q1, med, q3 = np.percentile(values, [25, 50, 75])
    return {"mean": float(values.mean()), "min": float(values.min()), "q1": float(q1),
            "median": float(med), "q3": float(q3), "max": float(values.max())}


def prior_predictive_report(hyper: PriorHyperparams, n_total: int, prevalence,
                            replicates: int, seed) -> PriorPredictiveReport:
    """Trial-level characteristics of the prior model across replicates:
    per-arm outcome rates, treatment-effect estimates, within-trial
    outcome correlation, and the cross-replicate correlation between the
    effect estimates on the two outcomes."""
    if replicates < 100:
        raise ValueError("replicates must be at least 100")
    cols = {name: np.empty(replicates) for name in PREDICTIVE_ROWS}
    for r in range(replicates):
        rng = rng_for(seed, r)
        theta = sample_theta(hyper, rng)
        data = sample_trial_from_prior(hyper, theta, n_total, prevalence, rng)
        treated = data.arm == 1
        y, s = data.primary.astype(float), data.auxiliary.astype(float)
        py1, py0 = y[treated].mean(), y[~treated].mean()
        ps1, ps0 = s[treated].mean(), s[~treated].mean()
        cols["proportion_primary_soc"][r] = py0
        cols["proportion_primary_treated"][r] = py1
        cols["difference_primary"][r] = py1 - py0
        cols["proportion_auxiliary_soc"][r] = ps0
        cols["proportion_auxiliary_treated"][r] = ps1
        cols["difference_auxiliary"][r] = ps1 - ps0
        sd = y.std() * s.std()
        cols["outcome_correlation"][r] = float(np.corrcoef(y, s)[0, 1]) if sd > 0 else 0.0
    te_corr = float(np.corrcoef(cols["difference_primary"], cols["difference_auxiliary"])[0, 1])
    return PriorPredictiveReport(
        rows={name: _six_stats(cols[name]) for name in PREDICTIVE_ROWS},
        te_correlation=te_corr, replicates=replicates,
    )
