"""Multi-stage design with early efficacy and Bayesian futility stopping.

Efficacy boundaries come from a one-parameter exponential alpha-spending
family and an Armitage-style sub-density recursion over the correlated
sequence of Z statistics. Futility stops when the posterior-predictive
probability that any future look crosses its efficacy boundary falls to the
futility threshold; the posterior comes from Metropolis-within-Gibbs chains
over the joint outcome model (or a single-outcome reduction for the
comparator designs). At interim looks futility is evaluated before the
efficacy comparison; the efficacy comparison itself never uses auxiliary
data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from . import _kernels
from .data import TrialDataset, restrict_to_stage
from .prior import PriorHyperparams, hermite_rule, logistic
from .seeding import as_rng

DESIGN_KINDS = ("auxiliary-augmented", "primary-only", "auxiliary-only")

CAPPED_THRESHOLD = 50.0
MIN_INCREMENT = 1e-10


@dataclass(frozen=True)
class GroupSeqConfig:
    """Stage schedule and decision parameters for a sequential trial.

    ``n_schedule[t]`` is the number of primary outcomes available at look t;
    ``m_schedule[t]`` the number of enrollments (defaults to n_schedule; the
    extra patients contribute auxiliary data only). ``beta_e`` shapes the
    spending function, ``beta_f`` is the futility threshold on the
    predictive success probability.
    """

    n_schedule: tuple[int, ...]
    alpha: float = 0.05
    beta_e: float = 2.0
    beta_f: float = 0.13
    design_kind: str = "auxiliary-augmented"
    m_schedule: tuple[int, ...] | None = None
    draws: int = 2000
    burn: int = 500
    adapt_window: int = 50

    def __post_init__(self):
        n = tuple(int(v) for v in self.n_schedule)
        object.__setattr__(self, "n_schedule", n)
        if any(b <= a for a, b in zip(n, n[1:])) or not n:
            raise ValueError("n_schedule must be nonempty and strictly increasing")
        m = n if self.m_schedule is None else tuple(int(v) for v in self.m_schedule)
        object.__setattr__(self, "m_schedule", m)
        if len(m) != len(n) or any(mt < nt for mt, nt in zip(m, n)):
            raise ValueError("m_schedule must match n_schedule with m_t >= n_t")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if not 0 < self.beta_f < 1:
            raise ValueError("beta_f must lie in (0, 1)")
        if self.design_kind not in DESIGN_KINDS:
            raise ValueError(f"design_kind must be one of {DESIGN_KINDS}")
        if self.draws <= 0 or self.burn < 0:
            raise ValueError("draws must be positive and burn nonnegative")

    @property
    def stages(self) -> int:
        return len(self.n_schedule)


def hsd_spending(r: float, beta_e: float, alpha: float) -> float:
    """Cumulative alpha spent at information fraction r; exponential shape
    beta_e, linear at beta_e = 0 (the continuous limit)."""
    if not 0.0 <= r <= 1.0:
        raise ValueError("information fraction must lie in [0, 1]")
    if beta_e == 0.0:
        return alpha * r
    return alpha * (1.0 - math.exp(-beta_e * r)) / (1.0 - math.exp(-beta_e))


@dataclass(frozen=True)
class BoundarySchedule:
    spent: tuple[float, ...]
    increments: tuple[float, ...]
    thresholds: tuple[float, ...]
    capped: tuple[bool, ...]
    n_schedule: tuple[int, ...]

    def to_rows(self) -> list[dict]:
        return [
            {"stage": t + 1, "n": self.n_schedule[t], "spent": self.spent[t],
             "increment": self.increments[t], "threshold": self.thresholds[t]}
            for t in range(len(self.thresholds))
        ]


_boundary_cache: dict = {}


def boundary_thresholds(n_schedule, beta_e: float, alpha: float,
                        grid_points: int = 4096, grid_span: float = 8.0) -> BoundarySchedule:
    """Z thresholds whose per-look null crossing mass equals the spending
    increments.

    The first threshold is the closed-form normal quantile. Later ones come
    from propagating the sub-density of the Z sequence restricted to earlier
    continuation regions across Gaussian increments (covariance
    sqrt(n_t/n_t') between looks) on a trapezoid grid, then root-finding
    each threshold so the rejection mass matches the increment. The 4096
    default holds the two-stage error near 1e-5 against a direct
    bivariate-normal quadrature. Increments below 1e-10 yield a capped
    threshold with a flag instead of an error. Results are memoized.
    """
    n_schedule = tuple(int(v) for v in n_schedule)
    key = (n_schedule, float(beta_e), float(alpha), int(grid_points), float(grid_span))
    cached = _boundary_cache.get(key)
    if cached is not None:
        return cached
    t_count = len(n_schedule)
    r = [n / n_schedule[-1] for n in n_schedule]
    spent = [hsd_spending(ri, beta_e, alpha) for ri in r]
    increments = [spent[0]] + [spent[t] - spent[t - 1] for t in range(1, t_count)]

    x = np.linspace(-grid_span, grid_span, grid_points)
    h = x[1] - x[0]
    density = norm.pdf(x)
    thresholds: list[float] = []
    capped: list[bool] = []

    for t in range(t_count):
        if t > 0:
            # Gaussian step from look t-1 to t, conditioned on continuation
            prev_z = min(thresholds[-1], grid_span)
            weights = np.full(grid_points, h)
            weights[0] = weights[-1] = h / 2.0
            mask = x <= prev_z
            weights = np.where(mask, weights, 0.0)
            # partial cell up to the boundary point
            j = int(np.searchsorted(x, prev_z, side="right") - 1)
            if 0 <= j < grid_points - 1 and x[j] < prev_z:
                frac = prev_z - x[j]
                g_at_z = density[j] + (density[j + 1] - density[j]) * frac / h
                weights[j] = h / 2.0 + frac / 2.0
                extra = frac / 2.0 * g_at_z
            else:
                extra = 0.0
                g_at_z = 0.0
            rho = math.sqrt(n_schedule[t - 1] / n_schedule[t])
            sd_step = math.sqrt(1.0 - rho * rho)
            diff = (x[:, None] - rho * x[None, :]) / sd_step
            kernel = np.exp(-0.5 * diff * diff) / (sd_step * math.sqrt(2.0 * math.pi))
            new_density = kernel @ (density * weights)
            if extra > 0.0:
                diff_z = (x - rho * prev_z) / sd_step
                new_density += extra * np.exp(-0.5 * diff_z * diff_z) / (sd_step * math.sqrt(2.0 * math.pi))
            density = new_density

        inc = increments[t]
        if inc < MIN_INCREMENT:
            thresholds.append(CAPPED_THRESHOLD)
            capped.append(True)
            continue
        if t == 0:
            thresholds.append(float(norm.isf(inc)))
            capped.append(False)
            continue
        # survival function of the sub-density on the grid (from the right)
        cell = 0.5 * h * (density[1:] + density[:-1])
        surv = np.concatenate([np.cumsum(cell[::-1])[::-1], [0.0]])
        if surv[0] <= inc:
            thresholds.append(-grid_span)
            capped.append(False)
            continue
        idx = int(np.searchsorted(-surv, -inc, side="right") - 1)
        idx = min(max(idx, 0), grid_points - 2)
        # linear interpolation of the survival function within the cell
        s_hi, s_lo = surv[idx], surv[idx + 1]
        frac = 0.0 if s_hi == s_lo else (s_hi - inc) / (s_hi - s_lo)
        thresholds.append(float(x[idx] + frac * h))
        capped.append(False)

    result = BoundarySchedule(tuple(spent), tuple(increments), tuple(thresholds),
                              tuple(capped), n_schedule)
    if len(_boundary_cache) < 256:
        _boundary_cache[key] = result
    return result


@dataclass(frozen=True)
class PosteriorDraws:
    """Posterior draws for the outcome model fitted at an interim look.

    For the joint model all arrays are populated; single-outcome reductions
    fill only the pair for the outcome they model. Shapes are (draws, K).
    """

    intercept_y: np.ndarray | None
    slope_y: np.ndarray | None
    intercept_s: np.ndarray | None
    slope_s: np.ndarray | None
    c_y: np.ndarray | None
    spike: np.ndarray
    acceptance: dict
    ess: float
    nonconvergence: bool
    outcome: str

    @property
    def n_draws(self) -> int:
        return self.spike.shape[0]

    def spike_probability(self) -> np.ndarray:
        return self.spike.mean(axis=0)


def _ess_estimate(chain: np.ndarray) -> float:
    """Effective sample size from the initial positive autocorrelation sums."""
    x = chain - chain.mean()
    n = x.size
    if n < 10 or x.std() == 0:
        return float(n)
    acf = np.correlate(x, x, mode="full")[n - 1:] / (np.arange(n, 0, -1) * x.var())
    tau = 1.0
    for lag in range(1, min(n // 2, 500)):
        if acf[lag] <= 0.0:
            break
        tau += 2.0 * acf[lag]
    return float(n / tau)


def _joint_counts(data: TrialDataset) -> tuple[np.ndarray, np.ndarray]:
    k_count = data.k_count
    cobs = np.zeros((k_count, 2, 4))
    cmis = np.zeros((k_count, 2, 2))
    obs = data.primary_observed
    for k in range(k_count):
        gmask = data.group == k
        for c in (0, 1):
            mask = gmask & (data.arm == c)
            yo = mask & obs
            for yv in (0, 1):
                for sv in (0, 1):
                    cobs[k, c, 2 * yv + sv] = np.sum(
                        yo & (data.primary == yv) & (data.auxiliary == sv))
            for sv in (0, 1):
                cmis[k, c, sv] = np.sum(mask & ~obs & (data.auxiliary == sv))
    return cobs, cmis


def _binary_counts(data: TrialDataset, outcome: str) -> np.ndarray:
    counts = np.zeros((data.k_count, 2, 2))
    if outcome == "primary":
        keep = data.primary_observed
        values = data.primary
    else:
        keep = np.ones(data.n_patients, dtype=bool)
        values = data.auxiliary
    for k in range(data.k_count):
        for c in (0, 1):
            mask = keep & (data.group == k) & (data.arm == c)
            counts[k, c, 1] = np.sum(mask & (values == 1))
            counts[k, c, 0] = np.sum(mask & (values == 0))
    return counts


def _binary_slab(hyper: PriorHyperparams, outcome: str) -> tuple[np.ndarray, np.ndarray]:
    """Slab hyperparameters for the single-outcome reductions. The primary
    reduction moment-matches the product prior on the primary slope."""
    if outcome == "auxiliary":
        return hyper.slab_mean, np.sqrt(hyper.slab_var)
    v, o = hyper.beta_shape_v, hyper.beta_shape_o
    mean_c = v / (v + o)
    second_moment = v * o / ((v + o) ** 2 * (v + o + 1.0)) + mean_c ** 2
    return hyper.slab_mean * mean_c, np.sqrt(hyper.slab_var * second_moment)


def posterior_sample(data_t: TrialDataset, hyper: PriorHyperparams, draws: int, seed,
                     outcome: str = "joint", burn: int | None = None,
                     adapt_window: int = 50) -> PosteriorDraws:
    """Posterior over the outcome-model parameters given interim data.

    ``outcome`` selects the full joint model (per-patient likelihood
    marginalizes the shared latent term by quadrature) or a single-outcome
    logistic reduction ("primary" drops auxiliary data, "auxiliary" models
    the auxiliary outcome alone). The sampler is random-walk
    Metropolis-within-Gibbs with a prior-proposal jump for the spike
    indicator; proposal scales adapt during burn-in only. A NonConvergence
    flag (not an error) is set when any post-burn-in random-walk acceptance
    rate leaves [0.05, 0.7].
    """
    if hyper.c_spike > 0.0:
        raise ValueError("posterior sampling does not support a point mass on c_y")
    if outcome not in ("joint", "primary", "auxiliary"):
        raise ValueError("outcome must be joint, primary, or auxiliary")
    if burn is None:
        burn = max(200, draws // 4)
    rng = as_rng(seed)
    k_count = hyper.k_count
    n_sweeps = draws + burn

    if outcome == "joint":
        cobs, cmis = _joint_counts(data_t)
        if cobs.sum() + cmis.sum() == 0:
            raise ValueError("interim dataset has no observed outcomes")
        nodes, weights = hermite_rule(hyper.gh_nodes)
        normals = rng.standard_normal((n_sweeps, k_count, 6))
        uniforms = rng.random((n_sweeps, k_count, 6))
        zy0, zs0, zs1, cy, spike, acc, tot = _kernels.run_joint_chain(
            cobs, cmis, hyper.sigma,
            hyper.intercept_y_mean, hyper.intercept_y_sd,
            hyper.intercept_s_mean, hyper.intercept_s_sd,
            hyper.slab_mean, np.sqrt(hyper.slab_var),
            hyper.beta_shape_v, hyper.beta_shape_o, hyper.spike_prob,
            nodes, weights, normals, uniforms, burn,
            np.array([0.3, 0.3, 0.4, 0.15, 0.5]), adapt_window,
        )
        acceptance = _acc_rates(acc, tot)
        return PosteriorDraws(
            intercept_y=zy0, slope_y=cy * zs1, intercept_s=zs0, slope_s=zs1,
            c_y=cy, spike=spike.astype(bool), acceptance=acceptance,
            ess=_ess_estimate(zy0[:, 0]), nonconvergence=_poor_mixing(acceptance),
            outcome=outcome,
        )
    else:
        counts = _binary_counts(data_t, outcome)
        if counts.sum() == 0:
            raise ValueError("interim dataset has no observed outcomes")
        slab_mean, slab_sd = _binary_slab(hyper, outcome)
        if outcome == "primary":
            i_mean, i_sd = hyper.intercept_y_mean, hyper.intercept_y_sd
        else:
            i_mean, i_sd = hyper.intercept_s_mean, hyper.intercept_s_sd
        normals = rng.standard_normal((n_sweeps, k_count, 3))
        uniforms = rng.random((n_sweeps, k_count, 3))
        z0, z1, spike, acc, tot = _kernels.run_binary_chain(
            counts, i_mean, i_sd, slab_mean, slab_sd, hyper.spike_prob,
            normals, uniforms, burn, np.array([0.3, 0.4]), adapt_window,
        )
        pair = dict(intercept_y=None, slope_y=None, intercept_s=None, slope_s=None)
        if outcome == "primary":
            pair.update(intercept_y=z0, slope_y=z1)
        else:
            pair.update(intercept_s=z0, slope_s=z1)
        acceptance = _acc_rates(acc, tot)
        return PosteriorDraws(
            c_y=None, spike=spike.astype(bool), acceptance=acceptance,
            ess=_ess_estimate(z0[:, 0]), nonconvergence=_poor_mixing(acceptance),
            outcome=outcome, **pair,
        )


def _poor_mixing(acceptance: dict) -> bool:
    rates = [r for rates_k in acceptance["random_walk"] for r in rates_k if r is not None]
    return any(not 0.05 <= r <= 0.7 for r in rates)


def _acc_rates(acc: np.ndarray, tot: np.ndarray) -> dict:
    n_rw = acc.shape[1] - 1
    rw = [[(acc[k, m] / tot[k, m]) if tot[k, m] else None for m in range(n_rw)]
          for k in range(acc.shape[0])]
    switch = [(acc[k, n_rw] / tot[k, n_rw]) if tot[k, n_rw] else None
              for k in range(acc.shape[0])]
    return {"random_walk": rw, "spike_switch": switch}


def _marginal_rates(draws: PosteriorDraws, hyper: PriorHyperparams,
                    outcome_kind: str) -> tuple[np.ndarray, np.ndarray]:
    """Per-draw success probabilities (control, treated) of the design's test
    outcome for group 0, integrating the latent term for the joint model."""
    if draws.outcome == "joint":
        nodes, weights = hermite_rule(hyper.gh_nodes)
        sigma = hyper.sigma[0]
        if outcome_kind == "primary":
            icpt, slope = draws.intercept_y[:, 0], draws.slope_y[:, 0]
        else:
            icpt, slope = draws.intercept_s[:, 0], draws.slope_s[:, 0]
        lat = sigma * nodes
        p0 = logistic(icpt[:, None] + lat[None, :]) @ weights
        p1 = logistic((icpt + slope)[:, None] + lat[None, :]) @ weights
        return p0, p1
    if outcome_kind == "primary":
        icpt, slope = draws.intercept_y[:, 0], draws.slope_y[:, 0]
    else:
        icpt, slope = draws.intercept_s[:, 0], draws.slope_s[:, 0]
    return logistic(icpt), logistic(icpt + slope)


def _impute_pending(draws: PosteriorDraws, hyper: PriorHyperparams,
                    pending_arm: np.ndarray, pending_s: np.ndarray) -> np.ndarray:
    """P(pending primary = 1 | observed auxiliary, arm) per draw and patient,
    conditioning the shared latent term on the auxiliary value."""
    nodes, weights = hermite_rule(hyper.gh_nodes)
    sigma = hyper.sigma[0]
    lat = sigma * nodes
    iy, sy = draws.intercept_y[:, 0], draws.slope_y[:, 0]
    is_, ss = draws.intercept_s[:, 0], draws.slope_s[:, 0]
    out = np.empty((iy.shape[0], pending_arm.shape[0]))
    for j, (arm, s_val) in enumerate(zip(pending_arm, pending_s)):
        py = logistic((iy + sy * arm)[:, None] + lat[None, :])
        ps = logistic((is_ + ss * arm)[:, None] + lat[None, :])
        s_factor = ps if s_val == 1 else 1.0 - ps
        num = (py * s_factor) @ weights
        den = s_factor @ weights
        out[:, j] = num / np.maximum(den, 1e-300)
    return out


def _z_from_counts(n1, x1, n0, x0):
    """Vectorized difference-in-proportions Z with the plug-in variance and
    the same continuity-corrected fallback as the summary layer."""
    n1 = np.asarray(n1, dtype=float)
    x1 = np.asarray(x1, dtype=float)
    n0 = np.asarray(n0, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    p1 = x1 / n1
    p0 = x0 / n0
    var = p1 * (1 - p1) / n1 + p0 * (1 - p0) / n0
    q1 = (x1 + 0.5) / (n1 + 1.0)
    q0 = (x0 + 0.5) / (n0 + 1.0)
    var_cc = q1 * (1 - q1) / n1 + q0 * (1 - q0) / n0
    var = np.where(var == 0.0, var_cc, var)
    return (p1 - p0) / np.sqrt(var)


def predictive_success_prob(data_t: TrialDataset, draws: PosteriorDraws,
                            boundaries: BoundarySchedule, config: GroupSeqConfig,
                            stage: int, hyper: PriorHyperparams, seed) -> tuple[float, bool]:
    """Probability that some future look's Z statistic crosses its efficacy
    boundary, averaged over posterior draws.

    Per draw: pending primary outcomes of enrolled patients are imputed from
    their observed auxiliary values (joint model) or from the fitted outcome
    model, future enrollments are simulated from the draw's parameters, and
    every future Z is compared to its boundary. Future futility stopping is
    ignored. ``stage`` is 1-based and must be below the number of looks.
    """
    if data_t.k_count != 1:
        raise ValueError("sequential designs support a single population")
    if not 1 <= stage < config.stages:
        raise ValueError("stage must be an interim look")
    rng = as_rng(seed)
    n_t = config.n_schedule[stage - 1]
    m_t = config.m_schedule[stage - 1]
    n_final = config.n_schedule[-1]
    use_aux = config.design_kind == "auxiliary-only"
    outcome_kind = "auxiliary" if use_aux else "primary"

    order = np.argsort(data_t.enroll_order, kind="stable")
    arm = data_t.arm[order]
    xvals = (data_t.auxiliary if use_aux else data_t.primary)[order]
    g = draws.n_draws

    # observed part of the test outcome: ranks below n_t (the auxiliary
    # outcome is also observed for every enrolled patient)
    n_obs = m_t if use_aux else n_t
    obs_arm = arm[:n_obs]
    obs_x = xvals[:n_obs]

    # pending primary outcomes of enrolled patients, imputed per draw
    if not use_aux and m_t > n_t:
        pend_arm = arm[n_t:m_t]
        if config.design_kind == "auxiliary-augmented":
            pend_s = data_t.auxiliary[order][n_t:m_t]
            p_pend = _impute_pending(draws, hyper, pend_arm, pend_s)
        else:
            p0, p1 = _marginal_rates(draws, hyper, outcome_kind)
            p_pend = np.where(pend_arm[None, :] == 1, p1[:, None], p0[:, None])
        pend_x = (rng.random((g, pend_arm.shape[0])) < p_pend).astype(np.int64)
    else:
        pend_arm = np.empty(0, dtype=np.int64)
        pend_x = np.empty((g, 0), dtype=np.int64)

    # brand-new future enrollments
    n_new = max(0, n_final - max(m_t, n_obs))
    p0, p1 = _marginal_rates(draws, hyper, outcome_kind)
    if n_new > 0:
        new_arm = rng.integers(0, 2, size=(g, n_new))
        p_new = np.where(new_arm == 1, p1[:, None], p0[:, None])
        new_x = (rng.random((g, n_new)) < p_new).astype(np.int64)
    else:
        new_arm = np.empty((g, 0), dtype=np.int64)
        new_x = np.empty((g, 0), dtype=np.int64)

    full_arm = np.concatenate([
        np.broadcast_to(np.concatenate([obs_arm, pend_arm]), (g, n_obs + pend_arm.shape[0])),
        new_arm], axis=1)
    full_x = np.concatenate([np.broadcast_to(obs_x, (g, n_obs)), pend_x, new_x], axis=1)

    any_cross = np.zeros(g, dtype=bool)
    for future in range(stage, config.stages):
        n_look = config.n_schedule[future]
        a = full_arm[:, :n_look]
        xv = full_x[:, :n_look]
        n1 = a.sum(axis=1)
        x1 = (xv * a).sum(axis=1)
        n0 = n_look - n1
        x0 = xv.sum(axis=1) - x1
        valid = (n1 > 0) & (n0 > 0)
        z = np.full(g, -np.inf)
        if valid.any():
            z[valid] = _z_from_counts(n1[valid], x1[valid], n0[valid], x0[valid])
        any_cross |= z > boundaries.thresholds[future]
    return float(any_cross.mean()), draws.nonconvergence


@dataclass(frozen=True)
class StageRecord:
    stage: int
    n_primary: int
    z: float
    threshold: float
    predictive_prob: float | None


@dataclass(frozen=True)
class SequentialOutcome:
    stop_stage: int
    rejected: bool
    stopped_for: str
    n_used: int
    stages: tuple[StageRecord, ...] = field(default=())
    quality_flag: bool = False


def _stage_z(data: TrialDataset, n_t: int, use_aux: bool) -> float:
    order = np.argsort(data.enroll_order, kind="stable")[:n_t]
    arm = data.arm[order]
    x = (data.auxiliary if use_aux else data.primary)[order]
    n1 = int(arm.sum())
    if n1 == 0 or n1 == n_t:
        return -math.inf
    x1 = int(x[arm == 1].sum())
    x0 = int(x[arm == 0].sum())
    return float(_z_from_counts(n1, x1, n_t - n1, x0))


def run_sequential_trial(full_data: TrialDataset, config: GroupSeqConfig,
                         hyper: PriorHyperparams, boundaries: BoundarySchedule,
                         seed) -> SequentialOutcome:
    """Execute the sequential design on a complete dataset.

    Each interim look runs the futility analysis (posterior fit plus
    predictive success probability) and then, if the trial survives, the
    efficacy comparison; the final look is efficacy only. Rejection requires
    Z strictly above the boundary, so boundary ties continue. The efficacy
    Z at each look depends only on the design's test outcome for the first
    n_t patients, never on the futility model.
    """
    if full_data.k_count != 1:
        raise ValueError("sequential designs support a single population")
    if full_data.n_patients < config.n_schedule[-1]:
        raise ValueError("dataset smaller than the final analysis size")
    rng = as_rng(seed)
    use_aux = config.design_kind == "auxiliary-only"
    outcome_model = {"auxiliary-augmented": "joint", "primary-only": "primary",
                     "auxiliary-only": "auxiliary"}[config.design_kind]
    records = []
    quality = False
    t_count = config.stages
    for t in range(1, t_count + 1):
        n_t = config.n_schedule[t - 1]
        m_t = config.m_schedule[t - 1]
        z_t = _stage_z(full_data, n_t, use_aux)
        thr = boundaries.thresholds[t - 1]
        if t < t_count:
            data_m = restrict_to_stage(full_data, n_t, m_t)
            post = posterior_sample(data_m, hyper, config.draws, rng,
                                    outcome=outcome_model, burn=config.burn,
                                    adapt_window=config.adapt_window)
            pp, flag = predictive_success_prob(data_m, post, boundaries, config, t,
                                               hyper, rng)
            quality = quality or flag
            records.append(StageRecord(t, n_t, z_t, thr, pp))
            if pp <= config.beta_f:
                return SequentialOutcome(t, False, "futility", m_t, tuple(records), quality)
            if z_t > thr:
                return SequentialOutcome(t, True, "efficacy", m_t, tuple(records), quality)
        else:
            records.append(StageRecord(t, n_t, z_t, thr, None))
            return SequentialOutcome(t, z_t > thr, "final", m_t, tuple(records), quality)
    raise AssertionError("unreachable")
