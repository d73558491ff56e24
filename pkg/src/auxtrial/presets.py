"""Bundled demonstration configurations.

Five treatment-effect patterns cover the interesting combinations of
primary and auxiliary effects (group 1 carries any effect; the remaining
groups are always null):

1. no effects anywhere;
2. auxiliary effect only;
3. primary effect only;
4. concordant primary and auxiliary effects;
5. primary effect with an opposite (negative) auxiliary effect, encoded by
   swapping the auxiliary marginals between arms.

Control marginals are 0.2 (primary) and 0.5 (auxiliary); effects move them
to 0.4 and 0.75. The default prior matches the shipped prior-predictive
report configuration.
"""

from __future__ import annotations

import numpy as np

from .groupseq import GroupSeqConfig
from .prior import PriorHyperparams
from .scenarios import ScenarioSpec

P_PRIMARY_CONTROL = 0.2
P_PRIMARY_EFFECT = 0.4
P_AUX_CONTROL = 0.5
P_AUX_EFFECT = 0.75


def subgroup_scenario(kind: int, odds_ratio: float, groups: int = 2) -> ScenarioSpec:
    """Multi-group testing scenario ``kind`` in 1..5 with a common odds ratio.

    Two groups enroll with prevalences (0.6, 0.4) and 200 patients; six
    groups with (0.25, 0.15 x 5) and 600 patients.
    """
    if kind not in (1, 2, 3, 4, 5):
        raise ValueError("kind must be 1..5")
    if groups == 2:
        prevalence = [0.6, 0.4]
        n_total = 200
    elif groups == 6:
        prevalence = [0.25] + [0.15] * 5
        n_total = 600
    else:
        raise ValueError("groups must be 2 or 6")
    p_y = np.full((groups, 2), P_PRIMARY_CONTROL)
    p_s = np.full((groups, 2), P_AUX_CONTROL)
    if kind in (3, 4, 5):
        p_y[0, 1] = P_PRIMARY_EFFECT
    if kind in (2, 4):
        p_s[0, 1] = P_AUX_EFFECT
    if kind == 5:
        p_s[0, 0] = P_AUX_EFFECT
        p_s[0, 1] = P_AUX_CONTROL
    return ScenarioSpec(
        p_primary=p_y, p_auxiliary=p_s,
        odds_ratio=np.full((groups, 2), float(odds_ratio)),
        prevalence=np.asarray(prevalence), n_total=n_total,
        name=f"subgroup-{kind}-R{odds_ratio:g}",
    )


def sequential_scenario(kind: int, odds_ratio: float, n_total: int = 200) -> ScenarioSpec:
    """Single-population version of the same five effect patterns, used by
    the sequential designs."""
    base = subgroup_scenario(kind, odds_ratio, groups=2)
    return ScenarioSpec(
        p_primary=base.p_primary[:1], p_auxiliary=base.p_auxiliary[:1],
        odds_ratio=base.odds_ratio[:1], prevalence=np.array([1.0]), n_total=n_total,
        name=f"sequential-{kind}-R{odds_ratio:g}",
    )


INTERCEPT_SD = 0.7071067811865476  # variance 0.5


def default_prior(k_count: int = 2, spike_prob: float = 0.9,
                  c_spike: float = 0.0) -> PriorHyperparams:
    """Prior used throughout the shipped configurations: skeptical point mass
    on "no effects" with a wide slab, shared latent variance 1, and an
    effect fraction concentrated near one."""
    return PriorHyperparams(
        k_count=k_count,
        intercept_y_mean=-1.5, intercept_y_sd=INTERCEPT_SD,
        intercept_s_mean=-0.8, intercept_s_sd=INTERCEPT_SD,
        sigma2=1.0, spike_prob=spike_prob,
        slab_mean=0.0, slab_var=0.8,
        beta_shape_v=6.0, beta_shape_o=1.0, c_spike=c_spike,
    )


def default_sequential_design(design_kind: str = "auxiliary-augmented",
                              beta_e: float = 2.0, beta_f: float = 0.13,
                              draws: int = 2000, burn: int = 500) -> GroupSeqConfig:
    """Two-stage design with looks after 100 and 200 primary outcomes."""
    return GroupSeqConfig(
        n_schedule=(100, 200), alpha=0.05, beta_e=beta_e, beta_f=beta_f,
        design_kind=design_kind, draws=draws, burn=burn,
    )
