"""Frequentist ground-truth data generation.

Correlated binary outcome pairs are produced from their two marginals and an
odds ratio via the Plackett-style quadratic; whole trials add multinomial
group enrollment and fair 1:1 randomization. A resample-with-perturbation
harness builds in-silico trials from a real control pool.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt

import numpy as np

from .data import TrialDataset
from .errors import EmptyPool, NoValidRoot
from .seeding import as_rng


@dataclass(frozen=True)
class JointCell:
    """Probabilities of the four (primary, auxiliary) outcome cells."""

    p11: float
    p10: float
    p01: float
    p00: float

    def as_array(self) -> np.ndarray:
        return np.array([self.p11, self.p10, self.p01, self.p00])

    @property
    def odds_ratio(self) -> float:
        return self.p11 * self.p00 / (self.p10 * self.p01)


@dataclass(frozen=True)
class ScenarioSpec:
    """Ground-truth configuration: marginals, odds ratios, prevalences.

    Arrays are indexed [group][arm]; ``prevalence`` is per group and must sum
    to one.
    """

    p_primary: np.ndarray
    p_auxiliary: np.ndarray
    odds_ratio: np.ndarray
    prevalence: np.ndarray
    n_total: int
    name: str = ""

    def __post_init__(self):
        for field_name in ("p_primary", "p_auxiliary", "odds_ratio"):
            arr = np.asarray(getattr(self, field_name), dtype=float)
            object.__setattr__(self, field_name, arr)
            if arr.shape != (self.k_count, 2):
                raise ValueError(f"{field_name} must have shape (K, 2)")
        object.__setattr__(self, "prevalence", np.asarray(self.prevalence, dtype=float))
        if np.any(self.p_primary <= 0) or np.any(self.p_primary >= 1):
            raise ValueError("primary marginals must lie in (0, 1)")
        if np.any(self.p_auxiliary <= 0) or np.any(self.p_auxiliary >= 1):
            raise ValueError("auxiliary marginals must lie in (0, 1)")
        if np.any(self.odds_ratio <= 0):
            raise ValueError("odds ratios must be positive")
        if abs(float(self.prevalence.sum()) - 1.0) > 1e-9 or np.any(self.prevalence <= 0):
            raise ValueError("prevalences must be positive and sum to 1")
        if self.n_total <= 0:
            raise ValueError("n_total must be positive")

    @property
    def k_count(self) -> int:
        return int(np.asarray(self.prevalence).shape[0])

    def joint_cells(self) -> list[list[JointCell]]:
        return [
            [solve_joint(self.p_primary[k, c], self.p_auxiliary[k, c], self.odds_ratio[k, c])
             for c in (0, 1)]
            for k in range(self.k_count)
        ]

    def gamma(self) -> np.ndarray:
        """True treatment effects on the primary outcome, per group."""
        return self.p_primary[:, 1] - self.p_primary[:, 0]


def _odds_ratio_of(p11: float, p_y: float, p_s: float) -> float:
    return p11 * (1 - p_y - p_s + p11) / ((p_y - p11) * (p_s - p11))


def solve_joint(p_y: float, p_s: float, ratio: float) -> JointCell:
    """Joint cell probabilities with given marginals and odds ratio.

    p11 solves (R-1)p^2 - [(R-1)(pY+pS)+1]p + R pY pS = 0 on the Frechet
    interval; R=1 factorizes. A bisection fallback covers numerically
    marginal discriminants at extreme ratios.
    """
    if not (0 < p_y < 1 and 0 < p_s < 1):
        raise ValueError("marginals must lie in (0, 1)")
    if ratio <= 0:
        raise ValueError("odds ratio must be positive")
    lo = max(0.0, p_y + p_s - 1.0)
    hi = min(p_y, p_s)
    if ratio == 1.0:
        p11 = p_y * p_s
    else:
        a = ratio - 1.0
        b = 1.0 + (p_y + p_s) * a
        disc = b * b - 4.0 * ratio * a * p_y * p_s
        if disc >= 0.0:
            p11 = (b - sqrt(disc)) / (2.0 * a)
        else:
            p11 = _bisect_joint(p_y, p_s, ratio, lo, hi)
    if not (lo - 1e-12 <= p11 <= hi + 1e-12):
        p11 = _bisect_joint(p_y, p_s, ratio, lo, hi)
    p11 = min(max(p11, lo), hi)
    cell = JointCell(p11, p_y - p11, p_s - p11, 1.0 - p_y - p_s + p11)
    if min(cell.p11, cell.p10, cell.p01, cell.p00) < -1e-12:
        raise NoValidRoot(f"no feasible joint cell for ({p_y}, {p_s}, {ratio})")
    return cell


def _bisect_joint(p_y, p_s, ratio, lo, hi) -> float:
    # odds ratio is increasing in p11 on the open Frechet interval
    eps = 1e-14
    a, b = lo + eps, hi - eps
    for _ in range(200):
        mid = 0.5 * (a + b)
        if _odds_ratio_of(mid, p_y, p_s) < ratio:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)


def simulate_trial(spec: ScenarioSpec, seed) -> TrialDataset:
    """Simulate one trial: group by prevalence, arm by fair coin, correlated
    (primary, auxiliary) pair from the group/arm joint cell."""
    rng = as_rng(seed)
    n = spec.n_total
    cells = spec.joint_cells()
    group = rng.choice(spec.k_count, size=n, p=spec.prevalence)
    arm = rng.integers(0, 2, size=n)
    u = rng.random(n)
    primary = np.zeros(n, dtype=np.int64)
    auxiliary = np.zeros(n, dtype=np.int64)
    for k in range(spec.k_count):
        for c in (0, 1):
            mask = (group == k) & (arm == c)
            if not mask.any():
                continue
            cum = np.cumsum(cells[k][c].as_array())
            idx = np.searchsorted(cum, u[mask], side="right")
            idx = np.minimum(idx, 3)
            primary[mask] = (idx < 2).astype(np.int64)
            auxiliary[mask] = ((idx == 0) | (idx == 2)).astype(np.int64)
    return TrialDataset(
        group=group, arm=arm, primary=primary, auxiliary=auxiliary,
        enroll_order=np.arange(n), primary_observed=np.ones(n, dtype=bool),
        k_count=spec.k_count,
    )


def resample_perturb(pool_primary, pool_auxiliary, p_y: float, p_s: float,
                     n_total: int, seed) -> TrialDataset:
    """In-silico trial from a control pool.

    Each patient is drawn with replacement from the pool and randomized 1:1.
    Control-arm outcomes are copied unmodified; on the experimental arm a
    negative primary outcome flips to positive with probability ``p_y`` and a
    negative auxiliary outcome flips with probability ``p_s``, independently.
    """
    pool_y = np.asarray(pool_primary, dtype=np.int64)
    pool_s = np.asarray(pool_auxiliary, dtype=np.int64)
    if pool_y.size == 0 or pool_y.shape != pool_s.shape:
        raise EmptyPool("control pool is empty or malformed")
    if not (0 <= p_y <= 1 and 0 <= p_s <= 1):
        raise ValueError("flip probabilities must lie in [0, 1]")
    rng = as_rng(seed)
    idx = rng.integers(0, pool_y.size, size=n_total)
    arm = rng.integers(0, 2, size=n_total)
    y = pool_y[idx].copy()
    s = pool_s[idx].copy()
    flip_y = (arm == 1) & (y == 0) & (rng.random(n_total) < p_y)
    flip_s = (arm == 1) & (s == 0) & (rng.random(n_total) < p_s)
    y[flip_y] = 1
    s[flip_s] = 1
    return TrialDataset(
        group=np.zeros(n_total, dtype=np.int64), arm=arm, primary=y, auxiliary=s,
        enroll_order=np.arange(n_total), primary_observed=np.ones(n_total, dtype=bool),
        k_count=1,
    )
