"""Trial data containers and the shared summary layer.

Every decision rule in the package consumes the same per-group summaries:
arm counts, difference in mean outcomes, a plug-in variance for the primary
effect estimate, the Z statistic and its one-sided p-value, plus the same
quantities for the auxiliary outcome.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from math import sqrt

import numpy as np
from scipy.stats import norm

from .errors import BadStage

CSV_COLUMNS = ("group", "arm", "primary", "auxiliary", "enroll_order", "primary_observed")


@dataclass(frozen=True)
class PatientRecord:
    group: int
    arm: int
    primary: int
    auxiliary: int
    enroll_order: int
    primary_observed: bool = True


@dataclass(frozen=True)
class TrialDataset:
    """Column-oriented patient data; immutable after construction.

    ``stage_schedule`` optionally lists interim look indices in terms of the
    count of primary-observed patients and must be strictly increasing.
    """

    group: np.ndarray
    arm: np.ndarray
    primary: np.ndarray
    auxiliary: np.ndarray
    enroll_order: np.ndarray
    primary_observed: np.ndarray
    k_count: int
    stage_schedule: tuple[int, ...] | None = None

    def __post_init__(self):
        for name in ("group", "arm", "primary", "auxiliary", "enroll_order"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.int64))
        object.__setattr__(self, "primary_observed", np.asarray(self.primary_observed, dtype=bool))
        n = self.group.shape[0]
        for name in ("arm", "primary", "auxiliary", "enroll_order", "primary_observed"):
            if getattr(self, name).shape != (n,):
                raise ValueError(f"field {name} length mismatch")
        if n:
            for name in ("arm", "primary", "auxiliary"):
                vals = getattr(self, name)
                if vals.min() < 0 or vals.max() > 1:
                    raise ValueError(f"{name} must be binary")
            if self.group.min() < 0 or self.group.max() >= self.k_count:
                raise ValueError("group index out of range")
            if np.unique(self.enroll_order).size != n:
                raise ValueError("enroll_order values must be unique")
        if self.stage_schedule is not None:
            sched = tuple(int(s) for s in self.stage_schedule)
            if any(b <= a for a, b in zip(sched, sched[1:])):
                raise ValueError("stage_schedule must be strictly increasing")
            object.__setattr__(self, "stage_schedule", sched)

    @property
    def n_patients(self) -> int:
        return int(self.group.shape[0])

    @property
    def patients(self) -> list[PatientRecord]:
        return [
            PatientRecord(int(g), int(a), int(y), int(s), int(e), bool(o))
            for g, a, y, s, e, o in zip(
                self.group, self.arm, self.primary, self.auxiliary,
                self.enroll_order, self.primary_observed,
            )
        ]

    @classmethod
    def from_patients(cls, patients, k_count: int, stage_schedule=None) -> "TrialDataset":
        return cls(
            group=np.array([p.group for p in patients], dtype=np.int64),
            arm=np.array([p.arm for p in patients], dtype=np.int64),
            primary=np.array([p.primary for p in patients], dtype=np.int64),
            auxiliary=np.array([p.auxiliary for p in patients], dtype=np.int64),
            enroll_order=np.array([p.enroll_order for p in patients], dtype=np.int64),
            primary_observed=np.array([p.primary_observed for p in patients], dtype=bool),
            k_count=k_count,
            stage_schedule=stage_schedule,
        )

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for g, a, y, s, e, o in zip(
                self.group, self.arm, self.primary, self.auxiliary,
                self.enroll_order, self.primary_observed,
            ):
                writer.writerow([int(g), int(a), int(y), int(s), int(e), int(o)])

    @classmethod
    def from_csv(cls, path, k_count: int | None = None) -> "TrialDataset":
        rows = []
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            for row in reader:
                rows.append([int(row[c]) for c in CSV_COLUMNS])
        arr = np.array(rows, dtype=np.int64).reshape(-1, len(CSV_COLUMNS))
        k = k_count if k_count is not None else (int(arr[:, 0].max()) + 1 if len(rows) else 1)
        return cls(
            group=arr[:, 0], arm=arr[:, 1], primary=arr[:, 2], auxiliary=arr[:, 3],
            enroll_order=arr[:, 4], primary_observed=arr[:, 5].astype(bool), k_count=k,
        )


@dataclass(frozen=True)
class GroupSummary:
    """Per-group effect estimates and test statistics.

    ``error`` is "empty_arm" when the group lacks patients in an arm; the
    statistic fields are NaN in that case and decision rules must treat the
    group as non-rejected.
    """

    group: int
    n0: int
    n1: int
    ybar_diff: float
    sbar_diff: float
    var_hat: float
    z: float
    pvalue: float
    aux_n0: int = 0
    aux_n1: int = 0
    aux_var_hat: float = float("nan")
    aux_z: float = float("nan")
    aux_pvalue: float = float("nan")
    error: str | None = field(default=None)


def _diff_stats(x1: np.ndarray, x0: np.ndarray) -> tuple[float, float, float, float]:
    """Difference in proportions with unpooled binomial plug-in variance.

    When both arms are constant the plug-in variance collapses to zero; the
    variance (only) then substitutes continuity-corrected proportions
    (x + 0.5) / (n + 1) to stay positive.
    """
    n1, n0 = x1.size, x0.size
    p1, p0 = float(x1.mean()), float(x0.mean())
    diff = p1 - p0
    var = p1 * (1.0 - p1) / n1 + p0 * (1.0 - p0) / n0
    if var == 0.0:
        q1 = (float(x1.sum()) + 0.5) / (n1 + 1.0)
        q0 = (float(x0.sum()) + 0.5) / (n0 + 1.0)
        var = q1 * (1.0 - q1) / n1 + q0 * (1.0 - q0) / n0
    z = diff / sqrt(var)
    return diff, var, z, float(norm.sf(z))


def compute_summaries(data: TrialDataset) -> list[GroupSummary]:
    """One GroupSummary per group.

    Primary statistics use primary-observed patients only; auxiliary
    statistics use every patient (auxiliary outcomes are always observed).
    A group missing an arm is reported with error="empty_arm" rather than
    aborting the remaining groups.
    """
    out = []
    nan = float("nan")
    for k in range(data.k_count):
        in_group = data.group == k
        obs = in_group & data.primary_observed
        y1 = data.primary[obs & (data.arm == 1)]
        y0 = data.primary[obs & (data.arm == 0)]
        s1 = data.auxiliary[in_group & (data.arm == 1)]
        s0 = data.auxiliary[in_group & (data.arm == 0)]
        if y1.size == 0 or y0.size == 0 or s1.size == 0 or s0.size == 0:
            out.append(GroupSummary(k, y0.size, y1.size, nan, nan, nan, nan, nan,
                                    s0.size, s1.size, error="empty_arm"))
            continue
        ybar, var_y, z_y, pv_y = _diff_stats(y1.astype(float), y0.astype(float))
        sbar, var_s, z_s, pv_s = _diff_stats(s1.astype(float), s0.astype(float))
        out.append(GroupSummary(
            group=k, n0=y0.size, n1=y1.size,
            ybar_diff=ybar, sbar_diff=sbar, var_hat=var_y, z=z_y, pvalue=pv_y,
            aux_n0=s0.size, aux_n1=s1.size, aux_var_hat=var_s, aux_z=z_s, aux_pvalue=pv_s,
        ))
    return out


def restrict_to_stage(data: TrialDataset, n_primary: int, m_enrolled: int) -> TrialDataset:
    """First ``m_enrolled`` patients by enrollment order, with primary
    outcomes observed only for the first ``n_primary`` of them.

    Nested restrictions compose: restricting an already-restricted dataset
    with smaller counts equals the single smaller restriction.
    """
    if n_primary > m_enrolled:
        raise BadStage(f"n_primary={n_primary} exceeds m_enrolled={m_enrolled}")
    if m_enrolled > data.n_patients:
        raise BadStage(f"m_enrolled={m_enrolled} exceeds dataset size {data.n_patients}")
    order = np.argsort(data.enroll_order, kind="stable")[:m_enrolled]
    rank = np.arange(m_enrolled)
    observed = data.primary_observed[order] & (rank < n_primary)
    return TrialDataset(
        group=data.group[order], arm=data.arm[order], primary=data.primary[order],
        auxiliary=data.auxiliary[order], enroll_order=data.enroll_order[order],
        primary_observed=observed, k_count=data.k_count,
    )
