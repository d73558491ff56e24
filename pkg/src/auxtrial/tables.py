"""Operating-characteristic records and table rendering."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from math import sqrt


@dataclass(frozen=True)
class OperatingCharacteristics:
    """Per scenario-and-method simulation summary.

    Multi-group testing fills per-group rejection proportions and FWER;
    sequential designs fill power with its interim/final decomposition and
    the expected sample size. Proportions carry binomial Monte Carlo
    standard errors.
    """

    scenario: str
    method: str
    replicates: int
    group_rejection: tuple[float, ...] = ()
    fwer: float | None = None
    power: float | None = None
    interim: float | None = None
    final: float | None = None
    expected_n: float | None = None
    extras: dict = field(default_factory=dict)

    def mcse(self, p: float) -> float:
        return sqrt(max(p * (1.0 - p), 0.0) / self.replicates)


_COLUMNS = ("scenario", "method", "replicates", "fwer", "power", "interim", "final",
            "expected_n")


def emit_table(records: list[OperatingCharacteristics], layout: str,
               csv_path, text_path=None) -> str:
    """Lossless CSV plus an aligned text rendering.

    ``scenario-rows`` groups rows by scenario with one method per line and
    the sequential columns (power, interim, final, expected n);
    ``method-rows`` lists one line per (scenario, method) with the
    per-group rejection proportions.
    """
    if layout not in ("scenario-rows", "method-rows"):
        raise ValueError("layout must be scenario-rows or method-rows")
    max_groups = max((len(r.group_rejection) for r in records), default=0)
    group_cols = [f"group{g + 1}" for g in range(max_groups)]
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(_COLUMNS) + group_cols)
        for r in records:
            row = [r.scenario, r.method, r.replicates]
            row += ["" if v is None else f"{v:.6g}" for v in
                    (r.fwer, r.power, r.interim, r.final, r.expected_n)]
            row += [f"{v:.6g}" for v in r.group_rejection]
            row += [""] * (max_groups - len(r.group_rejection))
            writer.writerow(row)

    text = _render_text(records, layout, max_groups)
    if text_path is not None:
        with open(text_path, "w") as fh:
            fh.write(text)
    return text


def _fmt(v, digits=4):
    return "" if v is None else f"{v:.{digits}f}"


def _render_text(records, layout, max_groups) -> str:
    lines = []
    if layout == "scenario-rows":
        header = ["method", "power", "interim", "final", "E[N]"]
        scenarios = []
        for r in records:
            if r.scenario not in scenarios:
                scenarios.append(r.scenario)
        for scen in scenarios:
            lines.append(f"== {scen} ==")
            rows = [header]
            for r in records:
                if r.scenario != scen:
                    continue
                p = r.power if r.power is not None else r.fwer
                rows.append([r.method, _fmt(p), _fmt(r.interim), _fmt(r.final),
                             _fmt(r.expected_n, 1)])
            lines.extend(_align(rows))
            lines.append("")
    else:
        header = ["scenario", "method", "fwer"] + [f"group{g + 1}" for g in range(max_groups)]
        rows = [header]
        for r in records:
            rows.append([r.scenario, r.method, _fmt(r.fwer)]
                        + [_fmt(v) for v in r.group_rejection]
                        + [""] * (max_groups - len(r.group_rejection)))
        lines.extend(_align(rows))
    return "\n".join(lines) + "\n"


def _align(rows) -> list[str]:
    if not rows:
        return []
    widths = [max(len(str(row[i])) for row in rows) for i in range(len(rows[0]))]
    return ["  ".join(str(v).ljust(w) for v, w in zip(row, widths)).rstrip()
            for row in rows]
