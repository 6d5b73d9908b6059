"""Evaluation quantities: TP-rate, mean LF cost, speedup, failure curves.

Cost accounting per record kind: learning phases charge both runs
(t_hf + t_lf) since both simulators were consumed; evaluation charges only
the cheap run; baseline records charge the reference run. A failure is
"found" when the reference simulator confirmed it; on the evaluation curve
only TP counts, since there the cheap simulator is the one doing the
finding.
"""

from __future__ import annotations

import csv
import json
import os
import tempfile
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .errors import UndefinedMetricError
from .orchestrator import AbortRecord, Record, TrialRecord
from .outcome import Outcome

Curve = tuple[tuple[float, float], ...]


def _trials(records: Sequence[Record]) -> list[TrialRecord]:
    return [r for r in records if isinstance(r, TrialRecord)]


def _found_failure(record: TrialRecord) -> bool:
    if record.outcome is None:
        return record.hf_failure
    if record.phase == "evaluate":
        return record.outcome == Outcome.TP
    return record.hf_failure


def _charged_cost(record: TrialRecord) -> float:
    if record.t_lf is None:
        return record.t_hf
    if record.phase == "evaluate":
        return record.t_lf
    return record.t_hf + record.t_lf


def tp_rate(records: Sequence[Record]) -> float:
    """Fraction of trials that found a reference-confirmed failure.

    For learned-system records that is the TP fraction; baseline records
    count plain reference failures.
    """
    trials = _trials(records)
    if not trials:
        raise UndefinedMetricError("tp_rate of an empty record set")
    hits = sum(
        1
        for r in trials
        if (r.hf_failure if r.outcome is None else r.outcome == Outcome.TP)
    )
    return hits / len(trials)


def mean_lf_cost(records: Sequence[Record]) -> float:
    """Mean per-trial cost ratio t_lf / t_hf."""
    ratios = [r.t_lf / r.t_hf for r in _trials(records) if r.t_lf is not None]
    if not ratios:
        raise UndefinedMetricError("mean_lf_cost needs records with both runtimes")
    return sum(ratios) / len(ratios)


def _failure_rate_per_cost(records: Sequence[Record], label: str) -> float:
    trials = _trials(records)
    if not trials:
        raise UndefinedMetricError(f"speedup needs nonempty {label} records")
    failures = sum(1 for r in trials if _found_failure(r))
    cost = sum(_charged_cost(r) for r in trials)
    return failures / cost


def speedup(
    eval_records: Sequence[Record], baseline_records: Sequence[Record]
) -> float:
    """Failures found per unit cost, relative to the baseline."""
    base = _failure_rate_per_cost(baseline_records, "baseline")
    if base == 0.0:
        raise UndefinedMetricError("baseline found no failures; speedup undefined")
    return _failure_rate_per_cost(eval_records, "evaluation") / base


def failure_curve(records: Sequence[Record]) -> Curve:
    """Prefix sums of (charged cost, found failures) in record order."""
    points: list[tuple[float, float]] = []
    cost = 0.0
    found = 0
    for record in _trials(records):
        cost += _charged_cost(record)
        found += 1 if _found_failure(record) else 0
        points.append((cost, float(found)))
    return tuple(points)


def _step_value(curve: Curve, cost: float) -> float:
    """Cumulative failures at ``cost`` under step interpolation (flat beyond)."""
    value = 0.0
    for c, f in curve:
        if c <= cost:
            value = f
        else:
            break
    return value


def break_even(framework_curve: Curve, baseline_curve: Curve) -> Optional[float]:
    """Smallest cost where the framework has caught up with the baseline.

    Catching up requires both matching the baseline's cumulative failures
    at that cost and having found at least one failure; otherwise the
    trivial all-zero prefix would qualify. None when never reached.
    """
    candidates = sorted({c for c, _ in framework_curve} | {c for c, _ in baseline_curve})
    for cost in candidates:
        fw = _step_value(framework_curve, cost)
        if fw >= 1.0 and fw >= _step_value(baseline_curve, cost):
            return cost
    return None


@dataclass(frozen=True)
class RunReport:
    """All headline quantities for one run, plus plot-ready curves."""

    tp_rate: float
    mean_lf_cost: Optional[float] = None
    speedup: Optional[float] = None
    break_even: Optional[float] = None
    curves: dict[str, Curve] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "tp_rate": self.tp_rate,
            "mean_lf_cost": self.mean_lf_cost,
            "speedup": self.speedup,
            "break_even": self.break_even,
            "curves": {
                name: [list(point) for point in curve]
                for name, curve in self.curves.items()
            },
        }


def build_report(
    records: Sequence[Record],
    baseline_records: Optional[Sequence[Record]] = None,
    extra_curves: Optional[dict[str, Sequence[Record]]] = None,
    label: Optional[str] = None,
) -> RunReport:
    """Assemble a RunReport from one primary record stream.

    ``baseline_records`` unlocks speedup and break-even; ``extra_curves``
    adds named curves (for example a meta-training stream) to the report.
    ``label`` names the primary curve; defaults to the records' phase.
    """
    trials = _trials(records)
    phase = label or (trials[0].phase if trials else "evaluate")
    curves = {phase: failure_curve(records)}
    lf_ratios = [r for r in trials if r.t_lf is not None]
    report_speedup = None
    report_break_even = None
    if baseline_records is not None:
        curves["baseline"] = failure_curve(baseline_records)
        report_speedup = speedup(records, baseline_records)
        report_break_even = break_even(curves[phase], curves["baseline"])
    if extra_curves:
        for name, stream in extra_curves.items():
            curves[name] = failure_curve(stream)
    return RunReport(
        tp_rate=tp_rate(records),
        mean_lf_cost=mean_lf_cost(records) if lf_ratios else None,
        speedup=report_speedup,
        break_even=report_break_even,
        curves=curves,
    )


TRIAL_COLUMNS = (
    "kind",
    "phase",
    "iteration",
    "scenario_id",
    "hf_failure",
    "lf_failure",
    "outcome",
    "t_hf",
    "t_lf",
    "config",
    "assignment",
    "error",
)

CURVE_COLUMNS = ("curve", "cumulative_cost", "cumulative_failures")


def _trial_row(record: Record) -> dict:
    if isinstance(record, AbortRecord):
        return {
            "kind": "abort",
            "phase": record.phase,
            "iteration": record.iteration,
            "scenario_id": record.scenario_id,
            "error": record.error,
        }
    return {
        "kind": "trial",
        "phase": record.phase,
        "iteration": record.iteration,
        "scenario_id": record.scenario_id,
        "hf_failure": record.hf_failure,
        "lf_failure": record.lf_failure,
        "outcome": record.outcome.value if record.outcome is not None else None,
        "t_hf": record.t_hf,
        "t_lf": record.t_lf,
        "config": json.dumps(
            [list(pair) for pair in record.config.values], sort_keys=True
        ),
        "assignment": json.dumps(
            [list(pair) for pair in record.assignment.values], sort_keys=True
        ),
    }


def _write_atomic(path: str, writer) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as handle:
            writer(handle)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_report_files(
    report: RunReport, records: Sequence[Record], out_dir: str
) -> tuple[str, str, str]:
    """Emit report.json plus flat trials.csv / curves.csv under ``out_dir``.

    Column names are a stable interface; rows follow record order, and
    curve rows follow the report's curve order. Each file lands via
    temp-then-rename so readers never see a partial write.
    """
    os.makedirs(out_dir, exist_ok=True)
    report_path = os.path.join(out_dir, "report.json")
    trials_path = os.path.join(out_dir, "trials.csv")
    curves_path = os.path.join(out_dir, "curves.csv")

    _write_atomic(
        report_path,
        lambda h: h.write(json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n"),
    )

    def write_trials(handle) -> None:
        writer = csv.DictWriter(handle, fieldnames=TRIAL_COLUMNS)
        writer.writeheader()
        for record in records:
            writer.writerow(_trial_row(record))

    _write_atomic(trials_path, write_trials)

    def write_curves(handle) -> None:
        writer = csv.writer(handle)
        writer.writerow(CURVE_COLUMNS)
        for name, curve in report.curves.items():
            for cost, failures in curve:
                writer.writerow([name, repr(cost), repr(failures)])

    _write_atomic(curves_path, write_curves)
    return report_path, trials_path, curves_path
