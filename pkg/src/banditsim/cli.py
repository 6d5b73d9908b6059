"""Command-line runner tying configs, phases, persistence, and reports together.

Every subcommand loads one YAML run config, executes its phase(s), and
finalizes outputs atomically: files are staged in a scratch directory and
renamed into place only after everything computed cleanly, so a crashed
run never leaves a partial set of outputs behind.
"""

from __future__ import annotations

import os
import shutil
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager, nullcontext
from dataclasses import replace
from typing import Optional, Sequence

import click

from .config import RunConfig, load_run_config
from .errors import BanditsimError, UndefinedMetricError
from .fidelity import FidelityModelState, load_posterior, save_posterior, warm_start
from .figures import save_failures_over_cost, save_fidelity_posterior
from .metrics import build_report, failure_curve, write_report_files
from .orchestrator import (
    PhasePlan,
    Record,
    TrialRecord,
    read_records,
    run_baseline,
    run_evaluation,
    run_meta_testing,
    run_meta_training,
    write_records,
)
from .scenario import (
    ScenarioModelState,
    scenario_state_from_dict,
    scenario_state_to_dict,
)
from .simulator import BrakingSimulator

RECORD_FILES = {
    "meta_train": "records_meta_train.jsonl",
    "evaluate": "records_evaluate.jsonl",
    "baseline": "records_baseline.jsonl",
    "meta_test_uniform": "records_meta_test_uniform.jsonl",
    "meta_test_warm": "records_meta_test_warm.jsonl",
}

DEFAULT_EVALUATE_ITERATIONS = 100
DEFAULT_META_TEST_ITERATIONS = 200


class _Stage:
    """Staging area for a command's outputs; nothing lands until commit."""

    def __init__(self, out_dir: str) -> None:
        os.makedirs(out_dir, exist_ok=True)
        self.dir = tempfile.mkdtemp(dir=out_dir, prefix=".stage-")
        self._targets: list[tuple[str, str]] = []

    def path(self, final_path: str) -> str:
        """Staging location that will be renamed to ``final_path`` on commit."""
        staged = os.path.join(self.dir, os.path.basename(final_path))
        self.register(staged, final_path)
        return staged

    def register(self, staged: str, final_path: str) -> None:
        self._targets.append((staged, os.path.abspath(final_path)))

    def commit(self) -> None:
        for staged, final in self._targets:
            os.makedirs(os.path.dirname(final), exist_ok=True)
            try:
                os.replace(staged, final)
            except OSError:
                # Target on another filesystem; fall back to a copy-based move.
                shutil.move(staged, final)

    def discard(self) -> None:
        shutil.rmtree(self.dir, ignore_errors=True)


@contextmanager
def _staged_outputs(out_dir: str):
    stage = _Stage(out_dir)
    try:
        yield stage
        stage.commit()
    finally:
        stage.discard()


def _fail(message: str) -> click.ClickException:
    return click.ClickException(message)


def _load_config(path: str, out: Optional[str]) -> RunConfig:
    try:
        config = load_run_config(path)
        if out is not None:
            config = replace(config, output_dir=os.path.abspath(out))
    except BanditsimError as exc:
        raise _fail(str(exc)) from exc
    if config.output_dir is None:
        raise _fail(f"no output directory: pass --out or set output_dir in {path}")
    return config


def _phase_seed(config: RunConfig, phase: str, override: Optional[int]) -> int:
    if override is not None:
        return override
    if phase in config.phases:
        return config.phases[phase].seed
    raise _fail(f"no seed for phase {phase!r}: declare it in the config or pass --seed")


def _phase_iterations(config: RunConfig, phase: str, default: Optional[int]) -> int:
    if phase in config.phases:
        return config.phases[phase].iterations
    if default is None:
        raise _fail(f"config declares no {phase!r} phase")
    return default


def _phase_budget(config: RunConfig, phase: str) -> float:
    if phase in config.phases:
        return config.phase_budget(phase)
    return config.budget


def _executor(workers: int):
    # Pool parallelizes the two runs of one trial; updates stay serial.
    if workers > 1:
        return ThreadPoolExecutor(max_workers=workers)
    return nullcontext(None)


def _load_states(
    config: RunConfig, posterior_in: Optional[str]
) -> tuple[FidelityModelState, ScenarioModelState]:
    """Fidelity and scenario states from a saved posterior document."""
    path = posterior_in or config.posterior_in
    if path is None or not os.path.exists(path):
        raise _fail(f"posterior file not found: {path or '(none given)'}")
    try:
        doc = load_posterior(path)
        fidelity_state = warm_start(config.space, doc)
        scenario_state = scenario_state_from_dict(
            config.specs, doc.get("scenarios", {})
        )
    except BanditsimError as exc:
        raise _fail(f"cannot load posterior {path}: {exc}") from exc
    return fidelity_state, scenario_state


def _stage_posterior(
    stage: _Stage,
    config: RunConfig,
    posterior_out: Optional[str],
    fidelity_state: FidelityModelState,
    scenario_state: ScenarioModelState,
) -> str:
    final = (
        posterior_out
        or config.posterior_out
        or os.path.join(config.output_dir, "posterior.json")
    )
    staged = stage.path(final)
    save_posterior(
        fidelity_state,
        staged,
        extra={"scenarios": scenario_state_to_dict(scenario_state)},
    )
    return staged


def _stage_report(
    stage: _Stage,
    config: RunConfig,
    records: Sequence[Record],
    baseline_records: Optional[Sequence[Record]],
    extra_curves: Optional[dict] = None,
    label: Optional[str] = None,
) -> None:
    # A run with no completed trials has no defined metrics; skip the report
    # rather than fail, so zero-iteration runs still land their other outputs.
    if not any(isinstance(r, TrialRecord) for r in records):
        return
    try:
        report = build_report(records, baseline_records, extra_curves, label=label)
    except UndefinedMetricError:
        # Baseline found nothing, so speedup has no value; keep its curve.
        report = build_report(records, None, extra_curves, label=label)
        if baseline_records is not None:
            curves = dict(report.curves)
            curves["baseline"] = failure_curve(baseline_records)
            report = replace(report, curves=curves)
    for written in write_report_files(report, records, stage.dir):
        stage.register(
            written, os.path.join(config.output_dir, os.path.basename(written))
        )
    save_failures_over_cost(
        report, stage.path(os.path.join(config.output_dir, "failures_over_cost.png"))
    )


def _stage_posterior_figure(
    stage: _Stage, config: RunConfig, staged_posterior: str
) -> None:
    doc = load_posterior(staged_posterior)
    save_fidelity_posterior(
        doc, stage.path(os.path.join(config.output_dir, "fidelity_posterior.png"))
    )


def _maybe_baseline_records(config: RunConfig) -> Optional[list[Record]]:
    path = os.path.join(config.output_dir, RECORD_FILES["baseline"])
    if os.path.exists(path):
        return read_records(path)
    return None


@click.group()
def main() -> None:
    """Bandit-driven falsification with learned simulator fidelity."""


_config_option = click.option(
    "--config", "config_path", required=True, type=click.Path(), help="Run config YAML."
)
_seed_option = click.option(
    "--seed", type=int, default=None, help="Overrides the phase seed from the config."
)
_out_option = click.option(
    "--out", type=click.Path(), default=None, help="Output directory."
)
_workers_option = click.option(
    "--workers",
    type=int,
    default=1,
    help="Thread pool size for the two simulator runs of a trial.",
)


@main.command("meta-train")
@_config_option
@_seed_option
@_out_option
@click.option("--posterior-out", type=click.Path(), default=None)
@_workers_option
def cmd_meta_train(
    config_path: str,
    seed: Optional[int],
    out: Optional[str],
    posterior_out: Optional[str],
    workers: int,
) -> None:
    """Learn fidelity and scenario posteriors on the training scenarios.

    Also runs the reference-only baseline when the config declares a
    baseline phase, so the report can include speedup and break-even.
    """
    config = _load_config(config_path, out)
    simulator = BrakingSimulator(config.space)
    train_specs = [s for s in config.specs if s.split == "train"]
    if not train_specs:
        raise _fail("no train-split scenarios in the scenario space")

    plan = PhasePlan.uniform(
        phase="meta_train",
        iterations=_phase_iterations(config, "meta_train", None),
        scenario_ids=[s.id for s in train_specs],
        budget=_phase_budget(config, "meta_train"),
        seed=_phase_seed(config, "meta_train", seed),
    )
    fidelity_state = FidelityModelState.uniform(config.space, plan.budget)
    scenario_state = ScenarioModelState.uniform(config.specs)

    with _executor(workers) as pool:
        fidelity_state, scenario_state, records = run_meta_training(
            plan, fidelity_state, scenario_state, simulator, executor=pool
        )

    baseline_records = None
    if "baseline" in config.phases:
        baseline_records = run_baseline(
            iterations=config.phases["baseline"].iterations,
            scenario_specs=train_specs,
            space=config.space,
            simulator=simulator,
            seed=config.phases["baseline"].seed,
        )

    with _staged_outputs(config.output_dir) as stage:
        write_records(
            records,
            stage.path(os.path.join(config.output_dir, RECORD_FILES["meta_train"])),
        )
        if baseline_records is not None:
            write_records(
                baseline_records,
                stage.path(os.path.join(config.output_dir, RECORD_FILES["baseline"])),
            )
        staged_posterior = _stage_posterior(
            stage, config, posterior_out, fidelity_state, scenario_state
        )
        _stage_report(stage, config, records, baseline_records)
        _stage_posterior_figure(stage, config, staged_posterior)
    click.echo(f"meta-train: {len(records)} records -> {config.output_dir}")


@main.command("evaluate")
@_config_option
@_seed_option
@_out_option
@click.option("--posterior-in", type=click.Path(), default=None)
@_workers_option
def cmd_evaluate(
    config_path: str,
    seed: Optional[int],
    out: Optional[str],
    posterior_in: Optional[str],
    workers: int,
) -> None:
    """Run frozen-fidelity trials with learned scenario sampling."""
    config = _load_config(config_path, out)
    fidelity_state, scenario_state = _load_states(config, posterior_in)
    if "evaluate" in config.phases:
        budget = config.phase_budget("evaluate")
        if budget != fidelity_state.budget:
            fidelity_state = replace(fidelity_state, budget=budget)
    simulator = BrakingSimulator(config.space)

    with _executor(workers) as pool:
        records = run_evaluation(
            iterations=_phase_iterations(
                config, "evaluate", DEFAULT_EVALUATE_ITERATIONS
            ),
            fidelity_state=fidelity_state,
            scenario_state=scenario_state,
            simulator=simulator,
            seed=_phase_seed(config, "evaluate", seed),
            executor=pool,
        )

    with _staged_outputs(config.output_dir) as stage:
        write_records(
            records,
            stage.path(os.path.join(config.output_dir, RECORD_FILES["evaluate"])),
        )
        _stage_report(stage, config, records, _maybe_baseline_records(config))
    click.echo(f"evaluate: {len(records)} records -> {config.output_dir}")


@main.command("meta-test")
@_config_option
@_seed_option
@_out_option
@click.option("--posterior-in", type=click.Path(), default=None)
@click.option("--posterior-out", type=click.Path(), default=None)
@click.option(
    "--mode",
    type=click.Choice(["uniform", "warm"]),
    required=True,
    help="warm reuses a trained fidelity posterior; uniform starts flat.",
)
@_workers_option
def cmd_meta_test(
    config_path: str,
    seed: Optional[int],
    out: Optional[str],
    posterior_in: Optional[str],
    posterior_out: Optional[str],
    mode: str,
    workers: int,
) -> None:
    """Learn on held-out scenarios, warm-started or from scratch.

    Scenario beliefs always start fresh; only the fidelity posterior
    carries over in warm mode. When both modes have been run into the
    same directory the report includes both curves.
    """
    config = _load_config(config_path, out)
    simulator = BrakingSimulator(config.space)
    test_ids = [s.id for s in config.specs if s.split == "test"]
    if not test_ids:
        raise _fail("no test-split scenarios in the scenario space")

    budget = _phase_budget(config, "meta_test")
    if mode == "warm":
        fidelity_state, _ = _load_states(config, posterior_in)
        fidelity_state = replace(fidelity_state, budget=budget)
    else:
        fidelity_state = FidelityModelState.uniform(config.space, budget)
    scenario_state = ScenarioModelState.uniform(config.specs)

    plan = PhasePlan.uniform(
        phase="meta_test",
        iterations=_phase_iterations(
            config, "meta_test", DEFAULT_META_TEST_ITERATIONS
        ),
        scenario_ids=test_ids,
        budget=budget,
        seed=_phase_seed(config, "meta_test", seed),
    )
    with _executor(workers) as pool:
        fidelity_state, scenario_state, records = run_meta_testing(
            plan, fidelity_state, scenario_state, simulator, executor=pool
        )

    other = "uniform" if mode == "warm" else "warm"
    other_path = os.path.join(config.output_dir, RECORD_FILES[f"meta_test_{other}"])
    extra = None
    if os.path.exists(other_path):
        extra = {f"meta_test_{other}": read_records(other_path)}

    with _staged_outputs(config.output_dir) as stage:
        write_records(
            records,
            stage.path(
                os.path.join(config.output_dir, RECORD_FILES[f"meta_test_{mode}"])
            ),
        )
        if posterior_out or config.posterior_out:
            _stage_posterior(
                stage, config, posterior_out, fidelity_state, scenario_state
            )
        _stage_report(
            stage,
            config,
            records,
            _maybe_baseline_records(config),
            extra,
            label=f"meta_test_{mode}",
        )
    click.echo(f"meta-test ({mode}): {len(records)} records -> {config.output_dir}")


@main.command("baseline")
@_config_option
@_seed_option
@_out_option
def cmd_baseline(config_path: str, seed: Optional[int], out: Optional[str]) -> None:
    """Reference-only uniform search over the training scenarios."""
    config = _load_config(config_path, out)
    simulator = BrakingSimulator(config.space)
    train_specs = [s for s in config.specs if s.split == "train"]
    if not train_specs:
        raise _fail("no train-split scenarios in the scenario space")
    records = run_baseline(
        iterations=_phase_iterations(config, "baseline", None),
        scenario_specs=train_specs,
        space=config.space,
        simulator=simulator,
        seed=_phase_seed(config, "baseline", seed),
    )
    with _staged_outputs(config.output_dir) as stage:
        write_records(
            records,
            stage.path(os.path.join(config.output_dir, RECORD_FILES["baseline"])),
        )
        _stage_report(stage, config, records, None)
    click.echo(f"baseline: {len(records)} records -> {config.output_dir}")


@main.command("report")
@_config_option
@_out_option
def cmd_report(config_path: str, out: Optional[str]) -> None:
    """Rebuild report files from whatever record streams exist in --out."""
    config = _load_config(config_path, out)
    streams: dict[str, list[Record]] = {}
    for name, filename in RECORD_FILES.items():
        path = os.path.join(config.output_dir, filename)
        if os.path.exists(path):
            streams[name] = read_records(path)
    if not streams:
        raise _fail(f"no record files found in {config.output_dir}")

    baseline_records = streams.pop("baseline", None)
    # Prefer the evaluation stream as the headline; fall back in a fixed order.
    primary = next(
        (
            name
            for name in ("evaluate", "meta_train", "meta_test_warm", "meta_test_uniform")
            if name in streams
        ),
        None,
    )
    with _staged_outputs(config.output_dir) as stage:
        if primary is None:
            if baseline_records is None:
                raise _fail(f"no usable record files found in {config.output_dir}")
            _stage_report(stage, config, baseline_records, None)
        else:
            records = streams.pop(primary)
            _stage_report(
                stage,
                config,
                records,
                baseline_records,
                streams or None,
                label=primary,
            )
        posterior_path = config.posterior_out or os.path.join(
            config.output_dir, "posterior.json"
        )
        if os.path.exists(posterior_path):
            _stage_posterior_figure(stage, config, posterior_path)
    click.echo(f"report -> {config.output_dir}")


if __name__ == "__main__":
    sys.exit(main())
