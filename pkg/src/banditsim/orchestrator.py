"""Phase runners: meta-training, evaluation, meta-testing, and the baseline.

Each phase is a pure function from (plan, learner states, simulator) to new
states plus an ordered record stream. One seeded source per phase is split
into four named sub-streams (scenario choice, parameter sampling, fidelity
sampling, simulator noise) so changing one consumer does not perturb the
others.
"""

from __future__ import annotations

import json
import os
import tempfile
from concurrent.futures import Executor
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .bandit import ContinuousDomain, DiscreteDomain, Value
from .errors import SchemaError, SimulationError
from .fidelity import (
    FidelityAssignment,
    FidelityModelState,
    FidelitySpace,
    classify_fidelity_trial,
    credit_fidelity,
    map_fidelity,
    sample_fidelity,
)
from .outcome import Outcome, classify_outcome
from .scenario import (
    ScenarioConfig,
    ScenarioModelState,
    ScenarioSpec,
    classify_scenario_trial,
    credit_scenario,
    sample_scenario_config,
)
from .simulator import Simulator

PHASES = ("meta_train", "evaluate", "meta_test", "baseline")

_SEED_CEILING = 2**63


@dataclass(frozen=True)
class TrialRecord:
    """One completed trial. Baseline records carry no LF fields."""

    iteration: int
    scenario_id: str
    config: ScenarioConfig
    assignment: FidelityAssignment
    hf_failure: bool
    t_hf: float
    phase: str
    lf_failure: Optional[bool] = None
    outcome: Optional[Outcome] = None
    t_lf: Optional[float] = None

    def __post_init__(self) -> None:
        if self.phase not in PHASES:
            raise ValueError(f"unknown phase {self.phase!r}")
        if self.t_hf <= 0:
            raise ValueError("t_hf must be positive")
        lf_fields = (self.lf_failure is None, self.outcome is None, self.t_lf is None)
        if any(lf_fields) != all(lf_fields):
            raise ValueError("lf_failure, outcome and t_lf must be set together")
        if self.t_lf is not None and self.t_lf <= 0:
            raise ValueError("t_lf must be positive")
        if self.outcome is not None and self.outcome != classify_outcome(
            self.hf_failure, bool(self.lf_failure)
        ):
            raise ValueError(
                f"outcome {self.outcome} inconsistent with verdict pair "
                f"({self.hf_failure}, {self.lf_failure})"
            )

    def to_dict(self) -> dict:
        return {
            "kind": "trial",
            "iteration": self.iteration,
            "scenario_id": self.scenario_id,
            "config": {
                "values": [list(pair) for pair in self.config.values],
                "arm_indices": list(self.config.arm_indices),
            },
            "assignment": {
                "values": [list(pair) for pair in self.assignment.values],
                "arm_indices": list(self.assignment.arm_indices),
            },
            "hf_failure": self.hf_failure,
            "lf_failure": self.lf_failure,
            "outcome": self.outcome.value if self.outcome is not None else None,
            "t_hf": self.t_hf,
            "t_lf": self.t_lf,
            "phase": self.phase,
        }


@dataclass(frozen=True)
class AbortRecord:
    """A trial the simulator could not complete; no beliefs were updated."""

    iteration: int
    scenario_id: str
    phase: str
    error: str

    def to_dict(self) -> dict:
        return {
            "kind": "abort",
            "iteration": self.iteration,
            "scenario_id": self.scenario_id,
            "phase": self.phase,
            "error": self.error,
        }


Record = Union[TrialRecord, AbortRecord]


@dataclass(frozen=True)
class PhasePlan:
    """What to run: phase kind, length, scenario mix, budget, and seed."""

    phase: str
    iterations: int
    scenario_weights: tuple[tuple[str, float], ...]
    budget: float
    seed: int

    def __post_init__(self) -> None:
        if self.phase not in PHASES:
            raise ValueError(f"unknown phase {self.phase!r}")
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if not self.scenario_weights:
            raise ValueError("at least one scenario weight required")
        ids = [sid for sid, _ in self.scenario_weights]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate scenario ids in weights")
        weights = [w for _, w in self.scenario_weights]
        if any(w < 0 for w in weights):
            raise ValueError("scenario weights must be nonnegative")
        if abs(sum(weights) - 1.0) > 1e-9:
            raise ValueError(f"scenario weights must sum to 1, got {sum(weights)}")

    @classmethod
    def uniform(
        cls,
        phase: str,
        iterations: int,
        scenario_ids: Sequence[str],
        budget: float,
        seed: int,
    ) -> "PhasePlan":
        n = len(scenario_ids)
        return cls(
            phase=phase,
            iterations=iterations,
            scenario_weights=tuple((sid, 1.0 / n) for sid in scenario_ids),
            budget=budget,
            seed=seed,
        )


def _phase_streams(seed: int) -> tuple[np.random.Generator, ...]:
    children = np.random.SeedSequence(seed).spawn(4)
    return tuple(np.random.Generator(np.random.PCG64(c)) for c in children)


def _check_split(
    plan: PhasePlan, scenario_state: ScenarioModelState, split: str
) -> None:
    for sid, weight in plan.scenario_weights:
        spec = scenario_state.spec_for(sid)
        if weight > 0 and spec.split != split:
            raise ValueError(
                f"plan for phase {plan.phase!r} weights scenario {sid!r} "
                f"with split {spec.split!r}; expected {split!r}"
            )


def _execute_pair(
    simulator: Simulator,
    scenario_id: str,
    config: ScenarioConfig,
    hf_assignment: FidelityAssignment,
    lf_assignment: FidelityAssignment,
    hf_seed: int,
    lf_seed: int,
    executor: Optional[Executor],
):
    """Run the reference and trial simulations, optionally concurrently.

    The pair is always joined before any belief update, so an executor
    changes wall-clock behavior only, never results.
    """
    if executor is None:
        return (
            simulator.execute(scenario_id, config, hf_assignment, hf_seed),
            simulator.execute(scenario_id, config, lf_assignment, lf_seed),
        )
    futures = (
        executor.submit(simulator.execute, scenario_id, config, hf_assignment, hf_seed),
        executor.submit(simulator.execute, scenario_id, config, lf_assignment, lf_seed),
    )
    results, errors = [], []
    for future in futures:
        try:
            results.append(future.result())
        except SimulationError as exc:
            errors.append(exc)
    if errors:
        raise errors[0]
    return results[0], results[1]


def _learning_loop(
    plan: PhasePlan,
    fidelity_state: FidelityModelState,
    scenario_state: ScenarioModelState,
    simulator: Simulator,
    executor: Optional[Executor] = None,
) -> tuple[FidelityModelState, ScenarioModelState, list[Record]]:
    scenario_rng, param_rng, theta_rng, noise_rng = _phase_streams(plan.seed)
    ids = [sid for sid, _ in plan.scenario_weights]
    probs = np.array([w for _, w in plan.scenario_weights])
    probs = probs / probs.sum()
    hf_assignment = fidelity_state.space.high_fidelity_assignment()
    records: list[Record] = []

    for iteration in range(plan.iterations):
        scenario_id = ids[int(scenario_rng.choice(len(ids), p=probs))]
        config = sample_scenario_config(scenario_state, scenario_id, param_rng)
        assignment = sample_fidelity(fidelity_state, theta_rng)
        hf_seed = int(noise_rng.integers(_SEED_CEILING))
        lf_seed = int(noise_rng.integers(_SEED_CEILING))
        try:
            hf, lf = _execute_pair(
                simulator,
                scenario_id,
                config,
                hf_assignment,
                assignment,
                hf_seed,
                lf_seed,
                executor,
            )
        except SimulationError as exc:
            records.append(
                AbortRecord(
                    iteration=iteration,
                    scenario_id=scenario_id,
                    phase=plan.phase,
                    error=str(exc),
                )
            )
            continue
        outcome = classify_outcome(hf.failure, lf.failure)
        fidelity_state = credit_fidelity(
            fidelity_state,
            assignment,
            classify_fidelity_trial(outcome, lf.cost, hf.cost, plan.budget),
        )
        scenario_state = credit_scenario(
            scenario_state, config, classify_scenario_trial(outcome)
        )
        records.append(
            TrialRecord(
                iteration=iteration,
                scenario_id=scenario_id,
                config=config,
                assignment=assignment,
                hf_failure=hf.failure,
                lf_failure=lf.failure,
                outcome=outcome,
                t_hf=hf.cost,
                t_lf=lf.cost,
                phase=plan.phase,
            )
        )
    return fidelity_state, scenario_state, records


def run_meta_training(
    plan: PhasePlan,
    fidelity_state: FidelityModelState,
    scenario_state: ScenarioModelState,
    simulator: Simulator,
    executor: Optional[Executor] = None,
) -> tuple[FidelityModelState, ScenarioModelState, list[Record]]:
    """Learn both models jointly on the training scenarios."""
    if plan.phase != "meta_train":
        raise ValueError(f"expected a meta_train plan, got {plan.phase!r}")
    _check_split(plan, scenario_state, "train")
    return _learning_loop(plan, fidelity_state, scenario_state, simulator, executor)


def run_meta_testing(
    plan: PhasePlan,
    warm_fidelity_state: FidelityModelState,
    fresh_scenario_state: ScenarioModelState,
    simulator: Simulator,
    executor: Optional[Executor] = None,
) -> tuple[FidelityModelState, ScenarioModelState, list[Record]]:
    """Same loop as meta-training, on held-out scenarios.

    The fidelity state is expected to be warm-started from a previous
    posterior; the scenario state starts from a fresh uniform prior.
    """
    if plan.phase != "meta_test":
        raise ValueError(f"expected a meta_test plan, got {plan.phase!r}")
    _check_split(plan, fresh_scenario_state, "test")
    return _learning_loop(
        plan, warm_fidelity_state, fresh_scenario_state, simulator, executor
    )


def run_evaluation(
    iterations: int,
    fidelity_state: FidelityModelState,
    scenario_state: ScenarioModelState,
    simulator: Simulator,
    seed: int,
    scenario_weights: Optional[tuple[tuple[str, float], ...]] = None,
    executor: Optional[Executor] = None,
) -> list[Record]:
    """Run frozen-model trials: MAP fidelity, sampled parameters, no updates.

    Parameters are still sampled per trial (never MAP) so repeated trials
    explore the learned failure region instead of replaying one instance.
    Defaults to a uniform mix over the training scenarios.
    """
    if scenario_weights is None:
        train_ids = [s.id for s in scenario_state.specs if s.split == "train"]
        if not train_ids:
            raise ValueError("no train-split scenarios to evaluate on")
        scenario_weights = tuple((sid, 1.0 / len(train_ids)) for sid in train_ids)
    plan = PhasePlan(
        phase="evaluate",
        iterations=iterations,
        scenario_weights=scenario_weights,
        budget=fidelity_state.budget,
        seed=seed,
    )
    scenario_rng, param_rng, _, noise_rng = _phase_streams(plan.seed)
    ids = [sid for sid, _ in plan.scenario_weights]
    probs = np.array([w for _, w in plan.scenario_weights])
    probs = probs / probs.sum()
    hf_assignment = fidelity_state.space.high_fidelity_assignment()
    frozen = map_fidelity(fidelity_state)
    records: list[Record] = []

    for iteration in range(iterations):
        scenario_id = ids[int(scenario_rng.choice(len(ids), p=probs))]
        config = sample_scenario_config(scenario_state, scenario_id, param_rng)
        hf_seed = int(noise_rng.integers(_SEED_CEILING))
        lf_seed = int(noise_rng.integers(_SEED_CEILING))
        try:
            hf, lf = _execute_pair(
                simulator,
                scenario_id,
                config,
                hf_assignment,
                frozen,
                hf_seed,
                lf_seed,
                executor,
            )
        except SimulationError as exc:
            records.append(
                AbortRecord(
                    iteration=iteration,
                    scenario_id=scenario_id,
                    phase="evaluate",
                    error=str(exc),
                )
            )
            continue
        records.append(
            TrialRecord(
                iteration=iteration,
                scenario_id=scenario_id,
                config=config,
                assignment=frozen,
                hf_failure=hf.failure,
                lf_failure=lf.failure,
                outcome=classify_outcome(hf.failure, lf.failure),
                t_hf=hf.cost,
                t_lf=lf.cost,
                phase="evaluate",
            )
        )
    return records


def _uniform_config(
    spec: ScenarioSpec, rng: np.random.Generator
) -> ScenarioConfig:
    """Sample every parameter uniformly over its domain, ignoring beliefs.

    Continuous parameters draw uniformly on the domain's own scale
    (log-uniform domains draw log-uniformly over the full range).
    """
    values: list[tuple[str, Value]] = []
    indices: list[int] = []
    for name, domain in spec.params:
        if isinstance(domain, DiscreteDomain):
            index = int(rng.integers(domain.n_arms))
            values.append((name, domain.value_at(index)))
            indices.append(index)
        else:
            assert isinstance(domain, ContinuousDomain)
            whole = ContinuousDomain(
                lo=domain.lo, hi=domain.hi, bins=1, scale=domain.scale
            )
            value = whole.sample_in_bin(0, rng)
            values.append((name, value))
            indices.append(domain.locate(value))
    return ScenarioConfig(
        scenario_id=spec.id, values=tuple(values), arm_indices=tuple(indices)
    )


def run_baseline(
    iterations: int,
    scenario_specs: Sequence[ScenarioSpec],
    space: FidelitySpace,
    simulator: Simulator,
    seed: int,
) -> list[Record]:
    """Uniform-sampling reference-only search over the same scenarios.

    Every trial runs the reference assignment once; records carry no LF
    fields. Scenario choice is uniform over the given specs.
    """
    if not scenario_specs:
        raise ValueError("at least one scenario spec required")
    scenario_rng, param_rng, _, noise_rng = _phase_streams(seed)
    hf_assignment = space.high_fidelity_assignment()
    records: list[Record] = []

    for iteration in range(iterations):
        spec = scenario_specs[int(scenario_rng.integers(len(scenario_specs)))]
        config = _uniform_config(spec, param_rng)
        hf_seed = int(noise_rng.integers(_SEED_CEILING))
        try:
            hf = simulator.execute(spec.id, config, hf_assignment, hf_seed)
        except SimulationError as exc:
            records.append(
                AbortRecord(
                    iteration=iteration,
                    scenario_id=spec.id,
                    phase="baseline",
                    error=str(exc),
                )
            )
            continue
        records.append(
            TrialRecord(
                iteration=iteration,
                scenario_id=spec.id,
                config=config,
                assignment=hf_assignment,
                hf_failure=hf.failure,
                t_hf=hf.cost,
                phase="baseline",
            )
        )
    return records


def record_from_dict(doc: dict) -> Record:
    """Inverse of ``to_dict`` for both record kinds."""
    kind = doc.get("kind")
    if kind == "abort":
        return AbortRecord(
            iteration=int(doc["iteration"]),
            scenario_id=doc["scenario_id"],
            phase=doc["phase"],
            error=doc["error"],
        )
    if kind != "trial":
        raise SchemaError(f"unknown record kind {kind!r}")
    config = ScenarioConfig(
        scenario_id=doc["scenario_id"],
        values=tuple((n, v) for n, v in doc["config"]["values"]),
        arm_indices=tuple(doc["config"]["arm_indices"]),
    )
    assignment = FidelityAssignment(
        values=tuple((n, v) for n, v in doc["assignment"]["values"]),
        arm_indices=tuple(doc["assignment"]["arm_indices"]),
    )
    outcome = doc["outcome"]
    return TrialRecord(
        iteration=int(doc["iteration"]),
        scenario_id=doc["scenario_id"],
        config=config,
        assignment=assignment,
        hf_failure=doc["hf_failure"],
        lf_failure=doc["lf_failure"],
        outcome=Outcome(outcome) if outcome is not None else None,
        t_hf=doc["t_hf"],
        t_lf=doc["t_lf"],
        phase=doc["phase"],
    )


def write_records(records: Sequence[Record], path: str) -> None:
    """Write records as one JSON object per line, atomically.

    Key order and float formatting are deterministic, so identical runs
    produce byte-identical files.
    """
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            for record in records:
                handle.write(json.dumps(record.to_dict(), sort_keys=True))
                handle.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_records(path: str) -> list[Record]:
    records: list[Record] = []
    with open(path) as handle:
        for line in handle:
            line = line.strip()
            if line:
                records.append(record_from_dict(json.loads(line)))
    return records
