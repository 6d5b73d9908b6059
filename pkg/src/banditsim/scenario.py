"""Per-scenario learner for failure-prone parameter regions.

Each scenario keeps an independent bandit per parameter. Success here is
purely outcome-based: the reference run found a failure (TP or FN).
Deliberately no MAP accessor; downstream phases always sample, so the
same scenario instance is not replayed verbatim.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping

from .bandit import ArmDomain, Bandit, Value
from .errors import ConsistencyError, SchemaError
from .outcome import Outcome

SPLITS = ("train", "test")


@dataclass(frozen=True)
class ScenarioSpec:
    """Abstract scenario: an id plus the parameter domains to search over."""

    id: str
    params: tuple[tuple[str, ArmDomain], ...]
    split: str = "train"

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("scenario id must be nonempty")
        if not self.params:
            raise ValueError(f"scenario {self.id!r} declares no parameters")
        names = [name for name, _ in self.params]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate parameter names in scenario {self.id!r}")
        if self.split not in SPLITS:
            raise ValueError(f"split must be one of {SPLITS}, got {self.split!r}")


@dataclass(frozen=True)
class ScenarioConfig:
    """One concrete parameterization of a scenario, with the sampled arms."""

    scenario_id: str
    values: tuple[tuple[str, Value], ...]
    arm_indices: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.values) != len(self.arm_indices):
            raise ValueError("values and arm_indices must be parallel")


@dataclass(frozen=True)
class ScenarioModelState:
    """Immutable learner state: a bandit family per scenario id."""

    specs: tuple[ScenarioSpec, ...]
    bandits: Mapping[str, tuple[Bandit, ...]]

    def __post_init__(self) -> None:
        ids = [spec.id for spec in self.specs]
        if len(set(ids)) != len(ids):
            raise ValueError("scenario ids must be unique")
        if set(self.bandits) != set(ids):
            raise ValueError("bandit families must cover exactly the declared scenarios")
        for spec in self.specs:
            family = self.bandits[spec.id]
            if len(family) != len(spec.params):
                raise ValueError(f"scenario {spec.id!r} needs one bandit per parameter")
            for (name, domain), bandit in zip(spec.params, family):
                if bandit.domain != domain:
                    raise ValueError(
                        f"bandit domain mismatch for {spec.id!r}.{name!r}"
                    )

    @classmethod
    def uniform(cls, specs: tuple[ScenarioSpec, ...]) -> "ScenarioModelState":
        return cls(
            specs=specs,
            bandits={
                spec.id: tuple(Bandit.uniform(domain) for _, domain in spec.params)
                for spec in specs
            },
        )

    def spec_for(self, scenario_id: str) -> ScenarioSpec:
        for spec in self.specs:
            if spec.id == scenario_id:
                return spec
        raise KeyError(f"unknown scenario id {scenario_id!r}")


def sample_scenario_config(
    state: ScenarioModelState, scenario_id: str, rng
) -> ScenarioConfig:
    """Draw one configuration for the given scenario."""
    spec = state.spec_for(scenario_id)
    values, indices = [], []
    for (name, _), bandit in zip(spec.params, state.bandits[scenario_id]):
        index, value = bandit.sample_value(rng)
        values.append((name, value))
        indices.append(index)
    return ScenarioConfig(
        scenario_id=scenario_id, values=tuple(values), arm_indices=tuple(indices)
    )


def classify_scenario_trial(outcome: Outcome) -> bool:
    """Success iff the reference run found a failure, regardless of cost."""
    return outcome in (Outcome.TP, Outcome.FN)


def credit_scenario(
    state: ScenarioModelState, config: ScenarioConfig, success: bool
) -> ScenarioModelState:
    """Apply one shared success bit to the sampled arm of each parameter."""
    spec = state.spec_for(config.scenario_id)
    family = state.bandits[config.scenario_id]
    if len(config.arm_indices) != len(family):
        raise ConsistencyError(
            f"config has {len(config.arm_indices)} entries for scenario "
            f"{config.scenario_id!r} with {len(family)} parameters"
        )
    for (name, _), (param_name, _) in zip(config.values, spec.params):
        if name != param_name:
            raise ConsistencyError(
                f"config entry {name!r} does not match parameter {param_name!r}"
            )
    updated = tuple(
        bandit.update(index, success)
        for bandit, index in zip(family, config.arm_indices)
    )
    bandits = dict(state.bandits)
    bandits[config.scenario_id] = updated
    return replace(state, bandits=bandits)


def scenario_state_to_dict(state: ScenarioModelState) -> dict:
    """Posterior counts per scenario and parameter, JSON-ready."""
    return {
        spec.id: [bandit.to_dict() for bandit in state.bandits[spec.id]]
        for spec in state.specs
    }


def scenario_state_from_dict(
    specs: tuple[ScenarioSpec, ...], doc: dict
) -> ScenarioModelState:
    """Rebuild a state over `specs` from saved counts.

    Scenarios absent from the document start from the flat prior, so a
    posterior trained on one split can seed a run that adds held-out
    scenarios. Saved entries must match the declared domains exactly.
    """
    known = {spec.id for spec in specs}
    extra = set(doc) - known
    if extra:
        raise SchemaError(f"saved scenario posteriors {sorted(extra)} are undeclared")
    bandits = {}
    for spec in specs:
        if spec.id not in doc:
            bandits[spec.id] = tuple(
                Bandit.uniform(domain) for _, domain in spec.params
            )
            continue
        entries = doc[spec.id]
        if len(entries) != len(spec.params):
            raise SchemaError(
                f"scenario {spec.id!r} expects {len(spec.params)} parameter "
                f"posteriors, document has {len(entries)}"
            )
        family = []
        for (name, domain), entry in zip(spec.params, entries):
            bandit = Bandit.from_dict(entry)
            if bandit.domain != domain:
                raise SchemaError(
                    f"saved domain for {spec.id!r}.{name!r} does not match the declared domain"
                )
            family.append(bandit)
        bandits[spec.id] = tuple(family)
    return ScenarioModelState(specs=specs, bandits=bandits)
