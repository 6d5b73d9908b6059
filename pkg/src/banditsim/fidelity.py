"""Learner for cheap-but-trustworthy simulator settings.

Each setting gets an independent Beta-Bernoulli bandit. A trial counts as
a success only when the cheap run agreed with the reference run (TP or TN)
AND came in under the cost budget; the same scalar outcome credits every
setting's sampled arm.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, replace
from typing import Union

from .bandit import ArmDomain, Bandit, BetaBelief, Value, domain_from_dict
from .errors import ConsistencyError, SchemaError
from .outcome import Outcome


@dataclass(frozen=True)
class FidelitySetting:
    """One tunable simulator knob: its domain and its reference value."""

    name: str
    domain: ArmDomain
    high_fidelity_value: Value

    def __post_init__(self) -> None:
        if not self.domain.contains(self.high_fidelity_value):
            raise ValueError(
                f"high-fidelity value {self.high_fidelity_value!r} outside the "
                f"domain of setting {self.name!r}"
            )


@dataclass(frozen=True)
class FidelitySpace:
    """Ordered collection of fidelity settings."""

    settings: tuple[FidelitySetting, ...]

    def __post_init__(self) -> None:
        if not self.settings:
            raise ValueError("at least one fidelity setting required")
        names = [s.name for s in self.settings]
        if len(set(names)) != len(names):
            raise ValueError("fidelity setting names must be unique")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.settings)

    def high_fidelity_assignment(self) -> "FidelityAssignment":
        values = tuple((s.name, s.high_fidelity_value) for s in self.settings)
        indices = tuple(
            s.domain.locate(s.high_fidelity_value) for s in self.settings
        )
        return FidelityAssignment(values=values, arm_indices=indices)


@dataclass(frozen=True)
class FidelityAssignment:
    """A concrete choice of value for every setting, with the sampled arms."""

    values: tuple[tuple[str, Value], ...]
    arm_indices: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.values) != len(self.arm_indices):
            raise ValueError("values and arm_indices must be parallel")


@dataclass(frozen=True)
class FidelityModelState:
    """Immutable learner state: one bandit per setting plus the cost budget."""

    space: FidelitySpace
    bandits: tuple[Bandit, ...]
    budget: float

    def __post_init__(self) -> None:
        if len(self.bandits) != len(self.space.settings):
            raise ValueError("one bandit per setting required")
        for setting, bandit in zip(self.space.settings, self.bandits):
            if bandit.domain != setting.domain:
                raise ValueError(f"bandit domain mismatch for {setting.name!r}")
        if not 0.0 < self.budget <= 1.0:
            raise ValueError(f"budget must lie in (0, 1], got {self.budget}")

    @classmethod
    def uniform(cls, space: FidelitySpace, budget: float) -> "FidelityModelState":
        return cls(
            space=space,
            bandits=tuple(Bandit.uniform(s.domain) for s in space.settings),
            budget=budget,
        )


def sample_fidelity(state: FidelityModelState, rng) -> FidelityAssignment:
    """Draw one assignment, each setting sampled from its own bandit."""
    values, indices = [], []
    for setting, bandit in zip(state.space.settings, state.bandits):
        index, value = bandit.sample_value(rng)
        values.append((setting.name, value))
        indices.append(index)
    return FidelityAssignment(values=tuple(values), arm_indices=tuple(indices))


def classify_fidelity_trial(
    outcome: Outcome, t_lf: float, t_hf: float, budget: float
) -> bool:
    """Success iff the verdicts agreed and the cost ratio met the budget."""
    if t_hf <= 0:
        raise ValueError(f"reference cost must be positive, got {t_hf}")
    return outcome in (Outcome.TP, Outcome.TN) and t_lf / t_hf <= budget


def credit_fidelity(
    state: FidelityModelState, assignment: FidelityAssignment, success: bool
) -> FidelityModelState:
    """Apply one shared success bit to every setting's sampled arm."""
    if len(assignment.arm_indices) != len(state.bandits):
        raise ConsistencyError(
            f"assignment has {len(assignment.arm_indices)} entries for a "
            f"{len(state.bandits)}-setting space"
        )
    for (name, _), setting in zip(assignment.values, state.space.settings):
        if name != setting.name:
            raise ConsistencyError(
                f"assignment entry {name!r} does not match setting {setting.name!r}"
            )
    updated = tuple(
        bandit.update(index, success)
        for bandit, index in zip(state.bandits, assignment.arm_indices)
    )
    return replace(state, bandits=updated)


def map_fidelity(state: FidelityModelState) -> FidelityAssignment:
    """Deterministic maximum a posteriori assignment, setting by setting."""
    values, indices = [], []
    for setting, bandit in zip(state.space.settings, state.bandits):
        index, value = bandit.map_value()
        values.append((setting.name, value))
        indices.append(index)
    return FidelityAssignment(values=tuple(values), arm_indices=tuple(indices))


PosteriorDoc = dict[str, Union[list, dict]]


def posterior_to_dict(state: FidelityModelState) -> PosteriorDoc:
    return {
        "budget": state.budget,
        "settings": [
            {
                "name": setting.name,
                "domain": setting.domain.to_dict(),
                "high_fidelity_value": setting.high_fidelity_value,
                "alpha": [b.alpha for b in bandit.beliefs],
                "beta": [b.beta for b in bandit.beliefs],
            }
            for setting, bandit in zip(state.space.settings, state.bandits)
        ],
    }


def warm_start(space: FidelitySpace, doc: PosteriorDoc) -> FidelityModelState:
    """Rebuild learner state from a saved posterior, verifying the space.

    Counts are restored verbatim; any name or domain drift between the
    saved document and the given space is rejected.
    """
    try:
        entries = doc["settings"]
        budget = float(doc["budget"])
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"posterior document missing field: {exc}") from exc
    if len(entries) != len(space.settings):
        raise SchemaError(
            f"posterior has {len(entries)} settings, space has {len(space.settings)}"
        )
    bandits = []
    for entry, setting in zip(entries, space.settings):
        if entry.get("name") != setting.name:
            raise SchemaError(
                f"posterior setting {entry.get('name')!r} does not match "
                f"space setting {setting.name!r}"
            )
        if domain_from_dict(entry["domain"]) != setting.domain:
            raise SchemaError(f"domain mismatch for setting {setting.name!r}")
        alphas, betas = entry["alpha"], entry["beta"]
        if len(alphas) != setting.domain.n_arms or len(betas) != setting.domain.n_arms:
            raise SchemaError(f"count-vector length mismatch for {setting.name!r}")
        beliefs = tuple(
            BetaBelief(float(a), float(b)) for a, b in zip(alphas, betas)
        )
        bandits.append(Bandit(domain=setting.domain, beliefs=beliefs))
    return FidelityModelState(space=space, bandits=tuple(bandits), budget=budget)


def save_posterior(state: FidelityModelState, path: str, extra: dict | None = None) -> None:
    """Write the posterior as JSON, atomically (temp file then rename)."""
    doc = posterior_to_dict(state)
    if extra:
        doc.update(extra)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            json.dump(doc, handle, indent=2, sort_keys=True)
            handle.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_posterior(path: str) -> PosteriorDoc:
    with open(path) as handle:
        return json.load(handle)
