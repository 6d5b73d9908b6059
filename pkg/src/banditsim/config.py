"""YAML config loading for spaces, scenarios, and run plans.

All loaders fail closed: unknown keys are rejected so a typo in a setting
name cannot silently fall back to a default.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Optional

import yaml

from .bandit import ArmDomain, ContinuousDomain, DiscreteDomain
from .errors import ConfigError
from .fidelity import FidelitySetting, FidelitySpace
from .scenario import ScenarioSpec

PHASE_NAMES = ("meta_train", "evaluate", "meta_test", "baseline")

_DOMAIN_KEYS = {
    "discrete": {"values"},
    "continuous": {"lo", "hi", "bins", "scale"},
}


def _require_mapping(doc, where: str) -> dict:
    if not isinstance(doc, dict):
        raise ConfigError(f"{where} must be a mapping, got {type(doc).__name__}")
    return doc


def _check_keys(doc: dict, allowed: set[str], required: set[str], where: str) -> None:
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)} in {where}")
    missing = required - set(doc)
    if missing:
        raise ConfigError(f"missing keys {sorted(missing)} in {where}")


def _load_yaml(path: str, what: str) -> dict:
    if not os.path.exists(path):
        raise ConfigError(f"{what} file not found: {path}")
    with open(path) as handle:
        try:
            doc = yaml.safe_load(handle)
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse {what} file {path}: {exc}") from exc
    return _require_mapping(doc, f"{what} file {path}")


def _domain_from_config(doc: dict, where: str) -> ArmDomain:
    kind = doc.get("type")
    if kind not in _DOMAIN_KEYS:
        raise ConfigError(
            f"{where}: type must be one of {sorted(_DOMAIN_KEYS)}, got {kind!r}"
        )
    extra = {"name", "type", "high_fidelity_value"}
    _check_keys(
        doc,
        _DOMAIN_KEYS[kind] | extra,
        {"name", "type"},
        where,
    )
    try:
        if kind == "discrete":
            return DiscreteDomain(values=tuple(doc["values"]))
        return ContinuousDomain(
            lo=float(doc["lo"]),
            hi=float(doc["hi"]),
            bins=int(doc["bins"]),
            scale=str(doc.get("scale", "uniform")),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def load_fidelity_space(path: str) -> FidelitySpace:
    doc = _load_yaml(path, "fidelity space")
    _check_keys(doc, {"settings"}, {"settings"}, f"fidelity space file {path}")
    if not isinstance(doc["settings"], list) or not doc["settings"]:
        raise ConfigError(f"fidelity space file {path}: settings must be a list")
    settings = []
    for i, entry in enumerate(doc["settings"]):
        where = f"{path}: settings[{i}]"
        entry = _require_mapping(entry, where)
        if "high_fidelity_value" not in entry:
            raise ConfigError(f"{where}: missing high_fidelity_value")
        domain = _domain_from_config(entry, where)
        try:
            settings.append(
                FidelitySetting(
                    name=str(entry["name"]),
                    domain=domain,
                    high_fidelity_value=entry["high_fidelity_value"],
                )
            )
        except ValueError as exc:
            raise ConfigError(f"{where}: {exc}") from exc
    try:
        return FidelitySpace(settings=tuple(settings))
    except ValueError as exc:
        raise ConfigError(f"fidelity space file {path}: {exc}") from exc


def load_scenario_specs(path: str) -> tuple[ScenarioSpec, ...]:
    doc = _load_yaml(path, "scenario space")
    _check_keys(doc, {"scenarios"}, {"scenarios"}, f"scenario space file {path}")
    if not isinstance(doc["scenarios"], list) or not doc["scenarios"]:
        raise ConfigError(f"scenario space file {path}: scenarios must be a list")
    specs = []
    for i, entry in enumerate(doc["scenarios"]):
        where = f"{path}: scenarios[{i}]"
        entry = _require_mapping(entry, where)
        _check_keys(entry, {"id", "split", "params"}, {"id", "params"}, where)
        if not isinstance(entry["params"], list) or not entry["params"]:
            raise ConfigError(f"{where}: params must be a nonempty list")
        params = []
        for j, param in enumerate(entry["params"]):
            param_where = f"{where}.params[{j}]"
            param = _require_mapping(param, param_where)
            if "high_fidelity_value" in param:
                raise ConfigError(
                    f"{param_where}: scenario parameters have no high_fidelity_value"
                )
            domain = _domain_from_config(param, param_where)
            params.append((str(param["name"]), domain))
        try:
            specs.append(
                ScenarioSpec(
                    id=str(entry["id"]),
                    params=tuple(params),
                    split=str(entry.get("split", "train")),
                )
            )
        except ValueError as exc:
            raise ConfigError(f"{where}: {exc}") from exc
    ids = [s.id for s in specs]
    if len(set(ids)) != len(ids):
        raise ConfigError(f"scenario space file {path}: duplicate scenario ids")
    return tuple(specs)


@dataclass(frozen=True)
class PhaseSettings:
    iterations: int
    seed: int
    budget: Optional[float] = None

    def __post_init__(self) -> None:
        if self.iterations < 0:
            raise ConfigError("iterations must be >= 0")


@dataclass(frozen=True)
class RunConfig:
    """One run's inputs: spaces, per-phase plans, budget, and IO paths."""

    fidelity_space_path: str
    scenario_space_path: str
    space: FidelitySpace
    specs: tuple[ScenarioSpec, ...]
    budget: float
    phases: dict[str, PhaseSettings] = field(default_factory=dict)
    output_dir: Optional[str] = None
    posterior_in: Optional[str] = None
    posterior_out: Optional[str] = None

    def __post_init__(self) -> None:
        if not 0.0 < self.budget <= 1.0:
            raise ConfigError(f"budget must lie in (0, 1], got {self.budget}")
        for name, phase in self.phases.items():
            if name not in PHASE_NAMES:
                raise ConfigError(f"unknown phase {name!r} in config")
            budget = phase.budget if phase.budget is not None else self.budget
            if not 0.0 < budget <= 1.0:
                raise ConfigError(
                    f"phase {name!r} budget must lie in (0, 1], got {budget}"
                )

    def phase(self, name: str) -> PhaseSettings:
        if name not in self.phases:
            raise ConfigError(f"config declares no {name!r} phase")
        return self.phases[name]

    def phase_budget(self, name: str) -> float:
        phase = self.phase(name)
        return phase.budget if phase.budget is not None else self.budget


_RUN_KEYS = {
    "fidelity_space",
    "scenario_space",
    "budget",
    "phases",
    "output_dir",
    "posterior_in",
    "posterior_out",
}


def load_run_config(path: str) -> RunConfig:
    doc = _load_yaml(path, "run config")
    _check_keys(
        doc,
        _RUN_KEYS,
        {"fidelity_space", "scenario_space", "budget", "phases"},
        f"run config file {path}",
    )
    base = os.path.dirname(os.path.abspath(path))

    def resolve(p: Optional[str]) -> Optional[str]:
        if p is None:
            return None
        return p if os.path.isabs(p) else os.path.join(base, p)

    fidelity_path = resolve(str(doc["fidelity_space"]))
    scenario_path = resolve(str(doc["scenario_space"]))
    space = load_fidelity_space(fidelity_path)
    specs = load_scenario_specs(scenario_path)

    phases_doc = _require_mapping(doc["phases"], f"{path}: phases")
    phases = {}
    for name, entry in phases_doc.items():
        where = f"{path}: phases.{name}"
        entry = _require_mapping(entry, where)
        _check_keys(entry, {"iterations", "seed", "budget"}, {"iterations", "seed"}, where)
        try:
            phases[name] = PhaseSettings(
                iterations=int(entry["iterations"]),
                seed=int(entry["seed"]),
                budget=float(entry["budget"]) if "budget" in entry else None,
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{where}: {exc}") from exc

    try:
        budget = float(doc["budget"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"run config file {path}: bad budget: {exc}") from exc

    return RunConfig(
        fidelity_space_path=fidelity_path,
        scenario_space_path=scenario_path,
        space=space,
        specs=specs,
        budget=budget,
        phases=phases,
        output_dir=resolve(doc.get("output_dir")),
        posterior_in=resolve(doc.get("posterior_in")),
        posterior_out=resolve(doc.get("posterior_out")),
    )
