"""Simulator boundary plus a self-contained synthetic system under test.

The synthetic system is an ego vehicle approaching a stationary obstacle:
it cruises at constant speed, a range sensor measures the remaining gap,
and an emergency brake fires when the measured gap drops below the
stopping distance plus a safety margin. A failure is any step where the
gap reaches zero. Ground truth has a closed form, so every verdict can be
checked analytically.

Four fidelity settings change behavior (simulation rate, lidar shot
noise, lidar subsample count, camera view distance); any further settings
in the space are accepted and priced into the cost model only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Protocol

import numpy as np

from .errors import SimulationError
from .fidelity import FidelityAssignment, FidelitySpace
from .scenario import ScenarioConfig

BRAKE_DECEL = 6.0  # m/s^2
TRIGGER_MARGIN = 4.5  # m, safety buffer added to the stopping distance
SHOT_NOISE_SIGMA = 3.0  # m, gap-measurement noise at subsample count 1
DEFAULT_VIEW_DISTANCE = 5000.0  # m, reference sensor range
INACTIVE_COST_WEIGHT = 0.05  # cost per passive setting left at its reference value
MAX_STEPS = 100_000

RATE_SETTING = "simulation_rate"
NOISE_SETTING = "lidar_disable_shot_noise"
SUBSAMPLE_SETTING = "lidar_subsample_count"
VIEW_SETTING = "camera_view_distance"
ACTIVE_SETTINGS = (RATE_SETTING, NOISE_SETTING, SUBSAMPLE_SETTING, VIEW_SETTING)

GAP_PARAM = "initial_gap"
SPEED_PARAM = "speed"


@dataclass(frozen=True)
class ApproachScenario:
    """One concrete approach: starting gap (m) and cruise speed (m/s)."""

    initial_gap: float
    speed: float

    def __post_init__(self) -> None:
        if self.initial_gap <= 0 or self.speed <= 0:
            raise ValueError("initial_gap and speed must be positive")


@dataclass(frozen=True)
class SimResult:
    """Verdict and virtual cost of one simulator run."""

    failure: bool
    cost: float
    trace: Optional[tuple[tuple[float, float, float], ...]] = None

    def __post_init__(self) -> None:
        if self.cost <= 0:
            raise ValueError("cost must be positive")


class Simulator(Protocol):
    """Contract every pluggable simulator implements.

    ``execute`` must be a pure function of its inputs (seed included) and
    return a positive cost.
    """

    def execute(
        self,
        scenario_id: str,
        config: ScenarioConfig,
        assignment: FidelityAssignment,
        seed: int,
    ) -> SimResult: ...


def stopping_distance(speed: float) -> float:
    return speed * speed / (2.0 * BRAKE_DECEL)


def ground_truth_failure(
    scenario: ApproachScenario, view_distance: float = DEFAULT_VIEW_DISTANCE
) -> bool:
    """Noiseless continuous-time verdict.

    The brake fires once the gap reaches min(initial detection gap,
    stopping distance + margin); collision is avoided exactly when the
    gap at the trigger exceeds the stopping distance.
    """
    detection_gap = min(scenario.initial_gap, view_distance)
    return detection_gap <= stopping_distance(scenario.speed)


class BrakingSimulator:
    """Synthetic simulator with analytic ground truth and deterministic cost.

    Cost per run is ``steps * factor`` where the factor prices the active
    settings directly (subsample count, shot noise, view distance) and adds
    INACTIVE_COST_WEIGHT for every passive setting left at its reference
    (high-fidelity) value.
    """

    def __init__(self, space: FidelitySpace, record_traces: bool = False):
        self.space = space
        self.record_traces = record_traces
        self._view_max = DEFAULT_VIEW_DISTANCE
        for setting in space.settings:
            if setting.name == VIEW_SETTING:
                self._view_max = float(setting.domain.hi)  # type: ignore[union-attr]

    def scenario_from_config(self, config: ScenarioConfig) -> ApproachScenario:
        values = dict(config.values)
        try:
            return ApproachScenario(
                initial_gap=float(values[GAP_PARAM]), speed=float(values[SPEED_PARAM])
            )
        except KeyError as exc:
            raise SimulationError(
                f"scenario {config.scenario_id!r} lacks required parameter {exc}"
            ) from exc

    def cost_factor(self, assignment: FidelityAssignment) -> float:
        values = dict(assignment.values)
        k = float(values.get(SUBSAMPLE_SETTING, 5))
        noise_on = not bool(values.get(NOISE_SETTING, False))
        view = float(values.get(VIEW_SETTING, self._view_max))
        factor = 1.0 + 0.5 * k + (0.3 if noise_on else 0.0) + 0.2 * view / self._view_max
        for setting in self.space.settings:
            if setting.name in ACTIVE_SETTINGS:
                continue
            if values.get(setting.name) == setting.high_fidelity_value:
                factor += INACTIVE_COST_WEIGHT
        return factor

    def execute(
        self,
        scenario_id: str,
        config: ScenarioConfig,
        assignment: FidelityAssignment,
        seed: int,
    ) -> SimResult:
        scenario = self.scenario_from_config(config)
        values = dict(assignment.values)
        rate = float(values.get(RATE_SETTING, 10))
        if rate <= 0:
            raise SimulationError(f"nonpositive simulation rate {rate}")
        k = float(values.get(SUBSAMPLE_SETTING, 5))
        noise_on = not bool(values.get(NOISE_SETTING, False))
        view = float(values.get(VIEW_SETTING, self._view_max))
        sigma = SHOT_NOISE_SIGMA / math.sqrt(k) if noise_on else 0.0

        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
        dt = 1.0 / rate
        threshold = stopping_distance(scenario.speed) + TRIGGER_MARGIN
        gap = scenario.initial_gap
        speed = scenario.speed
        braking = False
        failure = False
        steps = 0
        trace: list[tuple[float, float, float]] = []

        while steps < MAX_STEPS:
            measured = math.nan
            if not braking and gap <= view:
                measured = gap + (sigma * rng.standard_normal() if sigma > 0 else 0.0)
                if measured <= threshold:
                    braking = True
            if self.record_traces:
                trace.append((steps * dt, gap, measured))
            steps += 1
            if braking:
                speed = max(0.0, speed - BRAKE_DECEL * dt)
            gap -= speed * dt
            if gap <= 0.0:
                failure = True
                break
            if braking and speed <= 0.0:
                break

        cost = steps * self.cost_factor(assignment)
        return SimResult(
            failure=failure,
            cost=cost,
            trace=tuple(trace) if self.record_traces else None,
        )

    def cheapest_assignment(self) -> FidelityAssignment:
        """The lowest-cost corner of the space under this cost model."""
        names, chosen, indices = [], [], []
        for setting in self.space.settings:
            domain = setting.domain
            if setting.name == RATE_SETTING or setting.name == SUBSAMPLE_SETTING:
                value = min(domain.values)  # type: ignore[union-attr]
            elif setting.name == NOISE_SETTING:
                value = True if domain.contains(True) else domain.values[0]  # type: ignore[union-attr]
            elif setting.name == VIEW_SETTING:
                value = domain.lo  # type: ignore[union-attr]
            elif hasattr(domain, "values"):
                non_hf = [v for v in domain.values if v != setting.high_fidelity_value]
                value = non_hf[0] if non_hf else setting.high_fidelity_value
            else:
                midpoint = (domain.lo + domain.hi) / 2.0
                value = midpoint if midpoint != setting.high_fidelity_value else domain.hi
            names.append(setting.name)
            chosen.append(value)
            indices.append(domain.locate(value) if not hasattr(domain, "values") else domain.values.index(value))
        return FidelityAssignment(
            values=tuple(zip(names, chosen)), arm_indices=tuple(indices)
        )

    def min_cost_ratio(self, scenario: ApproachScenario) -> float:
        """Estimated lower bound on t_LF/t_HF for this space.

        Runs the cheapest corner and the reference settings on one
        representative scenario at a fixed seed; budgets below the returned
        ratio cannot produce a single fidelity success.
        """
        config = ScenarioConfig(
            scenario_id="representative",
            values=((GAP_PARAM, scenario.initial_gap), (SPEED_PARAM, scenario.speed)),
            arm_indices=(0, 0),
        )
        cheap = self.execute("representative", config, self.cheapest_assignment(), seed=0)
        reference = self.execute(
            "representative", config, self.space.high_fidelity_assignment(), seed=0
        )
        return min(1.0, cheap.cost / reference.cost)
