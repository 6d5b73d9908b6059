"""Tests for the synthetic braking simulator and its analytic oracles."""

import math

import numpy as np
import pytest

from banditsim.bandit import DiscreteDomain
from banditsim.defaults import default_fidelity_space
from banditsim.errors import SimulationError
from banditsim.fidelity import FidelityAssignment, FidelitySetting, FidelitySpace
from banditsim.scenario import ScenarioConfig
from banditsim.simulator import (
    BRAKE_DECEL,
    TRIGGER_MARGIN,
    ApproachScenario,
    BrakingSimulator,
    SimResult,
    ground_truth_failure,
)

SPACE = default_fidelity_space()
HF = SPACE.high_fidelity_assignment()


def config(d0: float, v0: float) -> ScenarioConfig:
    return ScenarioConfig(
        scenario_id="x",
        values=(("initial_gap", d0), ("speed", v0)),
        arm_indices=(0, 0),
    )


def assignment(**overrides) -> FidelityAssignment:
    values = dict(HF.values)
    values.update(overrides)
    return FidelityAssignment(
        values=tuple((s.name, values[s.name]) for s in SPACE.settings),
        arm_indices=HF.arm_indices,
    )


def stopping(v0: float) -> float:
    return v0 * v0 / (2.0 * BRAKE_DECEL)


def braking_travel(v0: float, dt: float) -> float:
    """Distance covered after an immediate trigger, by triangular sum.

    Independent of the simulator: speed drops BRAKE_DECEL*dt before each
    move, so travel = dt * sum(max(0, v0 - i*BRAKE_DECEL*dt)).
    """
    step = BRAKE_DECEL * dt
    m = math.floor(v0 / step)
    return dt * (m * v0 - step * m * (m + 1) / 2.0)


class TestGroundTruth:
    def test_far_slow_approach_is_safe(self):
        assert not ground_truth_failure(ApproachScenario(200.0, 10.0))
        assert not ground_truth_failure(ApproachScenario(100.0, 10.0))

    def test_short_gap_fails(self):
        assert ground_truth_failure(ApproachScenario(5.0, 30.0))
        assert ground_truth_failure(ApproachScenario(8.0, 10.0))

    def test_boundary(self):
        # stopping distance at 30 m/s is exactly 75 m
        assert ground_truth_failure(ApproachScenario(75.0, 30.0))
        assert not ground_truth_failure(ApproachScenario(76.0, 30.0))

    def test_view_distance_caps_detection(self):
        assert ground_truth_failure(ApproachScenario(200.0, 10.0), view_distance=5.0)

    def test_invalid_scenarios_rejected(self):
        with pytest.raises(ValueError):
            ApproachScenario(0.0, 10.0)
        with pytest.raises(ValueError):
            ApproachScenario(10.0, -1.0)


class TestDynamics:
    def test_safe_and_failing_episodes(self):
        sim = BrakingSimulator(SPACE)
        assert not sim.execute("x", config(200.0, 10.0), HF, 0).failure
        assert sim.execute("x", config(5.0, 30.0), HF, 0).failure
        # failure holds under any settings when stopping is impossible
        assert sim.execute(
            "x", config(5.0, 30.0), BrakingSimulator(SPACE).cheapest_assignment(), 0
        ).failure

    def test_noiseless_trigger_matches_analytic_step(self):
        sim = BrakingSimulator(SPACE, record_traces=True)
        quiet = assignment(lidar_disable_shot_noise=True)
        for d0, v0 in ((40.0, 15.0), (100.0, 10.0), (60.0, 20.0)):
            result = sim.execute("x", config(d0, v0), quiet, 0)
            threshold = stopping(v0) + TRIGGER_MARGIN
            trigger = next(
                i
                for i, (_, _, measured) in enumerate(result.trace)
                if not math.isnan(measured) and measured <= threshold
            )
            expected = math.ceil((d0 - threshold) / (v0 * 0.1))
            assert trigger == expected

    def test_trace_times_strictly_increase(self):
        sim = BrakingSimulator(SPACE, record_traces=True)
        result = sim.execute("x", config(40.0, 15.0), HF, 3)
        times = [t for t, _, _ in result.trace]
        assert all(b > a for a, b in zip(times, times[1:]))

    def test_noiseless_discrepancy_set_is_exactly_the_band(self):
        # Against ground truth, the noiseless stepper disagrees exactly on
        # (travel, stopping]: the discrete brake stops a little early, so
        # gaps just inside the analytic failure region survive.
        sim = BrakingSimulator(SPACE)
        quiet = assignment(lidar_disable_shot_noise=True)
        # offsets keep a margin from each v0's travel boundary (-0.3,
        # -0.39, -0.49, -0.6) where a one-ulp difference flips the verdict
        for v0 in (6.0, 8.0, 10.0, 12.0):
            travel = braking_travel(v0, 0.1)
            for offset in (-1.0, -0.65, -0.52, -0.42, -0.35, -0.25, -0.15,
                           -0.05, 0.0, 0.1, 0.3, 1.0):
                d0 = stopping(v0) + offset
                if d0 <= 0:
                    continue
                result = sim.execute("x", config(d0, v0), quiet, 0)
                truth = ground_truth_failure(ApproachScenario(d0, v0))
                in_band = travel < d0 <= stopping(v0)
                assert (result.failure != truth) == in_band

    def test_noisy_reference_discrepancies_stay_in_band(self):
        # With shot noise on, disagreement with ground truth must stay
        # inside one v0*dt of the analytic boundary at these pinned seeds.
        sim = BrakingSimulator(SPACE)
        for v0 in (6.0, 8.0, 10.0, 12.0):
            for offset in (-3.0, -1.5, -0.9, -0.4, -0.1, 0.1, 0.4, 0.9, 1.5, 3.0):
                d0 = stopping(v0) + offset
                if d0 <= 0:
                    continue
                truth = ground_truth_failure(ApproachScenario(d0, v0))
                for seed in range(5):
                    result = sim.execute("x", config(d0, v0), HF, seed)
                    if result.failure != truth:
                        assert stopping(v0) - v0 * 0.1 < d0 <= stopping(v0)

    def test_zero_noise_verdict_ignores_seed_and_passive_settings(self):
        sim = BrakingSimulator(SPACE)
        quiet = assignment(lidar_disable_shot_noise=True)
        quiet_passive = assignment(
            lidar_disable_shot_noise=True,
            camera_bloom_level="low",
            camera_disable_bloom=True,
            camera_disable_shadows=True,
            lidar_raytracing_bounces=0,
            camera_near_clip=2.0,
        )
        for d0 in (10.0, 25.0, 40.0, 75.0, 120.0):
            for v0 in (8.0, 12.0, 16.0, 20.0):
                a = sim.execute("x", config(d0, v0), quiet, 1)
                b = sim.execute("x", config(d0, v0), quiet, 999)
                c = sim.execute("x", config(d0, v0), quiet_passive, 7)
                assert a.failure == b.failure == c.failure

    def test_missing_parameter_raises(self):
        sim = BrakingSimulator(SPACE)
        bad = ScenarioConfig(
            scenario_id="x", values=(("initial_gap", 40.0),), arm_indices=(0,)
        )
        with pytest.raises(SimulationError):
            sim.execute("x", bad, HF, 0)


class TestCostModel:
    def test_reference_factor(self):
        # 1 + 0.5*5 + 0.3 + 0.2 plus 12 passive settings at 0.05 each
        np.testing.assert_allclose(
            BrakingSimulator(SPACE).cost_factor(HF), 4.6, rtol=1e-12
        )

    def test_cheapest_factor(self):
        sim = BrakingSimulator(SPACE)
        np.testing.assert_allclose(
            sim.cost_factor(sim.cheapest_assignment()), 1.5004, rtol=1e-12
        )

    def test_cost_is_steps_times_factor(self):
        # (5, 30) at reference settings: trigger at step 0, collision on
        # the second step (2.94 m then 2.88 m of travel).
        sim = BrakingSimulator(SPACE)
        result = sim.execute("x", config(5.0, 30.0), HF, 0)
        np.testing.assert_allclose(result.cost, 2 * 4.6, rtol=1e-12)

    def test_monotone_in_subsample_noise_and_view(self):
        sim = BrakingSimulator(SPACE)
        cfg = config(40.0, 15.0)
        quiet = assignment(lidar_disable_shot_noise=True)
        for k in (1, 2, 3, 4):
            lo = sim.execute("x", cfg, assignment(
                lidar_disable_shot_noise=True, lidar_subsample_count=k), 0)
            hi = sim.execute("x", cfg, assignment(
                lidar_disable_shot_noise=True, lidar_subsample_count=k + 1), 0)
            assert lo.cost <= hi.cost
        noisy = sim.execute("x", cfg, assignment(), 0)
        assert sim.execute("x", cfg, quiet, 0).cost <= noisy.cost
        narrow = sim.execute("x", cfg, assignment(
            lidar_disable_shot_noise=True, camera_view_distance=100.0), 0)
        wide = sim.execute("x", cfg, assignment(
            lidar_disable_shot_noise=True, camera_view_distance=5000.0), 0)
        assert narrow.cost <= wide.cost

    def test_passive_setting_surcharge_applies_at_reference_value_only(self):
        sim = BrakingSimulator(SPACE)
        at_hf = sim.cost_factor(assignment())
        off_hf = sim.cost_factor(assignment(camera_disable_bloom=True))
        np.testing.assert_allclose(at_hf - off_hf, 0.05, rtol=1e-9)


class TestPurity:
    def test_identical_inputs_identical_results(self):
        sim = BrakingSimulator(SPACE)
        cfg = config(40.0, 15.0)
        first = sim.execute("x", cfg, HF, 1234)
        second = sim.execute("x", cfg, HF, 1234)
        assert first == second
        assert first.cost == second.cost  # bitwise, not approximate

    def test_fresh_instance_agrees(self):
        cfg = config(33.0, 12.0)
        first = BrakingSimulator(SPACE).execute("x", cfg, HF, 77)
        second = BrakingSimulator(SPACE).execute("x", cfg, HF, 77)
        assert first == second


class TestMinCostRatio:
    def test_ratio_in_unit_interval_and_small_for_default_space(self):
        sim = BrakingSimulator(SPACE)
        ratio = sim.min_cost_ratio(ApproachScenario(40.0, 15.0))
        assert 0.0 < ratio <= 1.0
        assert ratio < 0.12  # far below any budget the tests use

    def test_degenerate_space_gives_identity(self):
        space = FidelitySpace(
            settings=(
                FidelitySetting(
                    name="simulation_rate",
                    domain=DiscreteDomain(values=(10,)),
                    high_fidelity_value=10,
                ),
                FidelitySetting(
                    name="lidar_subsample_count",
                    domain=DiscreteDomain(values=(5,)),
                    high_fidelity_value=5,
                ),
            )
        )
        sim = BrakingSimulator(space)
        assert sim.min_cost_ratio(ApproachScenario(40.0, 15.0)) == 1.0

    def test_cost_nonincreasing_as_rate_drops(self):
        sim = BrakingSimulator(SPACE)
        cfg = config(40.0, 15.0)
        costs = [
            sim.execute("x", cfg, assignment(simulation_rate=r), 0).cost
            for r in (10, 8, 6, 4, 2)
        ]
        assert all(b <= a for a, b in zip(costs, costs[1:]))


class TestSimResult:
    def test_nonpositive_cost_rejected(self):
        with pytest.raises(ValueError):
            SimResult(failure=False, cost=0.0)
