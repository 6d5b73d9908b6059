"""Shipped default spaces: 16 fidelity settings and 10 approach scenarios.

Only four settings change the synthetic simulator's behavior (rate, lidar
shot noise, lidar subsample count, camera view distance); the rendering
toggles are carried through the learning problem and priced by the cost
model, which keeps the bandit problem at its full width.
"""

from __future__ import annotations

from .bandit import ContinuousDomain, DiscreteDomain
from .fidelity import FidelitySetting, FidelitySpace
from .scenario import ScenarioSpec

_TOGGLE = DiscreteDomain(values=(True, False))


def default_fidelity_space() -> FidelitySpace:
    settings = (
        FidelitySetting(
            name="simulation_rate",
            domain=DiscreteDomain(values=(2, 4, 6, 8, 10)),
            high_fidelity_value=10,
        ),
        FidelitySetting(
            name="camera_bloom_level",
            domain=DiscreteDomain(values=("high", "low")),
            high_fidelity_value="high",
        ),
        FidelitySetting(
            name="camera_disable_bloom", domain=_TOGGLE, high_fidelity_value=False
        ),
        FidelitySetting(
            name="camera_disable_lighting", domain=_TOGGLE, high_fidelity_value=False
        ),
        FidelitySetting(
            name="camera_disable_shadows", domain=_TOGGLE, high_fidelity_value=False
        ),
        FidelitySetting(
            name="camera_disable_lens_model", domain=_TOGGLE, high_fidelity_value=False
        ),
        FidelitySetting(
            name="camera_disable_depth_of_field",
            domain=_TOGGLE,
            high_fidelity_value=False,
        ),
        FidelitySetting(
            name="camera_disable_shot_noise",
            domain=_TOGGLE,
            high_fidelity_value=False,
        ),
        FidelitySetting(
            name="camera_view_distance",
            domain=ContinuousDomain(lo=10.0, hi=5000.0, bins=5, scale="log-uniform"),
            high_fidelity_value=5000.0,
        ),
        FidelitySetting(
            name="camera_near_clip",
            domain=ContinuousDomain(lo=0.2, hi=20.0, bins=5, scale="log-uniform"),
            high_fidelity_value=0.2,
        ),
        FidelitySetting(
            name="lidar_disable_shot_noise",
            domain=_TOGGLE,
            high_fidelity_value=False,
        ),
        FidelitySetting(
            name="lidar_disable_ambient_effects",
            domain=_TOGGLE,
            high_fidelity_value=False,
        ),
        FidelitySetting(
            name="lidar_disable_translucency",
            domain=_TOGGLE,
            high_fidelity_value=False,
        ),
        FidelitySetting(
            name="lidar_subsample_count",
            domain=DiscreteDomain(values=(1, 2, 3, 4, 5)),
            high_fidelity_value=5,
        ),
        FidelitySetting(
            name="lidar_raytracing_bounces",
            domain=DiscreteDomain(values=(0, 1, 2, 3, 4)),
            high_fidelity_value=4,
        ),
        FidelitySetting(
            name="lidar_near_clip",
            domain=ContinuousDomain(lo=0.2, hi=20.0, bins=5, scale="log-uniform"),
            high_fidelity_value=0.2,
        ),
    )
    return FidelitySpace(settings=settings)


def _approach(sid: str, speeds: tuple[int, ...], gap_lo: float, gap_hi: float,
              bins: int, split: str) -> ScenarioSpec:
    return ScenarioSpec(
        id=sid,
        params=(
            ("initial_gap", ContinuousDomain(lo=gap_lo, hi=gap_hi, bins=bins)),
            ("speed", DiscreteDomain(values=speeds)),
        ),
        split=split,
    )


def default_scenario_specs() -> tuple[ScenarioSpec, ...]:
    """Ten stationary-obstacle approaches, 8 train and 2 held out.

    Gap ranges straddle each speed set's stopping distances so uniform
    sampling finds failures at a low-but-nonzero rate, leaving the
    learners real room to concentrate.
    """
    return (
        _approach("approach_01", (10, 15, 20), 15.0, 75.0, 5, "train"),
        _approach("approach_02", (8, 12, 16), 6.0, 66.0, 5, "train"),
        _approach("approach_03", (12, 16, 20), 10.0, 90.0, 5, "train"),
        _approach("approach_04", (10, 14, 18), 8.0, 72.0, 4, "train"),
        _approach("approach_05", (15, 20), 16.0, 96.0, 5, "train"),
        _approach("approach_06", (8, 10, 12, 14), 5.0, 45.0, 4, "train"),
        _approach("approach_07", (16, 18, 20), 14.0, 94.0, 5, "train"),
        _approach("approach_08", (10, 12, 15, 18), 8.0, 72.0, 4, "train"),
        _approach("approach_09", (12, 15, 18), 8.0, 68.0, 5, "test"),
        _approach("approach_10", (10, 14, 20), 10.0, 90.0, 5, "test"),
    )
