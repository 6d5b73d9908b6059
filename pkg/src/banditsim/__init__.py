"""Budget-aware falsification with Beta-Bernoulli bandits.

Two learners run side by side over a pluggable simulator: one concentrates
scenario parameters on failure-prone regions, the other hunts for cheap
simulator settings that still agree with the reference configuration.
"""

from .bandit import (
    ArmDomain,
    Bandit,
    BetaBelief,
    ContinuousDomain,
    DiscreteDomain,
    Value,
    domain_from_dict,
)
from .config import (
    PhaseSettings,
    RunConfig,
    load_fidelity_space,
    load_run_config,
    load_scenario_specs,
)
from .defaults import default_fidelity_space, default_scenario_specs
from .errors import (
    BanditsimError,
    ConfigError,
    ConsistencyError,
    SchemaError,
    SimulationError,
    UndefinedMetricError,
)
from .fidelity import (
    FidelityAssignment,
    FidelityModelState,
    FidelitySetting,
    FidelitySpace,
    classify_fidelity_trial,
    credit_fidelity,
    load_posterior,
    map_fidelity,
    posterior_to_dict,
    sample_fidelity,
    save_posterior,
    warm_start,
)
from .metrics import (
    RunReport,
    break_even,
    build_report,
    failure_curve,
    mean_lf_cost,
    speedup,
    tp_rate,
    write_report_files,
)
from .orchestrator import (
    AbortRecord,
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
from .outcome import Outcome, classify_outcome
from .scenario import (
    ScenarioConfig,
    ScenarioModelState,
    ScenarioSpec,
    classify_scenario_trial,
    credit_scenario,
    sample_scenario_config,
    scenario_state_from_dict,
    scenario_state_to_dict,
)
from .simulator import (
    ApproachScenario,
    BrakingSimulator,
    SimResult,
    Simulator,
    ground_truth_failure,
)

__version__ = "0.1.0"

__all__ = [
    "ApproachScenario",
    "ArmDomain",
    "AbortRecord",
    "Bandit",
    "BanditsimError",
    "BetaBelief",
    "BrakingSimulator",
    "ConfigError",
    "ConsistencyError",
    "ContinuousDomain",
    "DiscreteDomain",
    "FidelityAssignment",
    "FidelityModelState",
    "FidelitySetting",
    "FidelitySpace",
    "Outcome",
    "PhasePlan",
    "PhaseSettings",
    "Record",
    "RunConfig",
    "RunReport",
    "ScenarioConfig",
    "ScenarioModelState",
    "ScenarioSpec",
    "SchemaError",
    "SimResult",
    "SimulationError",
    "Simulator",
    "TrialRecord",
    "UndefinedMetricError",
    "Value",
    "break_even",
    "build_report",
    "classify_fidelity_trial",
    "classify_outcome",
    "classify_scenario_trial",
    "credit_fidelity",
    "credit_scenario",
    "default_fidelity_space",
    "default_scenario_specs",
    "domain_from_dict",
    "failure_curve",
    "ground_truth_failure",
    "load_fidelity_space",
    "load_posterior",
    "load_run_config",
    "load_scenario_specs",
    "map_fidelity",
    "mean_lf_cost",
    "posterior_to_dict",
    "read_records",
    "run_baseline",
    "run_evaluation",
    "run_meta_testing",
    "run_meta_training",
    "sample_fidelity",
    "sample_scenario_config",
    "save_posterior",
    "scenario_state_from_dict",
    "scenario_state_to_dict",
    "speedup",
    "tp_rate",
    "warm_start",
    "write_records",
    "write_report_files",
]
