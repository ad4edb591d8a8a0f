"""Age-aware learning schedulers for wireless links with unknown packet values."""

__version__ = "0.1.0"

from .bounds import age_bound, fading_age_bound, regret_bound, two_link_prediction  # noqa: E402
from .engine import ExperimentResult, RunSettings, run_experiment, run_replication  # noqa: E402
from .network import (  # noqa: E402
    AtMostK,
    ExplicitList,
    LinkParams,
    NetworkConfig,
    Schedule,
    brute_force_schedule,
    max_weight_schedule,
)
from .policies import PolicySpec  # noqa: E402
from .state import LearningState  # noqa: E402

__all__ = [
    "AtMostK",
    "ExplicitList",
    "ExperimentResult",
    "LearningState",
    "LinkParams",
    "NetworkConfig",
    "PolicySpec",
    "RunSettings",
    "Schedule",
    "age_bound",
    "brute_force_schedule",
    "fading_age_bound",
    "max_weight_schedule",
    "regret_bound",
    "run_experiment",
    "run_replication",
    "two_link_prediction",
]
