from dpfedsim.fedopt.engine import (
    ALGORITHMS,
    DP_CLIP,
    DP_NORM,
    FEDAVG,
    DivergedRunError,
    IterateTrace,
    RunConfig,
    RunConfigError,
    aggregate_and_step,
    init_point,
    local_updates,
    run_federated,
    sample_cohort,
)
from dpfedsim.fedopt.operators import SensitivityPolicy, clip, normalize
from dpfedsim.fedopt.schedule import ScheduleSpec, learning_rate

__all__ = [
    "ALGORITHMS", "DP_CLIP", "DP_NORM", "FEDAVG", "DivergedRunError", "IterateTrace",
    "RunConfig", "RunConfigError", "ScheduleSpec", "SensitivityPolicy", "aggregate_and_step",
    "clip", "init_point", "learning_rate", "local_updates", "normalize", "run_federated",
    "sample_cohort",
]
