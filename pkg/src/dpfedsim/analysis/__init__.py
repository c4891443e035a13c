from dpfedsim.analysis.bounds import (
    BoundInputs,
    BoundReport,
    TheoremViolation,
    bound_report,
    c_hat_threshold,
    empirical_lhs_clip,
    empirical_lhs_norm,
    estimate_assumption_lambda,
    proposition1_chat,
    theorem2_bound,
    theorem3_bound,
    theorem4_bound,
    theorem_mode_schedule,
)
from dpfedsim.analysis.lemmas import (
    LemmaReport,
    fact1_check,
    fact3_check,
    fact3_grid,
    lemma_suite,
    sample_trajectory_starts,
)
from dpfedsim.analysis.metrics import (
    METRIC_COLUMNS,
    RoundRecord,
    read_metrics_csv,
    snr,
    write_metrics_csv,
)
from dpfedsim.analysis.projection import Projection, moving_average, trajectory_projection_2d

__all__ = [
    "BoundInputs", "BoundReport", "LemmaReport", "METRIC_COLUMNS", "Projection", "RoundRecord",
    "TheoremViolation", "bound_report", "c_hat_threshold", "empirical_lhs_clip",
    "empirical_lhs_norm", "estimate_assumption_lambda", "fact1_check", "fact3_check",
    "fact3_grid", "lemma_suite", "moving_average", "proposition1_chat", "read_metrics_csv",
    "sample_trajectory_starts", "snr", "theorem2_bound", "theorem3_bound", "theorem4_bound",
    "theorem_mode_schedule", "trajectory_projection_2d", "write_metrics_csv",
]
