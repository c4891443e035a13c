from dpfedsim.objectives.featureio import (
    FeatureFileError,
    FeatureSet,
    load_feature_matrix,
    write_feature_matrix,
)
from dpfedsim.objectives.logistic import LogisticClient, generate_gaussian_classes
from dpfedsim.objectives.partition import (
    PartitionError,
    ShardAssignment,
    partition_by_label_shards,
)
from dpfedsim.objectives.quadratic import QuadraticClient, power_iteration_max_eig
from dpfedsim.objectives.solvers import (
    SingularSystemError,
    conjugate_gradient,
    gradient_descent_armijo,
)
from dpfedsim.objectives.suite import (
    ProblemSuite,
    eval_value_grad,
    generate_quadratic_suite,
    heterogeneity_profile,
    solve_global_optimum,
)

__all__ = [
    "FeatureFileError", "FeatureSet", "LogisticClient", "PartitionError", "ProblemSuite",
    "QuadraticClient", "ShardAssignment", "SingularSystemError", "conjugate_gradient",
    "eval_value_grad", "generate_gaussian_classes", "generate_quadratic_suite",
    "gradient_descent_armijo", "heterogeneity_profile", "load_feature_matrix",
    "partition_by_label_shards", "power_iteration_max_eig", "solve_global_optimum",
    "write_feature_matrix",
]
