"""Convex bi-level optimization by sequential averaging.

Minimizes a strongly convex outer objective over the solution set of an
inner composite problem min f + g, by averaging the inner prox-grad mapping
with an outer contraction at a slowly vanishing weight.  Ships with a
proximal catalog, Moreau-envelope smoothing for nonsmooth outer objectives,
a diagonal-regularization baseline, exact small-instance oracles and a
benchmark harness.
"""

from .errors import ConfigurationError, MatrixParseError, NumericalError
from .functions import (
    NonsmoothOuter,
    ProxFunction,
    Quadratic,
    SmoothFunction,
    affine_set_indicator,
    box_indicator,
    euclidean_norm,
    l1_norm,
    l1_quadratic_outer,
    moreau_gradient,
    moreau_value,
    nonnegative_orthant,
    quadratic,
    smooth_from_nonsmooth,
)
from .mappings import (
    OuterContraction,
    ProxGradMapping,
    contraction_factor_prox,
    contraction_factor_smooth,
    fixed_point_residual,
    gradient_step_contraction,
    prox_step_contraction,
)
from .oracle import (
    LowerBoundResult,
    OracleSolution,
    ReferenceSolution,
    SolutionSetDescription,
    high_accuracy_reference,
    omega_lower_bound,
    oracle_solve,
    solve_inner_exact,
    solve_outer_exact,
)
from .problems import (
    BilevelProblem,
    FirstDifferenceOperator,
    LeastSquaresInstance,
    add_noise,
    generate_rank_deficient_ls,
    instance_from_files,
    load_matrix,
    make_bilevel,
    quadratic_outer_from_operator,
    save_matrix,
)
from .solver import (
    GAMMA_PRESETS,
    AlphaSchedule,
    IterationRecord,
    SolveConfig,
    Termination,
    Trajectory,
    bigsam_run,
    boundedness_radius,
    iteration_bound,
    map_residual_bound,
    rate_constant,
    sam_run,
    smoothing_parameter,
    step_residual_bound,
    tikhonov_baseline_run,
    value_gap_bound,
)

__version__ = "0.1.0"
