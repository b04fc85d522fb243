"""skit: divergence-regularised couplings of discrete measures.

Solves min_Q sum_ij h(Q_ij / P_ij) P_ij over couplings Q of (mu, nu) for a
pluggable divergence h, and certifies candidate optimizers through cycle
defects, potential recovery and duality gaps.
"""

__version__ = "0.1.0"

from .divergences import (
    FAMILIES,
    DivergenceSpec,
    Regime,
    RegimeReport,
    certify_second_lower_bound,
    check_growth,
    classify,
    congestion,
    entropy,
    h_conjugate,
    h_prime,
    h_prime_inverse,
    h_second,
    h_value,
    make_divergence,
    nonconvex_test,
    power,
    quadratic,
)
from .errors import *  # noqa: F401,F403
from .instances import random_problem
from .measures import (
    Coupling,
    DensityMatrix,
    DiscreteMeasure,
    Problem,
    density,
    independent_coupling,
    ipf,
    make_measure,
    make_problem,
    marginal_error,
    marginals,
    objective,
)
from .oracle import brute_force_polytope, brute_force_segment, linearized_lp, transport_simplex
from .solver_dual import (
    DualOptions,
    Potentials,
    SolveResult,
    column_update,
    coupling_from_potentials,
    duality_gap,
    row_update,
    sinkhorn_generalized,
)
from .solver_primal import (
    Cycle,
    PGOptions,
    PrimalOptions,
    cycle_defect,
    cycle_descent,
    find_violating_cycle,
    improve_along_cycle,
    projected_gradient,
)
from .verify import (
    MonotonicityReport,
    ShapeReport,
    check_cyclical_monotonicity,
    check_loop_condition,
    check_shape,
    recover_potentials,
)
