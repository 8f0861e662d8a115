"""Backward equations driven by finite-mark random measures whose
compensator is predictable and discontinuous, solved and machine-verified
on exactly enumerated scenario trees."""

from .measure_core import (
    NO_JUMP,
    MarkSpace,
    ScenarioModel,
    ScenarioTree,
    SlotView,
    build_tree,
    doleans_exponential,
    doleans_sqrt_factorization,
)
from .norms import (
    canonical_field,
    hat_z,
    hat_z_all,
    jump_second_moment,
    lipschitz_seminorm,
    mixed_norm_sq,
    y_norm_sq,
    z_norm_sq,
)
from .conditions import (
    ContractionProfile,
    DenominatorNonpositive,
    beta_threshold,
    check_main_hypothesis,
    contraction_profile,
    contraction_profile_H,
    detect_counterexample,
    hat_Lz,
    proof_weights,
)
from .solver import (
    BsdeProblem,
    ConditionViolated,
    Generator,
    NoConvergence,
    NonFinite,
    Solution,
    SolveReport,
    SolverError,
    StepSingular,
    backward_oracle,
    bsde_residual,
    implicit_step_solve,
    picard_map,
    picard_solve,
    represent_martingale,
    solve_linear,
)
from .verification import (
    CheckResult,
    check_apriori_estimate,
    check_identity_lemma,
    check_integral_inequality,
    check_lipschitz,
    check_norm_equivalence,
    check_solution_jump_identity,
    run_suite,
)
from . import scenarios

__version__ = "0.1.0"
