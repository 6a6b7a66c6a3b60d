"""Worst-case Shewhart change detection for hidden Markov models."""

from .adversary import (
    AdversaryPolicy,
    FixedTimeTrigger,
    GeometricTrigger,
    InfoModel,
    MonteCarloEstimate,
    ObsThresholdTrigger,
    StateBandTrigger,
    adversary_tau,
    equalizer_check,
    estimate_arl,
    estimate_worst_detection,
)
from .games import (
    CriteriaReport,
    FiniteGame,
    FirstSymbolDetector,
    Lemma1Report,
    MemorylessDetector,
    TableDetector,
    criteria_bridge,
    lemma1_enumerate,
    random_game,
)
from .model import (
    DiscreteModel,
    GaussianAr1Params,
    Normal1D,
    TrajectoryRecord,
    discrete_model_from_json,
    make_discrete,
    make_gaussian_ar1,
    post_conditional_obs_density,
    sample_trajectory,
)
from .numerics import (
    QuadratureRule,
    RootBracket,
    gauss_hermite_expect,
    norm_cdf,
    norm_quantile,
    rng_stream,
    solve_monotone_root,
)
from .shewhart import (
    CalibrationResult,
    ShewhartPolicy,
    WorstCasePrior,
    averaged_density_1,
    averaged_density_2,
    beta1,
    build_policy,
    calibrate,
    gaussian_curve_values,
    mismatch_beta1_tilde,
    mismatch_beta2_tilde,
    per_state_detection,
    run_policy,
    solve_worst_case_prior,
    theorem1_ratio,
    theorem2_family_check,
)

__version__ = "0.1.0"
