"""Approximately similar t-tests for predictive regressions with a
persistent AR(1) regressor, via Monte Carlo calibrated critical value
functions (CVFs)."""

from .engine import (
    ESTIMATED,
    KNOWN,
    NU_DAGGER,
    NU_STAR,
    CvfModel,
    Flattening,
    Grid,
    MixtureDraws,
    RefineResult,
    RejectionEstimate,
    assemble_lp,
    calibrate,
    default_statistic,
    derive_seed,
    evaluate_cvf,
    mc_discrepancy_bound,
    null_rejection,
    reduce_draws,
    refine,
    residual_scale_statistic,
    sample_mixture,
)
from .errors import (
    BadOverlay,
    ConfigError,
    CvfkitError,
    DegenerateSample,
    Infeasible,
    NoConvergence,
    NumericalFailure,
)
from .lp import LpProblem, LpSolution, solve_boxed_lp
from .model import (
    INTERCEPT,
    TREND,
    Cov2,
    LocalStats,
    ModelParams,
    Sample,
    SuffStats,
    demean,
    estimate_cov,
    lagged,
    local_stats,
    log_density_invariant,
    log_lr,
    scaling_g,
    simulate,
    suff_stats,
    t_statistic,
)
from .serialize import dumps_cvf_model, load_cvf_model, loads_cvf_model, save_cvf_model

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
