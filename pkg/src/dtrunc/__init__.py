"""Inference for randomly doubly truncated data.

Estimation of the event-time distribution under random double truncation
(nonparametric MLE and a one-parameter exponential-tilt model), the
truncation sampling probabilities and joint truncation distribution,
bootstrap inference, inverse-probability-weighted Cox regression,
competing-risks cumulative incidence, a quasi-independence test, and
Monte Carlo experiment drivers. ``dtrunc --help`` exposes everything as
CLI subcommands.
"""

from ._backend import active_backend, set_backend
from .cif import CifFit, cif, merge_event_groups
from .cox import CoxFit, cox_fit, cox_score, g_by_group
from .errors import (
    DegeneracyError,
    DtruncError,
    DtruncWarning,
    GroupExistenceError,
    NonConvergenceError,
    NonIdentifiableError,
    ParseError,
    SchemaError,
    UndefinedStatisticError,
    ValidationError,
    ZeroVarianceError,
)
from .npmle import (
    JointTruncationFit,
    NpmleFit,
    SamplingProbability,
    fixed_point_residual,
    npmle_joint,
    npmle_selfconsistency,
    shen_K,
)
from .resampling import BootstrapResult, obvious_bootstrap, simple_bootstrap
from .sample import (
    ExistenceReport,
    TruncatedSample,
    existence_check,
    load_sample,
    write_sample,
)
from .sef import SefFit, sef_cdf, sef_fit
from .simulate import (
    CoxScenario,
    ExperimentConfig,
    ExperimentReport,
    TruncationDesign,
    UntruncatedDraws,
    gen_truncated,
    load_config,
    preset_table3,
    preset_table4,
    run_experiment,
)
from .step import StepDistribution, eval_cdf, eval_cdf_leftlimit
from .tau import TauTest, kendall_tau_test

__version__ = "0.1.0"

__all__ = [
    "BootstrapResult",
    "CifFit",
    "CoxFit",
    "CoxScenario",
    "DegeneracyError",
    "DtruncError",
    "DtruncWarning",
    "ExistenceReport",
    "ExperimentConfig",
    "ExperimentReport",
    "GroupExistenceError",
    "JointTruncationFit",
    "NonConvergenceError",
    "NonIdentifiableError",
    "NpmleFit",
    "ParseError",
    "SamplingProbability",
    "SchemaError",
    "SefFit",
    "StepDistribution",
    "TauTest",
    "TruncatedSample",
    "TruncationDesign",
    "UndefinedStatisticError",
    "UntruncatedDraws",
    "ValidationError",
    "ZeroVarianceError",
    "active_backend",
    "cif",
    "cox_fit",
    "cox_score",
    "eval_cdf",
    "eval_cdf_leftlimit",
    "existence_check",
    "fixed_point_residual",
    "g_by_group",
    "gen_truncated",
    "kendall_tau_test",
    "load_config",
    "load_sample",
    "merge_event_groups",
    "npmle_joint",
    "npmle_selfconsistency",
    "obvious_bootstrap",
    "preset_table3",
    "preset_table4",
    "run_experiment",
    "sef_cdf",
    "sef_fit",
    "set_backend",
    "shen_K",
    "simple_bootstrap",
    "write_sample",
]
