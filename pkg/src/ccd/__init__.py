"""Conformal CUSUM change detection.

Tracks three processes over a data stream: the likelihood ratio martingale,
the conformal test martingale built from optimal bets on conformal p-values,
and the normalized e-value process; raises a CUSUM alarm whenever a process
grows by a chosen factor over its running minimum.  ccd.sim adds a seeded
Monte-Carlo harness; the ccd console script exposes everything on the
command line.
"""
from ._backend import BACKEND, conformal_pvalues, cusum_alarms
from .core import (
    CepAccumulator,
    ConformalTransducer,
    CusumDetector,
    MartingaleDiedError,
    ProcessPath,
    cusum_statistic,
    ctm_step,
    lrm_step,
)
from .models import (
    BernoulliPair,
    BettingFunction,
    EmpiricalCaoBetting,
    FiniteCaoBetting,
    FiniteLikelihoodTable,
    GaussMeanCaoBetting,
    GaussMeanPair,
    GaussVarCaoBetting,
    GaussVarPair,
    PrePostPair,
    roc_slope_gauss_mean,
    roc_slope_gauss_var,
)
from .normal import std_normal_cdf, std_normal_pdf, std_normal_quantile
from .sim import (
    ChernoffReport,
    ExperimentConfig,
    FalseAlarmReport,
    FinalValues,
    KsResult,
    QuantileSummary,
    Theorem1Report,
    chernoff_check,
    false_alarm_study,
    final_log10_values,
    generate_stream,
    run_paths,
    theorem1_check,
    validity_study,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BernoulliPair",
    "BettingFunction",
    "CepAccumulator",
    "ChernoffReport",
    "ConformalTransducer",
    "CusumDetector",
    "EmpiricalCaoBetting",
    "ExperimentConfig",
    "FalseAlarmReport",
    "FinalValues",
    "FiniteCaoBetting",
    "FiniteLikelihoodTable",
    "GaussMeanCaoBetting",
    "GaussMeanPair",
    "GaussVarCaoBetting",
    "GaussVarPair",
    "KsResult",
    "MartingaleDiedError",
    "PrePostPair",
    "ProcessPath",
    "QuantileSummary",
    "Theorem1Report",
    "chernoff_check",
    "conformal_pvalues",
    "ctm_step",
    "cusum_alarms",
    "cusum_statistic",
    "false_alarm_study",
    "final_log10_values",
    "generate_stream",
    "lrm_step",
    "roc_slope_gauss_mean",
    "roc_slope_gauss_var",
    "run_paths",
    "std_normal_cdf",
    "std_normal_pdf",
    "std_normal_quantile",
    "theorem1_check",
    "validity_study",
    "__version__",
]
