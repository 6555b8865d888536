"""Differentially private ratio statistics: estimators, closed-form analysis,
confidence intervals and Monte Carlo experiments for the relative risk."""

from dpratio.analysis import AccuracyBound, RatioLawParams, ratio_of_laplace_cdf
from dpratio.confidence import (
    CIMethod,
    ConfidenceInterval,
    ProportionPair,
    classic_ci,
    conservative_ci,
    private_asymptotic_ci,
)
from dpratio.errors import DPRatioError, DomainError
from dpratio.estimators import CountTable, Method, RatioEstimate, estimate
from dpratio.mechanisms import PrivacyBudget, calibrate_gaussian_balle, calibrate_gaussian_dwork
from dpratio.numerics import RngHandle, ei
from dpratio.simulation import ExperimentGrid, ExperimentRecord, run_experiment

__version__ = "0.1.0"

__all__ = [
    "AccuracyBound",
    "CIMethod",
    "ConfidenceInterval",
    "CountTable",
    "DPRatioError",
    "DomainError",
    "ExperimentGrid",
    "ExperimentRecord",
    "Method",
    "PrivacyBudget",
    "ProportionPair",
    "RatioEstimate",
    "RatioLawParams",
    "RngHandle",
    "calibrate_gaussian_balle",
    "calibrate_gaussian_dwork",
    "classic_ci",
    "conservative_ci",
    "ei",
    "estimate",
    "private_asymptotic_ci",
    "ratio_of_laplace_cdf",
    "run_experiment",
]
