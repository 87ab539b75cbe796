"""Discrete verification harness on one-dimensional weighted segments."""

from .campaign import (
    CampaignSpec,
    CampaignTask,
    run_campaign,
    run_task,
    summarize,
    summary_csv,
    write_jsonl,
)
from .checks import (
    GradientReport,
    LichnerowiczReport,
    LowerBoundReport,
    RangeError,
    calibrate_eps_h,
    calibrate_gradient_tolerance,
    check_gradient_comparison,
    check_lichnerowicz,
    check_lower_bound,
    select_model_start,
)
from .rayleigh import ConvergenceError, DiscreteEigenResult, discrete_first_eigenvalue, rayleigh_quotient
from .segment import BumpSpec, CertificateError, WeightedSegment, certify, make_circle, make_segment

__all__ = [
    "BumpSpec",
    "CampaignSpec",
    "CampaignTask",
    "CertificateError",
    "ConvergenceError",
    "DiscreteEigenResult",
    "GradientReport",
    "LichnerowiczReport",
    "LowerBoundReport",
    "RangeError",
    "WeightedSegment",
    "calibrate_eps_h",
    "calibrate_gradient_tolerance",
    "certify",
    "check_gradient_comparison",
    "check_lichnerowicz",
    "check_lower_bound",
    "discrete_first_eigenvalue",
    "make_circle",
    "make_segment",
    "rayleigh_quotient",
    "run_campaign",
    "run_task",
    "select_model_start",
    "summarize",
    "summary_csv",
    "write_jsonl",
]
