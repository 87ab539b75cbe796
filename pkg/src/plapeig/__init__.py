"""Sharp lower bounds for the first nonzero eigenvalue of the weighted p-Laplacian."""

from .bounds import BoundReport, bound_report, lichnerowicz_bound, regime, sharp_bound, wang_li_bound
from .eigensolve import EigenQuery, EigenResult, delta_bar, model_eigenfunction, mu_closed_form_kappa0, mu_shoot
from .model_ode import ModelParams, ToleranceSpec, find_abar, geometry_scan, solve_model_ivp
from .ptrig import PExponent, arctan_p, cos_p, pi_p, sin_p, tan_p

__version__ = "0.1.0"

__all__ = [
    "BoundReport",
    "EigenQuery",
    "EigenResult",
    "ModelParams",
    "PExponent",
    "ToleranceSpec",
    "arctan_p",
    "bound_report",
    "cos_p",
    "delta_bar",
    "find_abar",
    "geometry_scan",
    "lichnerowicz_bound",
    "model_eigenfunction",
    "mu_closed_form_kappa0",
    "mu_shoot",
    "pi_p",
    "regime",
    "sharp_bound",
    "sin_p",
    "solve_model_ivp",
    "tan_p",
    "wang_li_bound",
]
