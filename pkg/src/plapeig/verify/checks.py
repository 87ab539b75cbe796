"""Numerical checks of the lower bounds and of the gradient comparison.

Verdicts are data: each check returns a report and never raises on a
violation.  A violation is declared only beyond a mesh tolerance, calibrated
on problems whose continuous answer is known in closed form.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from ..bounds import SHARP_PROVED, RegimeError, lichnerowicz_bound, regime, sharp_bound
from ..eigensolve import EigenQuery
from ..model_ode import ModelParams, PruferTrajectory, find_abar, solve_model_ivp, InverseProfile
from ..ptrig import as_exponent
from .rayleigh import DiscreteEigenResult, discrete_first_eigenvalue
from .segment import WeightedSegment, make_segment

__all__ = [
    "EPS_SAFETY",
    "GRADIENT_SAFETY",
    "calibrate_eps_h",
    "calibrate_gradient_tolerance",
    "LowerBoundReport",
    "GradientReport",
    "LichnerowiczReport",
    "RangeError",
    "check_lower_bound",
    "check_gradient_comparison",
    "check_lichnerowicz",
    "select_model_start",
]

# Multipliers on measured discretisation errors.  Pinned, not tuned per run.
EPS_SAFETY = 4.0
GRADIENT_SAFETY = 4.0
# Relative accuracy requested from the shooting solver inside checks.
MU_TOL = 1e-10


class RangeError(ValueError):
    """The model arc cannot cover the range of ``u``; pick another ``[a, b]``."""


@lru_cache(maxsize=None)
def calibrate_eps_h(n: int) -> float:
    """Relative mesh tolerance at ``n`` cells.

    Measured on two p = 2 problems with exact eigenvalues: the flat interval
    ``D = pi`` (value 1) and the Gaussian-type weight ``f = -t^2/2`` on
    ``D = 2`` (value 2, eigenfunction ``t e^{-t^2/2}``).  The largest
    relative error is multiplied by :data:`EPS_SAFETY`, and the shooting
    tolerance is added.
    """
    errs = []
    for kappa, diameter, exact in ((0.0, math.pi, 1.0), (-1.0, 2.0, 2.0)):
        res = discrete_first_eigenvalue(make_segment(kappa, diameter, n=n), 2.0)
        errs.append(abs(res.lambda_h - exact) / exact)
    return EPS_SAFETY * max(errs) + 2.0 * MU_TOL


@dataclass(frozen=True)
class LowerBoundReport:
    p: float
    kappa: float
    diameter: float
    n_cells: int
    lambda_h: float
    mu: float
    margin: float
    relative_margin: float
    eps_h: float
    violation: bool

    def to_json(self) -> dict:
        return asdict(self)


def check_lower_bound(segment: WeightedSegment, p, result: DiscreteEigenResult,
                      mu: Optional[float] = None,
                      eps_h: Optional[float] = None) -> LowerBoundReport:
    """Compare ``lambda_h`` with ``mu_p(kappa, D)`` for the segment's certificate.

    A violation means ``lambda_h < mu (1 - eps_h)``.
    """
    pe = as_exponent(p)
    kappa, diameter = segment.kappa_certificate, segment.diameter
    if regime(pe, kappa, diameter) != SHARP_PROVED:
        raise RegimeError(f"sharp bound not proved for p={pe.p}, kappa={kappa}")
    if mu is None:
        mu = sharp_bound(EigenQuery(pe, kappa, diameter), tol=MU_TOL)
    if eps_h is None:
        eps_h = calibrate_eps_h(segment.n_cells)
    lam = result.lambda_h
    return LowerBoundReport(pe.p, kappa, diameter, segment.n_cells, lam, mu, lam - mu,
                            (lam - mu) / mu, eps_h, bool(lam < mu * (1.0 - eps_h)))


def _m_of(params: ModelParams, a: float) -> float:
    return solve_model_ivp(params, a)[1].m_of_a


def select_model_start(params: ModelParams, u_max: float, max_shift: float = 40.0) -> float:
    """Start ``a`` of the model arc with ``m(a) = u_max``.

    ``m(-abar) = 1`` and ``m`` falls as ``a`` grows, so the root is
    bracketed by stepping ``a`` to the right of ``-abar``.
    """
    if not 0 < u_max <= 1:
        raise RangeError(f"max u = {u_max:g} outside (0, 1]; normalise with min u = -1")
    abar = find_abar(params)
    g = lambda a: _m_of(params, a) - u_max
    lo, step = -abar, 0.25 * abar
    if u_max >= 1.0 - 1e-12 or g(lo) <= 0:
        return lo
    hi = lo + step
    while g(hi) > 0:
        lo, hi = hi, hi + step
        step *= 1.5
        if hi - (-abar) > max_shift:
            raise RangeError("no model start found; widen the geometry scan")
    return brentq(g, lo, hi, xtol=1e-13, rtol=1e-13)


@lru_cache(maxsize=None)
def calibrate_gradient_tolerance(p: float, n: int) -> float:
    """Absolute slack for the gradient comparison at ``(p, n)``.

    On the model segment ``u`` is a discretisation of the model profile
    itself, so the comparison holds with equality; the measured excess is
    pure mesh error of either sign.  Its largest magnitude, relative to
    ``max |u'|``, is scaled by :data:`GRADIENT_SAFETY`.
    """
    seg = make_segment(-1.0, 1.0, n=n)
    res = discrete_first_eigenvalue(seg, p)
    rep = check_gradient_comparison(seg, p, res, tolerance_h=0.0)
    return GRADIENT_SAFETY * rep.max_deviation / rep.max_gradient


@dataclass(frozen=True)
class GradientReport:
    p: float
    kappa: float
    lambda_h: float
    a: float
    b: float
    u_max: float
    max_gradient: float
    max_excess: float
    max_deviation: float
    tolerance_h: float
    violations: int

    @property
    def ok(self) -> bool:
        return self.violations == 0

    def to_json(self) -> dict:
        return asdict(self)


def check_gradient_comparison(segment: WeightedSegment, p, result: DiscreteEigenResult,
                              model: Optional[PruferTrajectory] = None,
                              tolerance_h: Optional[float] = None) -> GradientReport:
    """Check ``|u'| <= phi'(Psi(u))`` at interior nodes.

    ``u`` is taken with ``min u = -1``.  The model solves the one-dimensional
    equation at ``lam = lambda_h`` from ``w(a) = -1`` with ``a`` chosen so
    that its maximum ``m(a)`` equals ``max u``.  ``u'`` at node ``i`` is the
    central difference.  ``tolerance_h`` is relative to ``max |u'|``.
    """
    pe = as_exponent(p)
    kappa = segment.kappa_certificate
    if kappa > 0:
        raise RegimeError("gradient comparison is set up for kappa <= 0")
    u = np.asarray(result.u_values, dtype=float)
    if np.ptp(u) <= 0:
        raise RangeError("constant u is not a first nonzero eigenfunction")
    u = u / -u.min()
    u_max = float(u.max())
    params = ModelParams(pe, kappa, result.lambda_h)
    if model is None:
        a = select_model_start(params, u_max)
        model, geom = solve_model_ivp(params, a)
        if not geom.reached:
            raise RangeError("model arc has no upper turning point")
        b = geom.b_of_a
    else:
        a, b = model.t_min, model.t_max
    inv = InverseProfile(model, a, b)
    lo_w, hi_w = inv.w_range
    if u_max > hi_w + 1e-6:
        raise RangeError(f"range of u [-1, {u_max:.6g}] exceeds model range "
                         f"[{lo_w:.6g}, {hi_w:.6g}]; reselect [a, b] by geometry_scan")
    interior = np.clip(u[1:-1], lo_w, hi_w)
    grad = np.abs(u[2:] - u[:-2]) / (2.0 * segment.h)
    bound = np.abs(inv.slope(interior))
    gmax = float(grad.max())
    if tolerance_h is None:
        tolerance_h = calibrate_gradient_tolerance(pe.p, segment.n_cells)
    excess = grad - bound
    return GradientReport(pe.p, kappa, result.lambda_h, float(a), float(b), u_max, gmax,
                          float(excess.max()), float(np.abs(excess).max()), float(tolerance_h),
                          int(np.count_nonzero(excess > tolerance_h * gmax)))


@dataclass(frozen=True)
class LichnerowiczReport:
    p: float
    kappa: float
    lambda_h: float
    bound: float
    eps_h: float
    holds: bool

    def to_json(self) -> dict:
        return asdict(self)


def check_lichnerowicz(segment: WeightedSegment, p, result: DiscreteEigenResult,
                       eps_h: Optional[float] = None) -> LichnerowiczReport:
    """``lambda_h >= (kappa/(p-1))^(p/2) (1 - eps_h)`` for ``p >= 2``, ``kappa > 0``."""
    pe = as_exponent(p)
    bound = lichnerowicz_bound(pe, segment.kappa_certificate)
    if eps_h is None:
        eps_h = calibrate_eps_h(segment.n_cells)
    lam = result.lambda_h
    return LichnerowiczReport(pe.p, segment.kappa_certificate, lam, bound, eps_h,
                              bool(lam >= bound * (1.0 - eps_h)))
