"""First nonzero Neumann eigenvalue of the one-dimensional model problem.

By odd reflection the Neumann problem on ``[-D/2, D/2]`` is equivalent to the
mixed problem ``phi(0) = 0``, ``phi'(D/2) = 0`` on the half interval.  In
phase variables that is: start at ``theta(0) = 0`` and ask for ``theta`` to
reach ``pi_p/2`` exactly at ``t = D/2``.  The phase right-hand side is
increasing in ``lam`` (through ``alpha``), so ``theta_lam(D/2)`` is
increasing in ``lam`` and bisection on its sign is well founded for every
``kappa``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .model_ode import (
    DEFAULT_TOL,
    EventNotFoundError,
    ModelParams,
    PruferTrajectory,
    ToleranceSpec,
    _phase_event,
    _phase_rhs,
    _run,
    _trajectory,
    find_abar,
)
from .ptrig import PExponent, as_exponent, sin_p

__all__ = [
    "EigenQuery",
    "EigenResult",
    "BracketError",
    "mu_closed_form_kappa0",
    "mu_shoot",
    "delta_bar",
    "model_eigenfunction",
]

log = logging.getLogger(__name__)


class BracketError(RuntimeError):
    pass


@dataclass(frozen=True)
class EigenQuery:
    p: PExponent
    kappa: float
    diameter: float

    def __post_init__(self):
        object.__setattr__(self, "p", as_exponent(self.p))
        object.__setattr__(self, "kappa", float(self.kappa))
        d = float(self.diameter)
        if not (d > 0 and math.isfinite(d)):
            raise ValueError(f"diameter must be positive, got {self.diameter!r}")
        object.__setattr__(self, "diameter", d)


@dataclass(frozen=True)
class EigenResult:
    query: EigenQuery
    mu: float
    lambda_bracket: Tuple[float, float]
    iterations: int
    hit_time: float
    neumann_residual: float
    method: str = "prufer-shooting"

    def to_json(self) -> dict:
        q = self.query
        return {
            "p": q.p.p,
            "kappa": q.kappa,
            "D": q.diameter,
            "mu": self.mu,
            "bracket": [self.lambda_bracket[0], self.lambda_bracket[1]],
            "iterations": self.iterations,
            "method": self.method,
        }

    @classmethod
    def from_json(cls, data: dict) -> "EigenResult":
        """Inverse of :meth:`to_json`; diagnostics not in the schema come back as ``nan``."""
        query = EigenQuery(data["p"], data["kappa"], data["D"])
        lo, hi = data["bracket"]
        return cls(query, data["mu"], (lo, hi), data["iterations"], math.nan, math.nan,
                   data.get("method", "prufer-shooting"))


def mu_closed_form_kappa0(p, D: float) -> float:
    """``(p-1) (pi_p / D)^p``."""
    pe = as_exponent(p)
    if not D > 0:
        raise ValueError("diameter must be positive")
    return (pe.p - 1.0) * (pe.pi_p / D) ** pe.p


def _phase_at(params: ModelParams, t_end: float, tol: ToleranceSpec) -> float:
    sol = _run(params, 0.0, [0.0], t_end, tol, dense=False, rhs=_phase_rhs(params))
    return float(sol.y[0, -1])


def mu_shoot(query: EigenQuery, tol: float = 1e-8,
             step_control: ToleranceSpec = DEFAULT_TOL, max_doublings: int = 80,
             fine_points: int = 64) -> EigenResult:
    """Solve for ``lam`` with ``theta_lam(D/2) = pi_p/2``, ``theta_lam(0) = 0``.

    The bracket is located by a ratio-2 geometric scan starting from the
    ``kappa = 0`` value.  If the scanned phase values are not monotone in
    ``lam`` a fine geometric scan over the same range replaces them and the
    lowest sign change is kept.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    pe, half_len = query.p, 0.5 * query.diameter
    target = 0.5 * pe.pi_p
    base = ModelParams(pe, query.kappa, mu_closed_form_kappa0(pe, query.diameter))

    def g(lam):
        return _phase_at(base.with_lam(lam), half_len, step_control) - target

    lam0 = base.lam
    scanned = [(lam0, g(lam0))]
    step = 2.0 if scanned[0][1] < 0 else 0.5
    lam = lam0
    for _ in range(max_doublings):
        if (scanned[-1][1] < 0) != (scanned[0][1] < 0) or scanned[-1][1] == 0:
            break
        lam *= step
        scanned.append((lam, g(lam)))
    else:
        raise BracketError(f"no sign change of the shooting map for lam in "
                           f"[{min(s[0] for s in scanned):g}, {max(s[0] for s in scanned):g}]")
    scanned.sort()
    values = [s[1] for s in scanned]
    if any(v2 <= v1 for v1, v2 in zip(values, values[1:])):
        log.warning("shooting map not monotone on the coarse scan; refining")
        grid = np.geomspace(scanned[0][0], scanned[-1][0], fine_points)
        scanned = [(float(x), g(float(x))) for x in grid]
    lo = hi = None
    for (l1, v1), (l2, v2) in zip(scanned, scanned[1:]):
        if v1 <= 0 <= v2:
            lo, hi, g_lo, g_hi = l1, l2, v1, v2
            break
    if lo is None:
        raise BracketError("scan found no certified bracket")

    iterations = 0
    while hi - lo > tol * lo and g_lo != 0 and g_hi != 0:
        mid = 0.5 * (lo + hi)
        g_mid = g(mid)
        iterations += 1
        if g_mid < 0:
            lo, g_lo = mid, g_mid
        else:
            hi, g_hi = mid, g_mid
    if g_lo == 0:
        mu = lo
    elif g_hi == 0:
        mu = hi
    else:
        # secant point inside the final bracket
        mu = lo - g_lo * (hi - lo) / (g_hi - g_lo)
    mu = min(max(mu, lo), hi)

    params = base.with_lam(mu)
    hit = _hit_time(params, step_control)
    resid = abs(_phase_at(params, half_len, step_control) - target)
    return EigenResult(query, mu, (lo, hi), iterations, hit, resid)


def _hit_time(params: ModelParams, tol: ToleranceSpec) -> float:
    target = 0.5 * params.p.pi_p
    span = 20.0 * target / params.alpha
    sol = _run(params, 0.0, [0.0], span, tol, events=[_phase_event(target, 1)],
               dense=False, rhs=_phase_rhs(params))
    return float(sol.t_events[0][0]) if sol.t_events[0].size else math.inf


def delta_bar(params: ModelParams, step_control: ToleranceSpec = DEFAULT_TOL) -> float:
    """Length ``2 abar`` of the odd Neumann arc at eigenvalue ``lam``."""
    return 2.0 * find_abar(params, step_control)


def model_eigenfunction(query: EigenQuery, result: EigenResult,
                        step_control: ToleranceSpec = DEFAULT_TOL) -> PruferTrajectory:
    """Odd increasing eigenfunction on ``[-D/2, D/2]`` scaled to ``phi(D/2) = 1``.

    The two halves are integrated outward from ``theta(0) = 0``.
    """
    params = ModelParams(query.p, query.kappa, result.mu)
    half_len = 0.5 * query.diameter
    fwd = _run(params, 0.0, [0.0, 0.0], half_len, step_control)
    bwd = _run(params, 0.0, [0.0, 0.0], -half_len, step_control)
    traj = _trajectory(params, -half_len, [bwd, fwd])
    theta_end, log_r_end = fwd.y[0, -1], fwd.y[1, -1]
    w_end = math.exp(log_r_end) * sin_p(query.p, theta_end) / params.alpha
    return traj.scaled(1.0 / w_end)
