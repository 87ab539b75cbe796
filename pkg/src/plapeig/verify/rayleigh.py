"""Discrete first nonzero eigenvalue of the weighted p-Laplacian.

The quotient minimised is

    R(u) = sum_cells h wbar |Du|^p / min_c sum_nodes omega |u - c|^p,

``wbar`` the cell-averaged weight ``e^{-f}``, ``omega`` the trapezoid node
weights.  The inner minimum over the constant ``c`` replaces the nonlinear
constraint ``sum omega |u|^{p-2} u = 0``: its optimality condition is exactly
that constraint for ``u - c``.

Strategy: L-BFGS on ``R`` at a coarse nested grid, then linear prolongation
and a damped Newton solve of the discrete Euler-Lagrange system on each finer
level.  Newton uses the gauge ``c = 0`` and the normalisation
``sum omega |u|^p = 1``; the bordered Jacobian is tridiagonal (cyclic on a
circle) plus one row and one column.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sparse
from scipy.optimize import brentq, minimize
from scipy.sparse.linalg import splu

from ..ptrig import as_exponent, sin_p
from .segment import WeightedSegment

__all__ = [
    "DiscreteEigenResult",
    "ConvergenceError",
    "discrete_first_eigenvalue",
    "rayleigh_quotient",
    "optimal_shift",
    "euler_lagrange_residual",
]

log = logging.getLogger(__name__)

# Jacobian-only regularisation of |x|^(p-2); residuals stay exact.
_JAC_EPS = 1e-12


class ConvergenceError(RuntimeError):
    def __init__(self, message, best=None, gradient_norm=None):
        super().__init__(message)
        self.best = best
        self.gradient_norm = gradient_norm


@dataclass(frozen=True, eq=False)
class DiscreteEigenResult:
    lambda_h: float
    u_values: np.ndarray
    mean_constraint: float
    residual: float
    grid_spacing: float
    p: float
    newton_steps: int = 0
    lbfgs_steps: int = 0

    def to_json(self) -> dict:
        return {
            "lambda_h": self.lambda_h,
            "mean_constraint": self.mean_constraint,
            "residual": self.residual,
            "h": self.grid_spacing,
            "p": self.p,
            "N": int(self.u_values.size),
        }


def _phi(x, p):
    return np.sign(x) * np.abs(x) ** (p - 1.0)


def optimal_shift(seg: WeightedSegment, u: np.ndarray, p: float) -> float:
    """``c`` minimising ``sum omega |u - c|^p``, i.e. ``sum omega phi(u - c) = 0``."""
    om = seg.node_weights
    lo, hi = float(u.min()), float(u.max())
    if hi - lo <= 0:
        return lo
    g = lambda c: float(np.sum(om * _phi(u - c, p)))
    return brentq(g, lo, hi, xtol=1e-15 * max(1.0, abs(hi - lo)), rtol=4 * np.finfo(float).eps,
                  maxiter=500)


def rayleigh_quotient(seg: WeightedSegment, u: np.ndarray, p) -> float:
    p = as_exponent(p).p
    num = seg.h * np.sum(seg.cell_weights * np.abs(seg.differences(u)) ** p)
    c = optimal_shift(seg, u, p)
    return float(num / np.sum(seg.node_weights * np.abs(u - c) ** p))


def _divergence(seg: WeightedSegment, flux: np.ndarray) -> np.ndarray:
    # A_i = flux_{i-1} - flux_i with zero flux through segment ends
    if seg.periodic:
        return np.roll(flux, 1) - flux
    out = np.zeros(flux.size + 1)
    out[1:] += flux
    out[:-1] -= flux
    return out


def _value_and_grad(seg, u, p):
    wb, om = seg.cell_weights, seg.node_weights
    g = seg.differences(u)
    num = seg.h * np.sum(wb * np.abs(g) ** p)
    c = optimal_shift(seg, u, p)
    v = u - c
    den = np.sum(om * np.abs(v) ** p)
    r = num / den
    grad = p * (_divergence(seg, wb * _phi(g, p)) - r * om * _phi(v, p)) / den
    return r, grad


def euler_lagrange_residual(seg: WeightedSegment, u: np.ndarray, lam: float, p) -> float:
    """Relative max-norm of ``div(wbar phi(Du)) - lam omega phi(u - c)``."""
    p = as_exponent(p).p
    c = optimal_shift(seg, u, p)
    src = lam * seg.node_weights * _phi(u - c, p)
    res = _divergence(seg, seg.cell_weights * _phi(seg.differences(u), p)) - src
    return float(np.max(np.abs(res)) / np.max(np.abs(src)))


def _newton(seg, u, lam, p, tol, max_iter):
    n = u.size
    h = seg.h
    wb, om = seg.cell_weights, seg.node_weights

    def residual(u, lam):
        src = om * _phi(u, p)
        body = _divergence(seg, wb * _phi(seg.differences(u), p)) - lam * src
        return np.append(body, np.sum(om * np.abs(u) ** p) - 1.0), src

    u = u / np.sum(om * np.abs(u) ** p) ** (1.0 / p)
    F, src = residual(u, lam)
    rel = np.max(np.abs(F[:-1])) / np.max(np.abs(lam * src))
    steps = stalls = 0
    for steps in range(1, max_iter + 1):
        if rel < tol:
            break
        g = seg.differences(u)
        s = wb * (p - 1.0) * (g * g + _JAC_EPS**2) ** (0.5 * (p - 2.0)) / h
        diag = -lam * om * (p - 1.0) * (u * u + _JAC_EPS**2) ** (0.5 * (p - 2.0))
        if seg.periodic:
            diag = diag + s + np.roll(s, 1)
            rows = np.concatenate([np.arange(n), np.arange(n), (np.arange(n) + 1) % n])
            cols = np.concatenate([np.arange(n), (np.arange(n) + 1) % n, np.arange(n)])
            vals = np.concatenate([diag, -s, -s])
            jac = sparse.coo_matrix((vals, (rows, cols)), shape=(n, n))
        else:
            diag[1:] += s
            diag[:-1] += s
            jac = sparse.diags([diag, -s, -s], [0, 1, -1], shape=(n, n))
        full = sparse.bmat([[jac, sparse.csr_matrix(-src[:, None])],
                            [sparse.csr_matrix(p * src[None, :]), None]], format="csc")
        d = splu(full, permc_spec="NATURAL", diag_pivot_thresh=0.0).solve(-F)
        if not np.all(np.isfinite(d)):
            break
        f0 = np.linalg.norm(F)
        step = 1.0
        while step > 1e-4:
            u_new, lam_new = u + step * d[:-1], lam + step * d[-1]
            F_new, src_new = residual(u_new, lam_new)
            if np.linalg.norm(F_new) < f0:
                break
            step *= 0.5
        else:
            break  # no descent: roundoff floor reached
        rel_new = np.max(np.abs(F_new[:-1])) / np.max(np.abs(lam_new * src_new))
        u, lam, F, src = u_new, lam_new, F_new, src_new
        stalls = stalls + 1 if rel_new > 0.5 * rel and rel_new < 1e-4 else 0
        rel = rel_new
        if stalls >= 3 or (stalls and rel < 1e3 * tol):
            break
    return u, lam, rel, steps


def _initial_guess(seg: WeightedSegment, p, seed):
    if seed is None:
        pe = as_exponent(p)
        if seg.periodic:
            return sin_p(pe, 2.0 * pe.pi_p * seg.nodes / seg.length)
        centre = 0.5 * (seg.nodes[0] + seg.nodes[-1])
        return sin_p(pe, pe.pi_p * (seg.nodes - centre) / seg.length)
    rng = np.random.default_rng(seed)
    return rng.standard_normal(seg.nodes.size)


def _prolong(coarse: WeightedSegment, fine: WeightedSegment, u: np.ndarray) -> np.ndarray:
    if coarse.periodic:
        x = np.append(coarse.nodes, coarse.nodes[0] + coarse.length)
        return np.interp(fine.nodes, x, np.append(u, u[0]))
    return np.interp(fine.nodes, coarse.nodes, u)


def discrete_first_eigenvalue(segment: WeightedSegment, p, tol: float = 1e-10,
                              seed: Optional[int] = None, coarse_cells: int = 64,
                              max_lbfgs: int = 20000, max_newton: int = 40,
                              accept: float = 1e-5) -> DiscreteEigenResult:
    """Minimise the discrete Rayleigh quotient on ``segment``.

    ``seed=None`` starts from the constant-weight profile ``sin_p``; an
    integer seed starts from Gaussian noise, which is how restarts probe that
    the minimum found is the first nonzero eigenvalue.  The returned profile
    is shifted so the mean constraint holds and scaled so that
    ``min u = -1``, ``max u in (0, 1]`` (sign flipped if needed).
    """
    pe = as_exponent(p)
    pv = pe.p
    levels = [segment]
    while levels[-1].n_cells % 2 == 0 and levels[-1].n_cells // 2 >= coarse_cells:
        levels.append(levels[-1].coarsen(2))
    levels.reverse()

    seg = levels[0]
    u0 = _initial_guess(seg, pv, seed)
    opt = minimize(lambda x: _value_and_grad(seg, x, pv), u0, jac=True, method="L-BFGS-B",
                   options=dict(maxiter=max_lbfgs, maxfun=2 * max_lbfgs, gtol=1e-13,
                                ftol=1e-15, maxcor=30))
    u = opt.x - optimal_shift(seg, opt.x, pv)
    lam = rayleigh_quotient(seg, u, pv)
    newton_steps = 0
    rel = math.inf
    for k, seg in enumerate(levels):
        if k:
            u = _prolong(levels[k - 1], seg, u)
            u = u - optimal_shift(seg, u, pv)
            lam = rayleigh_quotient(seg, u, pv)
        u, lam, rel, n_it = _newton(seg, u, lam, pv, tol, max_newton)
        newton_steps += n_it
    if not rel < accept:
        _, grad = _value_and_grad(seg, u, pv)
        raise ConvergenceError(f"Euler-Lagrange residual {rel:.3g} above {accept:g}",
                               best=u, gradient_norm=float(np.linalg.norm(grad)))

    u = u - optimal_shift(seg, u, pv)
    if -u.min() < u.max():
        u = -u
    u = u / -u.min()
    lam_h = rayleigh_quotient(seg, u, pv)
    mean = float(np.sum(seg.node_weights * _phi(u, pv)))
    return DiscreteEigenResult(
        lambda_h=lam_h,
        u_values=u,
        mean_constraint=mean,
        residual=euler_lagrange_residual(seg, u, lam_h, pv),
        grid_spacing=seg.h,
        p=pv,
        newton_steps=newton_steps,
        lbfgs_steps=int(opt.nit),
    )
