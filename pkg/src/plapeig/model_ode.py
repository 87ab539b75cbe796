"""One-dimensional model equation in p-polar (Pruefer) coordinates.

The model equation is

    (p-1) |w'|^(p-2) w'' - kappa t |w'|^(p-2) w' + lam |w|^(p-2) w = 0.

With ``alpha = (lam/(p-1))^(1/p)`` and ``alpha w = r sin_p(theta)``,
``w' = r cos_p(theta)``, it becomes the pair

    theta'   = alpha - kappa t/(p-1) * cos_p^(p-1)(theta) sin_p(theta)
    (log r)' = kappa t/(p-1) * |cos_p(theta)|^p

where ``cos_p^(p-1)`` is the signed power.  The phase equation is Lipschitz
and decoupled from the amplitude, which is what makes shooting in ``theta``
well posed even though the second-order form degenerates at ``w' = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import quad, solve_ivp

from .ptrig import PExponent, as_exponent, sincos_p, sincos_pow, odd_power

__all__ = [
    "ModelParams",
    "ToleranceSpec",
    "PruferTrajectory",
    "ModelGeometry",
    "InverseProfile",
    "IntegrationError",
    "EventNotFoundError",
    "integrate_prufer",
    "solve_model_ivp",
    "find_abar",
    "geometry_scan",
    "inverse_profile",
    "neumann_identity",
]


class IntegrationError(RuntimeError):
    """Integrator gave up; ``state`` is the last accepted ``(t, y)``."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class EventNotFoundError(IntegrationError):
    pass


@dataclass(frozen=True)
class ModelParams:
    p: PExponent
    kappa: float
    lam: float

    def __post_init__(self):
        object.__setattr__(self, "p", as_exponent(self.p))
        object.__setattr__(self, "kappa", float(self.kappa))
        lam = float(self.lam)
        if not (lam > 0 and math.isfinite(lam)):
            raise ValueError(f"eigenvalue parameter must be positive, got {self.lam!r}")
        object.__setattr__(self, "lam", lam)

    @property
    def alpha(self) -> float:
        """Phase speed ``(lam/(p-1))^(1/p)``."""
        return (self.lam / (self.p.p - 1.0)) ** (1.0 / self.p.p)

    def with_lam(self, lam: float) -> "ModelParams":
        return ModelParams(self.p, self.kappa, lam)


@dataclass(frozen=True)
class ToleranceSpec:
    rtol: float = 1e-10
    atol: float = 1e-12
    method: str = "DOP853"
    max_step: float = math.inf

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0 and self.max_step > 0):
            raise ValueError("tolerances must be positive")

    def kwargs(self) -> dict:
        return dict(rtol=self.rtol, atol=self.atol, method=self.method, max_step=self.max_step)


DEFAULT_TOL = ToleranceSpec()


def _prufer_rhs(params: ModelParams):
    pe = params.p
    p = pe.p
    alpha = params.alpha
    c = params.kappa / (p - 1.0)
    e_sin, e_cos = 1.0 / p, (p - 1.0) / p

    def rhs(t, y):
        sp, cp, ss, sc = sincos_pow(pe, y[0])
        k = c * t
        return [alpha - k * (sc * cp**e_cos) * (ss * sp**e_sin), k * cp]

    return rhs


def _phase_rhs(params: ModelParams):
    full = _prufer_rhs(params)
    return lambda t, y: full(t, y)[:1]


def _phase_event(target: float, direction: int):
    def event(t, y):
        return y[0] - target

    event.terminal = True
    event.direction = direction
    return event


class _Dense:
    """Piecewise dense output assembled from one or more solver runs."""

    def __init__(self, pieces):
        # pieces: list of (t_lo, t_hi, OdeSolution)
        self.pieces = sorted(pieces, key=lambda q: q[0])

    def __call__(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty((2, t.size))
        done = np.zeros(t.size, dtype=bool)
        for lo, hi, sol in self.pieces:
            sel = ~done & (t >= lo - 1e-12 * max(1.0, abs(lo))) & (t <= hi + 1e-12 * max(1.0, abs(hi)))
            if sel.any():
                out[:, sel] = sol(np.clip(t[sel], lo, hi))
                done |= sel
        if not done.all():
            raise ValueError("evaluation point outside the integrated range")
        return out


@dataclass(frozen=True, eq=False)
class PruferTrajectory:
    """Sampled phase/log-amplitude path with dense output.

    ``w`` and ``dw`` are reconstructed from ``alpha w = r sin_p(theta)`` and
    ``w' = r cos_p(theta)``.
    """

    params: ModelParams
    a: float
    t: np.ndarray
    theta: np.ndarray
    log_r: np.ndarray
    dense: _Dense = field(repr=False)

    @property
    def t_min(self) -> float:
        return float(self.t[0])

    @property
    def t_max(self) -> float:
        return float(self.t[-1])

    def state(self, t):
        y = self.dense(t)
        return y[0], y[1]

    def _reconstruct(self, theta, log_r):
        s, c = sincos_p(self.params.p, theta)
        r = np.exp(log_r)
        return r * s / self.params.alpha, r * c

    @property
    def w(self) -> np.ndarray:
        return self._reconstruct(self.theta, self.log_r)[0]

    @property
    def dw(self) -> np.ndarray:
        return self._reconstruct(self.theta, self.log_r)[1]

    def w_dw_at(self, t):
        theta, log_r = self.state(t)
        return self._reconstruct(theta, log_r)

    def w_at(self, t):
        return self.w_dw_at(t)[0]

    def dw_at(self, t):
        return self.w_dw_at(t)[1]

    def resample(self, n: int = 401) -> "PruferTrajectory":
        ts = np.linspace(self.t_min, self.t_max, n)
        theta, log_r = self.state(ts)
        return PruferTrajectory(self.params, self.a, ts, theta, log_r, self.dense)

    def scaled(self, factor: float) -> "PruferTrajectory":
        """Same path with ``w`` multiplied by ``factor > 0`` (shift of log r)."""
        shift = math.log(factor)
        pieces = [(lo, hi, _Shifted(sol, shift)) for lo, hi, sol in self.dense.pieces]
        return PruferTrajectory(self.params, self.a, self.t, self.theta,
                                self.log_r + shift, _Dense(pieces))

    def rows(self):
        """``(t, theta, log_r, w, dw)`` tuples for export."""
        w, dw = self._reconstruct(self.theta, self.log_r)
        return list(zip(self.t.tolist(), self.theta.tolist(), self.log_r.tolist(),
                        w.tolist(), dw.tolist()))


class _Shifted:
    def __init__(self, sol, shift):
        self.sol, self.shift = sol, shift

    def __call__(self, t):
        y = np.array(self.sol(t), copy=True)
        y[1] += self.shift
        return y


@dataclass(frozen=True)
class ModelGeometry:
    """``b(a)``, ``m(a)``, ``delta(a)`` for the IVP started at ``a``.

    When the phase never attains ``pi_p/2`` the convention ``b(a) = inf`` is
    used: ``b_of_a`` and ``delta_of_a`` are ``inf`` and ``m_of_a`` is the
    supremum of ``w`` over the integrated horizon (w is increasing there).
    """

    a: float
    b_of_a: float
    m_of_a: float
    delta_of_a: float

    @property
    def reached(self) -> bool:
        return math.isfinite(self.b_of_a)


def _run(params, t0, y0, t_end, tol, events=None, dense=True, rhs=None):
    sol = solve_ivp(rhs or _prufer_rhs(params), (t0, t_end), y0, events=events,
                    dense_output=dense, **tol.kwargs())
    if sol.status == -1:
        raise IntegrationError(f"integration failed: {sol.message}",
                               state=(float(sol.t[-1]), sol.y[:, -1].copy()))
    return sol


def _trajectory(params, a, sols) -> PruferTrajectory:
    ts, ths, lrs, pieces = [], [], [], []
    for sol in sols:
        order = np.argsort(sol.t)
        ts.append(sol.t[order])
        ths.append(sol.y[0][order])
        lrs.append(sol.y[1][order])
        pieces.append((float(sol.t.min()), float(sol.t.max()), sol.sol))
    t = np.concatenate(ts)
    t, idx = np.unique(t, return_index=True)
    return PruferTrajectory(params, float(a), t, np.concatenate(ths)[idx],
                            np.concatenate(lrs)[idx], _Dense(pieces))


def integrate_prufer(params: ModelParams, a: float, theta0: float, t_end: float,
                     step_control: ToleranceSpec = DEFAULT_TOL,
                     log_r0: Optional[float] = None) -> PruferTrajectory:
    """Integrate the Pruefer system from ``t = a`` to ``t_end`` (either direction).

    ``log_r0`` defaults to ``log(alpha)``, the value matching ``w' = 0``,
    ``w = -1`` when ``theta0 = -pi_p/2``.
    """
    if t_end == a:
        raise ValueError("t_end must differ from the start abscissa")
    y0 = [float(theta0), math.log(params.alpha) if log_r0 is None else float(log_r0)]
    sol = _run(params, float(a), y0, float(t_end), step_control)
    return _trajectory(params, a, [sol])


def default_horizon(params: ModelParams, a: float) -> float:
    return 10.0 * params.p.pi_p / params.alpha + abs(a)


def solve_model_ivp(params: ModelParams, a: float, horizon: Optional[float] = None,
                    step_control: ToleranceSpec = DEFAULT_TOL):
    """Solve the IVP ``w(a) = -1, w'(a) = 0`` up to the first ``w' = 0``.

    Returns ``(trajectory, geometry)``.  ``m(a) = r(b)/alpha`` since
    ``sin_p(pi_p/2) = 1``.
    """
    half = 0.5 * params.p.pi_p
    span = default_horizon(params, a) if horizon is None else float(horizon)
    sol = _run(params, float(a), [-half, math.log(params.alpha)], float(a) + span,
               step_control, events=[_phase_event(half, 1)])
    traj = _trajectory(params, a, [sol])
    if sol.t_events[0].size:
        b = float(sol.t_events[0][0])
        m = math.exp(float(sol.y_events[0][0][1])) / params.alpha
        return traj, ModelGeometry(float(a), b, m, b - float(a))
    m = float(np.max(traj.w))
    return traj, ModelGeometry(float(a), math.inf, m, math.inf)


def find_abar(params: ModelParams, step_control: ToleranceSpec = DEFAULT_TOL,
              horizon: Optional[float] = None) -> float:
    """Half-length ``abar`` of the odd solution: ``theta(0) = 0``, ``theta(-abar) = -pi_p/2``."""
    if params.kappa > 0:
        raise ValueError("odd-solution construction requires kappa <= 0")
    half = 0.5 * params.p.pi_p
    free = half / params.alpha
    if params.kappa == 0:
        return free
    # theta' >= alpha on the backward leg, so abar < pi_p/(2 alpha).
    span = 1.5 * free if horizon is None else float(horizon)
    sol = _run(params, 0.0, [0.0], -span, step_control,
               events=[_phase_event(-half, -1)], dense=False, rhs=_phase_rhs(params))
    if not sol.t_events[0].size:
        raise EventNotFoundError(f"theta did not reach -pi_p/2 within {span:g}",
                                 state=(float(sol.t[-1]), sol.y[:, -1].copy()))
    return -float(sol.t_events[0][0])


def geometry_scan(params: ModelParams, a_values: Sequence[float],
                  step_control: ToleranceSpec = DEFAULT_TOL):
    return [solve_model_ivp(params, a, step_control=step_control)[1] for a in a_values]


def neumann_identity(traj: PruferTrajectory, b: float):
    """``(I, scale)`` with ``I = int_a^b |w|^(p-2) w e^(-kappa t^2/2) dt``.

    ``I`` vanishes on a Neumann arc; ``scale`` is the same integral of
    ``|w|^(p-1)`` and sets the relative size.
    """
    p, kappa = traj.params.p.p, traj.params.kappa
    a = traj.a

    def integrand(t, absolute=False):
        w = float(traj.w_at(t)[0])
        val = abs(w) ** (p - 1) if absolute else float(odd_power(w, p - 1))
        return val * math.exp(-0.5 * kappa * t * t)

    # split at the zero of w for an accurate quadrature
    inner = traj.t[(traj.t > a) & (traj.t < b)]
    points = list(inner[:: max(1, inner.size // 40)])
    opts = dict(limit=400, epsabs=1e-14, epsrel=1e-12, points=points or None)
    val, _ = quad(integrand, a, b, **opts)
    scale, _ = quad(lambda t: integrand(t, True), a, b, **opts)
    return val, scale


class InverseProfile:
    """Inverse ``Psi`` of an increasing model profile and ``phi' o Psi``."""

    def __init__(self, traj: PruferTrajectory, t_lo: float, t_hi: float):
        self.traj = traj
        self.t_lo, self.t_hi = float(t_lo), float(t_hi)
        ts = np.linspace(self.t_lo, self.t_hi, 2049)
        ws = traj.w_at(ts)
        # flat turning points leave interpolation noise at roundoff level
        noise = 1e-10 * max(1.0, float(np.ptp(ws)))
        if np.any(np.diff(ws) < -noise) or not ws[-1] > ws[0]:
            raise ValueError("profile is not increasing on the requested range")
        self._ts, self._ws = ts, np.maximum.accumulate(ws)

    @property
    def w_range(self):
        return float(self._ws[0]), float(self._ws[-1])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        flat = np.atleast_1d(x).ravel()
        lo_w, hi_w = self.w_range
        if np.any(flat < lo_w - 1e-12) or np.any(flat > hi_w + 1e-12):
            raise ValueError("value outside the range of the profile")
        k = np.clip(np.searchsorted(self._ws, flat) - 1, 0, self._ws.size - 2)
        lo, hi = self._ts[k].copy(), self._ts[k + 1].copy()
        # vectorised bisection on the dense output, seeded by the sample bracket
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            below = self.traj.w_at(mid) < flat
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        out = 0.5 * (lo + hi)
        return float(out[0]) if x.ndim == 0 else out.reshape(x.shape)

    def slope(self, x):
        """``phi'(Psi(x))``."""
        t = self(x)
        return self.traj.dw_at(t) if np.ndim(t) else float(self.traj.dw_at(t)[0])


def inverse_profile(traj: PruferTrajectory, t_lo: Optional[float] = None,
                    t_hi: Optional[float] = None) -> InverseProfile:
    """Inverse of ``w`` on the increasing arc ``theta in [-pi_p/2, pi_p/2]``.

    Defaults to the part of the trajectory where the phase is in that range.
    """
    half = 0.5 * traj.params.p.pi_p
    inside = (traj.theta >= -half - 1e-9) & (traj.theta <= half + 1e-9)
    if not inside.any():
        raise ValueError("trajectory never enters the increasing arc")
    lo = traj.t[inside][0] if t_lo is None else t_lo
    hi = traj.t[inside][-1] if t_hi is None else t_hi
    return InverseProfile(traj, lo, hi)
