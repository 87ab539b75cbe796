"""Lower bounds for the first nonzero eigenvalue of the weighted p-Laplacian, with regime guards."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from .eigensolve import EigenQuery, mu_closed_form_kappa0, mu_shoot
from .ptrig import as_exponent

__all__ = [
    "BoundReport",
    "RegimeError",
    "regime",
    "sharp_bound",
    "lichnerowicz_bound",
    "wang_li_bound",
    "bound_report",
]

SHARP_PROVED = "sharp-proved"
SHARP_CONJECTURED = "sharp-conjectured"
LICHNEROWICZ_ONLY = "lichnerowicz-only"

Value = Union[float, str]


class RegimeError(ValueError):
    pass


def regime(p, kappa: float, diameter: Optional[float] = 1.0) -> str:
    p = as_exponent(p).p
    if p <= 2 or kappa <= 0:
        return SHARP_PROVED
    if diameter is None:
        return LICHNEROWICZ_ONLY
    return SHARP_CONJECTURED


def sharp_bound(query: EigenQuery, tol: float = 1e-8) -> float:
    """``mu_p(kappa, D)``.  Outside the proved regime the number is the model
    value only; use :func:`bound_report` to get it tagged."""
    if query.kappa == 0:
        return mu_closed_form_kappa0(query.p, query.diameter)
    return mu_shoot(query, tol=tol).mu


def lichnerowicz_bound(p, kappa: float) -> float:
    """``(kappa/(p-1))^(p/2)`` for ``p >= 2``, ``kappa > 0``."""
    p = as_exponent(p).p
    if p < 2 or kappa <= 0:
        raise RegimeError("Lichnerowicz-type bound needs p >= 2 and kappa > 0")
    return (kappa / (p - 1.0)) ** (p / 2.0)


def wang_li_bound(p, kappa: float) -> float:
    """Earlier bound ``kappa^(p/2) / (p-1)^(p-1)``; kept for comparison."""
    p = as_exponent(p).p
    if kappa <= 0:
        raise RegimeError("Wang-Li bound needs kappa > 0")
    return kappa ** (p / 2.0) / (p - 1.0) ** (p - 1.0)


@dataclass(frozen=True)
class BoundReport:
    p: float
    kappa: float
    diameter: Optional[float]
    sharp_mu: Value
    lichnerowicz: Value
    wang_li: Value
    best: Value
    regime: str

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "kappa": self.kappa,
            "D": self.diameter,
            "sharp_mu": self.sharp_mu,
            "lichnerowicz": self.lichnerowicz,
            "wang_li": self.wang_li,
            "best": self.best,
            "regime": self.regime,
        }

    @classmethod
    def from_json(cls, data: dict) -> "BoundReport":
        return cls(data["p"], data["kappa"], data["D"], data["sharp_mu"],
                   data["lichnerowicz"], data["wang_li"], data["best"], data["regime"])


def bound_report(p, kappa: float, diameter: Optional[float] = None,
                 tol: float = 1e-8) -> BoundReport:
    """Collect every applicable bound.

    In the conjectured regime (``p > 2``, ``kappa > 0``) the model value is
    reported as ``sharp_mu`` but never enters ``best``.
    """
    pe = as_exponent(p)
    kappa = float(kappa)
    tag = regime(pe, kappa, diameter)
    sharp: Value = "n.a."
    if diameter is not None:
        sharp = sharp_bound(EigenQuery(pe, kappa, diameter), tol=tol)
    lich: Value = lichnerowicz_bound(pe, kappa) if pe.p >= 2 and kappa > 0 else "n.a."
    wl: Value = wang_li_bound(pe, kappa) if pe.p >= 2 and kappa > 0 else "n.a."
    proved = [v for v in (lich, wl) if isinstance(v, float)]
    if tag == SHARP_PROVED and isinstance(sharp, float):
        proved.append(sharp)
    best: Value = max(proved) if proved else "n.a."
    return BoundReport(pe.p, kappa, diameter, sharp, lich, wl, best, tag)
