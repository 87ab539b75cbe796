"""Discretized one-dimensional Bakry-Emery manifolds.

In dimension one ``Ric = 0`` and the curvature condition
``Ric + f'' >= kappa`` reduces to ``f'' >= kappa``.  A segment is built as
``f = kappa t^2 / 2 + g`` with ``g`` convex, and the condition is then
certified on the grid through second differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

__all__ = [
    "BumpSpec",
    "WeightedSegment",
    "CertificateError",
    "make_segment",
    "make_circle",
    "certify",
]

_KINDS = ("linear", "quad", "hinge2")


class CertificateError(ValueError):
    """``f'' >= kappa`` fails; ``index`` is the first offending interior node."""

    def __init__(self, message, index):
        super().__init__(message)
        self.index = index


@dataclass(frozen=True)
class BumpSpec:
    """Sum of simple terms added to the model potential ``kappa t^2/2``.

    Each term is ``(kind, c, t0, side)``:

    - ``linear``: ``c t``
    - ``quad``:   ``c (t - t0)^2``
    - ``hinge2``: ``c max(side (t - t0), 0)^2``

    Non-negative ``c`` on ``quad``/``hinge2`` keeps the sum convex.
    """

    terms: Tuple[Tuple[str, float, float, float], ...] = ()

    def __post_init__(self):
        clean = []
        for term in self.terms:
            kind, c, t0, side = (tuple(term) + (0.0, 1.0))[:4]
            if kind not in _KINDS:
                raise ValueError(f"unknown perturbation kind {kind!r}")
            clean.append((str(kind), float(c), float(t0), 1.0 if side >= 0 else -1.0))
        object.__setattr__(self, "terms", tuple(clean))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for kind, c, t0, side in self.terms:
            if kind == "linear":
                out = out + c * t
            elif kind == "quad":
                out = out + c * (t - t0) ** 2
            else:
                out = out + c * np.maximum(side * (t - t0), 0.0) ** 2
        return out

    @property
    def is_convex(self) -> bool:
        return all(c >= 0 or kind == "linear" for kind, c, _, _ in self.terms)

    @classmethod
    def random(cls, rng: np.random.Generator, length: float, n_terms: int = 3,
               scale: float = 2.0) -> "BumpSpec":
        """A random convex perturbation on ``[-length/2, length/2]``."""
        terms = [("linear", float(rng.uniform(-scale, scale)), 0.0, 1.0)]
        for _ in range(n_terms):
            kind = "hinge2" if rng.random() < 0.7 else "quad"
            terms.append((kind, float(rng.uniform(0.0, scale)),
                          float(rng.uniform(-0.5, 0.5) * length),
                          float(rng.choice([-1.0, 1.0]))))
        return cls(tuple(terms))

    def to_json(self):
        return [list(t) for t in self.terms]

    @classmethod
    def from_json(cls, data) -> "BumpSpec":
        return cls(tuple(tuple(t) for t in (data or ())))


@dataclass(frozen=True, eq=False)
class WeightedSegment:
    """Uniform grid with potential samples and a certified curvature bound.

    For ``periodic`` segments (circles) the nodes are ``N`` distinct points
    on a circle of circumference ``length`` and the diameter is
    ``length / 2``.
    """

    nodes: np.ndarray
    f_values: np.ndarray
    kappa_certificate: float
    periodic: bool = False
    length: float = field(default=0.0)

    @property
    def n_cells(self) -> int:
        return self.nodes.size if self.periodic else self.nodes.size - 1

    @property
    def h(self) -> float:
        return self.length / self.n_cells

    @property
    def diameter(self) -> float:
        return 0.5 * self.length if self.periodic else self.length

    @property
    def node_weights(self) -> np.ndarray:
        """Trapezoid weights ``h e^{-f}`` (halved at segment ends)."""
        w = self.h * np.exp(-self.f_values)
        if not self.periodic:
            w[0] *= 0.5
            w[-1] *= 0.5
        return w

    @property
    def cell_weights(self) -> np.ndarray:
        """``e^{-f}`` averaged over each cell."""
        e = np.exp(-self.f_values)
        right = np.roll(e, -1) if self.periodic else e[1:]
        left = e if self.periodic else e[:-1]
        return 0.5 * (left + right)

    def differences(self, u: np.ndarray) -> np.ndarray:
        """Forward differences ``(u_{i+1} - u_i)/h`` per cell."""
        if self.periodic:
            return (np.roll(u, -1) - u) / self.h
        return np.diff(u) / self.h

    def coarsen(self, factor: int) -> "WeightedSegment":
        if self.n_cells % factor:
            raise ValueError("grid does not nest")
        return WeightedSegment(self.nodes[::factor].copy(), self.f_values[::factor].copy(),
                               self.kappa_certificate, self.periodic, self.length)

    def restrict(self, lo: int, hi: int) -> "WeightedSegment":
        """Sub-segment on nodes ``lo..hi`` (inclusive), same potential."""
        if self.periodic:
            raise ValueError("cannot restrict a circle")
        nodes = self.nodes[lo:hi + 1].copy()
        return WeightedSegment(nodes, self.f_values[lo:hi + 1].copy(), self.kappa_certificate,
                               False, float(nodes[-1] - nodes[0]))


def certify(nodes, f_values, kappa: float, periodic: bool = False) -> None:
    """Raise :class:`CertificateError` unless every second difference is ``>= kappa``.

    The slack is ``1e-9`` plus the rounding error of the second difference
    itself, which grows like ``eps |f| / h^2``.
    """
    f = np.asarray(f_values, dtype=float)
    h = float(nodes[1] - nodes[0])
    if periodic:
        fm, fp = np.roll(f, 1), np.roll(f, -1)
        centre = f
    else:
        fm, centre, fp = f[:-2], f[1:-1], f[2:]
    second = (fp - 2.0 * centre + fm) / (h * h)
    slack = 1e-9 + 8.0 * np.finfo(float).eps * (np.abs(fm) + 2 * np.abs(centre) + np.abs(fp)) / (h * h)
    bad = np.flatnonzero(second < kappa - slack)
    if bad.size:
        i = int(bad[0]) + (0 if periodic else 1)
        raise CertificateError(
            f"f'' >= {kappa} violated at node {i}: second difference {second[bad[0]]:.6g}", i)


def make_segment(kappa: float, diameter: float, perturbation: Optional[BumpSpec] = None,
                 n: int = 2048) -> WeightedSegment:
    """Segment ``[-D/2, D/2]`` with ``f = kappa t^2/2 + perturbation``."""
    if n < 32:
        raise ValueError("need at least 32 cells")
    if not diameter > 0:
        raise ValueError("diameter must be positive")
    t = np.linspace(-0.5 * diameter, 0.5 * diameter, n + 1)
    f = 0.5 * kappa * t * t
    if perturbation is not None:
        f = f + perturbation(t)
    certify(t, f, kappa)
    return WeightedSegment(t, f, float(kappa), False, float(diameter))


def make_circle(diameter: float, n: int = 2048, f_const: float = 0.0) -> WeightedSegment:
    """Circle of diameter ``D`` (circumference ``2D``) with constant potential."""
    if n < 32:
        raise ValueError("need at least 32 cells")
    length = 2.0 * diameter
    t = np.arange(n) * (length / n)
    return WeightedSegment(t, np.full(n, float(f_const)), 0.0, True, length)
