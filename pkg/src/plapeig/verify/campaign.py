"""Batch verification campaigns over random convex perturbations.

A campaign spec is JSON::

    {"p": [1.5, 3], "kappa": -1, "D": 1, "N_list": [2048],
     "seeds": 50, "perturbation": "random"}

``p``, ``kappa`` and ``D`` may be scalars or lists (Cartesian product).
``seeds`` is a count or an explicit list.  ``perturbation`` is ``"random"``,
``null`` (the model weight), or an explicit list of terms for
:class:`BumpSpec`.  Each (segment, N) produces one JSON record.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence

import numpy as np

from ..bounds import SHARP_PROVED, regime
from .checks import check_gradient_comparison, check_lichnerowicz, check_lower_bound
from .rayleigh import ConvergenceError, discrete_first_eigenvalue
from .segment import BumpSpec, make_segment

__all__ = ["CampaignSpec", "CampaignTask", "run_task", "run_campaign", "summarize",
           "write_jsonl", "summary_csv"]

log = logging.getLogger(__name__)


def _as_list(x) -> list:
    return list(x) if isinstance(x, (list, tuple)) else [x]


@dataclass(frozen=True)
class CampaignTask:
    p: float
    kappa: float
    diameter: float
    n: int
    seed: Optional[int]
    perturbation: Optional[BumpSpec]
    gradient: bool = True


@dataclass(frozen=True)
class CampaignSpec:
    p: Sequence[float]
    kappa: Sequence[float]
    diameter: Sequence[float]
    n_list: Sequence[int]
    seeds: Sequence[int]
    perturbation: object = "random"
    gradient: bool = True

    @classmethod
    def from_json(cls, data: dict) -> "CampaignSpec":
        seeds = data.get("seeds", 1)
        seeds = list(range(seeds)) if isinstance(seeds, int) else [int(s) for s in seeds]
        return cls(
            tuple(float(v) for v in _as_list(data["p"])),
            tuple(float(v) for v in _as_list(data.get("kappa", -1.0))),
            tuple(float(v) for v in _as_list(data.get("D", 1.0))),
            tuple(int(v) for v in _as_list(data.get("N_list", 2048))),
            tuple(seeds),
            data.get("perturbation", "random"),
            bool(data.get("gradient", True)),
        )

    def to_json(self) -> dict:
        return {"p": list(self.p), "kappa": list(self.kappa), "D": list(self.diameter),
                "N_list": list(self.n_list), "seeds": list(self.seeds),
                "perturbation": self.perturbation, "gradient": self.gradient}

    def tasks(self) -> List[CampaignTask]:
        out = []
        for p, kappa, d, seed in itertools.product(self.p, self.kappa, self.diameter, self.seeds):
            if self.perturbation == "random":
                # the seed fixes the segment; the same segment is reused across N
                bump = BumpSpec.random(np.random.default_rng(seed), d)
            elif self.perturbation is None:
                bump = None
            else:
                bump = BumpSpec.from_json(self.perturbation)
            for n in self.n_list:
                out.append(CampaignTask(p, kappa, d, n, seed, bump, self.gradient))
        return out


def run_task(task: CampaignTask) -> dict:
    """Solve and check one segment.  Numerical failures become records."""
    rec = {"p": task.p, "kappa": task.kappa, "D": task.diameter, "N": task.n,
           "seed": task.seed,
           "perturbation": task.perturbation.to_json() if task.perturbation else None}
    seg = make_segment(task.kappa, task.diameter, task.perturbation, n=task.n)
    try:
        res = discrete_first_eigenvalue(seg, task.p)
    except ConvergenceError as exc:
        rec.update(status="numerical-failure", error=str(exc))
        return rec
    rec.update(status="ok", lambda_h=res.lambda_h, residual=res.residual,
               mean_constraint=res.mean_constraint)
    if regime(task.p, task.kappa, task.diameter) == SHARP_PROVED:
        lb = check_lower_bound(seg, task.p, res)
        rec.update(mu=lb.mu, margin=lb.margin, relative_margin=lb.relative_margin,
                   eps_h=lb.eps_h, violation=lb.violation)
    if task.kappa > 0 and task.p >= 2:
        lich = check_lichnerowicz(seg, task.p, res)
        rec.update(lichnerowicz=lich.bound, lichnerowicz_holds=lich.holds)
    if task.gradient and task.kappa <= 0:
        gr = check_gradient_comparison(seg, task.p, res)
        rec.update(gradient_max_excess=gr.max_excess, gradient_tolerance=gr.tolerance_h,
                   gradient_max=gr.max_gradient, gradient_violations=gr.violations,
                   model_a=gr.a, model_b=gr.b)
    return rec


def _sort_key(rec: dict):
    seed = -1 if rec["seed"] is None else rec["seed"]
    return (rec["p"], rec["kappa"], rec["D"], seed, rec["N"])


def run_campaign(spec: CampaignSpec, workers: int = 1) -> List[dict]:
    """Run every task; records come back sorted, independent of scheduling."""
    tasks = spec.tasks()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(run_task, tasks))
    else:
        records = [run_task(t) for t in tasks]
    return sorted(records, key=_sort_key)


def summarize(records: Iterable[dict]) -> List[dict]:
    """One row per (p, kappa, D, N)."""
    groups = {}
    for rec in records:
        groups.setdefault((rec["p"], rec["kappa"], rec["D"], rec["N"]), []).append(rec)
    rows = []
    for (p, kappa, d, n), recs in sorted(groups.items()):
        ok = [r for r in recs if r["status"] == "ok"]
        margins = [r["relative_margin"] for r in ok if "relative_margin" in r]
        rows.append({
            "p": p, "kappa": kappa, "D": d, "N": n, "runs": len(recs),
            "failures": len(recs) - len(ok),
            "violations": sum(bool(r.get("violation")) for r in ok),
            "gradient_violations": sum(r.get("gradient_violations", 0) for r in ok),
            "min_relative_margin": min(margins) if margins else "",
            "max_residual": max(r["residual"] for r in ok) if ok else "",
        })
    return rows


def write_jsonl(records: Iterable[dict], stream) -> None:
    for rec in records:
        stream.write(json.dumps(rec, sort_keys=True) + "\n")


def summary_csv(rows: List[dict]) -> str:
    buf = io.StringIO()
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    return buf.getvalue()
