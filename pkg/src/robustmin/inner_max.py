"""Worst-case estimation in the uncertainty ball around a candidate."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import EvaluationLedger, Exhausted, Problem, RngStream, sample_in_ball


@dataclass
class InnerResult:
    """Outcome of one inner search.

    ``estimate`` is the running max of every value seen (None only if the
    budget ran out before the centre value was known). ``samples_used``
    counts ball samples, not the centre evaluation.
    """

    estimate: float | None
    curtailed: bool = False
    samples_used: int = 0
    exhausted: bool = False


def inner_maximise(
    ledger: EvaluationLedger,
    problem: Problem,
    rng: RngStream,
    center,
    tau: float = math.inf,
    max_search: int = 100,
    center_value: float | None = None,
) -> InnerResult:
    """Estimate ``max f`` over the Gamma-ball around ``center`` by random
    sampling, stopping early once the estimate exceeds ``tau``.

    If ``center_value`` is given the centre is not re-evaluated (it is a
    point already in the ledger). Each ball sample costs one evaluation.
    """
    if max_search < 1:
        raise ValueError("max_search must be >= 1")
    if center_value is None:
        try:
            center_value = ledger.evaluate(problem, center)
        except Exhausted:
            return InnerResult(estimate=None, exhausted=True)
    local = center_value
    if local > tau:
        return InnerResult(estimate=local, curtailed=True)
    for i in range(max_search):
        point = sample_in_ball(rng, center, problem.gamma)
        try:
            value = ledger.evaluate(problem, point)
        except Exhausted:
            return InnerResult(estimate=local, samples_used=i, exhausted=True)
        if value > local:
            local = value
        if local > tau:
            return InnerResult(estimate=local, curtailed=True, samples_used=i + 1)
    return InnerResult(estimate=local, samples_used=max_search)
