"""Largest-empty-hypersphere exploration.

The outer loop visits candidates, runs a (curtailable) inner search around
each, lowers the high cost threshold on improvement, and moves to the centre
of the largest hypersphere containing no high cost point. Placement is
delegated to a calculator: random valid sphere, GA, or (2-D only) Voronoi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .core import (
    EvaluationLedger,
    Exhausted,
    HighCostSet,
    Problem,
    RngStream,
    sample_in_box,
)
from .inner_max import inner_maximise

NO_VALID_LEH = "no_valid_leh"
BUDGET_EXHAUSTED = "budget_exhausted"
COMPLETED = "completed"


@dataclass
class LehPlacement:
    center: np.ndarray
    radius: float
    found: bool


@dataclass(frozen=True)
class LehGaParams:
    population: int = 20
    generations: int = 5
    elites: int = 1
    tournament_size: int = 2
    mutation_prob: float = 0.1
    mutation_scale: float = 0.1

    def __post_init__(self):
        if self.population < 1 or self.generations < 1 or self.tournament_size < 1:
            raise ValueError("population, generations and tournament_size must be positive")
        if self.population * self.generations > 100:
            raise ValueError("population * generations is capped at 100")
        if not 0 <= self.elites < self.population:
            raise ValueError("need 0 <= elites < population")
        if not 0 <= self.mutation_prob <= 1:
            raise ValueError("mutation_prob must be a probability")
        if self.mutation_scale <= 0:
            raise ValueError("mutation_scale must be positive")


@dataclass
class TraceEntry:
    candidate: np.ndarray
    radius: float  # empty radius the candidate was placed with (inf for the first)
    estimate: float
    tau: float  # threshold after this candidate's inner search
    curtailed: bool
    evaluations: int  # ledger length after the inner search


@dataclass
class SearchOutcome:
    best_point: np.ndarray | None
    best_value: float
    candidates_visited: int
    evaluations_used: int
    stop_reason: str
    trace: list[TraceEntry] = field(default_factory=list)


def _site_set(hcps, problem):
    if isinstance(hcps, (kernels.Sites, kernels.SiteBuffer)):
        return hcps
    return kernels.Sites(kernels.as_points(hcps, problem.dim))


class _HcsCache:
    """High cost points of one search kept in a growing site buffer.

    Within a search tau only falls, so each new set contains the last one
    and only the new members need appending. The buffer is rebuilt when the
    ledger changes or the set shrinks. Sites end up in append order rather
    than ledger order, which leaves every nearest distance unchanged.
    """

    def __init__(self):
        self._ledger = None

    def sites(self, hcs: HighCostSet, problem: Problem):
        ledger = hcs.ledger
        size = len(ledger)
        if ledger is not self._ledger or self._rebuild(hcs):
            self._ledger = ledger
            self._included = np.zeros(size, dtype=bool)
            self._count = 0
            self._buffer = kernels.SiteBuffer(problem.dim)
        if len(self._included) < size:
            self._included = np.concatenate(
                [self._included, np.zeros(size - len(self._included), dtype=bool)])
        members = hcs.members
        fresh = members[~self._included[members]]
        self._buffer.extend(ledger._points[fresh])
        self._included[fresh] = True
        self._count += len(fresh)
        return self._buffer

    def _rebuild(self, hcs):
        members = hcs.members
        inside = members[members < len(self._included)]
        return int(np.count_nonzero(self._included[inside])) != self._count


def random_leh(hcps, problem: Problem, rng: RngStream, max_attempts: int = 1000,
               chunk: int = 64) -> LehPlacement:
    """Return the first uniformly sampled box point lying more than Gamma
    from every high cost point, or ``found=False`` after ``max_attempts``."""
    H = _site_set(hcps, problem)
    if len(H) == 0:
        raise ValueError("random_leh needs at least one high cost point")
    r2 = problem.gamma * problem.gamma
    tried = 0
    while tried < max_attempts:
        k = min(chunk, max_attempts - tried)
        P = np.ascontiguousarray(rng.uniform(problem.lower, problem.upper, (k, problem.dim)))
        i, d2 = kernels.first_clear(P, H, r2)
        if i >= 0:
            return LehPlacement(center=P[i], radius=math.sqrt(d2), found=True)
        tried += k
    last = P[-1]
    d2, _ = kernels.min_sq_dist(last, H)
    return LehPlacement(center=last, radius=math.sqrt(d2), found=False)


def ga_leh(hcps, problem: Problem, rng: RngStream,
           params: LehGaParams | None = None) -> LehPlacement:
    """Maximise the distance to the nearest high cost point with a small
    real-coded GA (tournament selection, mid-point crossover, Gaussian
    mutation clamped to the box, elitism)."""
    params = params or LehGaParams()
    H = _site_set(hcps, problem)
    if len(H) == 0:
        raise ValueError("ga_leh needs at least one high cost point")
    n, size = problem.dim, params.population
    pop = np.ascontiguousarray(rng.uniform(problem.lower, problem.upper, (size, n)))
    fit = np.sqrt(kernels.min_sq_dists(pop, H)[0])
    best = int(np.argmax(fit))
    best_point, best_fit = pop[best].copy(), float(fit[best])
    sigma = params.mutation_scale * problem.span
    n_children = size - params.elites

    for _ in range(params.generations - 1):
        order = np.argsort(-fit, kind="stable")
        elites = pop[order[: params.elites]]
        entrants = rng.integers(0, size, (n_children, 2, params.tournament_size))
        winners = np.take_along_axis(
            entrants, np.argmax(fit[entrants], axis=-1)[..., None], axis=-1
        )[..., 0]
        children = 0.5 * (pop[winners[:, 0]] + pop[winners[:, 1]])
        mutate = rng.random((n_children, n)) < params.mutation_prob
        noise = rng.normal((n_children, n)) * sigma
        children = problem.clip(np.where(mutate, children + noise, children))
        child_fit = np.sqrt(kernels.min_sq_dists(np.ascontiguousarray(children), H)[0])
        pop = np.ascontiguousarray(np.vstack([elites, children]))
        fit = np.concatenate([fit[order[: params.elites]], child_fit])
        j = int(np.argmax(child_fit))
        if child_fit[j] > best_fit:
            best_point, best_fit = children[j].copy(), float(child_fit[j])

    return LehPlacement(center=best_point, radius=best_fit, found=best_fit > problem.gamma)


class RandomCalculator:
    name = "rnd"

    def __init__(self, max_attempts: int = 1000):
        self.max_attempts = int(max_attempts)
        self._cache = _HcsCache()

    def __call__(self, hcs: HighCostSet, problem: Problem, rng: RngStream) -> LehPlacement:
        return random_leh(self._cache.sites(hcs, problem), problem, rng, self.max_attempts)


class GaCalculator:
    name = "ga"

    def __init__(self, **params):
        self.params = LehGaParams(**params)
        self._cache = _HcsCache()

    def __call__(self, hcs: HighCostSet, problem: Problem, rng: RngStream) -> LehPlacement:
        return ga_leh(self._cache.sites(hcs, problem), problem, rng, self.params)


def make_calculator(name: str, **params):
    """Fresh calculator by CLI name: ``rnd``, ``ga`` or ``vor``."""
    if name == "rnd":
        return RandomCalculator(**params)
    if name == "ga":
        return GaCalculator(**params)
    if name == "vor":
        from .voronoi2d import VoronoiCalculator

        return VoronoiCalculator(**params)
    raise ValueError(f"unknown LEH calculator {name!r}")


def leh_search(
    problem: Problem,
    ledger: EvaluationLedger,
    rng: RngStream,
    calculator,
    num_initial: int = 1,
    max_search: int = 100,
) -> SearchOutcome:
    """Robust global exploration by stepping between largest empty
    hyperspheres until none of radius > Gamma remains or the budget ends."""
    if num_initial < 1:
        raise ValueError("num_initial must be >= 1")
    init_rng = rng.substream("init")
    inner_rng = rng.substream("inner")
    leh_rng = rng.substream("leh")

    seeds = []
    for _ in range(num_initial):
        x = sample_in_box(init_rng, problem)
        try:
            seeds.append((x, ledger.evaluate(problem, x)))
        except Exhausted:
            break
    if not seeds:
        return SearchOutcome(None, math.inf, 0, ledger.evaluations_used, BUDGET_EXHAUSTED)

    x_c, center_value = seeds[init_rng.choice(len(seeds))]
    tau, x_op = math.inf, None
    radius = math.inf
    trace: list[TraceEntry] = []

    while radius > problem.gamma:
        res = inner_maximise(ledger, problem, inner_rng, x_c, tau, max_search, center_value)
        if res.exhausted:
            # partial estimates are optimistic; only adopt one if nothing else exists
            if x_op is None and res.estimate is not None:
                x_op, tau = x_c, res.estimate
                trace.append(TraceEntry(x_c, radius, res.estimate, tau, False, len(ledger)))
            return SearchOutcome(x_op, tau, len(trace), ledger.evaluations_used,
                                 BUDGET_EXHAUSTED, trace)
        if res.estimate < tau:
            x_op, tau = x_c, res.estimate
        trace.append(TraceEntry(x_c, radius, res.estimate, tau, res.curtailed, len(ledger)))

        placement = calculator(ledger.high_cost_set(tau), problem, leh_rng)
        radius = placement.radius if placement.found else min(placement.radius, problem.gamma)
        x_c, center_value = placement.center, None

    return SearchOutcome(x_op, tau, len(trace), ledger.evaluations_used, NO_VALID_LEH, trace)
