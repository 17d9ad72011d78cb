"""Baseline robust searches: re-starting descent directions and outer PSO.

Both use full (never curtailed) inner searches and run until the ledger
budget is spent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import EvaluationLedger, Problem, RngStream, sample_in_box
from .inner_max import inner_maximise
from .leh import BUDGET_EXHAUSTED, COMPLETED, SearchOutcome, TraceEntry


@dataclass(frozen=True)
class DescentParams:
    hc_fraction: float = 0.2
    band_growth: float = 2.0
    min_step: float | None = None  # default gamma / 100
    step_cap: float | None = None  # default box diagonal / 4
    epsilon: float = 1e-6

    def resolved(self, problem: Problem) -> DescentParams:
        p = DescentParams(
            hc_fraction=self.hc_fraction,
            band_growth=self.band_growth,
            min_step=problem.gamma / 100 if self.min_step is None else self.min_step,
            step_cap=float(np.linalg.norm(problem.span)) / 4
            if self.step_cap is None else self.step_cap,
            epsilon=self.epsilon,
        )
        if not 0 < p.hc_fraction < 1:
            raise ValueError("hc_fraction must lie in (0, 1)")
        if p.band_growth <= 1:
            raise ValueError("band_growth must exceed 1")
        if not 0 < p.min_step < p.step_cap:
            raise ValueError("need 0 < min_step < step_cap")
        if p.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        return p


@dataclass(frozen=True)
class PsoParams:
    swarm: int = 10
    iterations: int = 10
    c1: float = 1.49
    c2: float = 1.49
    omega: float = 0.72
    vmax: float | None = None  # fraction of each coordinate range; default 0.5

    def __post_init__(self):
        if self.swarm < 1 or self.iterations < 1:
            raise ValueError("swarm and iterations must be positive")
        if self.swarm * self.iterations > 100:
            raise ValueError("swarm * iterations is capped at 100")
        if self.c1 <= 0 or self.c2 <= 0:
            raise ValueError("c1 and c2 must be positive")


def min_norm_point(points: np.ndarray, tol: float = 1e-9, max_iter: int = 1000):
    """Wolfe's algorithm: the point of minimum Euclidean norm in the convex
    hull of the rows of ``points``.

    Returns ``(w, weights)`` with ``w = weights @ points``.
    """
    P = np.asarray(points, dtype=float)
    m = len(P)
    sq = np.einsum("ij,ij->i", P, P)
    scale = max(float(sq.max()), 1e-300)
    first = int(np.argmin(sq))
    S = [first]
    lam = np.array([1.0])
    x = P[first].copy()

    for _ in range(max_iter):
        g = P @ x
        j = int(np.argmin(g))
        if x @ x - g[j] <= tol * scale or j in S:
            break
        S.append(j)
        lam = np.append(lam, 0.0)
        while True:
            Q = P[S]
            k = len(S)
            kkt = np.zeros((k + 1, k + 1))
            kkt[:k, :k] = Q @ Q.T
            kkt[:k, k] = 1.0
            kkt[k, :k] = 1.0
            rhs = np.zeros(k + 1)
            rhs[k] = 1.0
            alpha = np.linalg.lstsq(kkt, rhs, rcond=None)[0][:k]
            if np.all(alpha > tol):
                lam = alpha
                break
            shrink = lam - alpha
            ok = (alpha <= tol) & (shrink > 0)
            theta = min(1.0, float(np.min(lam[ok] / shrink[ok]))) if ok.any() else 1.0
            lam = lam + theta * (alpha - lam)
            keep = lam > tol
            keep[np.argmax(lam)] = True
            S = [s for s, kp in zip(S, keep) if kp]
            lam = lam[keep]
            lam /= lam.sum()
        x = lam @ P[S]

    weights = np.zeros(m)
    weights[S] = lam
    return x, weights


def descent_direction(candidate, hcps, epsilon: float = 1e-6):
    """Direction pointing away from every high cost point.

    Minimises the largest cosine between the direction and the unit vectors
    towards the hcps. The optimum is ``d = -w/|w|`` with value ``-|w|``,
    where ``w`` is the min-norm point of the hull of those unit vectors.
    Returns ``(d, beta)``, or None when no direction achieves
    ``beta <= -epsilon`` (a local robust minimum).
    """
    x = np.asarray(candidate, dtype=float)
    diffs = np.asarray(hcps, dtype=float).reshape(-1, x.shape[0]) - x
    if len(diffs) == 0:
        raise ValueError("descent_direction needs at least one high cost point")
    norms = np.linalg.norm(diffs, axis=1)
    if np.any(norms == 0):
        raise ValueError("a high cost point coincides with the candidate")
    w, _ = min_norm_point(diffs / norms[:, None])
    w_norm = float(np.linalg.norm(w))
    if -w_norm > -epsilon:
        return None
    return -w / w_norm, -w_norm


def step_size(candidate, d, hcps, gamma: float, min_step: float = 0.0,
              step_cap: float = math.inf) -> float:
    """Smallest step along unit ``d`` that leaves every hcp at least
    ``gamma`` away, clipped to ``[min_step, step_cap]``."""
    x = np.asarray(candidate, dtype=float)
    v = x - np.asarray(hcps, dtype=float).reshape(-1, x.shape[0])
    dv = v @ d
    vv = np.einsum("ij,ij->i", v, v)
    inside = vv < gamma * gamma
    rho = 0.0
    if inside.any():
        disc = dv[inside] ** 2 - vv[inside] + gamma * gamma
        rho = float(np.max(-dv[inside] + np.sqrt(disc)))
    return min(max(rho, min_step), step_cap)


def _finish(best_x, best_val, trace, ledger, reason):
    return SearchOutcome(best_x, best_val, len(trace), ledger.evaluations_used, reason, trace)


def dd_restart_search(
    problem: Problem,
    ledger: EvaluationLedger,
    rng: RngStream,
    params: DescentParams | None = None,
    max_search: int = 100,
) -> SearchOutcome:
    """Descent-directions local search, restarted from a fresh random
    point whenever it stalls, until the budget is spent."""
    params = (params or DescentParams()).resolved(problem)
    start_rng = rng.substream("start")
    inner_rng = rng.substream("inner")
    best_x, best_val = None, math.inf
    trace: list[TraceEntry] = []

    while True:
        x = sample_in_box(start_rng, problem)
        while True:
            start = len(ledger)
            res = inner_maximise(ledger, problem, inner_rng, x, math.inf, max_search)
            if res.exhausted:
                if best_x is None and res.estimate is not None:
                    best_x, best_val = x, res.estimate
                    trace.append(TraceEntry(x, math.nan, res.estimate, best_val, False, len(ledger)))
                return _finish(best_x, best_val, trace, ledger, BUDGET_EXHAUSTED)
            if res.estimate < best_val:
                best_x, best_val = x, res.estimate
            trace.append(TraceEntry(x, math.nan, res.estimate, best_val, False, len(ledger)))

            # centre is entry 0; only ball samples can act as hcps
            pts = ledger.history[start + 1:]
            vals = ledger.values[start + 1:]
            far = np.linalg.norm(pts - x, axis=1) > 0
            pts, vals = pts[far], vals[far]
            if len(pts) == 0:
                break
            hi, lo = float(vals.max()), float(vals.min())
            band = params.hc_fraction
            direction = None
            for _ in range(2):
                hcps = pts[vals >= hi - band * (hi - lo)]
                direction = descent_direction(x, hcps, params.epsilon)
                if direction is not None:
                    break
                band /= params.band_growth
            if direction is None:
                break
            d, _ = direction
            rho = step_size(x, d, hcps, problem.gamma, params.min_step, params.step_cap)
            nxt = problem.clip(x + rho * d)
            if np.linalg.norm(nxt - x) < params.min_step:
                break
            x = nxt


def pso_search(
    problem: Problem,
    ledger: EvaluationLedger,
    rng: RngStream,
    params: PsoParams | None = None,
    max_search: int = 100,
) -> SearchOutcome:
    """Global-best particle swarm over candidates, each particle's fitness
    being its full inner-search worst case estimate."""
    params = params or PsoParams()
    swarm_rng = rng.substream("swarm")
    inner_rng = rng.substream("inner")
    n = problem.dim
    vmax = (0.5 if params.vmax is None else params.vmax) * problem.span

    pos = swarm_rng.uniform(problem.lower, problem.upper, (params.swarm, n))
    vel = swarm_rng.uniform(-vmax, vmax, (params.swarm, n))
    pbest = pos.copy()
    pbest_val = np.full(params.swarm, math.inf)
    best_x, best_val = None, math.inf
    trace: list[TraceEntry] = []

    for _ in range(params.iterations):
        for k in range(params.swarm):
            res = inner_maximise(ledger, problem, inner_rng, pos[k], math.inf, max_search)
            if res.exhausted:
                if best_x is None and res.estimate is not None:
                    best_x, best_val = pos[k].copy(), res.estimate
                    trace.append(TraceEntry(best_x, math.nan, res.estimate, best_val, False,
                                            len(ledger)))
                return _finish(best_x, best_val, trace, ledger, BUDGET_EXHAUSTED)
            if res.estimate < pbest_val[k]:
                pbest[k], pbest_val[k] = pos[k], res.estimate
            if res.estimate < best_val:
                best_x, best_val = pos[k].copy(), res.estimate
            trace.append(TraceEntry(pos[k].copy(), math.nan, res.estimate, best_val, False,
                                    len(ledger)))
        r1 = swarm_rng.random((params.swarm, n))
        r2 = swarm_rng.random((params.swarm, n))
        vel = params.omega * vel + params.c1 * r1 * (pbest - pos) + params.c2 * r2 * (best_x - pos)
        vel = np.clip(vel, -vmax, vmax)
        pos = problem.clip(pos + vel)

    return _finish(best_x, best_val, trace, ledger, COMPLETED)
