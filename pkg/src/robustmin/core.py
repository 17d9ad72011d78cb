"""Problem definition, evaluation bookkeeping and sampling primitives.

Everything that touches the objective goes through an
:class:`EvaluationLedger`, which owns the evaluation budget. Searches are
written against the ledger and stop when it raises :class:`Exhausted`.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import kernels


class Exhausted(Exception):
    """Raised instead of evaluating once the ledger budget is spent."""


@dataclass(frozen=True, eq=False)
class Problem:
    """A box-constrained robust min-max instance.

    ``objective`` maps a 1-D array of length ``dim`` to a float and must be
    defined outside the box too, since perturbed points can leave it.
    ``batch_objective``, when given, maps an ``(m, dim)`` array to ``m``
    values and is used for bulk post-processing only.
    """

    name: str
    dim: int
    objective: Callable[[np.ndarray], float]
    lower: np.ndarray
    upper: np.ndarray
    gamma: float
    batch_objective: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        lower = np.broadcast_to(np.asarray(self.lower, dtype=float), (self.dim,)).copy()
        upper = np.broadcast_to(np.asarray(self.upper, dtype=float), (self.dim,)).copy()
        lower.flags.writeable = False
        upper.flags.writeable = False
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if self.dim < 1:
            raise ValueError("dim must be positive")
        if not np.all(lower < upper):
            raise ValueError("need lower < upper in every coordinate")
        if not 0 < self.gamma < np.min(upper - lower) / 2:
            raise ValueError(
                f"gamma must lie in (0, {np.min(upper - lower) / 2}), got {self.gamma}"
            )

    @property
    def span(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, x) -> bool:
        x = np.asarray(x)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    def clip(self, x) -> np.ndarray:
        return np.minimum(np.maximum(x, self.lower), self.upper)

    def evaluate_many(self, X: np.ndarray) -> np.ndarray:
        """Objective over the rows of ``X`` without any budget accounting."""
        if self.batch_objective is not None:
            return np.asarray(self.batch_objective(X), dtype=float)
        return np.array([self.objective(x) for x in X], dtype=float)


class EvaluationLedger:
    """Append-only record of every objective evaluation (the history set H
    and its values), with a hard budget."""

    def __init__(self, budget: int, dim: int):
        if budget < 1:
            raise ValueError("budget must be positive")
        self.budget = int(budget)
        self.dim = int(dim)
        cap = min(self.budget, 1024)
        self._points = np.empty((cap, self.dim))
        self._values = np.empty(cap)
        self._used = 0

    def __len__(self):
        return self._used

    @property
    def evaluations_used(self) -> int:
        return self._used

    @property
    def remaining(self) -> int:
        return self.budget - self._used

    @property
    def history(self) -> np.ndarray:
        """Read-only view of the evaluated points, in evaluation order."""
        view = self._points[: self._used]
        view.flags.writeable = False
        return view

    @property
    def values(self) -> np.ndarray:
        view = self._values[: self._used]
        view.flags.writeable = False
        return view

    def evaluate(self, problem: Problem, x) -> float:
        """Evaluate ``problem.objective`` at ``x`` and record it.

        Raises :class:`Exhausted` (without evaluating) when the budget is
        already spent.
        """
        if self._used >= self.budget:
            raise Exhausted
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"expected a point of shape ({self.dim},), got {x.shape}")
        value = float(problem.objective(x))
        if self._used == len(self._values):
            grow = min(self.budget, 2 * len(self._values))
            self._points = np.resize(self._points, (grow, self.dim))
            self._values = np.resize(self._values, grow)
        self._points[self._used] = x
        self._values[self._used] = value
        self._used += 1
        return value

    def high_cost_set(self, tau: float) -> HighCostSet:
        members = np.flatnonzero(self._values[: self._used] >= tau)
        return HighCostSet(members=members, threshold=tau, ledger=self)


@dataclass(frozen=True, eq=False)
class HighCostSet:
    """Indices of ledger entries whose value is at least ``threshold``."""

    members: np.ndarray
    threshold: float
    ledger: EvaluationLedger = field(repr=False)

    def __len__(self):
        return len(self.members)

    @property
    def points(self) -> np.ndarray:
        return np.ascontiguousarray(self.ledger._points[self.members])


class RngStream:
    """Seeded random stream built on PCG64.

    ``substream(label, index)`` derives an independent stream by hashing
    ``(seed, label, index)``, so streams never depend on how many numbers
    some other stream consumed.
    """

    def __init__(self, seed: int, label: str = ""):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.label = label
        self.gen = np.random.Generator(np.random.PCG64(_derive_key(self.seed, label, 0)))

    def substream(self, label: str, index: int = 0) -> RngStream:
        child = RngStream.__new__(RngStream)
        child.seed = self.seed
        child.label = f"{self.label}/{label}#{index}"
        child.gen = np.random.Generator(
            np.random.PCG64(_derive_key(self.seed, child.label, index))
        )
        return child

    def random(self, size=None):
        return self.gen.random(size)

    def uniform(self, low, high, size=None):
        return self.gen.uniform(low, high, size)

    def normal(self, size=None):
        return self.gen.standard_normal(size)

    def integers(self, low, high=None, size=None):
        return self.gen.integers(low, high, size)

    def choice(self, n: int) -> int:
        return int(self.gen.integers(n))


def _derive_key(seed: int, label: str, index: int) -> int:
    h = hashlib.blake2b(digest_size=16)
    h.update(seed.to_bytes(8, "little"))
    h.update(label.encode())
    h.update(int(index).to_bytes(8, "little", signed=True))
    return int.from_bytes(h.digest(), "little")


def stable_seed(*parts) -> int:
    """64-bit seed from a tuple of strings/ints, stable across runs and
    platforms (unlike ``hash``)."""
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        h.update(repr(part).encode())
        h.update(b"\x00")
    return int.from_bytes(h.digest(), "little")


def _shrink_into_ball(center, delta, radius):
    point = center + delta
    # rounding in the scaling or the addition can land a hair outside
    while np.linalg.norm(point - center) > radius:
        delta = delta * (1.0 - 2.0**-50)
        point = center + delta
    return point


def sample_in_ball(rng: RngStream, center, radius: float) -> np.ndarray:
    """Uniform draw from the closed ball of ``radius`` around ``center``."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    center = np.asarray(center, dtype=float)
    n = center.shape[0]
    z = rng.normal(n)
    norm = np.linalg.norm(z)
    while norm == 0.0:
        z = rng.normal(n)
        norm = np.linalg.norm(z)
    u = 1.0 - rng.random()  # (0, 1]
    delta = z * (radius * u ** (1.0 / n) / norm)
    return _shrink_into_ball(center, delta, radius)


BALL_CHUNK = 4096


def ball_offsets(rng: RngStream, dim: int, count: int, radius: float):
    """Yield ``(k, dim)`` blocks of uniform ball offsets, ``count`` in total.

    Draws are made in fixed-size chunks so that a request for fewer samples
    consumes an exact prefix of a request for more.
    """
    left = count
    while left > 0:
        z = rng.normal((BALL_CHUNK, dim))
        u = 1.0 - rng.random(BALL_CHUNK)
        take = min(left, BALL_CHUNK)
        z, u = z[:take], u[:take]
        norms = np.linalg.norm(z, axis=1)
        norms[norms == 0.0] = np.inf  # measure-zero; maps to the centre
        delta = z * (radius * u ** (1.0 / dim) / norms)[:, None]
        over = np.linalg.norm(delta, axis=1) > radius
        while over.any():
            delta[over] *= 1.0 - 2.0**-50
            over = np.linalg.norm(delta, axis=1) > radius
        left -= take
        yield delta


def sample_in_box(rng: RngStream, problem: Problem) -> np.ndarray:
    """Uniform point in the feasible box."""
    return rng.uniform(problem.lower, problem.upper)


def min_distance_to_set(p, points) -> tuple[float, int]:
    """Euclidean distance from ``p`` to the nearest of ``points`` and its
    index; ties go to the lowest index."""
    pts = kernels.as_points(points, len(p))
    if pts.shape[0] == 0:
        raise ValueError("min_distance_to_set needs a non-empty set")
    d2, idx = kernels.min_sq_dist(p, pts)
    return math.sqrt(d2), int(idx)
