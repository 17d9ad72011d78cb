"""Benchmark objectives with their default boxes and uncertainty radii.

All objectives are vectorised over the last axis: pass a point of shape
``(n,)`` or a batch of shape ``(m, n)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import Problem, RngStream, ball_offsets

LN2 = math.log(2.0)


def poly2d(x):
    x = np.asarray(x, dtype=float)
    a, b = x[..., 0], x[..., 1]
    # +b**6: the only sign consistent with the nominal optimum -20.8 at (2.8, 4.0)
    return (
        2 * a**6 - 12.2 * a**5 + 21.2 * a**4 + 6.2 * a - 6.4 * a**3 - 4.7 * a**2
        + b**6 - 11 * b**5 + 43.3 * b**4 - 10 * b - 74.8 * b**3 + 56.9 * b**2
        - 4.1 * a * b - 0.1 * b**2 * a**2 + 0.4 * b**2 * a + 0.4 * a**2 * b
    )


def ackley(x):
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    rms = np.sqrt(np.sum(x * x, axis=-1) / n)
    cos_mean = np.sum(np.cos(2 * np.pi * x), axis=-1) / n
    return -20.0 * np.exp(-0.2 * rms) - np.exp(cos_mean) + 20.0 + math.e


def multipeak_f1(x):
    x = np.asarray(x, dtype=float)
    # exponent sign as printed in the source formula (no leading minus)
    envelope = np.exp(2 * LN2 * ((x - 0.1) / 0.8) ** 2)
    s = np.sin(5 * np.pi * x)
    middle = (x > 0.4) & (x <= 0.6)
    g = np.where(middle, envelope * np.sqrt(np.abs(s)), envelope * s**6)
    return -np.mean(g, axis=-1)


def multipeak_f2(x):
    x = np.asarray(x, dtype=float)
    g = 2 * np.sin(10 * np.exp(-0.2 * x) * x) * np.exp(-0.25 * x)
    return np.mean(g, axis=-1)


def rastrigin(x):
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    return 10.0 * n + np.sum(x * x - 10 * np.cos(2 * np.pi * x), axis=-1)


def rosenbrock(x):
    x = np.asarray(x, dtype=float)
    head, tail = x[..., :-1], x[..., 1:]
    return np.sum(100 * (tail - head**2) ** 2 + (head - 1) ** 2, axis=-1)


def sawtooth(x):
    x = np.asarray(x, dtype=float)
    g = np.where((x >= -0.8) & (x < 0.2), x + 0.8, 0.0)
    return 1.0 - np.mean(g, axis=-1)


def sphere(x):
    x = np.asarray(x, dtype=float)
    return np.sum(x * x, axis=-1)


def volcano(x):
    x = np.asarray(x, dtype=float)
    r = np.sqrt(np.sum(x * x, axis=-1))
    return np.where(r > 1, np.sqrt(r) - 1, 0.0)


@dataclass(frozen=True)
class TestFunctionSpec:
    name: str
    func: Callable[[np.ndarray], np.ndarray]
    default_bounds: tuple[float, float]
    default_gamma: float
    min_dim: int = 1
    fixed_dim: int | None = None

    __test__ = False  # not a pytest class

    def supports(self, dim: int) -> bool:
        if self.fixed_dim is not None:
            return dim == self.fixed_dim
        return dim >= self.min_dim


REGISTRY: dict[str, TestFunctionSpec] = {
    s.name: s
    for s in [
        TestFunctionSpec("poly2D", poly2d, (-1.0, 4.0), 0.5, fixed_dim=2),
        TestFunctionSpec("ackley", ackley, (-32.768, 32.768), 3.0),
        TestFunctionSpec("multipeakF1", multipeak_f1, (0.0, 1.0), 0.0625),
        TestFunctionSpec("multipeakF2", multipeak_f2, (0.0, 10.0), 0.5),
        TestFunctionSpec("rastrigin", rastrigin, (-5.12, 5.12), 0.5),
        TestFunctionSpec("rosenbrock", rosenbrock, (-2.048, 2.048), 0.25, min_dim=2),
        TestFunctionSpec("sawtooth", sawtooth, (-1.0, 1.0), 0.2),
        TestFunctionSpec("sphere", sphere, (-5.0, 5.0), 1.0),
        TestFunctionSpec("volcano", volcano, (-10.0, 10.0), 1.5),
    ]
}


def get_spec(name: str) -> TestFunctionSpec:
    try:
        return REGISTRY[name]
    except KeyError:
        raise KeyError(
            f"unknown problem {name!r}; choose from {', '.join(sorted(REGISTRY))}"
        ) from None


def make_problem(spec: TestFunctionSpec | str, dim: int, gamma: float | None = None) -> Problem:
    """Instantiate a registered test function at dimension ``dim`` with its
    default box and uncertainty radius (``gamma`` overrides the latter)."""
    if isinstance(spec, str):
        spec = get_spec(spec)
    if not spec.supports(dim):
        raise ValueError(f"{spec.name} does not support dim={dim}")
    func = spec.func

    def objective(x):
        return float(func(x))

    lo, hi = spec.default_bounds
    return Problem(
        name=spec.name,
        dim=dim,
        objective=objective,
        lower=np.full(dim, lo),
        upper=np.full(dim, hi),
        gamma=spec.default_gamma if gamma is None else gamma,
        batch_objective=func,
    )


def reference_worst_case(problem: Problem, x, samples: int, rng: RngStream) -> float:
    """Dense Monte Carlo estimate of the worst case cost at ``x``.

    Takes the max of f over ``x`` and ``samples`` uniform draws from its
    uncertainty ball. Used for post-processing; no budget is charged.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    x = np.asarray(x, dtype=float)
    worst = float(problem.evaluate_many(x[None, :])[0])
    for delta in ball_offsets(rng, problem.dim, samples, problem.gamma):
        worst = max(worst, float(np.max(problem.evaluate_many(x + delta))))
    return worst
