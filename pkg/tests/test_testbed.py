import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from robustmin.core import RngStream
from robustmin.testbed import REGISTRY, get_spec, make_problem, reference_worst_case

# scalar transcriptions of the published formulas, independent of the
# vectorised implementations under test


def ackley_ref(x):
    n = len(x)
    return (-20 * math.exp(-0.2 * math.sqrt(sum(v * v for v in x) / n))
            - math.exp(sum(math.cos(2 * math.pi * v) for v in x) / n) + 20 + math.e)


def mf1_ref(x):
    total = 0.0
    for v in x:
        env = math.exp(2 * math.log(2) * ((v - 0.1) / 0.8) ** 2)
        s = math.sin(5 * math.pi * v)
        total += env * (math.sqrt(abs(s)) if 0.4 < v <= 0.6 else s**6)
    return -total / len(x)


def mf2_ref(x):
    return sum(2 * math.sin(10 * math.exp(-0.2 * v) * v) * math.exp(-0.25 * v) for v in x) / len(x)


def rastrigin_ref(x):
    return 10 * len(x) + sum(v * v - 10 * math.cos(2 * math.pi * v) for v in x)


def rosenbrock_ref(x):
    return sum(100 * (x[i + 1] - x[i] ** 2) ** 2 + (x[i] - 1) ** 2 for i in range(len(x) - 1))


def sawtooth_ref(x):
    return 1 - sum(v + 0.8 if -0.8 <= v < 0.2 else 0.0 for v in x) / len(x)


def sphere_ref(x):
    return sum(v * v for v in x)


def volcano_ref(x):
    r = math.sqrt(sum(v * v for v in x))
    return math.sqrt(r) - 1 if r > 1 else 0.0


REFS = {
    "ackley": ackley_ref, "multipeakF1": mf1_ref, "multipeakF2": mf2_ref,
    "rastrigin": rastrigin_ref, "rosenbrock": rosenbrock_ref, "sawtooth": sawtooth_ref,
    "sphere": sphere_ref, "volcano": volcano_ref,
}

DEFAULTS = {
    "ackley": ((-32.768, 32.768), 3.0), "multipeakF1": ((0.0, 1.0), 0.0625),
    "multipeakF2": ((0.0, 10.0), 0.5), "rastrigin": ((-5.12, 5.12), 0.5),
    "rosenbrock": ((-2.048, 2.048), 0.25), "sawtooth": ((-1.0, 1.0), 0.2),
    "sphere": ((-5.0, 5.0), 1.0), "volcano": ((-10.0, 10.0), 1.5), "poly2D": ((-1.0, 4.0), 0.5),
}


def test_registry_defaults():
    assert set(REGISTRY) == set(DEFAULTS)
    for name, (bounds, gamma) in DEFAULTS.items():
        spec = get_spec(name)
        assert spec.default_bounds == bounds and spec.default_gamma == gamma


def test_unknown_name():
    with pytest.raises(KeyError):
        get_spec("nope")


@pytest.mark.parametrize("name, dim", [("poly2D", 3), ("poly2D", 1), ("rosenbrock", 1)])
def test_unsupported_dims(name, dim):
    with pytest.raises(ValueError):
        make_problem(name, dim)


@pytest.mark.parametrize("n", [1, 2, 7, 100])
def test_known_minima(n):
    zero = np.zeros(n)
    assert make_problem("ackley", n).objective(zero) == pytest.approx(0.0, abs=1e-12)
    assert make_problem("rastrigin", n).objective(zero) == 0.0
    assert make_problem("sphere", n).objective(zero) == 0.0
    assert make_problem("volcano", n).objective(np.full(n, 0.9 / math.sqrt(n))) == 0.0
    if n >= 2:
        assert make_problem("rosenbrock", n).objective(np.ones(n)) == 0.0


def test_poly2d_nominal():
    assert make_problem("poly2D", 2).objective(np.array([2.8, 4.0])) == pytest.approx(-20.8, abs=0.1)


def test_sawtooth_origin():
    assert make_problem("sawtooth", 1).objective(np.array([0.0])) == pytest.approx(0.2)


@pytest.mark.parametrize("name", sorted(REFS))
@given(seed=st.integers(0, 2**32), n=st.integers(2, 8))
def test_matches_scalar_formula(name, seed, n):
    rng = np.random.default_rng(seed)
    lo, hi = DEFAULTS[name][0]
    # also outside the box: the objective must be defined everywhere
    x = rng.uniform(lo - 0.2 * (hi - lo), hi + 0.2 * (hi - lo), n)
    p = make_problem(name, n)
    assert p.objective(x) == pytest.approx(REFS[name](list(x)), rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("name", ["ackley", "rastrigin", "sphere", "volcano"])
@given(seed=st.integers(0, 2**32))
def test_even_functions(name, seed):
    x = np.random.default_rng(seed).uniform(-3, 3, 5)
    p = make_problem(name, 5)
    assert p.objective(x) == pytest.approx(p.objective(-x), rel=1e-12, abs=1e-15)


# neutral coordinate values leaving the per-coordinate term at its 1-D value
NEUTRAL = {"rastrigin": 0.0, "sphere": 0.0}
MEAN_SEPARABLE = ["multipeakF1", "multipeakF2", "sawtooth"]


@given(seed=st.integers(0, 2**32), n=st.integers(2, 6))
def test_separable_composition(seed, n):
    rng = np.random.default_rng(seed)
    for name, neutral in NEUTRAL.items():
        v = rng.uniform(-4, 4)
        x = np.full(n, neutral)
        x[0] = v
        assert make_problem(name, n).objective(x) == pytest.approx(
            make_problem(name, 1).objective(np.array([v])), abs=1e-12)
    # mean-form functions: the n-D value is the mean of 1-D values
    for name in MEAN_SEPARABLE:
        lo, hi = DEFAULTS[name][0]
        x = rng.uniform(lo, hi, n)
        one = make_problem(name, 1)
        assert make_problem(name, n).objective(x) == pytest.approx(
            np.mean([one.objective(np.array([v])) for v in x]), abs=1e-12)


def test_batch_matches_pointwise():
    rng = np.random.default_rng(0)
    for name in REGISTRY:
        n = 2
        p = make_problem(name, n)
        X = rng.uniform(*DEFAULTS[name][0], (20, n))
        assert np.allclose(p.evaluate_many(X), [p.objective(x) for x in X], rtol=0, atol=0)


class TestReferenceWorstCase:
    def test_at_least_centre(self):
        p = make_problem("rastrigin", 3)
        x = np.array([0.3, -1.0, 2.0])
        assert reference_worst_case(p, x, 10, RngStream(1)) >= p.objective(x)

    def test_volcano_closed_form(self):
        p = make_problem("volcano", 2)
        v = reference_worst_case(p, np.zeros(2), 100_000, RngStream(2))
        assert v == pytest.approx(math.sqrt(1.5) - 1, abs=0.01)
        assert v <= math.sqrt(1.5) - 1

    def test_poly2d_robust_optimum(self):
        p = make_problem("poly2D", 2)
        v = reference_worst_case(p, np.array([-0.18, 0.29]), 1_000_000, RngStream(3))
        assert v == pytest.approx(4.3, abs=0.15)

    def test_monotone_in_samples(self):
        p = make_problem("ackley", 4)
        x = np.full(4, 1.3)
        vals = [reference_worst_case(p, x, s, RngStream(4)) for s in (1, 100, 5000, 9000)]
        assert vals == sorted(vals)

    def test_rejects_zero_samples(self):
        with pytest.raises(ValueError):
            reference_worst_case(make_problem("sphere", 2), np.zeros(2), 0, RngStream(0))
