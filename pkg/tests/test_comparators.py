import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from robustmin.comparators import (
    DescentParams,
    PsoParams,
    dd_restart_search,
    descent_direction,
    min_norm_point,
    pso_search,
    step_size,
)
from robustmin.core import EvaluationLedger, RngStream
from robustmin.leh import BUDGET_EXHAUSTED
from robustmin.testbed import make_problem

ANGLES = np.linspace(0, 2 * math.pi, 10_000, endpoint=False)
DIRS = np.column_stack([np.cos(ANGLES), np.sin(ANGLES)])


def grid_beta(candidate, hcps):
    u = np.asarray(hcps, dtype=float) - candidate
    u /= np.linalg.norm(u, axis=1)[:, None]
    return float(np.min(np.max(DIRS @ u.T, axis=1)))


class TestDescentDirection:
    def test_single_constraint(self):
        d, beta = descent_direction([0.0, 0.0], [[1.0, 0.0]])
        assert np.allclose(d, [-1.0, 0.0]) and beta == pytest.approx(-1.0)

    def test_two_orthogonal(self):
        d, beta = descent_direction([0.0, 0.0], [[1.0, 0.0], [0.0, 1.0]])
        s = math.sqrt(2) / 2
        assert np.allclose(d, [-s, -s]) and beta == pytest.approx(-s)
        assert beta == pytest.approx(grid_beta(np.zeros(2), [[1, 0], [0, 1]]), abs=1e-3)

    def test_opposing_is_infeasible(self):
        assert descent_direction([0.0, 0.0], [[1.0, 0.0], [-1.0, 0.0]]) is None

    def test_contract_violations(self):
        with pytest.raises(ValueError):
            descent_direction([0.0, 0.0], np.empty((0, 2)))
        with pytest.raises(ValueError):
            descent_direction([0.0, 0.0], [[0.0, 0.0]])

    @given(seed=st.integers(0, 2**32), m=st.integers(1, 12))
    def test_matches_direction_grid(self, seed, m):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=2)
        # hcps inside a random half-plane cone so a direction usually exists
        ang = rng.uniform(0, 2 * math.pi) + rng.uniform(-1.2, 1.2, m)
        H = x + rng.uniform(0.1, 2, m)[:, None] * np.column_stack([np.cos(ang), np.sin(ang)])
        out = descent_direction(x, H, 1e-6)
        ref = grid_beta(x, H)
        if out is None:
            assert ref > -1e-6 - 1e-3
            return
        d, beta = out
        assert beta == pytest.approx(ref, abs=1e-3)
        u = (H - x) / np.linalg.norm(H - x, axis=1)[:, None]
        assert np.linalg.norm(d) <= 1 + 1e-9
        assert np.max(u @ d) == pytest.approx(beta, abs=1e-9)
        assert beta <= -1e-6

    @given(seed=st.integers(0, 2**32), m=st.integers(1, 20), n=st.integers(2, 8))
    def test_min_norm_point_optimality(self, seed, m, n):
        P = np.random.default_rng(seed).normal(size=(m, n)) + 0.3
        w, lam = min_norm_point(P)
        assert lam.min() >= 0 and lam.sum() == pytest.approx(1.0)
        assert np.allclose(lam @ P, w)
        # Wolfe criterion: no vertex lies below the supporting hyperplane at w
        assert np.min(P @ w) >= w @ w - 1e-7 * max(1.0, np.max(np.sum(P * P, axis=1)))


class TestStepSize:
    def test_exits_ball_exactly(self):
        g = 0.5
        rho = step_size(np.zeros(2), np.array([-1.0, 0.0]), [[g / 2, 0.0]], g)
        assert rho == pytest.approx(g / 2)

    def test_floor_when_all_outside(self):
        rho = step_size(np.zeros(2), np.array([1.0, 0.0]), [[3.0, 3.0]], 0.5, min_step=0.01)
        assert rho == 0.01

    def test_cap(self):
        rho = step_size(np.zeros(2), np.array([-1.0, 0.0]), [[0.1, 0.0]], 5.0, step_cap=1.0)
        assert rho == 1.0

    @given(seed=st.integers(0, 2**32), m=st.integers(1, 10), n=st.integers(1, 6))
    def test_postcondition(self, seed, m, n):
        rng = np.random.default_rng(seed)
        gamma = rng.uniform(0.1, 1.0)
        x = rng.normal(size=n)
        H = x + rng.normal(size=(m, n)) * gamma
        out = descent_direction(x, H)
        if out is None:
            return
        d, _ = out
        cap = 10.0
        rho = step_size(x, d, H, gamma, step_cap=cap)
        if rho < cap:
            assert np.all(np.linalg.norm(x + rho * d - H, axis=1) >= gamma - 1e-9)


class TestParams:
    def test_descent_defaults(self):
        p = make_problem("sphere", 2)
        r = DescentParams().resolved(p)
        assert r.min_step == pytest.approx(0.01)
        assert r.step_cap == pytest.approx(math.hypot(10, 10) / 4)

    @pytest.mark.parametrize("kw", [dict(hc_fraction=0), dict(band_growth=1.0),
                                    dict(min_step=5.0, step_cap=1.0), dict(epsilon=0)])
    def test_descent_invalid(self, kw):
        with pytest.raises(ValueError):
            DescentParams(**kw).resolved(make_problem("sphere", 2))

    def test_pso_cap(self):
        with pytest.raises(ValueError):
            PsoParams(swarm=20, iterations=10)


class TestSearches:
    def test_dd_step_clears_previous_hcps(self, monkeypatch):
        from robustmin import comparators

        steps = []
        real = comparators.step_size

        def spy(x, d, hcps, gamma, min_step=0.0, step_cap=math.inf):
            rho = real(x, d, hcps, gamma, min_step, step_cap)
            steps.append((np.array(x), d, np.array(hcps), gamma, rho, step_cap))
            return rho

        monkeypatch.setattr(comparators, "step_size", spy)
        p = make_problem("ackley", 2)
        led = EvaluationLedger(3000, 2)
        out = dd_restart_search(p, led, RngStream(4))
        assert steps
        for x, d, hcps, gamma, rho, cap in steps:
            if rho < cap:
                assert np.all(np.linalg.norm(x + rho * d - hcps, axis=1) >= gamma - 1e-9)
        assert led.evaluations_used == 3000
        assert out.stop_reason == BUDGET_EXHAUSTED
        assert out.best_value == min(t.estimate for t in out.trace)

    def test_pso_full_budget_and_accounting(self):
        p = make_problem("rastrigin", 2)
        led = EvaluationLedger(10_000, 2)
        out = pso_search(p, led, RngStream(1))
        # 100 candidates x (centre + 100 samples) = 10,100 > budget
        assert led.evaluations_used == 10_000
        assert out.candidates_visited == 99
        assert out.stop_reason == BUDGET_EXHAUSTED

    def test_pso_completes_with_spare_budget(self):
        p = make_problem("sphere", 2)
        out = pso_search(p, EvaluationLedger(20_000, 2), RngStream(1),
                         PsoParams(swarm=5, iterations=4))
        assert out.candidates_visited == 20 and out.stop_reason == "completed"

    def test_pso_positions_stay_in_box(self):
        p = make_problem("ackley", 3)
        out = pso_search(p, EvaluationLedger(5000, 3), RngStream(2))
        for t in out.trace:
            assert p.contains(t.candidate)

    @pytest.mark.parametrize("search", [dd_restart_search, pso_search])
    @given(seed=st.integers(0, 2**32), budget=st.integers(1, 500))
    def test_budget_and_incumbent(self, search, seed, budget):
        p = make_problem("rastrigin", 2)
        led = EvaluationLedger(budget, 2)
        out = search(p, led, RngStream(seed))
        assert led.evaluations_used == budget
        assert out.best_point is not None
        assert out.best_value == min(t.estimate for t in out.trace)
