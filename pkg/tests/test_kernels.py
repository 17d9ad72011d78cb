import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from robustmin import _kernels_py, kernels
from robustmin.core import EvaluationLedger, RngStream
from robustmin.leh import leh_search, make_calculator
from robustmin.testbed import make_problem

try:
    from robustmin import _kernels
except ImportError:  # pragma: no cover - extension not built
    _kernels = None

needs_ext = pytest.mark.skipif(_kernels is None, reason="compiled kernels not built")


@pytest.fixture
def restore_backend():
    before = kernels.BACKEND
    yield
    kernels.use_backend(before)


def brute(P, H):
    d2 = ((P[:, None, :] - H[None]) ** 2).sum(axis=2)
    return d2.min(axis=1), d2.argmin(axis=1)


@given(seed=st.integers(0, 2**32), q=st.integers(1, 12), m=st.integers(1, 40),
       n=st.integers(1, 12))
def test_python_kernels_match_brute_force(seed, q, m, n):
    rng = np.random.default_rng(seed)
    P, H = rng.normal(size=(q, n)), rng.normal(size=(m, n))
    d2, idx = _kernels_py.min_sq_dists(P, _kernels_py.prepare(H))
    ref_d2, ref_idx = brute(P, H)
    assert np.allclose(d2, ref_d2, rtol=1e-12, atol=0)
    assert np.array_equal(idx, ref_idx)


def test_ties_go_to_lowest_index():
    H = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]])
    for impl in filter(None, (_kernels_py, _kernels)):
        d2, idx = impl.min_sq_dists(np.zeros((1, 2)), impl.prepare(H))
        assert idx[0] == 0 and d2[0] == 1.0


@needs_ext
@given(seed=st.integers(0, 2**32), q=st.integers(1, 13), m=st.integers(1, 70),
       n=st.sampled_from([1, 2, 3, 7, 10, 33]), dup=st.booleans())
def test_backends_bit_identical(seed, q, m, n, dup):
    rng = np.random.default_rng(seed)
    P, H = rng.normal(size=(q, n)), rng.normal(size=(m, n))
    if dup:
        H[0] = P[0]
        H[-1] = H[0]
    for count in (-1, 1, (m + 1) // 2, m):
        a = _kernels.min_sq_dists(P, _kernels.prepare(H), count)
        b = _kernels_py.min_sq_dists(P, _kernels_py.prepare(H), count)
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
        r2 = float(np.median(b[0]))
        assert _kernels.first_clear(P, _kernels.prepare(H), r2, count) == \
            _kernels_py.first_clear(P, _kernels_py.prepare(H), r2, count)


@pytest.mark.parametrize("impl", [_kernels_py, pytest.param(_kernels, marks=needs_ext)])
def test_input_validation(impl):
    with pytest.raises(ValueError):
        impl.prepare(np.empty((0, 2)))
    with pytest.raises(ValueError):
        impl.min_sq_dists(np.zeros((1, 2)), impl.prepare(np.ones((3, 2))), 0)


def test_first_clear_none():
    H = np.zeros((1, 2))
    assert kernels.first_clear(np.zeros((3, 2)), H, 1.0) == (-1, -1.0)


@pytest.mark.parametrize("backend", ["python", pytest.param("cython", marks=needs_ext)])
def test_site_buffer_growth(backend, restore_backend):
    kernels.use_backend(backend)
    rng = np.random.default_rng(1)
    buf = kernels.SiteBuffer(3, capacity=8)
    rows = []
    P = rng.normal(size=(6, 3))
    for k in (1, 7, 9, 30, 2):
        chunk = rng.normal(size=(k, 3))
        buf.extend(chunk)
        rows.append(chunk)
        H = np.vstack(rows)
        assert np.array_equal(buf.points, H)
        d2, idx = kernels.min_sq_dists(P, buf)
        ref = _kernels_py.min_sq_dists(P, H)
        assert np.array_equal(d2, ref[0]) and np.array_equal(idx, ref[1])


def test_empty_site_buffer():
    with pytest.raises(ValueError):
        kernels.min_sq_dist(np.zeros(2), kernels.SiteBuffer(2))


@needs_ext
@pytest.mark.parametrize("name, dim, calc", [("ackley", 5, "ga"), ("rastrigin", 3, "rnd"),
                                              ("poly2D", 2, "vor")])
def test_searches_identical_across_backends(name, dim, calc, restore_backend):
    p = make_problem(name, dim)
    outs = []
    for backend in ("python", "cython"):
        kernels.use_backend(backend)
        led = EvaluationLedger(3000, dim)
        outs.append((leh_search(p, led, RngStream(6), make_calculator(calc)), led.history.copy()))
    (a, ha), (b, hb) = outs
    assert a.best_value == b.best_value and np.array_equal(ha, hb)


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.use_backend("fortran")
