import itertools
import os
import subprocess
import sys

import numpy as np
import pytest
from scipy.optimize import nnls

from swiptsee import kernels
from swiptsee.optimizer import project_polytope

py = kernels.get_backend("python")
try:
    cy = kernels.get_backend("cython")
except ImportError:  # extension not built
    cy = None
BACKENDS = [b for b in (py, cy) if b is not None]
needs_cython = pytest.mark.skipif(cy is None, reason="compiled kernels not built")


def random_polytope(rng, N, K, L):
    pmax = rng.uniform(0.5, 2.0, N)
    A = rng.normal(size=(L, N, K))
    A /= np.sqrt(np.einsum("lij,lij->l", A, A))[:, None, None]
    # keep a known interior point so the set is nonempty
    x0 = rng.uniform(0, 1, (N, K)) * (pmax / K)[:, None] * 0.5
    c = np.einsum("lij,ij->l", A, x0) + rng.uniform(0.01, 0.3, L)
    return np.ascontiguousarray(pmax), np.ascontiguousarray(A), np.ascontiguousarray(c)


def constraint_rows(pmax, A, c, N, K):
    rows = [-np.eye(N * K), np.kron(np.eye(N), np.ones((1, K))), A.reshape(len(c), N * K)]
    return np.vstack(rows), np.concatenate([np.zeros(N * K), pmax, c])


def projection_certificate(v, x, pmax, A, c):
    """Distance of v - x from the cone of active outward normals at x."""
    N, K = v.shape
    C, d = constraint_rows(pmax, A, c, N, K)
    slack = d - C @ x.ravel()
    active = slack <= 1e-9 * max(1.0, np.abs(x).max())
    r = (v - x).ravel()
    if not active.any():
        return float(np.linalg.norm(r)), slack
    _, res = nnls(C[active].T, r)
    return float(res), slack


@pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: b.__name__.rsplit(".", 1)[-1])
def test_projection_is_optimal(backend):
    rng = np.random.default_rng(0)
    for _ in range(40):
        N, K, L = rng.integers(1, 4), rng.integers(1, 4), rng.integers(0, 4)
        pmax, A, c = random_polytope(rng, N, K, L)
        v = rng.normal(scale=2.0, size=(N, K))
        x, _, ok = backend.project(v, pmax, A, c, 20000)
        assert ok
        cert, slack = projection_certificate(v, x, pmax, A, c)
        assert slack.min() >= -1e-10
        assert cert <= 1e-7 * max(1.0, np.abs(v).max())


def test_exact_fallback_is_optimal():
    rng = np.random.default_rng(1)
    for _ in range(40):
        N, K, L = rng.integers(1, 4), rng.integers(1, 4), rng.integers(1, 4)
        pmax, A, c = random_polytope(rng, N, K, L)
        v = rng.normal(scale=2.0, size=(N, K))
        x, ok = project_polytope(v, pmax, A, c, max_iter=1)  # too few cycles: exact path
        assert ok
        cert, slack = projection_certificate(v, x, pmax, A, c)
        assert slack.min() >= -1e-10
        assert cert <= 1e-8 * max(1.0, np.abs(v).max())


def test_projection_nearly_parallel_faces():
    # two almost parallel cuts make alternating projections crawl
    pmax = np.array([10.0, 10.0])
    a1 = np.array([1.0, 1.0])
    a2 = np.array([1.0, 1.0 + 1e-6])
    A = np.array([a1 / np.linalg.norm(a1), a2 / np.linalg.norm(a2)]).reshape(2, 2, 1)
    c = np.array([1.0, 1.0]) / np.array([np.linalg.norm(a1), np.linalg.norm(a2)])
    v = np.array([[5.0], [3.0]])
    x, ok = project_polytope(v, pmax, np.ascontiguousarray(A), c, 2000)
    assert ok
    cert, slack = projection_certificate(v, x, pmax, A, c)
    assert slack.min() >= -1e-10 and cert <= 1e-8


@needs_cython
def test_backends_agree_on_objective():
    rng = np.random.default_rng(2)
    for _ in range(50):
        N, K, M = rng.integers(1, 5), rng.integers(1, 4), rng.integers(1, 4)
        gb, ge = rng.exponential(size=(N, K)), rng.exponential(size=(N, M))
        psb = rng.uniform(0.1, 1, K)
        p = rng.uniform(0, 2, (N, K))
        for secure in (True, False):
            v1, g1 = py.objective_grad(gb, ge, psb, 0.4, p, secure)
            v2, g2 = cy.objective_grad(gb, ge, psb, 0.4, p, secure)
            assert v1 == pytest.approx(v2, rel=1e-13, abs=1e-15)
            np.testing.assert_allclose(g1, g2, rtol=1e-12, atol=1e-15)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(3)
    gb, ge = rng.exponential(size=(3, 2)), rng.exponential(size=(3, 2))
    psb = np.array([0.5, 0.7])
    p = rng.uniform(0.2, 1.0, (3, 2))
    for backend in BACKENDS:
        _, g = backend.objective_grad(gb, ge, psb, 0.5, p)
        h = 1e-6
        for idx in itertools.product(range(3), range(2)):
            e = np.zeros_like(p)
            e[idx] = h
            fd = (backend.objective_grad(gb, ge, psb, 0.5, p + e)[0]
                  - backend.objective_grad(gb, ge, psb, 0.5, p - e)[0]) / (2 * h)
            assert g[idx] == pytest.approx(fd, rel=1e-6, abs=1e-9)


@needs_cython
def test_backends_agree_on_projection():
    rng = np.random.default_rng(4)
    for _ in range(40):
        N, K, L = rng.integers(1, 4), rng.integers(1, 4), rng.integers(0, 4)
        pmax, A, c = random_polytope(rng, N, K, L)
        v = rng.normal(scale=2.0, size=(N, K))
        x1, _, ok1 = py.project(v, pmax, A, c, 20000)
        x2, _, ok2 = cy.project(v, pmax, A, c, 20000)
        assert ok1 and ok2
        np.testing.assert_allclose(x1, x2, atol=1e-9)


def brute_force(gb, ge, psb, pse, pmax, pc, hb, emin, he, cap, R):
    N, K = gb.shape
    best, arg = -np.inf, None
    for t in itertools.product(range(R + 1), repeat=N * K):
        p = np.array(t, dtype=float).reshape(N, K) * (pmax / R)[:, None]
        if np.any(p.sum(axis=1) > pmax * (1 + 1e-12)):
            continue
        rows = p.sum(axis=1)
        if np.any(hb @ rows < emin - 1e-12) or np.any(he @ rows > cap + 1e-12):
            continue
        B = np.einsum("jk,jk->k", gb, p)
        E = (ge.T @ p).max(axis=0)
        val = (np.log2(1 + psb * B) - np.log2(1 + pse * E)).sum() / K / (p.sum() + pc)
        if val > best + 1e-15:
            best, arg = val, p
    return best, arg


@pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: b.__name__.rsplit(".", 1)[-1])
def test_grid_search_matches_brute_force(backend):
    rng = np.random.default_rng(5)
    for shape in [(1, 1), (2, 1), (1, 2), (2, 2), (3, 1)]:
        N, K = shape
        M = 2
        gb, ge = rng.exponential(3.0, size=(N, K)), rng.exponential(0.5, size=(N, M))
        psb = rng.uniform(0.3, 0.9, K)
        pmax = rng.uniform(0.5, 2, N)
        hb = rng.uniform(0.1, 1, (K, N))
        he = rng.uniform(0.1, 1, (M, N))
        emin = 0.2 * hb @ pmax
        cap = 0.8 * he @ pmax
        R = 6
        ref_val, ref_p = brute_force(gb, ge, psb, 0.5, pmax, 0.3, hb, emin, he, cap, R)
        val, p = backend.grid_search(gb, ge, psb, 0.5, pmax, 0.3, hb, emin, he, cap, R + 1)
        assert val == pytest.approx(ref_val, rel=1e-12)
        np.testing.assert_allclose(p, ref_p, atol=1e-12)


def test_grid_search_infeasible_returns_none():
    gb = np.ones((1, 1))
    out = py.grid_search(gb, gb, np.array([0.5]), 0.5, np.array([1.0]), 0.1, np.ones((1, 1)),
                         np.array([5.0]), np.ones((1, 1)), np.array([np.inf]), 10)
    assert out[1] is None


def test_backend_selection_env():
    code = "from swiptsee import kernels; print(kernels.BACKEND)"
    env = dict(os.environ, SWIPTSEE_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
    if cy is not None:
        env["SWIPTSEE_PURE_PYTHON"] = "0"
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        assert out.stdout.strip() == "cython"
