import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mqcont import basis, linalg
from mqcont.collocation import build_system
from mqcont.problems import catalog, fd_laplace_eigen, fd_laplace_matrix


def test_det_sign_small():
    fac = linalg.lu_factor(np.eye(3))
    assert fac.det_sign == 1
    b = np.array([1.0, 2.0, 3.0])
    np.testing.assert_array_equal(linalg.lu_solve(fac, b), b)
    assert linalg.determinant([[0.0, 1.0], [1.0, 0.0]])[0] == -1
    assert linalg.lu_factor(np.zeros((2, 2))).singular


def test_random_solve(rng):
    A = rng.standard_normal((20, 20))
    x = rng.standard_normal(20)
    got = linalg.solve(A, A @ x)
    assert np.linalg.norm(got - x) <= 1e-10 * np.linalg.norm(x)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 50), seed=st.integers(0, 2**31 - 1))
def test_backward_error_bound(n, seed):
    r = np.random.default_rng(seed)
    A = r.standard_normal((n, n)) + n * np.eye(n)
    b = r.standard_normal(n)
    x = linalg.solve(A, b)
    cond = linalg.cond_svd(A).ratio
    berr = np.linalg.norm(A @ x - b) / (np.linalg.norm(A, 2) * np.linalg.norm(x) + np.linalg.norm(b))
    assert berr <= 10 * n * linalg.EPS * cond


def test_det_sign_matches_eigenvalue_product(rng):
    for _ in range(50):
        n = int(rng.integers(2, 12))
        A = rng.standard_normal((n, n))
        ev = np.linalg.eigvals(A)
        assert np.abs(ev.real).min() > 1e-8
        # complex pairs contribute |z|^2 > 0, so the sign is that of the real eigenvalues
        expected = int(np.sign(np.prod(ev).real))
        assert linalg.determinant(A)[0] == expected


def test_eigen_diagonal_sorted():
    spec = linalg.eigen_full(np.diag([1.0, 2.0, 3.0]))
    np.testing.assert_allclose(spec.eigenvalues, [3.0, 2.0, 1.0])


@pytest.mark.parametrize("N", [8, 47, 76, 117])
def test_fd_laplacian_closed_form(N):
    ev = np.sort(linalg.eigen_full(fd_laplace_matrix(N)).eigenvalues.real)
    exact = fd_laplace_eigen(N)
    assert np.max(np.abs(ev - exact) / exact) <= 1e-10


def _count_below(S, sigma):
    """Eigenvalues of symmetric S below sigma: negative pivots of LDL^T of S - sigma I (Sylvester inertia)."""
    A = S - sigma * np.eye(len(S))
    n = len(A)
    d = np.zeros(n)
    L = np.eye(n)
    for j in range(n):
        d[j] = A[j, j] - np.sum(L[j, :j] ** 2 * d[:j])
        if d[j] == 0.0:
            d[j] = 1e-300
        for i in range(j + 1, n):
            L[i, j] = (A[i, j] - np.sum(L[i, :j] * L[j, :j] * d[:j])) / d[j]
    return int(np.count_nonzero(d < 0))


def _bisection_eigenvalues(S, tol=1e-11):
    n = len(S)
    bound = np.abs(S).sum(axis=1).max() + 1.0
    out = []
    for k in range(n):
        lo, hi = -bound, bound
        while hi - lo > tol * bound:
            mid = 0.5 * (lo + hi)
            if _count_below(S, mid) > k:
                hi = mid
            else:
                lo = mid
        out.append(0.5 * (lo + hi))
    return np.array(out)


def test_symmetric_eigenvalues_against_inertia_bisection(rng):
    A = rng.standard_normal((15, 15))
    S = A + A.T
    got = np.sort(linalg.eigen_full(S).eigenvalues.real)
    np.testing.assert_allclose(got, _bisection_eigenvalues(S), atol=1e-6)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 30), seed=st.integers(0, 2**31 - 1))
def test_spectrum_invariants(n, seed):
    A = np.random.default_rng(seed).standard_normal((n, n))
    spec = linalg.eigen_full(A, vectors=True)
    ev = spec.eigenvalues
    assert np.all(np.diff(ev.real) <= 1e-12 * max(1.0, np.abs(ev).max()))
    # conjugate pairs come together
    np.testing.assert_allclose(np.sort_complex(ev), np.sort_complex(ev.conj()), atol=1e-10)
    assert spec.residuals.max() <= 1e-8 * np.abs(A).sum(axis=1).max()


def test_condition_ratio():
    assert linalg.cond_svd(np.eye(4)).ratio == pytest.approx(1.0)
    assert linalg.cond_svd(np.diag([10.0, 0.1])).ratio == pytest.approx(100.0)


def test_gamma_condition_matches_explicit_inverse():
    entry = catalog("laplace_eigen_1d")
    nodes = basis.generate_uniform_nodes(1, 9)
    system = build_system(entry.problem, nodes, basis.shape_params(nodes, 6.0))
    G = system.ops[0].Gamma
    ratio = linalg.cond_svd(G).ratio
    explicit = np.linalg.norm(G, 2) * np.linalg.norm(np.linalg.inv(G), 2)
    assert np.isfinite(ratio) and ratio > 1e2
    assert ratio == pytest.approx(explicit, rel=1e-6)


def test_null_vector():
    A = np.array([[1.0, -1.0]])
    v = linalg.null_vector(A)
    assert abs(A @ v).max() < 1e-14 and np.linalg.norm(v) == pytest.approx(1.0)
