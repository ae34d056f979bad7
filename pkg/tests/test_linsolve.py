import numpy as np
import pytest
import scipy.sparse as sp

from tvmultibang.linsolve import SingularSystemError, solve_sparse


def test_identity():
    b = np.array([3.0, -1.0, 2.5])
    x = solve_sparse(sp.eye(3).tocsr(), b)
    assert np.array_equal(x, b)


def test_diagonal():
    A = sp.diags([2.0, 4.0]).tocsr()
    x = solve_sparse(A, np.array([2.0, 8.0]))
    assert np.allclose(x, [1.0, 2.0], atol=1e-14)


def test_random_spd_vs_dense(rng):
    n = 50
    R = rng.normal(size=(n, n))
    A = R @ R.T + n * np.eye(n)
    b = rng.normal(size=n)
    x = solve_sparse(sp.csr_matrix(A), b)
    want = np.linalg.solve(A, b)
    assert np.allclose(x, want, rtol=1e-9, atol=1e-12)
    assert np.linalg.norm(A @ x - b) / np.linalg.norm(b) <= 1e-9


def test_residual_contract_on_tough_system(rng):
    # badly scaled but solvable system still satisfies the contract
    n = 40
    scales = 10.0 ** rng.uniform(-4, 4, n)
    A = sp.diags(scales) @ sp.csr_matrix(rng.normal(size=(n, n)) + 5 * np.eye(n))
    b = rng.normal(size=n)
    x = solve_sparse(A.tocsr(), b)
    # recomputing the residual in a different storage order can move the last
    # ulp, so allow a factor 2 over the enforced bound
    assert np.linalg.norm(A @ x - b) / np.linalg.norm(b) <= 2e-9


def test_singular_raises():
    A = sp.csr_matrix(np.array([[1.0, 2.0], [2.0, 4.0]]))
    with pytest.raises(SingularSystemError):
        solve_sparse(A, np.array([1.0, 1.0]))


def test_structurally_singular_raises():
    A = sp.csr_matrix((3, 3))
    with pytest.raises(SingularSystemError):
        solve_sparse(A, np.ones(3))


def test_shape_mismatch():
    with pytest.raises(ValueError):
        solve_sparse(sp.eye(3).tocsr(), np.ones(4))


def test_determinism(rng):
    n = 60
    A = sp.random(n, n, density=0.2, random_state=7) + sp.eye(n) * 10
    b = rng.normal(size=n)
    x1 = solve_sparse(A.tocsr(), b)
    x2 = solve_sparse(A.tocsr(), b)
    assert np.array_equal(x1, x2)
