import numpy as np
import pytest

from nepsolve import kernels
from nepsolve.errors import EmptySpectrum, NonFiniteEntries, SingularMatrix


def test_solve_identity_returns_rhs(rng):
    B = rng.standard_normal((3, 2))
    np.testing.assert_array_equal(kernels.solve_multi(np.eye(3), B), B)


def test_solve_diagonal():
    X = kernels.solve_multi(np.diag([2.0, 4.0]), np.array([[1.0], [1.0]]))
    np.testing.assert_allclose(X, [[0.5], [0.25]])


def test_solve_vector_rhs_keeps_shape():
    x = kernels.solve_multi(np.diag([2.0, 4.0]), np.array([1.0, 1.0]))
    assert x.shape == (2,)


@pytest.mark.parametrize("complex_a", [False, True])
@pytest.mark.parametrize("complex_b", [False, True])
def test_solve_random_residual(rng, complex_a, complex_b):
    A = rng.standard_normal((10, 10)) + 10 * np.eye(10)
    B = rng.standard_normal((10, 4))
    if complex_a:
        A = A + 1j * rng.standard_normal((10, 10))
    if complex_b:
        B = B + 1j * rng.standard_normal((10, 4))
    X = kernels.solve_multi(A, B)
    assert np.linalg.norm(A @ X - B) / np.linalg.norm(B) <= 1e-12
    assert np.iscomplexobj(X) == (complex_a or complex_b)


def test_solve_condition_1e6(rng):
    U, _ = np.linalg.qr(rng.standard_normal((12, 12)))
    V, _ = np.linalg.qr(rng.standard_normal((12, 12)))
    A = (U * np.logspace(0, -6, 12)) @ V.T
    B = rng.standard_normal((12, 3))
    X = kernels.solve_multi(A, B)
    assert np.linalg.norm(A @ X - B) <= 1e-10 * np.linalg.norm(B)


@pytest.mark.xfail(strict=False, reason="residual of any double-precision solution is ~eps*cond ~ 1e-8 at cond 1e8")
def test_solve_condition_1e8(rng):
    U, _ = np.linalg.qr(rng.standard_normal((12, 12)))
    V, _ = np.linalg.qr(rng.standard_normal((12, 12)))
    A = (U * np.logspace(0, -8, 12)) @ V.T
    B = rng.standard_normal((12, 3))
    X = kernels.solve_multi(A, B)
    assert np.linalg.norm(A @ X - B) <= 1e-10 * np.linalg.norm(B)


def test_singular_matrix_raises():
    with pytest.raises(SingularMatrix):
        kernels.solve_multi(np.array([[1.0, 2.0], [2.0, 4.0]]), np.ones(2))


def test_pivot_info_flags_near_singular():
    A = np.diag([1.0, 1e-15])
    _, info = kernels.solve_multi(A, np.ones((2, 1)), return_info=True)
    assert info.near_singular
    _, info = kernels.solve_multi(np.eye(2), np.ones((2, 1)), return_info=True)
    assert not info.near_singular and info.pivot_ratio == 1.0


def test_nonfinite_rejected():
    with pytest.raises(NonFiniteEntries):
        kernels.as_dense([[1.0, np.nan], [0.0, 1.0]])


def test_truncated_svd_threshold():
    r = kernels.truncated_svd(np.diag([1.0, 1e-3, 1e-16]), 1e-14)
    assert r.rank == 2
    assert r.sigma.size == 3


def test_truncated_svd_identity():
    r = kernels.truncated_svd(np.eye(4), 0.5)
    assert r.rank == 4
    P = np.abs(r.U)
    np.testing.assert_allclose(np.sort(P.sum(axis=0)), np.ones(4))
    np.testing.assert_allclose(P.T @ P, np.eye(4), atol=1e-14)


def test_truncated_svd_outer_product(rng):
    A = rng.standard_normal((20, 2)) @ rng.standard_normal((2, 6))
    r = kernels.truncated_svd(A, 1e-12)
    assert r.rank == 2
    np.testing.assert_allclose(r.U.conj().T @ r.U, np.eye(2), atol=1e-12)


def test_truncated_svd_reconstruction_bound(rng):
    A = rng.standard_normal((15, 8)) @ np.diag(np.logspace(0, -10, 8)) @ rng.standard_normal((8, 8))
    r = kernels.truncated_svd(A, 1e-6)
    k = r.rank
    approx = (r.U * r.s) @ r.Vh
    assert np.linalg.norm(A - approx, 2) <= r.sigma[k] * (1 + 1e-10) + 1e-15
    assert np.all(np.diff(r.sigma) <= 0)


def test_truncated_svd_zero_matrix():
    with pytest.raises(EmptySpectrum):
        kernels.truncated_svd(np.zeros((3, 3)), 1e-14)


@pytest.mark.parametrize("tol", [0.0, 1.0, -1e-3])
def test_truncated_svd_rejects_bad_tolerance(tol):
    with pytest.raises(ValueError):
        kernels.truncated_svd(np.eye(2), tol)


def test_dense_eig_diagonal():
    w, V, cond = kernels.dense_eig(np.diag([3.0, 7.0]))
    np.testing.assert_allclose(np.sort(w.real), [3, 7])
    np.testing.assert_allclose(np.abs(V), np.eye(2), atol=1e-14)
    assert cond == pytest.approx(1.0)


def test_dense_eig_jordan_block_reports_defect():
    w, V, cond = kernels.dense_eig(np.array([[0.0, 1.0], [0.0, 0.0]]))
    np.testing.assert_allclose(w, 0, atol=1e-14)
    assert cond > 1e10


def test_dense_eig_companion_roots():
    roots = np.array([1, -2, 3, 0.5, -0.25, 4, 1.5j, -1.5j])
    c = np.poly(roots)
    C = np.zeros((8, 8), complex)
    C[0] = -c[1:]
    C[1:, :-1] = np.eye(7)
    w, V, _ = kernels.dense_eig(C)
    for r in roots:
        assert np.min(np.abs(w - r)) <= 1e-10 * max(1, abs(r))
    for k in range(8):
        assert np.linalg.norm(C @ V[:, k] - w[k] * V[:, k]) <= 1e-10 * np.linalg.norm(C)
        assert np.linalg.norm(V[:, k]) == pytest.approx(1.0)


def test_dense_eig_normal_matrix_conjugate_symmetry(rng):
    Q, _ = np.linalg.qr(rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6)))
    d = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    A = (Q * d) @ Q.conj().T
    w = np.sort_complex(kernels.dense_eig(A).values)
    wh = np.sort_complex(kernels.dense_eig(A.conj().T).values.conj())
    np.testing.assert_allclose(w, wh, atol=1e-10)


def test_dense_eig_cap():
    with pytest.raises(ValueError):
        kernels.dense_eig(np.eye(3), cap=2)
