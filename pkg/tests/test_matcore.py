import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mafd.errors import NonHermitianInput, RankOutOfRange, ShapeMismatch, SingularGramian, SpectralRadiusTooLarge
from mafd.matcore import (
    Projection,
    herm_eig,
    random_projection,
    solve_stein,
    spectral_radius,
    top_k_projection,
    top_k_sum,
)

from conftest import crandn, random_hermitian


def test_eig_diagonal():
    lam, V = herm_eig(np.diag([3.0, 1.0]))
    np.testing.assert_allclose(lam, [3, 1])
    np.testing.assert_allclose(V, np.eye(2), atol=1e-15)


def test_eig_symmetric_2x2():
    lam, V = herm_eig([[2, 1], [1, 2]])
    np.testing.assert_allclose(lam, [3, 1], atol=1e-14)
    v = V[:, 0] * np.exp(-1j * np.angle(V[0, 0]))
    np.testing.assert_allclose(v, np.ones(2) / np.sqrt(2), atol=1e-14)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 9), seed=st.integers(0, 2**32 - 1))
def test_eig_reconstruction_and_unitarity(n, seed):
    rng = np.random.default_rng(seed)
    Q = random_hermitian(rng, n)
    lam, V = herm_eig(Q)
    scale = np.linalg.norm(Q)
    assert np.all(np.diff(lam) <= 0)
    assert np.linalg.norm(Q @ V - V * lam) <= 1e-10 * scale
    assert np.linalg.norm(V @ np.diag(lam) @ V.conj().T - Q) <= 1e-10 * scale
    assert np.linalg.norm(V.conj().T @ V - np.eye(n)) <= 1e-12


def test_eig_matches_lapack(rng):
    for n in (2, 3, 4, 6, 12):
        Q = random_hermitian(rng, n)
        np.testing.assert_allclose(herm_eig(Q)[0], np.linalg.eigvalsh(Q)[::-1], atol=1e-12)


def test_eig_batched_matches_single(rng):
    Qs = np.array([random_hermitian(rng, 3) for _ in range(7)])
    lam, V = herm_eig(Qs)
    for i, Q in enumerate(Qs):
        l1, V1 = herm_eig(Q)
        np.testing.assert_allclose(lam[i], l1, atol=1e-13)
        np.testing.assert_allclose(np.abs(V[i].conj().T @ V1), np.eye(3), atol=1e-8)


def test_eig_repeated_and_zero():
    lam, V = herm_eig(np.eye(3))
    np.testing.assert_allclose(lam, 1.0)
    np.testing.assert_allclose(V, np.eye(3))
    lam, V = herm_eig(np.zeros((2, 2)))
    np.testing.assert_allclose(lam, 0.0)


def test_eig_rejects_non_hermitian():
    with pytest.raises(NonHermitianInput):
        herm_eig([[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(ShapeMismatch):
        herm_eig(np.ones((2, 3)))


def test_top_k_projection_examples():
    np.testing.assert_allclose(top_k_projection(np.diag([3.0, 1.0]), 1).matrix, np.diag([1, 0]), atol=1e-15)
    # tie: the lowest index wins
    np.testing.assert_allclose(top_k_projection(np.eye(2), 1).matrix, np.diag([1, 0]), atol=1e-15)
    np.testing.assert_allclose(top_k_projection([[2, 1], [1, 2]], 1).matrix, 0.5 * np.ones((2, 2)), atol=1e-14)


def test_top_k_projection_rank_errors():
    with pytest.raises(RankOutOfRange):
        top_k_projection(np.eye(3), 0)
    with pytest.raises(RankOutOfRange):
        top_k_projection(np.eye(3), 4)


def test_ky_fan_random_projections(rng):
    for n in (2, 3, 4):
        Q = random_hermitian(rng, n)
        for k in range(1, n + 1):
            P = top_k_projection(Q, k)
            best = np.trace(P.matrix @ Q).real
            np.testing.assert_allclose(best, np.linalg.eigvalsh(Q)[::-1][:k].sum(), atol=1e-12)
            np.testing.assert_allclose(top_k_sum(Q, k), best, atol=1e-12)
            for _ in range(100):
                R = random_projection(n, k, rng)
                assert np.trace(R.matrix @ Q).real <= best + 1e-10


def test_top_k_sum_batched_2x2(rng):
    Qs = np.array([random_hermitian(rng, 2) for _ in range(50)])
    np.testing.assert_allclose(top_k_sum(Qs, 1), np.linalg.eigvalsh(Qs)[:, -1], atol=1e-12)


def test_projection_invariants(rng):
    P = random_projection(4, 2, rng)
    m = P.matrix
    assert np.linalg.norm(m - m.conj().T) <= 1e-12
    assert np.linalg.norm(m @ m - m) <= 1e-12
    assert abs(np.trace(m).real - 2) <= 1e-10
    assert P.dim == 4 and P.rank == 2
    assert not m.flags.writeable


def test_projection_rejects_bad_input():
    with pytest.raises(ValueError):
        Projection(np.array([[1.0, 0], [0, 0.5]]), 1)
    with pytest.raises(ValueError):
        Projection(np.eye(2), 1)
    assert Projection.zero(3).rank == 0
    assert Projection.identity(2).rank == 2


def test_stein_examples():
    np.testing.assert_allclose(solve_stein([[0.0]], [[1.0]]), [[1.0]])
    np.testing.assert_allclose(solve_stein([[0.5]], [[1.0]]), [[4.0 / 3.0]], rtol=1e-15)
    np.testing.assert_allclose(solve_stein(np.zeros((2, 2)), np.eye(2)), np.eye(2))


def _stein_series(A, C, tol=1e-18):
    # oracle: sum_u (A^H)^u C^H C A^u
    P = np.zeros((A.shape[0],) * 2, dtype=complex)
    term = C.conj().T @ C
    Ak = np.eye(A.shape[0])
    for _ in range(20000):
        add = Ak.conj().T @ term @ Ak
        P += add
        if np.linalg.norm(add) <= tol * np.linalg.norm(P):
            break
        Ak = Ak @ A
    return P


@pytest.mark.parametrize("n", range(1, 9))
def test_stein_random_stable(rng, n):
    A = crandn(rng, n, n)
    A *= 0.85 / spectral_radius(A)
    C = crandn(rng, 2, n)
    P = solve_stein(A, C)
    CC = C.conj().T @ C
    assert np.linalg.norm(P - A.conj().T @ P @ A - CC) <= 1e-10 * np.linalg.norm(CC)
    assert np.linalg.norm(P - P.conj().T) == 0.0
    np.testing.assert_allclose(P, _stein_series(A, C), rtol=1e-9, atol=1e-12 * np.linalg.norm(P))


def test_stein_errors():
    with pytest.raises(SpectralRadiusTooLarge):
        solve_stein([[1.0]], [[1.0]])
    with pytest.warns(SingularGramian):
        solve_stein(np.diag([0.5, 0.2]), [[1.0, 0.0]])
