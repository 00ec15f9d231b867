"""Small dense complex linear algebra.

Hermitian eigendecomposition by cyclic Jacobi rotations (batched over
leading axes), rank-k eigenprojections, and the discrete Stein equation
``P - A^H P A = C^H C``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    NonHermitianInput,
    RankOutOfRange,
    ShapeMismatch,
    SingularGramian,
    SpectralRadiusTooLarge,
)

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10


def as_cmatrix(x, name="matrix", shape=None) -> np.ndarray:
    """Return ``x`` as a finite 2-D complex array, optionally of a fixed shape."""
    a = np.array(x, dtype=complex)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2:
        raise ShapeMismatch(f"{name} must be 2-D, got shape {a.shape}")
    if shape is not None and a.shape != tuple(shape):
        raise ShapeMismatch(f"{name} must have shape {tuple(shape)}, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    return a


def hermitian_part(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + np.swapaxes(a, -1, -2).conj())


def _rotate(A: np.ndarray, V: np.ndarray, p: int, q: int) -> None:
    """Zero ``A[:, p, q]`` in place by a complex Jacobi rotation; accumulate it in ``V``."""
    apq = A[:, p, q]
    mag = np.abs(apq)
    active = mag > 1e-300
    safe = np.where(active, mag, 1.0)
    phase = np.where(active, apq / safe, 1.0)
    tau = (A[:, q, q].real - A[:, p, p].real) / (2.0 * safe)
    sgn = np.where(tau >= 0.0, 1.0, -1.0)
    t = np.where(active, sgn / (np.abs(tau) + np.hypot(1.0, tau)), 0.0)
    c = 1.0 / np.sqrt(1.0 + t * t)
    s = t * c
    dq = phase.conj()
    # J = diag(1, dq) @ [[c, s], [-s, c]] on coordinates (p, q)
    jpp, jpq, jqp, jqq = c, s, -s * dq, c * dq

    colp = A[:, :, p].copy()
    colq = A[:, :, q]
    A[:, :, p] = colp * jpp[:, None] + colq * jqp[:, None]
    A[:, :, q] = colp * jpq[:, None] + colq * jqq[:, None]
    rowp = A[:, p, :].copy()
    rowq = A[:, q, :]
    A[:, p, :] = rowp * jpp.conj()[:, None] + rowq * jqp.conj()[:, None]
    A[:, q, :] = rowp * jpq.conj()[:, None] + rowq * jqq.conj()[:, None]
    A[:, p, q] = 0.0
    A[:, q, p] = 0.0
    A[:, p, p] = A[:, p, p].real
    A[:, q, q] = A[:, q, q].real

    vp = V[:, :, p].copy()
    vq = V[:, :, q]
    V[:, :, p] = vp * jpp[:, None] + vq * jqp[:, None]
    V[:, :, q] = vp * jpq[:, None] + vq * jqq[:, None]


def herm_eig(Q, tol: float = 1e-10, max_sweeps: int = 50):
    """Eigendecomposition of Hermitian matrices by cyclic Jacobi sweeps.

    Parameters
    ----------
    Q : array_like, shape (..., n, n)
        Hermitian matrix or stack of Hermitian matrices. Every matrix in
        the stack is rotated with the same deterministic (p, q) sweep order.
    tol : float
        Allowed ``||Q - Q^H||_F`` relative to ``max(1, ||Q||_F)``.

    Returns
    -------
    eigenvalues : ndarray, shape (..., n)
        Real, sorted in descending order. Ties keep the sweep order.
    eigenvectors : ndarray, shape (..., n, n)
        Unitary; column ``i`` pairs with ``eigenvalues[..., i]``.
    """
    Q = np.asarray(Q, dtype=complex)
    if Q.ndim < 2 or Q.shape[-1] != Q.shape[-2]:
        raise ShapeMismatch(f"expected square matrices, got shape {Q.shape}")
    n = Q.shape[-1]
    batch_shape = Q.shape[:-2]
    A = Q.reshape((-1, n, n))
    fro = np.linalg.norm(A, axis=(1, 2))
    asym = np.linalg.norm(A - np.swapaxes(A, 1, 2).conj(), axis=(1, 2))
    if np.any(asym > tol * np.maximum(1.0, fro)):
        raise NonHermitianInput(f"matrix is not Hermitian (||Q - Q^H||_F = {asym.max():.3e})")
    A = hermitian_part(A)
    nb = A.shape[0]
    V = np.broadcast_to(np.eye(n, dtype=complex), (nb, n, n)).copy()
    if n == 2:
        # one rotation annihilates the only off-diagonal pair exactly
        _rotate(A, V, 0, 1)
    elif n > 2:
        offdiag = ~np.eye(n, dtype=bool)
        for _ in range(max_sweeps):
            off = np.linalg.norm(A[:, offdiag], axis=1)
            if np.all(off <= 1e-15 * fro):
                break
            for p in range(n - 1):
                for q in range(p + 1, n):
                    _rotate(A, V, p, q)

    lam = np.diagonal(A, axis1=1, axis2=2).real
    order = np.argsort(-lam, axis=1, kind="stable")
    lam = np.take_along_axis(lam, order, axis=1)
    V = np.take_along_axis(V, order[:, None, :], axis=2)
    return lam.reshape(batch_shape + (n,)), V.reshape(batch_shape + (n, n))


def top_k_sum(Q, k: int) -> np.ndarray:
    """Sum of the ``k`` largest eigenvalues of each Hermitian matrix in ``Q``."""
    Q = np.asarray(Q, dtype=complex)
    n = Q.shape[-1]
    if k >= n:
        return np.trace(Q, axis1=-2, axis2=-1).real
    if n == 2:
        a, d = Q[..., 0, 0].real, Q[..., 1, 1].real
        return 0.5 * (a + d) + np.hypot(0.5 * (a - d), np.abs(0.5 * (Q[..., 0, 1] + Q[..., 1, 0].conj())))
    lam, _ = herm_eig(Q)
    return lam[..., :k].sum(axis=-1)


@dataclass(frozen=True, eq=False)
class Projection:
    """Orthogonal projection ``P = P^2 = P^H`` on C^dim.

    The matrix is symmetrized on construction, then checked against the
    Hermitian/idempotent tolerance and ``trace(P) = rank``.
    """

    matrix: np.ndarray
    rank: int

    def __post_init__(self):
        m = as_cmatrix(self.matrix, "projection")
        if m.shape[0] != m.shape[1]:
            raise ShapeMismatch(f"projection must be square, got {m.shape}")
        m = hermitian_part(m)
        err = np.linalg.norm(m @ m - m)
        if err > HERMITIAN_TOL:
            raise ValueError(f"matrix is not idempotent (||P^2 - P||_F = {err:.3e})")
        if abs(np.trace(m).real - self.rank) > TRACE_TOL:
            raise ValueError(f"trace {np.trace(m).real:.12g} does not match rank {self.rank}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "rank", int(self.rank))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_vectors(cls, vectors) -> "Projection":
        """Projection onto the column span of ``vectors`` (orthonormalized by QR)."""
        v = as_cmatrix(vectors, "vectors")
        if v.shape[1] == 0:
            return cls.zero(v.shape[0])
        q, _ = np.linalg.qr(v)
        return cls(q @ q.conj().T, v.shape[1])

    @classmethod
    def zero(cls, dim: int) -> "Projection":
        return cls(np.zeros((dim, dim), dtype=complex), 0)

    @classmethod
    def identity(cls, dim: int) -> "Projection":
        return cls(np.eye(dim, dtype=complex), dim)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)

    def __repr__(self):
        return f"Projection(dim={self.dim}, rank={self.rank})"


def top_k_projection(Q, k: int) -> Projection:
    """Projection onto the top-``k`` eigenvectors of Hermitian ``Q``.

    It maximizes ``Tr(R Q)`` over rank-``k`` orthogonal projections ``R``
    (Ky Fan). With repeated eigenvalues the subspace is not unique but the
    attained trace is.
    """
    Q = as_cmatrix(Q, "Q")
    n = Q.shape[0]
    if not 1 <= k <= n:
        raise RankOutOfRange(f"rank {k} outside 1..{n}")
    _, V = herm_eig(Q)
    Vk = V[:, :k]
    return Projection(Vk @ Vk.conj().T, k)


def random_projection(dim: int, rank: int, rng: np.random.Generator) -> Projection:
    """Uniformly random rank-``rank`` orthogonal projection on C^dim."""
    if not 0 <= rank <= dim:
        raise RankOutOfRange(f"rank {rank} outside 0..{dim}")
    z = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    return Projection.from_vectors(z)


def spectral_radius(A) -> float:
    A = as_cmatrix(A, "A")
    if A.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(A))))


def solve_stein(A, C, margin: float = 1e-6) -> np.ndarray:
    """Observability Gramian: the solution of ``P - A^H P A = C^H C``.

    Solved as one dense linear system on vec(P); with ``rho(A) < 1`` it
    equals ``sum_u (A^H)^u C^H C A^u``.

    Raises
    ------
    SpectralRadiusTooLarge
        If ``rho(A) >= 1 - margin``.

    Warns
    -----
    SingularGramian
        If the solution is numerically singular (``(C, A)`` not observable).
    """
    A = as_cmatrix(A, "A")
    n = A.shape[0]
    if A.shape[1] != n:
        raise ShapeMismatch(f"A must be square, got {A.shape}")
    C = as_cmatrix(C, "C")
    if C.shape[1] != n:
        raise ShapeMismatch(f"C must have {n} columns, got {C.shape}")
    rho = spectral_radius(A)
    if rho >= 1.0 - margin:
        raise SpectralRadiusTooLarge(f"spectral radius {rho:.9f} is not below 1")
    rhs = C.conj().T @ C
    # row-major vec: vec(A^H P A) = kron(A^H, A^T) vec(P)
    lhs = np.eye(n * n, dtype=complex) - np.kron(A.conj().T, A.T)
    P = np.linalg.solve(lhs, rhs.reshape(-1)).reshape(n, n)
    P = hermitian_part(P)
    lam = np.linalg.eigvalsh(P)
    if lam[0] <= 1e-12 * max(lam[-1], np.finfo(float).tiny):
        warnings.warn(SingularGramian(f"Gramian is numerically singular (eigenvalues {lam[0]:.3e}..{lam[-1]:.3e})"))
    return P
