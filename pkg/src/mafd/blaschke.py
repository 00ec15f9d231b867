"""Scalar and matrix (Potapov) Blaschke factors.

``B_{w,P}(z) = I - P + P b_w(z)`` with ``b_w(z) = (z - w) / (1 - z conj(w))``.
Also: the normalized factor, exact coefficient-domain division by a factor
(deflation), ordered products acting on Hardy functions, and the finite
Blaschke product attached to an observable pair ``(C, A)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from .errors import (
    PoleHit,
    PreconditionViolated,
    RemainderLeak,
    ShapeMismatch,
    SingularGramian,
    UnobservablePair,
    ZeroHit,
    ZeroPointForbidden,
)
from .hardy import AnalyticMatrixFn, energy
from .matcore import Projection, as_cmatrix, solve_stein

POLE_TOL = 1e-14
UNIT_GRID = 64


def unit_grid(n: int = UNIT_GRID) -> np.ndarray:
    """``n`` equally spaced points on the unit circle, starting at 1."""
    return np.exp(2j * np.pi * np.arange(n) / n)


def mobius(w, z):
    """``b_w(z) = (z - w) / (1 - z conj(w))``; vectorized over ``z``."""
    w = complex(w)
    z = np.asarray(z, dtype=complex)
    den = 1.0 - z * w.conjugate()
    if np.any(np.abs(den) < POLE_TOL):
        raise PoleHit(f"z hits the pole 1/conj(w) of b_w, w = {w}")
    out = (z - w) / den
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class BlaschkeFactor:
    """Degree-``rank(P)`` factor ``B(z) = I - P + P b_w(z)``."""

    w: complex
    P: Projection

    def __post_init__(self):
        w = complex(self.w)
        if not abs(w) < 1.0:
            raise ValueError(f"Blaschke zero must lie in the open disk, got {w}")
        if not isinstance(self.P, Projection):
            raise TypeError("P must be a Projection")
        object.__setattr__(self, "w", w)

    @property
    def p(self) -> int:
        return self.P.dim

    @property
    def degree(self) -> int:
        return self.P.rank

    def __call__(self, z):
        return factor_eval(self, z)

    def inverse(self, z):
        return factor_inverse_eval(self, z)

    def normalized(self, z):
        return normalized_factor_eval(self.w, self.P, z)

    def kernel(self, z, zeta):
        return kernel_eval(self, z, zeta)


def _combine(P: np.ndarray, scalar):
    # I - P + P * s, broadcast over the shape of s
    s = np.asarray(scalar, dtype=complex)
    n = P.shape[0]
    eye = np.eye(n, dtype=complex)
    out = (eye - P) + P * s[..., None, None]
    return out


def factor_eval(B: BlaschkeFactor, z) -> np.ndarray:
    return _combine(B.P.matrix, mobius(B.w, z))


def factor_inverse_eval(B: BlaschkeFactor, z) -> np.ndarray:
    """``B^{-1}(z) = I - P + P / b_w(z)``; undefined at ``z = w`` unless ``P = 0``."""
    if B.P.rank == 0:
        shape = np.shape(z)
        return np.broadcast_to(np.eye(B.p, dtype=complex), shape + (B.p, B.p)).copy()
    b = np.asarray(mobius(B.w, z))
    if np.any(np.abs(b) < POLE_TOL):
        raise ZeroHit(f"z hits the zero w = {B.w} of the factor")
    return _combine(B.P.matrix, 1.0 / b)


def normalization_unitary(w, P: Projection) -> np.ndarray:
    """``U = I - P - (|w|/w) P`` with ``calB_{w,P} = B_{w,P} U``."""
    w = complex(w)
    if w == 0:
        raise ZeroPointForbidden("normalized factor is undefined at w = 0")
    m = P.matrix
    return np.eye(P.dim) - m - (abs(w) / w) * m


def normalized_factor_eval(w, P: Projection, z) -> np.ndarray:
    """``I - P + P (|w|/w) (w - z) / (1 - z conj(w))``; takes the value
    ``I - P + |w| P`` at the origin."""
    w = complex(w)
    if w == 0:
        raise ZeroPointForbidden("normalized factor is undefined at w = 0")
    return _combine(P.matrix, -(abs(w) / w) * np.asarray(mobius(w, z)))


def kernel_eval(B: BlaschkeFactor, z, zeta) -> np.ndarray:
    """Closed form of ``(I - B(z) B(zeta)^H) / (1 - z conj(zeta))``:
    ``(1-|w|^2) / ((1 - z conj(w)) (1 - w conj(zeta))) P``."""
    w = B.w
    z = np.asarray(z, dtype=complex)
    zeta = np.asarray(zeta, dtype=complex)
    s = (1.0 - abs(w) ** 2) / ((1.0 - z * w.conjugate()) * (1.0 - w * zeta.conjugate()))
    return B.P.matrix * np.asarray(s)[..., None, None]


def kernel_difference_quotient(B_of, z, zeta) -> np.ndarray:
    """``(I - B(z) B(zeta)^H) / (1 - z conj(zeta))`` from values of ``B_of``."""
    Bz = np.asarray(B_of(z))
    Bw = np.asarray(B_of(zeta))
    n = Bz.shape[-1]
    num = np.eye(n) - Bz @ np.swapaxes(Bw, -1, -2).conj()
    den = 1.0 - np.asarray(z, dtype=complex) * np.conj(zeta)
    return num / np.asarray(den)[..., None, None]


def _mul_mobius(w: complex, c: np.ndarray) -> np.ndarray:
    # first len(c) coefficients of b_w(z) * c(z); causal, hence exact
    return lfilter([-w, 1.0], [1.0, -w.conjugate()], c, axis=0)


def apply_factor(B: BlaschkeFactor, F: AnalyticMatrixFn, ledger: list | None = None) -> AnalyticMatrixFn:
    """``B F`` truncated to ``F.N`` coefficients.

    The energy pushed past the truncation (``||F||^2 - ||B F||_N^2``, since
    ``B`` is unitary on the circle) is appended to ``ledger``.
    """
    if B.p != F.p:
        raise ShapeMismatch(f"factor of size {B.p} cannot act on {F.shape}-valued function")
    P = B.P.matrix
    c = F.coeffs
    pc = np.einsum("ij,njk->nik", P, c)
    out = AnalyticMatrixFn(c - pc + _mul_mobius(B.w, pc))
    if ledger is not None:
        ledger.append(max(energy(F) - energy(out), 0.0))
    return out


def deflate(H: AnalyticMatrixFn, B: BlaschkeFactor, tol: float | None = None,
            ledger: list | None = None) -> AnalyticMatrixFn:
    """Exact division ``G = B^{-1} H`` for ``H`` with ``P H(w) = 0``.

    ``P H`` is divided by ``(z - w)`` with the descending recurrence
    ``q_{n-1} = h_n + w q_n`` and the quotient is multiplied by
    ``(1 - z conj(w))``; the length stays ``N``. The division remainder
    equals ``P H(w)``: above ``tol`` (default ``1e-8 ||H||``) it is a
    caller error, below it is dropped and its energy effect is bounded in
    ``ledger``. A warning is issued when it exceeds ``tol / 100``.
    """
    if B.p != H.p:
        raise ShapeMismatch(f"factor of size {B.p} cannot act on {H.shape}-valued function")
    w = B.w
    P = B.P.matrix
    h = H.coeffs
    hnorm = float(np.sqrt(energy(H)))
    if tol is None:
        tol = 1e-8 * hnorm
    hp = np.einsum("ij,njk->nik", P, h)
    N = H.N
    if N > 1:
        qrev = lfilter([1.0], [1.0, -w], hp[:0:-1], axis=0)
        quot = qrev[::-1]
        rem = hp[0] + w * quot[0]
    else:
        quot = np.zeros((0,) + hp.shape[1:], dtype=complex)
        rem = hp[0].copy()
    rnorm = float(np.linalg.norm(rem))
    if rnorm > tol:
        raise PreconditionViolated(f"||P H(w)||_F = {rnorm:.3e} exceeds deflation tolerance {tol:.3e}")
    if rnorm > 1e-2 * tol:
        warnings.warn(RemainderLeak(f"dropped division remainder of norm {rnorm:.3e}"))
    g = np.zeros_like(h)
    g[: N - 1] += quot
    g[1:] -= w.conjugate() * quot
    if ledger is not None:
        ledger.append(2.0 * rnorm * hnorm + rnorm * rnorm)
    return AnalyticMatrixFn(h - hp + g)


@dataclass(frozen=True, eq=False)
class BlaschkeChain:
    """Ordered product ``B_0(z) B_1(z) ... B_{m-1}(z)``; the first factor is leftmost."""

    factors: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        dims = {f.p for f in self.factors}
        if len(dims) > 1:
            raise ShapeMismatch(f"factors of mixed sizes {sorted(dims)}")

    def __len__(self):
        return len(self.factors)

    @property
    def degree(self) -> int:
        return sum(f.degree for f in self.factors)

    def __call__(self, z) -> np.ndarray:
        if not self.factors:
            raise ValueError("empty chain has no fixed matrix size")
        out = None
        for f in self.factors:
            v = factor_eval(f, z)
            out = v if out is None else out @ v
        return out

    def kernel(self, z, zeta) -> np.ndarray:
        return kernel_difference_quotient(self, z, zeta)

    def apply(self, F: AnalyticMatrixFn, ledger: list | None = None) -> AnalyticMatrixFn:
        return chain_apply(self, F, ledger)


def chain_apply(chain: BlaschkeChain, F: AnalyticMatrixFn, ledger: list | None = None) -> AnalyticMatrixFn:
    """``B_0 B_1 ... B_{m-1} F`` truncated to ``F.N`` coefficients.

    One ``ledger`` entry (total discarded energy) is appended per call.
    """
    local: list = []
    out = F
    for f in reversed(chain.factors):
        out = apply_factor(f, out, local)
    if ledger is not None:
        ledger.append(float(sum(local)))
    return out


class StateSpaceBlaschke:
    """Finite Blaschke product of an observable pair ``(C, A)``, ``rho(A) < 1``:

        B(z) = I_p - (1 - z) C (I - zA)^{-1} P^{-1} (I - A)^{-H} C^H

    with ``P`` the observability Gramian. ``B(1) = I``.

    Evaluation uses the similar pair ``(C T^{-1}, T A T^{-1})`` with
    ``P = T^H T`` (Cholesky), whose Gramian is the identity, so ``P^{-1}``
    is never applied. The stacked ``[A; C]`` of that pair is an isometry
    and is re-orthonormalized by its polar factor; the rational function
    is unchanged while its rounding error no longer grows with
    ``cond(P)``.
    """

    def __init__(self, C, A, rel_tol: float = 1e-12):
        self.A = as_cmatrix(A, "A")
        self.C = as_cmatrix(C, "C")
        n = self.A.shape[0]
        if self.A.shape != (n, n) or self.C.shape[1] != n:
            raise ShapeMismatch(f"incompatible C {self.C.shape} and A {self.A.shape}")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", SingularGramian)
            self.gramian = solve_stein(self.A, self.C)
        lam = np.linalg.eigvalsh(self.gramian)
        if lam[0] <= rel_tol * lam[-1]:
            raise UnobservablePair(f"Gramian is singular (eigenvalues {lam[0]:.3e}..{lam[-1]:.3e})")
        self.condition = float(lam[-1] / lam[0])
        self.p = self.C.shape[0]
        self.n = n
        T = np.linalg.cholesky(self.gramian).conj().T
        At = np.linalg.solve(T.T, (T @ self.A).T).T
        Ct = np.linalg.solve(T.T, self.C.T).T
        U, _, Vh = np.linalg.svd(np.vstack([At, Ct]), full_matrices=False)
        W = U @ Vh
        self._A, self._C = W[:n], W[n:]
        eye = np.eye(n)
        # (I - A)^{-H} C^H in balanced coordinates, shared by every evaluation
        self._right = np.linalg.solve((eye - self._A).conj().T, self._C.conj().T)

    def _resolvent_C(self, z) -> np.ndarray:
        # C (I - zA)^{-1} in balanced coordinates, stacked over the shape of z
        z = np.asarray(z, dtype=complex)
        M = np.eye(self.n) - z[..., None, None] * self._A
        sol = np.linalg.solve(np.swapaxes(M, -1, -2), np.broadcast_to(self._C.T, z.shape + self._C.T.shape))
        return np.swapaxes(sol, -1, -2)

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        rc = self._resolvent_C(z)
        return np.eye(self.p) - (1.0 - z)[..., None, None] * (rc @ self._right)

    def kernel(self, z, zeta) -> np.ndarray:
        """Left side of the kernel identity: ``C (I - zA)^{-1} P^{-1} (I - zeta A)^{-H} C^H``."""
        left = self._resolvent_C(z)
        right = np.swapaxes(self._resolvent_C(zeta), -1, -2).conj()
        return left @ right

    def kernel_unbalanced(self, z, zeta) -> np.ndarray:
        """The same kernel from the original ``(C, A, P)``; loses accuracy as ``cond(P)`` grows."""
        z = np.asarray(z, dtype=complex)
        zeta = np.asarray(zeta, dtype=complex)
        eye = np.eye(self.n)

        def rc(x):
            M = eye - x[..., None, None] * self.A
            return np.swapaxes(np.linalg.solve(np.swapaxes(M, -1, -2),
                                               np.broadcast_to(self.C.T, x.shape + self.C.T.shape)), -1, -2)

        right = np.swapaxes(rc(zeta), -1, -2).conj()
        return rc(z) @ np.linalg.solve(self.gramian, right)

    def kernel_from_values(self, z, zeta) -> np.ndarray:
        """Right side: ``(I - B(z) B(zeta)^H) / (1 - z conj(zeta))``."""
        return kernel_difference_quotient(self, z, zeta)


def beurling_lax(C, A) -> StateSpaceBlaschke:
    """Blaschke product whose model space is spanned by ``C (I - zA)^{-1} X``."""
    return StateSpaceBlaschke(C, A)
