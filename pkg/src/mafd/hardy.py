"""Elements of the matrix Hardy space H2^{p x q} on the unit disk.

A function is stored by its first ``N`` Taylor coefficients, ``N`` a power
of two. The form ``[F, G] = sum_n G_n^H F_n`` (a q x q matrix) is then an
exact finite sum, and boundary samples are derived from the coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PointOutsideSearchDisk, ShapeMismatch
from .matcore import as_cmatrix

DEFAULT_N = 1024
R_MAX = 0.98


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True, eq=False)
class AnalyticMatrixFn:
    """Truncated Taylor series ``F(z) = sum_{n<N} F_n z^n``.

    ``coeffs`` has shape ``(N, p, q)``; ``coeffs[n]`` multiplies ``z**n``.
    Instances are read-only.
    """

    coeffs: np.ndarray
    # let ``ndarray @ F`` fall through to __rmatmul__
    __array_ufunc__ = None

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.ndim == 1:
            c = c[:, None, None]
        if c.ndim != 3:
            raise ShapeMismatch(f"coefficients must have shape (N, p, q), got {c.shape}")
        if not _is_pow2(c.shape[0]):
            raise ShapeMismatch(f"coefficient length {c.shape[0]} is not a power of two")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def N(self) -> int:
        return self.coeffs.shape[0]

    @property
    def p(self) -> int:
        return self.coeffs.shape[1]

    @property
    def q(self) -> int:
        return self.coeffs.shape[2]

    @property
    def shape(self) -> tuple[int, int]:
        return self.p, self.q

    @classmethod
    def zeros(cls, p: int, q: int, N: int = DEFAULT_N) -> "AnalyticMatrixFn":
        return cls(np.zeros((N, p, q), dtype=complex))

    @classmethod
    def constant(cls, A, N: int = DEFAULT_N) -> "AnalyticMatrixFn":
        A = as_cmatrix(A, "A")
        c = np.zeros((N,) + A.shape, dtype=complex)
        c[0] = A
        return cls(c)

    @classmethod
    def from_polynomial(cls, coeffs, N: int = DEFAULT_N) -> "AnalyticMatrixFn":
        """Pad a short coefficient list ``[F_0, F_1, ...]`` with zeros to length ``N``."""
        c = np.array(coeffs, dtype=complex)
        if c.ndim == 1:
            c = c[:, None, None]
        if c.shape[0] > N:
            raise ShapeMismatch(f"{c.shape[0]} coefficients do not fit in N={N}")
        out = np.zeros((N,) + c.shape[1:], dtype=complex)
        out[: c.shape[0]] = c
        return cls(out)

    def padded(self, N: int) -> "AnalyticMatrixFn":
        if N < self.N:
            raise ShapeMismatch(f"cannot pad length {self.N} down to {N}")
        return AnalyticMatrixFn.from_polynomial(self.coeffs, N)

    def __call__(self, w, r_max: float = R_MAX) -> np.ndarray:
        return evaluate(self, w, r_max)

    def __add__(self, other):
        return axpy(1.0, self, other)

    def __sub__(self, other):
        return axpy(-1.0, other, self)

    def __neg__(self):
        return AnalyticMatrixFn(-self.coeffs)

    def __mul__(self, alpha):
        return AnalyticMatrixFn(complex(alpha) * self.coeffs)

    __rmul__ = __mul__

    def __rmatmul__(self, A):
        return lmul(A, self)

    def __repr__(self):
        return f"AnalyticMatrixFn(p={self.p}, q={self.q}, N={self.N})"


def _check_same(F: AnalyticMatrixFn, G: AnalyticMatrixFn):
    if F.coeffs.shape != G.coeffs.shape:
        raise ShapeMismatch(f"shape mismatch: {F.coeffs.shape} vs {G.coeffs.shape}")


def inner(F: AnalyticMatrixFn, G: AnalyticMatrixFn) -> np.ndarray:
    """The q x q Gram matrix ``[F, G] = sum_n G_n^H F_n``."""
    _check_same(F, G)
    return np.einsum("npi,npj->ij", G.coeffs.conj(), F.coeffs)


def energy(F: AnalyticMatrixFn) -> float:
    """``Tr [F, F]``, the squared H2 norm."""
    c = F.coeffs
    return float(np.vdot(c, c).real)


def norm(F: AnalyticMatrixFn) -> float:
    return float(np.sqrt(energy(F)))


def axpy(alpha, F: AnalyticMatrixFn, G: AnalyticMatrixFn) -> AnalyticMatrixFn:
    """``alpha * F + G`` coefficientwise."""
    _check_same(F, G)
    return AnalyticMatrixFn(complex(alpha) * F.coeffs + G.coeffs)


def lmul(A, F: AnalyticMatrixFn) -> AnalyticMatrixFn:
    """Left-multiply by a constant matrix: ``z -> A F(z)``."""
    A = as_cmatrix(A, "A")
    if A.shape[1] != F.p:
        raise ShapeMismatch(f"cannot multiply {A.shape} by {F.shape}-valued function")
    return AnalyticMatrixFn(np.einsum("ij,njk->nik", A, F.coeffs))


def tail_bound(F: AnalyticMatrixFn, r_max: float = R_MAX) -> float:
    """Bound on what the discarded coefficients ``n >= N`` could add to ``F(w)``
    for ``|w| <= r_max``, assuming the tail energy does not exceed ``||F||^2``."""
    return norm(F) * r_max ** F.N / np.sqrt(1.0 - r_max * r_max)


def _check_disk(w: np.ndarray, r_max: float | None):
    if r_max is not None and np.any(np.abs(w) > r_max * (1.0 + 1e-15)):
        raise PointOutsideSearchDisk(f"|w| = {np.max(np.abs(w)):.6g} exceeds r_max = {r_max}")


def _powers(w: np.ndarray, N: int) -> np.ndarray:
    pw = np.empty(w.shape + (N,), dtype=complex)
    pw[..., 0] = 1.0
    if N > 1:
        pw[..., 1:] = w[..., None]
        np.cumprod(pw[..., 1:], axis=-1, out=pw[..., 1:])
    return pw


def evaluate(F: AnalyticMatrixFn, w, r_max: float | None = R_MAX) -> np.ndarray:
    """``F(w)`` for a disk point, or stacked values for an array of points.

    Pass ``r_max=None`` to skip the search-disk check (any ``|w| < 1``).
    """
    wa = np.asarray(w, dtype=complex)
    _check_disk(wa, r_max)
    return np.tensordot(_powers(wa, F.N), F.coeffs, axes=(-1, 0))


def evaluate_derivative(F: AnalyticMatrixFn, w, r_max: float | None = R_MAX) -> np.ndarray:
    """``F'(w)``; same conventions as :func:`evaluate`."""
    wa = np.asarray(w, dtype=complex)
    _check_disk(wa, r_max)
    n = np.arange(1, F.N)
    dc = F.coeffs[1:] * n[:, None, None]
    return np.tensordot(_powers(wa, F.N - 1), dc, axes=(-1, 0))


def evaluate_circles(F: AnalyticMatrixFn, radii, n_angles: int) -> np.ndarray:
    """Values on the polar grid ``r_i exp(2 pi i j / n_angles)``.

    Returns an array of shape ``(len(radii), n_angles, p, q)``. Coefficients
    are scaled by ``r^n`` and folded modulo ``n_angles``, so each circle
    costs one length-``n_angles`` FFT.
    """
    radii = np.asarray(radii, dtype=float)
    N = F.N
    m = -(-N // n_angles) * n_angles
    c = F.coeffs
    if m != N:
        c = np.concatenate([c, np.zeros((m - N,) + c.shape[1:], dtype=complex)])
    # r^(b n_angles + j) = r^j (r^n_angles)^b: fold with one small matrix product
    nb = m // n_angles
    outer = radii[:, None] ** (n_angles * np.arange(nb))[None, :]
    folded = np.tensordot(outer, c.reshape(nb, n_angles, F.p, F.q), axes=(1, 0))
    folded *= (radii[:, None] ** np.arange(n_angles)[None, :])[:, :, None, None]
    return np.fft.ifft(folded, axis=1) * n_angles


def boundary_values(F: AnalyticMatrixFn, n_points: int) -> np.ndarray:
    """Exact samples ``F(exp(2 pi i j / n_points))``, shape ``(n_points, p, q)``."""
    return evaluate_circles(F, [1.0], n_points)[0]


def szego_coeffs(w: complex, N: int) -> np.ndarray:
    """Coefficients of ``e_w(z) = sqrt(1-|w|^2) / (1 - z conj(w))``."""
    w = complex(w)
    return np.sqrt(1.0 - abs(w) ** 2) * _powers(np.asarray(w.conjugate()), N)


def szego_fn(w: complex, N: int = DEFAULT_N, r_max: float | None = R_MAX) -> AnalyticMatrixFn:
    """Normalized Szego kernel ``e_w`` as a scalar (1 x 1) function.

    Its truncated energy is ``1 - |w|^(2N)``.
    """
    _check_disk(np.asarray(w), r_max)
    return AnalyticMatrixFn(szego_coeffs(w, N))


def atom(M, w: complex, N: int = DEFAULT_N) -> AnalyticMatrixFn:
    """``M sqrt(1-|w|^2) e_w(z)``, i.e. coefficients ``M (1-|w|^2) conj(w)^n``."""
    M = as_cmatrix(M, "M")
    s = np.sqrt(1.0 - abs(w) ** 2) * szego_coeffs(w, N)
    return AnalyticMatrixFn(s[:, None, None] * M[None])
