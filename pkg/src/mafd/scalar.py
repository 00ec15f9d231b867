"""Scalar adaptive Fourier decomposition, written independently of the
matrix engine and used to cross-check it.

Works with plain complex coefficient vectors: evaluation by explicit
power sums or a direct DFT on the search grid, deflation by a scalar
synthetic-division loop, and an explicit
Takenaka-Malmquist system ``B_k = e_{a_k} prod_{l<k} b_{a_l}`` built by
convolution. Only the search driver is shared with the matrix code, so
both select points by the same rules.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from numpy.polynomial import polynomial as npoly

from . import _search
from .afd import DecompositionResult, DecompositionTerm, SelectionConfig
from .errors import InvariantViolation, ShapeMismatch
from .hardy import AnalyticMatrixFn
from .matcore import Projection

EQUIVALENCE_TOL = 1e-8


class EquivalenceRecord(NamedTuple):
    """The three values ``<f_k, e_a>``, ``<g_k, B_k>``, ``<f, B_k>`` at one step."""

    reduced: complex
    standard: complex
    direct: complex

    @property
    def spread(self) -> float:
        v = np.array(self)
        return float(np.max(np.abs(v - v[0])))


def _ip(f: np.ndarray, g: np.ndarray) -> complex:
    # <f, g> = sum f_n conj(g_n)
    return complex(np.dot(f, g.conj()))


def szego(a: complex, N: int) -> np.ndarray:
    a = complex(a)
    return np.sqrt(1.0 - abs(a) ** 2) * a.conjugate() ** np.arange(N)


def mobius_series(a: complex, N: int) -> np.ndarray:
    """Taylor coefficients of ``b_a(z) = (z - a) / (1 - z conj(a))``, first ``N``."""
    a = complex(a)
    c = np.empty(N, dtype=complex)
    c[0] = -a
    c[1:] = (1.0 - abs(a) ** 2) * a.conjugate() ** np.arange(N - 1)
    return c


def value(f: np.ndarray, a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    pw = np.repeat(a[..., None], len(f), axis=-1)
    pw[..., 0] = 1.0
    return np.cumprod(pw, axis=-1) @ f


def gain(f: np.ndarray, a) -> np.ndarray:
    """``|<f, e_a>|^2 = (1 - |a|^2) |f(a)|^2``."""
    a = np.asarray(a, dtype=complex)
    return (1.0 - np.abs(a) ** 2) * np.abs(value(f, a)) ** 2


def gain_gradient(f: np.ndarray, a) -> np.ndarray:
    """``d gain / d conj(a)``."""
    a = np.asarray(a, dtype=complex)
    fa = value(f, a)
    dfa = value(npoly.polyder(f), a)
    return -a * np.abs(fa) ** 2 + (1.0 - np.abs(a) ** 2) * fa * dfa.conj()


def reduced_remainder(f: np.ndarray, a: complex) -> np.ndarray:
    """``(f - <f, e_a> e_a) / b_a`` truncated to ``len(f)`` coefficients."""
    N = len(f)
    e = szego(a, N)
    g = f - _ip(f, e) * e
    # synthetic division by (z - a), top coefficient down; g(a) ~ 0 is dropped
    a = complex(a)
    q = [0j] * (N - 1)
    acc = 0j
    for n in range(N - 1, 0, -1):
        acc = complex(g[n]) + a * acc
        q[n - 1] = acc
    out = np.convolve(np.array(q), np.array([1.0, -a.conjugate()]))
    return out[:N]


def select(f: np.ndarray, cfg: SelectionConfig) -> complex:
    n = np.arange(len(f))

    def on_grid(radii, n_angles):
        # direct (non-FFT) DFT of r^n f_n on each circle
        th = _search.coarse_angles(n_angles)
        vals = (f[None, :] * radii[:, None] ** n[None, :]) @ np.exp(1j * np.outer(n, th))
        return (1.0 - radii[:, None] ** 2) * np.abs(vals) ** 2

    out = _search.maximize(
        on_grid, lambda ws: gain(f, ws), lambda ws: gain_gradient(f, ws),
        r_max=cfg.r_max, n_radii=cfg.coarse_grid[0], n_angles=cfg.coarse_grid[1],
        refine_iters=cfg.refine_iters, refine_shrink=cfg.refine_shrink, polish=cfg.polish,
    )
    return out.w


def scalar_afd(F: AnalyticMatrixFn, cfg: SelectionConfig | None = None, *,
               check: bool = True, record: list | None = None) -> DecompositionResult:
    """Scalar AFD of a 1 x 1 function with the projection fixed to 1.

    Along the way the standard remainder ``g_k = f - sum_{l<k} <f, B_l> B_l``
    is kept, and each step compares ``<f_k, e_{a_k}>``, ``<g_k, B_k>`` and
    ``<f, B_k>``. Their records are appended to ``record`` if given.

    Raises
    ------
    InvariantViolation
        If ``check`` and the three values differ by more than ``1e-8 ||f||``.
    """
    if F.shape != (1, 1):
        raise ShapeMismatch(f"scalar AFD needs a 1 x 1 function, got {F.shape}")
    cfg = cfg or SelectionConfig()
    f = F.coeffs[:, 0, 0].copy()
    N = len(f)
    e0 = float(np.vdot(f, f).real)
    fk = f.copy()
    g = f.copy()
    prod = np.zeros(N, dtype=complex)
    prod[0] = 1.0
    terms, residuals, ledger = [], [], []
    ek = e0
    for _ in range(cfg.max_terms):
        if ek <= cfg.stop_rel_energy * e0 or ek <= cfg.min_gain:
            break
        a = select(fk, cfg)
        e_a = szego(a, N)
        c = _ip(fk, e_a)
        gk = abs(c) ** 2
        if gk <= cfg.min_gain:
            break
        Bk = np.convolve(prod, e_a)[:N]
        rec = EquivalenceRecord(c, _ip(g, Bk), _ip(f, Bk))
        if record is not None:
            record.append(rec)
        if check and rec.spread > EQUIVALENCE_TOL * np.sqrt(e0):
            raise InvariantViolation(f"equivalence spread {rec.spread:.3e} at step {len(terms)}")
        g = g - rec.standard * Bk
        prod = np.convolve(prod, mobius_series(a, N))[:N]
        fk = reduced_remainder(fk, a)
        ek = float(np.vdot(fk, fk).real)
        M = np.array([[c / np.sqrt(1.0 - abs(a) ** 2)]])
        terms.append(DecompositionTerm(a, Projection.identity(1), M, gk))
        residuals.append(ek)
        ledger.append(gk * abs(a) ** (2 * N))
    return DecompositionResult(
        terms=tuple(terms), p=1, q=1, N=N,
        initial_energy=e0,
        residual_energy=residuals[-1] if residuals else e0,
        per_step_residuals=tuple(residuals),
        truncation_ledger=tuple(ledger),
        separability_sum=float(sum(1.0 - abs(t.w) for t in terms)),
        config=cfg,
        remainder=AnalyticMatrixFn(fk),
    )
