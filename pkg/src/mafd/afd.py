"""Greedy decomposition of H2^{p x q} functions into matrix Blaschke atoms.

Each step picks a point ``w`` and a rank-``k`` projection ``P`` maximizing
``(1 - |w|^2) Tr(P F(w) F(w)^H)``, splits off the atom
``M sqrt(1-|w|^2) e_w`` with ``M = P F(w)``, and divides what is left by
``B_{w,P}``. Repeating gives

    F = sum_k B_0 ... B_{k-1} M_k sqrt(1-|w_k|^2) e_{w_k} + B_0 ... B_{K-1} F_K

with ``||F||^2 = sum_k (1-|w_k|^2) Tr(M_k^H M_k) + ||F_K||^2``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Iterator, NamedTuple

import numpy as np
from scipy.signal import lfilter

from . import _search
from .blaschke import BlaschkeChain, BlaschkeFactor, apply_factor, deflate, _mul_mobius
from .errors import InvalidParams, RankOutOfRange, ShapeMismatch, ZeroFunction
from .hardy import (
    AnalyticMatrixFn,
    R_MAX,
    atom,
    energy,
    evaluate,
    evaluate_circles,
    evaluate_derivative,
    inner,
    norm,
)
from .matcore import Projection, herm_eig, top_k_projection, top_k_sum


@dataclass(frozen=True)
class SelectionConfig:
    """Search and stopping parameters for the greedy decomposition.

    ``rank_schedule[i]`` is the projection rank at step ``i``; the last
    entry repeats. ``polish`` enables the Newton stage after the grid
    refinement. ``deflation_tol`` is relative to the norm of the remainder
    being split.
    """

    rank_schedule: tuple = (1,)
    r_max: float = R_MAX
    coarse_grid: tuple = (24, 64)
    refine_iters: int = 3
    refine_shrink: float = 0.25
    stop_rel_energy: float = 1e-6
    max_terms: int = 200
    min_gain: float = 1e-12
    polish: bool = True
    deflation_tol: float = 1e-8

    def __post_init__(self):
        object.__setattr__(self, "rank_schedule", tuple(int(k) for k in self.rank_schedule))
        object.__setattr__(self, "coarse_grid", tuple(int(n) for n in self.coarse_grid))
        if not 0.0 < self.r_max < 1.0:
            raise InvalidParams(f"r_max must lie in (0, 1), got {self.r_max}")
        if len(self.coarse_grid) != 2 or min(self.coarse_grid) < 2:
            raise InvalidParams(f"coarse grid sizes must be >= 2, got {self.coarse_grid}")
        if not self.rank_schedule or min(self.rank_schedule) < 1:
            raise InvalidParams(f"ranks must be >= 1, got {self.rank_schedule}")
        if self.refine_iters < 0 or not 0.0 < self.refine_shrink < 1.0:
            raise InvalidParams("refine_iters must be >= 0 and refine_shrink in (0, 1)")
        for name in ("stop_rel_energy", "min_gain", "deflation_tol"):
            if not getattr(self, name) > 0:
                raise InvalidParams(f"{name} must be positive")
        if self.max_terms < 0:
            raise InvalidParams("max_terms must be >= 0")

    def rank_at(self, step: int) -> int:
        return self.rank_schedule[min(step, len(self.rank_schedule) - 1)]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["rank_schedule"] = list(self.rank_schedule)
        d["coarse_grid"] = list(self.coarse_grid)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SelectionConfig":
        return cls(**d)


@dataclass(frozen=True, eq=False)
class DecompositionTerm:
    w: complex
    P: Projection
    M: np.ndarray
    gain: float

    @property
    def factor(self) -> BlaschkeFactor:
        return BlaschkeFactor(self.w, self.P)


@dataclass(frozen=True, eq=False)
class DecompositionResult:
    terms: tuple
    p: int
    q: int
    N: int
    initial_energy: float
    residual_energy: float
    per_step_residuals: tuple
    truncation_ledger: tuple
    separability_sum: float
    config: SelectionConfig = field(default_factory=SelectionConfig)
    remainder: AnalyticMatrixFn | None = None

    @property
    def gains(self) -> np.ndarray:
        return np.array([t.gain for t in self.terms])

    @property
    def chain(self) -> BlaschkeChain:
        return BlaschkeChain(tuple(t.factor for t in self.terms))

    @property
    def energy_defect(self) -> float:
        """``initial - sum(gains) - residual`` (zero up to truncation and rounding)."""
        return self.initial_energy - float(self.gains.sum()) - self.residual_energy


class Selection(NamedTuple):
    w: complex
    P: Projection
    value: float


def _objective_values(values: np.ndarray, ws: np.ndarray, k: int) -> np.ndarray:
    # values: (..., p, q) samples of F; sum of top-k eigenvalues of F F^H
    p, q = values.shape[-2:]
    if q < p:
        gram = np.swapaxes(values, -1, -2).conj() @ values
    else:
        gram = values @ np.swapaxes(values, -1, -2).conj()
    s = top_k_sum(gram, k)
    return (1.0 - np.abs(ws) ** 2) * np.maximum(s, 0.0)


def objective(F: AnalyticMatrixFn, w, k: int, r_max: float | None = R_MAX):
    """``(1 - |w|^2) max_P Tr(P F(w) F(w)^H)`` over rank-``k`` projections, and the maximizer."""
    if not 1 <= k <= F.p:
        raise RankOutOfRange(f"rank {k} outside 1..{F.p}")
    Fw = evaluate(F, w, r_max)
    Q = Fw @ Fw.conj().T
    P = None
    if k <= F.q < F.p:
        # top-k left singular vectors from the smaller Gram matrix, unless F(w) is near rank-deficient there
        lam, V = herm_eig(Fw.conj().T @ Fw)
        if lam[k - 1] > 1e-8 * max(lam[0], np.finfo(float).tiny):
            P = Projection.from_vectors(Fw @ V[:, :k])
    if P is None:
        P = top_k_projection(Q, k)
    value = (1.0 - abs(complex(w)) ** 2) * float(np.trace(P.matrix @ Q).real)
    return max(value, 0.0), P


def _top_left_vectors(Fw: np.ndarray, k: int):
    """Top-``k`` left singular vectors of each ``F(w)`` and the sum of the top-``k`` ``sigma^2``.

    Diagonalizes the smaller of ``F F^H`` and ``F^H F``.
    """
    p, q = Fw.shape[-2:]
    FH = np.swapaxes(Fw, -1, -2).conj()
    if q < p:
        lam, V = herm_eig(FH @ Fw)
        kk = min(k, q)
        lam_k = np.maximum(lam[..., :kk], 0.0)
        sig = np.sqrt(lam_k)
        U = (Fw @ V[..., :kk]) / np.where(sig > 0, sig, 1.0)[..., None, :]
        return U * (sig > 0)[..., None, :], lam_k.sum(axis=-1)
    lam, V = herm_eig(Fw @ FH)
    return V[..., :k], lam[..., :k].sum(axis=-1)


def _objective_gradient(F: AnalyticMatrixFn, ws: np.ndarray, k: int) -> np.ndarray:
    # d/d conj(w) of (1-|w|^2) Tr(P Q), Q = F F^H, P the top-k eigenprojection of Q
    Fw = evaluate(F, ws, None)
    dF = evaluate_derivative(F, ws, None)
    if k >= F.p:
        S = np.einsum("mij,mij->m", Fw, Fw.conj()).real
        cross = np.einsum("mij,mij->m", Fw, dF.conj())
    else:
        U, S = _top_left_vectors(Fw, k)
        # Tr(P F F'^H) = sum_i u_i^H F F'^H u_i
        UH = np.swapaxes(U, -1, -2).conj()
        cross = np.einsum("mij,mij->m", UH @ Fw, (UH @ dF).conj())
    return -ws * S + (1.0 - np.abs(ws) ** 2) * cross


def coarse_grid_values(F: AnalyticMatrixFn, k: int, cfg: SelectionConfig) -> tuple:
    """Objective on the coarse search grid: ``(points, values)`` with the origin first."""
    n_r, n_a = cfg.coarse_grid
    radii = _search.coarse_radii(cfg.r_max, n_r)
    pts = (radii[:, None] * np.exp(1j * _search.coarse_angles(n_a))[None, :]).ravel()
    vals = evaluate_circles(F, radii, n_a).reshape((-1, F.p, F.q))
    v = _objective_values(vals, pts, k)
    v0 = _objective_values(F.coeffs[0][None], np.zeros(1), k)
    return np.concatenate([[0j], pts]), np.concatenate([v0, v])


def max_selection(F: AnalyticMatrixFn, k: int, cfg: SelectionConfig | None = None,
                  threads: int = 1) -> Selection:
    """Best point ``w`` and rank-``k`` projection ``P`` for the next atom.

    Raises
    ------
    ZeroFunction
        If ``energy(F) <= cfg.min_gain``.
    """
    cfg = cfg or SelectionConfig()
    if not 1 <= k <= F.p:
        raise RankOutOfRange(f"rank {k} outside 1..{F.p}")
    if energy(F) <= cfg.min_gain:
        raise ZeroFunction(f"energy {energy(F):.3e} is below min_gain {cfg.min_gain:.3e}")

    def on_grid(radii, n_angles):
        vals = evaluate_circles(F, radii, n_angles)
        pts = radii[:, None] * np.exp(1j * _search.coarse_angles(n_angles))[None, :]
        return _objective_values(vals, pts, k)

    def at(ws):
        return _objective_values(evaluate(F, ws, None), ws, k)

    out = _search.maximize(
        on_grid, at, lambda ws: _objective_gradient(F, ws, k),
        r_max=cfg.r_max, n_radii=cfg.coarse_grid[0], n_angles=cfg.coarse_grid[1],
        refine_iters=cfg.refine_iters, refine_shrink=cfg.refine_shrink,
        polish=cfg.polish, threads=threads,
    )
    value, P = objective(F, out.w, k, None)
    return Selection(out.w, P, value)


def split(F: AnalyticMatrixFn, w, P: Projection):
    """Orthogonal split ``F = atom + H`` with ``atom = M sqrt(1-|w|^2) e_w``, ``M = P F(w)``.

    Returns ``(atom, H, M)``; ``P H(w) = 0`` up to the truncation of ``e_w``.
    """
    if P.dim != F.p:
        raise ShapeMismatch(f"projection of size {P.dim} for {F.shape}-valued function")
    M = P.matrix @ evaluate(F, w, None)
    a = atom(M, w, F.N)
    return a, F - a, M


def step(F: AnalyticMatrixFn, k: int, cfg: SelectionConfig | None = None,
         ledger: list | None = None, threads: int = 1):
    """One greedy step: ``(term, next reduced remainder)``.

    Appends the step's discarded-energy bound (atom tail plus dropped
    division remainder) to ``ledger``.

    Raises
    ------
    ZeroFunction
        When nothing selectable is left (normal termination).
    """
    cfg = cfg or SelectionConfig()
    sel = max_selection(F, k, cfg, threads)
    a, H, M = split(F, sel.w, sel.P)
    w = sel.w
    gain = (1.0 - abs(w) ** 2) * float(np.vdot(M, M).real)
    local = [gain * abs(w) ** (2 * F.N)]
    F_next = deflate(H, BlaschkeFactor(w, sel.P), tol=cfg.deflation_tol * norm(F), ledger=local)
    if ledger is not None:
        ledger.append(float(sum(local)))
    return DecompositionTerm(w, sel.P, M, gain), F_next


class StepRecord(NamedTuple):
    term: DecompositionTerm
    before: AnalyticMatrixFn
    after: AnalyticMatrixFn
    energy_before: float
    energy_after: float
    discarded: float


def iterate(F: AnalyticMatrixFn, cfg: SelectionConfig | None = None, threads: int = 1) -> Iterator[StepRecord]:
    """Yield greedy steps until a stopping rule of ``cfg`` fires."""
    cfg = cfg or SelectionConfig()
    e0 = energy(F)
    current, e = F, e0
    for i in range(cfg.max_terms):
        if e <= cfg.stop_rel_energy * e0:
            return
        led: list = []
        try:
            term, nxt = step(current, cfg.rank_at(i), cfg, led, threads)
        except ZeroFunction:
            return
        if term.gain <= cfg.min_gain:
            return
        e_next = energy(nxt)
        yield StepRecord(term, current, nxt, e, e_next, led[0])
        current, e = nxt, e_next


def decompose(F: AnalyticMatrixFn, cfg: SelectionConfig | None = None, threads: int = 1) -> DecompositionResult:
    """Run the greedy recursion on ``F``; see :class:`SelectionConfig` for stopping rules."""
    cfg = cfg or SelectionConfig()
    e0 = energy(F)
    terms, residuals, ledger = [], [], []
    remainder = F
    for rec in iterate(F, cfg, threads):
        terms.append(rec.term)
        residuals.append(rec.energy_after)
        ledger.append(rec.discarded)
        remainder = rec.after
    return DecompositionResult(
        terms=tuple(terms), p=F.p, q=F.q, N=F.N,
        initial_energy=e0,
        residual_energy=residuals[-1] if residuals else e0,
        per_step_residuals=tuple(residuals),
        truncation_ledger=tuple(ledger),
        separability_sum=float(sum(1.0 - abs(t.w) for t in terms)),
        config=cfg,
        remainder=remainder,
    )


def _atom_of(term: DecompositionTerm, N: int) -> AnalyticMatrixFn:
    return atom(term.M, term.w, N)


def reconstruct(result: DecompositionResult, N: int | None = None) -> AnalyticMatrixFn:
    """``sum_k B_0 ... B_{k-1} atom_k`` truncated to ``N`` coefficients.

    Evaluated innermost first: ``S = atom_k + B_k S``.
    """
    N = N or result.N
    S = AnalyticMatrixFn.zeros(result.p, result.q, N)
    for t in reversed(result.terms):
        if t.M.shape != (result.p, result.q):
            raise ShapeMismatch(f"term matrix {t.M.shape} does not match {(result.p, result.q)}")
        S = _atom_of(t, N) + apply_factor(t.factor, S)
    return S


def _right_mul_factor(Phi: np.ndarray, f: BlaschkeFactor) -> np.ndarray:
    # Phi(z) B(z) for a (N, p, p) series
    PP = Phi @ f.P.matrix
    return Phi - PP + _mul_mobius(f.w, PP)


def chain_products(result: DecompositionResult, N: int | None = None) -> Iterator[np.ndarray]:
    """Coefficients of ``B_0 ... B_{k-1}`` (shape ``(N, p, p)``) for ``k = 0, 1, ...``."""
    N = N or result.N
    Phi = np.zeros((N, result.p, result.p), dtype=complex)
    Phi[0] = np.eye(result.p)
    for t in result.terms:
        yield Phi
        Phi = _right_mul_factor(Phi, t.factor)


def _times_atom(Phi: np.ndarray, M: np.ndarray, w: complex) -> np.ndarray:
    # Phi(z) M (1-|w|^2) / (1 - z conj(w)) truncated
    PM = Phi @ M
    return lfilter([1.0 - abs(w) ** 2], [1.0, -w.conjugate()], PM, axis=0)


def term_functions(result: DecompositionResult, N: int | None = None) -> list:
    """The orthogonal summands ``T_k = B_0 ... B_{k-1} M_k sqrt(1-|w_k|^2) e_{w_k}``."""
    return [AnalyticMatrixFn(_times_atom(Phi, t.M, t.w))
            for Phi, t in zip(chain_products(result, N), result.terms)]


def term_gram(result: DecompositionResult, N: int | None = None) -> np.ndarray:
    """Matrix of ``Tr [T_k, T_l]``."""
    T = np.array([t.coeffs for t in term_functions(result, N)])
    if len(T) == 0:
        return np.zeros((0, 0), dtype=complex)
    flat = T.reshape(len(T), -1)
    return flat.conj() @ flat.T


def modified_blaschke_grams(result: DecompositionResult, N: int | None = None) -> list:
    """``[Btilde_k, Btilde_k]`` for ``Btilde_k = B_0 ... B_{k-1} P_k e_{w_k}``.

    Reported as a diagnostic; with left-multiplied factors it equals
    ``P_k`` up to truncation.
    """
    out = []
    for Phi, t in zip(chain_products(result, N), result.terms):
        w = t.w
        c = lfilter([np.sqrt(1.0 - abs(w) ** 2)], [1.0, -w.conjugate()], Phi @ t.P.matrix, axis=0)
        out.append(np.einsum("npi,npj->ij", c.conj(), c))
    return out


def remainder_chain_image(result: DecompositionResult) -> AnalyticMatrixFn:
    """``B_0 ... B_{K-1} F_K``, the part of ``F`` not yet expanded."""
    if result.remainder is None:
        raise ValueError("result carries no remainder")
    return result.chain.apply(result.remainder)
