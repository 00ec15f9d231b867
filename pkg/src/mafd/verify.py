"""Invariant checks, each reported as a named measured-vs-tolerance record.

Three groups:

* :func:`library_checks` exercises the linear algebra and Blaschke
  machinery on seeded random data (no input needed);
* :func:`result_checks` tests a stored :class:`DecompositionResult`;
* :func:`signal_checks` tests a signal, decomposes it, and then runs the
  per-step and result checks on the run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _search
from .afd import (
    DecompositionResult,
    SelectionConfig,
    coarse_grid_values,
    iterate,
    reconstruct,
    term_gram,
)
from .blaschke import (
    BlaschkeChain,
    BlaschkeFactor,
    StateSpaceBlaschke,
    kernel_difference_quotient,
    kernel_eval,
    mobius,
    unit_grid,
)
from .hardy import AnalyticMatrixFn, R_MAX, energy, evaluate, evaluate_circles, inner, tail_bound
from .matcore import herm_eig, random_projection, solve_stein, top_k_projection
from .sigio import (
    RealMatrixSignal,
    analytic_part,
    real_reconstruct,
    sample_energy,
    spectrum,
    spectrum_energy,
    symmetry_defect,
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    measured: float
    tolerance: float
    passed: bool
    detail: str = ""

    def to_dict(self) -> dict:
        return {"check": self.name, "passed": self.passed, "measured": self.measured,
                "tolerance": self.tolerance, "detail": self.detail}


def check(name: str, measured: float, tolerance: float, detail: str = "") -> CheckResult:
    measured = float(measured)
    ok = bool(np.isfinite(measured) and measured <= tolerance)
    return CheckResult(name, measured, float(tolerance), ok, detail)


def _unitarity(U: np.ndarray) -> float:
    n = U.shape[-1]
    return float(np.max(np.linalg.norm(np.swapaxes(U, -1, -2).conj() @ U - np.eye(n), axis=(-2, -1))))


def _random_hermitian(n: int, rng) -> np.ndarray:
    X = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return 0.5 * (X + X.conj().T)


def _random_stable(n: int, rng, rho: float = 0.9) -> np.ndarray:
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return A * (rho / max(np.max(np.abs(np.linalg.eigvals(A))), 1e-300))


def ky_fan_gap(Q: np.ndarray, k: int, rng, draws: int = 100) -> float:
    """``max_R Tr(R Q) - Tr(P Q)`` over random rank-``k`` projections ``R``; ``<= 0`` if ``P`` is optimal."""
    P = top_k_projection(Q, k).matrix
    best = float(np.trace(P @ Q).real)
    n = Q.shape[0]
    z = rng.standard_normal((draws, n, k)) + 1j * rng.standard_normal((draws, n, k))
    V, _ = np.linalg.qr(z)
    vals = np.einsum("dik,ij,djk->d", V.conj(), Q, V).real
    return float(vals.max() - best)


def kernel_rank(chain: BlaschkeChain, rng, n_z: int = 48, n_zeta: int = 20, radius: float = 0.6) -> int:
    """Numerical rank of the sampled kernel functions ``K_B(., zeta_j) e_m``."""
    p = chain.factors[0].p
    zs = radius * np.sqrt(rng.uniform(size=n_z)) * np.exp(2j * np.pi * rng.uniform(size=n_z))
    zetas = radius * np.sqrt(rng.uniform(size=n_zeta)) * np.exp(2j * np.pi * rng.uniform(size=n_zeta))
    K = chain.kernel(zs[:, None], zetas[None, :])
    G = K.transpose(0, 2, 1, 3).reshape(n_z * p, n_zeta * p)
    s = np.linalg.svd(G, compute_uv=False)
    return int(np.sum(s > 1e-9 * s[0]))


def library_checks(seed: int = 0) -> list:
    rng = np.random.default_rng(seed)
    out = []

    eig_res, eig_unit = 0.0, 0.0
    for n in (2, 3, 4, 8):
        Q = _random_hermitian(n, rng)
        lam, V = herm_eig(Q)
        eig_res = max(eig_res, np.linalg.norm(Q @ V - V * lam) / np.linalg.norm(Q))
        eig_unit = max(eig_unit, _unitarity(V))
    out.append(check("matcore.eig_residual", eig_res, 1e-10))
    out.append(check("matcore.eig_unitary", eig_unit, 1e-12))

    gap = -np.inf
    for n in (2, 3, 5):
        Q = _random_hermitian(n, rng)
        for k in range(1, n + 1):
            gap = max(gap, ky_fan_gap(Q, k, rng))
    out.append(check("matcore.ky_fan", gap, 1e-10, "max over random projections of Tr(RQ) - Tr(PQ)"))

    stein = 0.0
    for n in range(1, 9):
        A = _random_stable(n, rng)
        C = rng.standard_normal((2, n)) + 1j * rng.standard_normal((2, n))
        P = solve_stein(A, C)
        CC = C.conj().T @ C
        stein = max(stein, np.linalg.norm(P - A.conj().T @ P @ A - CC) / np.linalg.norm(CC))
    out.append(check("matcore.stein_residual", stein, 1e-10))

    grid = unit_grid()
    fac_unit, kern_struct, kern_cf = 0.0, 0.0, 0.0
    factors = []
    for _ in range(20):
        p = int(rng.integers(1, 5))
        w = 0.95 * np.sqrt(rng.uniform()) * np.exp(2j * np.pi * rng.uniform())
        B = BlaschkeFactor(w, random_projection(p, int(rng.integers(0, p + 1)), rng))
        factors.append(B)
        fac_unit = max(fac_unit, _unitarity(B(grid)))
        z, zeta = 0.9 * np.sqrt(rng.uniform(size=2)) * np.exp(2j * np.pi * rng.uniform(size=2))
        lhs = np.eye(p) - B(z) @ B(zeta).conj().T
        rhs = B.P.matrix * (1.0 - mobius(w, z) * np.conj(mobius(w, zeta)))
        kern_struct = max(kern_struct, np.linalg.norm(lhs - rhs))
        kern_cf = max(kern_cf, np.linalg.norm(kernel_eval(B, z, zeta) - kernel_difference_quotient(B, z, zeta)))
    out.append(check("blaschke.factor_unitarity", fac_unit, 1e-12))
    out.append(check("blaschke.kernel_structure", kern_struct, 1e-12, "I - B(z)B(w)^H = P (1 - b(z) conj b(w))"))
    out.append(check("blaschke.kernel_closed_form", kern_cf, 1e-12))

    p = 3
    chain = BlaschkeChain(tuple(
        BlaschkeFactor(0.8 * np.sqrt(rng.uniform()) * np.exp(2j * np.pi * rng.uniform()),
                       random_projection(p, int(rng.integers(1, p + 1)), rng))
        for _ in range(3)))
    out.append(check("blaschke.chain_unitarity", _unitarity(chain(grid)), 1e-10 * len(chain)))
    out.append(check("blaschke.degree_additivity", abs(kernel_rank(chain, rng) - chain.degree), 0,
                     f"degree {chain.degree}"))

    ss_unit, ss_kern = 0.0, 0.0
    for _ in range(5):
        n = int(rng.integers(1, 7))
        pp = int(rng.integers(1, 4))
        S = StateSpaceBlaschke(rng.standard_normal((pp, n)) + 1j * rng.standard_normal((pp, n)),
                               _random_stable(n, rng, 0.8))
        ss_unit = max(ss_unit, _unitarity(S(grid)))
        z, zeta = 0.9 * np.sqrt(rng.uniform(size=2)) * np.exp(2j * np.pi * rng.uniform(size=2))
        K = S.kernel(z, zeta)
        ss_kern = max(ss_kern, np.linalg.norm(K - S.kernel_from_values(z, zeta)) / max(1.0, np.linalg.norm(K)))
    out.append(check("blaschke.state_space_unitarity", ss_unit, 1e-10))
    out.append(check("blaschke.state_space_kernel", ss_kern, 1e-10))
    return out


def result_checks(result: DecompositionResult, orthogonality: bool = True) -> list:
    out = []
    terms = result.terms
    e0 = result.initial_energy

    idem = max((np.linalg.norm(t.P.matrix @ t.P.matrix - t.P.matrix) for t in terms), default=0.0)
    out.append(check("matcore.projection", idem, 1e-12, "||P^2 - P||_F over terms"))

    rng_err = max((np.linalg.norm(t.P.matrix @ t.M - t.M) / max(1.0, np.linalg.norm(t.M)) for t in terms),
                  default=0.0)
    out.append(check("afd.term_range", rng_err, 1e-12, "||P M - M||_F"))

    gain_err = 0.0
    for t in terms:
        g = (1.0 - abs(t.w) ** 2) * float(np.vdot(t.M, t.M).real)
        gain_err = max(gain_err, abs(t.gain - g) / max(g, 1e-300))
    out.append(check("afd.term_gain", gain_err, 1e-10, "gain vs (1-|w|^2) Tr(M^H M)"))

    seq = np.concatenate([[e0], np.asarray(result.per_step_residuals, dtype=float)])
    rise = float(np.max(np.diff(seq))) if len(seq) > 1 else -math.inf
    out.append(check("afd.monotone", max(rise, 0.0), 1e-14 * e0, "largest residual increase"))

    defect = abs(result.energy_defect)
    out.append(check("afd.parseval", defect, float(sum(result.truncation_ledger)) + 1e-8 * e0,
                     "|initial - sum(gains) - residual|"))

    sep = abs(sum(1.0 - abs(t.w) for t in terms) - result.separability_sum)
    out.append(check("afd.separability_sum", sep, 1e-12 * max(1, len(terms))))

    if terms:
        grid = unit_grid()
        fu = max(_unitarity(t.factor(grid)) for t in terms)
        out.append(check("blaschke.term_factor_unitarity", fu, 1e-12))
        out.append(check("blaschke.term_chain_unitarity", _unitarity(result.chain(grid)), 1e-10 * len(terms)))

    if orthogonality:
        if len(terms) > 1:
            G = term_gram(result)
            g = np.maximum(result.gains, 1e-300)
            ratio = np.abs(G) / np.sqrt(np.outer(g, g))
            np.fill_diagonal(ratio, 0.0)
            k, l = np.unravel_index(np.argmax(ratio), ratio.shape)
            out.append(check("afd.orthogonality", ratio.max(), 1e-8, f"worst pair ({k}, {l})"))
        else:
            out.append(check("afd.orthogonality", 0.0, 1e-8, "fewer than two terms"))
    return out


def cauchy_schwarz_margin(F: AnalyticMatrixFn, rng, k: int = 1, grid=(24, 64), draws: int = 50,
                          r_max: float = R_MAX) -> float:
    """``max (1-|w|^2) ||xi F(w)||^2 - energy - tail_bound`` over a polar grid and random rank-``k`` ``xi``."""
    radii = _search.coarse_radii(r_max, grid[0])
    vals = evaluate_circles(F, radii, grid[1]).reshape((-1, F.p, F.q))
    pts = (radii[:, None] * np.exp(1j * _search.coarse_angles(grid[1]))[None, :]).ravel()
    vals = np.concatenate([F.coeffs[:1], vals])
    pts = np.concatenate([[0j], pts])
    k = min(k, F.p)
    worst = -math.inf
    for _ in range(draws):
        z = rng.standard_normal((len(pts), F.p, k)) + 1j * rng.standard_normal((len(pts), F.p, k))
        V, _ = np.linalg.qr(z)
        proj = np.swapaxes(V, -1, -2).conj() @ vals
        s = (1.0 - np.abs(pts) ** 2) * np.einsum("mij,mij->m", proj, proj.conj()).real
        worst = max(worst, float(s.max()))
    return worst - energy(F) - tail_bound(F, r_max)


def function_checks(F: AnalyticMatrixFn, rng) -> list:
    out = []
    G = inner(F, F)
    e = energy(F)
    out.append(check("hardy.gram_hermitian", np.linalg.norm(G - G.conj().T), 1e-12 * max(1.0, e)))
    out.append(check("hardy.gram_psd", max(-np.linalg.eigvalsh(G)[0], 0.0), 1e-12 * max(1.0, e)))
    out.append(check("hardy.cauchy_schwarz", max(cauchy_schwarz_margin(F, rng), 0.0), 0.0,
                     "objective minus energy plus tail bound"))
    return out


def real_signal_checks(s: RealMatrixSignal) -> list:
    out = []
    es = sample_energy(s)
    out.append(check("sigio.energy", abs(es - spectrum_energy(s)), 1e-10 * max(1.0, es)))
    X = spectrum(s)
    out.append(check("sigio.conjugate_symmetry", symmetry_defect(X), 1e-10 * max(1.0, np.max(np.abs(X)))))
    Fp, F0, ny = analytic_part(s)
    back = real_reconstruct(Fp, F0, s.n, ny)
    scale = max(1.0, float(np.max(np.abs(s.samples))))
    out.append(check("sigio.round_trip", np.max(np.abs(back.samples - s.samples)), 1e-10 * scale))
    return out


def run_checks(F: AnalyticMatrixFn, cfg: SelectionConfig, threads: int = 1, seed: int = 0):
    """Decompose ``F``, checking each step; returns ``(checks, result)``."""
    rng = np.random.default_rng(seed)
    per_step, lower, kyfan = 0.0, -math.inf, -math.inf
    terms, residuals, ledger = [], [], []
    remainder = F
    for rec in iterate(F, cfg, threads):
        t = rec.term
        per_step = max(per_step, abs(rec.energy_before - t.gain - rec.energy_after) / rec.energy_before)
        k = t.P.rank
        _, grid_vals = coarse_grid_values(rec.before, k, cfg)
        lower = max(lower, (float(grid_vals.max()) - t.gain) / rec.energy_before)
        Fw = evaluate(rec.before, t.w, None)
        kyfan = max(kyfan, ky_fan_gap(Fw @ Fw.conj().T, k, rng, 20) / rec.energy_before)
        terms.append(t)
        residuals.append(rec.energy_after)
        ledger.append(rec.discarded)
        remainder = rec.after
    e0 = energy(F)
    result = DecompositionResult(
        terms=tuple(terms), p=F.p, q=F.q, N=F.N, initial_energy=e0,
        residual_energy=residuals[-1] if residuals else e0,
        per_step_residuals=tuple(residuals), truncation_ledger=tuple(ledger),
        separability_sum=float(sum(1.0 - abs(t.w) for t in terms)),
        config=cfg, remainder=remainder,
    )
    out = [
        check("afd.per_step_energy", per_step, 1e-8, "relative, worst step"),
        check("afd.selection_lower_bound", max(lower, 0.0), 1e-12, "coarse-grid max minus gain, relative"),
        check("matcore.ky_fan_selected", max(kyfan, 0.0), 1e-10, "at selected points, relative"),
    ]
    out += result_checks(result)
    out += reconstruction_checks(F, result)
    return out, result


def reconstruction_checks(F: AnalyticMatrixFn, result: DecompositionResult,
                          name: str = "afd.reconstruction") -> list:
    R = reconstruct(result, F.N)
    diff = abs(energy(F - R) - result.residual_energy)
    return [check(name, diff,
                  float(sum(result.truncation_ledger)) + 1e-8 * result.initial_energy,
                  "|energy(F - reconstruct) - residual|")]


def signal_checks(obj, cfg: SelectionConfig | None = None, threads: int = 1, seed: int = 0):
    """All checks that apply to a signal or analytic function, including a full run."""
    cfg = cfg or SelectionConfig()
    out = []
    if isinstance(obj, RealMatrixSignal):
        out += real_signal_checks(obj)
        F, _, _ = analytic_part(obj)
    else:
        F = obj
    out += function_checks(F, np.random.default_rng(seed))
    run, result = run_checks(F, cfg, threads, seed)
    return out + run, result
