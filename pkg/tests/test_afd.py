import numpy as np
import pytest

from mafd import _search
from mafd.afd import (
    DecompositionResult,
    SelectionConfig,
    coarse_grid_values,
    decompose,
    iterate,
    max_selection,
    modified_blaschke_grams,
    objective,
    reconstruct,
    remainder_chain_image,
    split,
    step,
    term_functions,
    term_gram,
)
from mafd.errors import InvalidParams, RankOutOfRange, ZeroFunction
from mafd.hardy import AnalyticMatrixFn, atom, energy, evaluate, inner, tail_bound
from mafd.matcore import Projection, random_projection

from conftest import crandn, random_disk_point, random_poly


def single_atom(rng, a, p, q):
    """``e_a(z) u v^H`` with ``||u|| = 1``; returns the function, ``u`` and ``v``."""
    u = crandn(rng, p)
    u /= np.linalg.norm(u)
    v = crandn(rng, q)
    M = np.outer(u, v.conj()) / np.sqrt(1 - abs(a) ** 2)
    return atom(M, a), u, v


def step_identity(res):
    e = np.concatenate([[res.initial_energy], res.per_step_residuals])
    return np.abs(e[:-1] - res.gains - e[1:]) / e[:-1]


def test_config_validation():
    with pytest.raises(InvalidParams):
        SelectionConfig(r_max=1.0)
    with pytest.raises(InvalidParams):
        SelectionConfig(coarse_grid=(1, 64))
    with pytest.raises(InvalidParams):
        SelectionConfig(rank_schedule=(0,))
    with pytest.raises(InvalidParams):
        SelectionConfig(stop_rel_energy=0)
    with pytest.raises(InvalidParams):
        SelectionConfig(refine_shrink=1.5)
    cfg = SelectionConfig(rank_schedule=(2, 1))
    assert [cfg.rank_at(i) for i in range(4)] == [2, 1, 1, 1]
    assert SelectionConfig.from_dict(cfg.to_dict()) == cfg


def test_objective_examples(rng):
    A = crandn(rng, 2, 3)
    v, P = objective(AnalyticMatrixFn.constant(A), 0.0, 2)
    np.testing.assert_allclose(v, np.trace(A @ A.conj().T).real)
    a = 0.3 + 0.4j
    F, u, vv = single_atom(rng, a, 3, 2)
    v, P = objective(F, a, 1)
    # (1 - |a|^2) |e_a(a)|^2 ||v||^2 = ||v||^2
    np.testing.assert_allclose(v, np.linalg.norm(vv) ** 2, rtol=1e-12)
    np.testing.assert_allclose(P.matrix, np.outer(u, u.conj()), atol=1e-12)
    v, P = objective(AnalyticMatrixFn.zeros(2, 2), 0.5, 1)
    assert v == 0.0 and P.rank == 1
    with pytest.raises(RankOutOfRange):
        objective(F, 0.1, 4)


def test_objective_bounded_by_energy(rng):
    F = random_poly(rng, 3, 2, 40)
    bound = energy(F) + tail_bound(F)
    for k in (1, 2, 3):
        _, vals = coarse_grid_values(F, k, SelectionConfig())
        assert vals.max() <= bound


def test_objective_gradient_matches_finite_difference(rng):
    from mafd.afd import _objective_gradient
    F = random_poly(rng, 3, 2, 10)
    for k in (1, 2, 3):
        w, h = 0.3 - 0.2j, 1e-6
        fx = (objective(F, w + h, k)[0] - objective(F, w - h, k)[0]) / (2 * h)
        fy = (objective(F, w + 1j * h, k)[0] - objective(F, w - 1j * h, k)[0]) / (2 * h)
        g = _objective_gradient(F, np.array([w]), k)[0]
        np.testing.assert_allclose(2 * g, fx + 1j * fy, rtol=1e-6)


def test_max_selection_constant():
    A = np.array([[1.0, 2.0], [0.5, -1.0]])
    sel = max_selection(AnalyticMatrixFn.constant(A), 1)
    assert sel.w == 0
    # brute force over the coarse grid agrees
    pts, vals = coarse_grid_values(AnalyticMatrixFn.constant(A), 1, SelectionConfig())
    assert np.argmax(vals) == 0


def test_max_selection_single_atom_dense_grid(rng):
    a = 0.3
    F, u, _ = single_atom(rng, a, 2, 2)
    sel = max_selection(F, 1)
    assert abs(sel.w - a) <= 1e-3
    assert np.linalg.norm(sel.P.matrix - np.outer(u, u.conj())) <= 1e-3
    # dense 200 x 512 polar grid oracle
    radii = np.linspace(0, 0.98, 200)
    pts = (radii[:, None] * np.exp(2j * np.pi * np.arange(512) / 512)[None, :]).ravel()
    Fw = evaluate(F, pts, None)
    vals = (1 - np.abs(pts) ** 2) * np.linalg.norm(Fw, axis=(1, 2)) ** 2
    best = pts[np.argmax(vals)]
    assert abs(best - a) <= 0.98 / 199
    assert sel.value >= vals.max() - 1e-12


def test_max_selection_scalar_szego(rng):
    from mafd.scalar import select
    a = -0.2 + 0.55j
    f = atom([[1.0]], a) * (1 / np.sqrt(1 - abs(a) ** 2))
    sel = max_selection(f, 1)
    assert abs(sel.w - a) <= 1e-10
    assert abs(select(f.coeffs[:, 0, 0], SelectionConfig()) - sel.w) <= 1e-12


def test_max_selection_zero_function():
    with pytest.raises(ZeroFunction):
        max_selection(AnalyticMatrixFn.zeros(2, 2), 1)


def test_max_selection_beats_coarse_grid(rng):
    cfg = SelectionConfig()
    for k in (1, 2):
        F = random_poly(rng, 3, 2, 16)
        sel = max_selection(F, k, cfg)
        _, vals = coarse_grid_values(F, k, cfg)
        assert sel.value >= vals.max() * (1 - 1e-12)


def test_max_selection_threads_deterministic(rng):
    F = random_poly(rng, 3, 2, 16)
    a = max_selection(F, 1, threads=1)
    b = max_selection(F, 1, threads=4)
    assert a.w == b.w and a.value == b.value


def test_selection_without_polish(rng):
    F, _, _ = single_atom(rng, 0.45 - 0.3j, 2, 1)
    sel = max_selection(F, 1, SelectionConfig(polish=False))
    assert abs(sel.w - (0.45 - 0.3j)) <= 1e-2


def test_split_examples(rng):
    a = 0.2 + 0.1j
    F, u, _ = single_atom(rng, a, 2, 2)
    P = Projection.from_vectors(u[:, None])
    _, H, _ = split(F, a, P)
    assert energy(H) <= 1e-12
    G = random_poly(rng, 2, 2, 6)
    at, H, M = split(G, a, Projection.zero(2))
    assert energy(at) == 0 and np.array_equal(H.coeffs, G.coeffs)


def test_split_orthogonality(rng):
    F = random_poly(rng, 3, 2, 20)
    w = 0.4j
    P = random_projection(3, 1, rng)
    at, H, M = split(F, w, P)
    e = energy(F)
    assert np.linalg.norm(P.matrix @ evaluate(H, w)) <= 1e-10
    assert abs(np.trace(inner(at, H))) <= 1e-9 * e
    assert abs(energy(at) + energy(H) - e) <= 1e-9 * e
    np.testing.assert_allclose(inner(F, F), inner(at, at) + inner(H, H), atol=1e-9 * e)


def test_step_examples(rng):
    F, _, _ = single_atom(rng, 0.6 - 0.1j, 3, 2)
    term, F1 = step(F, 1)
    assert energy(F1) <= 1e-8 * energy(F)
    A = crandn(rng, 2, 2)
    term, F1 = step(AnalyticMatrixFn.constant(A), 2)
    assert term.w == 0 and energy(F1) <= 1e-28
    G = random_poly(rng, 3, 2, 12)
    ledger = []
    term, G1 = step(G, 1, ledger=ledger)
    assert abs(energy(G) - term.gain - energy(G1)) <= 1e-8 * energy(G)
    assert len(ledger) == 1
    np.testing.assert_allclose(term.P.matrix @ term.M, term.M, atol=1e-12)
    np.testing.assert_allclose(term.gain, (1 - abs(term.w) ** 2) * np.linalg.norm(term.M) ** 2, rtol=1e-10)


def test_decompose_three_orthogonal_atoms(rng):
    U = np.linalg.qr(crandn(rng, 3, 3))[0]
    V = np.linalg.qr(crandn(rng, 3, 3))[0]
    ws = [0.5, -0.3 + 0.6j, 0.2 - 0.7j]
    F = AnalyticMatrixFn.zeros(3, 3)
    for i, (w, c) in enumerate(zip(ws, (1.0, 0.8, 0.6))):
        F = F + atom(c * np.outer(U[:, i], V[:, i].conj()), w)
    res = decompose(F, SelectionConfig(max_terms=10))
    assert len(res.terms) <= 10
    assert res.residual_energy <= 1e-6 * res.initial_energy
    for w in ws:
        assert min(abs(t.w - w) for t in res.terms) <= 1e-8


def test_decompose_atom_one_term(rng):
    F, _, _ = single_atom(rng, 0.7j, 2, 1)
    res = decompose(F)
    assert len(res.terms) == 1


def test_decompose_invariants(rng):
    F = random_poly(rng, 3, 2, 16)
    res = decompose(F, SelectionConfig(max_terms=40))
    assert np.all(step_identity(res) <= 1e-8)
    r = np.array(res.per_step_residuals)
    assert np.all(np.diff(r) < 0)
    assert abs(res.energy_defect) <= sum(res.truncation_ledger) + 1e-8 * res.initial_energy
    np.testing.assert_allclose(res.separability_sum, sum(1 - abs(t.w) for t in res.terms))
    G = term_gram(res)
    g = res.gains
    off = np.abs(G) / np.sqrt(np.outer(g, g))
    np.fill_diagonal(off, 0)
    assert off.max() <= 1e-8
    np.testing.assert_allclose(np.diag(G).real, g, rtol=1e-8)


def test_decompose_rank_schedule(rng):
    F = random_poly(rng, 3, 2, 8)
    res = decompose(F, SelectionConfig(rank_schedule=(2, 1, 3), max_terms=6))
    assert [t.P.rank for t in res.terms] == [2, 1, 3, 3, 3, 3][:len(res.terms)]
    assert np.all(step_identity(res) <= 1e-8)


def test_decompose_stops_on_tolerance_and_max_terms(rng):
    F = random_poly(rng, 2, 2, 4)
    res = decompose(F, SelectionConfig(stop_rel_energy=0.1, max_terms=50))
    assert res.residual_energy <= 0.1 * res.initial_energy
    assert res.per_step_residuals[-2] > 0.1 * res.initial_energy if len(res.terms) > 1 else True
    assert len(decompose(F, SelectionConfig(max_terms=3)).terms) == 3
    assert len(decompose(F, SelectionConfig(max_terms=0)).terms) == 0


def test_iterate_yields_records(rng):
    F = random_poly(rng, 2, 1, 6)
    recs = list(iterate(F, SelectionConfig(max_terms=4)))
    assert len(recs) == 4
    for a, b in zip(recs, recs[1:]):
        assert a.after is b.before


def test_reconstruct_examples(rng):
    empty = decompose(random_poly(rng, 2, 2, 3), SelectionConfig(max_terms=0))
    assert energy(reconstruct(empty)) == 0.0
    A = crandn(rng, 2, 2)
    res = decompose(AnalyticMatrixFn.constant(A), SelectionConfig(rank_schedule=(2,)))
    assert len(res.terms) == 1
    np.testing.assert_allclose(reconstruct(res).coeffs, AnalyticMatrixFn.constant(A).coeffs, atol=1e-14)


def test_reconstruct_round_trip(rng):
    F = random_poly(rng, 2, 2, 10)
    res = decompose(F, SelectionConfig(max_terms=50))
    R = reconstruct(res)
    rel = energy(F - R) / res.initial_energy
    assert rel <= res.residual_energy / res.initial_energy + 1e-7
    # the unexpanded part is exactly the chain image of the remainder
    assert energy(F - R - remainder_chain_image(res)) <= 1e-20 * res.initial_energy
    T = term_functions(res)
    S = T[0]
    for t in T[1:]:
        S = S + t
    assert energy(S - R) <= 1e-20 * res.initial_energy


def test_modified_blaschke_grams_diagnostic(rng):
    F = random_poly(rng, 3, 1, 8)
    res = decompose(F, SelectionConfig(max_terms=5))
    for G, t in zip(modified_blaschke_grams(res), res.terms):
        assert np.linalg.norm(G - G.conj().T) <= 1e-12
        np.testing.assert_allclose(np.trace(G).real, t.P.rank, atol=1e-8)


def test_repeated_points_are_allowed(rng):
    # nothing dedups selections; a rank-1 schedule on a rank-2 constant picks the origin twice
    A = np.diag([1.0, 0.9])
    res = decompose(AnalyticMatrixFn.constant(A), SelectionConfig(max_terms=2))
    assert [t.w for t in res.terms] == [0, 0]
    assert res.residual_energy <= 1e-28


def test_result_is_immutable(rng):
    res = decompose(random_poly(rng, 2, 1, 3), SelectionConfig(max_terms=2))
    assert isinstance(res, DecompositionResult)
    with pytest.raises(AttributeError):
        res.residual_energy = 0.0
