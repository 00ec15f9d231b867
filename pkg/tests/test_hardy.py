import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mafd.errors import PointOutsideSearchDisk, ShapeMismatch
from mafd.hardy import (
    AnalyticMatrixFn,
    atom,
    axpy,
    boundary_values,
    energy,
    evaluate,
    evaluate_circles,
    evaluate_derivative,
    inner,
    lmul,
    szego_fn,
    tail_bound,
)
from mafd.matcore import random_projection

from conftest import crandn, random_poly

E11 = np.array([[1.0, 0.0], [0.0, 0.0]])


def monomial(n, A, N=64):
    c = np.zeros((N,) + np.shape(A), dtype=complex)
    c[n] = A
    return AnalyticMatrixFn(c)


def test_inner_examples():
    F = monomial(1, E11)
    np.testing.assert_array_equal(inner(F, F), np.diag([1, 0]))
    np.testing.assert_array_equal(inner(F, monomial(2, E11)), np.zeros((2, 2)))


def quadrature_inner(F, G, n_points):
    # (1/2pi) int G(e^{it})^H F(e^{it}) dt by the trapezoid rule
    Fb = np.fft.ifft(np.concatenate([F.coeffs, np.zeros((n_points - F.N,) + F.shape)]), axis=0) * n_points
    Gb = np.fft.ifft(np.concatenate([G.coeffs, np.zeros((n_points - G.N,) + G.shape)]), axis=0) * n_points
    return np.einsum("tpi,tpj->ij", Gb.conj(), Fb) / n_points


def test_inner_matches_boundary_quadrature(rng):
    N = 256
    F = AnalyticMatrixFn(crandn(rng, N, 3, 2))
    G = AnalyticMatrixFn(crandn(rng, N, 3, 2))
    ref = quadrature_inner(F, G, 4 * N)
    assert np.max(np.abs(inner(F, G) - ref)) <= 1e-8 * np.max(np.abs(ref))


def test_inner_conjugate_symmetry(rng):
    F, G = random_poly(rng, 2, 3, 10, 64), random_poly(rng, 2, 3, 10, 64)
    np.testing.assert_allclose(inner(F, G), inner(G, F).conj().T, atol=1e-12)


def test_inner_shape_mismatch(rng):
    with pytest.raises(ShapeMismatch):
        inner(random_poly(rng, 2, 2, 3, 64), random_poly(rng, 2, 1, 3, 64))
    with pytest.raises(ShapeMismatch):
        inner(random_poly(rng, 2, 2, 3, 64), random_poly(rng, 2, 2, 3, 128))


def test_energy_examples():
    assert energy(AnalyticMatrixFn.zeros(2, 2, 64)) == 0.0
    assert energy(monomial(1, E11)) == 1.0
    assert energy(AnalyticMatrixFn.from_polynomial([np.eye(2), np.eye(2)], 64)) == 4.0


def test_evaluate_examples(rng):
    A = crandn(rng, 2, 3)
    F = AnalyticMatrixFn.constant(A, 64)
    np.testing.assert_allclose(F(0.3 - 0.2j), A)
    B = crandn(rng, 2, 3)
    np.testing.assert_allclose(evaluate(AnalyticMatrixFn.from_polynomial([A, B], 64), 0.0), A)


def test_evaluate_szego_closed_form():
    e = szego_fn(0.3, 256)
    np.testing.assert_allclose(e(0.3)[0, 0], 1.0 / np.sqrt(1 - 0.09), atol=1e-10)


def test_evaluate_outside_disk():
    F = AnalyticMatrixFn.zeros(1, 1, 64)
    with pytest.raises(PointOutsideSearchDisk):
        F(0.99)
    evaluate(F, 0.99, r_max=None)
    with pytest.raises(PointOutsideSearchDisk):
        szego_fn(0.985)


def test_evaluate_matches_horner(rng):
    F = random_poly(rng, 2, 2, 12, 64)
    w = 0.4 - 0.5j
    horner = np.zeros((2, 2), dtype=complex)
    for c in F.coeffs[::-1]:
        horner = horner * w + c
    np.testing.assert_allclose(F(w), horner, atol=1e-13)


def test_evaluate_circles_matches_pointwise(rng):
    F = random_poly(rng, 2, 3, 40, 128)
    radii = np.array([0.2, 0.7, 0.95])
    V = evaluate_circles(F, radii, 16)
    pts = radii[:, None] * np.exp(2j * np.pi * np.arange(16) / 16)[None, :]
    np.testing.assert_allclose(V, evaluate(F, pts, None), atol=1e-12)
    # more angles than coefficients
    V2 = evaluate_circles(F, radii, 256)
    pts2 = radii[:, None] * np.exp(2j * np.pi * np.arange(256) / 256)[None, :]
    np.testing.assert_allclose(V2, evaluate(F, pts2, None), atol=1e-12)


def test_boundary_values_parseval(rng):
    F = random_poly(rng, 2, 2, 20, 64)
    b = boundary_values(F, 128)
    np.testing.assert_allclose(np.mean(np.sum(np.abs(b) ** 2, axis=(1, 2))), energy(F), rtol=1e-13)


def test_derivative(rng):
    F = random_poly(rng, 2, 1, 10, 64)
    w, h = 0.3 + 0.1j, 1e-6
    fd = (F(w + h) - F(w - h)) / (2 * h)
    np.testing.assert_allclose(evaluate_derivative(F, w), fd, atol=1e-8)


def test_axpy_examples(rng):
    F, G = random_poly(rng, 2, 2, 5, 64), random_poly(rng, 2, 2, 5, 64)
    np.testing.assert_array_equal(axpy(0, F, G).coeffs, G.coeffs)
    np.testing.assert_array_equal(axpy(1, F, AnalyticMatrixFn.zeros(2, 2, 64)).coeffs, F.coeffs)
    np.testing.assert_array_equal((F - G).coeffs, F.coeffs - G.coeffs)


def test_axpy_linearity(rng):
    F, G, H = (random_poly(rng, 3, 2, 8, 64) for _ in range(3))
    alpha = 0.7 - 1.3j
    lhs = inner(axpy(alpha, F, G), H)
    rhs = alpha * inner(F, H) + inner(G, H)
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(1.0, np.max(np.abs(rhs)))


def test_lmul(rng):
    F = random_poly(rng, 3, 2, 4, 64)
    A = crandn(rng, 2, 3)
    np.testing.assert_allclose(lmul(A, F)(0.2), A @ F(0.2), atol=1e-13)
    np.testing.assert_allclose((A @ F)(0.2), A @ F(0.2), atol=1e-13)
    with pytest.raises(ShapeMismatch):
        lmul(np.eye(2), F)


def test_function_validation():
    with pytest.raises(ShapeMismatch):
        AnalyticMatrixFn(np.zeros((100, 2, 2)))
    with pytest.raises(ValueError):
        AnalyticMatrixFn(np.full((4, 1, 1), np.nan))
    F = AnalyticMatrixFn(np.zeros(8))
    assert F.shape == (1, 1) and F.N == 8
    with pytest.raises(ValueError):
        F.coeffs[0] = 1.0


def test_szego_examples():
    np.testing.assert_allclose(szego_fn(0.0, 64).coeffs[:, 0, 0], np.eye(64)[0])
    assert abs(energy(szego_fn(0.5, 64)) - (1 - 0.25**64)) <= 1e-12


@settings(max_examples=30, deadline=None)
@given(r=st.floats(0.0, 0.95), th=st.floats(0.0, 2 * np.pi), seed=st.integers(0, 2**32 - 1))
def test_szego_reproducing(r, th, seed):
    rng = np.random.default_rng(seed)
    w = r * np.exp(1j * th)
    f = random_poly(rng, 1, 1, 12, 1024)
    lhs = inner(f, szego_fn(w, 1024))[0, 0]
    assert abs(lhs - np.sqrt(1 - r * r) * f(w)[0, 0]) <= 1e-10 * max(1.0, abs(lhs))


def test_atom_coefficients(rng):
    M = crandn(rng, 2, 2)
    w = 0.4 + 0.2j
    a = atom(M, w, 64)
    np.testing.assert_allclose(a.coeffs[3], M * (1 - abs(w) ** 2) * np.conj(w) ** 3)


def test_gram_psd(rng):
    F = random_poly(rng, 3, 4, 30, 128)
    G = inner(F, F)
    assert np.linalg.norm(G - G.conj().T) <= 1e-12 * np.linalg.norm(G)
    assert np.linalg.eigvalsh(G)[0] >= -1e-12 * np.linalg.norm(G)


def test_orthogonal_energy_additivity(rng):
    F = random_poly(rng, 2, 2, 6, 64)
    G = AnalyticMatrixFn(np.roll(random_poly(rng, 2, 2, 6, 64).coeffs, 20, axis=0))
    assert np.max(np.abs(inner(F, G))) == 0.0
    assert abs(energy(F + G) - energy(F) - energy(G)) <= 1e-10 * energy(F + G)


def test_cauchy_schwarz_bound(rng):
    F = random_poly(rng, 3, 2, 30, 1024)
    bound = energy(F) + tail_bound(F)
    radii = np.linspace(0, 0.98, 12)
    vals = evaluate_circles(F, radii, 32)
    pts = radii[:, None] * np.exp(2j * np.pi * np.arange(32) / 32)[None, :]
    for _ in range(20):
        xi = random_projection(3, 1, rng).matrix
        proj = xi @ vals
        s = (1 - np.abs(pts) ** 2) * np.sum(np.abs(proj) ** 2, axis=(-2, -1))
        assert s.max() <= bound


def test_tail_bound_small_at_default_length(rng):
    F = random_poly(rng, 2, 2, 5)
    assert tail_bound(F) <= 1e-7 * np.sqrt(energy(F))
