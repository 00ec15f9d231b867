"""Real matrix signals and the JSON file formats.

A real signal ``f(t_j)``, ``t_j = 2 pi j / n``, has a two-sided DFT with
``F_{-k} = conj(F_k)``. Keeping ``k = 0 .. n/2 - 1`` gives the analytic
part ``F_+``, and ``f = F_+ + conj(F_+) - F_0`` on the circle (the Nyquist
bin, which must be real, is reported separately and not part of ``F_+``).

Files are JSON with complex numbers written as ``[re, im]`` pairs. Floats
are written with ``repr``, the shortest string that reads back to the same
double, so save/load is bit-exact and output bytes are deterministic.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .afd import DecompositionResult, DecompositionTerm, SelectionConfig
from .errors import InvalidParams, NotRealSpectrum, ParseError, SchemaVersionMismatch, ShapeMismatch
from .hardy import DEFAULT_N, AnalyticMatrixFn, boundary_values
from .matcore import Projection

SCHEMA_VERSION = 1
SYMMETRY_TOL = 1e-10
IMAG_TOL = 1e-10


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True, eq=False)
class RealMatrixSignal:
    """Real ``p x q`` samples at ``t_j = 2 pi j / n``, ``samples.shape == (n, p, q)``."""

    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples)
        if np.iscomplexobj(s):
            if np.any(s.imag != 0):
                raise ValueError("signal samples must be real")
            s = s.real
        s = np.array(s, dtype=float)
        if s.ndim == 1:
            s = s[:, None, None]
        if s.ndim != 3:
            raise ShapeMismatch(f"samples must have shape (n, p, q), got {s.shape}")
        if not _is_pow2(s.shape[0]) or s.shape[0] < 2:
            raise ShapeMismatch(f"sample count {s.shape[0]} is not a power of two >= 2")
        if not np.all(np.isfinite(s)):
            raise ValueError("signal samples must be finite")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def p(self) -> int:
        return self.samples.shape[1]

    @property
    def q(self) -> int:
        return self.samples.shape[2]

    @property
    def times(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.n) / self.n

    @classmethod
    def from_function(cls, fn, n: int) -> "RealMatrixSignal":
        """Sample ``fn(t)`` (returning a real ``p x q`` array) at ``n`` points."""
        t = 2.0 * np.pi * np.arange(n) / n
        return cls(np.array([fn(tj) for tj in t]))

    def __repr__(self):
        return f"RealMatrixSignal(n={self.n}, p={self.p}, q={self.q})"


def spectrum(s: RealMatrixSignal) -> np.ndarray:
    """Two-sided DFT coefficients ``F_k = mean_j f(t_j) e^{-i k t_j}``, shape ``(n, p, q)``."""
    return np.fft.fft(s.samples, axis=0) / s.n


def sample_energy(s: RealMatrixSignal) -> float:
    """``mean_j Tr(f(t_j)^T f(t_j))``."""
    return float(np.mean(np.einsum("nij,nij->n", s.samples, s.samples)))


def spectrum_energy(s: RealMatrixSignal) -> float:
    """``sum_k Tr(F_k^H F_k)`` over the two-sided spectrum; equals :func:`sample_energy`."""
    X = spectrum(s)
    return float(np.vdot(X, X).real)


def symmetry_defect(X: np.ndarray) -> float:
    """``max_k ||F_{-k} - conj(F_k)||_F`` for a two-sided spectrum."""
    mirrored = np.roll(X[::-1], 1, axis=0)
    return float(np.max(np.linalg.norm(mirrored - X.conj(), axis=(1, 2))))


def analytic_part(s: RealMatrixSignal, N: int | None = None):
    """``(F_+, F_0, nyquist)`` for a real signal.

    ``F_+`` holds ``F_0 .. F_{n/2-1}``, zero padded to ``N`` coefficients
    (default ``max(1024, n/2)``); ``F_0`` is the mean and ``nyquist`` the
    ``k = n/2`` coefficient.

    Raises
    ------
    NotRealSpectrum
        If ``F_{-k} = conj(F_k)`` fails beyond ``1e-10`` (relative to the
        largest coefficient), or the mean or Nyquist bin is not real.
    """
    X = spectrum(s)
    n = s.n
    scale = max(1.0, float(np.max(np.abs(X))))
    defect = symmetry_defect(X)
    if defect > SYMMETRY_TOL * scale:
        raise NotRealSpectrum(f"conjugate symmetry fails by {defect:.3e}")
    half = n // 2
    if np.max(np.abs(X[half].imag)) > SYMMETRY_TOL * scale or np.max(np.abs(X[0].imag)) > SYMMETRY_TOL * scale:
        raise NotRealSpectrum("mean or Nyquist coefficient is not real")
    N = N or max(DEFAULT_N, half)
    if N < half:
        raise ShapeMismatch(f"N={N} cannot hold {half} coefficients")
    F_plus = AnalyticMatrixFn.from_polynomial(X[:half], N)
    return F_plus, X[0].real.copy(), X[half].real.copy()


def real_reconstruct(F_plus: AnalyticMatrixFn, F0, n: int, nyquist=None) -> RealMatrixSignal:
    """Samples of ``F_+ + conj(F_+) - F_0`` (plus the Nyquist term if given) at ``n`` points.

    Raises
    ------
    InvalidParams
        If the combined samples carry an imaginary part above ``1e-10``.
    """
    if not _is_pow2(n) or n < 2:
        raise ShapeMismatch(f"sample count {n} is not a power of two >= 2")
    F0 = np.asarray(F0, dtype=complex)
    if F0.shape != F_plus.shape:
        raise ShapeMismatch(f"F0 shape {F0.shape} does not match {F_plus.shape}")
    v = boundary_values(F_plus, n)
    full = v + v.conj() - F0[None]
    if nyquist is not None:
        full = full + np.asarray(nyquist, dtype=float)[None] * (-1.0) ** np.arange(n)[:, None, None]
    residue = float(np.max(np.abs(full.imag))) if full.size else 0.0
    if residue > IMAG_TOL * max(1.0, float(np.max(np.abs(full.real)))):
        raise InvalidParams(f"reconstructed samples have imaginary part {residue:.3e}")
    return RealMatrixSignal(full.real)


def trig_signal(A, B, n: int) -> RealMatrixSignal:
    """``f(t) = A_0 + sum_{m>=1} A_m cos(mt) + B_m sin(mt)`` sampled at ``n`` points.

    ``A`` has shape ``(d+1, p, q)``; ``B`` has shape ``(d, p, q)`` (for ``m = 1..d``).
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    t = 2.0 * np.pi * np.arange(n) / n
    out = np.broadcast_to(A[0], (n,) + A.shape[1:]).copy()
    for m in range(1, A.shape[0]):
        out += np.cos(m * t)[:, None, None] * A[m] + np.sin(m * t)[:, None, None] * B[m - 1]
    return RealMatrixSignal(out)


# serialization

def _c(z) -> list:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def _cmat(a: np.ndarray) -> list:
    return [[_c(x) for x in row] for row in np.asarray(a)]


def _rmat(a: np.ndarray) -> list:
    return [[float(x) for x in row] for row in np.asarray(a)]


def _dump(doc: dict, path) -> None:
    text = json.dumps(doc, indent=1, allow_nan=False) + "\n"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _parse(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON: {exc.msg}", where=f"line {exc.lineno}, column {exc.colno}") from None


def _read(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"file is not UTF-8 text: {exc.reason}", where=os.fspath(path)) from None
    doc = _parse(text)
    if not isinstance(doc, dict):
        raise ParseError("top-level JSON value must be an object")
    if "schema_version" not in doc:
        raise ParseError("missing field", where="schema_version")
    if doc["schema_version"] != SCHEMA_VERSION:
        raise SchemaVersionMismatch(f"schema version {doc['schema_version']!r}, expected {SCHEMA_VERSION}",
                                    where="schema_version")
    return doc


def _field(doc: dict, key: str, where: str = ""):
    if key not in doc:
        raise ParseError("missing field", where=f"{where}{key}")
    return doc[key]


def _count(doc: dict, key: str) -> int:
    v = _field(doc, key)
    if not isinstance(v, int) or isinstance(v, bool) or v < 1:
        raise ParseError(f"expected a positive integer, got {v!r}", where=key)
    return v


def _real(v, where: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ParseError(f"expected a number, got {v!r}", where=where)
    return float(v)


def _complex(v, where: str) -> complex:
    if not isinstance(v, list) or len(v) != 2:
        raise ParseError(f"expected an [re, im] pair, got {v!r}", where=where)
    return complex(_real(v[0], where), _real(v[1], where))


def _matrix(v, rows: int, cols: int, where: str, complex_entries: bool) -> np.ndarray:
    if not isinstance(v, list) or len(v) != rows:
        raise ParseError(f"expected {rows} rows", where=where)
    out = np.empty((rows, cols), dtype=complex if complex_entries else float)
    conv = _complex if complex_entries else _real
    for i, row in enumerate(v):
        if not isinstance(row, list) or len(row) != cols:
            raise ParseError(f"expected {cols} entries", where=f"{where}[{i}]")
        for j, x in enumerate(row):
            out[i, j] = conv(x, f"{where}[{i}][{j}]")
    return out


def _real_list(v, where: str) -> list:
    if not isinstance(v, list):
        raise ParseError("expected a list", where=where)
    return [_real(x, f"{where}[{i}]") for i, x in enumerate(v)]


def signal_to_dict(obj) -> dict:
    if isinstance(obj, RealMatrixSignal):
        return {"kind": "real_signal", "p": obj.p, "q": obj.q, "n": obj.n,
                "data": [_rmat(s) for s in obj.samples], "schema_version": SCHEMA_VERSION}
    if isinstance(obj, AnalyticMatrixFn):
        return {"kind": "analytic_fn", "p": obj.p, "q": obj.q, "n": obj.N,
                "data": [_cmat(c) for c in obj.coeffs], "schema_version": SCHEMA_VERSION}
    raise TypeError(f"cannot serialize {type(obj).__name__} as a signal")


def save_signal(obj, path) -> None:
    """Write a :class:`RealMatrixSignal` or :class:`AnalyticMatrixFn`."""
    _dump(signal_to_dict(obj), path)


def signal_from_dict(doc: dict):
    kind = _field(doc, "kind")
    p, q, n = _count(doc, "p"), _count(doc, "q"), _count(doc, "n")
    data = _field(doc, "data")
    if not isinstance(data, list) or len(data) != n:
        raise ParseError(f"expected {n} entries", where="data")
    if kind == "real_signal":
        arr = np.array([_matrix(d, p, q, f"data[{i}]", False) for i, d in enumerate(data)])
        cls = RealMatrixSignal
    elif kind == "analytic_fn":
        arr = np.array([_matrix(d, p, q, f"data[{i}]", True) for i, d in enumerate(data)])
        cls = AnalyticMatrixFn
    else:
        raise ParseError(f"unknown kind {kind!r}", where="kind")
    try:
        return cls(arr)
    except ValueError as exc:
        raise ParseError(str(exc), where="data") from None


def load_signal(path):
    """Read a signal file; returns a :class:`RealMatrixSignal` or :class:`AnalyticMatrixFn`.

    Raises
    ------
    ParseError
        On malformed JSON or fields, naming the line or field.
    SchemaVersionMismatch
        If ``schema_version`` is not 1.
    """
    return signal_from_dict(_read(path))


def result_to_dict(result: DecompositionResult) -> dict:
    terms = [{"w": _c(t.w), "P": _cmat(t.P.matrix), "M": _cmat(t.M), "gain": float(t.gain)}
             for t in result.terms]
    return {
        "kind": "afd_result",
        "p": result.p, "q": result.q, "N": result.N,
        "initial_energy": float(result.initial_energy),
        "residual_energy": float(result.residual_energy),
        "terms": terms,
        "per_step_residuals": [float(x) for x in result.per_step_residuals],
        "truncation_ledger": [float(x) for x in result.truncation_ledger],
        "separability_sum": float(result.separability_sum),
        "config": result.config.to_dict(),
        "schema_version": SCHEMA_VERSION,
    }


def save_result(result: DecompositionResult, path) -> None:
    _dump(result_to_dict(result), path)


def result_from_dict(doc: dict) -> DecompositionResult:
    if _field(doc, "kind") != "afd_result":
        raise ParseError(f"expected kind 'afd_result', got {doc['kind']!r}", where="kind")
    p, q, N = _count(doc, "p"), _count(doc, "q"), _count(doc, "N")
    raw = _field(doc, "terms")
    if not isinstance(raw, list):
        raise ParseError("expected a list", where="terms")
    terms = []
    for i, t in enumerate(raw):
        where = f"terms[{i}]."
        if not isinstance(t, dict):
            raise ParseError("expected an object", where=f"terms[{i}]")
        w = _complex(_field(t, "w", where), where + "w")
        Pm = _matrix(_field(t, "P", where), p, p, where + "P", True)
        M = _matrix(_field(t, "M", where), p, q, where + "M", True)
        gain = _real(_field(t, "gain", where), where + "gain")
        rank = int(round(float(np.trace(Pm).real)))
        try:
            P = Projection(Pm, rank)
        except ValueError as exc:
            raise ParseError(str(exc), where=where + "P") from None
        if not abs(w) < 1.0:
            raise ParseError(f"point {w} is not in the open disk", where=where + "w")
        M.setflags(write=False)
        terms.append(DecompositionTerm(w, P, M, gain))
    cfg_doc = _field(doc, "config")
    try:
        cfg = SelectionConfig.from_dict(cfg_doc)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"bad config: {exc}", where="config") from None
    return DecompositionResult(
        terms=tuple(terms), p=p, q=q, N=N,
        initial_energy=_real(_field(doc, "initial_energy"), "initial_energy"),
        residual_energy=_real(_field(doc, "residual_energy"), "residual_energy"),
        per_step_residuals=tuple(_real_list(_field(doc, "per_step_residuals"), "per_step_residuals")),
        truncation_ledger=tuple(_real_list(_field(doc, "truncation_ledger"), "truncation_ledger")),
        separability_sum=_real(_field(doc, "separability_sum"), "separability_sum"),
        config=cfg,
    )


def load_result(path) -> DecompositionResult:
    """Read a result file written by :func:`save_result` (without the remainder)."""
    return result_from_dict(_read(path))
