"""Command-line front end: ``mafd synth | decompose | reconstruct | verify``.

Exit codes: 0 success, 2 unreadable or malformed input, 3 violated
precondition or invalid parameters, 4 failed invariant check.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import verify as vf
from .afd import SelectionConfig, decompose, reconstruct
from .errors import InvalidParams, InvariantViolation, MafdError, ParseError
from .hardy import DEFAULT_N, AnalyticMatrixFn, szego_coeffs
from .sigio import (
    RealMatrixSignal,
    _read,
    analytic_part,
    load_result,
    real_reconstruct,
    result_from_dict,
    save_result,
    save_signal,
    signal_from_dict,
    trig_signal,
)

EXIT_OK, EXIT_PARSE, EXIT_PRECONDITION, EXIT_INVARIANT = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARSE, f"{self.prog}: error: {message}\n")


def _complex_arg(text: str) -> complex:
    try:
        if "," in text:
            re_, im_ = text.split(",")
            return complex(float(re_), float(im_))
        return complex(text.replace("i", "j"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from None


def _grid_arg(text: str) -> tuple:
    try:
        r, a = text.lower().split("x")
        return int(r), int(a)
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like 24x64, got {text!r}") from None


def _rank_arg(text: str) -> tuple:
    try:
        return tuple(int(k) for k in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"rank must be an integer list like 1 or 1,2,1, got {text!r}") from None


def _add_selection_flags(sp):
    d = SelectionConfig()
    sp.add_argument("--rank", type=_rank_arg, default=d.rank_schedule, help="rank per step, e.g. 1 or 2,1 (last repeats)")
    sp.add_argument("--max-terms", type=int, default=d.max_terms)
    sp.add_argument("--tol", type=float, default=d.stop_rel_energy, help="stop at this relative residual energy")
    sp.add_argument("--rmax", type=float, default=d.r_max)
    sp.add_argument("--grid", type=_grid_arg, default=d.coarse_grid, help="coarse grid RxA (radii x angles)")
    sp.add_argument("--refine", type=int, default=d.refine_iters)
    sp.add_argument("--no-polish", action="store_true", help="skip the Newton stage of the search")
    sp.add_argument("--threads", type=int, default=1, help="threads for the coarse grid (results do not depend on it)")


def _config(args) -> SelectionConfig:
    return SelectionConfig(
        rank_schedule=args.rank, r_max=args.rmax, coarse_grid=args.grid, refine_iters=args.refine,
        stop_rel_energy=args.tol, max_terms=args.max_terms, polish=not args.no_polish,
    )


def _add_report_flags(sp):
    sp.add_argument("--report", type=Path, help="append report lines here (default: stdout)")
    sp.add_argument("--format", choices=("json", "csv"), default="json")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="mafd", description="Matrix-valued adaptive Fourier decomposition.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("synth", help="write a test signal")
    sp.add_argument("kind", choices=("atom", "atoms", "constant", "random-poly", "real-trig"))
    sp.add_argument("--p", type=int, default=2)
    sp.add_argument("--q", type=int, default=1)
    sp.add_argument("--w", type=_complex_arg, action="append", help="atom point, e.g. 0.3 or 0.2,-0.1 (repeatable)")
    sp.add_argument("--count", type=int, default=3, help="number of atoms for kind=atoms")
    sp.add_argument("--degree", type=int, default=8)
    sp.add_argument("--value", type=float, default=1.0, help="constant is value * identity (p x q)")
    sp.add_argument("--samples", type=int, default=64, help="sample count for kind=real-trig")
    sp.add_argument("--N", type=int, default=DEFAULT_N, help="coefficient length")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", type=Path, required=True)

    sp = sub.add_parser("decompose", help="decompose a signal file")
    sp.add_argument("input", type=Path)
    sp.add_argument("--out", type=Path, required=True)
    sp.add_argument("--N", type=int, default=None, help="coefficient length for real signals")
    _add_selection_flags(sp)
    _add_report_flags(sp)

    sp = sub.add_parser("reconstruct", help="rebuild the expansion stored in a result file")
    sp.add_argument("result", type=Path)
    sp.add_argument("--out", type=Path, required=True)
    sp.add_argument("--N", type=int, default=None, help="coefficient length (default: the result's)")
    sp.add_argument("--samples", type=int, default=None,
                    help="write a real signal with this many samples instead of an analytic function")

    sp = sub.add_parser("verify", help="run invariant checks on result and/or signal files")
    sp.add_argument("inputs", type=Path, nargs="*", help="result or signal files (kind is detected)")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--no-library", action="store_true", help="skip the input-free library checks")
    _add_selection_flags(sp)
    _add_report_flags(sp)
    return ap


def _crandn(rng, *shape) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def synthesize(args):
    """The signal described by ``synth`` arguments."""
    rng = np.random.default_rng(args.seed)
    p, q, N = args.p, args.q, args.N
    if p < 1 or q < 1:
        raise InvalidParams("p and q must be positive")
    if args.kind in ("atom", "atoms"):
        count = 1 if args.kind == "atom" else args.count
        ws = list(args.w or [])
        while len(ws) < count:
            ws.append(0.9 * np.sqrt(rng.uniform()) * np.exp(2j * np.pi * rng.uniform()))
        if len(ws) > count:
            raise InvalidParams(f"{len(ws)} points given for {count} atoms")
        if any(abs(w) >= 1 for w in ws):
            raise InvalidParams("atom points must lie in the open disk")
        # orthogonal output directions where possible
        U = np.linalg.qr(_crandn(rng, p, max(p, count)))[0]
        total = np.zeros((N, p, q), dtype=complex)
        for i, w in enumerate(ws):
            u = U[:, i % p]
            v = _crandn(rng, q)
            total += np.sqrt(1.0 - abs(w) ** 2) * szego_coeffs(w, N)[:, None, None] * np.outer(u, v.conj())[None]
        return AnalyticMatrixFn(total)
    if args.kind == "constant":
        return AnalyticMatrixFn.constant(args.value * np.eye(p, q), N)
    if args.kind == "random-poly":
        if args.degree < 0 or args.degree >= N:
            raise InvalidParams(f"degree must lie in 0..{N - 1}")
        return AnalyticMatrixFn.from_polynomial(_crandn(rng, args.degree + 1, p, q), N)
    if args.kind == "real-trig":
        if args.degree < 0 or 2 * args.degree >= args.samples:
            raise InvalidParams("degree must be below samples / 2")
        A = rng.standard_normal((args.degree + 1, p, q))
        B = rng.standard_normal((args.degree, p, q))
        return trig_signal(A, B, args.samples)
    raise InvalidParams(f"unknown kind {args.kind}")


def _emit(rows: list, args):
    if args.format == "csv":
        buf = io.StringIO()
        keys = list(rows[0].keys()) if rows else []
        w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
        write_header = args.report is None or not args.report.exists() or args.report.stat().st_size == 0
        if write_header:
            w.writeheader()
        w.writerows(rows)
        text = buf.getvalue()
    else:
        text = "".join(json.dumps(r, allow_nan=True) + "\n" for r in rows)
    if args.report is None:
        sys.stdout.write(text)
    else:
        with open(args.report, "a", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _load_any(path: Path):
    doc = _read(path)
    if doc.get("kind") == "afd_result":
        return result_from_dict(doc)
    return signal_from_dict(doc)


def _as_function(obj, N=None) -> AnalyticMatrixFn:
    if isinstance(obj, RealMatrixSignal):
        return analytic_part(obj, N)[0]
    if isinstance(obj, AnalyticMatrixFn):
        return obj
    raise ParseError("expected a signal file, got a result file")


def cmd_synth(args) -> int:
    save_signal(synthesize(args), args.out)
    return EXIT_OK


def cmd_decompose(args) -> int:
    cfg = _config(args)
    F = _as_function(_load_any(args.input), args.N)
    res = decompose(F, cfg, threads=args.threads)
    save_result(res, args.out)
    _emit([{"event": "decompose", "terms": len(res.terms), "initial_energy": res.initial_energy,
            "residual_energy": res.residual_energy,
            "relative_residual": res.residual_energy / res.initial_energy if res.initial_energy else 0.0,
            "ledger": float(sum(res.truncation_ledger))}], args)
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    res = load_result(args.result)
    R = reconstruct(res, args.N)
    if args.samples is None:
        save_signal(R, args.out)
    else:
        save_signal(real_reconstruct(R, R.coeffs[0].real, args.samples), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = _config(args)
    checks = [] if args.no_library else vf.library_checks(args.seed)
    results, signals = [], []
    for path in args.inputs:
        obj = _load_any(path)
        (results if hasattr(obj, "terms") else signals).append(obj)
    for res in results:
        checks += vf.result_checks(res)
    for sig in signals:
        cs, _ = vf.signal_checks(sig, cfg, args.threads, args.seed)
        checks += cs
        F = _as_function(sig)
        for res in results:
            if (res.p, res.q, res.N) == (F.p, F.q, F.N):
                checks += vf.reconstruction_checks(F, res, "afd.reconstruction_of_input")
    _emit([c.to_dict() for c in checks], args)
    return EXIT_OK if all(c.passed for c in checks) else EXIT_INVARIANT


COMMANDS = {"synth": cmd_synth, "decompose": cmd_decompose, "reconstruct": cmd_reconstruct, "verify": cmd_verify}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ParseError, OSError) as exc:
        print(f"mafd: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except InvariantViolation as exc:
        print(f"mafd: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (MafdError, ValueError) as exc:
        print(f"mafd: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
