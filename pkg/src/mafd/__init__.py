"""Adaptive Fourier decomposition of matrix-valued Hardy space functions."""

from .afd import (
    DecompositionResult,
    DecompositionTerm,
    SelectionConfig,
    decompose,
    iterate,
    max_selection,
    objective,
    reconstruct,
    split,
    step,
    term_functions,
)
from .blaschke import (
    BlaschkeChain,
    BlaschkeFactor,
    StateSpaceBlaschke,
    beurling_lax,
    chain_apply,
    deflate,
    factor_eval,
    factor_inverse_eval,
    kernel_eval,
    mobius,
    normalized_factor_eval,
)
from .errors import *  # noqa: F401,F403
from .hardy import AnalyticMatrixFn, atom, axpy, energy, evaluate, inner, norm, szego_fn, tail_bound
from .matcore import Projection, herm_eig, solve_stein, top_k_projection
from .scalar import scalar_afd
from .sigio import (
    RealMatrixSignal,
    analytic_part,
    load_result,
    load_signal,
    real_reconstruct,
    save_result,
    save_signal,
)

__version__ = "0.1.0"
