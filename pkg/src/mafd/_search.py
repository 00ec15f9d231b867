"""Deterministic maximization of a smooth function over a closed disk.

Stages: a polar coarse grid (Chebyshev-spaced radii, uniform angles, plus
the origin), shrinking 3 x 3 polar refinement around the incumbent, and
an optional Newton polish on the analytic gradient. Callers supply the
objective; nothing here knows about Hardy spaces.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, NamedTuple

import numpy as np

GridFn = Callable[[np.ndarray, int], np.ndarray]
PointsFn = Callable[[np.ndarray], np.ndarray]


class SearchOutcome(NamedTuple):
    w: complex
    value: float
    grid_best: float
    polished: bool


def coarse_radii(r_max: float, n_radii: int) -> np.ndarray:
    """``n_radii`` radii in ``(0, r_max]``, Chebyshev-Lobatto spaced (dense near 0 and r_max)."""
    j = np.arange(1, n_radii + 1)
    return 0.5 * r_max * (1.0 - np.cos(np.pi * j / n_radii))


def coarse_angles(n_angles: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(n_angles) / n_angles


def grid_values(value_on_grid: GridFn, radii: np.ndarray, n_angles: int, threads: int = 1) -> np.ndarray:
    if threads <= 1 or len(radii) < 2:
        return value_on_grid(radii, n_angles)
    chunks = np.array_split(radii, min(threads, len(radii)))
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(lambda r: value_on_grid(r, n_angles), chunks))
    return np.concatenate(parts, axis=0)


def _hessian_fd(grad_at: PointsFn, w: complex, h: float):
    pts = np.array([w, w + h, w - h, w + 1j * h, w - 1j * h])
    g = grad_at(pts)
    gx = 2.0 * np.array([g.real, g.imag])  # columns: real gradient at each point
    hx = (gx[:, 1] - gx[:, 2]) / (2 * h)
    hy = (gx[:, 3] - gx[:, 4]) / (2 * h)
    H = np.column_stack([hx, hy])
    return gx[:, 0], 0.5 * (H + H.T)


def newton_polish(value_at: PointsFn, grad_at: PointsFn, w0: complex, r_max: float,
                  max_iter: int = 30, h: float = 1e-6):
    """Newton iteration on the stationarity condition, started at ``w0``.

    ``grad_at`` returns the Wirtinger derivative ``d phi / d conj(w)``.
    Returns the final point, or ``None`` when the local model is not
    concave or a step leaves the disk.
    """
    w = complex(w0)
    for _ in range(max_iter):
        g, H = _hessian_fd(grad_at, w, h)
        if not np.all(np.isfinite(H)) or H[0, 0] >= 0 or np.linalg.det(H) <= 0:
            return None
        step = -np.linalg.solve(H, g)
        w_new = w + complex(step[0], step[1])
        if abs(w_new) > r_max:
            return None
        w = w_new
        if np.hypot(step[0], step[1]) <= 1e-13:
            break
    return w


def maximize(value_on_grid: GridFn, value_at: PointsFn, grad_at: PointsFn | None, *,
             r_max: float, n_radii: int, n_angles: int, refine_iters: int,
             refine_shrink: float, polish: bool = True, threads: int = 1) -> SearchOutcome:
    radii = coarse_radii(r_max, n_radii)
    angles = coarse_angles(n_angles)
    V = grid_values(value_on_grid, radii, n_angles, threads)
    v0 = float(value_at(np.zeros(1, dtype=complex))[0])
    flat = np.concatenate([[v0], V.ravel()])
    # argmax keeps the first maximum: smallest radius, then smallest angle index
    idx = int(np.argmax(flat))
    best = float(flat[idx])
    if idx == 0:
        r, th, dr = 0.0, 0.0, radii[0]
    else:
        i, j = divmod(idx - 1, n_angles)
        r, th = radii[i], angles[j]
        lo = radii[i - 1] if i > 0 else 0.0
        hi = radii[i + 1] if i + 1 < n_radii else radii[i]
        dr = max(radii[i] - lo, hi - radii[i])
    dth = 2.0 * np.pi / n_angles
    grid_best = best

    offs = np.array([-1.0, 0.0, 1.0])
    for it in range(1, refine_iters + 1):
        s = refine_shrink ** it
        rs = np.clip(r + offs * dr * s, 0.0, r_max)
        ths = th + offs * dth * s
        pts = (rs[:, None] * np.exp(1j * ths[None, :])).ravel()
        vals = value_at(pts)
        k = int(np.argmax(vals))
        if vals[k] > best:
            best = float(vals[k])
            r, th = rs[k // 3], ths[k % 3]

    w_best = complex(r * np.exp(1j * th))
    polished = False
    if polish and grad_at is not None:
        w_new = newton_polish(value_at, grad_at, w_best, r_max)
        if w_new is not None:
            v_new = float(value_at(np.array([w_new]))[0])
            if v_new >= best * (1.0 - 1e-12):
                w_best, best, polished = w_new, max(v_new, 0.0), True
    return SearchOutcome(w_best, best, grid_best, polished)
