"""Small numerical helpers: quadrature nodes, bounded golden-section search, ordered parallel map."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")
U = TypeVar("U")

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@lru_cache(maxsize=32)
def _legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(a: float, b: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the ``n``-point Gauss-Legendre rule mapped onto ``[a, b]``."""
    x, w = _legendre(int(n))
    half = 0.5 * (b - a)
    return half * x + 0.5 * (a + b), half * w


def golden_section_max(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = 1e-4,
    max_iter: int = 200,
) -> tuple[float, float]:
    """Maximize a unimodal ``f`` on ``[a, b]``.

    The interval shrinks by the golden ratio until its width is below ``tol``.
    The endpoints are compared against the interior optimum at the end, so a
    maximum sitting on the boundary is returned exactly.

    Returns
    -------
    (x_best, f_best)
    """
    if not b > a:
        raise ValueError(f"empty interval [{a}, {b}]")
    lo, hi = float(a), float(b)
    c = hi - INV_PHI * (hi - lo)
    d = lo + INV_PHI * (hi - lo)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if hi - lo < tol:
            break
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - INV_PHI * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + INV_PHI * (hi - lo)
            fd = f(d)
    candidates = [(c, fc), (d, fd), (float(a), f(float(a))), (float(b), f(float(b)))]
    return max(candidates, key=lambda t: t[1])


def bracketed_max(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = 1e-4,
    n_scan: int = 41,
) -> tuple[float, float]:
    """Coarse scan to isolate the best basin, then golden-section refinement inside it.

    Use this for objectives that are unimodal only near their global maximum.
    """
    grid = np.linspace(a, b, n_scan)
    vals = np.array([f(float(x)) for x in grid])
    i = int(np.argmax(vals))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, n_scan - 1)]
    x, fx = golden_section_max(f, float(lo), float(hi), tol=tol)
    if vals[i] > fx:
        return float(grid[i]), float(vals[i])
    return x, fx


def parallel_map(fn: Callable[[T], U], items: Iterable[T], workers: int = 1) -> list[U]:
    """``[fn(x) for x in items]``, optionally on a thread pool; output order always matches input order."""
    seq: Sequence[T] = list(items)
    if workers <= 1 or len(seq) <= 1:
        return [fn(x) for x in seq]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, seq))
