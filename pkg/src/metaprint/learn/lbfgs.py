"""Limited-memory BFGS minimizer with a strong-Wolfe line search.

Two-loop recursion over the last `memory` curvature pairs; the inverse
Hessian seed is rescaled by (s.y)/(y.y) each iteration. Convergence is
declared on the max-abs gradient component.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Callable

import numpy as np

FunAndGrad = Callable[[np.ndarray], tuple[float, np.ndarray]]


@dataclass
class LbfgsResult:
    x: np.ndarray
    value: float
    grad_norm: float
    iterations: int
    converged: bool


def _two_loop(grad: np.ndarray, pairs: deque) -> np.ndarray:
    q = grad.copy()
    alphas = []
    for s, y, rho in reversed(pairs):
        a = rho * float(s @ q)
        alphas.append(a)
        q -= a * y
    if pairs:
        s, y, _ = pairs[-1]
        q *= float(s @ y) / float(y @ y)
    for (s, y, rho), a in zip(pairs, reversed(alphas)):
        b = rho * float(y @ q)
        q += (a - b) * s
    return -q


def _zoom(
    fg: FunAndGrad,
    x: np.ndarray,
    d: np.ndarray,
    f0: float,
    g0d: float,
    a_lo: float,
    a_hi: float,
    f_lo: float,
    c1: float,
    c2: float,
    max_steps: int,
):
    """Narrow [a_lo, a_hi] to a step satisfying the strong Wolfe conditions."""
    for _ in range(max_steps):
        a = 0.5 * (a_lo + a_hi)
        f, g = fg(x + a * d)
        dphi = float(g @ d)
        if f > f0 + c1 * a * g0d or f >= f_lo:
            a_hi = a
        else:
            if abs(dphi) <= -c2 * g0d:
                return a, f, g
            if dphi * (a_hi - a_lo) >= 0:
                a_hi = a_lo
            a_lo, f_lo = a, f
    f, g = fg(x + a_lo * d)
    return a_lo, f, g


def _line_search(
    fg: FunAndGrad,
    x: np.ndarray,
    d: np.ndarray,
    f0: float,
    g0: np.ndarray,
    alpha0: float,
    c1: float = 1e-4,
    c2: float = 0.9,
    max_steps: int = 25,
):
    g0d = float(g0 @ d)
    if g0d >= 0:
        return None
    a_prev, f_prev = 0.0, f0
    a = alpha0
    for i in range(max_steps):
        f, g = fg(x + a * d)
        if not np.isfinite(f):
            a = 0.5 * (a_prev + a)
            continue
        if f > f0 + c1 * a * g0d or (i > 0 and f >= f_prev):
            return _zoom(fg, x, d, f0, g0d, a_prev, a, f_prev, c1, c2, max_steps)
        dphi = float(g @ d)
        if abs(dphi) <= -c2 * g0d:
            return a, f, g
        if dphi >= 0:
            return _zoom(fg, x, d, f0, g0d, a, a_prev, f, c1, c2, max_steps)
        a_prev, f_prev = a, f
        a *= 2.0
    return None


def minimize_lbfgs(
    fun_and_grad: FunAndGrad,
    x0: np.ndarray,
    *,
    memory: int = 10,
    grad_tol: float = 1e-4,
    max_iter: int = 100,
) -> LbfgsResult:
    """Minimize a smooth function given its value-and-gradient callable."""
    x = np.asarray(x0, dtype=np.float64).copy()
    f, g = fun_and_grad(x)
    pairs: deque = deque(maxlen=memory)
    iteration = 0
    while iteration < max_iter:
        gnorm = float(np.abs(g).max()) if g.size else 0.0
        if gnorm <= grad_tol:
            return LbfgsResult(x, f, gnorm, iteration, True)
        d = _two_loop(g, pairs)
        if float(g @ d) >= 0:
            # curvature memory went stale; restart from steepest descent
            pairs.clear()
            d = -g
        alpha0 = 1.0 if pairs else min(1.0, 1.0 / max(1.0, float(np.linalg.norm(g))))
        hit = _line_search(fun_and_grad, x, d, f, g, alpha0)
        if hit is None:
            break
        a, f_new, g_new = hit
        s = a * d
        y = g_new - g
        sy = float(s @ y)
        if sy > 1e-10 * float(np.linalg.norm(s)) * float(np.linalg.norm(y)):
            pairs.append((s, y, 1.0 / sy))
        x = x + s
        f, g = f_new, g_new
        iteration += 1
    gnorm = float(np.abs(g).max()) if g.size else 0.0
    return LbfgsResult(x, f, gnorm, iteration, gnorm <= grad_tol)
