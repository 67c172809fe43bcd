"""Nonlinear conjugate gradient with Hestenes-Stiefel updates.

The line search is a backtracking search with an Armijo sufficient-decrease
test.  Each trial step is refined by the secant minimizer of the directional
derivative, which is the exact line minimum on a quadratic; on quadratics
the method therefore behaves like linear CG.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

Objective = Callable[[np.ndarray], "tuple[float, np.ndarray]"]

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class LineSearchConfig:
    max_expansions: int = 8
    max_shrinks: int = 40
    shrink: float = 0.5
    expand: float = 4.0
    sufficient_decrease: float = 1e-4

    def __post_init__(self):
        if self.max_expansions < 0 or self.max_shrinks < 1:
            raise ValueError("line search iteration bounds must be positive")
        if not 0 < self.shrink < 1:
            raise ValueError("shrink factor must lie in (0, 1)")
        if not self.expand > 1:
            raise ValueError("expand factor must exceed 1")
        if not 0 < self.sufficient_decrease < 1:
            raise ValueError("sufficient-decrease constant must lie in (0, 1)")


@dataclass(frozen=True)
class CgConfig:
    max_iterations: int = 5000
    gradient_tolerance: float = 1e-10
    # None means "number of variables".
    restart_interval: int | None = None
    line_search: LineSearchConfig = field(default_factory=LineSearchConfig)

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if not self.gradient_tolerance >= 0:
            raise ValueError("gradient_tolerance must be nonnegative")
        if self.restart_interval is not None and self.restart_interval < 1:
            raise ValueError("restart_interval must be positive")
        if isinstance(self.line_search, dict):
            object.__setattr__(self, "line_search", LineSearchConfig(**self.line_search))


class OptimizationError(RuntimeError):
    def __init__(self, message: str, iterate: np.ndarray):
        super().__init__(message)
        self.iterate = iterate


class NonFiniteError(OptimizationError):
    pass


class LineSearchError(OptimizationError):
    pass


@dataclass
class CgResult:
    x: np.ndarray
    value: float
    iterations: int
    trace: list[float]
    gradient_norm: float
    message: str


def _eval(objective, x):
    f, g = objective(x)
    f = float(f)
    g = np.asarray(g, dtype=float)
    if not (np.isfinite(f) and np.all(np.isfinite(g))):
        return np.inf, g
    return f, g


def _line_search(objective, x, f0, g0, d, alpha, ls: LineSearchConfig):
    """Return ``(step, f, g)`` for an accepted step or None."""
    slope = float(g0 @ d)
    c = ls.sufficient_decrease
    a = alpha
    for _ in range(ls.max_shrinks):
        f1, g1 = _eval(objective, x + a * d)
        if f1 <= f0 + c * a * slope:
            break
        if np.isfinite(f1):
            s1 = float(g1 @ d)
            secant = a * slope / (slope - s1) if s1 > slope else a * ls.shrink
            a = min(max(secant, 0.1 * a), ls.shrink * a)
        else:
            a *= ls.shrink
    else:
        return None

    best = (a, f1, g1)
    # Refine by secant steps on the directional derivative, expanding while
    # the derivative is still negative.
    s_lo, a_lo = slope, 0.0
    for _ in range(ls.max_expansions + 1):
        a_cur, f_cur, g_cur = best
        s_cur = float(g_cur @ d)
        if s_cur > s_lo:
            trial = a_lo + (a_cur - a_lo) * s_lo / (s_lo - s_cur)
        else:
            trial = a_cur * ls.expand
        trial = min(max(trial, 0.1 * a_cur), ls.expand * a_cur)
        if abs(trial - a_cur) <= 1e-12 * a_cur:
            break
        ft, gt = _eval(objective, x + trial * d)
        # below the resolution of f, a smaller slope without an increase counts as progress
        flatter = ft <= f_cur and abs(float(gt @ d)) < abs(s_cur)
        if not ((ft < f_cur and ft <= f0 + c * trial * slope) or flatter):
            break
        if s_cur < 0:
            s_lo, a_lo = s_cur, a_cur
        best = (trial, ft, gt)
        if trial < a_cur:
            break
    return best


def minimize(objective: Objective, start, config: CgConfig = CgConfig()) -> CgResult:
    """Minimize ``objective`` from ``start``.

    ``objective(x)`` returns ``(value, gradient)``.  Stops when the gradient
    max-norm drops to ``config.gradient_tolerance``, after
    ``config.max_iterations`` accepted steps, or when no further decrease is
    representable in floating point.  A failed line search is retried once
    along steepest descent with half the previous step before raising
    :class:`LineSearchError`.
    """
    x = np.array(start, dtype=float).ravel()
    f, g = objective(x)
    f = float(f)
    g = np.asarray(g, dtype=float)
    if not (np.isfinite(f) and np.all(np.isfinite(g))):
        raise NonFiniteError("objective is not finite at the start point", x.copy())
    ls = config.line_search
    restart = config.restart_interval or x.size
    trace = [f]
    gnorm = float(np.max(np.abs(g))) if g.size else 0.0
    if gnorm <= config.gradient_tolerance:
        return CgResult(x, f, 0, trace, gnorm, "gradient tolerance reached")

    d = -g
    alpha = 1.0 / max(1.0, float(np.linalg.norm(g)))
    since_restart = 0
    message = "iteration limit reached"
    it = 0
    while it < config.max_iterations:
        step = _line_search(objective, x, f, g, d, alpha, ls)
        if step is None:
            d = -g
            step = _line_search(objective, x, f, g, d, 0.5 * alpha, ls)
            if step is None:
                tiny = alpha * ls.shrink ** ls.max_shrinks * float(d @ d)
                if tiny <= 4 * _EPS * max(abs(f), 1e-300):
                    message = "no representable decrease"
                    break
                raise LineSearchError("line search failed along steepest descent", x.copy())
        alpha, f_new, g_new = step
        x = x + alpha * d
        it += 1
        since_restart += 1
        trace.append(f_new)
        y = g_new - g
        f, g = f_new, g_new
        gnorm = float(np.max(np.abs(g)))
        if gnorm <= config.gradient_tolerance:
            message = "gradient tolerance reached"
            break
        denom = float(d @ y)
        beta = float(g @ y) / denom if denom != 0 else 0.0
        if since_restart >= restart or not np.isfinite(beta) or beta < 0:
            beta = 0.0
            since_restart = 0
        d = -g + beta * d
        if float(g @ d) >= 0:
            d = -g
            since_restart = 0
    return CgResult(x, f, it, trace, gnorm, message)


@dataclass
class BatchResult:
    x: np.ndarray
    values: np.ndarray
    iterations: np.ndarray


def minimize_rows(objective, starts, config: CgConfig = CgConfig()) -> BatchResult:
    """Run independent CG minimizations, one per row of ``starts``, in lockstep.

    ``objective(X)`` maps an ``(R, m)`` array to ``(values (R,), grads (R, m))``
    where row ``r`` of the output depends only on row ``r`` of the input.
    Each row follows the same update rules as :func:`minimize`; a row whose
    line search fails simply stops at its best point.
    """
    x = np.array(starts, dtype=float)
    R, m = x.shape
    ls = config.line_search
    c = ls.sufficient_decrease
    restart = config.restart_interval or m

    def ev(pts):
        f, g = objective(pts)
        f = np.asarray(f, dtype=float).copy()
        g = np.asarray(g, dtype=float)
        bad = ~(np.isfinite(f) & np.all(np.isfinite(g), axis=1))
        f[bad] = np.inf
        return f, g

    f, g = ev(x)
    if not np.all(np.isfinite(f)):
        raise NonFiniteError("objective is not finite at a start row", x[~np.isfinite(f)][0])
    iters = np.zeros(R, dtype=int)
    active = np.max(np.abs(g), axis=1) > config.gradient_tolerance
    d = -g
    alpha = 1.0 / np.maximum(1.0, np.linalg.norm(g, axis=1))
    since = np.zeros(R, dtype=int)

    for _ in range(config.max_iterations):
        if not active.any():
            break
        slope = np.sum(g * d, axis=1)
        a = alpha.copy()
        pending = active.copy()
        acc = np.zeros(R, dtype=bool)
        fa, ga = f.copy(), g.copy()
        for _ in range(ls.max_shrinks):
            if not pending.any():
                break
            f1, g1 = ev(x + a[:, None] * d)
            ok = pending & (f1 <= f + c * a * slope)
            fa[ok], ga[ok] = f1[ok], g1[ok]
            acc |= ok
            pending &= ~ok
            s1 = np.sum(g1 * d, axis=1)
            with np.errstate(divide="ignore", invalid="ignore"):
                sec = np.where(s1 > slope, a * slope / (slope - s1), a * ls.shrink)
            sec = np.where(np.isfinite(f1), sec, a * ls.shrink)
            a = np.where(pending, np.minimum(np.maximum(sec, 0.1 * a), ls.shrink * a), a)

        # one secant refinement per accepted row
        s_acc = np.sum(ga * d, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            trial = np.where(s_acc > slope, a * slope / (slope - s_acc), a * ls.expand)
        trial = np.clip(trial, 0.1 * a, ls.expand * a)
        ft, gt = ev(x + trial[:, None] * d)
        better = acc & (ft < fa) & (ft <= f + c * trial * slope)
        a = np.where(better, trial, a)
        fa[better], ga[better] = ft[better], gt[better]

        stalled = active & ~acc
        active &= acc
        x[acc] += a[acc, None] * d[acc]
        y = ga - g
        f = np.where(acc, fa, f)
        g_old_d = d
        g = np.where(acc[:, None], ga, g)
        alpha = np.where(acc, a, alpha)
        iters += acc
        since += acc
        active &= np.max(np.abs(g), axis=1) > config.gradient_tolerance
        active &= ~stalled

        denom = np.sum(g_old_d * y, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            beta = np.where(denom != 0, np.sum(g * y, axis=1) / denom, 0.0)
        reset = (since >= restart) | ~np.isfinite(beta) | (beta < 0)
        beta = np.where(reset, 0.0, beta)
        since = np.where(reset, 0, since)
        d_new = -g + beta[:, None] * g_old_d
        uphill = np.sum(g * d_new, axis=1) >= 0
        d_new[uphill] = -g[uphill]
        since[uphill] = 0
        d = np.where(active[:, None], d_new, d)
    return BatchResult(x, f, iters)
