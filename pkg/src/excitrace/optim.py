"""L-BFGS with a strong-Wolfe line search, and a central-difference gradient checker."""
from __future__ import annotations

import math
import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import NonFiniteLoss, NumericalError


@dataclass
class OptimizerConfig:
    memory: int = 10
    max_steps: int = 1000
    wolfe_c1: float = 1e-4
    wolfe_c2: float = 0.9
    grad_tol: float = 1e-9
    max_linesearch: int = 40

    def __post_init__(self):
        if not 0 < self.wolfe_c1 < self.wolfe_c2 < 1:
            raise ValueError(f"need 0 < c1 < c2 < 1, got c1={self.wolfe_c1}, c2={self.wolfe_c2}")
        if self.memory < 1:
            raise ValueError("memory must be at least 1")
        if self.max_steps < 0 or self.max_linesearch < 1:
            raise ValueError("max_steps must be >= 0 and max_linesearch >= 1")


@dataclass
class StepRecord:
    step: int
    loss: float
    grad_norm: float
    cond_s: float
    step_length: float
    wall_ms: float
    n_evals: int
    armijo: bool = True
    curvature: bool = True


@dataclass
class OptTrace:
    records: list = field(default_factory=list)
    x: np.ndarray | None = None
    loss: float = math.nan
    grad: np.ndarray | None = None
    reason: str = ""
    n_evals: int = 0

    @property
    def losses(self):
        return np.array([r.loss for r in self.records])


class _Counter:
    """Wraps the objective: counts calls, maps numerical failures to ``None``."""

    def __init__(self, objective):
        self.objective = objective
        self.n = 0

    def __call__(self, x):
        self.n += 1
        try:
            out = self.objective(x)
        except NumericalError:
            return None
        f, g = out[0], out[1]
        info = out[2] if len(out) > 2 else {}
        f = float(f)
        g = np.asarray(g, dtype=np.float64)
        if not math.isfinite(f) or not np.all(np.isfinite(g)):
            return None
        return f, g, info


def _cubic_min(a, fa, ga, b, fb, gb):
    """Minimizer of the cubic through two points with slopes, or ``None``."""
    d1 = ga + gb - 3.0 * (fa - fb) / (a - b)
    rad = d1 * d1 - ga * gb
    if rad < 0:
        return None
    d2 = math.copysign(math.sqrt(rad), b - a)
    denom = gb - ga + 2.0 * d2
    if denom == 0:
        return None
    t = b - (b - a) * (gb + d2 - d1) / denom
    return t if math.isfinite(t) else None


def _line_search(fun, x, f0, g0, d, cfg, alpha0):
    """Strong-Wolfe search along ``d``; returns ``(alpha, (f, g, info), flags)`` or ``None``."""
    dphi0 = float(g0 @ d)
    c1, c2 = cfg.wolfe_c1, cfg.wolfe_c2
    budget = cfg.max_linesearch

    def evaluate(alpha):
        nonlocal budget
        budget -= 1
        out = fun(x + alpha * d)
        if out is None:
            return None
        return out, float(out[1] @ d)

    # losses closer than this are indistinguishable after rounding
    noise = 64.0 * np.finfo(float).eps * max(abs(f0), np.finfo(float).tiny)

    def sufficient(alpha, f, dphi):
        if f <= f0 + c1 * alpha * dphi0:
            return True
        # approximate Wolfe: decide the decrease from slopes once f stops resolving it
        return f <= f0 + noise and dphi <= (2.0 * c1 - 1.0) * dphi0

    def zoom(lo, flo, glo, hi, fhi, ghi):
        while budget > 0:
            width = hi - lo
            trial = _cubic_min(lo, flo, glo, hi, fhi, ghi)
            lo_edge, hi_edge = sorted((lo + 0.1 * width, hi - 0.1 * width))
            if trial is None or not lo_edge <= trial <= hi_edge:
                trial = lo + 0.5 * width
            res = evaluate(trial)
            if res is None:
                hi, fhi, ghi = trial, math.inf, 0.0
                continue
            out, dphi = res
            f = out[0]
            if not sufficient(trial, f, dphi) or f > flo + noise:
                hi, fhi, ghi = trial, f, dphi
            else:
                if abs(dphi) <= -c2 * dphi0:
                    return trial, out
                if dphi * (hi - lo) >= 0:
                    hi, fhi, ghi = lo, flo, glo
                lo, flo, glo = trial, f, dphi
            if abs(hi - lo) <= 1e-16 * max(1.0, abs(lo)):
                break
        return None

    prev, fprev, gprev = 0.0, f0, dphi0
    alpha = alpha0
    first = True
    while budget > 0:
        res = evaluate(alpha)
        if res is None:
            # non-finite loss or failed factorization: back off
            alpha *= 0.5
            continue
        out, dphi = res
        f = out[0]
        if not sufficient(alpha, f, dphi) or (not first and f > fprev + noise):
            found = zoom(prev, fprev, gprev, alpha, f, dphi)
            return found
        if abs(dphi) <= -c2 * dphi0:
            return alpha, out
        if dphi >= 0:
            return zoom(alpha, f, dphi, prev, fprev, gprev)
        prev, fprev, gprev = alpha, f, dphi
        alpha *= 2.0
        first = False
    return None


def _two_loop(g, memory):
    q = -g.copy()
    alphas = []
    for s, y, rho in reversed(memory):
        a = rho * (s @ q)
        alphas.append(a)
        q -= a * y
    s, y, _ = memory[-1]
    q *= (s @ y) / (y @ y)
    for (s, y, rho), a in zip(memory, reversed(alphas)):
        b = rho * (y @ q)
        q += (a - b) * s
    return q


def minimize(objective, x0, cfg=None, callback=None):
    """Minimize ``objective(x) -> (f, g[, info])`` with L-BFGS.

    Terminates on ``grad_tol``, ``max_steps`` or a line search that cannot
    satisfy the strong Wolfe conditions even after a steepest-descent restart;
    the reason is stored in ``OptTrace.reason``. ``callback(record, x, info)``
    runs after every accepted step (and once for the starting point).
    """
    cfg = cfg or OptimizerConfig()
    fun = _Counter(objective)
    x = np.array(x0, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise NonFiniteLoss("initial parameters are not finite", params=x, step=0)
    t0 = time.perf_counter()
    start = fun(x)
    if start is None:
        raise NonFiniteLoss("objective is not finite at the initial parameters", params=x, step=0)
    f, g, info = start
    trace = OptTrace()

    def record(step, length, flags=(True, True)):
        rec = StepRecord(step, f, float(np.linalg.norm(g)), float(info.get("cond_S", math.nan)),
                         length, 1e3 * (time.perf_counter() - t0), fun.n, *flags)
        trace.records.append(rec)
        if callback is not None:
            callback(rec, x, info)

    record(0, 0.0)
    memory = deque(maxlen=cfg.memory)
    reason = "max_steps"
    for step in range(1, cfg.max_steps + 1):
        if np.linalg.norm(g) < cfg.grad_tol:
            reason = "grad_tol"
            break
        found = None
        for restart in (False, True):
            if restart:
                if not memory:
                    break
                memory.clear()
            if memory:
                d = _two_loop(g, memory)
                alpha0 = 1.0
                if g @ d >= 0:
                    memory.clear()
            if not memory:
                d = -g
                alpha0 = 1.0 / max(np.linalg.norm(g), 1e-300)
            found = _line_search(fun, x, f, g, d, cfg, alpha0)
            if found is not None:
                break
        if found is None:
            reason = "line_search_failed"
            break
        alpha, (f_new, g_new, info_new) = found
        s = alpha * d
        y = g_new - g
        sy = float(s @ y)
        if sy > 1e-12 * float(np.linalg.norm(s) * np.linalg.norm(y)):
            memory.append((s, y, 1.0 / sy))
        armijo_ok = f_new <= f + cfg.wolfe_c1 * alpha * float(g @ d)
        curv_ok = abs(float(g_new @ d)) <= -cfg.wolfe_c2 * float(g @ d)
        x = x + s
        f, g, info = f_new, g_new, info_new
        record(step, float(alpha * np.linalg.norm(d)), (armijo_ok, curv_ok))
    else:
        if np.linalg.norm(g) < cfg.grad_tol:
            reason = "grad_tol"
    trace.x, trace.loss, trace.grad = x, f, g
    trace.reason = reason
    trace.n_evals = fun.n
    return trace


def fd_gradient(f, x, step=1e-5, indices=None):
    """Central differences ``(f(x + h e_k) - f(x - h e_k)) / 2h`` for each ``k`` in ``indices``."""
    if step <= 0:
        raise ValueError("step must be positive")
    x = np.array(x, dtype=np.float64)
    indices = range(x.size) if indices is None else indices
    out = []
    for k in indices:
        xp = x.copy()
        xm = x.copy()
        xp[k] += step
        xm[k] -= step
        out.append((float(f(xp)) - float(f(xm))) / (2.0 * step))
    return np.array(out)
