"""Cross-entropy minimizer and a projected quasi-Newton baseline.

Both work in normalized coordinates ``x = theta / scale`` (``scale`` defaults
to ``|theta0|``, with zeros replaced by one) so one step-size or stopping
threshold applies to parameters of very different magnitude.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import AmbientIDError, NonFiniteObjective

log = logging.getLogger(__name__)

CONVERGED = "Converged"
MAX_ITER = "MaxIter"
DEGENERATE = "Degenerate"


@dataclass(frozen=True)
class CEConfig:
    n_samples: int = 200
    n_elite: int = 20
    alpha: float = 0.7
    eps: float = 1e-4
    max_iter: int = 200
    seed: int = 0
    bounds: np.ndarray | None = None  # (d, 2) in parameter units

    def __post_init__(self):
        if not 1 <= self.n_elite <= self.n_samples:
            raise ValueError("need 1 <= n_elite <= n_samples")
        # alpha = 1 (no smoothing) is allowed for testing the raw elite update
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.bounds is not None:
            b = np.asarray(self.bounds, dtype=float)
            if b.ndim != 2 or b.shape[1] != 2 or not np.all(b[:, 0] < b[:, 1]):
                raise ValueError("bounds must be (d, 2) with lo < hi")
            object.__setattr__(self, "bounds", b)


@dataclass(frozen=True)
class TraceRow:
    iter: int
    best_f: float
    mean_f_elite: float
    sigma_max: float
    mean: np.ndarray = field(repr=False)
    sigma: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class OptResult:
    theta_post: np.ndarray
    objective_final: float
    iterations: int
    sigma_final: np.ndarray
    trace: list[TraceRow]
    termination: str
    n_evals: int = 0


def _scale_for(theta0, scale):
    if scale is not None:
        return np.asarray(scale, dtype=float)
    s = np.abs(np.asarray(theta0, dtype=float))
    return np.where(s > 0, s, 1.0)


def _safe_eval(f, theta) -> float:
    try:
        v = float(f(theta))
    except (AmbientIDError, FloatingPointError, ValueError, ZeroDivisionError):
        return np.inf
    return v if np.isfinite(v) else np.inf


def cross_entropy(f, theta0, sigma0, cfg: CEConfig = CEConfig(), batch: bool = False,
                  scale=None) -> OptResult:
    """Minimize ``f`` with the smoothed cross-entropy method.

    Each iteration draws ``n_samples`` Gaussian points (clipped to the bounds),
    keeps the ``n_elite`` lowest (ties go to the lower sample index), refits
    the componentwise mean and biased std, and blends both with the previous
    values by ``alpha``.  Stops once every normalized std is below ``eps``.
    With ``batch=True``, ``f`` maps an ``(n, d)`` array to ``n`` values.
    The best point ever evaluated is returned.
    """
    theta0 = np.asarray(theta0, dtype=float)
    sc = _scale_for(theta0, scale)
    m = theta0 / sc
    sd = np.broadcast_to(np.asarray(sigma0, dtype=float), theta0.shape) / sc
    if not np.all(sd > 0):
        raise ValueError("sigma0 must be positive componentwise")
    lo = hi = None
    if cfg.bounds is not None:
        lo, hi = cfg.bounds[:, 0] / sc, cfg.bounds[:, 1] / sc
        if np.any(m < lo) or np.any(m > hi):
            raise ValueError("theta0 lies outside the bounds")

    rng = np.random.default_rng(cfg.seed)
    d = theta0.shape[0]
    best_x, best_f = m.copy(), np.inf
    trace: list[TraceRow] = []
    n_bad = 0
    n_evals = 0
    termination = MAX_ITER
    for it in range(1, cfg.max_iter + 1):
        X = m + sd * rng.standard_normal((cfg.n_samples, d))
        if lo is not None:
            X = np.clip(X, lo, hi)
        thetas = X * sc
        if batch:
            vals = np.asarray(f(thetas), dtype=float)
            vals = np.where(np.isfinite(vals), vals, np.inf)
        else:
            vals = np.array([_safe_eval(f, t) for t in thetas])
        n_evals += cfg.n_samples

        if not np.any(np.isfinite(vals)):
            n_bad += 1
            trace.append(TraceRow(it, best_f, np.inf, float(sd.max()), m * sc, sd * sc))
            if n_bad >= 3:
                termination = DEGENERATE
                break
            continue
        n_bad = 0

        elite = np.argsort(vals, kind="stable")[: cfg.n_elite]
        if vals[elite[0]] < best_f:
            best_f, best_x = float(vals[elite[0]]), X[elite[0]].copy()
        Xe = X[elite]
        m_new = Xe.mean(axis=0)
        sd_new = np.sqrt(np.mean((Xe - m_new) ** 2, axis=0))
        m = cfg.alpha * m_new + (1.0 - cfg.alpha) * m
        sd = cfg.alpha * sd_new + (1.0 - cfg.alpha) * sd
        trace.append(TraceRow(it, best_f, float(np.mean(vals[elite])), float(sd.max()), m * sc, sd * sc))
        if sd.max() < cfg.eps:
            termination = CONVERGED
            break

    log.debug("cross-entropy stopped after %d iterations (%s), best f=%g", len(trace), termination, best_f)
    return OptResult(
        theta_post=best_x * sc,
        objective_final=best_f,
        iterations=len(trace),
        sigma_final=sd * sc,
        trace=trace,
        termination=termination,
        n_evals=n_evals,
    )


def fd_gradient(f, theta, h_rel: float = 1e-6) -> np.ndarray:
    """Central-difference gradient with step ``h_rel * max(|theta_j|, 1e-8)``."""
    theta = np.asarray(theta, dtype=float)
    g = np.empty_like(theta)
    for j in range(theta.shape[0]):
        h = h_rel * max(abs(theta[j]), 1e-8)
        tp, tm = theta.copy(), theta.copy()
        tp[j] += h
        tm[j] -= h
        fp, fm = float(f(tp)), float(f(tm))
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise NonFiniteObjective(f"non-finite objective near theta={theta}")
        g[j] = (fp - fm) / (tp[j] - tm[j])
    return g


def quasi_newton(f, theta0, bounds=None, tol: float = 1e-6, max_iter: int = 200,
                 h_rel: float = 1e-6, scale=None) -> OptResult:
    """Projected BFGS on finite-difference gradients with Armijo backtracking.

    ``tol`` applies to the norm of the projected gradient in normalized
    coordinates.  A failed line search ends the run with ``Degenerate`` and
    the best point so far.
    """
    theta0 = np.asarray(theta0, dtype=float)
    sc = _scale_for(theta0, scale)
    d = theta0.shape[0]
    if bounds is not None:
        b = np.asarray(bounds, dtype=float)
        lo, hi = b[:, 0] / sc, b[:, 1] / sc
    else:
        lo, hi = np.full(d, -np.inf), np.full(d, np.inf)

    n_evals = 0

    def fx(x):
        nonlocal n_evals
        n_evals += 1
        return _safe_eval(f, x * sc)

    def grad(x):
        nonlocal n_evals
        n_evals += 2 * d
        # keep the stencil inside the box
        h = h_rel * np.maximum(np.abs(x), 1e-8)
        xc = np.clip(x, lo + h, hi - h)
        return fd_gradient(lambda z: _safe_eval(f, z * sc), xc, h_rel)

    def projected(x, g):
        pg = g.copy()
        pg[(x <= lo) & (g > 0)] = 0.0
        pg[(x >= hi) & (g < 0)] = 0.0
        return pg

    x = np.clip(theta0 / sc, lo, hi)
    f0 = fx(x)
    trace: list[TraceRow] = []
    termination = MAX_ITER
    if not np.isfinite(f0):
        return OptResult(x * sc, f0, 0, np.zeros(d), trace, DEGENERATE, n_evals)
    try:
        g = grad(x)
    except NonFiniteObjective:
        return OptResult(x * sc, f0, 0, np.zeros(d), trace, DEGENERATE, n_evals)
    Hinv = np.eye(d)
    c1 = 1e-4
    for it in range(1, max_iter + 1):
        pg = projected(x, g)
        if np.linalg.norm(pg) < tol:
            termination = CONVERGED
            break
        # variables pinned at a bound are held fixed for this step
        free = pg != 0.0
        p = np.zeros(d)
        p[free] = -Hinv[np.ix_(free, free)] @ g[free]
        if g @ p >= 0:
            Hinv = np.eye(d)
            p[free] = -g[free]
        t = 1.0
        accepted = False
        while t > 1e-14:
            x_new = np.clip(x + t * p, lo, hi)
            f_new = fx(x_new)
            if np.isfinite(f_new) and f_new <= f0 + c1 * (g @ (x_new - x)):
                accepted = True
                break
            t *= 0.5
        if not accepted:
            termination = DEGENERATE
            break
        try:
            g_new = grad(x_new)
        except NonFiniteObjective:
            x, f0 = x_new, f_new
            termination = DEGENERATE
            break
        s = x_new - x
        yv = g_new - g
        sy = s @ yv
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(yv):
            rho = 1.0 / sy
            V = np.eye(d) - rho * np.outer(s, yv)
            Hinv = V @ Hinv @ V.T + rho * np.outer(s, s)
        x, f0, g = x_new, f_new, g_new
        trace.append(TraceRow(it, f0, f0, float(np.max(np.abs(s))), x * sc, np.abs(s) * sc))
        if np.max(np.abs(s)) == 0.0:
            termination = CONVERGED
            break

    return OptResult(
        theta_post=x * sc,
        objective_final=f0,
        iterations=len(trace),
        sigma_final=np.zeros(d),
        trace=trace,
        termination=termination,
        n_evals=n_evals,
    )
