"""Caching-probability optimization under a per-SBS storage budget.

The dense-regime objective separates across files, so the budgeted problem
is solved through its Lagrangian dual: for a fixed multiplier each file
picks its own caching probability independently, and the multiplier is
driven by bisection until the probabilities sum to the cache size. The
per-file subproblems are themselves solved by bisection on the stationarity
condition, with the interval endpoints kept as candidates so boundary
optima are never missed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analysis import QuadSpec
from .asymptotics import DenseObjectiveTerms
from .catalog import CacheVector, ZipfCatalog
from .channel import ConfigError, NetworkConfig, PathLossModel

__all__ = [
    "OptimizerOptions",
    "OptimizerResult",
    "OptimizerError",
    "solve_subproblem",
    "optimize_caching",
]


@dataclass(frozen=True)
class OptimizerOptions:
    """Termination controls for the dual search."""

    max_iter: int = 200
    budget_tol: float = 1e-9
    subproblem_iters: int = 60

    def __post_init__(self) -> None:
        if self.max_iter < 10:
            raise ConfigError("max_iter too small to bracket the multiplier")
        if self.budget_tol <= 0:
            raise ConfigError("budget_tol must be positive")


@dataclass(frozen=True)
class OptimizerResult:
    """Optimized placement with diagnostics of the dual search."""

    cache: CacheVector
    objective: float
    gamma: float
    iterations: int
    budget_residual: float


class OptimizerError(RuntimeError):
    """Dual search failed to meet the budget tolerance.

    Carries the best feasible iterate found so the caller can decide
    whether the residual is acceptable.
    """

    def __init__(self, message: str, result: OptimizerResult):
        super().__init__(message)
        self.result = result


def solve_subproblem(
    terms: DenseObjectiveTerms, gamma: float, iters: int = 60
) -> np.ndarray:
    """Per-file maximizers of ``value_n(s) - gamma * s`` over ``[0, 1]``.

    Stationary points are located by vectorized bisection of the derivative
    across all files at once; the returned probability for each file is the
    best of the stationary point and the two interval ends, preferring the
    smaller probability on ties so the dual sum is right-continuous.
    """
    n = terms.catalog.n_files
    lo = np.zeros(n)
    hi = np.ones(n)
    d_lo = terms.file_deriv(lo) - gamma
    d_hi = terms.file_deriv(hi) - gamma
    bracket = (d_lo > 0) & (d_hi < 0)
    root = np.where(d_lo <= 0, 0.0, 1.0)
    if bracket.any():
        a = np.zeros(n)
        b = np.ones(n)
        for _ in range(iters):
            mid = 0.5 * (a + b)
            d_mid = terms.file_deriv(mid) - gamma
            go_right = bracket & (d_mid > 0)
            a = np.where(go_right, mid, a)
            b = np.where(bracket & ~go_right, mid, b)
        root = np.where(bracket, 0.5 * (a + b), root)
    candidates = np.stack([np.zeros(n), root, np.ones(n)])
    q = terms.catalog.pmf
    scores = np.stack(
        [terms.file_value(c) * q - gamma * c for c in candidates]
    )
    # Prefer the smaller candidate when scores tie to within float noise.
    scores = scores - 1e-13 * np.arange(3)[:, None]
    pick = scores.argmax(axis=0)
    return candidates[pick, np.arange(n)]


def optimize_caching(
    catalog: ZipfCatalog,
    cache_size: int,
    cfg: NetworkConfig,
    tu_model: PathLossModel,
    uav_model: PathLossModel,
    quad: QuadSpec | None = None,
    options: OptimizerOptions | None = None,
    terms: DenseObjectiveTerms | None = None,
) -> OptimizerResult:
    """Maximize the dense-regime hit rate subject to the storage budget.

    The multiplier is bracketed by doubling and then bisected; when the
    optimal per-file probabilities jump across the final multiplier (a tie
    between two candidate placements) the two sides are blended convexly so
    the budget is met exactly.
    """
    opts = options or OptimizerOptions()
    if not 1 <= cache_size <= catalog.n_files:
        raise ConfigError("cache size must lie in [1, n_files]")
    if terms is None:
        terms = DenseObjectiveTerms(catalog, cfg, tu_model, uav_model, quad)

    def packed(probs: np.ndarray, gamma: float, iters: int) -> OptimizerResult:
        vec = CacheVector(probs, cache_size)
        # Storage is an inequality constraint, so only overage counts as a
        # residual; an interior optimum may legitimately leave budget unused.
        return OptimizerResult(
            cache=vec,
            objective=terms.value(probs),
            gamma=gamma,
            iterations=iters,
            budget_residual=float(max(0.0, probs.sum() - cache_size)),
        )

    if cache_size == catalog.n_files:
        return packed(np.ones(catalog.n_files), 0.0, 0)

    s_at = {}

    def budget(gamma: float) -> float:
        if gamma not in s_at:
            s_at[gamma] = solve_subproblem(terms, gamma, opts.subproblem_iters)
        return float(s_at[gamma].sum())

    iters = 0
    lo = 0.0
    if budget(lo) <= cache_size + opts.budget_tol:
        return packed(s_at[lo], lo, 0)
    hi = max(terms.file_deriv(np.zeros(catalog.n_files)).max(), 1e-9)
    while budget(hi) > cache_size and iters < opts.max_iter:
        hi *= 2.0
        iters += 1
    if budget(hi) > cache_size:
        raise OptimizerError(
            "failed to bracket the budget multiplier",
            packed(s_at[hi] * (cache_size / s_at[hi].sum()), hi, iters),
        )
    while iters < opts.max_iter:
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if budget(mid) > cache_size:
            lo = mid
        else:
            hi = mid
        iters += 1
        if budget(hi) >= cache_size - opts.budget_tol:
            break

    sum_hi = budget(lo)
    sum_lo = budget(hi)
    if sum_hi - sum_lo < 1e-30:
        probs = s_at[hi]
    else:
        theta = (cache_size - sum_lo) / (sum_hi - sum_lo)
        theta = min(max(theta, 0.0), 1.0)
        probs = theta * s_at[lo] + (1.0 - theta) * s_at[hi]
    probs = np.clip(probs, 0.0, 1.0)
    result = packed(probs, hi, iters)
    if result.budget_residual > opts.budget_tol:
        raise OptimizerError(
            f"budget residual {result.budget_residual:.3e} exceeds tolerance",
            result,
        )
    return result
