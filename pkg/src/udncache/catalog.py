"""File catalog popularity and probabilistic cache placement."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import ConfigError

__all__ = [
    "zipf_pmf",
    "ZipfCatalog",
    "CacheVector",
    "ucs_vector",
    "pcs_vector",
]

BUDGET_TOL = 1e-6


def zipf_pmf(n_files: int, beta: float) -> np.ndarray:
    """Zipf request probabilities ``rank**-beta`` normalized over the catalog.

    Parameters
    ----------
    n_files : int
        Catalog size, at least 1.
    beta : float
        Skew exponent, nonnegative. ``beta = 0`` gives a uniform catalog.
    """
    if n_files < 1:
        raise ConfigError("catalog must contain at least one file")
    if beta < 0:
        raise ConfigError("zipf exponent must be nonnegative")
    ranks = np.arange(1, n_files + 1, dtype=float)
    weights = ranks ** -beta
    return weights / weights.sum()


@dataclass(frozen=True)
class ZipfCatalog:
    """Catalog of ``n_files`` files requested with Zipf popularity."""

    n_files: int
    beta: float
    pmf: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "pmf", zipf_pmf(self.n_files, self.beta))

    def with_pmf(self, pmf) -> "ZipfCatalog":
        """Copy of this catalog with an explicit request distribution."""
        pmf = np.asarray(pmf, dtype=float)
        if pmf.shape != (self.n_files,):
            raise ConfigError("pmf length must match the catalog size")
        if np.any(pmf < 0) or not np.isclose(pmf.sum(), 1.0, atol=1e-9):
            raise ConfigError("pmf must be a probability vector")
        cat = ZipfCatalog(self.n_files, self.beta)
        object.__setattr__(cat, "pmf", pmf)
        return cat


@dataclass(frozen=True)
class CacheVector:
    """Per-file caching probabilities with a cache-size budget.

    ``probs[n]`` is the probability that a given SBS stores file ``n``; the
    expectation of stored files, ``probs.sum()``, must not exceed the cache
    size ``size``. Placement-optimal vectors use the budget exactly.
    """

    probs: np.ndarray
    size: int

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=float)
        object.__setattr__(self, "probs", probs)
        if probs.ndim != 1 or probs.size < 1:
            raise ConfigError("caching probabilities must be a 1-d vector")
        if self.size < 1 or self.size > probs.size:
            raise ConfigError("cache size must lie in [1, n_files]")
        if np.any(probs < -BUDGET_TOL) or np.any(probs > 1 + BUDGET_TOL):
            raise ConfigError("caching probabilities must lie in [0, 1]")
        if probs.sum() > self.size + BUDGET_TOL:
            raise ConfigError("caching probabilities exceed the cache budget")

    @property
    def budget_used(self) -> float:
        return float(self.probs.sum())

    def clipped(self) -> np.ndarray:
        """Probabilities clipped to [0, 1] for numerical consumers."""
        return np.clip(self.probs, 0.0, 1.0)


def ucs_vector(n_files: int, cache_size: int) -> CacheVector:
    """Uniform placement: every file cached with probability ``M / N``."""
    if n_files < 1 or not 1 <= cache_size <= n_files:
        raise ConfigError("need 1 <= cache_size <= n_files")
    return CacheVector(np.full(n_files, cache_size / n_files), cache_size)


def pcs_vector(n_files: int, cache_size: int) -> CacheVector:
    """Popularity placement: the ``M`` most requested files cached surely."""
    if n_files < 1 or not 1 <= cache_size <= n_files:
        raise ConfigError("need 1 <= cache_size <= n_files")
    probs = np.zeros(n_files)
    probs[:cache_size] = 1.0
    return CacheVector(probs, cache_size)
