"""Vectorized panel Gauss-Legendre quadrature helpers.

The analysis integrals are smooth within known breakpoints but span several
decades of radius, so panels are laid out geometrically and each panel is
integrated with a fixed-order Gauss-Legendre rule. Everything broadcasts
over a leading batch axis so a whole grid of outer radii can share one
integrand evaluation.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

__all__ = [
    "gauss_legendre",
    "panel_nodes",
    "geometric_edges",
    "linear_edges",
]


@lru_cache(maxsize=None)
def gauss_legendre(order: int):
    """Nodes and weights of the Gauss-Legendre rule on [-1, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def panel_nodes(edges: np.ndarray, order: int):
    """Map a rule of the given order onto every panel.

    Parameters
    ----------
    edges : ndarray, shape (..., P+1)
        Panel boundaries, nondecreasing along the last axis. Zero-width
        panels contribute nothing.
    order : int
        Gauss-Legendre order per panel.

    Returns
    -------
    nodes, weights : ndarray, shape (..., P * order)
        Quadrature nodes and weights; ``(f(nodes) * weights).sum(-1)``
        integrates ``f`` over the union of panels.
    """
    edges = np.asarray(edges, dtype=float)
    x, w = gauss_legendre(order)
    lo = edges[..., :-1, None]
    hi = edges[..., 1:, None]
    half = 0.5 * (hi - lo)
    nodes = lo + half * (x + 1.0)
    weights = half * w
    shape = edges.shape[:-1] + (-1,)
    return nodes.reshape(shape), weights.reshape(shape)


def geometric_edges(lo, hi, panels: int):
    """Geometrically spaced panel edges between positive bounds.

    Broadcasts over array bounds; rows with ``hi <= lo`` collapse to
    zero-width panels at ``lo``.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    lo_safe = np.maximum(lo, 1e-300)
    ratio = np.maximum(hi, lo_safe) / lo_safe
    t = np.linspace(0.0, 1.0, panels + 1)
    edges = lo_safe[..., None] * ratio[..., None] ** t
    return np.where((hi > lo)[..., None], edges, lo[..., None])


def linear_edges(lo, hi, panels: int):
    """Uniformly spaced panel edges; broadcasts like geometric_edges."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    t = np.linspace(0.0, 1.0, panels + 1)
    edges = lo[..., None] + (hi - lo)[..., None] * t
    return np.where((hi > lo)[..., None], edges, lo[..., None])
