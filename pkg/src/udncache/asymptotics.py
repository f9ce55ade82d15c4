"""Closed forms and dense-deployment approximations of the hit rate.

Three regimes are covered. First, a single-slope always-LoS channel makes
the averaged success probability fully closed-form in a Gauss
hypergeometric factor. Second, in the dense regime the two-tier piecewise
channel admits a separable objective whose per-file integrands reuse the
interference profiles of :mod:`udncache.analysis`; this objective is what
the placement optimizer maximizes. Third, limits in the deployment density
and in the popularity skew bound what any placement can achieve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import analysis
from .catalog import CacheVector, ZipfCatalog
from .channel import ConfigError, NetworkConfig, PathLossModel, equiv_dist_r1
from .quadrature import geometric_edges, panel_nodes

__all__ = [
    "SingleSlopeModel",
    "hyp2f1_1b",
    "f_delta_alpha",
    "avg_sdp_single_slope",
    "avg_sdp_single_slope_quad",
    "limit_dense",
    "limit_beta",
    "DenseObjectiveTerms",
    "dense_objective_terms",
    "avg_sdp_dense",
]

_SERIES_TOL = 1e-15
_SERIES_MAX = 500_000


@dataclass(frozen=True)
class SingleSlopeModel:
    """Always-LoS power-law channel ``l**-alpha`` at a fixed height offset."""

    alpha: float
    height_diff: float

    def __post_init__(self) -> None:
        if self.alpha <= 2:
            raise ConfigError("alpha must exceed 2 for finite interference")
        if self.height_diff < 0:
            raise ConfigError("height_diff must be nonnegative")


def hyp2f1_1b(b: float, c: float, x: float) -> float:
    """Gauss hypergeometric ``2F1(1, b; c; x)`` by direct series.

    Requires ``c > b > 0`` and ``|x| < 1``; with a unit first parameter the
    series term ratio is ``(k+1)(b+k) x / ((c+k)(k+1))``, so convergence is
    geometric in ``|x|``. Terms are accumulated until they fall below the
    running sum by a factor of 1e-15.
    """
    if not c > b > 0:
        raise ConfigError("need c > b > 0")
    if not abs(x) < 1:
        raise ConfigError("series argument must satisfy |x| < 1")
    total = 1.0
    term = 1.0
    k = 0
    while k < _SERIES_MAX:
        term *= (b + k) * x / (c + k)
        total += term
        k += 1
        if abs(term) < _SERIES_TOL * abs(total):
            break
    return total


def f_delta_alpha(delta: float, alpha: float) -> float:
    """Interference factor ``(2 d/(a-2)) 2F1(1, 1-2/a; 2-2/a; -d)``.

    For thresholds at or above one the alternating series is fragile, so
    the Pfaff transform maps the argument to ``d/(1+d)`` inside the unit
    interval: ``2F1(1, b; c; -d) = 2F1(1, c-b; c; d/(1+d)) / (1+d)``.
    """
    if alpha <= 2:
        raise ConfigError("alpha must exceed 2")
    if delta < 0:
        raise ConfigError("threshold must be nonnegative")
    if delta == 0:
        return 0.0
    b = 1.0 - 2.0 / alpha
    c = 2.0 - 2.0 / alpha
    if delta < 0.9:
        hyp = hyp2f1_1b(b, c, -delta)
    else:
        hyp = hyp2f1_1b(c - b, c, delta / (1.0 + delta)) / (1.0 + delta)
    return 2.0 * delta / (alpha - 2.0) * hyp


def avg_sdp_single_slope(
    catalog: ZipfCatalog,
    cache: CacheVector,
    cfg: NetworkConfig,
    model: SingleSlopeModel,
) -> float:
    """Closed-form averaged success probability on the single-slope channel.

    Every file tier contributes ``Q_n S_n exp(-pi h^2 u F) / (S_n + (u/s) F)``
    with ``F = f_delta_alpha``; activation is taken in its dense form, where
    the active density of a tier equals the density of its requesters.
    """
    f = f_delta_alpha(cfg.sinr_threshold, model.alpha)
    lam_ratio = cfg.ue_density / cfg.sbs_density
    pref = math.exp(
        -math.pi * model.height_diff**2 * cfg.ue_density * f
    )
    s = cache.clipped()
    q = catalog.pmf
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(s > 0, q * s * pref / (s + lam_ratio * f), 0.0)
    return float(terms.sum())


def avg_sdp_single_slope_quad(
    catalog: ZipfCatalog,
    cache: CacheVector,
    cfg: NetworkConfig,
    model: SingleSlopeModel,
    panels: int = 40,
    order: int = 16,
) -> float:
    """Quadrature of the single-slope integrand before its final integration.

    Integrates ``pi s S_n exp(-pi s S_n t) exp(-pi u (t + h^2) F)`` over the
    squared serving radius ``t`` directly, which checks the closed form's
    last analytic step independently.
    """
    f = f_delta_alpha(cfg.sinr_threshold, model.alpha)
    lam_s = cfg.sbs_density
    lam_u = cfg.ue_density
    h2 = model.height_diff**2
    s = cache.clipped()
    q = catalog.pmf
    total = 0.0
    for n in range(catalog.n_files):
        if s[n] <= 0:
            continue
        rate = math.pi * (lam_s * s[n] + lam_u * f)
        t_hi = 45.0 / rate
        edges = np.concatenate(
            [[0.0], geometric_edges(t_hi / 4000.0, t_hi, panels)]
        )
        t, w = panel_nodes(edges, order)
        vals = (
            math.pi
            * lam_s
            * s[n]
            * np.exp(-math.pi * lam_s * s[n] * t)
            * np.exp(-math.pi * lam_u * (t + h2) * f)
        )
        total += q[n] * float((vals * w).sum())
    return total


def limit_dense(
    catalog: ZipfCatalog,
    cache_size: int,
    cfg: NetworkConfig,
    model: SingleSlopeModel,
):
    """SBS-densification limits of the two canonical placements.

    Returns ``(pcs_limit, ucs_limit)``: with ever more SBSs the interference
    factor in the denominator vanishes, leaving the popularity mass of the
    cached files times the height-gap attenuation.
    """
    f = f_delta_alpha(cfg.sinr_threshold, model.alpha)
    pref = math.exp(-math.pi * model.height_diff**2 * cfg.ue_density * f)
    if not 1 <= cache_size <= catalog.n_files:
        raise ConfigError("cache size out of range")
    pcs = pref * float(catalog.pmf[:cache_size].sum())
    ucs = pref
    return pcs, ucs


def limit_beta(
    cache_size: int, n_files: int, cfg: NetworkConfig, model: SingleSlopeModel
):
    """Popularity-skew limits: all requests concentrate on the top file.

    Returns ``(pcs_limit, ucs_limit)``. The top file is surely cached under
    popularity placement; under uniform placement it is cached with
    probability ``M/N``, which inflates the interference ratio accordingly.
    """
    if not 1 <= cache_size <= n_files:
        raise ConfigError("cache size out of range")
    f = f_delta_alpha(cfg.sinr_threshold, model.alpha)
    pref = math.exp(-math.pi * model.height_diff**2 * cfg.ue_density * f)
    ratio = cfg.ue_density / cfg.sbs_density
    pcs = pref / (1.0 + ratio * f)
    ucs = pref / (1.0 + (n_files / cache_size) * ratio * f)
    return pcs, ucs


# ---------------------------------------------------------------------------
# Dense-regime objective on the two-tier piecewise channel
# ---------------------------------------------------------------------------


class DenseObjectiveTerms:
    """Precomputed dense-regime integrands shared by all placements.

    In the dense regime the serving link is LoS, association is
    nearest-neighbor, and the active density of tier ``i`` equals its
    requester density, which removes every dependence on the placement from
    the interference profiles. For the ground grid the profiles ``b`` and
    ``c`` (other-tier and same-tier, both nonpositive) enter as
    ``exp(sum_i Q_i b + Q_n (c - b))``; ``e`` and ``f`` play the same roles
    on the aerial grid. What remains per file is a one-dimensional integral
    against ``exp(-pi s S_n r^2)``, evaluated here on shared panel nodes.
    """

    def __init__(
        self,
        catalog: ZipfCatalog,
        cfg: NetworkConfig,
        tu_model: PathLossModel,
        uav_model: PathLossModel,
        quad: analysis.QuadSpec | None = None,
    ):
        quad = quad or analysis.QuadSpec()
        self.catalog = catalog
        self.cfg = cfg
        self.quad = quad
        delta = cfg.sinr_threshold
        lam_u = cfg.ue_density
        self._grids = []
        for label, model, weight in (
            ("tu", tu_model, cfg.tu_density / lam_u),
            ("uav", uav_model, cfg.au_density / lam_u),
        ):
            if weight <= 0:
                continue
            r_end = model.breakpoints[0] if model.breakpoints else 1e4
            r_seed = min(0.02 / math.sqrt(math.pi * cfg.sbs_density), r_end / 50.0)
            decades = math.log10(r_end / r_seed)
            panels = max(int(math.ceil(decades * quad.outer_panels_per_decade)), 6)
            edges = np.concatenate(
                [[0.0], geometric_edges(r_seed, r_end, panels)]
            )
            r, w = panel_nodes(edges, quad.outer_order)
            zref = model.gain_los(r)
            zero = np.zeros_like(r)
            r1 = equiv_dist_r1(model, r)
            j_other = analysis.interference_integral(
                model, delta, zref, zero, "los", quad
            ) + analysis.interference_integral(model, delta, zref, zero, "nlos", quad)
            j_same = analysis.interference_integral(
                model, delta, zref, r, "los", quad
            ) + analysis.interference_integral(model, delta, zref, r1, "nlos", quad)
            b = -2.0 * math.pi * lam_u * j_other
            c = -2.0 * math.pi * lam_u * j_same
            mix = (catalog.pmf[:, None] * b[None, :]).sum(axis=0)
            base = weight * 2.0 * math.pi * cfg.sbs_density * r * np.exp(mix)
            rows = base[None, :] * np.exp(
                catalog.pmf[:, None] * (c - b)[None, :]
            )
            self._grids.append(
                {
                    "label": label,
                    "r": r,
                    "w": w,
                    "other": b,
                    "same": c,
                    "decay": math.pi * cfg.sbs_density * r * r,
                    "rows": rows,
                    "weight": weight,
                }
            )
        if not self._grids:
            raise ConfigError("at least one receiver tier must have users")

    @property
    def profiles(self):
        """(other-tier, same-tier) exponent profiles per receiver grid."""
        return [(g["other"], g["same"]) for g in self._grids]

    def value_parts(self, probs: np.ndarray) -> list:
        """Per-receiver-grid contributions of a placement vector."""
        probs = np.asarray(probs, dtype=float)
        q = self.catalog.pmf
        out = []
        for g in self._grids:
            damp = np.exp(-np.outer(probs, g["decay"]))
            per_file = (g["rows"] * damp * g["w"][None, :]).sum(axis=1)
            out.append(float((q * probs * per_file).sum()))
        return out

    def value(self, probs: np.ndarray) -> float:
        """Dense-regime averaged success probability of a placement."""
        return float(sum(self.value_parts(probs)))

    def tier_values(self, probs: np.ndarray) -> dict:
        """Per-tier averages, unweighted by the tier population share."""
        return {
            g["label"]: part / g["weight"]
            for g, part in zip(self._grids, self.value_parts(probs))
        }

    def file_value(self, probs: np.ndarray) -> np.ndarray:
        """Per-file success probabilities of a placement."""
        probs = np.asarray(probs, dtype=float)
        out = np.zeros(self.catalog.n_files)
        for g in self._grids:
            damp = np.exp(-np.outer(probs, g["decay"]))
            out = out + probs * (g["rows"] * damp * g["w"][None, :]).sum(axis=1)
        return out

    def file_deriv(self, probs: np.ndarray) -> np.ndarray:
        """Derivative of ``Q_n S_n <integral>`` with respect to each ``S_n``."""
        probs = np.asarray(probs, dtype=float)
        q = self.catalog.pmf
        out = np.zeros(self.catalog.n_files)
        for g in self._grids:
            damp = np.exp(-np.outer(probs, g["decay"]))
            integrand = g["rows"] * damp * (1.0 - probs[:, None] * g["decay"][None, :])
            out = out + q * (integrand * g["w"][None, :]).sum(axis=1)
        return out


def dense_objective_terms(
    catalog: ZipfCatalog,
    cfg: NetworkConfig,
    tu_model: PathLossModel,
    uav_model: PathLossModel,
    quad: analysis.QuadSpec | None = None,
) -> DenseObjectiveTerms:
    """Build the shared dense-regime integrands for a deployment."""
    return DenseObjectiveTerms(catalog, cfg, tu_model, uav_model, quad)


def avg_sdp_dense(
    catalog: ZipfCatalog,
    cache: CacheVector,
    cfg: NetworkConfig,
    tu_model: PathLossModel,
    uav_model: PathLossModel,
    quad: analysis.QuadSpec | None = None,
    terms: DenseObjectiveTerms | None = None,
) -> float:
    """Dense-regime averaged success probability for one placement."""
    if terms is None:
        terms = DenseObjectiveTerms(catalog, cfg, tu_model, uav_model, quad)
    return terms.value(cache.clipped())
