"""Hit-rate analysis for probabilistic caching with on-off small cells.

The quantity of interest is the probability that a typical receiver at the
origin is served above a SINR threshold by the nearest-in-gain SBS that
stores its requested file. SBS locations form a homogeneous PPP; caching
decisions thin it into independent per-file tiers, and only SBSs with at
least one associated requester are transmitting. Under Rayleigh fading the
success probability factors into an association density times a Laplace
functional of the active interference field, leaving two nested radial
integrals per file which this module evaluates with vectorized panel
quadrature plus analytic far tails.

Conventions: the desired link may be LoS or NLoS; conditioned on a desired
state with gain ``zeta`` at radius ``r``, same-tier interferers of the same
state are excluded inside ``r`` and of the opposite state inside the
equal-gain radius, while other-tier interferers are unconstrained.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .catalog import CacheVector, ZipfCatalog
from .channel import (
    ConfigError,
    NetworkConfig,
    PathLossModel,
    equiv_dist_r1,
    equiv_dist_r2,
)
from .quadrature import geometric_edges, linear_edges, panel_nodes

__all__ = [
    "ACTIVE_EXACT",
    "ACTIVE_APPROX",
    "QuadSpec",
    "TierContext",
    "SdpReport",
    "pr_active",
    "pr_active_approx",
    "active_weights",
    "assoc_pdf_los",
    "assoc_pdf_nlos",
    "assoc_tail_radius",
    "interference_integral",
    "laplace_interference",
    "sdp_file",
    "sdp_file_terms",
    "tier_report",
    "average_sdp",
    "average_sdp_split",
]

ACTIVE_EXACT = "exact"
ACTIVE_APPROX = "approx"

#: Series length of the analytic interference tails.
_TAIL_TERMS = 4


@dataclass(frozen=True)
class QuadSpec:
    """Resolution knobs for the panel quadrature engine."""

    outer_panels_per_decade: int = 8
    outer_order: int = 16
    inner_panels: int = 24
    inner_order: int = 16
    tail_big: float = 1e4
    assoc_tail_exp: float = 70.0
    s_floor: float = 1e-3
    estimate_tol: bool = True

    def refined(self) -> "QuadSpec":
        """A finer spec used to estimate the quadrature tolerance."""
        return replace(
            self,
            outer_panels_per_decade=self.outer_panels_per_decade + 5,
            outer_order=self.outer_order + 8,
            inner_panels=self.inner_panels + 10,
            inner_order=self.inner_order + 8,
            tail_big=self.tail_big * 10.0,
            estimate_tol=False,
        )


@dataclass
class TierContext:
    """Catalog, placement and deployment bundle handed to the engines."""

    catalog: ZipfCatalog
    cache: CacheVector
    cfg: NetworkConfig
    active_mode: str = ACTIVE_EXACT
    quad: QuadSpec = field(default_factory=QuadSpec)

    def __post_init__(self) -> None:
        if self.active_mode not in (ACTIVE_EXACT, ACTIVE_APPROX):
            raise ConfigError("active_mode must be 'exact' or 'approx'")
        if self.catalog.n_files != self.cache.probs.size:
            raise ConfigError("catalog and cache vector sizes differ")


@dataclass
class SdpReport:
    """Per-file and averaged success probabilities for one receiver tier."""

    tier: str
    per_file: np.ndarray
    per_file_terms: dict
    average: float
    tol: float | None = None
    components: tuple = ()


# ---------------------------------------------------------------------------
# Activation
# ---------------------------------------------------------------------------


def pr_active(q: float, ue_density: float, sbs_density: float) -> float:
    """Probability that an SBS serves at least one of its requesters.

    Uses the gamma-weighted cell-load model ``1 - (1 + u/(q s))**-q`` for
    requester density ``u`` and SBS density ``s``; apply it per tier by
    passing the thinned densities.
    """
    if sbs_density <= 0:
        raise ConfigError("sbs_density must be positive")
    if ue_density < 0:
        raise ConfigError("ue_density must be nonnegative")
    if q <= 0:
        raise ConfigError("q must be positive")
    return 1.0 - (1.0 + ue_density / (q * sbs_density)) ** -q


def pr_active_approx(q_n: float, s_n: float, cfg: NetworkConfig) -> float:
    """Dense-limit activation probability ``min(1, Q_n u / (S_n s))``."""
    if s_n <= 0:
        raise ConfigError("caching probability must be positive here")
    return min(1.0, q_n * cfg.ue_density / (s_n * cfg.sbs_density))


def active_weights(
    catalog: ZipfCatalog, cache: CacheVector, cfg: NetworkConfig, mode: str
) -> np.ndarray:
    """Active-interferer density per file tier, ``Pr(A_n) S_n lambda_s``."""
    s = cache.clipped()
    out = np.zeros(catalog.n_files)
    for n in range(catalog.n_files):
        if s[n] <= 0:
            continue
        if mode == ACTIVE_APPROX:
            pa = pr_active_approx(catalog.pmf[n], s[n], cfg)
        else:
            pa = pr_active(
                cfg.onoff_q, catalog.pmf[n] * cfg.ue_density, s[n] * cfg.sbs_density
            )
        out[n] = pa * s[n] * cfg.sbs_density
    return out


# ---------------------------------------------------------------------------
# Association distance densities
# ---------------------------------------------------------------------------


def assoc_pdf_los(model: PathLossModel, tier_density: float, r):
    """Density of the serving distance jointly with a LoS serving link.

    The void probability excludes LoS SBSs inside ``r`` and NLoS SBSs inside
    the equal-gain radius of ``r``.
    """
    r = np.asarray(r, dtype=float)
    r1 = equiv_dist_r1(model, r)
    expo = 2.0 * math.pi * tier_density * (model.int_los_r(r) + model.int_nlos_r(r1))
    return np.exp(-expo) * model.los_prob(r) * 2.0 * math.pi * tier_density * r


def assoc_pdf_nlos(model: PathLossModel, tier_density: float, r):
    """Density of the serving distance jointly with an NLoS serving link."""
    r = np.asarray(r, dtype=float)
    r2 = equiv_dist_r2(model, r)
    expo = 2.0 * math.pi * tier_density * (model.int_los_r(r2) + model.int_nlos_r(r))
    return (
        np.exp(-expo) * (1.0 - model.los_prob(r)) * 2.0 * math.pi * tier_density * r
    )


def _assoc_exponents(model: PathLossModel, r):
    """Void exponents (per unit density) of the two serving-state events."""
    r = np.asarray(r, dtype=float)
    r1 = equiv_dist_r1(model, r)
    r2 = equiv_dist_r2(model, r)
    e_los = 2.0 * math.pi * (model.int_los_r(r) + model.int_nlos_r(r1))
    e_nlos = 2.0 * math.pi * (model.int_los_r(r2) + model.int_nlos_r(r))
    return e_los, e_nlos


def assoc_tail_radius(model: PathLossModel, tier_density: float, eps: float) -> float:
    """Radius beyond which the serving SBS lies with probability <= eps."""
    if tier_density <= 0:
        raise ConfigError("tier_density must be positive")
    if not 0 < eps < 1:
        raise ConfigError("eps must lie in (0, 1)")

    def tail_bound(r):
        e_los, e_nlos = _assoc_exponents(model, np.array([r]))
        t = tier_density
        return math.exp(-t * e_los[0]) + math.exp(-t * e_nlos[0])

    r = 1.0 / math.sqrt(math.pi * tier_density)
    while tail_bound(r) > eps and r < 1e8:
        r *= 2.0
    lo, hi = r / 2.0, r
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if tail_bound(mid) > eps:
            lo = mid
        else:
            hi = mid
    return hi


# ---------------------------------------------------------------------------
# Interference integrals
# ---------------------------------------------------------------------------


def _tail_series_flat(c, alpha, u0, h):
    """``int_u0^inf u (u^2+h^2)^(-k a/2) du`` summed against ``(-1/c)**k``.

    Exact term-by-term: the substitution ``w = u^2 + h^2`` integrates each
    power directly. Valid once ``c * l(u0)**alpha`` is large.
    """
    l2 = u0 * u0 + h * h
    out = np.zeros(np.shape(c))
    sign = 1.0
    for k in range(1, _TAIL_TERMS + 1):
        ka = k * alpha
        out = out + sign * c ** -float(k) * l2 ** (1.0 - 0.5 * ka) / (ka - 2.0)
        sign = -sign
    return out


def _tail_series_inverse(c, alpha, u0, h):
    """``int_u0^inf (u^2+h^2)^(-k a/2) du`` summed against ``(-1/c)**k``.

    Each term uses a three-term binomial expansion in ``h^2/u^2``, accurate
    to ``(h/u0)**6`` relative, which is far below the quadrature budget at
    the radii where the tail is invoked.
    """
    out = np.zeros(np.shape(c))
    sign = 1.0
    h2 = h * h
    for k in range(1, _TAIL_TERMS + 1):
        m = 0.5 * k * alpha
        term = (
            u0 ** (1.0 - 2.0 * m) / (2.0 * m - 1.0)
            - m * h2 * u0 ** (-1.0 - 2.0 * m) / (2.0 * m + 1.0)
            + 0.5 * m * (m + 1.0) * h2 * h2 * u0 ** (-3.0 - 2.0 * m) / (2.0 * m + 3.0)
        )
        out = out + sign * c ** -float(k) * term
        sign = -sign
    return out


def interference_integral(
    model: PathLossModel,
    delta: float,
    zeta_ref,
    lo,
    state: str,
    quad: QuadSpec = QuadSpec(),
):
    """``int_lo^inf w(u) u / (1 + zeta_ref / (delta zeta_state(u))) du``.

    ``state`` selects both the interferer gain law and its occurrence
    weight: ``"los"`` pairs the LoS gain with the LoS probability, and
    ``"nlos"`` the NLoS gain with its complement. Broadcasts over
    ``zeta_ref`` and ``lo``; the integrand is evaluated on geometric panels
    out to where the kernel is dominated by its power-law tail, which is
    then summed analytically.
    """
    zeta_ref = np.asarray(zeta_ref, dtype=float)
    lo = np.broadcast_to(np.asarray(lo, dtype=float), zeta_ref.shape).copy()
    los = state == "los"
    if not los and state != "nlos":
        raise ConfigError("state must be 'los' or 'nlos'")

    last = model.segments[-1]
    amp = last.amp_los if los else last.amp_nlos
    alpha = last.exp_los if los else last.exp_nlos
    h = model.height_diff
    c = zeta_ref / (delta * amp)

    # Numeric range end: the kernel must be deep in its power-law tail, the
    # exponential part of the far LoS law must be dead, and every breakpoint
    # must be inside.
    l_u = (quad.tail_big / np.minimum(c, quad.tail_big / 1e-290)) ** (1.0 / alpha)
    u_end = np.sqrt(np.maximum(l_u * l_u - h * h, 0.0))
    floor = max(
        last.los_prob.min_tail_radius(),
        2.0 * (model.breakpoints[-1] if model.breakpoints else h),
    )
    u_end = np.maximum(u_end, floor)

    gain = model.gain_los if los else model.gain_nlos

    def weight(u):
        p = model.los_prob(u)
        return p if los else 1.0 - p

    def kernel(u, zref_col):
        return weight(u) * u / (1.0 + zref_col / (delta * gain(u)))

    total = np.zeros(zeta_ref.shape)
    zcol = zeta_ref[..., None]
    top = np.maximum(u_end, lo)
    bounds = [np.asarray(lo)] + [
        np.clip(np.full_like(lo, b), lo, top) for b in model.breakpoints
    ] + [top]
    seed_scale = h / 4.0
    with np.errstate(divide="ignore", over="ignore"):
        for a, b in zip(bounds, bounds[1:]):
            seed_hi = np.minimum(np.maximum(a, seed_scale), b)
            nodes, wts = panel_nodes(linear_edges(a, seed_hi, 2), quad.inner_order)
            total = total + (kernel(nodes, zcol) * wts).sum(axis=-1)
            nodes, wts = panel_nodes(
                geometric_edges(seed_hi, b, quad.inner_panels), quad.inner_order
            )
            total = total + (kernel(nodes, zcol) * wts).sum(axis=-1)

    # Analytic tail beyond the numeric range.
    u0 = np.maximum(u_end, lo)
    w0, w1 = last.los_prob.tail_coeffs()
    if not los:
        w0, w1 = 1.0 - w0, -w1
    if w0 != 0.0:
        total = total + w0 * _tail_series_flat(c, alpha, u0, h)
    if w1 != 0.0:
        total = total + w1 * _tail_series_inverse(c, alpha, u0, h)
    return total


def laplace_interference(
    ctx: TierContext, model: PathLossModel, n: int, gain_at_r, r, desired: str
):
    """Laplace functional of the active interference at ``delta / gain``.

    ``desired`` ("los" or "nlos") fixes the same-tier exclusion radii: the
    same-state exclusion is ``r`` itself and the opposite-state exclusion is
    the equal-gain radius. Other tiers interfere without exclusion, and the
    serving tier enters with its own activation weight.
    """
    if desired not in ("los", "nlos"):
        raise ConfigError("desired must be 'los' or 'nlos'")
    r = np.asarray(r, dtype=float)
    zref = np.asarray(gain_at_r, dtype=float)
    w = active_weights(ctx.catalog, ctx.cache, ctx.cfg, ctx.active_mode)
    w_same = w[n]
    w_other = w.sum() - w_same
    delta = ctx.cfg.sinr_threshold

    if desired == "los":
        lo_los, lo_nlos = r, equiv_dist_r1(model, r)
    else:
        lo_los, lo_nlos = equiv_dist_r2(model, r), r

    zero = np.zeros_like(r)
    j_other = interference_integral(
        model, delta, zref, zero, "los", ctx.quad
    ) + interference_integral(model, delta, zref, zero, "nlos", ctx.quad)
    j_same = interference_integral(
        model, delta, zref, lo_los, "los", ctx.quad
    ) + interference_integral(model, delta, zref, lo_nlos, "nlos", ctx.quad)
    return np.exp(-2.0 * math.pi * (w_other * j_other + w_same * j_same))


# ---------------------------------------------------------------------------
# Engine grids
# ---------------------------------------------------------------------------


class _StateGrid:
    """Outer nodes and interference profiles for one desired-link state."""

    __slots__ = (
        "r",
        "w",
        "zref",
        "state_weight",
        "void_exp",
        "j_other",
        "j_same",
        "seg_idx",
    )


def _support_end(model: PathLossModel, los: bool) -> float:
    """Largest radius where the desired state occurs with probability > 0."""
    end = 0.0
    edges = list(model.breakpoints) + [math.inf]
    for seg, hi in zip(model.segments, edges):
        probe = hi if math.isfinite(hi) else max(seg.r_lo * 2.0, 1.0, seg.r_lo + 1e3)
        p = float(seg.los_prob(np.array([0.5 * (seg.r_lo + probe)]))[0])
        occupied = p > 0.0 if los else p < 1.0
        if occupied:
            end = hi
    return end


def _state_cutoff(
    model: PathLossModel, rho_min: float, los: bool, quad: QuadSpec
) -> float:
    """Radius where the association density of this state has decayed away."""
    support = _support_end(model, los)

    def expo(r):
        e_los, e_nlos = _assoc_exponents(model, np.array([r]))
        return rho_min * (e_los[0] if los else e_nlos[0])

    r = 1.0 / math.sqrt(math.pi * rho_min)
    while expo(r) < quad.assoc_tail_exp and r < 1e8:
        r *= 2.0
    lo = r / 2.0 if r > 1.0 / math.sqrt(math.pi * rho_min) else 0.0
    hi = r
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if expo(mid) < quad.assoc_tail_exp:
            lo = mid
        else:
            hi = mid
    return min(hi, support) if math.isfinite(support) else hi


def _build_state_grid(
    model: PathLossModel,
    delta: float,
    rho_min: float,
    rho_max: float,
    los: bool,
    quad: QuadSpec,
) -> _StateGrid | None:
    r_end = _state_cutoff(model, rho_min, los, quad)
    if r_end <= 0.0:
        return None
    r_seed = min(0.05 / math.sqrt(math.pi * rho_max), r_end / 100.0)
    decades = max(math.log10(r_end / r_seed), 1.0)
    panels = max(int(math.ceil(decades * quad.outer_panels_per_decade)), 4)

    pieces = [r_seed] + [b for b in model.breakpoints if r_seed < b < r_end] + [r_end]
    edges = [np.array([0.0, r_seed])]
    for a, b in zip(pieces, pieces[1:]):
        n_p = max(int(round(panels * math.log10(b / a) / decades)), 2)
        edges.append(geometric_edges(a, b, n_p))
    edges = np.concatenate([edges[0]] + [e[1:] for e in edges[1:]])
    r, w = panel_nodes(edges, quad.outer_order)

    g = _StateGrid()
    g.r = r
    g.w = w
    g.zref = model.gain_los(r) if los else model.gain_nlos(r)
    p = model.los_prob(r)
    g.state_weight = p if los else 1.0 - p
    if los:
        lo_los, lo_nlos = r, equiv_dist_r1(model, r)
        g.void_exp = 2.0 * math.pi * (
            model.int_los_r(r) + model.int_nlos_r(lo_nlos)
        )
    else:
        lo_los, lo_nlos = equiv_dist_r2(model, r), r
        g.void_exp = 2.0 * math.pi * (
            model.int_los_r(lo_los) + model.int_nlos_r(r)
        )
    zero = np.zeros_like(r)
    g.j_other = interference_integral(
        model, delta, g.zref, zero, "los", quad
    ) + interference_integral(model, delta, g.zref, zero, "nlos", quad)
    g.j_same = interference_integral(
        model, delta, g.zref, lo_los, "los", quad
    ) + interference_integral(model, delta, g.zref, lo_nlos, "nlos", quad)
    g.seg_idx = model.segment_index(r)
    return g


class _TierEngine:
    """Cached grids for one (model, threshold, density-range) combination."""

    def __init__(
        self,
        model: PathLossModel,
        delta: float,
        rho_min: float,
        rho_max: float,
        quad: QuadSpec,
    ):
        self.model = model
        self.grids = {
            "los": _build_state_grid(model, delta, rho_min, rho_max, True, quad),
            "nlos": _build_state_grid(model, delta, rho_min, rho_max, False, quad),
        }

    def file_terms(
        self, rho_n: float, w_same: float, w_other: float, noise_scale: float
    ) -> dict:
        """Per-(segment, state) contributions for one file tier."""
        out = {}
        for state, g in self.grids.items():
            if g is None:
                continue
            pdf = (
                2.0
                * math.pi
                * rho_n
                * g.r
                * g.state_weight
                * np.exp(-rho_n * g.void_exp)
            )
            expo = -2.0 * math.pi * (w_other * g.j_other + w_same * g.j_same)
            if noise_scale > 0.0:
                expo = expo - noise_scale / g.zref
            vals = g.w * pdf * np.exp(expo)
            for k in range(len(self.model.segments)):
                mask = g.seg_idx == k
                if np.any(mask):
                    out[f"seg{k + 1}_{state}"] = float(vals[mask].sum())
        return out


_ENGINE_CACHE: dict = {}


def _model_key(model: PathLossModel):
    segs = tuple(
        (s.r_lo, s.r_hi, s.amp_los, s.amp_nlos, s.exp_los, s.exp_nlos, repr(s.los_prob))
        for s in model.segments
    )
    return (model.height_diff, segs)


def _engine_for(ctx: TierContext, model: PathLossModel, quad: QuadSpec) -> _TierEngine:
    s = ctx.cache.clipped()
    lam_s = ctx.cfg.sbs_density
    active = s[s > 0]
    if active.size == 0:
        raise ConfigError("cache vector stores nothing")
    rho_max = lam_s * float(active.max())
    rho_min = lam_s * float(max(active.min(), quad.s_floor))
    # Round the range to decades so sweeps over placements reuse the grids.
    key = (
        _model_key(model),
        ctx.cfg.sinr_threshold,
        math.floor(math.log10(rho_min) + 1e-9),
        math.ceil(math.log10(rho_max) - 1e-9),
        quad,
    )
    eng = _ENGINE_CACHE.get(key)
    if eng is None:
        eng = _TierEngine(
            model,
            ctx.cfg.sinr_threshold,
            10.0 ** key[2],
            10.0 ** key[3],
            quad,
        )
        if len(_ENGINE_CACHE) > 64:
            _ENGINE_CACHE.clear()
        _ENGINE_CACHE[key] = eng
    return eng


# ---------------------------------------------------------------------------
# Per-file and averaged SDP
# ---------------------------------------------------------------------------


def _per_file_terms(
    ctx: TierContext, model: PathLossModel, quad: QuadSpec
) -> list:
    cfg = ctx.cfg
    engine = _engine_for(ctx, model, quad)
    weights = active_weights(ctx.catalog, ctx.cache, cfg, ctx.active_mode)
    w_total = weights.sum()
    noise_scale = cfg.sinr_threshold * cfg.noise_power / cfg.tx_power
    s = ctx.cache.clipped()
    out = []
    for n in range(ctx.catalog.n_files):
        if s[n] <= 0:
            out.append({})
            continue
        rho_n = s[n] * cfg.sbs_density
        out.append(
            engine.file_terms(rho_n, weights[n], w_total - weights[n], noise_scale)
        )
    return out


def sdp_file_terms(ctx: TierContext, model: PathLossModel, n: int) -> dict:
    """Decomposition of one file's success probability by segment and state."""
    if not 0 <= n < ctx.catalog.n_files:
        raise ConfigError("file index out of range")
    return _per_file_terms(ctx, model, ctx.quad)[n]


def sdp_file(ctx: TierContext, model: PathLossModel, n: int) -> float:
    """Success probability for file ``n``; zero when it is never cached."""
    return float(sum(sdp_file_terms(ctx, model, n).values()))


def tier_report(ctx: TierContext, model: PathLossModel, tier: str) -> SdpReport:
    """Per-file successes and the popularity-weighted average for one tier."""
    terms = _per_file_terms(ctx, model, ctx.quad)
    per_file = np.array([sum(t.values()) for t in terms])
    labels = sorted({k for t in terms for k in t})
    term_arrays = {
        lab: np.array([t.get(lab, 0.0) for t in terms]) for lab in labels
    }
    average = float(ctx.catalog.pmf @ per_file)
    tol = None
    if ctx.quad.estimate_tol:
        fine = _per_file_terms(ctx, model, ctx.quad.refined())
        per_fine = np.array([sum(t.values()) for t in fine])
        tol = float(np.max(np.abs(per_fine - per_file))) if per_file.size else 0.0
    return SdpReport(
        tier=tier,
        per_file=per_file,
        per_file_terms=term_arrays,
        average=average,
        tol=tol,
    )


def average_sdp(
    ctx: TierContext, tu_model: PathLossModel, uav_model: PathLossModel
) -> SdpReport:
    """Population-averaged success probability over both receiver tiers.

    Ground and aerial receivers share the request distribution; the combined
    average weighs each tier by its share of the requester density.
    """
    cfg = ctx.cfg
    w_tu = cfg.tu_density / cfg.ue_density
    w_au = cfg.au_density / cfg.ue_density
    parts = []
    per_file = np.zeros(ctx.catalog.n_files)
    average = 0.0
    tol = 0.0
    if w_tu > 0:
        rep = tier_report(ctx, tu_model, "TU")
        parts.append(rep)
        per_file = per_file + w_tu * rep.per_file
        average += w_tu * rep.average
        tol += w_tu * (rep.tol or 0.0)
    if w_au > 0:
        rep = tier_report(ctx, uav_model, "UAV")
        parts.append(rep)
        per_file = per_file + w_au * rep.per_file
        average += w_au * rep.average
        tol += w_au * (rep.tol or 0.0)
    return SdpReport(
        tier="Combined",
        per_file=per_file,
        per_file_terms={},
        average=average,
        tol=tol if ctx.quad.estimate_tol else None,
        components=tuple(parts),
    )


def average_sdp_split(
    ctx: TierContext,
    tu_model: PathLossModel,
    uav_model: PathLossModel,
    q_tu,
    q_au,
) -> SdpReport:
    """Average success when the two tiers request by different distributions.

    Activation sees the density-weighted mixture of the two request pmfs;
    each tier's average then uses its own pmf.
    """
    q_tu = np.asarray(q_tu, dtype=float)
    q_au = np.asarray(q_au, dtype=float)
    n = ctx.catalog.n_files
    if q_tu.shape != (n,) or q_au.shape != (n,):
        raise ConfigError("per-tier request pmfs must match the catalog size")
    cfg = ctx.cfg
    mixed = (cfg.tu_density * q_tu + cfg.au_density * q_au) / cfg.ue_density
    mixed_ctx = TierContext(
        catalog=ctx.catalog.with_pmf(mixed),
        cache=ctx.cache,
        cfg=cfg,
        active_mode=ctx.active_mode,
        quad=ctx.quad,
    )
    w_tu = cfg.tu_density / cfg.ue_density
    w_au = cfg.au_density / cfg.ue_density
    parts = []
    average = 0.0
    num = np.zeros(n)
    if w_tu > 0:
        rep = tier_report(mixed_ctx, tu_model, "TU")
        rep.average = float(q_tu @ rep.per_file)
        parts.append(rep)
        average += w_tu * rep.average
        num = num + w_tu * q_tu * rep.per_file
    if w_au > 0:
        rep = tier_report(mixed_ctx, uav_model, "UAV")
        rep.average = float(q_au @ rep.per_file)
        parts.append(rep)
        average += w_au * rep.average
        num = num + w_au * q_au * rep.per_file
    with np.errstate(invalid="ignore", divide="ignore"):
        per_file = np.where(mixed > 0, num / np.maximum(mixed, 1e-300), 0.0)
    return SdpReport(
        tier="Combined",
        per_file=per_file,
        per_file_terms={},
        average=average,
        tol=None,
        components=tuple(parts),
    )
