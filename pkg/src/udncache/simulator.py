"""Monte Carlo estimation of download success by direct network draws.

Each trial materializes the network around two probe users at the origin,
one ground and one aerial: small cells, caches, LoS states and fading are
drawn inside a structural disk sized from the association tail, and the
far interference field is drawn as a thinned annulus whose truncation
radius keeps the success-probability bias under a configurable budget.

Two activation mechanisms are supported for the interferers. In ``model``
mode every cached copy of a file turns its cell into an active interferer
of that file's tier independently, with the tier's closed-form activity
probability; this mirrors the independence structure of the analytic
engine, so the estimate checks everything else in it (association law,
exclusion regions, state mixing, fading, quadrature). In ``association``
mode cells are active exactly when at least one dropped requester
associates with them, which is the mechanism the activity formula
approximates; it is the ground truth for activation diagnostics, and the
thinning probability used outside the structural disk is then calibrated
against the measured interior activity rather than the formula.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analysis import active_weights, assoc_tail_radius
from .catalog import CacheVector, ZipfCatalog
from .channel import (
    ConfigError,
    NetworkConfig,
    PathLossModel,
    make_tu_model,
    make_uav_model,
)
from .quadrature import geometric_edges, panel_nodes

__all__ = [
    "ACTIVATION_MODEL",
    "ACTIVATION_ASSOCIATION",
    "SimGeometry",
    "SimEstimate",
    "ActivationStats",
    "sample_hppp",
    "plan_geometry",
    "estimate_sdp",
    "measure_activation",
    "sample_association_distances",
]

ACTIVATION_MODEL = "model"
ACTIVATION_ASSOCIATION = "association"


def sample_hppp(
    density: float, region_halfwidth: float, rng: np.random.Generator
) -> np.ndarray:
    """Draw a homogeneous Poisson field on the square ``[-w, w]^2``.

    The point count is Poisson with mean ``density * (2 w)^2`` and
    positions are uniform on the square. Returns an ``(n, 2)`` array.
    """
    if density < 0 or region_halfwidth < 0:
        raise ConfigError("density and region halfwidth must be nonnegative")
    area = (2.0 * region_halfwidth) ** 2
    n = rng.poisson(density * area)
    return rng.uniform(-region_halfwidth, region_halfwidth, size=(n, 2))


def _sample_disk(density: float, radius: float, rng: np.random.Generator):
    n = rng.poisson(density * math.pi * radius * radius)
    r = radius * np.sqrt(rng.random(n))
    theta = rng.random(n) * 2.0 * math.pi
    return np.column_stack([r * np.cos(theta), r * np.sin(theta)])


def _sample_annulus_radii(
    density: float, r_in: float, r_out: float, rng: np.random.Generator
):
    if r_out <= r_in or density <= 0:
        return np.empty(0)
    area = math.pi * (r_out * r_out - r_in * r_in)
    n = rng.poisson(density * area)
    return np.sqrt(r_in * r_in + (r_out * r_out - r_in * r_in) * rng.random(n))


def _gain_with_state(model: PathLossModel, r, los):
    """Channel gain with one amplitude/exponent pick per link state."""
    r = np.asarray(r, dtype=float)
    length_sq = r * r + model.height_diff**2
    idx = model.segment_index(r)
    amp_l = np.array([seg.amp_los for seg in model.segments])[idx]
    amp_n = np.array([seg.amp_nlos for seg in model.segments])[idx]
    exp_l = np.array([seg.exp_los for seg in model.segments])[idx]
    exp_n = np.array([seg.exp_nlos for seg in model.segments])[idx]
    amp = np.where(los, amp_l, amp_n)
    alpha = np.where(los, exp_l, exp_n)
    return amp * np.exp(-0.5 * alpha * np.log(length_sq))


def _gain_tail_integral(model: PathLossModel, lo: float) -> float:
    """Mean-gain tail ``int_lo^inf (w zeta_L + (1 - w) zeta_NL) u du``.

    Numeric panels carry the integral out to where the LoS weight has
    settled onto its algebraic tail, and the remainder is closed-form in
    the tail coefficients. Used only to size the truncation radius, so a
    fraction of a percent is accurate enough.
    """
    last = model.segments[-1]
    far = max(
        lo * 2.0,
        last.los_prob.min_tail_radius(),
        50.0 * model.height_diff,
        (model.breakpoints[-1] * 2.0 if model.breakpoints else 0.0),
    )
    bounds = sorted({lo, far} | {b for b in model.breakpoints if lo < b < far})
    total = 0.0
    for a, b in zip(bounds[:-1], bounds[1:]):
        panels = max(int(math.ceil(math.log10(b / max(a, 1e-12)) * 8)), 4)
        u, w = panel_nodes(geometric_edges(a, b, panels), 12)
        p_los = model.los_prob(u)
        vals = p_los * model.gain_los(u) + (1.0 - p_los) * model.gain_nlos(u)
        total += float((vals * u * w).sum())
    w0, w1 = last.los_prob.tail_coeffs()
    a_l, a_n = last.amp_los, last.amp_nlos
    e_l, e_n = last.exp_los, last.exp_nlos
    total += a_l * (
        w0 * far ** (2.0 - e_l) / (e_l - 2.0)
        + w1 * far ** (1.0 - e_l) / (e_l - 1.0)
    )
    total += a_n * (
        (1.0 - w0) * far ** (2.0 - e_n) / (e_n - 2.0)
        - w1 * far ** (1.0 - e_n) / (e_n - 1.0)
    )
    return total


@dataclass(frozen=True)
class SimGeometry:
    """Simulation region sizes and the planning diagnostics behind them."""

    serve_radius: float
    ue_radius: float
    sbs_radius: float
    far_radius: float
    tail_eps: float
    bias_target: float
    bias_estimate: float
    active_density: float


@dataclass(frozen=True)
class SimEstimate:
    """Per-tier success estimates with their sampling uncertainty."""

    tiers: tuple
    per_file: dict
    per_file_stderr: dict
    average: dict
    average_stderr: dict
    combined: float
    combined_stderr: float
    trials: int
    seed: int
    activation: str
    p_on_model: float
    p_on_measured: float | None
    calibration_trials: int
    geometry: SimGeometry


def _aggregate_p_on(cfg: NetworkConfig) -> float:
    load = cfg.ue_density / (cfg.onoff_q * cfg.sbs_density)
    return 1.0 - (1.0 + load) ** (-cfg.onoff_q)


def plan_geometry(
    cache: CacheVector,
    cfg: NetworkConfig,
    models: dict,
    active_density: float,
    tail_eps: float = 1e-4,
    bias_target: float = 1e-3,
) -> SimGeometry:
    """Size the structural disk and truncation radius for a run.

    The structural radius follows the association tail of the thinnest
    cached tier (caching probabilities below one percent are not chased;
    such files contribute almost nothing to the average). The far radius
    grows until the first-order success-probability bias from discarding
    interferers beyond it drops under the bias budget for every tier.
    """
    probs = cache.clipped()
    nonzero = probs[probs > 0]
    if nonzero.size == 0:
        raise ConfigError("cache vector has no positive entries")
    floor = min(max(float(nonzero.min()), 0.01), 1.0)
    rho = cfg.sbs_density * floor
    r_q = max(assoc_tail_radius(m, rho, tail_eps) for m in models.values())

    # First-order bias of one tier: delta * E[I_tail] / (P * serving gain),
    # with the serving gain taken at the median association distance.
    scales = []
    for model in models.values():
        r_med = assoc_tail_radius(model, rho, 0.5)
        scales.append(
            2.0 * math.pi * active_density * cfg.sinr_threshold / model.gain_los(r_med)
        )

    far = 3.0 * r_q
    bias = max(
        s * _gain_tail_integral(m, far) for s, m in zip(scales, models.values())
    )
    while bias > bias_target and far < 50e3:
        far *= 1.3
        bias = max(
            s * _gain_tail_integral(m, far)
            for s, m in zip(scales, models.values())
        )
    return SimGeometry(
        serve_radius=r_q,
        ue_radius=2.0 * r_q,
        sbs_radius=3.0 * r_q,
        far_radius=far,
        tail_eps=tail_eps,
        bias_target=bias_target,
        bias_estimate=bias,
        active_density=active_density,
    )


@dataclass
class _TrialPlan:
    catalog: ZipfCatalog
    probs: np.ndarray
    cfg: NetworkConfig
    models: dict
    geometry: SimGeometry
    mode: str
    tier_activity: np.ndarray
    file_weights: np.ndarray
    far_density: float


def _draw_structure(plan: _TrialPlan, rng: np.random.Generator):
    sbs_xy = _sample_disk(plan.cfg.sbs_density, plan.geometry.sbs_radius, rng)
    marks = rng.random((plan.catalog.n_files, len(sbs_xy))) < plan.probs[:, None]
    return sbs_xy, marks


def _background_activity(plan, rng, sbs_xy, marks, attribution=None) -> np.ndarray:
    """Which structural cells pick up at least one background requester.

    With an ``(n_files, n_sbs)`` boolean ``attribution`` array, also record
    which cell-file pairs received a request for that specific file.
    """
    n_sbs = len(sbs_xy)
    active = np.zeros(n_sbs, dtype=bool)
    if n_sbs == 0:
        return active
    area_density = {"tu": plan.cfg.tu_density, "uav": plan.cfg.au_density}
    for tier, model in plan.models.items():
        ue_xy = _sample_disk(area_density[tier], plan.geometry.ue_radius, rng)
        if len(ue_xy) == 0:
            continue
        files = rng.choice(
            plan.catalog.n_files, size=len(ue_xy), p=plan.catalog.pmf
        )
        diff = ue_xy[:, None, :] - sbs_xy[None, :, :]
        dist = np.sqrt((diff * diff).sum(axis=2))
        los = rng.random(dist.shape) < model.los_prob(dist)
        gains = _gain_with_state(model, dist, los)
        gains = np.where(marks[files], gains, -1.0)
        served = gains.argmax(axis=1)
        has = gains.max(axis=1) > 0
        active[served[has]] = True
        if attribution is not None:
            attribution[files[has], served[has]] = True
    return active


def _far_interference(plan, rng, ann_r, model) -> float:
    los = rng.random(len(ann_r)) < model.los_prob(ann_r)
    fade = rng.standard_exponential(len(ann_r))
    return float(
        (plan.cfg.tx_power * _gain_with_state(model, ann_r, los) * fade).sum()
    )


def _run_trial_association(plan: _TrialPlan, rng: np.random.Generator):
    """One draw with structurally measured cell activity.

    The far annulus and the structural shell outside the exactly-observed
    interior are thinned at the calibrated activity instead, since their
    requesters fall partly outside the dropped user disk.
    """
    cfg = plan.cfg
    geo = plan.geometry
    sbs_xy, marks = _draw_structure(plan, rng)
    n_sbs = len(sbs_xy)
    dist = np.sqrt((sbs_xy * sbs_xy).sum(axis=1))
    active = _background_activity(plan, rng, sbs_xy, marks)
    inner = dist <= geo.serve_radius
    p_on = plan.far_density / cfg.sbs_density
    counted = (active & inner) | (~inner & (rng.random(n_sbs) < p_on))
    ann_r = _sample_annulus_radii(
        plan.far_density, geo.sbs_radius, geo.far_radius, rng
    )
    any_mark = marks.any(axis=1)
    out = {}
    for tier, model in plan.models.items():
        los = rng.random(n_sbs) < model.los_prob(dist)
        fade = rng.standard_exponential(n_sbs)
        power = cfg.tx_power * _gain_with_state(model, dist, los)
        contrib = power * fade
        i_base = float(contrib[counted].sum()) + _far_interference(
            plan, rng, ann_r, model
        )
        if n_sbs == 0:
            out[tier] = np.zeros(plan.catalog.n_files, dtype=bool)
            continue
        # Association uses the mean received power; fading applies after.
        masked = np.where(marks, power[None, :], -1.0)
        serving = masked.argmax(axis=1)
        signal = contrib[serving]
        interference = i_base - np.where(counted[serving], signal, 0.0)
        ok = signal > cfg.sinr_threshold * (cfg.noise_power + interference)
        out[tier] = any_mark & ok
    return out


def _run_trial_model(plan: _TrialPlan, rng: np.random.Generator):
    """One draw with formula-thinned per-tier interferer activity.

    The analytic engine treats the file tiers as superposed independent
    active fields. Copies of the file under test are taken from the
    structural cells, where the max-gain race conditions them exactly
    (they lost under the propagation state the association saw, and the
    serving copy does not interfere). Interference from every other file
    is an independent labeled field instead: unlike the structural cells,
    its points are not pushed away from the origin by the race, which is
    precisely the independence the tier formulas assume.
    """
    cfg = plan.cfg
    geo = plan.geometry
    n_files = plan.catalog.n_files
    sbs_xy, marks = _draw_structure(plan, rng)
    n_sbs = len(sbs_xy)
    dist = np.sqrt((sbs_xy * sbs_xy).sum(axis=1))
    on = marks & (
        rng.random((n_files, n_sbs)) < plan.tier_activity[:, None]
    )
    act_file, act_sbs = np.nonzero(on)
    n_act = len(act_sbs)
    lab_r = geo.sbs_radius * np.sqrt(
        rng.random(rng.poisson(plan.far_density * math.pi * geo.sbs_radius**2))
    )
    labels = (
        rng.choice(n_files, size=len(lab_r), p=plan.file_weights)
        if len(lab_r)
        else np.empty(0, dtype=int)
    )
    ann_r = _sample_annulus_radii(
        plan.far_density, geo.sbs_radius, geo.far_radius, rng
    )
    any_mark = marks.any(axis=1)
    out = {}
    for tier, model in plan.models.items():
        los = rng.random(n_sbs) < model.los_prob(dist)
        serve_fade = rng.standard_exponential(n_sbs)
        power = cfg.tx_power * _gain_with_state(model, dist, los)
        i_far = _far_interference(plan, rng, ann_r, model)
        same_power = power[act_sbs] * rng.standard_exponential(n_act)
        lab_los = rng.random(len(lab_r)) < model.los_prob(lab_r)
        lab_power = (
            cfg.tx_power
            * _gain_with_state(model, lab_r, lab_los)
            * rng.standard_exponential(len(lab_r))
        )
        if n_sbs == 0:
            out[tier] = np.zeros(n_files, dtype=bool)
            continue
        masked = np.where(marks, power[None, :], -1.0)
        serving = masked.argmax(axis=1)
        same = np.zeros(n_files)
        keep = serving[act_file] != act_sbs
        np.add.at(same, act_file[keep], same_power[keep])
        # Labeled points of the file under test are dropped; that tier's
        # interference is the structural ``same`` term above.
        cross = np.full(n_files, lab_power.sum())
        np.subtract.at(cross, labels, lab_power)
        signal = power[serving] * serve_fade[serving]
        interference = i_far + same + cross
        ok = signal > cfg.sinr_threshold * (cfg.noise_power + interference)
        out[tier] = any_mark & ok
    return out


def _calibrate_p_on(plan: _TrialPlan, seed: int, trials: int) -> tuple:
    """Measure the interior active fraction over dedicated substreams."""
    seen = 0
    on = 0
    for j in range(trials):
        rng = np.random.Generator(
            np.random.Philox(np.random.SeedSequence(seed, spawn_key=(1, j)))
        )
        sbs_xy, marks = _draw_structure(plan, rng)
        if len(sbs_xy) == 0:
            continue
        dist_sq = (sbs_xy * sbs_xy).sum(axis=1)
        inner = dist_sq <= plan.geometry.serve_radius**2
        if not inner.any():
            continue
        active = _background_activity(plan, rng, sbs_xy, marks)
        seen += int(inner.sum())
        on += int((active & inner).sum())
    if seen == 0 or on == 0:
        return None, seen
    return on / seen, seen


def estimate_sdp(
    catalog: ZipfCatalog,
    cache: CacheVector,
    cfg: NetworkConfig,
    trials: int = 1000,
    seed: int = 0,
    activation: str = ACTIVATION_MODEL,
    tu_model: PathLossModel | None = None,
    uav_model: PathLossModel | None = None,
    tail_eps: float = 1e-4,
    bias_target: float = 1e-3,
) -> SimEstimate:
    """Estimate per-file and averaged success probabilities by simulation.

    Trials are independent reproducible substreams of ``seed``, so the
    first ``k`` trials of a longer run equal a run of ``k`` trials.
    ``activation`` picks the interferer mechanism described in the module
    docstring; files a cell never caches always count as failures.
    """
    if trials < 1:
        raise ConfigError("at least one trial is required")
    if activation not in (ACTIVATION_MODEL, ACTIVATION_ASSOCIATION):
        raise ConfigError("activation must be 'model' or 'association'")
    models = {
        "tu": tu_model or make_tu_model(cfg),
        "uav": uav_model or make_uav_model(cfg),
    }
    probs = cache.clipped()
    weights_active = active_weights(catalog, cache, cfg, "exact")
    p_on_model = _aggregate_p_on(cfg)
    if activation == ACTIVATION_MODEL:
        nu = float(weights_active.sum())
    else:
        nu = cfg.sbs_density * p_on_model
    geo = plan_geometry(cache, cfg, models, nu, tail_eps, bias_target)
    with np.errstate(divide="ignore", invalid="ignore"):
        tier_activity = np.where(
            probs > 0, weights_active / np.maximum(probs * cfg.sbs_density, 1e-300), 0.0
        )
    total_active = float(weights_active.sum())
    if total_active > 0:
        file_weights = weights_active / total_active
    else:
        file_weights = np.full(catalog.n_files, 1.0 / catalog.n_files)
    plan = _TrialPlan(
        catalog, probs, cfg, models, geo, activation, tier_activity, file_weights, nu
    )

    p_on_measured = None
    cal_trials = 0
    if activation == ACTIVATION_ASSOCIATION:
        n_inner = cfg.sbs_density * math.pi * geo.serve_radius**2
        per_trial = max(n_inner * p_on_model, 1e-9)
        cal_trials = int(min(max(math.ceil(1600.0 / per_trial), 16), 8000))
        p_on_measured, _seen = _calibrate_p_on(plan, seed, cal_trials)
        plan.far_density = cfg.sbs_density * (
            p_on_measured if p_on_measured is not None else p_on_model
        )

    run_trial = (
        _run_trial_model
        if activation == ACTIVATION_MODEL
        else _run_trial_association
    )
    n = catalog.n_files
    tiers = tuple(models)
    sums = {t: np.zeros(n) for t in tiers}
    avg1 = {t: 0.0 for t in tiers}
    avg2 = {t: 0.0 for t in tiers}
    comb1 = 0.0
    comb2 = 0.0
    tier_weight = {
        "tu": cfg.tu_density / cfg.ue_density,
        "uav": cfg.au_density / cfg.ue_density,
    }
    for i in range(trials):
        rng = np.random.Generator(
            np.random.Philox(np.random.SeedSequence(seed, spawn_key=(0, i)))
        )
        succ = run_trial(plan, rng)
        mix = 0.0
        for t in tiers:
            sums[t] += succ[t]
            a = float(catalog.pmf @ succ[t])
            avg1[t] += a
            avg2[t] += a * a
            mix += tier_weight[t] * a
        comb1 += mix
        comb2 += mix * mix

    def _mean_err(s1, s2):
        mean = s1 / trials
        if trials > 1:
            var = max(s2 - trials * mean * mean, 0.0) / (trials - 1)
        else:
            var = 0.0
        return mean, math.sqrt(var / trials)

    per_file = {t: sums[t] / trials for t in tiers}
    per_file_err = {
        t: np.sqrt(per_file[t] * (1.0 - per_file[t]) / trials) for t in tiers
    }
    average = {}
    average_err = {}
    for t in tiers:
        average[t], average_err[t] = _mean_err(avg1[t], avg2[t])
    comb_mean, comb_err = _mean_err(comb1, comb2)
    return SimEstimate(
        tiers=tiers,
        per_file=per_file,
        per_file_stderr=per_file_err,
        average=average,
        average_stderr=average_err,
        combined=comb_mean,
        combined_stderr=comb_err,
        trials=trials,
        seed=seed,
        activation=activation,
        p_on_model=p_on_model,
        p_on_measured=p_on_measured,
        calibration_trials=cal_trials,
        geometry=geo,
    )


@dataclass(frozen=True)
class ActivationStats:
    """Structurally measured cell activity against the load model.

    ``attributed[n] / cached[n]`` estimates the probability that a cell
    storing file ``n`` serves at least one requester of that same file,
    the quantity the closed-form activity ``p_attr_model`` approximates.
    ``active_cells / cells`` is the marginal active fraction, which also
    counts activation through the cell's other files.
    """

    attributed: np.ndarray
    cached: np.ndarray
    active_cells: int
    cells: int
    p_attr_model: np.ndarray
    p_on_model: float


def measure_activation(
    catalog: ZipfCatalog,
    cache: CacheVector,
    cfg: NetworkConfig,
    trials: int = 100,
    seed: int = 0,
    tu_model: PathLossModel | None = None,
    uav_model: PathLossModel | None = None,
) -> ActivationStats:
    """Measure structural cell activity inside the exactly observed zone.

    Counts are pooled over interior cells of ``trials`` independent draws;
    only cells within the serving radius are counted, since the dropped
    requester disk fully covers their association neighborhoods there.
    """
    if trials < 1:
        raise ConfigError("at least one trial is required")
    models = {
        "tu": tu_model or make_tu_model(cfg),
        "uav": uav_model or make_uav_model(cfg),
    }
    weights = active_weights(catalog, cache, cfg, "exact")
    probs = cache.clipped()
    nu = cfg.sbs_density * _aggregate_p_on(cfg)
    geo = plan_geometry(cache, cfg, models, nu)
    plan = _TrialPlan(
        catalog, probs, cfg, models, geo, ACTIVATION_ASSOCIATION,
        np.zeros(catalog.n_files), np.zeros(catalog.n_files), nu,
    )
    n = catalog.n_files
    attributed = np.zeros(n, dtype=np.int64)
    cached = np.zeros(n, dtype=np.int64)
    active_cells = 0
    cells = 0
    for i in range(trials):
        rng = np.random.Generator(
            np.random.Philox(np.random.SeedSequence(seed, spawn_key=(2, i)))
        )
        sbs_xy, marks = _draw_structure(plan, rng)
        if len(sbs_xy) == 0:
            continue
        attr = np.zeros(marks.shape, dtype=bool)
        active = _background_activity(plan, rng, sbs_xy, marks, attr)
        inner = (sbs_xy * sbs_xy).sum(axis=1) <= geo.serve_radius**2
        if not inner.any():
            continue
        attributed += (attr & marks & inner[None, :]).sum(axis=1)
        cached += (marks & inner[None, :]).sum(axis=1)
        active_cells += int((active & inner).sum())
        cells += int(inner.sum())
    with np.errstate(divide="ignore", invalid="ignore"):
        p_model = np.where(
            probs > 0, weights / np.maximum(probs * cfg.sbs_density, 1e-300), 0.0
        )
    return ActivationStats(
        attributed=attributed,
        cached=cached,
        active_cells=active_cells,
        cells=cells,
        p_attr_model=p_model,
        p_on_model=_aggregate_p_on(cfg),
    )


def sample_association_distances(
    model: PathLossModel,
    density: float,
    count: int,
    seed: int = 0,
    chunk: int = 2000,
) -> np.ndarray:
    """Draw serving distances of the max-gain association rule.

    Candidate cells are a Poisson field out to the one-in-a-million
    association tail; each link flips its own LoS state and the strongest
    mean gain wins. The rare empty draw is censored at the field edge.
    Used to exercise the association-distance density empirically.
    """
    if density <= 0 or count < 1:
        raise ConfigError("need a positive density and at least one sample")
    r_max = assoc_tail_radius(model, density, 1e-6)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    area_mean = density * math.pi * r_max * r_max
    out = np.empty(count)
    done = 0
    while done < count:
        m = min(chunk, count - done)
        counts = rng.poisson(area_mean, size=m)
        width = max(int(counts.max()), 1)
        live = np.arange(width)[None, :] < counts[:, None]
        radii = r_max * np.sqrt(rng.random((m, width)))
        los = rng.random((m, width)) < model.los_prob(radii)
        gains = np.where(live, _gain_with_state(model, radii, los), -1.0)
        best = gains.argmax(axis=1)
        r = radii[np.arange(m), best]
        r[counts == 0] = r_max
        out[done : done + m] = r
        done += m
    return out
