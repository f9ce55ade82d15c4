"""Sweep experiments driven by INI files, with delimited output.

An experiment sweeps one deployment or catalog variable over a list of
values, evaluates one or more placement strategies with one or more
engines at every point, and emits one CSV row per (point, strategy,
engine, tier). The CSV is byte-deterministic for a fixed spec and seed:
wall-clock timings stay out of it unless explicitly requested and live in
the JSON sidecar instead, together with the config echo and any engine
failures.
"""

from __future__ import annotations

import configparser
import json
import subprocess
import time
from dataclasses import asdict, dataclass
from pathlib import Path

from . import __name__ as _pkg_name
from .analysis import TierContext, average_sdp
from .asymptotics import (
    DenseObjectiveTerms,
    SingleSlopeModel,
    avg_sdp_single_slope,
)
from .catalog import CacheVector, ZipfCatalog, pcs_vector, ucs_vector
from .channel import (
    ConfigError,
    dbm_to_watts,
    db_to_linear,
    make_tu_model,
    make_uav_model,
    urban_config,
)
from .optimizer import optimize_caching
from .simulator import estimate_sdp

__all__ = [
    "ENGINE_NAMES",
    "STRATEGY_NAMES",
    "SWEEP_VARIABLES",
    "CSV_COLUMNS",
    "ExperimentSpec",
    "load_spec",
    "RunResult",
    "run_experiment",
    "write_csv",
    "write_sidecar",
]

ENGINE_NAMES = ("analysis", "dense", "single_slope", "montecarlo")
STRATEGY_NAMES = ("ucs", "pcs", "ocs")
SWEEP_VARIABLES = ("sbs_density", "cache_size", "zipf_beta", "uav_height")

CSV_COLUMNS = (
    "sweep_name",
    "sweep_value",
    "strategy",
    "engine",
    "tier",
    "sdp",
    "stderr",
    "tol",
    "wall_ms",
    "seed",
)

_NETWORK_KEYS = {
    "sbs_density_per_km2": ("sbs_density_km2", float),
    "tu_density_per_km2": ("tu_density_km2", float),
    "au_density_per_km2": ("au_density_km2", float),
    "tx_power_dbm": ("tx_power", dbm_to_watts),
    "sinr_threshold_db": ("sinr_threshold", db_to_linear),
    "noise_dbm": ("noise_power", dbm_to_watts),
    "sbs_height_m": ("sbs_height", float),
    "tu_height_m": ("tu_height", float),
    "uav_height_m": ("uav_height", float),
    "onoff_q": ("onoff_q", float),
}


@dataclass(frozen=True)
class ExperimentSpec:
    """Validated contents of an experiment INI file."""

    name: str
    network: dict
    n_files: int
    zipf_beta: float
    cache_size: int
    sweep_name: str
    values: tuple
    values_full: tuple
    engines: tuple
    strategies: tuple
    trials: int
    trials_full: int
    seed: int
    single_slope_alpha: float

    def __post_init__(self) -> None:
        if self.sweep_name not in SWEEP_VARIABLES:
            raise ConfigError(
                f"sweep variable must be one of {', '.join(SWEEP_VARIABLES)}"
            )
        if not self.values:
            raise ConfigError("sweep needs at least one value")
        if not self.engines:
            raise ConfigError("at least one engine is required")
        if not self.strategies:
            raise ConfigError("at least one strategy is required")
        for e in self.engines:
            if e not in ENGINE_NAMES:
                raise ConfigError(f"unknown engine '{e}'")
        for s in self.strategies:
            if s not in STRATEGY_NAMES:
                raise ConfigError(f"unknown strategy '{s}'")
        if self.n_files < 1:
            raise ConfigError("n_files must be at least 1")
        if not 1 <= self.cache_size <= self.n_files:
            raise ConfigError("cache_size must lie in [1, n_files]")
        if self.trials < 1 or self.trials_full < 1:
            raise ConfigError("trial counts must be positive")
        if self.single_slope_alpha <= 2:
            raise ConfigError("single_slope_alpha must exceed 2")


def _split_list(raw: str) -> list:
    return [tok for tok in raw.replace(",", " ").split() if tok]


def _number(raw, context: str) -> float:
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"{context}: not a number: {raw!r}") from exc


def _integer(raw, context: str) -> int:
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"{context}: not an integer: {raw!r}") from exc


def load_spec(path) -> ExperimentSpec:
    """Parse and validate an experiment INI file."""
    path = Path(path)
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        read = parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"malformed experiment file {path}: {exc}") from exc
    if not read:
        raise ConfigError(f"cannot read experiment file {path}")
    known = {"network", "catalog", "sweep", "run"}
    extra = set(parser.sections()) - known
    if extra:
        raise ConfigError(f"unknown sections: {', '.join(sorted(extra))}")

    network = {}
    if parser.has_section("network"):
        for key, raw in parser.items("network"):
            if key not in _NETWORK_KEYS:
                raise ConfigError(f"unknown network key '{key}'")
            target, conv = _NETWORK_KEYS[key]
            network[target] = conv(_number(raw, f"network key '{key}'"))

    if not parser.has_section("catalog"):
        raise ConfigError("missing [catalog] section")
    cat = parser["catalog"]
    cat_extra = set(cat) - {"n_files", "zipf_beta", "cache_size"}
    if cat_extra:
        raise ConfigError(f"unknown catalog keys: {', '.join(sorted(cat_extra))}")

    if not parser.has_section("sweep"):
        raise ConfigError("missing [sweep] section")
    sweep = parser["sweep"]
    sweep_extra = set(sweep) - {"variable", "values", "values_full"}
    if sweep_extra:
        raise ConfigError(f"unknown sweep keys: {', '.join(sorted(sweep_extra))}")
    values = tuple(
        _number(v, "sweep key 'values'") for v in _split_list(sweep.get("values", ""))
    )
    values_full = (
        tuple(
            _number(v, "sweep key 'values_full'")
            for v in _split_list(sweep.get("values_full", ""))
        )
        or values
    )

    run = parser["run"] if parser.has_section("run") else {}
    if parser.has_section("run"):
        run_extra = set(parser["run"]) - {
            "engines",
            "strategies",
            "trials",
            "trials_full",
            "seed",
            "single_slope_alpha",
        }
        if run_extra:
            raise ConfigError(f"unknown run keys: {', '.join(sorted(run_extra))}")
    trials = _integer(run.get("trials", "1000"), "run key 'trials'")
    return ExperimentSpec(
        name=path.stem,
        network=network,
        n_files=_integer(cat.get("n_files", "100"), "catalog key 'n_files'"),
        zipf_beta=_number(cat.get("zipf_beta", "0.8"), "catalog key 'zipf_beta'"),
        cache_size=_integer(cat.get("cache_size", "10"), "catalog key 'cache_size'"),
        sweep_name=sweep.get("variable", ""),
        values=values,
        values_full=values_full,
        engines=tuple(_split_list(run.get("engines", "analysis"))),
        strategies=tuple(_split_list(run.get("strategies", "ucs pcs"))),
        trials=trials,
        trials_full=_integer(run.get("trials_full", str(trials)), "run key 'trials_full'"),
        seed=_integer(run.get("seed", "0"), "run key 'seed'"),
        single_slope_alpha=_number(
            run.get("single_slope_alpha", "4.0"), "run key 'single_slope_alpha'"
        ),
    )


@dataclass
class RunResult:
    """Rows, failures and timings produced by one experiment run."""

    spec: ExperimentSpec
    rows: list
    errors: list
    timings: list
    seed: int
    trials: int
    values: tuple


def _point_inputs(spec: ExperimentSpec, value: float):
    """Network, catalog and cache size at one sweep point."""
    network = dict(spec.network)
    beta = spec.zipf_beta
    cache_size = spec.cache_size
    if spec.sweep_name == "sbs_density":
        network["sbs_density_km2"] = value
    elif spec.sweep_name == "uav_height":
        network["uav_height"] = value
    elif spec.sweep_name == "zipf_beta":
        beta = value
    elif spec.sweep_name == "cache_size":
        cache_size = int(round(value))
    cfg = urban_config(**network)
    catalog = ZipfCatalog(spec.n_files, beta)
    return cfg, catalog, cache_size


class _Point:
    """Shared per-point state: models, dense integrands, placements."""

    def __init__(self, spec: ExperimentSpec, value: float):
        self.value = value
        self.cfg, self.catalog, self.cache_size = _point_inputs(spec, value)
        self.tu_model = make_tu_model(self.cfg)
        self.uav_model = make_uav_model(self.cfg)
        self._dense = None
        self._caches = {}
        self._alpha = spec.single_slope_alpha

    def dense_terms(self) -> DenseObjectiveTerms:
        if self._dense is None:
            self._dense = DenseObjectiveTerms(
                self.catalog, self.cfg, self.tu_model, self.uav_model
            )
        return self._dense

    def placement(self, strategy: str) -> CacheVector:
        if strategy not in self._caches:
            n = self.catalog.n_files
            if strategy == "ucs":
                vec = ucs_vector(n, self.cache_size)
            elif strategy == "pcs":
                vec = pcs_vector(n, self.cache_size)
            else:
                vec = optimize_caching(
                    self.catalog,
                    self.cache_size,
                    self.cfg,
                    self.tu_model,
                    self.uav_model,
                    terms=self.dense_terms(),
                ).cache
            self._caches[strategy] = vec
        return self._caches[strategy]

    def tier_weights(self) -> dict:
        return {
            "tu": self.cfg.tu_density / self.cfg.ue_density,
            "uav": self.cfg.au_density / self.cfg.ue_density,
        }


def _rows_analysis(point: _Point, cache: CacheVector, seed: int, trials: int):
    ctx = TierContext(point.catalog, cache, point.cfg)
    rep = average_sdp(ctx, point.tu_model, point.uav_model)
    rows = [
        {"tier": c.tier.lower(), "sdp": c.average, "tol": c.tol}
        for c in rep.components
    ]
    rows.append({"tier": "combined", "sdp": rep.average, "tol": rep.tol})
    return rows


def _rows_dense(point: _Point, cache: CacheVector, seed: int, trials: int):
    terms = point.dense_terms()
    probs = cache.clipped()
    rows = [
        {"tier": tier, "sdp": val}
        for tier, val in sorted(terms.tier_values(probs).items())
    ]
    rows.append({"tier": "combined", "sdp": terms.value(probs)})
    return rows


def _rows_single_slope(point: _Point, cache: CacheVector, seed: int, trials: int):
    cfg = point.cfg
    rows = []
    combined = 0.0
    for tier, h in (("tu", cfg.tu_height_diff), ("uav", cfg.uav_height_diff)):
        model = SingleSlopeModel(point._alpha, h)
        val = avg_sdp_single_slope(point.catalog, cache, cfg, model)
        rows.append({"tier": tier, "sdp": val})
        combined += point.tier_weights()[tier] * val
    rows.append({"tier": "combined", "sdp": combined})
    return rows


def _rows_montecarlo(point: _Point, cache: CacheVector, seed: int, trials: int):
    est = estimate_sdp(
        point.catalog,
        cache,
        point.cfg,
        trials=trials,
        seed=seed,
        tu_model=point.tu_model,
        uav_model=point.uav_model,
    )
    rows = [
        {
            "tier": t,
            "sdp": est.average[t],
            "stderr": est.average_stderr[t],
            "seed": seed,
        }
        for t in est.tiers
    ]
    rows.append(
        {
            "tier": "combined",
            "sdp": est.combined,
            "stderr": est.combined_stderr,
            "seed": seed,
        }
    )
    return rows


_ENGINE_ROWS = {
    "analysis": _rows_analysis,
    "dense": _rows_dense,
    "single_slope": _rows_single_slope,
    "montecarlo": _rows_montecarlo,
}


def run_experiment(
    spec: ExperimentSpec,
    engines=None,
    trials=None,
    seed=None,
    full: bool = False,
) -> RunResult:
    """Evaluate every (sweep point, strategy, engine) cell of a spec.

    Engine failures do not abort the run; they yield a single flagged row
    with a NaN value and are reported in the result's error list.
    """
    engines = tuple(engines) if engines else spec.engines
    for e in engines:
        if e not in ENGINE_NAMES:
            raise ConfigError(f"unknown engine '{e}'")
    run_seed = spec.seed if seed is None else int(seed)
    run_trials = (
        trials
        if trials is not None
        else (spec.trials_full if full else spec.trials)
    )
    values = spec.values_full if full else spec.values
    rows = []
    errors = []
    timings = []
    for value in values:
        point = _Point(spec, value)
        for strategy in spec.strategies:
            try:
                cache = point.placement(strategy)
            except Exception as exc:
                for engine in engines:
                    errors.append(
                        {
                            "sweep_value": value,
                            "strategy": strategy,
                            "engine": engine,
                            "message": f"{type(exc).__name__}: {exc}",
                        }
                    )
                    rows.append(
                        _full_row(spec, value, strategy, engine, {"tier": "combined", "sdp": float("nan")})
                    )
                continue
            for engine in engines:
                started = time.perf_counter()
                try:
                    cells = _ENGINE_ROWS[engine](point, cache, run_seed, run_trials)
                except Exception as exc:
                    errors.append(
                        {
                            "sweep_value": value,
                            "strategy": strategy,
                            "engine": engine,
                            "message": f"{type(exc).__name__}: {exc}",
                        }
                    )
                    cells = [{"tier": "combined", "sdp": float("nan")}]
                elapsed = (time.perf_counter() - started) * 1e3
                timings.append(
                    {
                        "sweep_value": value,
                        "strategy": strategy,
                        "engine": engine,
                        "wall_ms": elapsed,
                    }
                )
                for cell in cells:
                    cell["wall_ms"] = elapsed
                    rows.append(_full_row(spec, value, strategy, engine, cell))
    return RunResult(
        spec=spec,
        rows=rows,
        errors=errors,
        timings=timings,
        seed=run_seed,
        trials=run_trials,
        values=values,
    )


def _full_row(spec, value, strategy, engine, cell) -> dict:
    return {
        "sweep_name": spec.sweep_name,
        "sweep_value": value,
        "strategy": strategy,
        "engine": engine,
        "tier": cell.get("tier", "combined"),
        "sdp": cell.get("sdp"),
        "stderr": cell.get("stderr"),
        "tol": cell.get("tol"),
        "wall_ms": cell.get("wall_ms"),
        "seed": cell.get("seed"),
    }


def _fmt(value) -> str:
    if value is None or value == "":
        return ""
    if isinstance(value, float):
        return "%.10g" % value
    return str(value)


def write_csv(rows, path, include_timings: bool = False) -> None:
    """Write rows in the fixed column order with stable formatting.

    Timing figures are suppressed by default so repeated runs of the same
    spec and seed produce identical bytes.
    """
    path = Path(path)
    lines = [",".join(CSV_COLUMNS)]
    for row in rows:
        out = dict(row)
        if not include_timings:
            out["wall_ms"] = None
        lines.append(",".join(_fmt(out.get(col)) for col in CSV_COLUMNS))
    path.write_text("\n".join(lines) + "\n")


def _git_commit() -> str | None:
    try:
        res = subprocess.run(
            ["git", "rev-parse", "HEAD"],
            cwd=Path(__file__).parent,
            capture_output=True,
            text=True,
            timeout=5,
        )
    except Exception:
        return None
    return res.stdout.strip() if res.returncode == 0 else None


def write_sidecar(result: RunResult, path) -> None:
    """Write the JSON sidecar: config echo, timings, errors, provenance."""
    spec_dict = asdict(result.spec)
    spec_dict["values"] = list(result.spec.values)
    spec_dict["values_full"] = list(result.spec.values_full)
    payload = {
        "package": _pkg_name,
        "git_commit": _git_commit(),
        "spec": spec_dict,
        "seed": result.seed,
        "trials": result.trials,
        "swept_values": list(result.values),
        "timings_ms": result.timings,
        "errors": result.errors,
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
