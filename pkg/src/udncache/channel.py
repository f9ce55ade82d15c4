"""Radio geometry and piecewise two-state path loss.

Links between a base station and a receiver are described by the horizontal
distance ``r`` and a fixed vertical offset ``h``, so the link length is
``l = sqrt(r**2 + h**2)``. Every link is either line-of-sight (LoS) or
non-line-of-sight (NLoS); each state has its own power-law gain
``A * l**-alpha`` and the LoS probability varies with ``r`` in piecewise
segments. Two concrete models are provided, one for ground receivers and
one for aerial receivers, with coefficients taken from the 3GPP street
canyon and aerial-vehicle channel fits.

All distances are in meters, powers in watts, densities in points per
square meter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "ConfigError",
    "NetworkConfig",
    "PathLossSegment",
    "PathLossModel",
    "ConstantLos",
    "LinearDistanceLos",
    "FarFieldLos",
    "make_tu_model",
    "make_uav_model",
    "make_single_slope_model",
    "gain_los",
    "gain_nlos",
    "equiv_dist_r1",
    "equiv_dist_r2",
    "dbm_to_watts",
    "db_to_linear",
    "per_km2_to_per_m2",
    "urban_config",
    "TU_LOS_AMP",
    "TU_NLOS_AMP",
    "TU_LOS_EXP",
    "TU_NLOS_EXP",
    "UAV_LOS_AMP",
    "UAV_NLOS_AMP",
]

# Ground-receiver (street canyon) two-state fit at 2 GHz.
TU_LOS_AMP = 10.0 ** -4.11
TU_NLOS_AMP = 10.0 ** -3.29
TU_LOS_EXP = 2.09
TU_NLOS_EXP = 3.75

# Aerial-receiver fit; the exponents depend on the receiver altitude and are
# computed in make_uav_model.
UAV_LOS_AMP = 10.0 ** -3.692
UAV_NLOS_AMP = 10.0 ** -3.842

# Altitude range over which the aerial LoS model is calibrated.
UAV_HEIGHT_MIN = 22.5
UAV_HEIGHT_MAX = 300.0


class ConfigError(ValueError):
    """Raised when a configuration or model parameter is out of range."""


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) * 1e-3


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def per_km2_to_per_m2(density: float) -> float:
    return density * 1e-6


@dataclass(frozen=True)
class NetworkConfig:
    """Deployment parameters shared by every engine.

    Densities are per square meter; use :func:`urban_config` or
    :func:`per_km2_to_per_m2` to convert the usual per-km^2 figures.
    ``tx_power`` is in watts and ``sinr_threshold`` is linear; the dBm/dB
    helpers convert at the boundary.
    """

    sbs_density: float
    tu_density: float
    au_density: float
    tx_power: float = dbm_to_watts(24.0)
    noise_power: float = 0.0
    sinr_threshold: float = db_to_linear(-6.0)
    sbs_height: float = 10.0
    tu_height: float = 1.5
    uav_height: float = 30.0
    onoff_q: float = 3.5

    def __post_init__(self) -> None:
        if self.sbs_density <= 0:
            raise ConfigError("sbs_density must be positive")
        if self.tu_density < 0 or self.au_density < 0:
            raise ConfigError("user densities must be nonnegative")
        if self.tu_density + self.au_density <= 0:
            raise ConfigError("total user density must be positive")
        if self.tx_power <= 0:
            raise ConfigError("tx_power must be positive")
        if self.noise_power < 0:
            raise ConfigError("noise_power must be nonnegative")
        if self.sinr_threshold <= 0:
            raise ConfigError("sinr_threshold must be positive")
        if self.onoff_q <= 0:
            raise ConfigError("onoff_q must be positive")
        if self.tu_height_diff <= 0:
            raise ConfigError("sbs_height must exceed tu_height")
        if self.uav_height_diff <= 0:
            raise ConfigError("uav_height must exceed sbs_height")
        if not UAV_HEIGHT_MIN <= self.uav_height <= UAV_HEIGHT_MAX:
            raise ConfigError(
                "uav_height must lie in [%g, %g] m" % (UAV_HEIGHT_MIN, UAV_HEIGHT_MAX)
            )

    @property
    def ue_density(self) -> float:
        """Total requester density (ground plus aerial)."""
        return self.tu_density + self.au_density

    @property
    def tu_height_diff(self) -> float:
        """Antenna height above the ground receiver plane."""
        return self.sbs_height - self.tu_height

    @property
    def uav_height_diff(self) -> float:
        """Aerial receiver height above the antenna plane."""
        return self.uav_height - self.sbs_height

    def with_sbs_density(self, density: float) -> "NetworkConfig":
        return replace(self, sbs_density=density)


def urban_config(
    sbs_density_km2: float = 1e4,
    tu_density_km2: float = 150.0,
    au_density_km2: float = 150.0,
    **overrides,
) -> NetworkConfig:
    """Build a NetworkConfig from per-km^2 densities with urban defaults."""
    return NetworkConfig(
        sbs_density=per_km2_to_per_m2(sbs_density_km2),
        tu_density=per_km2_to_per_m2(tu_density_km2),
        au_density=per_km2_to_per_m2(au_density_km2),
        **overrides,
    )


# ---------------------------------------------------------------------------
# LoS probability laws
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConstantLos:
    """LoS probability that does not vary with distance."""

    value: float

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return np.full(r.shape, self.value)

    def int_r(self, a, b):
        """Integral of ``p(u) * u`` over ``[a, b]`` in closed form."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        return self.value * 0.5 * (b * b - a * a)

    def tail_coeffs(self):
        """Coefficients (w0, w1) of the far expansion ``p(u) ~ w0 + w1/u``."""
        return self.value, 0.0

    def min_tail_radius(self) -> float:
        return 0.0


@dataclass(frozen=True)
class LinearDistanceLos:
    """LoS probability ``1 - l/l0`` that decays linearly in the link length."""

    l0: float
    height: float

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        l = np.hypot(r, self.height)
        return 1.0 - l / self.l0

    def int_r(self, a, b):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        h2 = self.height * self.height
        la3 = (a * a + h2) ** 1.5
        lb3 = (b * b + h2) ** 1.5
        return 0.5 * (b * b - a * a) - (lb3 - la3) / (3.0 * self.l0)

    def tail_coeffs(self):
        # Only ever used on a bounded segment; the far expansion is moot.
        return 0.0, 0.0

    def min_tail_radius(self) -> float:
        return 0.0


@dataclass(frozen=True)
class FarFieldLos:
    """Aerial far-field LoS law ``d/u + exp(-u/p1) * (1 - d/u)``."""

    d: float
    p1: float

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        u = np.maximum(r, 1e-12)
        return self.d / u + np.exp(-u / self.p1) * (1.0 - self.d / u)

    def int_r(self, a, b):
        """Closed form of ``int p(u) u du``: ``d*u - p1*(u - d + p1)*exp(-u/p1)``."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)

        def antideriv(u):
            return self.d * u - self.p1 * (u - self.d + self.p1) * np.exp(-u / self.p1)

        return antideriv(b) - antideriv(a)

    def tail_coeffs(self):
        return 0.0, self.d

    def min_tail_radius(self) -> float:
        # Beyond this radius the exponential term is below double precision.
        return 45.0 * self.p1


# ---------------------------------------------------------------------------
# Piecewise path-loss model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PathLossSegment:
    """One radial segment with its own gain constants and LoS law.

    ``r_lo`` is exclusive and ``r_hi`` inclusive; ``r_hi = inf`` marks the
    outermost segment.
    """

    r_lo: float
    r_hi: float
    amp_los: float
    amp_nlos: float
    exp_los: float
    exp_nlos: float
    los_prob: object

    def __post_init__(self) -> None:
        if self.r_lo < 0 or self.r_hi <= self.r_lo:
            raise ConfigError("segment bounds must satisfy 0 <= r_lo < r_hi")
        if self.amp_los <= 0 or self.amp_nlos <= 0:
            raise ConfigError("gain amplitudes must be positive")
        if self.exp_los <= 2 or self.exp_nlos <= 2:
            raise ConfigError("path-loss exponents must exceed 2")


@dataclass(frozen=True)
class PathLossModel:
    """Ordered segments tiling ``(0, inf)`` plus the vertical offset."""

    height_diff: float
    segments: tuple
    name: str = ""

    def __post_init__(self) -> None:
        if self.height_diff <= 0:
            raise ConfigError("height_diff must be positive")
        if not self.segments:
            raise ConfigError("at least one segment is required")
        if self.segments[0].r_lo != 0.0:
            raise ConfigError("first segment must start at r = 0")
        if not math.isinf(self.segments[-1].r_hi):
            raise ConfigError("last segment must extend to infinity")
        for a, b in zip(self.segments, self.segments[1:]):
            if a.r_hi != b.r_lo:
                raise ConfigError("segments must tile (0, inf) without gaps")

    @property
    def breakpoints(self) -> tuple:
        """Interior segment boundaries, in increasing order."""
        return tuple(s.r_hi for s in self.segments[:-1])

    def segment_index(self, r):
        """Index of the segment containing each radius (r_lo exclusive)."""
        r = np.asarray(r, dtype=float)
        idx = np.zeros(r.shape, dtype=np.intp)
        for i, seg in enumerate(self.segments[1:], start=1):
            idx = np.where(r > seg.r_lo, i, idx)
        return idx

    def link_length(self, r):
        return np.hypot(np.asarray(r, dtype=float), self.height_diff)

    def los_prob(self, r):
        """Piecewise LoS probability at horizontal distance ``r``."""
        r = np.asarray(r, dtype=float)
        out = np.zeros(r.shape)
        for i, seg in enumerate(self.segments):
            mask = (r > seg.r_lo) & (r <= seg.r_hi)
            if i == 0:
                mask = mask | (r == 0.0)
            if np.any(mask):
                out[mask] = np.clip(seg.los_prob(r[mask]), 0.0, 1.0)
        return out

    def _gain(self, r, los: bool):
        r = np.asarray(r, dtype=float)
        l = self.link_length(r)
        out = np.empty(r.shape)
        for i, seg in enumerate(self.segments):
            mask = (r > seg.r_lo) & (r <= seg.r_hi)
            if i == 0:
                mask = mask | (r == 0.0)
            if np.any(mask):
                amp = seg.amp_los if los else seg.amp_nlos
                ex = seg.exp_los if los else seg.exp_nlos
                out[mask] = amp * l[mask] ** -ex
        return out

    def gain_los(self, r):
        return self._gain(r, True)

    def gain_nlos(self, r):
        return self._gain(r, False)

    def int_los_r(self, x):
        """``int_0^x p_los(u) u du`` assembled from per-segment closed forms."""
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        for seg in self.segments:
            hi = np.minimum(x, seg.r_hi)
            lo = np.minimum(x, seg.r_lo)
            active = hi > lo
            contrib = np.where(active, seg.los_prob.int_r(lo, hi), 0.0)
            out = out + contrib
        return out

    def int_nlos_r(self, x):
        """``int_0^x (1 - p_los(u)) u du`` via the complement identity."""
        x = np.asarray(x, dtype=float)
        return 0.5 * x * x - self.int_los_r(x)


def gain_los(model: PathLossModel, r):
    return model.gain_los(r)


def gain_nlos(model: PathLossModel, r):
    return model.gain_nlos(r)


def _power_solve(model: PathLossModel, r, solve_nlos: bool):
    """Distance at which the opposite-state gain matches the state gain at r.

    With segment-constant amplitudes and exponents the equality
    ``A_b * l_b**-e_b = A_a * l_a**-e_a`` has the closed-form solution
    ``l_b = (A_b / A_a)**(1/e_b) * l_a**(e_a/e_b)``. Both shipped models use
    the same constants on every segment, so the solve is global; a bisection
    fallback covers hypothetical models where the closed form is inconsistent
    with the piecewise gain.
    """
    r = np.asarray(r, dtype=float)
    idx = model.segment_index(r)
    l = model.link_length(r)
    h = model.height_diff

    amp_a = np.array([s.amp_los if solve_nlos else s.amp_nlos for s in model.segments])
    exp_a = np.array([s.exp_los if solve_nlos else s.exp_nlos for s in model.segments])
    amp_b = np.array([s.amp_nlos if solve_nlos else s.amp_los for s in model.segments])
    exp_b = np.array([s.exp_nlos if solve_nlos else s.exp_los for s in model.segments])

    uniform = (
        np.allclose(amp_b, amp_b[0])
        and np.allclose(exp_b, exp_b[0])
    )
    a_amp = amp_a[idx]
    a_exp = exp_a[idx]
    target = a_amp * l ** -a_exp

    lb = (amp_b[0] / a_amp) ** (1.0 / exp_b[0]) * l ** (a_exp / exp_b[0])
    out = np.sqrt(np.maximum(lb * lb - h * h, 0.0))
    if uniform:
        return out

    # Fallback: bisection on the piecewise opposite-state gain. Gains decay
    # monotonically within a segment, so scan segments for a bracket.
    gain_b = model.gain_nlos if solve_nlos else model.gain_los
    flat = np.atleast_1d(out)
    tgt = np.atleast_1d(target)
    for i in range(flat.size):
        ti = tgt.flat[i]
        lo, hi = 0.0, max(10.0 * h, 10.0)
        while gain_b(np.array([hi]))[0] > ti and hi < 1e12:
            hi *= 2.0
        if gain_b(np.array([lo]))[0] < ti:
            flat.flat[i] = 0.0
            continue
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if gain_b(np.array([mid]))[0] > ti:
                lo = mid
            else:
                hi = mid
            if hi - lo < 1e-10 * max(1.0, hi):
                break
        flat.flat[i] = 0.5 * (lo + hi)
    return flat.reshape(out.shape) if out.shape else float(flat[0])


def equiv_dist_r1(model: PathLossModel, r):
    """Distance where the NLoS gain equals the LoS gain at ``r``.

    Returns 0 when the LoS gain at ``r`` exceeds every NLoS gain (no real
    solution above the height floor).
    """
    return _power_solve(model, r, solve_nlos=True)


def equiv_dist_r2(model: PathLossModel, r):
    """Distance where the LoS gain equals the NLoS gain at ``r``."""
    return _power_solve(model, r, solve_nlos=False)


# ---------------------------------------------------------------------------
# Model factories
# ---------------------------------------------------------------------------


def make_tu_model(cfg: NetworkConfig, cutoff_l0: float = 300.0) -> PathLossModel:
    """Ground-receiver model: linear LoS decay up to the cutoff link length.

    The LoS probability is ``1 - l / cutoff_l0`` out to the horizontal
    distance where ``l`` reaches ``cutoff_l0`` and zero beyond it.
    """
    h = cfg.tu_height_diff
    if cutoff_l0 <= h:
        raise ConfigError("cutoff_l0 must exceed the height offset")
    d = math.sqrt(cutoff_l0 * cutoff_l0 - h * h)
    near = PathLossSegment(
        0.0, d, TU_LOS_AMP, TU_NLOS_AMP, TU_LOS_EXP, TU_NLOS_EXP,
        LinearDistanceLos(cutoff_l0, h),
    )
    far = PathLossSegment(
        d, math.inf, TU_LOS_AMP, TU_NLOS_AMP, TU_LOS_EXP, TU_NLOS_EXP,
        ConstantLos(0.0),
    )
    return PathLossModel(height_diff=h, segments=(near, far), name="tu")


def uav_los_coeffs(uav_height: float):
    """Altitude-dependent coefficients (p1, d) of the aerial LoS law."""
    lg = math.log10(uav_height)
    p1 = 233.98 * lg - 0.95
    d = max(294.05 * lg - 432.94, 18.0)
    return p1, d


def make_uav_model(cfg: NetworkConfig) -> PathLossModel:
    """Aerial-receiver model: certain LoS near in, heavy-tailed LoS far out."""
    h = cfg.uav_height_diff
    lg = math.log10(cfg.uav_height)
    exp_los = 2.225 - 0.05 * lg
    exp_nlos = 4.32 - 0.76 * lg
    p1, d = uav_los_coeffs(cfg.uav_height)
    near = PathLossSegment(
        0.0, d, UAV_LOS_AMP, UAV_NLOS_AMP, exp_los, exp_nlos, ConstantLos(1.0)
    )
    far = PathLossSegment(
        d, math.inf, UAV_LOS_AMP, UAV_NLOS_AMP, exp_los, exp_nlos,
        FarFieldLos(d, p1),
    )
    return PathLossModel(height_diff=h, segments=(near, far), name="uav")


def make_single_slope_model(
    alpha: float, height_diff: float, amplitude: float = 1.0
) -> PathLossModel:
    """Degenerate always-LoS model with one exponent, for asymptotic checks."""
    seg = PathLossSegment(
        0.0, math.inf, amplitude, amplitude, alpha, alpha, ConstantLos(1.0)
    )
    return PathLossModel(
        height_diff=height_diff, segments=(seg,), name="single_slope"
    )
