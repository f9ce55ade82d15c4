"""Channel model tests: constants, LoS laws, gains, equal-gain radii."""

import math

import numpy as np
import pytest
from scipy import integrate, optimize

from udncache.channel import (
    ConfigError,
    ConstantLos,
    FarFieldLos,
    LinearDistanceLos,
    NetworkConfig,
    PathLossModel,
    PathLossSegment,
    TU_LOS_AMP,
    TU_LOS_EXP,
    TU_NLOS_AMP,
    TU_NLOS_EXP,
    db_to_linear,
    dbm_to_watts,
    equiv_dist_r1,
    equiv_dist_r2,
    make_single_slope_model,
    make_tu_model,
    make_uav_model,
    per_km2_to_per_m2,
    uav_los_coeffs,
    urban_config,
)


def test_unit_conversions():
    assert dbm_to_watts(24.0) == pytest.approx(0.251188643150958, rel=1e-12)
    assert dbm_to_watts(0.0) == pytest.approx(1e-3, rel=1e-12)
    assert db_to_linear(-6.0) == pytest.approx(0.251188643150958, rel=1e-12)
    assert db_to_linear(0.0) == 1.0
    assert per_km2_to_per_m2(1e4) == pytest.approx(1e-2, rel=1e-15)


def test_urban_defaults():
    cfg = urban_config()
    assert cfg.sbs_density == pytest.approx(1e-2)
    assert cfg.tu_density == pytest.approx(150e-6)
    assert cfg.au_density == pytest.approx(150e-6)
    assert cfg.ue_density == pytest.approx(300e-6)
    assert cfg.tx_power == pytest.approx(dbm_to_watts(24.0))
    assert cfg.noise_power == 0.0
    assert cfg.sinr_threshold == pytest.approx(10.0 ** -0.6)
    assert cfg.sbs_height == 10.0
    assert cfg.tu_height == 1.5
    assert cfg.uav_height == 30.0
    assert cfg.onoff_q == 3.5
    assert cfg.tu_height_diff == pytest.approx(8.5)
    assert cfg.uav_height_diff == pytest.approx(20.0)


def test_config_validation():
    with pytest.raises(ConfigError):
        urban_config(sbs_density_km2=0.0)
    with pytest.raises(ConfigError):
        urban_config(tu_density_km2=-1.0)
    with pytest.raises(ConfigError):
        urban_config(tu_density_km2=0.0, au_density_km2=0.0)
    with pytest.raises(ConfigError):
        urban_config(tx_power=0.0)
    with pytest.raises(ConfigError):
        urban_config(noise_power=-1e-12)
    with pytest.raises(ConfigError):
        urban_config(sinr_threshold=0.0)
    with pytest.raises(ConfigError):
        urban_config(onoff_q=0.0)
    with pytest.raises(ConfigError):
        urban_config(tu_height=10.0)  # receiver at antenna height
    with pytest.raises(ConfigError):
        urban_config(uav_height=22.0)  # below the calibrated range
    with pytest.raises(ConfigError):
        urban_config(uav_height=301.0)
    cfg = urban_config().with_sbs_density(5e-3)
    assert cfg.sbs_density == 5e-3
    assert cfg.tu_density == pytest.approx(150e-6)


def test_tu_model_structure():
    cfg = urban_config()
    model = make_tu_model(cfg)
    # Horizontal cutoff where the 3-d link length reaches the 300 m limit.
    d_t = math.sqrt(300.0**2 - 8.5**2)
    assert model.breakpoints[0] == pytest.approx(d_t, rel=1e-14)
    assert d_t == pytest.approx(299.8795591566721, rel=1e-13)
    assert model.height_diff == pytest.approx(8.5)
    # LoS probability: linear in link length inside, zero outside.
    assert model.los_prob(np.array([0.0]))[0] == pytest.approx(1.0 - 8.5 / 300.0)
    r = 100.0
    expect = 1.0 - math.hypot(r, 8.5) / 300.0
    assert model.los_prob(np.array([r]))[0] == pytest.approx(expect, rel=1e-14)
    assert model.los_prob(np.array([d_t + 1e-6]))[0] == 0.0
    assert model.los_prob(np.array([1e4]))[0] == 0.0
    with pytest.raises(ConfigError):
        make_tu_model(cfg, cutoff_l0=8.0)  # below the height offset


def test_uav_model_structure():
    cfg = urban_config()
    model = make_uav_model(cfg)
    p1, d = uav_los_coeffs(30.0)
    assert d == 18.0  # floor is active at 30 m altitude
    assert p1 == pytest.approx(233.98 * math.log10(30.0) - 0.95, rel=1e-14)
    assert model.breakpoints[0] == pytest.approx(18.0)
    assert model.los_prob(np.array([5.0]))[0] == 1.0
    assert model.los_prob(np.array([18.0]))[0] == 1.0
    u = 25.0
    expect = d / u + math.exp(-u / p1) * (1.0 - d / u)
    assert model.los_prob(np.array([u]))[0] == pytest.approx(expect, rel=1e-14)
    # At 300 m altitude the distance term leaves the floor.
    p1_hi, d_hi = uav_los_coeffs(300.0)
    assert d_hi == pytest.approx(294.05 * math.log10(300.0) - 432.94, rel=1e-14)
    assert d_hi > 18.0


def test_uav_exponents_altitude():
    cfg = urban_config(uav_height=100.0)
    model = make_uav_model(cfg)
    seg = model.segments[0]
    assert seg.exp_los == pytest.approx(2.225 - 0.05 * 2.0, rel=1e-14)
    assert seg.exp_nlos == pytest.approx(4.32 - 0.76 * 2.0, rel=1e-14)
    assert model.height_diff == pytest.approx(90.0)


def test_gain_values_and_monotonicity():
    cfg = urban_config()
    tu = make_tu_model(cfg)
    r = np.array([0.0, 3.0, 50.0, 400.0])
    l = np.hypot(r, 8.5)
    np.testing.assert_allclose(tu.gain_los(r), TU_LOS_AMP * l**-TU_LOS_EXP, rtol=1e-13)
    np.testing.assert_allclose(
        tu.gain_nlos(r), TU_NLOS_AMP * l**-TU_NLOS_EXP, rtol=1e-13
    )
    grid = np.linspace(0.0, 2000.0, 4001)
    for model in (tu, make_uav_model(cfg)):
        for gain in (model.gain_los, model.gain_nlos):
            g = gain(grid)
            assert np.all(np.diff(g) < 0.0)
            assert np.all(g > 0.0)
        p = model.los_prob(grid)
        assert np.all((p >= 0.0) & (p <= 1.0))
    assert tu.gain_los(np.array([50.0]))[0] > tu.gain_nlos(np.array([50.0]))[0]


def test_los_integral_against_quadrature():
    cfg = urban_config()
    for model in (make_tu_model(cfg), make_uav_model(cfg)):
        for x in (5.0, 17.0, 60.0, 299.0, 310.0, 1500.0):
            ref, _ = integrate.quad(
                lambda u: float(model.los_prob(np.array([u]))[0]) * u,
                0.0,
                x,
                points=[b for b in model.breakpoints if b < x],
                limit=200,
            )
            got = float(model.int_los_r(np.array([x]))[0])
            assert got == pytest.approx(ref, abs=1e-8 * max(1.0, x * x))
            # and the complement identity
            total = float(model.int_nlos_r(np.array([x]))[0]) + got
            assert total == pytest.approx(0.5 * x * x, rel=1e-12)


def test_equal_gain_radii_match_bisection():
    cfg = urban_config()
    for model in (make_tu_model(cfg), make_uav_model(cfg)):
        for r in (0.5, 5.0, 40.0, 250.0, 800.0):
            target = float(model.gain_los(np.array([r]))[0])

            def diff(x):
                return float(model.gain_nlos(np.array([x]))[0]) - target

            r1 = float(np.atleast_1d(equiv_dist_r1(model, np.array([r])))[0])
            if diff(0.0) <= 0.0:
                assert r1 == 0.0
            else:
                ref = optimize.brentq(diff, 0.0, 1e6, xtol=1e-10)
                assert r1 == pytest.approx(ref, rel=1e-8, abs=1e-8)
            # reverse direction: LoS distance matching the NLoS gain at r
            target_n = float(model.gain_nlos(np.array([r]))[0])

            def diff2(x):
                return float(model.gain_los(np.array([x]))[0]) - target_n

            r2 = float(np.atleast_1d(equiv_dist_r2(model, np.array([r])))[0])
            ref2 = optimize.brentq(diff2, 0.0, 1e7, xtol=1e-10)
            assert r2 == pytest.approx(ref2, rel=1e-8, abs=1e-8)
            # NLoS is never stronger, so the matching LoS point lies farther.
            assert r2 >= r


def test_equal_gain_radii_are_inverse():
    cfg = urban_config()
    model = make_uav_model(cfg)
    r = np.array([1.0, 10.0, 100.0])
    r2 = equiv_dist_r2(model, r)
    back = equiv_dist_r1(model, r2)
    np.testing.assert_allclose(back, r, rtol=1e-10)


def test_single_slope_model():
    model = make_single_slope_model(4.0, 8.5)
    r = np.array([0.0, 10.0, 100.0])
    expect = (r * r + 8.5**2) ** -2.0
    np.testing.assert_allclose(model.gain_los(r), expect, rtol=1e-13)
    np.testing.assert_allclose(model.gain_nlos(r), expect, rtol=1e-13)
    assert model.los_prob(np.array([123.0]))[0] == 1.0
    assert model.breakpoints == ()
    with pytest.raises(ConfigError):
        make_single_slope_model(2.0, 8.5)


def test_segment_tiling_validation():
    los = ConstantLos(1.0)
    seg = lambda a, b: PathLossSegment(a, b, 1e-4, 1e-4, 3.0, 3.5, los)
    with pytest.raises(ConfigError):
        PathLossModel(height_diff=8.5, segments=())
    with pytest.raises(ConfigError):
        PathLossModel(height_diff=8.5, segments=(seg(1.0, math.inf),))
    with pytest.raises(ConfigError):
        PathLossModel(height_diff=8.5, segments=(seg(0.0, 10.0),))
    with pytest.raises(ConfigError):
        PathLossModel(
            height_diff=8.5, segments=(seg(0.0, 10.0), seg(11.0, math.inf))
        )
    with pytest.raises(ConfigError):
        PathLossSegment(0.0, 10.0, 1e-4, 1e-4, 2.0, 3.5, los)  # exponent at 2
    with pytest.raises(ConfigError):
        PathLossSegment(0.0, 10.0, 0.0, 1e-4, 3.0, 3.5, los)


def test_los_law_closed_integrals():
    # Each LoS law's int_r must match direct quadrature of p(u) * u.
    laws = [
        ConstantLos(0.4),
        LinearDistanceLos(300.0, 8.5),
        FarFieldLos(18.0, 344.0),
    ]
    for law in laws:
        for a, b in ((0.0, 7.0), (3.0, 50.0), (20.0, 900.0)):
            ref, _ = integrate.quad(
                lambda u: float(law(np.array([u]))[0]) * u, a, b, limit=200
            )
            got = float(law.int_r(np.array([a]), np.array([b]))[0])
            assert got == pytest.approx(ref, rel=1e-9, abs=1e-9)


def test_network_config_is_frozen():
    cfg = urban_config()
    with pytest.raises(Exception):
        cfg.sbs_density = 1.0
    assert isinstance(cfg, NetworkConfig)
