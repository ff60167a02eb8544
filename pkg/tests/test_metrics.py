import math

import numpy as np
import pytest

import config
import engines
import metrics
import scene
from errors import DomainError, GeometryError, ValidationError
from metrics import McConfig
from optics import OpticalConfig, SourceConfig
from specfun import J1_FIRST_ZERO


# ========== resolution radii ==========

def test_single_photon_radius_is_first_dark_ring(cfg):
    assert metrics.generalized_rayleigh_radius(cfg, 1) == pytest.approx(J1_FIRST_ZERO / 24.0, rel=1e-5)


def test_four_photon_radius_regression(cfg):
    # 1.3009 in somb-argument units at the caption geometry
    assert metrics.generalized_rayleigh_radius(cfg, 4) == pytest.approx(0.05420, rel=5e-3)


def test_radius_follows_inverse_square_root(cfg):
    r4 = metrics.generalized_rayleigh_radius(cfg, 4)
    r16 = metrics.generalized_rayleigh_radius(cfg, 16)
    assert r16 / r4 == pytest.approx(0.5, abs=0.03)
    fit = metrics.fit_scaling([(n, metrics.generalized_rayleigh_radius(cfg, n)) for n in config.SQL_NS])
    assert fit.within(*config.SLOPE_WINDOWS['sql_radius'])
    assert fit.r_squared >= config.MIN_R_SQUARED


def test_radius_scales_with_magnification():
    base = metrics.generalized_rayleigh_radius(OpticalConfig(), 2)
    doubled = metrics.generalized_rayleigh_radius(OpticalConfig.from_ratio(250.0, m=3.0), 2)
    assert doubled == pytest.approx(3.0 * base, rel=1e-9)


def test_heisenberg_first_zero_is_exact_inverse_n(cfg):
    zeros = [(n, metrics.heisenberg_first_zero(cfg, n)) for n in config.HEISENBERG_NS]
    for n, z in zeros:
        assert z == pytest.approx(J1_FIRST_ZERO / (24.0 * n), rel=1e-9)
    fit = metrics.fit_scaling(zeros)
    assert fit.slope == pytest.approx(-1.0, abs=1e-6)


# ========== fits ==========

def test_fit_scaling_recovers_power_law():
    fit = metrics.fit_scaling([(n, 3.0 * n ** -0.5) for n in (1, 2, 4, 8)])
    assert fit.slope == pytest.approx(-0.5)
    assert fit.intercept == pytest.approx(math.log(3.0))
    assert fit.r_squared == pytest.approx(1.0)
    assert fit.within(-0.5, 1e-9)
    assert not fit.within(-1.0, 0.1)


def test_fit_scaling_input_checks():
    with pytest.raises(ValidationError):
        metrics.fit_scaling([(1, 1.0), (2, 0.5)])
    with pytest.raises(DomainError):
        metrics.fit_scaling([(1, 1.0), (2, 0.0), (4, 0.25)])
    with pytest.raises(DomainError):
        metrics.fit_scaling([(0, 1.0), (2, 0.5), (4, 0.25)])


# ========== image metrics ==========

def test_sharpness():
    flat = np.ones((16, 16))
    assert metrics.sharpness(flat) == 0.0
    assert metrics.sharpness(np.zeros((16, 16))) == 0.0
    stripes = np.tile((np.arange(16) // 2) % 2, (16, 1)).astype(float)
    assert metrics.sharpness(stripes) > metrics.sharpness(np.outer(np.arange(16.0), np.ones(16)))


def test_normalized_rms():
    a = np.arange(256.0).reshape(16, 16)
    assert metrics.normalized_rms(a, 2 * a) == pytest.approx(0.0, abs=1e-15)
    assert metrics.normalized_rms(a, a[::-1]) > 0.1
    with pytest.raises(ValidationError):
        metrics.normalized_rms(a, np.ones((8, 8)))


def test_encircled_radius_on_grid():
    image = np.zeros((33, 33))
    image[16, 16] = 1.0
    assert metrics.encircled_radius_on_grid(image, 0.5) == 0.0
    image[16, 20] = 1.0
    assert metrics.encircled_radius_on_grid(image, 0.9) == pytest.approx(4.0)


def test_well_separated_points_are_resolved(cfg, x_r):
    grid = scene.two_point_target(64, 0.8, 2.0 * x_r)
    image = engines.image_incoherent(grid, cfg)
    assert metrics.two_point_dip(image, 2.0 * x_r) > 0.9


def test_dip_axis_and_center_are_keyword_only(cfg, x_r):
    image = engines.image_incoherent(scene.two_point_target(64, 0.8, 2.0 * x_r), cfg)
    with pytest.raises(TypeError):
        metrics.two_point_dip(image, 2.0 * x_r, 1)
    assert metrics.two_point_dip(image, 2.0 * x_r, axis=1, center=0.0) == metrics.two_point_dip(image, 2.0 * x_r)


def test_dip_geometry_errors(cfg):
    image = engines.image_incoherent(scene.point_target(32, 0.8), cfg)
    with pytest.raises(GeometryError):
        metrics.two_point_dip(image, 0.0)


# ========== Monte Carlo ==========

def test_mc_config_validation():
    with pytest.raises(ValidationError):
        McConfig(samples=10)
    with pytest.raises(ValidationError):
        McConfig(truncation_radius=1.0)
    with pytest.raises(ValidationError):
        McConfig(N=0)


def test_mc_spread_is_reproducible(cfg):
    mc = McConfig(samples=5000, N=4)
    assert metrics.mc_centroid_spread(cfg, mc) == metrics.mc_centroid_spread(cfg, mc)
    other = McConfig(seed=1, samples=5000, N=4)
    assert metrics.mc_centroid_spread(cfg, other) != metrics.mc_centroid_spread(cfg, mc)


def test_single_photon_spread_matches_quadrature(cfg):
    spread = metrics.mc_centroid_spread(cfg, McConfig(samples=50_000, N=1))
    assert spread == pytest.approx(metrics.airy_photon_spread(cfg), rel=0.05)


def test_centroid_spread_shrinks_as_inverse_square_root(cfg):
    s4 = metrics.mc_centroid_spread(cfg, McConfig(samples=20_000, N=4))
    s16 = metrics.mc_centroid_spread(cfg, McConfig(samples=20_000, N=16))
    assert s16 / s4 == pytest.approx(0.5, rel=0.1)


def test_airy_photon_spread_grows_with_truncation(cfg):
    assert metrics.airy_photon_spread(cfg, 5.0) < metrics.airy_photon_spread(cfg, 10.0)


# ========== bandwidth sweep ==========

def test_dip_vs_bandwidth_table(cfg):
    separation = scene.snapped_separation(128, 0.4, 0.0958)
    grid = scene.two_point_target(128, 0.4, separation)
    table = metrics.dip_vs_bandwidth(grid, cfg, separation, [300.0, 600.0], src=SourceConfig())
    assert list(table.columns) == ['delta_k_t', 'kernel_first_zero', 'dip', 'sharpness']
    assert len(table) == 2
    assert table['kernel_first_zero'].iloc[0] > table['kernel_first_zero'].iloc[1]
    assert table['dip'].between(0.0, 1.0).all()
