"""TV-sequence example values, frozen from the annulus oracle before the build."""

import numpy as np
import pytest

from hmlab import geometry, measures, oracles, sampler

DISK = geometry.make_domain("disk")

# exact cell-integrated TV (M = 64) between the conditional exit measures of
# points at radius 0.999, angles 0 and pi/2, onto the circle of radius 7/8;
# computed once from the annulus series at 2048 modes
ORACLE_TV_RIGHT_ANGLE_N8 = 1.9999999622340825


def test_frozen_oracle_value_still_reproduces():
    ann = oracles.AnnulusExit(0.875, 1.0, modes=2048)
    edges = np.linspace(0, 2 * np.pi, 65)
    px = ann.cell_probabilities(0.999 * np.array([1.0, 0.0]), edges)
    py = ann.cell_probabilities(0.999 * np.array([0.0, 1.0]), edges)
    assert np.abs(px - py).sum() == pytest.approx(ORACLE_TV_RIGHT_ANGLE_N8, abs=1e-9)


def test_fn_estimate_right_angle_pair_exceeds_half():
    level = geometry.exhaustion_level(DISK, 8)
    chart = geometry.cellize_boundary(level, 64)
    params = sampler.WalkParams(walks=30_000, seed=3, min_accepted=1500,
                                keep_hit_points=False)
    fn = measures.fn_estimate(
        DISK, 8, chart,
        0.999 * np.array([1.0, 0.0]),
        0.999 * np.array([0.0, 1.0]),
        params,
    )
    assert fn.f_hat >= 0.5
    # and consistent with the oracle limit within sampling resolution
    assert fn.f_hat == pytest.approx(ORACLE_TV_RIGHT_ANGLE_N8, abs=0.1)


def test_same_point_fn_is_pure_noise_floor():
    # two independent 1e5-accepted histograms of the same point, M = 64
    level = geometry.exhaustion_level(DISK, 2)
    chart = geometry.cellize_boundary(level, 64)
    z = np.array([0.75, 0.0])
    params = sampler.WalkParams(walks=100_000, seed=8, min_accepted=100_000,
                                keep_hit_points=False)
    fn = measures.fn_estimate(DISK, 2, chart, z, z, params)
    assert fn.diagnostics["accepted_x"] >= 100_000
    assert fn.diagnostics["accepted_y"] >= 100_000
    assert fn.f_hat < 0.05
