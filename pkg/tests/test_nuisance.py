import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from lswspec import specfile
from lswspec.nuisance import (NuisanceEstimates, block_means, c_norm_estimate, default_bandwidth,
                              estimate_nuisance, k2_squared, measured_k2_squared,
                              regularization_constant, smoothed_periodogram, tv_estimate,
                              zigzag_variation)
from lswspec.periodogram import periodogram
from lswspec.process import simulate
from lswspec.spectrum import Piece, SpectrumSpec
from lswspec.wavelets import gram_matrix

WHITE = specfile.load_builtin("white_noise.spec")


def test_default_bandwidth():
    assert default_bandwidth(1000) == 16
    assert default_bandwidth(1) == 1


def test_zigzag_plain_variation():
    v = np.array([0.0, 2.0, 1.0, 3.0, 0.0])
    assert zigzag_variation(v, 0.0) == pytest.approx(np.sum(np.abs(np.diff(v))))
    assert zigzag_variation([], 0.0) == 0.0
    assert zigzag_variation([1.0], 0.0) == 0.0


def test_zigzag_threshold_and_shrink():
    v = np.array([0.0, 0.1, 0.0, 0.1, 5.0, 5.1, 5.0, 0.0])
    assert zigzag_variation(v, 0.5) == pytest.approx(10.2)
    assert zigzag_variation(v, 0.5, shrink=1.0) == pytest.approx(8.2)
    assert zigzag_variation(np.full(10, 3.0), 0.0) == 0.0


@given(arrays(np.float64, st.integers(2, 60), elements=st.floats(-100, 100)),
       st.floats(0, 10))
def test_zigzag_bounded_by_total_variation(v, thr):
    tv = float(np.sum(np.abs(np.diff(v))))
    z = zigzag_variation(v, thr)
    assert -1e-9 <= z <= tv + 1e-9
    assert zigzag_variation(v, thr, shrink=1.0) <= z + 1e-9


def test_block_means():
    np.testing.assert_allclose(block_means(np.arange(10.0), 3), [1.0, 4.0, 7.0])
    np.testing.assert_allclose(block_means(np.arange(4.0), 10), [1.5])


def test_constant_rows_have_zero_tv():
    assert tv_estimate(np.full(1000, 0.7), 95) == 0.0


def test_k2_and_regularization_constant():
    J = 10
    assert k2_squared(-1, J) == pytest.approx(2.0 * gram_matrix(J).a_inv[0, 0])
    assert regularization_constant(1.0, J) == pytest.approx(2.0 * k2_squared(-1, J))
    assert regularization_constant(2.0, J, 0.5) == pytest.approx(4.0 * k2_squared(-1, J))
    with pytest.raises(ValueError):
        regularization_constant(1.0, J, -1.0)


def test_measured_k2_is_order_one():
    k2 = measured_k2_squared(-1, 256, [(0, 256), (100, 132)])
    assert 0.5 < k2 < 5.0


def test_nuisance_validation():
    with pytest.raises(ValueError):
        NuisanceEstimates(-1.0)
    with pytest.raises(ValueError):
        NuisanceEstimates(1.0, {-1: -0.1})


def test_smoothed_periodogram_nonnegative():
    grid = periodogram(simulate(WHITE, 256, 0).values)
    L = smoothed_periodogram(grid, 8)
    assert L.shape == (8, 256)
    assert np.all(L >= 0)
    with pytest.raises(ValueError):
        smoothed_periodogram(grid, 0)


def test_c_norm_white_noise_near_one():
    vals = [c_norm_estimate(periodogram(simulate(WHITE, 1024, r).values), 256)
            for r in range(100)]
    assert np.mean(vals) == pytest.approx(1.0, rel=0.2)


def test_tv_single_jump_band():
    spec = SpectrumSpec(1, {-1: (Piece.constant(0.5, 1.0, 1.0),)})     # one jump of size 1
    vals = []
    for r in range(100):
        grid = periodogram(simulate(spec, 1000, r).values)
        vals.append(estimate_nuisance(grid).tv[-1])
    vals = np.array(vals)
    assert np.mean((vals >= 0.5) & (vals <= 2.0)) >= 0.9


def test_estimate_nuisance_fields():
    grid = periodogram(simulate(WHITE, 512, 3).values)
    est = estimate_nuisance(grid, c2_scale=0.5)
    assert set(est.tv) == set(range(-1, -10, -1))
    assert est.c2 == pytest.approx(regularization_constant(est.c_norm, grid.J, 0.5))
    assert est.bandwidth == default_bandwidth(512)
    assert est.smooth.shape == (9, 512)
    with pytest.raises(ValueError):
        estimate_nuisance(grid, bandwidth=0)
