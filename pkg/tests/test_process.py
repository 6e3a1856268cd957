import numpy as np
import pytest

from lswspec import rng, specfile
from lswspec.process import (MAX_DENSE_T, autocovariance_discrepancy, covariance_matrix,
                             max_scales, simulate)
from lswspec.spectrum import SpectrumSpec

S5 = specfile.load_builtin("paper_s5.spec")
WHITE = specfile.load_builtin("white_noise.spec")


def test_max_scales():
    assert max_scales(16) == 4
    assert max_scales(1000) == 9
    assert max_scales(1024) == 10


def test_rng_streams_are_addressable():
    a = rng.normals(3, rng.INNOVATIONS, -1, 10)
    b = rng.normals(3, rng.INNOVATIONS, -1, 4)
    np.testing.assert_array_equal(a[:4], b)
    assert not np.array_equal(a, rng.normals(3, rng.INNOVATIONS, -2, 10))
    assert not np.array_equal(a, rng.normals(3, rng.REGULARIZATION, -1, 10))
    with pytest.raises(ValueError):
        rng.stream(-1, rng.INNOVATIONS, -1)


def test_simulate_deterministic_and_length():
    a = simulate(S5, 1000, 7)
    b = simulate(S5, 1000, 7)
    assert a.T == 1000 and a.seed == 7
    np.testing.assert_array_equal(a.values, b.values)
    assert not np.array_equal(a.values, simulate(S5, 1000, 8).values)


def test_simulate_zero_and_short():
    np.testing.assert_array_equal(simulate(SpectrumSpec.zero(), 64, 1).values, 0.0)
    with pytest.raises(ValueError):
        simulate(S5, 15, 0)


def test_simulate_non_dyadic_length():
    assert simulate(S5, 777, 0).values.shape == (777,)


def test_covariance_symmetric_psd():
    cov = covariance_matrix(S5, 128)
    np.testing.assert_allclose(cov, cov.T, atol=1e-14)
    assert np.min(np.linalg.eigvalsh(cov)) > -1e-10


def test_covariance_white_noise_interior():
    T = 2048
    J = 10
    cov = covariance_matrix(WHITE, T)
    s = T - 2 ** J     # psi_{jk}(s) needs k in [s, s + L_j - 1]: all inside the sample
    assert cov[s, s] == pytest.approx(1.0 - 2.0 ** -J, abs=1e-12)


def test_constant_spectrum_interior_toeplitz():
    spec = SpectrumSpec.constant([1.0, 0.5, 0.25])
    T = 256
    cov = covariance_matrix(spec, T)
    margin = 2 * 2 ** 3
    for u in range(0, 8):
        d = np.diagonal(cov, offset=u)[margin:T - margin - u]
        assert np.ptp(d) <= 1e-12
        assert d[0] == pytest.approx(spec.local_autocovariance(0.5, u), abs=1e-12)


def test_covariance_memory_bound():
    with pytest.raises(MemoryError):
        covariance_matrix(S5, MAX_DENSE_T + 1)


def test_simulation_matches_covariance_monte_carlo():
    T, reps = 256, 4000
    cov = covariance_matrix(S5, T)
    s = int(0.3 * T)
    draws = np.array([simulate(S5, T, r).values[[s, s + 1]] for r in range(reps)])
    prod = draws[:, 0] * draws[:, 1]
    se = prod.std(ddof=1) / np.sqrt(reps)
    assert abs(prod.mean() - cov[s, s + 1]) <= 3 * se
    var = draws[:, 0] ** 2
    assert abs(var.mean() - cov[s, s]) <= 3 * var.std(ddof=1) / np.sqrt(reps)


def test_autocovariance_discrepancy_shrinks():
    d = [autocovariance_discrepancy(S5, T, 15) for T in (128, 256)]
    assert d[1] < d[0]
    assert autocovariance_discrepancy(SpectrumSpec.zero(), 64, 3) == 0.0
