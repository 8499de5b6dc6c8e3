import numpy as np
import pytest
from scipy import stats as sps

from sdelaplace.stats import cauchy_cdf, ks_1samp, ks_2samp, norm_cdf


def test_ks_null_calibration():
    failures = 0
    for seed in range(20):
        x = np.random.default_rng(seed).standard_normal(1000)
        failures += ks_1samp(x, "norm")[1] <= 0.001
    assert failures <= 1


def test_ks_power():
    x = np.random.default_rng(1).standard_normal(1000)
    assert ks_1samp(x, "cauchy")[1] < 1e-6


def test_identical_samples():
    x = np.random.default_rng(2).standard_normal(300)
    assert ks_2samp(x, x) == (0.0, 1.0)


def test_statistics_agree_with_scipy():
    rng = np.random.default_rng(3)
    x, y = rng.standard_normal(500), rng.standard_normal(700) + 0.1
    assert ks_1samp(x, "norm")[0] == pytest.approx(sps.kstest(x, "norm").statistic, abs=1e-14)
    assert ks_2samp(x, y)[0] == pytest.approx(sps.ks_2samp(x, y).statistic, abs=1e-14)
    assert ks_1samp(x, lambda v: norm_cdf(v))[0] == ks_1samp(x, "norm")[0]


def test_cdfs():
    assert norm_cdf(0.0) == 0.5
    assert cauchy_cdf(np.array([-1.0, 1.0])) == pytest.approx([0.25, 0.75])


def test_empty():
    with pytest.raises(ValueError):
        ks_1samp([])
    with pytest.raises(ValueError):
        ks_2samp([1.0], [])
