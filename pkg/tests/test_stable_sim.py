import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import special, stats

from parafrac.errors import NotApplicableError, ParameterError
from parafrac.rng import make_rng
from parafrac.stable_sim import (StableParams, TimeGrid, isotropy_check, sample_positive_stable,
                                 sample_stable_increment, simulate_path)


def levy_cdf(s):
    # density (2 sqrt(pi))^-1 s^-3/2 exp(-1/(4s)), i.e. Levy with scale 1/2
    return special.erfc(1.0 / (2.0 * np.sqrt(s)))


def tail_slope(alpha, d=1, n=1_000_000, seed=11):
    r = np.linalg.norm(sample_stable_increment(StableParams(alpha, d), 1.0, make_rng(seed), size=n), axis=1)
    grid = np.logspace(1, 2, 12)
    surv = np.array([(r > g).mean() for g in grid])
    return np.polyfit(np.log(grid), np.log(surv), 1)[0]


class TestParams:
    @pytest.mark.parametrize("alpha", [0.0, -1.0, 2.01])
    def test_alpha_range(self, alpha):
        with pytest.raises(ParameterError):
            StableParams(alpha)

    def test_d_and_scale(self):
        with pytest.raises(ParameterError):
            StableParams(1.0, d=0)
        with pytest.raises(ParameterError):
            StableParams(1.0, scale_c=2.0)

    def test_grid_invariants(self):
        with pytest.raises(ParameterError):
            TimeGrid(np.array([0.1, 0.2]), 1.0)
        with pytest.raises(ParameterError):
            TimeGrid(np.array([0.0, 0.2, 0.2]), 1.0)
        with pytest.raises(ParameterError):
            TimeGrid(np.array([0.0, 2.0]), 1.0)


class TestPositiveStable:
    def test_laplace_transform(self):
        s = sample_positive_stable(0.5, make_rng(1), size=1_000_000)
        est = np.exp(-s).mean()
        se = np.exp(-s).std() / 1000.0
        assert abs(est - math.exp(-1.0)) < 4 * se

    def test_levy_distribution_ks(self):
        s = sample_positive_stable(0.5, make_rng(2), size=100_000)
        assert stats.kstest(s, levy_cdf).statistic < 0.005

    def test_near_one_concentrates(self):
        s = sample_positive_stable(0.999, make_rng(3), size=10_000)
        assert 0.5 < np.median(s) < 2.0

    def test_strictly_positive(self):
        for beta in (0.1, 0.35, 0.75, 0.95):
            assert np.all(sample_positive_stable(beta, make_rng(4), size=50_000) > 0)

    @pytest.mark.parametrize("beta", [0.0, 1.0, 1.5])
    def test_rejects_beta(self, beta):
        with pytest.raises(ParameterError):
            sample_positive_stable(beta, make_rng(0))


class TestIncrements:
    def test_gaussian_variance(self):
        x = sample_stable_increment(StableParams(2.0, 1), 1.0, make_rng(5), size=1_000_000)
        assert abs(x.var() - 2.0) < 0.02
        assert abs(x.mean()) < 0.01

    def test_cauchy_quantiles(self):
        x = sample_stable_increment(StableParams(1.0, 1), 1.0, make_rng(6), size=1_000_000)[:, 0]
        q1, med, q3 = np.quantile(x, [0.25, 0.5, 0.75])
        assert abs(med) < 0.02
        assert abs((q3 - q1) - 2.0) < 0.02

    def test_characteristic_function(self):
        for alpha in (0.7, 1.3):
            x = sample_stable_increment(StableParams(alpha, 1), 0.5, make_rng(7), size=400_000)[:, 0]
            for xi in (0.5, 1.0, 2.0):
                emp = np.cos(xi * x).mean()
                assert abs(emp - math.exp(-0.5 * xi**alpha)) < 0.005

    @pytest.mark.parametrize("alpha", [0.7, 1.5, 2.0])
    @pytest.mark.parametrize("c", [2.0, 4.0])
    def test_self_similarity(self, alpha, c):
        p = StableParams(alpha, 1)
        big = sample_stable_increment(p, c * 0.3, make_rng(8), size=100_000)[:, 0]
        small = c ** (1 / alpha) * sample_stable_increment(p, 0.3, make_rng(9), size=100_000)[:, 0]
        assert stats.ks_2samp(big, small).pvalue > 0.01

    @pytest.mark.parametrize("alpha", [0.7, 1.5])
    def test_tail_slope(self, alpha):
        assert abs(tail_slope(alpha) + alpha) < 0.15

    def test_rejects_nonpositive_dt(self):
        with pytest.raises(ParameterError):
            sample_stable_increment(StableParams(1.0), 0.0, make_rng(0))

    def test_shapes(self):
        p = StableParams(1.5, 3)
        assert sample_stable_increment(p, 1.0, make_rng(0)).shape == (3,)
        assert sample_stable_increment(p, 1.0, make_rng(0), size=5).shape == (5, 3)


class TestPaths:
    def test_single_point_grid(self):
        path = simulate_path(StableParams(1.2, 2), TimeGrid(np.zeros(1), 1.0), 0)
        assert path.positions.shape == (1, 2)
        assert np.all(path.positions == 0)

    def test_bit_identical_with_same_seed(self):
        g = TimeGrid.uniform(1000)
        a = simulate_path(StableParams(1.3, 2), g, 99).positions
        b = simulate_path(StableParams(1.3, 2), g, 99).positions
        c = simulate_path(StableParams(1.3, 2), g, 100).positions
        assert a.tobytes() == b.tobytes()
        assert not np.array_equal(a, c)

    def test_convolution_identity(self):
        p = StableParams(1.5, 1)
        grid = TimeGrid(np.array([0.0, 0.1, 0.35, 0.4, 1.0]), 1.0)
        finals = np.array([simulate_path(p, grid, s).positions[-1, 0] for s in range(20_000)])
        direct = sample_stable_increment(p, 1.0, make_rng(12345), size=20_000)[:, 0]
        assert stats.ks_2samp(finals, direct).pvalue > 0.01

    def test_increment_stationarity(self):
        path = simulate_path(StableParams(1.2, 1), TimeGrid.uniform(200_001), 4)
        inc = np.diff(path.positions[:, 0])
        assert stats.ks_2samp(inc[:100_000], inc[100_000:]).pvalue > 0.01

    @given(st.lists(st.floats(1e-4, 1.0), min_size=1, max_size=30), st.integers(0, 2**32))
    def test_path_invariants(self, gaps, seed):
        pts = np.concatenate([[0.0], np.cumsum(gaps)])
        grid = TimeGrid(pts, float(pts[-1]))
        path = simulate_path(StableParams(1.7, 2), grid, seed)
        assert path.positions.shape == (len(pts), 2)
        assert np.all(path.positions[0] == 0)
        assert np.all(np.isfinite(path.positions))


class TestIsotropy:
    def test_stable_d2_passes(self):
        x = sample_stable_increment(StableParams(1.5, 2), 1.0, make_rng(20), size=100_000)
        rep = isotropy_check(x)
        assert rep.passed and rep.p_value > 0.01

    def test_gaussian_d3_passes(self):
        x = sample_stable_increment(StableParams(2.0, 3), 1.0, make_rng(21), size=100_000)
        assert isotropy_check(x).passed

    def test_skewed_fails(self):
        x = sample_stable_increment(StableParams(1.5, 2), 1.0, make_rng(22), size=100_000)
        x[:, 0] *= 2.0
        assert not isotropy_check(x).passed

    def test_d1_not_applicable(self):
        with pytest.raises(NotApplicableError):
            isotropy_check(np.ones((20_000, 1)))

    def test_too_few_samples(self):
        with pytest.raises(ParameterError):
            isotropy_check(np.ones((100, 2)))
