import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from parafrac.cover import (ScalingLedger, adaptive_occupancy, cell_index, check_scale_coupling,
                            coupled_k_max, estimate_dimension, graph_cloud, hit_count_statistic,
                            occupancy, occupied_cells, range_cloud, union_ledger)
from parafrac.domains import DriftSpec
from parafrac.errors import InsufficientDataError, ParameterError, PreconditionError
from parafrac.stable_sim import PathSample, StableParams, TimeGrid, simulate_path

clouds = st.integers(1, 3).flatmap(
    lambda m: arrays(np.float64, st.tuples(st.integers(1, 300), st.just(m)),
                     elements=st.floats(0, 1, allow_nan=False)))
alphas = st.sampled_from([0.5, 0.7, 1.0, 1.5, 2.0])


class TestCells:
    def test_uniform_grid(self):
        assert cell_index(1.0, 1, (0.6, 0.6)) == (1, 1)

    def test_parabolic(self):
        assert cell_index(2.0, 2, (0.3, 0.8)) == (1, 1)

    def test_half_open_edge(self):
        assert cell_index(1.0, 2, (0.25, 0.0))[0] == 1

    def test_negative_level(self):
        with pytest.raises(ParameterError):
            cell_index(1.0, -1, (0.1, 0.1))


class TestOccupancy:
    def test_single_point(self):
        led = occupancy(np.array([[0.3, 0.2]]), 1.5, range(0, 12))
        assert set(led.counts) == {1}

    def test_segment(self):
        for k in (3, 6, 9):
            pts = np.column_stack([np.arange(2**k + 1) / 2**k, np.zeros(2**k + 1)])
            assert occupancy(pts, 1.0, [k]).counts == (2**k + 1,)

    def test_empty(self):
        with pytest.raises(ParameterError):
            occupancy(np.zeros((0, 2)), 1.0, [1])

    @given(clouds, clouds, alphas, st.integers(0, 8))
    def test_union_subadditive(self, a, b, alpha, k):
        if a.shape[1] != b.shape[1]:
            b = np.resize(b, (b.shape[0], a.shape[1]))
        la, lb = occupancy(a, alpha, [k]), occupancy(b, alpha, [k])
        lu = union_ledger(la, lb, a, b)
        assert lu.counts[0] <= la.counts[0] + lb.counts[0]
        assert lu.counts[0] >= max(la.counts[0], lb.counts[0])

    @given(clouds, alphas, st.integers(0, 10))
    def test_monotone_refinement(self, pts, alpha, k):
        extra = np.vstack([pts, pts[::2] * 0.5 + 0.1])
        assert occupancy(extra, alpha, [k]).counts[0] >= occupancy(pts, alpha, [k]).counts[0]

    @given(clouds, alphas, st.integers(0, 12), st.integers(2, 5))
    def test_parallel_split_identical(self, pts, alpha, k, workers):
        serial = occupied_cells(pts, alpha, k)
        split = occupied_cells(pts, alpha, k, workers=workers)
        assert np.array_equal(serial, split)

    @given(clouds, alphas, st.integers(0, 12))
    def test_count_bounds(self, pts, alpha, k):
        n = occupancy(pts, alpha, [k]).counts[0]
        assert 1 <= n <= pts.shape[0]

    def test_large_index_fallback(self):
        pts = np.array([[0.0, 0.0, 0.0], [1e6, 1e6, 1e6], [1e6, 1e6, 1e6]])
        assert occupied_cells(pts, 1.0, 30).shape[0] == 2


class TestEstimate:
    def test_exact_power_law(self):
        led = ScalingLedger(1.0, tuple(range(10)), tuple(2**k for k in range(10)), 2**10)
        est = estimate_dimension(led)
        assert est.value == pytest.approx(1.0, abs=1e-12)
        assert est.stderr == pytest.approx(0.0, abs=1e-12)
        assert est.window == tuple(range(2, 8))

    def test_parabolic_gauge(self):
        led = ScalingLedger(2.0, tuple(range(10)), tuple(4**k for k in range(10)), 4**10)
        assert estimate_dimension(led, "diam_gauge").value == pytest.approx(4.0, abs=1e-12)

    def test_range_gauge(self):
        # range clouds: space side 2^(-k/alpha), so N_k = 2^(k/alpha) is dimension 1
        levels = tuple(range(10))
        led = ScalingLedger(0.5, levels, tuple(4**k for k in levels), 4**10, time_axis=False)
        assert led.gauge_factor == 0.5
        assert estimate_dimension(led).value == pytest.approx(1.0, abs=1e-12)

    def test_too_few_levels(self):
        led = ScalingLedger(1.0, tuple(range(7)), tuple(2**k for k in range(7)), 128)
        with pytest.raises(InsufficientDataError):
            estimate_dimension(led)

    def test_unknown_convention(self):
        led = ScalingLedger(1.0, tuple(range(9)), tuple(2**k for k in range(9)), 512)
        with pytest.raises(ParameterError):
            estimate_dimension(led, "box")

    @given(st.lists(st.integers(1, 10**6), min_size=8, max_size=16), alphas, st.booleans())
    def test_gauge_identity(self, counts, alpha, time_axis):
        led = ScalingLedger(alpha, tuple(range(len(counts))), tuple(sorted(counts)), 10**6, time_axis)
        a = estimate_dimension(led, "time_gauge")
        b = estimate_dimension(led, "diam_gauge")
        assert a.value == b.value and a.stderr == b.stderr


@pytest.fixture(scope="module")
def path():
    return simulate_path(StableParams(1.5, 2), TimeGrid.uniform(2**14 + 1), 5)


class TestClouds:
    def test_zero_drift_graph_is_path(self, path):
        g = graph_cloud(path, DriftSpec("zero", d=2))
        assert np.array_equal(g[:, 0], path.times)
        assert np.array_equal(g[:, 1:], path.positions)

    def test_constant_drift_translation(self, path):
        f = DriftSpec("constant", d=2, constant=(0.37, -1.21))
        r0, r1 = range_cloud(path), range_cloud(path, f)
        assert np.allclose(r1 - r0, [0.37, -1.21])
        for k in (2, 5, 8):
            n0 = occupancy(r0, 1.5, [k], time_axis=False).counts[0]
            n1 = occupancy(r1, 1.5, [k], time_axis=False).counts[0]
            assert n0 / 4 <= n1 <= 4 * n0

    def test_negated_path_drift_cancels(self, path):
        f = DriftSpec("sampled_path", path=path, scale=-1.0)
        r = range_cloud(path, f)
        assert np.all(r == 0)
        assert set(occupancy(r, 1.5, range(1, 10), time_axis=False).counts) == {1}

    def test_long_horizon_rescaled(self):
        p = simulate_path(StableParams(2.0), TimeGrid.uniform(101, 4.0), 0)
        g = graph_cloud(p)
        assert g[-1, 0] == 1.0


class TestHitCount:
    def test_constant_path(self):
        g = TimeGrid.uniform(2**10 + 1)
        path = PathSample(StableParams(1.0), g, np.zeros((len(g), 1)))
        for k in (2, 5, 8):
            assert np.all(hit_count_statistic(path, k) == 1)

    def test_coupling_precondition(self):
        p = simulate_path(StableParams(2.0), TimeGrid.uniform(65), 0)
        with pytest.raises(PreconditionError):
            hit_count_statistic(p, 6)
        with pytest.raises(PreconditionError):
            check_scale_coupling(p, 5)
        check_scale_coupling(p, 4)
        assert coupled_k_max(p) == 4

    @pytest.mark.parametrize("alpha,bound", [(2.0, 0.1), (1.0, 0.15)])
    def test_mean_growth_slow(self, alpha, bound):
        for seed in range(3):
            p = simulate_path(StableParams(alpha), TimeGrid.uniform(2**16 + 1), seed)
            ks = np.arange(4, 11)
            m = [hit_count_statistic(p, k).mean() for k in ks]
            assert np.polyfit(ks * math.log(2), np.log(m), 1)[0] <= bound


class TestStability:
    @pytest.mark.parametrize("alpha", [2.0, 1.5])
    def test_union_estimate_not_below_parts(self, alpha):
        # two halves of one sampled graph: the union estimate must not drop below the larger part
        for seed in range(2):
            p = simulate_path(StableParams(alpha), TimeGrid.uniform(2**20 + 1), seed)
            g = graph_cloud(p)
            half = len(g) // 2
            km = coupled_k_max(p)
            ea, eb, eu = (estimate_dimension(adaptive_occupancy(c, 1.0, km)).value
                          for c in (g[:half], g[half:], g))
            assert eu >= max(ea, eb) - 0.05

    def test_adaptive_stops_at_saturation(self):
        pts = np.random.default_rng(0).random((4096, 2))
        led = adaptive_occupancy(pts, 1.0, 20)
        assert max(led.counts) <= 1024
        assert led.levels == tuple(range(2, 2 + len(led.levels)))
