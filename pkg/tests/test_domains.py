import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from parafrac.cover import adaptive_occupancy, estimate_dimension
from parafrac.domains import (DriftSpec, build_time_set, cantor_left_endpoints, confine,
                              eval_drift, holder_certificate)
from parafrac.errors import ParameterError
from parafrac.stable_sim import StableParams, TimeGrid, simulate_path

LOG2_LOG3 = math.log(2) / math.log(3)


class TestTimeSets:
    def test_cantor_dimension(self):
        ts = build_time_set("cantor", 5)
        assert ts.known_dim == pytest.approx(0.6309297535714574, abs=1e-15)
        assert len(ts) == 32

    def test_cantor_box_count_matches_similarity_dimension(self):
        ts = build_time_set("cantor", 16)
        ledger = adaptive_occupancy(ts.points[:, None], 1.0, k_max=24)
        assert abs(estimate_dimension(ledger).value - LOG2_LOG3) < 0.05

    def test_interval(self):
        ts = build_time_set("interval", 6, T_max=2.0)
        assert ts.known_dim == 1.0
        assert len(ts) == 65
        assert np.allclose(np.diff(ts.points), 2.0 / 64)
        assert ts.points[-1] == 2.0

    def test_half_ratio_is_full(self):
        ts = build_time_set("cantor", 8, ratio=0.5)
        assert ts.known_dim == 1.0
        assert np.allclose(np.diff(ts.points), 1 / 256)

    @pytest.mark.parametrize("kwargs", [dict(kind="cantor", level=3, ratio=0.6),
                                        dict(kind="cantor", level=-1),
                                        dict(kind="interval", level=3, T_max=0.0),
                                        dict(kind="sierpinski", level=3)])
    def test_invalid(self, kwargs):
        with pytest.raises(ParameterError):
            build_time_set(**kwargs)

    @given(st.integers(0, 10), st.floats(0.05, 0.5))
    def test_cantor_refinement(self, n, r):
        coarse = cantor_left_endpoints(n, r)
        fine = cantor_left_endpoints(n + 1, r)
        width = r**n
        idx = np.searchsorted(coarse, fine, side="right") - 1
        assert np.all(idx >= 0)
        assert np.all(fine - coarse[idx] <= width * (1 + 1e-12))

    def test_grid_is_valid(self):
        g = build_time_set("cantor", 6).grid()
        assert g.points[0] == 0.0 and len(g) == 64


class TestDrifts:
    def test_zero(self):
        f = DriftSpec("zero", d=2)
        assert np.all(eval_drift(f, 0.3) == 0)
        assert eval_drift(f, np.linspace(0, 1, 5)).shape == (5, 2)

    def test_linear_power(self):
        assert np.allclose(eval_drift(DriftSpec("power", d=3, beta=1.0), 0.5), 0.5)

    def test_constant(self):
        f = DriftSpec("constant", d=2, constant=(1.0, -2.0))
        assert np.array_equal(eval_drift(f, 0.7), [1.0, -2.0])

    def test_weierstrass_at_zero(self):
        f = DriftSpec("weierstrass", beta=0.5, base=2.0)
        assert f.base ** (-f.n_terms * f.beta) < 1e-12
        assert eval_drift(f, 0.0)[0] == pytest.approx(1 / (1 - 2**-0.5), abs=1e-10)

    def test_outside_domain(self):
        with pytest.raises(ParameterError):
            eval_drift(DriftSpec("zero"), 1.5)
        with pytest.raises(ParameterError):
            eval_drift(DriftSpec("zero"), -0.1)

    @pytest.mark.parametrize("kw", [dict(kind="constant", d=2, constant=(1.0,)),
                                    dict(kind="power", beta=0.0),
                                    dict(kind="weierstrass", beta=1.0),
                                    dict(kind="weierstrass", beta=0.5, base=1.0),
                                    dict(kind="sampled_path"),
                                    dict(kind="spline")])
    def test_invalid_specs(self, kw):
        with pytest.raises(ParameterError):
            DriftSpec(**kw)

    def test_holder_beta(self):
        assert DriftSpec("zero").holder_beta == 1.0
        assert DriftSpec("power", beta=0.3).holder_beta == 0.3
        assert DriftSpec("weierstrass", beta=0.4).holder_beta == 0.4

    def test_sampled_path_is_left_constant(self):
        path = simulate_path(StableParams(1.5, 2), TimeGrid(np.array([0.0, 0.25, 0.5, 1.0]), 1.0), 3)
        f = DriftSpec("sampled_path", path=path)
        assert f.d == 2
        assert np.array_equal(eval_drift(f, 0.25), path.positions[1])
        assert np.array_equal(eval_drift(f, 0.49), path.positions[1])
        assert np.array_equal(eval_drift(f, 1.0), path.positions[3])
        neg = DriftSpec("sampled_path", path=path, scale=-1.0)
        assert np.array_equal(eval_drift(neg, 0.6), -path.positions[2])

    @given(st.floats(0, 1), st.sampled_from(["power", "weierstrass"]))
    def test_eval_is_pure(self, t, kind):
        f = DriftSpec(kind, beta=0.5)
        assert np.array_equal(eval_drift(f, t), eval_drift(f, t))


class TestHolder:
    def test_constant_drift(self):
        cert = holder_certificate(DriftSpec("constant", constant=(2.0,)), 0.7)
        assert cert.constant == 0.0 and cert.passed

    def test_sqrt_at_half(self):
        cert = holder_certificate(DriftSpec("power", beta=0.5), 0.5)
        assert cert.passed and cert.constant_refined <= 1.0 + 1e-12

    def test_sqrt_at_point_nine_fails(self):
        cert = holder_certificate(DriftSpec("power", beta=0.5), 0.9)
        assert not cert.passed

    @given(st.floats(0.1, 1.0), st.floats(0.05, 1.0), st.sampled_from(["power", "weierstrass"]),
           st.integers(0, 100))
    def test_monotone_in_exponent(self, b, b_small, kind, seed):
        assume(b_small < b)
        f = DriftSpec(kind, beta=0.3 if kind == "power" else 0.6)
        if holder_certificate(f, b, seed=seed).passed:
            assert holder_certificate(f, b_small, seed=seed).passed


@given(st.integers(2, 200), st.integers(1, 3), st.floats(0.1, 10.0))
def test_confine_radius(n, d, spread):
    v = np.random.default_rng(n).standard_normal((n, d)) * spread
    out = confine(v)
    assert np.all(np.linalg.norm(out, axis=1) <= 0.5 + 1e-12)
