import math
from statistics import NormalDist

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from misreport.estimands import reported_means
from misreport.population import DeltaVector, Margins, independence_deltas
from misreport.power import (
    DesignParams,
    EffectSignIndeterminate,
    detection_probability,
    detection_probability_from_means,
    normal_cdf,
    normal_quantile,
    sample_size_fixed_delta,
    sample_size_from_means,
    standard_sample_size,
)

from .conftest import BASELINE

STD = NormalDist()
P = DesignParams()


class TestNormal:
    def test_reference_values(self):
        assert normal_cdf(0.0) == 0.5
        assert normal_quantile(0.95) == pytest.approx(1.6449, abs=1e-4)
        assert normal_quantile(0.8) == pytest.approx(0.8416212335729143, abs=1e-12)

    @given(st.floats(-8, 8))
    def test_cdf_matches_stdlib(self, x):
        assert normal_cdf(x) == pytest.approx(STD.cdf(x), abs=1e-10)

    @given(st.floats(1e-9, 1 - 1e-9))
    def test_quantile_matches_stdlib(self, p):
        assert normal_quantile(p) == pytest.approx(STD.inv_cdf(p), abs=1e-8)

    @given(st.floats(-6, 6))
    def test_round_trip(self, x):
        assert normal_quantile(normal_cdf(x)) == pytest.approx(x, abs=1e-8)

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5])
    def test_quantile_domain(self, p):
        with pytest.raises(ValueError):
            normal_quantile(p)


class TestDesignParams:
    def test_z_total(self):
        assert P.z_total == pytest.approx(STD.inv_cdf(0.8) + STD.inv_cdf(0.95), abs=1e-12)

    @pytest.mark.parametrize("kw", [{"alpha": 0}, {"beta": 1}, {"direction": "greater"}])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            DesignParams(**kw)


def _oracle_power(mu1, mu0, n, alpha=0.05):
    sd = math.sqrt((mu1 * (1 - mu1) + mu0 * (1 - mu0)) / n)
    return STD.cdf(STD.inv_cdf(alpha) - (mu1 - mu0) / sd)


class TestDetectionProbability:
    def test_baseline_306(self):
        p = detection_probability(BASELINE, independence_deltas(BASELINE), 306, P)
        assert p == pytest.approx(_oracle_power(0.45, 0.55, 306), abs=1e-12)
        assert p == pytest.approx(0.800, abs=0.002)

    def test_null_gives_alpha(self):
        assert detection_probability_from_means(0.3, 0.3, 100, P) == pytest.approx(0.05, abs=1e-12)

    def test_underreporting_581(self):
        m = Margins(0.1, 0.2, 0.35, 0.35, U=0.2)
        assert detection_probability(m, independence_deltas(m), 581, P) == pytest.approx(0.800, abs=0.002)

    def test_zero_variance(self):
        with pytest.raises(ValueError):
            detection_probability_from_means(0.0, 1.0, 10, P)

    @given(st.floats(0.05, 0.95), st.floats(0.05, 0.95), st.integers(1, 10_000))
    def test_matches_oracle(self, mu1, mu0, n):
        assert detection_probability_from_means(mu1, mu0, n, P) == pytest.approx(_oracle_power(mu1, mu0, n), abs=1e-10)

    @given(st.floats(0.05, 0.95), st.floats(0.05, 0.95), st.integers(1, 1000), st.integers(2, 9))
    def test_depends_on_n_only_through_root(self, mu1, mu0, n, k):
        # k^2 n units at effect d equal n units at effect k d in the standardised statistic
        d = (mu1 - mu0) / math.sqrt(mu1 * (1 - mu1) + mu0 * (1 - mu0))
        direct = detection_probability_from_means(mu1, mu0, k * k * n, P)
        assert direct == pytest.approx(STD.cdf(STD.inv_cdf(0.05) - k * math.sqrt(n) * d), abs=1e-10)

    @pytest.mark.parametrize("which", ["U", "O"])
    def test_strictly_decreasing_in_misreporting(self, which):
        grid = [0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3]
        powers = []
        for share in grid:
            m = Margins(0.1, 0.2, 0.35, 0.35, **{which: share})
            powers.append(detection_probability(m, independence_deltas(m), 306, P))
        assert np.all(np.diff(powers) < 0)


class TestSampleSize:
    def test_baseline(self):
        n = sample_size_fixed_delta(BASELINE, independence_deltas(BASELINE), P)
        assert n == 307
        assert 610 <= 2 * n <= 616

    @pytest.mark.parametrize("which", ["U", "O"])
    def test_misreporting_gamma_one(self, which):
        m = Margins(0.1, 0.2, 0.35, 0.35, **{which: 0.2})
        assert 2 * sample_size_fixed_delta(m, independence_deltas(m), P) == 1162

    def test_wrong_direction(self):
        with pytest.raises(EffectSignIndeterminate):
            sample_size_from_means(0.51, 0.50, P)
        m = Margins(0.3, 0.1, 0.3, 0.3)
        with pytest.raises(EffectSignIndeterminate) as info:
            sample_size_fixed_delta(m, independence_deltas(m), P)
        assert info.value.effect == pytest.approx(0.2)

    @given(st.floats(0.02, 0.98), st.floats(0.02, 0.98), st.floats(0.01, 0.2), st.floats(0.01, 0.3))
    def test_minimal_n(self, mu1, mu0, alpha, beta):
        if mu1 >= mu0 - 1e-3:
            return
        params = DesignParams(alpha, beta)
        n = sample_size_from_means(mu1, mu0, params)
        assert detection_probability_from_means(mu1, mu0, n, params) >= 1 - beta - 1e-12
        if n > 1:
            assert detection_probability_from_means(mu1, mu0, n - 1, params) < 1 - beta + 1e-12

    def test_fixed_delta_matches_means(self):
        m = Margins(0.1, 0.2, 0.35, 0.35, U=0.1, O=0.05)
        d = independence_deltas(m)
        assert sample_size_fixed_delta(m, d, P) == sample_size_from_means(*reported_means(m, d), P)


class TestStandardSampleSize:
    def test_worked_example(self):
        n = standard_sample_size(0.035, 0.07, P)
        assert 989 <= n <= 1000
        sigma2 = 0.035 * 0.965 + 0.07 * 0.93
        per_arm = (STD.inv_cdf(0.8) + STD.inv_cdf(0.95)) ** 2 * sigma2 / 0.035**2
        assert n == 2 * math.ceil(per_arm)

    def test_baseline_proportions(self):
        assert 610 <= standard_sample_size(0.45, 0.55, P) <= 616

    def test_doubling_gap_quarters_n(self):
        # sigma is slightly smaller for (0.4, 0.6), so the ratio is at most 1/4 up to ceilings
        assert standard_sample_size(0.4, 0.6, P) <= standard_sample_size(0.45, 0.55, P) / 4 + 2

    def test_equal_proportions(self):
        with pytest.raises(ValueError):
            standard_sample_size(0.1, 0.1, P)


def test_delta_vector_length_checked():
    with pytest.raises(ValueError):
        DeltaVector.from_array(np.ones(5))
