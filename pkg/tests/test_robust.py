import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from farmkit import (
    ConvergenceError,
    DimensionError,
    HuberConfig,
    default_shrinkage_tau,
    default_tau,
    elementwise_robust_cov,
    huber_mean,
    sample_cov,
    sample_mean,
    shrinkage_cov,
    truncated_mean,
    ustat_cov,
)

finite_floats = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)


class TestSampleMoments:
    def test_mean_single_row(self):
        x = np.array([[1.0, -2.0, 3.0]])
        np.testing.assert_array_equal(sample_mean(x), x[0])

    def test_mean_two_points(self):
        np.testing.assert_array_equal(
            sample_mean([[0.0, 0.0], [2.0, 2.0]]), [1.0, 1.0]
        )

    def test_mean_matches_direct_sum(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((13, 4))
        direct = np.array([sum(x[:, j]) / 13 for j in range(4)])
        np.testing.assert_allclose(sample_mean(x), direct, atol=1e-12)

    def test_cov_zero_data(self):
        np.testing.assert_array_equal(
            sample_cov(np.zeros((4, 3))).matrix, np.zeros((3, 3))
        )

    def test_cov_univariate_no_demean(self):
        est = sample_cov(np.array([[-1.0], [1.0]]), demean=False)
        np.testing.assert_allclose(est.matrix, [[1.0]])

    def test_cov_matches_double_loop(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((5, 3))
        mu = x.mean(axis=0)
        expected = np.zeros((3, 3))
        for i in range(5):
            d = x[i] - mu
            expected += np.outer(d, d)
        expected /= 5
        np.testing.assert_allclose(sample_cov(x).matrix, expected, atol=1e-12)

    def test_cov_needs_samples(self):
        with pytest.raises(DimensionError):
            sample_cov(np.zeros((1, 2)), demean=True)


class TestTruncatedMean:
    def test_no_truncation(self):
        x = np.array([0.5, -0.7, 0.2])
        assert truncated_mean(x, 1.0) == pytest.approx(x.mean())

    def test_hand_computed(self):
        assert truncated_mean([1.0, 2.0, 3.0], 2.0) == pytest.approx(5.0 / 3.0)

    def test_symmetric_clip(self):
        assert truncated_mean([-10.0, 10.0], 1.0) == pytest.approx(0.0)

    def test_infinite_tau_is_plain_mean(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal(40)
        assert truncated_mean(x, np.inf) == pytest.approx(x.mean(), abs=1e-15)

    def test_empty_rejected(self):
        with pytest.raises(DimensionError):
            truncated_mean([], 1.0)

    @given(st.lists(finite_floats, min_size=1, max_size=30),
           st.floats(min_value=1e-3, max_value=1e7))
    @settings(max_examples=60, deadline=None)
    def test_odd_in_data(self, xs, tau):
        x = np.array(xs)
        assert truncated_mean(-x, tau) == pytest.approx(
            -truncated_mean(x, tau), abs=1e-9 * (1 + np.max(np.abs(x)))
        )


class TestHuberMean:
    def test_constant_data(self):
        for tau in (0.1, 1.0, 100.0):
            assert huber_mean([3.0] * 5, HuberConfig(tau)) == pytest.approx(3.0)

    def test_symmetric_pair(self):
        assert huber_mean([-1.0, 1.0], HuberConfig(10.0)) == pytest.approx(0.0)

    def test_first_order_condition_hand_solved(self):
        # psi_1(0 - t) twice plus psi_1(10 - t) = -2t + 1 = 0 on t in [-1, 1]
        assert huber_mean([0.0, 0.0, 10.0], HuberConfig(1.0)) == pytest.approx(0.5)

    def test_infinite_tau_recovers_mean(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal(25)
        assert huber_mean(x, HuberConfig(np.inf)) == x.mean()

    def test_result_within_range(self):
        rng = np.random.default_rng(4)
        x = rng.standard_t(2, size=50)
        est = huber_mean(x, HuberConfig(0.5))
        assert x.min() <= est <= x.max()

    def test_solves_first_order_condition(self):
        rng = np.random.default_rng(5)
        x = rng.standard_t(3, size=200)
        tau = 1.3
        theta = huber_mean(x, HuberConfig(tau))
        psi = np.clip(x - theta, -tau, tau)
        assert abs(psi.sum()) < 1e-7 * len(x)

    @given(st.lists(finite_floats, min_size=2, max_size=25),
           st.floats(min_value=-1e5, max_value=1e5))
    @settings(max_examples=50, deadline=None)
    def test_translation_equivariance(self, xs, c):
        x = np.array(xs)
        tau = 1.0 + float(np.std(x))
        cfg = HuberConfig(tau)
        scale = 1.0 + np.max(np.abs(x)) + abs(c)
        assert huber_mean(x + c, cfg) == pytest.approx(
            huber_mean(x, cfg) + c, abs=1e-8 * scale
        )


class TestDefaultTau:
    def test_arithmetic(self):
        assert default_tau(100, 500, 1.0) == pytest.approx(3.0401, abs=2e-4)

    def test_scale_homogeneity(self):
        assert default_tau(50, 20, 2.0) == pytest.approx(2 * default_tau(50, 20, 1.0))

    def test_monotone_in_n(self):
        taus = [default_tau(n, 10, 1.0) for n in (10, 40, 160, 640)]
        assert all(a < b for a, b in zip(taus, taus[1:]))
        # doubling up to the log factor: n -> 4n slightly less than doubles
        assert taus[1] / taus[0] < 2.0
        assert taus[1] / taus[0] > 1.6

    def test_guard(self):
        with pytest.raises(ValueError):
            default_tau(1, 2, 1.0)


class TestElementwiseRobustCov:
    def test_huge_tau_equals_sample_cov(self):
        rng = np.random.default_rng(6)
        x = rng.standard_normal((30, 4))
        est = elementwise_robust_cov(x, tau_scale=1e6)
        np.testing.assert_allclose(est.matrix, sample_cov(x).matrix, atol=1e-12)

    def test_univariate_from_truncated_moments(self):
        x = np.array([[-1.0], [1.0]])
        est = elementwise_robust_cov(x, tau_scale=2.0)
        # squares are constant (sd 0, untruncated): E X^2 = 1; means clip at
        # tau = 2 sd sqrt(2) = 4 > 1, so E X = 0 and the variance is 1
        np.testing.assert_allclose(est.matrix, [[1.0]], atol=1e-12)

    def test_symmetry(self):
        rng = np.random.default_rng(7)
        x = rng.standard_t(3, size=(50, 6))
        m = elementwise_robust_cov(x, tau_scale=0.4).matrix
        np.testing.assert_array_equal(m, m.T)

    def test_beats_sample_cov_on_heavy_tails(self):
        # moderate version of the acceptance sweep: t3 data, max-norm error
        wins = 0
        reps = 30
        for seed in range(reps):
            rng = np.random.default_rng(seed)
            x = rng.standard_t(3, size=(200, 20))
            truth = 3.0 * np.eye(20)
            err_robust = np.max(np.abs(
                elementwise_robust_cov(x, tau_scale=0.35).matrix - truth))
            err_sample = np.max(np.abs(sample_cov(x).matrix - truth))
            wins += err_robust <= err_sample
        assert wins >= 0.8 * reps


class TestShrinkageCov:
    def test_infinite_tau(self):
        rng = np.random.default_rng(8)
        x = rng.standard_normal((20, 5))
        np.testing.assert_allclose(
            shrinkage_cov(x, np.inf).matrix,
            sample_cov(x, demean=False).matrix,
            atol=1e-12,
        )

    def test_single_vector_shrink_factor(self):
        x = np.array([[3.0, 1.0, -2.0, 0.5]])
        norm4 = np.sum(x**4) ** 0.25
        tau = norm4 / 2.0
        est = shrinkage_cov(x, tau)
        np.testing.assert_allclose(est.matrix, 0.25 * x.T @ x, atol=1e-12)

    def test_psd(self):
        rng = np.random.default_rng(9)
        x = rng.standard_t(3, size=(40, 8))
        vals = np.linalg.eigvalsh(shrinkage_cov(x, 2.0).matrix)
        assert vals.min() >= -1e-10

    def test_zero_rows_map_to_zero(self):
        x = np.array([[0.0, 0.0], [1.0, 1.0]])
        est = shrinkage_cov(x, 0.5)
        assert np.all(np.isfinite(est.matrix))

    def test_norm_cap(self):
        rng = np.random.default_rng(10)
        x = rng.standard_t(3, size=(30, 5)) * 10
        tau = 2.0
        norms4 = np.sum(x**4, axis=1) ** 0.25
        shrunk = x * (np.minimum(norms4, tau) / norms4)[:, None]
        assert np.all(np.sum(shrunk**4, axis=1) ** 0.25 <= tau + 1e-12)


class TestDefaultShrinkageTau:
    def test_homogeneity_in_r(self):
        rng = np.random.default_rng(11)
        x = rng.standard_normal((50, 10))
        assert default_shrinkage_tau(2 * x, 1.0) == pytest.approx(
            2 * default_shrinkage_tau(x, 1.0)
        )

    def test_arithmetic(self):
        # R_hat = 1 exactly when every fourth moment averages to 1
        x = np.ones((1000, 100))
        assert default_shrinkage_tau(x, 1.0) == pytest.approx(
            (1000 / np.log(100)) ** 0.25, abs=1e-6
        )
        assert (1000 / np.log(100)) ** 0.25 == pytest.approx(3.838, abs=2e-3)

    def test_delta_scaling(self):
        rng = np.random.default_rng(12)
        x = rng.standard_normal((40, 6))
        assert default_shrinkage_tau(x, 4.0) == pytest.approx(
            default_shrinkage_tau(x, 1.0) / np.sqrt(2)
        )


class TestUstatCov:
    def test_identical_pair(self):
        x = np.array([[1.0, 2.0], [1.0, 2.0]])
        np.testing.assert_array_equal(ustat_cov(x, 1.0).matrix, np.zeros((2, 2)))

    def test_infinite_tau_is_unbiased_cov(self):
        rng = np.random.default_rng(13)
        x = rng.standard_normal((15, 4))
        n = 15
        # independent oracle: brute-force pair sum
        acc = np.zeros((4, 4))
        for j in range(n):
            for k in range(j + 1, n):
                d = x[j] - x[k]
                acc += np.outer(d, d)
        expected = acc / (n * (n - 1))
        np.testing.assert_allclose(ustat_cov(x, np.inf).matrix, expected, atol=1e-10)
        unbiased = n / (n - 1) * sample_cov(x, demean=True).matrix
        np.testing.assert_allclose(ustat_cov(x, np.inf).matrix, unbiased, atol=1e-10)

    def test_single_pair_hand_computed(self):
        est = ustat_cov(np.array([[0.0], [2.0]]), tau=1.0)
        np.testing.assert_allclose(est.matrix, [[0.5]])

    def test_psd(self):
        rng = np.random.default_rng(14)
        x = rng.standard_t(3, size=(30, 6))
        vals = np.linalg.eigvalsh(ustat_cov(x, 5.0).matrix)
        assert vals.min() >= -1e-10
