import numpy as np
import pytest

from farmkit import (
    DimensionError,
    PrincipalComponentRegressor,
    RankDeficiencyError,
    excess_risk_formula,
    gaussian_sketch,
    pcr_fit,
    sketched_pcr_fit,
    stable_rank,
)
from farmkit.pcr import sketch_alignment


class TestPcrFit:
    def test_full_rank_is_ols(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((30, 5))
        y = rng.standard_normal(30)
        fit = pcr_fit(x, y, 5)
        ols = np.linalg.lstsq(x, y, rcond=None)[0]
        np.testing.assert_allclose(fit.beta_hat, ols, atol=1e-10)

    def test_two_by_two_hand_case(self):
        fit = pcr_fit(np.diag([2.0, 1.0]), np.array([2.0, 1.0]), 1)
        np.testing.assert_allclose(fit.beta_hat, [1.0, 0.0], atol=1e-12)

    def test_orthogonal_response_gives_zero(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((20, 4))
        u, _, _ = np.linalg.svd(x, full_matrices=True)
        y = u[:, 3]  # orthogonal to the top-1 left singular vector
        fit = pcr_fit(x, y, 1)
        np.testing.assert_allclose(x @ fit.beta_hat, 0.0 * y, atol=1e-10)

    def test_constraint_satisfied(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal((25, 8))
        y = rng.standard_normal(25)
        k = 3
        fit = pcr_fit(x, y, k)
        _, _, vt = np.linalg.svd(x, full_matrices=False)
        tail = vt[k:, :] @ fit.beta_hat
        assert np.linalg.norm(tail) <= 1e-8 * np.linalg.norm(fit.beta_hat)

    def test_rank_errors(self):
        x = np.outer(np.arange(1.0, 5.0), np.ones(3))
        with pytest.raises(RankDeficiencyError):
            pcr_fit(x, np.ones(4), 2)


class TestExcessRisk:
    def test_pure_variance_case(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal((30, 10))
        _, _, vt = np.linalg.svd(x, full_matrices=False)
        k, sigma = 3, 0.7
        beta = vt[:k, :].T @ rng.standard_normal(k)  # in span of top-k
        risk = excess_risk_formula(x, beta, sigma, k)
        assert risk == pytest.approx(k * sigma**2 / 30, abs=1e-10)

    def test_zero_noise_full_rank(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal((12, 6))
        beta = rng.standard_normal(6)
        assert excess_risk_formula(x, beta, 0.0, 6) == pytest.approx(0.0, abs=1e-12)

    def test_matches_monte_carlo(self):
        rng = np.random.default_rng(5)
        n, p, k, sigma = 30, 10, 3, 0.5
        x = rng.standard_normal((n, p))
        beta = rng.standard_normal(p)
        target = x @ beta
        formula = excess_risk_formula(x, beta, sigma, k)
        draws = 20_000
        vals = np.empty(draws)
        for t in range(draws):
            y = target + sigma * rng.standard_normal(n)
            fit = pcr_fit(x, y, k)
            vals[t] = np.sum((x @ fit.beta_hat - target) ** 2) / n
        se = vals.std(ddof=1) / np.sqrt(draws)
        assert abs(vals.mean() - formula) <= 3 * se


class TestGaussianSketch:
    def test_shape_and_determinism(self):
        r1 = gaussian_sketch(10, 4, seed=42)
        r2 = gaussian_sketch(10, 4, seed=42)
        assert r1.shape == (10, 4)
        np.testing.assert_array_equal(r1, r2)

    def test_norm_preservation_in_expectation(self):
        x = np.arange(1.0, 9.0)
        target = np.sum(x**2)
        vals = [np.sum((gaussian_sketch(8, 20, seed=s).T @ x) ** 2)
                for s in range(1000)]
        assert abs(np.mean(vals) - target) / target < 0.05


class TestSketchedPcr:
    def test_identity_sketch_reduces_to_pcr(self):
        rng = np.random.default_rng(6)
        x = rng.standard_normal((20, 6))
        y = rng.standard_normal(20)
        fit = sketched_pcr_fit(x, y, 2, np.eye(6))
        plain = pcr_fit(x, y, 2)
        np.testing.assert_allclose(fit.beta_hat, plain.beta_hat, atol=1e-10)

    def test_fitted_values_identity(self):
        rng = np.random.default_rng(7)
        x = rng.standard_normal((25, 12))
        y = rng.standard_normal(25)
        r = gaussian_sketch(12, 6, seed=1)
        fit = sketched_pcr_fit(x, y, 3, r)
        inner = pcr_fit(x @ r, y, 3)
        np.testing.assert_allclose(
            x @ fit.beta_hat, (x @ r) @ inner.beta_hat, atol=1e-8
        )

    def test_zero_noise_full_rank_sketch(self):
        rng = np.random.default_rng(8)
        x = rng.standard_normal((15, 5))
        beta = rng.standard_normal(5)
        fit = sketched_pcr_fit(x, x @ beta, 5, np.eye(5))
        np.testing.assert_allclose(x @ fit.beta_hat, x @ beta, atol=1e-8)

    def test_sketch_too_small(self):
        with pytest.raises(DimensionError):
            sketched_pcr_fit(np.eye(4), np.ones(4), 3, gaussian_sketch(4, 2, 0))

    def test_risk_inequality_on_seeded_instances(self):
        # deterministic form of the sketching guarantee: evaluated exactly
        n, p, k, sigma = 40, 25, 3, 0.3
        holds = 0
        total = 0
        for seed in range(50):
            rng = np.random.default_rng(seed)
            # spiked design makes the top-k subspace meaningful
            u = np.linalg.qr(rng.standard_normal((n, k)))[0]
            v = np.linalg.qr(rng.standard_normal((p, k)))[0]
            x = (u * np.array([12.0, 9.0, 7.0])) @ v.T + 0.4 * rng.standard_normal((n, p))
            beta = rng.standard_normal(p)
            m = 15
            r = gaussian_sketch(p, m, seed=seed)
            nu = sketch_alignment(x, r, k)
            if nu >= 1.0:
                continue
            total += 1
            base = excess_risk_formula(x, beta, sigma, k)
            # exact sketched risk via its fitted-subspace projector
            xt = x @ r
            ut, st, _ = np.linalg.svd(xt, full_matrices=False)
            proj = ut[:, :k] @ ut[:, :k].T
            target = x @ beta
            sketched = k * sigma**2 / n + float(
                np.sum((target - proj @ target) ** 2)) / n
            bound = base + (2 * nu + nu**2) * float(np.sum(target**2)) / n
            holds += sketched <= bound + 1e-10
        assert total > 0
        assert holds == total


class TestStableRank:
    def test_rank_one(self):
        assert stable_rank(np.outer([1.0, 2.0], [3.0, 4.0])) == pytest.approx(1.0)

    def test_identity(self):
        assert stable_rank(np.eye(7)) == pytest.approx(7.0)

    def test_diagonal(self):
        assert stable_rank(np.diag([2.0, 1.0])) == pytest.approx(5.0 / 4.0)

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            stable_rank(np.zeros((3, 3)))


class TestEstimator:
    def test_fit_predict(self):
        rng = np.random.default_rng(9)
        x = rng.standard_normal((50, 8))
        beta = rng.standard_normal(8)
        y = x @ beta
        est = PrincipalComponentRegressor(n_components=8).fit(x, y)
        np.testing.assert_allclose(est.predict(x), y, atol=1e-8)

    def test_sketched_estimator(self):
        rng = np.random.default_rng(10)
        x = rng.standard_normal((40, 12))
        y = rng.standard_normal(40)
        est = PrincipalComponentRegressor(
            n_components=2, sketch_size=8, random_state=3
        ).fit(x, y)
        assert est.sketch_.shape == (12, 8)
        assert est.coef_.shape == (12,)

    def test_sklearn_params(self):
        est = PrincipalComponentRegressor(n_components=4, sketch_size=6)
        params = est.get_params()
        assert params["n_components"] == 4
        assert params["sketch_size"] == 6
