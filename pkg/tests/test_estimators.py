import numpy as np
import pytest

from gradcv.estimators import (
    ESTIMATOR_IDS,
    ESTIMATORS,
    CapabilityError,
    EstimationError,
    EstimatorConfig,
    est_cov,
    est_cv_ideal,
    est_cv_ideal_pathgrad,
    est_cv_regression,
    est_delta_method,
    est_greg_pathgrad,
    est_greg_samplecov,
    est_kingma_reparam,
    est_ranganath_cv,
    est_simple,
    estimate,
    run_kernel,
    _sample_cov_mat,
    _sample_cov_vec,
    _solve_sym2,
)
from gradcv.gaussian import GaussianQ, DrawBatch, rng_from_seed
from gradcv.quadrature import expect, gauss_hermite_rule, ground_truth_gradient
from gradcv.targets import Target, gaussian_target, logistic_target


def draws_for(q, reps, samples, label):
    eps = rng_from_seed(label).standard_normal((reps, samples))
    return q.reparameterize(eps), eps


def run_many(est_id, q, target, reps=20_000, samples=50, label=0):
    x, eps = draws_for(q, reps, samples, (est_id, label))
    n_coef = samples // 2 if ESTIMATORS[est_id].split_budget else 0
    return run_kernel(est_id, q, target, x, eps, n_coef)


class TestSolver:
    def test_well_conditioned_matches_numpy(self):
        rng = np.random.default_rng(5)
        a = rng.standard_normal((40, 2, 2))
        a = a @ np.swapaxes(a, -1, -2) + 0.5 * np.eye(2)
        b = rng.standard_normal((40, 2))
        got, fallback = _solve_sym2(a, b)
        ref = np.linalg.solve(a, b[..., None])[..., 0]
        np.testing.assert_allclose(got, ref, rtol=1e-10)
        assert not fallback.any()

    def test_singular_uses_minimum_norm(self):
        # rank-1 matrix with consistent rhs: pseudo-inverse solution expected
        a = np.array([[[0.0, 0.0], [0.0, 4.0]]])
        b = np.array([[0.0, 2.0]])
        got, fallback = _solve_sym2(a, b)
        np.testing.assert_allclose(got, [[0.0, 0.5]], atol=1e-14)
        assert fallback.all()

    def test_jitter_applied_before_pinv(self):
        a = np.array([[[0.0, 0.0], [0.0, 0.0]]])
        b = np.array([[1.0, 1.0]])
        got, fallback = _solve_sym2(a, b, jitter=0.5)
        np.testing.assert_allclose(got, [[2.0, 2.0]], rtol=1e-12)
        assert fallback.all()


class TestUnbiasedness:
    # Monte Carlo mean within 4 standard errors of the quadrature gradient.
    # The full 100k-replication version runs in the acceptance suite.
    @pytest.mark.parametrize("est_id", [e for e in ESTIMATOR_IDS if ESTIMATORS[e].unbiased])
    @pytest.mark.parametrize("setting", [(0.0, 2.0), (2.0, 2.0)])
    def test_mean_matches_ground_truth(self, est_id, setting):
        q = GaussianQ(*setting)
        target = logistic_target()
        gt = ground_truth_gradient(q, target)
        est = run_many(est_id, q, target, reps=20_000)
        se = est.std(axis=0, ddof=1) / np.sqrt(est.shape[0])
        np.testing.assert_array_less(np.abs(est.mean(axis=0) - gt), 4.0 * se + 1e-12)

    def test_biased_estimator_really_is_biased(self):
        # greg-samplecov at small sample size has visible bias
        q = GaussianQ(0.0, 2.0)
        target = logistic_target()
        gt = ground_truth_gradient(q, target)
        est = run_many("greg-samplecov", q, target, reps=50_000, samples=10)
        se = est.std(axis=0, ddof=1) / np.sqrt(est.shape[0])
        assert np.any(np.abs(est.mean(axis=0) - gt) > 6.0 * se)


class TestSimpleAndCov:
    def test_simple_mean_zero_for_matching_target(self):
        q = GaussianQ(1.0, 2.0)
        est = run_many("simple", q, gaussian_target(1.0, 2.0), reps=20_000)
        se = est.std(axis=0, ddof=1) / np.sqrt(est.shape[0])
        np.testing.assert_array_less(np.abs(est.mean(axis=0)), 4.0 * se + 1e-12)

    def test_cov_exact_zero_for_constant_integrand(self):
        # target == q makes log q - log p constant in x
        q = GaussianQ(0.5, 1.5)
        est = run_many("cov", q, gaussian_target(0.5, 1.5), reps=200)
        np.testing.assert_allclose(est, 0.0, atol=1e-12)

    def test_cov_below_simple_variance(self):
        q = GaussianQ(0.0, 2.0)
        target = logistic_target()
        v_simple = run_many("simple", q, target).var(axis=0).sum()
        v_cov = run_many("cov", q, target).var(axis=0).sum()
        assert v_cov < v_simple

    def test_single_batch_api(self):
        q = GaussianQ(0.0, 2.0)
        target = logistic_target()
        batch = q.sample(seed=11, size=50)
        a = est_simple(q, target, batch)
        b = est_simple(q, target, batch)
        assert a.estimator_id == "simple" and a.samples_used == 50
        np.testing.assert_array_equal(a.value, b.value)
        c = est_cov(q, target, batch)
        assert np.isfinite(c.value).all()


class TestControlVariates:
    def test_control_variate_has_zero_mean(self):
        # the h statistic (sample minus exact score covariance) averages to
        # zero over 100000 independent batches, within 4 standard errors
        q = GaussianQ(0.0, 2.0)
        x, _ = draws_for(q, 100_000, 25, "h-zero-mean")
        s = q.score_eta(x)
        h = _sample_cov_mat(s) - q.exact_suffstat_cov()
        se = h.std(axis=0, ddof=1) / np.sqrt(h.shape[0])
        np.testing.assert_array_less(np.abs(h.mean(axis=0)), 4.0 * se)

    def test_cv_ideal_defined_at_matching_target(self):
        q = GaussianQ(0.0, 2.0)
        est = run_many("cv-ideal", q, gaussian_target(0.0, 2.0), reps=5_000)
        se = est.std(axis=0, ddof=1) / np.sqrt(est.shape[0]) + 1e-14
        np.testing.assert_array_less(np.abs(est.mean(axis=0)), 4.0 * se)

    def test_cv_regression_coefficient_identity(self):
        # alpha-hat equals eta - eta_tilde = (0, 0.25) on every replication
        q = GaussianQ(0.0, 2.0)
        target = gaussian_target(0.0, 1.0)
        for rep in range(50):
            coef = q.sample(seed=("coef", rep), size=25)
            ev = q.sample(seed=("eval", rep), size=25)
            result = est_cv_regression(q, target, coef, ev)
            np.testing.assert_allclose(result.aux["alpha"], [0.0, 0.25], atol=1e-10)

    def test_cv_regression_zero_variance_for_gaussian_target(self):
        q = GaussianQ(-1.0, 0.5)
        target = gaussian_target(2.0, 3.0)
        exact = q.exact_suffstat_cov() @ (q.eta - target.eta_tilde)
        est = run_many("cv-regression", q, target, reps=2_000)
        scale = max(np.abs(exact).max(), 1.0)
        assert np.abs(est - exact).max() / scale < 1e-10
        assert est.std(axis=0).max() / scale < 1e-10

    def test_cv_ideal_pathgrad_zero_variance_for_gaussian_target(self):
        q = GaussianQ(0.0, 2.0)
        target = gaussian_target(1.0, 1.0)
        exact = q.exact_suffstat_cov() @ (q.eta - target.eta_tilde)
        est = run_many("cv-ideal-grad", q, target, reps=2_000)
        scale = max(np.abs(exact).max(), 1.0)
        assert np.abs(est - exact).max() / scale < 1e-8

    def test_greg_samplecov_zero_variance_for_gaussian_target(self):
        q = GaussianQ(1.0, 2.0)
        target = gaussian_target(-0.5, 4.0)
        exact = q.exact_suffstat_cov() @ (q.eta - target.eta_tilde)
        est = run_many("greg-samplecov", q, target, reps=2_000)
        scale = max(np.abs(exact).max(), 1.0)
        assert np.abs(est - exact).max() / scale < 1e-10

    def test_greg_pathgrad_zero_variance_for_gaussian_target(self):
        q = GaussianQ(1.0, 2.0)
        target = gaussian_target(-0.5, 4.0)
        exact = q.exact_suffstat_cov() @ (q.eta - target.eta_tilde)
        est = run_many("greg-pathgrad", q, target, reps=2_000)
        scale = max(np.abs(exact).max(), 1.0)
        assert np.abs(est - exact).max() / scale < 1e-8

    def test_greg_aux_contains_natural_gradient(self):
        q = GaussianQ(0.0, 2.0)
        result = est_greg_samplecov(q, logistic_target(), q.sample(seed=5, size=50))
        gnat = result.aux["g_nat"]
        np.testing.assert_allclose(q.exact_suffstat_cov() @ gnat, result.value, rtol=1e-12)

    def test_ranganath_perfect_correlation_limit(self):
        # constant integrand makes f_i = c * h_i exactly; residual collapses
        q = GaussianQ(0.3, 1.2)
        est = run_many("ranganath-cv", q, gaussian_target(0.3, 1.2), reps=500)
        np.testing.assert_allclose(est, 0.0, atol=1e-10)

    def test_ranganath_worse_than_cov_under_split_budget(self):
        q = GaussianQ(0.0, 2.0)
        target = logistic_target()
        gt = ground_truth_gradient(q, target)
        mse_r = ((run_many("ranganath-cv", q, target) - gt) ** 2).sum(axis=1).mean()
        mse_c = ((run_many("cov", q, target) - gt) ** 2).sum(axis=1).mean()
        assert mse_r > mse_c


class TestDeltaMethod:
    def test_zero_variance_for_quadratic_target(self):
        # Taylor residual vanishes identically, so the estimate is deterministic
        q = GaussianQ(0.0, 2.0)
        target = gaussian_target(1.0, 3.0)
        gt = ground_truth_gradient(q, target)
        est = run_many("delta-method", q, target, reps=500)
        np.testing.assert_allclose(est - gt, 0.0, atol=1e-9)
        assert est.std(axis=0).max() < 1e-12

    def test_analytic_entropy_gradient_matches_quadrature_fd(self):
        # d/deta E_q[log q] = (0, -sigma2), checked against finite differences
        # of the quadrature expectation (measure and integrand both move)
        from gradcv.gaussian import from_natural

        step = 1e-6
        for mu, s2 in [(0.0, 2.0), (1.0, 0.7)]:
            q = GaussianQ(mu, s2)
            fd = np.empty(2)
            for k in range(2):
                delta = np.zeros(2)
                delta[k] = step
                hi_q = from_natural(q.eta + delta)
                lo_q = from_natural(q.eta - delta)
                hi = expect(hi_q, hi_q.log_density)
                lo = expect(lo_q, lo_q.log_density)
                fd[k] = (hi - lo) / (2 * step)
            np.testing.assert_allclose(fd, [0.0, -s2], rtol=1e-6, atol=1e-6)


class TestKingma:
    def test_matches_finite_difference_of_frozen_sum(self):
        # the estimate differentiates the sampler path only; the integrand
        # log q - log p stays frozen at the base parameters
        from gradcv.gaussian import from_natural

        q = GaussianQ(0.5, 1.5)
        target = logistic_target()
        batch = q.sample(seed=21, size=40)
        result = est_kingma_reparam(q, target, batch)
        step = 1e-6

        def frozen_objective(q_shift):
            x = q_shift.reparameterize(batch.noise)
            return float(np.mean(q.log_density(x) - target.log_p(x)))

        for k in range(2):
            delta = np.zeros(2)
            delta[k] = step
            fd = (frozen_objective(from_natural(q.eta + delta))
                  - frozen_objective(from_natural(q.eta - delta))) / (2 * step)
            assert result.value[k] == pytest.approx(fd, rel=1e-6, abs=1e-8)

    def test_matching_gaussian_target_collapses(self):
        q = GaussianQ(1.0, 2.0)
        est = run_many("kingma-reparam", q, gaussian_target(1.0, 2.0), reps=200)
        np.testing.assert_allclose(est, 0.0, atol=1e-10)


class TestConfigAndErrors:
    def test_total_samples_minimum(self):
        with pytest.raises(ValueError):
            EstimatorConfig(total_samples=1)

    def test_cv_split_needs_two_per_half(self):
        with pytest.raises(ValueError, match="2 samples"):
            EstimatorConfig(total_samples=3, cv_split=0.5, estimator_id="cv-ideal")
        EstimatorConfig(total_samples=4, cv_split=0.5, estimator_id="cv-ideal")

    def test_unknown_estimator_id(self):
        with pytest.raises(ValueError, match="unknown estimator"):
            EstimatorConfig(estimator_id="nope")

    @pytest.mark.parametrize("est_id", ["cv-ideal-grad", "kingma-reparam", "greg-pathgrad"])
    def test_gradient_free_target_rejected(self, est_id):
        q = GaussianQ(0.0, 1.0)
        blackbox = Target(name="blackbox", log_p=lambda x: -np.abs(x))
        with pytest.raises(CapabilityError):
            estimate(q, blackbox, EstimatorConfig(estimator_id=est_id), seed=0)

    def test_delta_needs_hessian(self):
        q = GaussianQ(0.0, 1.0)
        no_hess = Target(name="grad-only", log_p=lambda x: -np.abs(x), grad_x=lambda x: -np.sign(x))
        with pytest.raises(CapabilityError):
            est_delta_method(q, no_hess, q.sample(seed=0, size=10))

    def test_nonfinite_log_p_is_estimation_error(self):
        q = GaussianQ(0.0, 1.0)
        bad = Target(name="bad", log_p=lambda x: np.where(x > 0, -np.inf, x))
        with pytest.raises(EstimationError):
            est_simple(q, bad, q.sample(seed=1, size=50))

    def test_degenerate_draws_flag_fallback(self):
        # identical draws give a singular sample covariance; the solve falls
        # back and flags it instead of failing
        q = GaussianQ(0.0, 1.0)
        noise = np.zeros(10)
        batch = DrawBatch(draws=q.reparameterize(noise), noise=noise, seed=0, size=10)
        result = est_greg_samplecov(q, logistic_target(), batch)
        assert result.aux["singular_fallback"]
        assert np.isfinite(result.value).all()

    def test_dispatcher_deterministic_and_split(self):
        q = GaussianQ(0.0, 2.0)
        target = logistic_target()
        config = EstimatorConfig(total_samples=50, cv_split=0.5, estimator_id="cv-ideal")
        a = estimate(q, target, config, seed=9)
        b = estimate(q, target, config, seed=9)
        np.testing.assert_array_equal(a.value, b.value)
        assert a.samples_used == 50

    def test_estimate_value_is_2vector_and_finite(self):
        q = GaussianQ(0.0, 2.0)
        target = logistic_target()
        for est_id in ESTIMATOR_IDS:
            result = estimate(q, target, EstimatorConfig(estimator_id=est_id), seed=3)
            assert result.value.shape == (2,)
            assert np.isfinite(result.value).all()
            assert result.estimator_id == est_id


class TestVarianceOrdering:
    def test_cv_ideal_improves_cov_more_than_tenfold(self):
        q = GaussianQ(0.0, 2.0)
        target = logistic_target()
        gt = ground_truth_gradient(q, target)
        mse_cov = ((run_many("cov", q, target) - gt) ** 2).sum(axis=1).mean()
        mse_cvi = ((run_many("cv-ideal", q, target) - gt) ** 2).sum(axis=1).mean()
        assert mse_cvi < mse_cov / 10.0
