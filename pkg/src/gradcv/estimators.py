"""Stochastic estimators of the KL gradient for a Gaussian approximation.

All ten methods estimate the same 2-vector, the eta-gradient of
E_q[log q(x) - log p(x)], from a fixed budget of draws. They differ in
how aggressively they cancel Monte Carlo noise:

* simple            plain score-function (REINFORCE) average
* cov               sample-covariance form with the score centered by
                    its sample mean
* cv-ideal          covariance form minus control variates built from
                    the sampling error of the score covariance, with a
                    per-component fitted coefficient vector
* cv-regression     same control variates with one shared coefficient
                    vector, the regression / natural-gradient solve
* cv-ideal-grad     cv-ideal with every covariance term estimated by
                    differentiating the sampler path (requires grad_x)
* ranganath-cv      per-component scalar control variate h_i = score_i
* delta-method      score-function estimator applied to log p minus its
                    second-order Taylor expansion about mu, analytic rest
* kingma-reparam    sampler-path derivative of the Monte Carlo sum of
                    log q - log p with the integrand held fixed
* greg-samplecov    exact score covariance times the regression solve of
                    two sample covariances from the same draws (biased)
* greg-pathgrad     greg-samplecov with both covariances estimated by
                    sampler-path differentiation (biased)

Control-variate methods consume two disjoint batches (coefficients are
fitted on one, the gradient evaluated on the other) so that the final
estimate stays unbiased; the remaining methods consume one batch.

Every estimator also has a vectorized kernel operating on a matrix of
draws with one row per independent replication; the benchmark harness
calls these directly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .gaussian import DrawBatch, GaussianQ, sample
from .targets import Target

__all__ = [
    "CapabilityError",
    "EstimationError",
    "EstimatorConfig",
    "GradEstimate",
    "EstimatorInfo",
    "ESTIMATORS",
    "ESTIMATOR_IDS",
    "estimate",
    "est_simple",
    "est_cov",
    "est_cv_ideal",
    "est_cv_regression",
    "est_cv_ideal_pathgrad",
    "est_ranganath_cv",
    "est_delta_method",
    "est_kingma_reparam",
    "est_greg_samplecov",
    "est_greg_pathgrad",
]

# Determinant threshold, relative to the squared magnitude of the matrix,
# below which a 2x2 solve falls back to the pseudo-inverse.
_SINGULAR_RTOL = 1e-12


class CapabilityError(RuntimeError):
    """The target lacks a derivative this estimator requires."""


class EstimationError(RuntimeError):
    """The target or estimate evaluated to a non-finite value."""


@dataclass(frozen=True)
class EstimatorConfig:
    """Sampling budget and solver options shared by all estimators."""

    total_samples: int = 50
    cv_split: float = 0.5
    estimator_id: str = "simple"
    jitter: float = 0.0

    def __post_init__(self):
        if self.total_samples < 2:
            raise ValueError(f"total_samples must be >= 2, got {self.total_samples}")
        if not 0.0 < self.cv_split < 1.0:
            raise ValueError(f"cv_split must be in (0, 1), got {self.cv_split}")
        if self.jitter < 0.0:
            raise ValueError(f"jitter must be >= 0, got {self.jitter}")
        if self.estimator_id not in ESTIMATORS:
            raise ValueError(
                f"unknown estimator_id {self.estimator_id!r}; valid ids: {', '.join(ESTIMATOR_IDS)}"
            )
        if ESTIMATORS[self.estimator_id].split_budget:
            n_coef, n_eval = self.split_sizes()
            if n_coef < 2 or n_eval < 2:
                raise ValueError(
                    f"control-variate methods need >= 2 samples in each half of the split; "
                    f"got {n_coef}+{n_eval} from total_samples={self.total_samples}, "
                    f"cv_split={self.cv_split}"
                )

    def split_sizes(self) -> tuple[int, int]:
        n_coef = int(round(self.total_samples * self.cv_split))
        return n_coef, self.total_samples - n_coef


@dataclass(frozen=True)
class GradEstimate:
    """A single 2-vector gradient estimate plus provenance."""

    value: np.ndarray
    estimator_id: str
    samples_used: int
    aux: Optional[dict] = None

    def __post_init__(self):
        value = np.asarray(self.value, dtype=float)
        if value.shape != (2,):
            raise ValueError(f"value must be a 2-vector, got shape {value.shape}")
        if not np.isfinite(value).all():
            raise EstimationError(f"non-finite gradient estimate: {value}")
        value.setflags(write=False)
        object.__setattr__(self, "value", value)


# ---------------------------------------------------------------------------
# shared numerics


def _require_grad(target: Target, estimator_id: str) -> Callable:
    if target.grad_x is None:
        raise CapabilityError(f"estimator {estimator_id!r} requires target.grad_x ({target.name!r} has none)")
    return target.grad_x


def _require_hess(target: Target, estimator_id: str) -> Callable:
    if target.hess_x is None:
        raise CapabilityError(f"estimator {estimator_id!r} requires target.hess_x ({target.name!r} has none)")
    return target.hess_x


def _fval(q: GaussianQ, target: Target, x: np.ndarray) -> np.ndarray:
    """log q - log p at the draws; non-finite log p is an estimation error."""
    lp = np.asarray(target.log_p(x), dtype=float)
    if not np.isfinite(lp).all():
        bad = x[~np.isfinite(lp)]
        raise EstimationError(f"target {target.name!r} log_p is not finite at draw x={bad.flat[0]!r}")
    return q.log_density(x) - lp


def _sample_cov_vec(s: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Cov-hat[s, f] over axis -2 with 1/(S-1); s is (..., S, 2), f is (..., S)."""
    n = s.shape[-2]
    sc = s - s.mean(axis=-2, keepdims=True)
    fc = f - f.mean(axis=-1, keepdims=True)
    return np.einsum("...si,...s->...i", sc, fc) / (n - 1)


def _sample_cov_mat(s: np.ndarray) -> np.ndarray:
    """Cov-hat[s, s] over axis -2 with 1/(S-1); returns (..., 2, 2)."""
    n = s.shape[-2]
    sc = s - s.mean(axis=-2, keepdims=True)
    return np.einsum("...si,...sj->...ij", sc, sc) / (n - 1)


def _solve2(
    a: np.ndarray, b: np.ndarray, jitter: float = 0.0, symmetric: bool = False
) -> tuple[np.ndarray, np.ndarray]:
    """Batched 2x2 solve a @ x = b with a singular fallback.

    Well-conditioned systems use the closed-form inverse. When |det| falls
    below _SINGULAR_RTOL times the squared matrix magnitude the solve is
    retried with jitter added to the diagonal (if configured) and finally
    falls back to a minimum-norm least-squares solution, which leaves
    directions of zero variance with a zero coefficient. Returns
    (solution, fallback mask).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)

    def _parts(m):
        det = m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
        scale = np.max(np.abs(m), axis=(-2, -1))
        return det, scale

    det, scale = _parts(a)
    bad = np.abs(det) <= _SINGULAR_RTOL * scale * scale
    if jitter > 0.0 and bad.any():
        a = a + jitter * np.where(bad, 1.0, 0.0)[..., None, None] * np.eye(2)
        det, scale = _parts(a)
    degenerate = np.abs(det) <= _SINGULAR_RTOL * scale * scale
    safe_det = np.where(degenerate, 1.0, det)
    x0 = (a[..., 1, 1] * b[..., 0] - a[..., 0, 1] * b[..., 1]) / safe_det
    x1 = (a[..., 0, 0] * b[..., 1] - a[..., 1, 0] * b[..., 0]) / safe_det
    out = np.stack([x0, x1], axis=-1)
    if degenerate.any():
        if symmetric:
            out = np.where(degenerate[..., None], _pinv_solve_sym2(a, b), out)
        else:
            flat_out = out.reshape(-1, 2)
            flat_a = a.reshape(-1, 2, 2)
            flat_b = b.reshape(-1, 2)
            for idx in np.flatnonzero(degenerate.reshape(-1)):
                flat_out[idx] = np.linalg.lstsq(flat_a[idx], flat_b[idx], rcond=None)[0]
            out = flat_out.reshape(out.shape)
    return out, bad


def _solve_sym2(a: np.ndarray, b: np.ndarray, jitter: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    return _solve2(a, b, jitter, symmetric=True)


def _pinv_solve_sym2(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Minimum-norm solve via the closed-form eigendecomposition of a sym 2x2."""
    a00, a01, a11 = a[..., 0, 0], a[..., 0, 1], a[..., 1, 1]
    half_tr = 0.5 * (a00 + a11)
    disc = np.sqrt(np.maximum(0.25 * (a00 - a11) ** 2 + a01 * a01, 0.0))
    lam1 = half_tr + disc
    lam2 = half_tr - disc
    # eigenvector for lam1; pick the better-conditioned of the two algebraic forms
    v1 = np.stack([a01, lam1 - a00], axis=-1)
    alt = np.stack([lam1 - a11, a01], axis=-1)
    use_alt = np.linalg.norm(v1, axis=-1) < np.linalg.norm(alt, axis=-1)
    v1 = np.where(use_alt[..., None], alt, v1)
    norm = np.linalg.norm(v1, axis=-1, keepdims=True)
    unit = np.concatenate([np.ones_like(norm), np.zeros_like(norm)], axis=-1)
    v1 = np.where(norm > 0.0, v1 / np.where(norm == 0.0, 1.0, norm), unit)
    v2 = np.stack([-v1[..., 1], v1[..., 0]], axis=-1)
    lam_floor = _SINGULAR_RTOL * np.maximum(np.abs(lam1), np.abs(lam2))

    def _recip(lam):
        keep = np.abs(lam) > lam_floor
        return np.where(keep, 1.0 / np.where(lam == 0.0, 1.0, lam), 0.0)

    c1 = np.einsum("...i,...i->...", v1, b) * _recip(lam1)
    c2 = np.einsum("...i,...i->...", v2, b) * _recip(lam2)
    return c1[..., None] * v1 + c2[..., None] * v2


# ---------------------------------------------------------------------------
# vectorized kernels; x has shape (R, S), results (R, 2)


def _kernel_simple(q: GaussianQ, t: Target, x: np.ndarray) -> tuple[np.ndarray, dict]:
    s = q.score_eta(x)
    f = _fval(q, t, x)
    return (s * f[..., None]).mean(axis=-2), {}


def _kernel_cov(q: GaussianQ, t: Target, x: np.ndarray) -> tuple[np.ndarray, dict]:
    return _sample_cov_vec(q.score_eta(x), _fval(q, t, x)), {}


def _score_cv_pieces(q: GaussianQ, t: Target, x: np.ndarray):
    """Per-draw control-variate ingredients for the score-covariance methods.

    f_j = centered score times centered integrand, whose batch covariance is
    the cov estimator; H_j = outer product of centered scores minus the exact
    score covariance, whose batch statistic has expectation zero.
    """
    c_exact = q.exact_suffstat_cov()
    s = q.score_eta(x)
    f = _fval(q, t, x)
    sc = s - s.mean(axis=-2, keepdims=True)
    fc = f - f.mean(axis=-1, keepdims=True)
    f_j = sc * fc[..., None]
    h_j = np.einsum("...si,...sj->...sij", sc, sc) - c_exact
    return f_j, h_j, c_exact


def _fit_percomponent(f_j: np.ndarray, h_j: np.ndarray, jitter: float) -> tuple[np.ndarray, np.ndarray]:
    """Fit alpha^i = Var[h^i]^-1 Cov[h^i, f_i] from per-draw statistics.

    f_j is (R, S, 2), h_j is (R, S, 2, 2); returns alpha (R, 2, 2) with
    alpha[:, i] the coefficient vector for gradient component i, and the
    fallback mask. The 1/(S-1) normalization cancels in the solve.
    """
    hc = h_j - h_j.mean(axis=-3, keepdims=True)
    fc = f_j - f_j.mean(axis=-2, keepdims=True)
    var_h = np.einsum("...sil,...sim->...ilm", hc, hc)
    cov_hf = np.einsum("...sil,...si->...il", hc, fc)
    return _solve_sym2(var_h, cov_hf, jitter)


def _kernel_cv_ideal(
    q: GaussianQ, t: Target, x_coef: np.ndarray, x_eval: np.ndarray, jitter: float
) -> tuple[np.ndarray, dict]:
    f_j, h_j, c_exact = _score_cv_pieces(q, t, x_coef)
    alpha, fallback = _fit_percomponent(f_j, h_j, jitter)
    s_e = q.score_eta(x_eval)
    f_ev = _sample_cov_vec(s_e, _fval(q, t, x_eval))
    h_ev = _sample_cov_mat(s_e) - c_exact
    est = f_ev - np.einsum("...il,...il->...i", h_ev, alpha)
    return est, {"alpha": alpha, "singular_fallback": fallback}


def _kernel_cv_regression(
    q: GaussianQ, t: Target, x_coef: np.ndarray, x_eval: np.ndarray, jitter: float
) -> tuple[np.ndarray, dict]:
    s_c = q.score_eta(x_coef)
    alpha, fallback = _solve_sym2(
        _sample_cov_mat(s_c), _sample_cov_vec(s_c, _fval(q, t, x_coef)), jitter
    )
    c_exact = q.exact_suffstat_cov()
    s_e = q.score_eta(x_eval)
    f_ev = _sample_cov_vec(s_e, _fval(q, t, x_eval))
    h_ev = _sample_cov_mat(s_e) - c_exact
    est = f_ev - np.einsum("...il,...l->...i", h_ev, alpha)
    return est, {"alpha": alpha, "singular_fallback": fallback}


def _path_cv_pieces(q: GaussianQ, t: Target, x: np.ndarray, eps: np.ndarray):
    """Per-draw sampler-path ingredients.

    f_j = (dx/deta) * d/dx [log q - log p](x_j) estimates the KL gradient;
    m_j = (dx/deta) outer (dT/dx) estimates the score covariance, so
    h_j = m_j - Cov_exact is the zero-mean control variate.
    """
    grad_x = _require_grad(t, "path-gradient estimator")
    c_exact = q.exact_suffstat_cov()
    jac = q.path_jacobian(eps)
    resid = q.score_x(x) - np.asarray(grad_x(x), dtype=float)
    f_j = jac * resid[..., None]
    t_prime = np.stack([np.ones_like(x), 2.0 * x], axis=-1)
    m_j = np.einsum("...si,...sl->...sil", jac, t_prime)
    return f_j, m_j, c_exact


def _kernel_cv_ideal_pathgrad(
    q: GaussianQ, t: Target, x_coef, eps_coef, x_eval, eps_eval, jitter: float
) -> tuple[np.ndarray, dict]:
    f_jc, m_jc, c_exact = _path_cv_pieces(q, t, x_coef, eps_coef)
    alpha, fallback = _fit_percomponent(f_jc, m_jc - c_exact, jitter)
    f_je, m_je, _ = _path_cv_pieces(q, t, x_eval, eps_eval)
    f_ev = f_je.mean(axis=-2)
    h_ev = m_je.mean(axis=-3) - c_exact
    est = f_ev - np.einsum("...il,...il->...i", h_ev, alpha)
    return est, {"alpha": alpha, "singular_fallback": fallback}


def _kernel_ranganath(
    q: GaussianQ, t: Target, x_coef: np.ndarray, x_eval: np.ndarray
) -> tuple[np.ndarray, dict]:
    s_c = q.score_eta(x_coef)
    f_c = s_c * _fval(q, t, x_coef)[..., None]
    hc = s_c - s_c.mean(axis=-2, keepdims=True)
    fc = f_c - f_c.mean(axis=-2, keepdims=True)
    var_h = np.einsum("...si,...si->...i", hc, hc)
    cov_fh = np.einsum("...si,...si->...i", fc, hc)
    zero_var = var_h <= 0.0
    coef = np.where(zero_var, 0.0, cov_fh / np.where(zero_var, 1.0, var_h))
    s_e = q.score_eta(x_eval)
    f_e = s_e * _fval(q, t, x_eval)[..., None]
    est = (f_e - coef[..., None, :] * s_e).mean(axis=-2)
    return est, {"coef": coef, "zero_variance": zero_var}


def _kernel_delta(q: GaussianQ, t: Target, x: np.ndarray) -> tuple[np.ndarray, dict]:
    grad_x = _require_grad(t, "delta-method")
    hess_x = _require_hess(t, "delta-method")
    mu, s2 = q.mu, q.sigma2
    lp0 = float(np.asarray(t.log_p(np.array(mu)), dtype=float))
    g0 = float(np.asarray(grad_x(np.array(mu)), dtype=float))
    h0 = float(np.asarray(hess_x(np.array(mu)), dtype=float))
    dx = x - mu
    taylor = lp0 + g0 * dx + 0.5 * h0 * dx * dx
    lp = np.asarray(t.log_p(x), dtype=float)
    if not np.isfinite(lp).all():
        raise EstimationError(f"target {t.name!r} log_p is not finite at a draw")
    mc = (q.score_eta(x) * (lp - taylor)[..., None]).mean(axis=-2)
    # d/deta E_q[log q] is the negative-entropy gradient (0, -sigma2);
    # d/deta E_q[Taylor] with frozen coefficients uses E[x - mu] = 0 and
    # E[(x - mu)^2] = sigma2 through d mu/d eta and d sigma2/d eta.
    grad_e_logq = np.array([0.0, -s2])
    grad_e_taylor = np.array([g0 * s2, 2.0 * g0 * mu * s2 + h0 * s2 * s2])
    return grad_e_logq - mc - grad_e_taylor, {}


def _kernel_kingma(q: GaussianQ, t: Target, x: np.ndarray, eps: np.ndarray) -> tuple[np.ndarray, dict]:
    grad_x = _require_grad(t, "kingma-reparam")
    resid = q.score_x(x) - np.asarray(grad_x(x), dtype=float)
    return (q.path_jacobian(eps) * resid[..., None]).mean(axis=-2), {}


def _kernel_greg_samplecov(q: GaussianQ, t: Target, x: np.ndarray, jitter: float) -> tuple[np.ndarray, dict]:
    s = q.score_eta(x)
    g_nat, fallback = _solve_sym2(_sample_cov_mat(s), _sample_cov_vec(s, _fval(q, t, x)), jitter)
    est = np.einsum("il,...l->...i", q.exact_suffstat_cov(), g_nat)
    return est, {"g_nat": g_nat, "singular_fallback": fallback}


def _kernel_greg_pathgrad(
    q: GaussianQ, t: Target, x: np.ndarray, eps: np.ndarray, jitter: float
) -> tuple[np.ndarray, dict]:
    f_j, m_j, c_exact = _path_cv_pieces(q, t, x, eps)
    # the path estimate of the score covariance is not symmetric
    g_nat, fallback = _solve2(m_j.mean(axis=-3), f_j.mean(axis=-2), jitter)
    est = np.einsum("il,...l->...i", c_exact, g_nat)
    return est, {"g_nat": g_nat, "singular_fallback": fallback}


# ---------------------------------------------------------------------------
# public single-estimate API


def _single(value: np.ndarray, aux: dict, estimator_id: str, samples: int) -> GradEstimate:
    squeezed = {k: np.asarray(v)[0] for k, v in aux.items()}
    return GradEstimate(
        value=np.asarray(value)[0],
        estimator_id=estimator_id,
        samples_used=samples,
        aux=squeezed or None,
    )


def _one_batch(batch: DrawBatch) -> tuple[np.ndarray, np.ndarray]:
    return batch.draws[None, :], batch.noise[None, :]


def est_simple(q: GaussianQ, t: Target, batch: DrawBatch, config: EstimatorConfig | None = None) -> GradEstimate:
    """Mean of score(x) * (log q(x) - log p(x)) over the batch; unbiased."""
    x, _ = _one_batch(batch)
    value, aux = _kernel_simple(q, t, x)
    return _single(value, aux, "simple", batch.size)


def est_cov(q: GaussianQ, t: Target, batch: DrawBatch, config: EstimatorConfig | None = None) -> GradEstimate:
    """Sample covariance of score and integrand with 1/(S-1); unbiased."""
    if batch.size < 2:
        raise ValueError("est_cov needs at least 2 draws")
    x, _ = _one_batch(batch)
    value, aux = _kernel_cov(q, t, x)
    return _single(value, aux, "cov", batch.size)


def est_cv_ideal(
    q: GaussianQ, t: Target, batch_coef: DrawBatch, batch_eval: DrawBatch,
    config: EstimatorConfig | None = None,
) -> GradEstimate:
    """Covariance estimator minus fitted score-covariance control variates.

    Coefficients are fitted on batch_coef only, so independence of the two
    batches keeps the evaluated estimate unbiased.
    """
    _check_split(batch_coef, batch_eval)
    jitter = config.jitter if config else 0.0
    value, aux = _kernel_cv_ideal(q, t, batch_coef.draws[None], batch_eval.draws[None], jitter)
    return _single(value, aux, "cv-ideal", batch_coef.size + batch_eval.size)


def est_cv_regression(
    q: GaussianQ, t: Target, batch_coef: DrawBatch, batch_eval: DrawBatch,
    config: EstimatorConfig | None = None,
) -> GradEstimate:
    """Control variates with the shared regression coefficient vector.

    The coefficient is the natural-gradient solve on the coefficient batch;
    with a Gaussian-form target it equals eta - eta_tilde identically and
    the estimate collapses to the exact gradient with zero variance.
    """
    _check_split(batch_coef, batch_eval)
    jitter = config.jitter if config else 0.0
    value, aux = _kernel_cv_regression(q, t, batch_coef.draws[None], batch_eval.draws[None], jitter)
    return _single(value, aux, "cv-regression", batch_coef.size + batch_eval.size)


def est_cv_ideal_pathgrad(
    q: GaussianQ, t: Target, batch_coef: DrawBatch, batch_eval: DrawBatch,
    config: EstimatorConfig | None = None,
) -> GradEstimate:
    """cv-ideal with every covariance term estimated through the sampler path."""
    _check_split(batch_coef, batch_eval)
    jitter = config.jitter if config else 0.0
    value, aux = _kernel_cv_ideal_pathgrad(
        q, t,
        batch_coef.draws[None], batch_coef.noise[None],
        batch_eval.draws[None], batch_eval.noise[None],
        jitter,
    )
    return _single(value, aux, "cv-ideal-grad", batch_coef.size + batch_eval.size)


def est_ranganath_cv(
    q: GaussianQ, t: Target, batch_coef: DrawBatch, batch_eval: DrawBatch,
    config: EstimatorConfig | None = None,
) -> GradEstimate:
    """Generic per-component control variate h_i = score_i with a scalar coefficient."""
    _check_split(batch_coef, batch_eval)
    value, aux = _kernel_ranganath(q, t, batch_coef.draws[None], batch_eval.draws[None])
    return _single(value, aux, "ranganath-cv", batch_coef.size + batch_eval.size)


def est_delta_method(q: GaussianQ, t: Target, batch: DrawBatch, config: EstimatorConfig | None = None) -> GradEstimate:
    """Second-order Taylor control variate for log p, analytic remainder."""
    x, _ = _one_batch(batch)
    value, aux = _kernel_delta(q, t, x)
    return _single(value, aux, "delta-method", batch.size)


def est_kingma_reparam(q: GaussianQ, t: Target, batch: DrawBatch, config: EstimatorConfig | None = None) -> GradEstimate:
    """Sampler-path derivative of the Monte Carlo sum of log q - log p.

    The integrand is held fixed and only the draw path x = s(eta, eps) is
    differentiated, which is the unbiased covariance estimate obtained by
    differentiating the sampler.
    """
    x, eps = _one_batch(batch)
    value, aux = _kernel_kingma(q, t, x, eps)
    return _single(value, aux, "kingma-reparam", batch.size)


def est_greg_samplecov(q: GaussianQ, t: Target, batch: DrawBatch, config: EstimatorConfig | None = None) -> GradEstimate:
    """Exact score covariance times the regression solve on one batch; biased."""
    if batch.size < 3:
        raise ValueError("est_greg_samplecov needs at least 3 draws")
    jitter = config.jitter if config else 0.0
    x, _ = _one_batch(batch)
    value, aux = _kernel_greg_samplecov(q, t, x, jitter)
    return _single(value, aux, "greg-samplecov", batch.size)


def est_greg_pathgrad(q: GaussianQ, t: Target, batch: DrawBatch, config: EstimatorConfig | None = None) -> GradEstimate:
    """greg-samplecov with sampler-path covariance estimates; biased."""
    jitter = config.jitter if config else 0.0
    x, eps = _one_batch(batch)
    value, aux = _kernel_greg_pathgrad(q, t, x, eps, jitter)
    return _single(value, aux, "greg-pathgrad", batch.size)


def _check_split(batch_coef: DrawBatch, batch_eval: DrawBatch):
    if batch_coef.size < 2 or batch_eval.size < 2:
        raise ValueError("coefficient and evaluation batches each need >= 2 draws")


# ---------------------------------------------------------------------------
# registry and dispatcher


@dataclass(frozen=True)
class EstimatorInfo:
    id: str
    fn: Callable
    split_budget: bool
    needs_grad: bool = False
    needs_hess: bool = False
    unbiased: bool = True


ESTIMATORS: dict[str, EstimatorInfo] = {
    info.id: info
    for info in (
        EstimatorInfo("simple", est_simple, split_budget=False),
        EstimatorInfo("cov", est_cov, split_budget=False),
        EstimatorInfo("cv-ideal", est_cv_ideal, split_budget=True),
        EstimatorInfo("cv-regression", est_cv_regression, split_budget=True),
        EstimatorInfo("cv-ideal-grad", est_cv_ideal_pathgrad, split_budget=True, needs_grad=True),
        EstimatorInfo("ranganath-cv", est_ranganath_cv, split_budget=True),
        EstimatorInfo("delta-method", est_delta_method, split_budget=False, needs_grad=True, needs_hess=True),
        EstimatorInfo("kingma-reparam", est_kingma_reparam, split_budget=False, needs_grad=True),
        EstimatorInfo("greg-samplecov", est_greg_samplecov, split_budget=False, unbiased=False),
        EstimatorInfo("greg-pathgrad", est_greg_pathgrad, split_budget=False, needs_grad=True, unbiased=False),
    )
}

ESTIMATOR_IDS: tuple[str, ...] = tuple(ESTIMATORS)


def estimate(q: GaussianQ, t: Target, config: EstimatorConfig, seed) -> GradEstimate:
    """Draw the configured budget from q and run the configured estimator.

    Split-budget methods get two disjoint seeded batches; the rest get one
    undivided batch. Deterministic given (q, config, seed).
    """
    info = ESTIMATORS[config.estimator_id]
    base = seed if isinstance(seed, tuple) else (seed,)
    if info.split_budget:
        n_coef, n_eval = config.split_sizes()
        batch_coef = sample(q, base + (0,), n_coef)
        batch_eval = sample(q, base + (1,), n_eval)
        return info.fn(q, t, batch_coef, batch_eval, config)
    batch = sample(q, base + (0,), config.total_samples)
    return info.fn(q, t, batch, config)


def run_kernel(
    estimator_id: str,
    q: GaussianQ,
    t: Target,
    x: np.ndarray,
    eps: np.ndarray,
    n_coef: int,
    jitter: float = 0.0,
) -> np.ndarray:
    """Vectorized entry point: one gradient estimate per row of x.

    x and eps have shape (R, S); split-budget estimators use the first
    n_coef columns as the coefficient batch and the rest for evaluation.
    """
    info = ESTIMATORS[estimator_id]
    if info.needs_grad:
        _require_grad(t, estimator_id)
    if info.needs_hess:
        _require_hess(t, estimator_id)
    if info.split_budget:
        x_c, x_e = x[:, :n_coef], x[:, n_coef:]
        e_c, e_e = eps[:, :n_coef], eps[:, n_coef:]
        if estimator_id == "cv-ideal":
            value, _ = _kernel_cv_ideal(q, t, x_c, x_e, jitter)
        elif estimator_id == "cv-regression":
            value, _ = _kernel_cv_regression(q, t, x_c, x_e, jitter)
        elif estimator_id == "cv-ideal-grad":
            value, _ = _kernel_cv_ideal_pathgrad(q, t, x_c, e_c, x_e, e_e, jitter)
        elif estimator_id == "ranganath-cv":
            value, _ = _kernel_ranganath(q, t, x_c, x_e)
        else:  # pragma: no cover - registry and dispatch kept in sync
            raise KeyError(estimator_id)
        return value
    if estimator_id == "simple":
        value, _ = _kernel_simple(q, t, x)
    elif estimator_id == "cov":
        value, _ = _kernel_cov(q, t, x)
    elif estimator_id == "delta-method":
        value, _ = _kernel_delta(q, t, x)
    elif estimator_id == "kingma-reparam":
        value, _ = _kernel_kingma(q, t, x, eps)
    elif estimator_id == "greg-samplecov":
        value, _ = _kernel_greg_samplecov(q, t, x, jitter)
    elif estimator_id == "greg-pathgrad":
        value, _ = _kernel_greg_pathgrad(q, t, x, eps, jitter)
    else:  # pragma: no cover
        raise KeyError(estimator_id)
    return value
