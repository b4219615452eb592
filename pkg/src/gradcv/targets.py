"""Target log-unnormalized posteriors log p(x).

Targets are plain containers around a vectorized log_p callable with
optional first and second x-derivatives. Score-function estimators only
need log_p; the delta-method and sampler-differentiated estimators
require the derivatives and fail fast when they are absent.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "Target",
    "ExpFamTarget",
    "logistic_target",
    "gaussian_target",
    "resolve_target",
]


@dataclass(frozen=True)
class Target:
    name: str
    log_p: Callable[[np.ndarray], np.ndarray]
    grad_x: Optional[Callable[[np.ndarray], np.ndarray]] = None
    hess_x: Optional[Callable[[np.ndarray], np.ndarray]] = None


@dataclass(frozen=True)
class ExpFamTarget(Target):
    """Gaussian-form target log p(x) = T(x).eta_tilde + c with T(x) = (x, x^2)."""

    eta_tilde: np.ndarray = field(kw_only=True)
    c: float = field(kw_only=True)

    def __post_init__(self):
        eta_tilde = np.asarray(self.eta_tilde, dtype=float)
        if eta_tilde.shape != (2,) or not np.isfinite(eta_tilde).all() or eta_tilde[1] >= 0:
            raise ValueError(f"eta_tilde must be a finite 2-vector with eta_tilde[1] < 0, got {self.eta_tilde!r}")
        eta_tilde.setflags(write=False)
        object.__setattr__(self, "eta_tilde", eta_tilde)


def _sigmoid(x):
    x = np.asarray(x, dtype=float)
    # stable in both tails
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def logistic_target() -> Target:
    """Single Bernoulli success term: log p(x) = x - log(1 + exp(x)).

    Improper as a posterior (it integrates to infinity); accepted as-is.
    Stable for large |x| via logaddexp.
    """

    def log_p(x):
        x = np.asarray(x, dtype=float)
        return x - np.logaddexp(0.0, x)

    def grad_x(x):
        return _sigmoid(-np.asarray(x, dtype=float))

    def hess_x(x):
        x = np.asarray(x, dtype=float)
        return -_sigmoid(x) * _sigmoid(-x)

    return Target(name="logistic", log_p=log_p, grad_x=grad_x, hess_x=hess_x)


def gaussian_target(mu: float, sigma2: float) -> ExpFamTarget:
    """Gaussian target sharing q's exponential-family form.

    log p(x) = eta_tilde[0]*x + eta_tilde[1]*x^2 + c with
    eta_tilde = (mu/sigma2, -1/(2*sigma2)) and c chosen so log p is the
    normalized N(mu, sigma2) log-density.
    """
    mu = float(mu)
    sigma2 = float(sigma2)
    if not (np.isfinite(sigma2) and sigma2 > 0.0):
        raise ValueError(f"sigma2 must be finite and > 0, got {sigma2!r}")
    e1 = mu / sigma2
    e2 = -0.5 / sigma2
    c = -(mu * mu / (2.0 * sigma2) + 0.5 * np.log(2.0 * np.pi * sigma2))

    def log_p(x):
        x = np.asarray(x, dtype=float)
        return e1 * x + e2 * x * x + c

    def grad_x(x):
        x = np.asarray(x, dtype=float)
        return e1 + 2.0 * e2 * x

    def hess_x(x):
        x = np.asarray(x, dtype=float)
        return np.full_like(x, 2.0 * e2)

    return ExpFamTarget(
        name=f"gaussian:{mu:g}:{sigma2:g}",
        log_p=log_p,
        grad_x=grad_x,
        hess_x=hess_x,
        eta_tilde=np.array([e1, e2]),
        c=c,
    )


def resolve_target(spec: str) -> Target:
    """Look up a target by CLI name: "logistic" or "gaussian:MU:SIGMA2"."""
    spec = spec.strip()
    if spec == "logistic":
        return logistic_target()
    if spec.startswith("gaussian:"):
        parts = spec.split(":")
        if len(parts) != 3:
            raise ValueError(f"expected gaussian:MU:SIGMA2, got {spec!r}")
        try:
            mu, sigma2 = float(parts[1]), float(parts[2])
        except ValueError:
            raise ValueError(f"non-numeric parameters in target {spec!r}") from None
        return gaussian_target(mu, sigma2)
    raise ValueError(f"unknown target {spec!r}; expected 'logistic' or 'gaussian:MU:SIGMA2'")
