"""Out-of-sample Sharpe ratios: oracle values and in-sample estimators.

With K = sigma_hat + Q and A a PSD direction matrix (mu mu' for mean-variance,
11' for global minimum variance), the two building blocks are

    T1      = tr[K^{-1} A]                      (quadratic form for rank-one A)
    T2      = tr[K^{-1} Sigma K^{-1} A]         (oracle, needs the true Sigma)
    T2_hat  = tr[K^{-1} sigma_hat K^{-1} A] / correction^2

where correction = 1 - (c/p) tr[sigma_hat K^{-1}].  The oracle Sharpe ratio is
T1 / sqrt(|T2|); its in-sample estimator replaces T2 by T2_hat.  The
unknown-mean variant subtracts the bias term t/(n-t), t = tr[K^{-1} sigma_hat],
from the numerator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._linalg import SymSolver, require_symmetric
from .moments import (
    CENTERED_ON_SAMPLE_MEAN,
    Regularizer,
    SampleMoments,
    regularized_solver,
)

MODES = (
    "oracle",
    "hat_known_mu",
    "hat_unknown_mu",
    "oracle_unknown_mu",
    "gmv_oracle",
    "gmv_hat",
)

# Negative radicands of magnitude below this (relative) are numerical noise
# from a PSD quadratic form and clamp to zero; larger ones are an error.
_RADICAND_TOL = 1e-12


@dataclass(frozen=True)
class SharpeEstimate:
    """A Sharpe value together with its numerator/denominator decomposition.

    ``value == numerator / denominator`` in every mode; the correction factor
    is already folded into the denominator for the hat modes (and into the
    numerator bias term for the unknown-mean mode).
    """

    value: float
    numerator: float
    denominator: float
    correction: float
    mode: str

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if not self.denominator > 0.0:
            raise ValueError("denominator must be positive")
        if abs(self.value - self.numerator / self.denominator) > 1e-12 * max(1.0, abs(self.value)):
            raise ValueError("value does not match numerator / denominator")


def _sqrt_radicand(x: float, scale: float) -> float:
    if x < -_RADICAND_TOL * max(scale, 1.0):
        raise ValueError(f"denominator quadratic form is negative ({x!r})")
    x = max(x, 0.0)
    if x == 0.0:
        raise ValueError("zero denominator: degenerate direction vector")
    return float(np.sqrt(x))


def _correction(moments: SampleMoments, reg: Regularizer, solver: SymSolver) -> float:
    # tr sigma_hat K^{-1} = p - tr Q K^{-1}: exact, and exact 1 - c at Q = 0.
    p = moments.p
    if reg.is_zero:
        return 1.0 - moments.c * solver.rank / p
    tr_q = solver.trace_solve(reg.matrix)
    return 1.0 - moments.c / p * (p - tr_q)


def sr_oracle(mu: np.ndarray, moments: SampleMoments, reg: Regularizer,
              sigma_true: np.ndarray) -> SharpeEstimate:
    """True out-of-sample Sharpe of w ~ K^{-1} mu, evaluated against Sigma."""
    mu = np.asarray(mu, dtype=float)
    sigma_true = require_symmetric(sigma_true, "sigma_true")
    solver = regularized_solver(moments, reg)
    y = solver.solve(mu)
    t1 = float(mu @ y)
    t2 = float(y @ (sigma_true @ y))
    den = _sqrt_radicand(t2, t1**2)
    return SharpeEstimate(value=t1 / den, numerator=t1, denominator=den,
                          correction=1.0, mode="oracle")


def sr_hat_known_mu(mu: np.ndarray, moments: SampleMoments,
                    reg: Regularizer) -> SharpeEstimate:
    """In-sample estimator of the out-of-sample Sharpe, mu known.

    value = correction * mu'K^{-1}mu / sqrt(mu'K^{-1} sigma_hat K^{-1} mu).
    """
    mu = np.asarray(mu, dtype=float)
    solver = regularized_solver(moments, reg)
    corr = _correction(moments, reg, solver)
    y = solver.solve(mu)
    t1 = float(mu @ y)
    g_hat = float(y @ (moments.sigma_hat @ y))
    den = _sqrt_radicand(g_hat, t1**2) / corr
    return SharpeEstimate(value=t1 / den, numerator=t1, denominator=den,
                          correction=corr, mode="hat_known_mu")


def _trace_sigma_hat_kinv(moments: SampleMoments, reg: Regularizer,
                          solver: SymSolver) -> float:
    if reg.is_zero:
        return float(solver.rank)
    return moments.p - solver.trace_solve(reg.matrix)


def unknown_mu_bias_term(moments: SampleMoments, reg: Regularizer) -> float:
    """Numerator debias t/(n - t) with t = tr[(sigma_hat + Q)^{-1} sigma_hat].

    At Q = 0 with full-rank sigma_hat and c < 1 this is exactly c/(1 - c).
    """
    solver = regularized_solver(moments, reg)
    t = _trace_sigma_hat_kinv(moments, reg, solver)
    n = moments.n
    if n <= t:
        raise ValueError(f"degenerate bias term: n={n} <= tr K^-1 sigma_hat={t:g}")
    return t / (n - t)


def sr_hat_unknown_mu(moments: SampleMoments, reg: Regularizer) -> SharpeEstimate:
    """In-sample estimator when mu is the sample mean (Gaussian data).

    The numerator mu_hat'K^{-1}mu_hat is debiased by t/(n - t) with
    t = tr[K^{-1} sigma_hat]; requires moments centered at the sample mean.
    """
    if moments.centered_on != CENTERED_ON_SAMPLE_MEAN:
        raise ValueError("unknown-mu estimator needs sample-mean-centered moments")
    solver = regularized_solver(moments, reg)
    n = moments.n
    t = _trace_sigma_hat_kinv(moments, reg, solver)
    if n <= t:
        raise ValueError(f"degenerate bias term: n={n} <= tr K^-1 sigma_hat={t:g}")
    corr = _correction(moments, reg, solver)
    mu_hat = moments.mu_hat
    y = solver.solve(mu_hat)
    num = float(mu_hat @ y) - t / (n - t)
    g_hat = float(y @ (moments.sigma_hat @ y))
    den = _sqrt_radicand(g_hat, max(num**2, 1.0)) / corr
    return SharpeEstimate(value=num / den, numerator=num, denominator=den,
                          correction=corr, mode="hat_unknown_mu")


def sr_oracle_unknown_mu(moments: SampleMoments, reg: Regularizer,
                         sigma_true: np.ndarray,
                         mu_true: np.ndarray) -> SharpeEstimate:
    """True out-of-sample Sharpe of w ~ K^{-1} mu_hat built from the sample mean."""
    sigma_true = require_symmetric(sigma_true, "sigma_true")
    mu_true = np.asarray(mu_true, dtype=float)
    solver = regularized_solver(moments, reg)
    y = solver.solve(moments.mu_hat)
    num = float(mu_true @ y)
    t2 = float(y @ (sigma_true @ y))
    den = _sqrt_radicand(t2, max(num**2, 1.0))
    return SharpeEstimate(value=num / den, numerator=num, denominator=den,
                          correction=1.0, mode="oracle_unknown_mu")


def sr_gmv(moments: SampleMoments, reg: Regularizer,
           sigma_true: np.ndarray | None = None) -> SharpeEstimate:
    """Inverse out-of-sample volatility of the GMV portfolio (A = 11').

    With ``sigma_true`` the oracle value 1'K^{-1}1 / sqrt(1'K^{-1}Sigma K^{-1}1)
    is returned; without it, the in-sample estimator with the correction
    factor applied.
    """
    ones = np.ones(moments.p)
    solver = regularized_solver(moments, reg)
    y = solver.solve(ones)
    t1 = float(ones @ y)
    if sigma_true is not None:
        sigma_true = require_symmetric(sigma_true, "sigma_true")
        t2 = float(y @ (sigma_true @ y))
        den = _sqrt_radicand(t2, t1**2)
        return SharpeEstimate(value=t1 / den, numerator=t1, denominator=den,
                              correction=1.0, mode="gmv_oracle")
    corr = _correction(moments, reg, solver)
    g_hat = float(y @ (moments.sigma_hat @ y))
    den = _sqrt_radicand(g_hat, t1**2) / corr
    return SharpeEstimate(value=t1 / den, numerator=t1, denominator=den,
                          correction=corr, mode="gmv_hat")


def sr_max(mu: np.ndarray, sigma: np.ndarray) -> float:
    """Maximal population Sharpe ratio sqrt(mu' Sigma^{-1} mu); Sigma PD."""
    mu = np.asarray(mu, dtype=float)
    solver = SymSolver(require_symmetric(sigma, "sigma"), allow_pseudo=False)
    return float(np.sqrt(max(float(mu @ solver.solve(mu)), 0.0)))


def sr_limit_unknown(sr_max_value: float, c: float) -> float:
    """Large-regularization limit of the achievable Sharpe with estimated mu.

    SR_L = SR_max^2 / sqrt(SR_max^2 + c).
    """
    if sr_max_value < 0.0:
        raise ValueError("sr_max must be non-negative")
    if c <= 0.0:
        raise ValueError("c must be positive")
    return sr_max_value**2 / float(np.sqrt(sr_max_value**2 + c))


def quadratic_forms(a: np.ndarray, moments: SampleMoments, reg: Regularizer,
                    sigma_true: np.ndarray | None = None) -> dict[str, float]:
    """Generic-direction building blocks T1, T2_hat (and T2 when Sigma given).

    ``a`` must be symmetric PSD; non-PSD direction matrices are rejected
    because the estimator's consistency guarantees do not cover them.
    """
    a = require_symmetric(a, "A")
    vals = np.linalg.eigvalsh(a)
    if vals.min() < -1e-10 * max(abs(vals).max(), 1.0):
        raise ValueError("direction matrix A must be positive semi-definite")
    solver = regularized_solver(moments, reg)
    kinv = solver.inv()
    corr = _correction(moments, reg, solver)
    t1 = float(np.sum(kinv * a))
    ka = kinv @ a
    g_hat = float(np.sum((kinv @ moments.sigma_hat) * ka.T))
    out = {
        "t1": t1,
        "g_hat": g_hat,
        "t2_hat": g_hat / corr**2,
        "correction": corr,
    }
    if sigma_true is not None:
        sigma_true = require_symmetric(sigma_true, "sigma_true")
        out["t2"] = float(np.sum((kinv @ sigma_true) * ka.T))
    return out
