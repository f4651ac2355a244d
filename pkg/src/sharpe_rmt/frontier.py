"""Regularized efficient frontier with no risk-free asset.

The frontier portfolio for target raw return mu0 is w = g + mu0 * h, where g
and h come from the two-constraint solution (w'r = mu0, w'1 = 1) in the
(sigma_hat + Q)^{-1} geometry.  The true volatility is sigma0 = sqrt(w'Sigma w)
and its in-sample estimator divides w' sigma_hat w by the squared correction
factor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._linalg import SymSolver, require_symmetric
from .moments import Regularizer, SampleMoments, regularized_solver
from .rmt_core import solve_s0

# Frontier is rejected as degenerate when D <= this fraction of B*C
# (r collinear with the ones vector).
_COLLINEARITY_TOL = 1e-12

_RADICAND_TOL = 1e-12


@dataclass(frozen=True)
class FrontierCoefficients:
    """Scalars A, B, C, D and vectors g, h of the two-fund decomposition.

    ``correction`` is the variance-correction factor of the moments/regularizer
    pair the coefficients were computed from, carried along so that per-point
    evaluation does not refactor the system.
    """

    A: float
    B: float
    C: float
    D: float
    g: np.ndarray
    h: np.ndarray
    correction: float

    def weights(self, mu0: float) -> np.ndarray:
        return self.g + mu0 * self.h


@dataclass(frozen=True)
class FrontierPoint:
    """One point of the frontier: target return, volatilities, weights."""

    mu0: float
    sigma_hat: float
    weights: np.ndarray
    sigma_true: float | None = None

    def __post_init__(self):
        if not self.sigma_hat > 0.0:
            raise ValueError("sigma_hat must be positive")
        if self.sigma_true is not None and not self.sigma_true > 0.0:
            raise ValueError("sigma_true must be positive when present")


@dataclass(frozen=True)
class AssumptionDiagnostics:
    """Inner products of r and 1 in the deterministic-equivalent geometry."""

    a_rr: float
    a_r1: float
    a_11: float
    rho: float

    @property
    def ok(self) -> bool:
        """True when rho is strictly below one (well-posed frontier limit)."""
        return self.rho < 1.0


def _correction_from(moments: SampleMoments, reg: Regularizer,
                     solver: SymSolver) -> float:
    p = moments.p
    if reg.is_zero:
        return 1.0 - moments.c * solver.rank / p
    return 1.0 - moments.c / p * (p - solver.trace_solve(reg.matrix))


def frontier_coefficients(r: np.ndarray, moments: SampleMoments,
                          reg: Regularizer) -> FrontierCoefficients:
    """Two-fund coefficients for the constraints w'r = mu0, w'1 = 1.

    Raises when r is (numerically) collinear with the ones vector, i.e.
    D <= 1e-12 * B * C.
    """
    r = np.asarray(r, dtype=float)
    if r.shape != (moments.p,):
        raise ValueError("r dimension mismatch")
    solver = regularized_solver(moments, reg)
    ones = np.ones(moments.p)
    kr = solver.solve(r)
    k1 = solver.solve(ones)
    a = float(r @ k1)
    b = float(r @ kr)
    c_coef = float(ones @ k1)
    d = b * c_coef - a * a
    if d <= _COLLINEARITY_TOL * b * c_coef:
        raise ValueError(
            f"degenerate frontier: D={d!r} with B*C={b * c_coef!r} "
            "(r collinear with the ones vector)"
        )
    g = (b * k1 - a * kr) / d
    h = (c_coef * kr - a * k1) / d
    corr = _correction_from(moments, reg, solver)
    return FrontierCoefficients(A=a, B=b, C=c_coef, D=d, g=g, h=h,
                                correction=corr)


def frontier_point(coeffs: FrontierCoefficients, mu0: float,
                   moments: SampleMoments, reg: Regularizer,
                   sigma_true: np.ndarray | None = None) -> FrontierPoint:
    """Evaluate one frontier point: weights, sigma_hat, optionally sigma0."""
    w = coeffs.weights(mu0)
    var_in = float(w @ (moments.sigma_hat @ w))
    if var_in < -_RADICAND_TOL:
        raise ValueError("negative in-sample variance quadratic form")
    sigma_hat = float(np.sqrt(max(var_in, 0.0))) / coeffs.correction
    sigma_true_val = None
    if sigma_true is not None:
        sigma_true = require_symmetric(sigma_true, "sigma_true")
        var_true = float(w @ (sigma_true @ w))
        if var_true < -_RADICAND_TOL:
            raise ValueError("negative true variance quadratic form")
        sigma_true_val = float(np.sqrt(max(var_true, 0.0)))
    return FrontierPoint(mu0=mu0, sigma_hat=sigma_hat, weights=w,
                         sigma_true=sigma_true_val)


def assumption_diagnostics(r: np.ndarray, sigma_true: np.ndarray,
                           reg: Regularizer, c: float) -> AssumptionDiagnostics:
    """rho = A_r1^2 / (A_rr * A_11) in the (Sigma/(1+s0) + Q)^{-1} geometry.

    rho = 1 flags a violated frontier assumption (r proportional to 1 in this
    inner product); see ``AssumptionDiagnostics.ok``.
    """
    r = np.asarray(r, dtype=float)
    sigma_true = require_symmetric(sigma_true, "sigma_true")
    s0 = solve_s0(sigma_true, reg, c)
    m = sigma_true / (1.0 + s0) + reg.matrix
    solver = SymSolver(m, allow_pseudo=reg.is_zero)
    ones = np.ones(r.shape[0])
    mr = solver.solve(r)
    m1 = solver.solve(ones)
    a_rr = float(r @ mr)
    a_r1 = float(r @ m1)
    a_11 = float(ones @ m1)
    if a_rr <= 0.0 or a_11 <= 0.0:
        raise ValueError("diagnostic quadratic forms must be positive")
    return AssumptionDiagnostics(a_rr=a_rr, a_r1=a_r1, a_11=a_11,
                                 rho=a_r1**2 / (a_rr * a_11))
