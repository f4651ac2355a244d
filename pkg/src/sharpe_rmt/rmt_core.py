"""Deterministic-equivalent fixed points and their data-driven plug-ins.

Oracle side: with u_1..u_p the eigenvalues of Sigma^{-1/2} Q Sigma^{-1/2}
(generalized eigenproblem of (Q, Sigma)), the constants are

    s0       : unique positive root of  s = (c/p) sum_i (1+s) / (1 + (1+s) u_i)
    m        : (c/p) sum_i 1 / (1 + (1+s0) u_i)^2,  with  m <= s0/(1+s0) < 1
    s1_sigma : m (1+s0)^2 / (m - 1)
    s1_q     : ((1+s0) m - s0) / (1 - m)

Plug-in side: from f1 = tr[Q (sigma_hat+Q)^{-1}]/p and
f2 = tr[Q (sigma_hat+Q)^{-1} Q (sigma_hat+Q)^{-1}]/p, with d = 1 + c (f1 - 1),

    s0_hat       = c (1 - f1) / d
    s1_q_hat     = c (f2 - f1) / d^2
    s1_sigma_hat = c (-1 + 2 f1 - f2 + c (f1 - 1)^2) / d^4

and d equals the variance-correction factor 1 - (c/p) tr[sigma_hat
(sigma_hat+Q)^{-1}].  The combined factor
(1 + s0 + s1_q) / ((1 + s0)^2 - s1_sigma) equals d^2 exactly for the
plug-ins and 1/(1+s0)^2 exactly for the oracle values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .moments import Regularizer, SampleMoments, regularized_solver

_BOUND_TOL = 1e-9

DEFAULT_FP_TOL = 1e-12
DEFAULT_FP_MAX_ITER = 200


@dataclass(frozen=True)
class FixedPointSolution:
    """The (s0, s1_sigma, s1_q) triple, oracle-solved or plug-in-estimated.

    ``in_bounds`` records whether the values satisfy the oracle-side bounds
    s0 > 0, -s0 (1+s0)^2 <= s1_sigma <= 0, -s0 <= s1_q <= 0.  Plug-in values
    are never clamped; out-of-bound plug-ins simply carry in_bounds=False.
    (At Q = 0 the bounds hold with s1_q = 0 exactly.)
    """

    s0: float
    s1_sigma: float
    s1_q: float
    source: str
    iterations: int = 0
    residual: float = 0.0

    @property
    def in_bounds(self) -> bool:
        return (
            self.s0 > 0.0
            and -self.s0 * (1.0 + self.s0) ** 2 - _BOUND_TOL <= self.s1_sigma <= _BOUND_TOL
            and -self.s0 - _BOUND_TOL <= self.s1_q <= _BOUND_TOL
        )

    @property
    def combined_factor(self) -> float:
        """(1 + s0 + s1_q) / ((1 + s0)^2 - s1_sigma)."""
        return (1.0 + self.s0 + self.s1_q) / ((1.0 + self.s0) ** 2 - self.s1_sigma)


@dataclass(frozen=True)
class PluginStatistics:
    """The purely data-driven statistics f1, f2 and the correction factor."""

    f1: float
    f2: float
    correction: float

    def __post_init__(self):
        if not (-_BOUND_TOL <= self.f2 <= self.f1 + _BOUND_TOL
                and self.f1 <= 1.0 + _BOUND_TOL):
            raise ValueError(
                f"plug-in statistics must satisfy 0 <= f2 <= f1 <= 1, "
                f"got f1={self.f1!r}, f2={self.f2!r}"
            )


def reg_spectrum(sigma: np.ndarray, reg: Regularizer) -> np.ndarray:
    """Eigenvalues u_i of Sigma^{-1/2} Q Sigma^{-1/2}, ascending.

    Solved as the generalized symmetric eigenproblem Q v = u Sigma v; Sigma
    must be positive definite.  For Q = 0 the spectrum is identically zero.
    """
    sigma = np.asarray(sigma, dtype=float)
    p = sigma.shape[0]
    if reg.is_zero:
        return np.zeros(p)
    try:
        return scipy.linalg.eigh(reg.matrix, sigma, eigvals_only=True)
    except scipy.linalg.LinAlgError as exc:
        raise ValueError("sigma must be positive definite") from exc


def _g(s: float, u: np.ndarray, c: float, p: int) -> float:
    t = 1.0 + s
    return c / p * float(np.sum(t / (1.0 + t * u)))


def _solve_s0_detail(sigma: np.ndarray, reg: Regularizer, c: float,
                     tol: float, max_iter: int,
                     u: np.ndarray | None) -> tuple[float, int]:
    if c <= 0.0:
        raise ValueError("c must be positive")
    if reg.is_zero:
        if c >= 1.0:
            raise ValueError("Q = 0 requires c < 1")
        return c / (1.0 - c), 0
    sigma = np.asarray(sigma, dtype=float)
    p = sigma.shape[0]
    if u is None:
        u = reg_spectrum(sigma, reg)
    if u.min() < 0.0:
        u = np.maximum(u, 0.0)

    # g(s) < (c/p) sum 1/u_i for any s >= 0, so that sum brackets the root
    # when Q is positive definite; grow geometrically otherwise.
    if u.min() > 0.0:
        hi = c / p * float(np.sum(1.0 / u)) * (1.0 + 1e-12) + 1e-300
    else:
        hi = 1.0
        for _ in range(600):
            if _g(hi, u, c, p) - hi < 0.0:
                break
            hi *= 2.0
        else:
            raise ValueError("no positive fixed point; is Q PSD with c in range?")
    lo = 0.0
    iterations = 0
    while hi - lo > tol * max(1.0, hi) and iterations < max_iter:
        mid = 0.5 * (lo + hi)
        if _g(mid, u, c, p) - mid > 0.0:
            lo = mid
        else:
            hi = mid
        iterations += 1
    return 0.5 * (lo + hi), iterations


def solve_s0(sigma: np.ndarray, reg: Regularizer, c: float,
             tol: float = DEFAULT_FP_TOL, max_iter: int = DEFAULT_FP_MAX_ITER,
             u: np.ndarray | None = None) -> float:
    """Unique positive solution of s0 = (c/p) tr Sigma (Sigma/(1+s0) + Q)^{-1}.

    Solved by safeguarded bisection on g(s) - s; uniqueness follows from the
    concavity of g.  For Q = 0 the closed form s0 = c / (1 - c) is returned
    (valid only when c < 1).
    """
    s0, _ = _solve_s0_detail(sigma, reg, c, tol, max_iter, u)
    return s0


def _second_moment(u: np.ndarray, s0: float, c: float, p: int) -> float:
    """m = (c/p) sum_i 1 / (1 + (1+s0) u_i)^2; must be < 1 for valid inputs."""
    m = c / p * float(np.sum(1.0 / (1.0 + (1.0 + s0) * u) ** 2))
    if m >= 1.0:
        raise ValueError(
            f"second spectral moment m={m!r} >= 1; inconsistent (sigma, Q, c, s0)"
        )
    return m


def solve_s1_sigma(sigma: np.ndarray, reg: Regularizer, c: float, s0: float,
                   u: np.ndarray | None = None) -> float:
    """Closed form s1_sigma = m (1+s0)^2 / (m-1) from the defining equation."""
    sigma = np.asarray(sigma, dtype=float)
    p = sigma.shape[0]
    if u is None:
        u = reg_spectrum(sigma, reg)
    m = _second_moment(u, s0, c, p)
    return m * (1.0 + s0) ** 2 / (m - 1.0)


def solve_s1_q(sigma: np.ndarray, reg: Regularizer, c: float, s0: float,
               u: np.ndarray | None = None) -> float:
    """Linear solve s1_q = ((1+s0) m - s0) / (1 - m)."""
    sigma = np.asarray(sigma, dtype=float)
    p = sigma.shape[0]
    if u is None:
        u = reg_spectrum(sigma, reg)
    m = _second_moment(u, s0, c, p)
    return ((1.0 + s0) * m - s0) / (1.0 - m)


def oracle_fixed_points(sigma: np.ndarray, reg: Regularizer, c: float,
                        tol: float = DEFAULT_FP_TOL,
                        max_iter: int = DEFAULT_FP_MAX_ITER) -> FixedPointSolution:
    """Solve all three fixed points from the true Sigma, sharing one spectrum."""
    sigma = np.asarray(sigma, dtype=float)
    p = sigma.shape[0]
    u = reg_spectrum(sigma, reg)
    s0, iterations = _solve_s0_detail(sigma, reg, c, tol, max_iter, u)
    s1_sigma = solve_s1_sigma(sigma, reg, c, s0, u=u)
    s1_q = solve_s1_q(sigma, reg, c, s0, u=u)
    residual = abs(_g(s0, u, c, p) - s0)
    return FixedPointSolution(s0=s0, s1_sigma=s1_sigma, s1_q=s1_q,
                              source="oracle", iterations=iterations,
                              residual=residual)


def plugin_stats(moments: SampleMoments, reg: Regularizer) -> PluginStatistics:
    """f1, f2 and the correction factor 1 - (c/p) tr sigma_hat (sigma_hat+Q)^{-1}.

    The correction is evaluated through the exact trace identity
    tr sigma_hat K^{-1} = p - tr Q K^{-1}, so Q = 0 with full-rank sigma_hat
    gives correction = 1 - c exactly.
    """
    solver = regularized_solver(moments, reg)
    c = moments.c
    p = moments.p
    if reg.is_zero:
        # tr sigma_hat sigma_hat^+ equals the numerical rank.
        return PluginStatistics(f1=0.0, f2=0.0,
                                correction=1.0 - c * solver.rank / p)
    y = solver.solve(reg.matrix)
    f1 = float(np.trace(y)) / p
    f2 = float(np.sum(y * y.T)) / p
    return PluginStatistics(f1=f1, f2=f2, correction=1.0 + c * (f1 - 1.0))


def plugin_fixed_points(stats: PluginStatistics, c: float) -> FixedPointSolution:
    """Closed-form plug-in estimates of (s0, s1_sigma, s1_q) from (f1, f2)."""
    f1, f2 = stats.f1, stats.f2
    d = 1.0 + c * (f1 - 1.0)
    if d == 0.0:
        raise ZeroDivisionError("degenerate plug-in: 1 + c (f1 - 1) = 0")
    s0 = c * (1.0 - f1) / d
    s1_q = c * (f2 - f1) / d**2
    s1_sigma = c * (-1.0 + 2.0 * f1 - f2 + c * (f1 - 1.0) ** 2) / d**4
    return FixedPointSolution(s0=s0, s1_sigma=s1_sigma, s1_q=s1_q,
                              source="plugin", iterations=0, residual=0.0)
