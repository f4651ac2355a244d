"""Sample moments of return panels and regularized portfolio weights.

The covariance convention throughout is divisor ``n`` (not ``n - 1``), in both
the known-mean and sample-mean paths, so that sigma_hat = X'X / n for the
centered data matrix X.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._linalg import (
    DEFAULT_RANK_TOL,
    SingularSystemError,
    SymSolver,
    require_symmetric,
    sym_pseudo_inverse,
)

# How sigma_hat was centered; the unknown-mean Sharpe estimator requires
# "sample_mean" moments.
CENTERED_ON_SAMPLE_MEAN = "sample_mean"
CENTERED_ON_KNOWN_MU = "known_mu"

_PSD_TOL = 1e-10
_NORMALIZATION_TOL = 1e-10


@dataclass(frozen=True)
class ReturnsPanel:
    """An n x p matrix of per-period simple returns (rows = time points)."""

    data: np.ndarray
    dates: tuple | None = None
    assets: tuple[str, ...] | None = None
    risk_free: float = 0.0

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2:
            raise ValueError(f"panel data must be 2-D, got shape {data.shape}")
        n, p = data.shape
        if n < 2:
            raise ValueError(f"panel needs at least 2 rows, got {n}")
        if p < 1:
            raise ValueError("panel needs at least 1 asset")
        if not np.all(np.isfinite(data)):
            raise ValueError("panel contains non-finite entries")
        if not np.isfinite(self.risk_free):
            raise ValueError("risk_free must be finite")
        object.__setattr__(self, "data", data)
        if self.dates is not None:
            dates = tuple(self.dates)
            if len(dates) != n:
                raise ValueError(f"got {len(dates)} dates for {n} rows")
            if any(not (a < b) for a, b in zip(dates, dates[1:])):
                raise ValueError("dates must be strictly increasing")
            object.__setattr__(self, "dates", dates)
        if self.assets is not None:
            assets = tuple(self.assets)
            if len(assets) != p:
                raise ValueError(f"got {len(assets)} asset labels for {p} columns")
            object.__setattr__(self, "assets", assets)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def p(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class SampleMoments:
    """Sample mean/covariance pair with the aspect ratio c = p / n."""

    mu_hat: np.ndarray
    sigma_hat: np.ndarray
    n: int
    p: int
    c: float
    centered_on: str = CENTERED_ON_SAMPLE_MEAN

    def __post_init__(self):
        mu = np.asarray(self.mu_hat, dtype=float)
        sigma = require_symmetric(self.sigma_hat, "sigma_hat")
        if mu.shape != (self.p,):
            raise ValueError(f"mu_hat shape {mu.shape} does not match p={self.p}")
        if sigma.shape != (self.p, self.p):
            raise ValueError("sigma_hat shape does not match p")
        if not np.all(np.isfinite(mu)):
            raise ValueError("mu_hat contains non-finite entries")
        if self.c != self.p / self.n:
            raise ValueError("c must equal p / n exactly")
        vals = np.linalg.eigvalsh(sigma)
        if vals.min() < -_PSD_TOL * max(abs(vals.max()), abs(vals.min())):
            raise ValueError("sigma_hat is not positive semi-definite")
        if self.centered_on not in (CENTERED_ON_SAMPLE_MEAN, CENTERED_ON_KNOWN_MU):
            raise ValueError(f"unknown centering tag {self.centered_on!r}")
        object.__setattr__(self, "mu_hat", mu)
        object.__setattr__(self, "sigma_hat", sigma)


@dataclass(frozen=True)
class Regularizer:
    """A p x p PSD ridge matrix Q, optionally a scaled base q * Q0.

    The zero matrix is only accepted with ``allow_zero=True``; that flag also
    requests the pseudo-inverse solve path wherever the regularizer is used.
    """

    matrix: np.ndarray
    label: str = ""
    scale: float | None = None
    base: str | None = None
    allow_zero: bool = False

    def __post_init__(self):
        m = require_symmetric(self.matrix, "Q")
        if np.count_nonzero(m) == 0:
            if not self.allow_zero:
                raise ValueError("zero regularizer requires allow_zero=True")
        else:
            offdiag = m - np.diag(np.diag(m))
            if np.count_nonzero(offdiag) == 0:
                min_eig = np.diag(m).min()
                scale = np.abs(np.diag(m)).max()
            else:
                vals = np.linalg.eigvalsh(m)
                min_eig = vals[0]
                scale = np.abs(vals).max()
            if min_eig < -_PSD_TOL * max(scale, 1.0):
                raise ValueError("Q must be positive semi-definite")
        object.__setattr__(self, "matrix", m)
        if not self.label:
            object.__setattr__(self, "label", self._default_label())

    def _default_label(self) -> str:
        if self.is_zero:
            return "Q=0"
        if self.scale is not None and self.base:
            return f"q={self.scale:g}*{self.base}"
        return "Q"

    @property
    def is_zero(self) -> bool:
        return np.count_nonzero(self.matrix) == 0

    @property
    def p(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def zero(cls, p: int, label: str = "Q=0") -> "Regularizer":
        return cls(np.zeros((p, p)), label=label, scale=0.0, allow_zero=True)

    @classmethod
    def scaled(cls, base_matrix: np.ndarray, q: float, base_label: str) -> "Regularizer":
        return cls(q * np.asarray(base_matrix, dtype=float),
                   label=f"q={q:g}*{base_label}", scale=q, base=base_label)


@dataclass(frozen=True)
class PortfolioWeights:
    """A weight vector together with its normalization convention."""

    w: np.ndarray
    normalization: str = "raw"

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        if w.ndim != 1:
            raise ValueError("weights must be a vector")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights contain non-finite entries")
        if self.normalization == "l1_book":
            if abs(np.abs(w).sum() - 1.0) > _NORMALIZATION_TOL:
                raise ValueError("l1_book weights must have unit L1 norm")
        elif self.normalization == "budget_sum1":
            if abs(w.sum() - 1.0) > _NORMALIZATION_TOL:
                raise ValueError("budget_sum1 weights must sum to one")
        elif self.normalization != "raw":
            raise ValueError(f"unknown normalization {self.normalization!r}")
        object.__setattr__(self, "w", w)


def compute_sample_moments(panel: ReturnsPanel,
                           known_mu: np.ndarray | None = None) -> SampleMoments:
    """Sample moments of a panel: mu_hat and sigma_hat = X'X / n.

    With ``known_mu`` the data are centered at the known raw mean
    (known_mu + risk_free), mu_hat is set to known_mu, and no degree of
    freedom is spent on the mean.  Otherwise the columns are centered at
    their sample mean and mu_hat is the sample mean of excess returns.
    """
    r = panel.data
    n, p = r.shape
    if known_mu is not None:
        mu = np.asarray(known_mu, dtype=float)
        if mu.shape != (p,):
            raise ValueError(f"known_mu shape {mu.shape} does not match p={p}")
        if not np.all(np.isfinite(mu)):
            raise ValueError("known_mu contains non-finite entries")
        x = r - (mu + panel.risk_free)
        centered_on = CENTERED_ON_KNOWN_MU
    else:
        col_mean = r.mean(axis=0)
        mu = col_mean - panel.risk_free
        x = r - col_mean
        centered_on = CENTERED_ON_SAMPLE_MEAN
    sigma = x.T @ x / n
    sigma = 0.5 * (sigma + sigma.T)
    return SampleMoments(mu_hat=mu, sigma_hat=sigma, n=n, p=p, c=p / n,
                         centered_on=centered_on)


def regularized_solver(moments: SampleMoments, reg: Regularizer) -> SymSolver:
    """Factor K = sigma_hat + Q once; pseudo-inverse allowed only for Q = 0."""
    if reg.p != moments.p:
        raise ValueError("regularizer dimension does not match moments")
    if reg.is_zero:
        return SymSolver(moments.sigma_hat, allow_pseudo=True)
    return SymSolver(moments.sigma_hat + reg.matrix, allow_pseudo=False)


def mv_weights(moments: SampleMoments, mu: np.ndarray,
               reg: Regularizer) -> PortfolioWeights:
    """Mean-variance direction (sigma_hat + Q)^{-1} mu, scaled to unit book."""
    mu = np.asarray(mu, dtype=float)
    if mu.shape != (moments.p,):
        raise ValueError("mu dimension mismatch")
    if not np.any(mu):
        raise ValueError("mu = 0 leaves the portfolio direction undefined")
    solver = regularized_solver(moments, reg)
    raw = solver.solve(mu)
    book = np.abs(raw).sum()
    if book == 0.0:
        raise SingularSystemError("mu lies in the null space of (sigma_hat + Q)^+")
    return PortfolioWeights(w=raw / book, normalization="l1_book")


def gmv_weights(moments: SampleMoments, reg: Regularizer) -> PortfolioWeights:
    """Global minimum variance weights (sigma_hat + Q)^{-1} 1, budget one."""
    solver = regularized_solver(moments, reg)
    ones = np.ones(moments.p)
    raw = solver.solve(ones)
    denom = float(ones @ raw)
    if denom <= 0.0:
        raise SingularSystemError("1'(sigma_hat + Q)^{-1}1 must be positive")
    return PortfolioWeights(w=raw / denom, normalization="budget_sum1")


def pseudo_inverse(sigma_hat: np.ndarray,
                   rank_tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Moore-Penrose pseudo-inverse of a symmetric matrix.

    Eigenvalues below ``rank_tol`` times the largest eigenvalue magnitude are
    treated as zero.
    """
    pinv, _ = sym_pseudo_inverse(sigma_hat, rank_tol)
    return pinv
