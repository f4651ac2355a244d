"""Dense symmetric linear algebra shared by the estimation modules.

Everything here operates on the regularized matrix K = sigma_hat + Q.
Solves use a Cholesky factorization and fall back to an eigendecomposition
pseudo-inverse only when the caller explicitly allows it (the Q = 0 path).
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

# Relative eigenvalue cutoff for rank decisions; double-precision eigensolve
# noise floor.
DEFAULT_RANK_TOL = 1e-12

# Cholesky factors with a squared diagonal ratio below this are treated as
# numerically singular (proxy for smallest-eigenvalue ratio < 1e-10).
_NEAR_SINGULAR_RATIO = 1e-10


class SingularSystemError(np.linalg.LinAlgError):
    """(sigma_hat + Q) is singular and the pseudo-inverse path was not requested."""


def require_symmetric(m: np.ndarray, name: str = "matrix", rtol: float = 1e-12) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    scale = np.abs(m).max()
    if scale > 0 and np.abs(m - m.T).max() > rtol * scale:
        raise ValueError(f"{name} is not symmetric to relative tolerance {rtol:g}")
    return m


def sym_pseudo_inverse(m: np.ndarray, rank_tol: float = DEFAULT_RANK_TOL) -> tuple[np.ndarray, int]:
    """Moore-Penrose pseudo-inverse of a symmetric matrix via eigendecomposition.

    Eigenvalues below ``rank_tol * max(|eig|)`` are treated as zero.  Returns
    the pseudo-inverse and the numerical rank.
    """
    m = require_symmetric(m, "pseudo-inverse input")
    vals, vecs = np.linalg.eigh(m)
    cutoff = rank_tol * np.abs(vals).max(initial=0.0)
    keep = vals > cutoff
    inv_vals = np.zeros_like(vals)
    inv_vals[keep] = 1.0 / vals[keep]
    pinv = (vecs * inv_vals) @ vecs.T
    return 0.5 * (pinv + pinv.T), int(keep.sum())


class SymSolver:
    """Reusable solver for a symmetric system K = sigma_hat + Q.

    Tries a Cholesky factorization first; when K is singular (or numerically
    near-singular) the solver switches to the eigendecomposition-based
    pseudo-inverse, but only when ``allow_pseudo`` is set.
    """

    def __init__(self, k: np.ndarray, allow_pseudo: bool = False,
                 rank_tol: float = DEFAULT_RANK_TOL):
        k = require_symmetric(k, "K")
        self.p = k.shape[0]
        self._k = k
        self._rank_tol = rank_tol
        self._inv: np.ndarray | None = None
        self._cho = None
        self._pinv: np.ndarray | None = None
        self.rank = self.p
        try:
            cho = scipy.linalg.cho_factor(k, lower=True, check_finite=False)
            d = np.diag(cho[0])
            if (d.min() / d.max()) ** 2 < _NEAR_SINGULAR_RATIO:
                raise np.linalg.LinAlgError("near-singular Cholesky factor")
            self._cho = cho
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
            if not allow_pseudo:
                raise SingularSystemError(
                    "sigma_hat + Q is singular; pseudo-inverse path not enabled"
                ) from None
            self._pinv, self.rank = sym_pseudo_inverse(k, rank_tol)

    @property
    def used_pseudo(self) -> bool:
        return self._pinv is not None

    def solve(self, b: np.ndarray) -> np.ndarray:
        if self._pinv is not None:
            return self._pinv @ b
        return scipy.linalg.cho_solve(self._cho, b, check_finite=False)

    def inv(self) -> np.ndarray:
        if self._inv is None:
            if self._pinv is not None:
                self._inv = self._pinv
            else:
                inv = scipy.linalg.cho_solve(self._cho, np.eye(self.p), check_finite=False)
                self._inv = 0.5 * (inv + inv.T)
        return self._inv

    def quad(self, x: np.ndarray, mid: np.ndarray | None = None) -> float:
        """x' K^{-1} x, or x' K^{-1} mid K^{-1} x when ``mid`` is given."""
        y = self.solve(x)
        if mid is None:
            return float(x @ y)
        return float(y @ (mid @ y))

    def trace_solve(self, a: np.ndarray) -> float:
        """tr(K^{-1} A) for symmetric A."""
        return float(np.sum(self.inv() * a))


def format_float(x: float) -> str:
    """Serialize a float with 17 significant digits (exact binary round-trip)."""
    return f"{x:.17g}"
