"""Synthetic designs, Gaussian panel sampling, and seeded Monte Carlo sweeps.

Randomness contract
-------------------
All draws come from numpy's PCG64 generator seeded through
``numpy.random.SeedSequence(entropy=seed, spawn_key=path)``.  Each design
ingredient owns a fixed sub-stream path (see the ``_STREAM_*`` constants) and
trial ``b`` owns the path ``(_STREAM_TRIAL, b)``, so design parameters are
generated once per (n, p) pair, remain fixed across trials, and trials are
independent and order-insensitive.

Design catalogue (p must be a multiple of 10)
---------------------------------------------
covariances
    sigma0 : diag(lambda) + 2 * 11'   (lambda ~ inverse-gamma(1,1) truncated
             to [0.01, 9] by rejection, sorted descending)
    sigma1 : diag(lambda)
    sigma2 : sigma0 + xi1 xi1' + xi2 xi2',  xi1 _|_ xi2 _|_ 1, |xi|^2 = p
    sigma3 : diag(lambda) + 2 * 11' + xi3 xi3',  xi3 ~ Gamma(1,1) entrywise
means
    mu0 : sqrt(5/p) * (1(S+) - 1(S-)),  |S+| = |S-| = p/10 disjoint
    mu1 : iid Uniform(-sqrt(2/p), sqrt(2/p))
    mu2 : mu1 + 2 * 1
    mu3 : p^(1/4) * mu0 + 2 * 1
    mu4 : mu0 + 2 * 1 + xi3
regularizer families Q(q) = Q_a + q * Q_b
    q0_scaled       : q * Q0,  Q0 = diag(3,...,3,1,...,1) (p/2 each)
    q1              : 0.1 * Q0 + q * diag(lambda)
    q2              : 0.5 * I + q * Q0
    q3              : q * sigma0
    identity_scaled : q * I
"""

from __future__ import annotations

import concurrent.futures
import json
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from ._linalg import format_float
from .frontier import frontier_coefficients, frontier_point
from .moments import Regularizer, ReturnsPanel, compute_sample_moments

SIGMA_KINDS = ("sigma0", "sigma1", "sigma2", "sigma3")
MU_KINDS = ("mu0", "mu1", "mu2", "mu3", "mu4")
Q_KINDS = ("q0_scaled", "q1", "q2", "q3", "identity_scaled", "zero")
TASKS = ("sharpe_known", "sharpe_unknown", "frontier")

# Sub-stream registry; new ingredients get new tags, existing tags are frozen
# so that seeds stay reproducible.
_STREAM_LAMBDA = 1
_STREAM_SUPPORT = 2
_STREAM_XI1 = 3
_STREAM_XI2 = 4
_STREAM_XI3 = 5
_STREAM_MU1 = 6
_STREAM_TRIAL = 1000

_LAMBDA_TRUNCATION = (0.01, 9.0)


def derive_rng(seed: int, *path: int) -> np.random.Generator:
    """Independent PCG64 stream for (seed, path); same inputs, same stream."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=path))


def default_q_grid(c: float) -> tuple[float, ...]:
    """(1:30)/5 when c < 1, (1:30)/1.5 when c >= 1."""
    div = 5.0 if c < 1.0 else 1.5
    return tuple(np.arange(1, 31) / div)


@dataclass(frozen=True)
class DesignSpec:
    """One synthetic experiment design; all randomness derives from ``seed``."""

    p: int
    sigma_kind: str = "sigma0"
    mu_kind: str = "mu0"
    q_kind: str = "q0_scaled"
    q_grid: tuple[float, ...] | None = None
    seed: int = 0
    mu0_grid: tuple[float, ...] = tuple(np.arange(1, 31) * 0.2)
    frontier_q: float = 0.2

    def __post_init__(self):
        if self.p <= 0 or self.p % 10 != 0:
            raise ValueError("p must be a positive multiple of 10")
        if self.sigma_kind not in SIGMA_KINDS:
            raise ValueError(f"unknown sigma_kind {self.sigma_kind!r}")
        if self.mu_kind not in MU_KINDS:
            raise ValueError(f"unknown mu_kind {self.mu_kind!r}")
        if self.q_kind not in Q_KINDS:
            raise ValueError(f"unknown q_kind {self.q_kind!r}")
        for name in ("q_grid", "mu0_grid"):
            grid = getattr(self, name)
            if grid is None:
                continue
            grid = tuple(float(x) for x in grid)
            if not grid:
                raise ValueError(f"{name} must be non-empty")
            if any(a >= b for a, b in zip(grid, grid[1:])):
                raise ValueError(f"{name} must be strictly increasing")
            object.__setattr__(self, name, grid)
        if not self.frontier_q > 0.0:
            raise ValueError("frontier_q must be positive")


def _gen_lambda(spec: DesignSpec) -> np.ndarray:
    """Truncated inverse-gamma(1,1) spectrum, sorted descending."""
    rng = derive_rng(spec.seed, _STREAM_LAMBDA)
    lo, hi = _LAMBDA_TRUNCATION
    out = np.empty(0)
    while out.size < spec.p:
        draw = 1.0 / rng.standard_gamma(1.0, size=2 * spec.p)
        out = np.concatenate([out, draw[(draw >= lo) & (draw <= hi)]])
    return np.sort(out[: spec.p])[::-1].copy()


def _gen_xi12(spec: DesignSpec) -> tuple[np.ndarray, np.ndarray]:
    """Two Gaussian directions, Gram-Schmidt against 1 and each other, |xi|^2 = p."""
    p = spec.p
    e1 = np.ones(p) / np.sqrt(p)
    g1 = derive_rng(spec.seed, _STREAM_XI1).standard_normal(p)
    g2 = derive_rng(spec.seed, _STREAM_XI2).standard_normal(p)
    xi1 = g1 - (g1 @ e1) * e1
    xi1 *= np.sqrt(p) / np.linalg.norm(xi1)
    xi2 = g2 - (g2 @ e1) * e1
    xi2 -= (xi2 @ xi1) / (xi1 @ xi1) * xi1
    xi2 *= np.sqrt(p) / np.linalg.norm(xi2)
    return xi1, xi2


def _gen_xi3(spec: DesignSpec) -> np.ndarray:
    return derive_rng(spec.seed, _STREAM_XI3).standard_gamma(1.0, size=spec.p)


def _gen_mu0(spec: DesignSpec) -> np.ndarray:
    """Sparse +/- signal: a seeded permutation supplies disjoint S+ and S-."""
    p = spec.p
    k = p // 10
    perm = derive_rng(spec.seed, _STREAM_SUPPORT).permutation(p)
    mu = np.zeros(p)
    mu[perm[:k]] = np.sqrt(5.0 / p)
    mu[perm[k: 2 * k]] = -np.sqrt(5.0 / p)
    return mu


def _gen_mu1(spec: DesignSpec) -> np.ndarray:
    bound = np.sqrt(2.0 / spec.p)
    return derive_rng(spec.seed, _STREAM_MU1).uniform(-bound, bound, size=spec.p)


def gen_sigma(spec: DesignSpec) -> np.ndarray:
    """The population covariance of the design (dense p x p)."""
    lam = _gen_lambda(spec)
    if spec.sigma_kind == "sigma1":
        return np.diag(lam)
    base = np.diag(lam) + 2.0
    if spec.sigma_kind == "sigma0":
        return base
    if spec.sigma_kind == "sigma2":
        xi1, xi2 = _gen_xi12(spec)
        return base + np.outer(xi1, xi1) + np.outer(xi2, xi2)
    xi3 = _gen_xi3(spec)
    return base + np.outer(xi3, xi3)


def gen_mu(spec: DesignSpec, xi3: np.ndarray | None = None) -> np.ndarray:
    """The mean vector of the design; mu4 reuses sigma3's xi3 direction."""
    if spec.mu_kind == "mu0":
        return _gen_mu0(spec)
    if spec.mu_kind == "mu1":
        return _gen_mu1(spec)
    if spec.mu_kind == "mu2":
        return _gen_mu1(spec) + 2.0
    if spec.mu_kind == "mu3":
        return spec.p ** 0.25 * _gen_mu0(spec) + 2.0
    if xi3 is None:
        xi3 = _gen_xi3(spec)
    return _gen_mu0(spec) + 2.0 + xi3


def _q0_diag(p: int) -> np.ndarray:
    d = np.ones(p)
    d[: p // 2] = 3.0
    return d


@dataclass(frozen=True)
class AffineQFamily:
    """Regularizer family Q(q) = Q_a + q * Q_b; diagonal parts stay vectors."""

    qa: np.ndarray | None  # diagonal as a p-vector, or None for zero
    qb: np.ndarray  # diagonal as a p-vector, or dense p x p
    base_label: str

    @property
    def qb_is_diag(self) -> bool:
        return self.qb.ndim == 1

    @property
    def p(self) -> int:
        return self.qb.shape[0]

    def matrix(self, q: float) -> np.ndarray:
        m = q * (np.diag(self.qb) if self.qb_is_diag else self.qb)
        if self.qa is not None:
            m = m + np.diag(self.qa)
        return m

    def regularizer(self, q: float) -> Regularizer:
        if self.qa is None:
            return Regularizer(self.matrix(q), label=f"q={q:g}*{self.base_label}",
                               scale=q, base=self.base_label)
        return Regularizer(self.matrix(q), label=f"{self.base_label}(q={q:g})",
                           scale=q, base=self.base_label)


def q_family(spec: DesignSpec, lam: np.ndarray | None = None,
             sigma0: np.ndarray | None = None) -> AffineQFamily:
    """The affine (Q_a, Q_b) pair of the design's regularizer family."""
    p = spec.p
    if spec.q_kind == "zero":
        raise ValueError("the zero regularizer is not a scalable family")
    if spec.q_kind == "q0_scaled":
        return AffineQFamily(qa=None, qb=_q0_diag(p), base_label="Q0")
    if spec.q_kind == "identity_scaled":
        return AffineQFamily(qa=None, qb=np.ones(p), base_label="I")
    if lam is None:
        lam = _gen_lambda(spec)
    if spec.q_kind == "q1":
        return AffineQFamily(qa=0.1 * _q0_diag(p), qb=lam.copy(), base_label="Q1")
    if spec.q_kind == "q2":
        return AffineQFamily(qa=0.5 * np.ones(p), qb=_q0_diag(p), base_label="Q2")
    # q3: q * sigma0 with the design's own lambda spectrum
    if sigma0 is None:
        sigma0 = np.diag(lam) + 2.0
    return AffineQFamily(qa=None, qb=sigma0, base_label="Sigma0")


def gen_q(spec: DesignSpec, lam: np.ndarray | None = None,
          sigma0: np.ndarray | None = None) -> list[Regularizer]:
    """Materialized regularizer grid for the design's q values.

    Needs an explicit ``q_grid`` on the spec (the right default depends on
    the aspect ratio; see ``default_q_grid``).
    """
    if spec.q_kind == "zero":
        return [Regularizer.zero(spec.p)]
    if spec.q_grid is None:
        raise ValueError("gen_q needs an explicit q_grid (see default_q_grid)")
    fam = q_family(spec, lam=lam, sigma0=sigma0)
    return [fam.regularizer(q) for q in spec.q_grid]


def _sym_sqrt(sigma: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root; tiny negative eigenvalues clip to zero."""
    vals, vecs = np.linalg.eigh(np.asarray(sigma, dtype=float))
    if vals.min() < -1e-10 * max(abs(vals).max(), 1.0):
        raise ValueError("sigma must be positive semi-definite")
    root = np.sqrt(np.clip(vals, 0.0, None))
    s = (vecs * root) @ vecs.T
    return 0.5 * (s + s.T)


def sample_returns(mu: np.ndarray, sigma: np.ndarray, n: int,
                   seed: int) -> ReturnsPanel:
    """n i.i.d. Gaussian rows with mean mu and covariance sigma.

    Sampling goes through the symmetric square root of sigma so singular
    covariances are handled uniformly; bit-reproducible for a fixed seed.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    mu = np.asarray(mu, dtype=float)
    s = _sym_sqrt(sigma)
    z = derive_rng(seed).standard_normal((n, mu.shape[0]))
    return ReturnsPanel(data=mu + z @ s)


@dataclass(frozen=True)
class MonteCarloDesign:
    """All fixed ingredients of a sweep: (sigma, mu), family, sqrt cache."""

    spec: DesignSpec
    sigma: np.ndarray
    mu: np.ndarray
    lam: np.ndarray
    family: AffineQFamily | None
    sigma_sqrt: np.ndarray


def build_design(spec: DesignSpec) -> MonteCarloDesign:
    lam = _gen_lambda(spec)
    sigma = gen_sigma(spec)
    xi3 = _gen_xi3(spec) if spec.mu_kind == "mu4" or spec.sigma_kind == "sigma3" else None
    mu = gen_mu(spec, xi3=xi3)
    family = None if spec.q_kind == "zero" else q_family(spec, lam=lam)
    return MonteCarloDesign(spec=spec, sigma=sigma, mu=mu, lam=lam,
                            family=family, sigma_sqrt=_sym_sqrt(sigma))


class _WhitenedGrid:
    """Spectral evaluator for K(q) = sigma_hat + Q_a + q * Q_b across a q grid.

    One eigendecomposition of the Q_b-whitened matrix serves every q:
    K(q)^{-1} = U (Lam + q)^{-1} U' with U = L^{-T} V, Q_b = L L'.
    """

    def __init__(self, sigma_hat: np.ndarray, fam: AffineQFamily):
        p = sigma_hat.shape[0]
        a = sigma_hat if fam.qa is None else sigma_hat + np.diag(fam.qa)
        if fam.qb_is_diag:
            sq = np.sqrt(fam.qb)
            m = a / sq[:, None] / sq[None, :]
            m = 0.5 * (m + m.T)
            self.lam, v = np.linalg.eigh(m)
            self.u = v / sq[:, None]
        else:
            low = scipy.linalg.cholesky(fam.qb, lower=True)
            tmp = scipy.linalg.solve_triangular(low, a, lower=True)
            m = scipy.linalg.solve_triangular(low, tmp.T, lower=True).T
            m = 0.5 * (m + m.T)
            self.lam, v = np.linalg.eigh(m)
            self.u = scipy.linalg.solve_triangular(low.T, v, lower=False)
        self.lam = np.clip(self.lam, 0.0, None)
        if fam.qa is None:
            self.da = np.zeros(p)
        else:
            self.da = (self.u**2 * fam.qa[:, None]).sum(axis=0)
        self.qa = fam.qa
        self.p = p

    def project(self, vec: np.ndarray) -> np.ndarray:
        return self.u.T @ vec

    def kinv_vec(self, q: float, a: np.ndarray) -> np.ndarray:
        return self.u @ (a / (self.lam + q))

    def t1(self, q: float, a: np.ndarray, b: np.ndarray | None = None) -> float:
        b = a if b is None else b
        return float(np.sum(a * b / (self.lam + q)))

    def quad_sigma_hat(self, q: float, a: np.ndarray, y: np.ndarray) -> float:
        """x' K^{-1} sigma_hat K^{-1} x for x with coordinates a, y = K^{-1}x."""
        core = float(np.sum(a**2 * self.lam / (self.lam + q) ** 2))
        if self.qa is None:
            return core
        return core - float(np.sum(self.qa * y**2))

    def trace_sigma_hat_kinv(self, q: float) -> float:
        return float(np.sum((self.lam - self.da) / (self.lam + q)))


@dataclass
class MonteCarloReport:
    """Aggregated sweep results: one record per grid cell plus summaries.

    Cell schema (sharpe tasks; hat = estimator, true = oracle value):
        cell, mean_true, mean_hat, mean_abs_diff, mse_diff, mse_ratio,
        mean_abs_ratio_err, trials
    with mse_ratio = mean((hat/true - 1)^2).  Frontier cells carry the same
    keys computed on squared volatilities (mse_diff on sigma^2 differences,
    mse_ratio on sigma_hat^2/sigma0^2 - 1) plus mse_sr_diff for
    (mu0/sigma_hat - mu0/sigma0)^2 and mean_abs_ratio_err on sigma ratios.
    """

    task: str
    cells: list[dict]
    summary: dict
    config: dict
    cell_axis: np.ndarray = field(repr=False)
    true_values: np.ndarray = field(repr=False)
    hat_values: np.ndarray = field(repr=False)

    def to_csv(self, path) -> None:
        """Long format: one row per (cell, statistic)."""
        lines = ["cell,statistic,value"]
        for rec in self.cells:
            cell = format_float(rec["cell"])
            for key, value in rec.items():
                if key == "cell":
                    continue
                lines.append(f"{cell},{key},{format_float(float(value))}")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")

    def to_json(self, path) -> None:
        payload = {
            "task": self.task,
            "config": self.config,
            "cells": self.cells,
            "summary": self.summary,
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True, indent=1)
            fh.write("\n")


def aggregate_cells(task: str, cell_axis: np.ndarray, true_values: np.ndarray,
                    hat_values: np.ndarray) -> tuple[list[dict], dict]:
    """Reduce per-trial (true, hat) matrices to per-cell statistics."""
    trials = true_values.shape[0]
    cells = []
    if task == "frontier":
        t2, h2 = true_values**2, hat_values**2
        for j, cell in enumerate(cell_axis):
            mu0 = float(cell)
            cells.append({
                "cell": mu0,
                "mean_true": float(true_values[:, j].mean()),
                "mean_hat": float(hat_values[:, j].mean()),
                "mean_abs_diff": float(np.abs(hat_values[:, j] - true_values[:, j]).mean()),
                "mse_diff": float(((h2[:, j] - t2[:, j]) ** 2).mean()),
                "mse_ratio": float(((h2[:, j] / t2[:, j] - 1.0) ** 2).mean()),
                "mean_abs_ratio_err": float(np.abs(hat_values[:, j] / true_values[:, j] - 1.0).mean()),
                "mse_sr_diff": float(((mu0 / hat_values[:, j] - mu0 / true_values[:, j]) ** 2).mean()),
                "trials": trials,
            })
        mean_true = true_values.mean(axis=0)
        mean_hat = hat_values.mean(axis=0)
        summary = {
            "argmin_cell_true": float(cell_axis[int(np.argmin(mean_true))]),
            "argmin_cell_hat": float(cell_axis[int(np.argmin(mean_hat))]),
        }
        return cells, summary
    for j, cell in enumerate(cell_axis):
        cells.append({
            "cell": float(cell),
            "mean_true": float(true_values[:, j].mean()),
            "mean_hat": float(hat_values[:, j].mean()),
            "mean_abs_diff": float(np.abs(hat_values[:, j] - true_values[:, j]).mean()),
            "mse_diff": float(((hat_values[:, j] - true_values[:, j]) ** 2).mean()),
            "mse_ratio": float(((hat_values[:, j] / true_values[:, j] - 1.0) ** 2).mean()),
            "mean_abs_ratio_err": float(np.abs(hat_values[:, j] / true_values[:, j] - 1.0).mean()),
            "trials": trials,
        })
    mean_true = true_values.mean(axis=0)
    mean_hat = hat_values.mean(axis=0)
    i_true = int(np.argmax(mean_true))
    i_hat = int(np.argmax(mean_hat))
    summary = {
        "argmax_cell_true": float(cell_axis[i_true]),
        "argmax_cell_hat": float(cell_axis[i_hat]),
        "argmax_gap_steps": abs(i_true - i_hat),
        "max_mean_true": float(mean_true[i_true]),
        "max_mean_hat": float(mean_hat[i_hat]),
    }
    return cells, summary


def _sharpe_trial(design: MonteCarloDesign, n: int, b: int, qs: np.ndarray,
                  known_mu: bool) -> tuple[np.ndarray, np.ndarray]:
    spec = design.spec
    rng = derive_rng(spec.seed, _STREAM_TRIAL, b)
    z = rng.standard_normal((n, spec.p))
    panel = ReturnsPanel(data=design.mu + z @ design.sigma_sqrt)
    c = spec.p / n
    if known_mu:
        moments = compute_sample_moments(panel, known_mu=design.mu)
    else:
        moments = compute_sample_moments(panel)
    grid = _WhitenedGrid(moments.sigma_hat, design.family)
    a_mu = grid.project(design.mu)
    a_hat = a_mu if known_mu else grid.project(moments.mu_hat)
    true = np.empty(len(qs))
    hat = np.empty(len(qs))
    for i, q in enumerate(qs):
        y = grid.kinv_vec(q, a_hat)
        corr = 1.0 - c / spec.p * grid.trace_sigma_hat_kinv(q)
        g_hat = grid.quad_sigma_hat(q, a_hat, y)
        t2_true = float(y @ (design.sigma @ y))
        if known_mu:
            t1 = grid.t1(q, a_mu)
            hat[i] = corr * t1 / np.sqrt(g_hat)
            true[i] = t1 / np.sqrt(t2_true)
        else:
            t = grid.trace_sigma_hat_kinv(q)
            num_hat = grid.t1(q, a_hat) - t / (n - t)
            hat[i] = corr * num_hat / np.sqrt(g_hat)
            true[i] = grid.t1(q, a_hat, a_mu) / np.sqrt(t2_true)
    return true, hat


def _frontier_trial(design: MonteCarloDesign, n: int, b: int,
                    mu0s: np.ndarray, reg: Regularizer) -> tuple[np.ndarray, np.ndarray]:
    spec = design.spec
    rng = derive_rng(spec.seed, _STREAM_TRIAL, b)
    z = rng.standard_normal((n, spec.p))
    panel = ReturnsPanel(data=design.mu + z @ design.sigma_sqrt)
    moments = compute_sample_moments(panel, known_mu=design.mu)
    coeffs = frontier_coefficients(design.mu, moments, reg)
    true = np.empty(len(mu0s))
    hat = np.empty(len(mu0s))
    for j, mu0 in enumerate(mu0s):
        pt = frontier_point(coeffs, float(mu0), moments, reg,
                            sigma_true=design.sigma)
        true[j] = pt.sigma_true
        hat[j] = pt.sigma_hat
    return true, hat


def run_monte_carlo(spec: DesignSpec, n: int, trials: int, task: str,
                    threads: int = 1) -> MonteCarloReport:
    """Seeded sweep: sample panels, compute moments, evaluate (true, hat) pairs.

    ``task`` selects the known-mean Sharpe comparison, the unknown-mean
    comparison, or the frontier volatility comparison; cells are the design's
    q grid (mu0 grid for the frontier task).  Trials run on derived RNG
    streams so results do not depend on execution order or thread count.
    """
    if task not in TASKS:
        raise ValueError(f"unknown task {task!r}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if n < 2:
        raise ValueError("n must be >= 2")
    design = build_design(spec)
    c = spec.p / n
    if task == "frontier":
        cell_axis = np.asarray(spec.mu0_grid, dtype=float)
        reg = design.family.regularizer(spec.frontier_q)
        worker = lambda b: _frontier_trial(design, n, b, cell_axis, reg)  # noqa: E731
    else:
        grid = spec.q_grid if spec.q_grid is not None else default_q_grid(c)
        cell_axis = np.asarray(grid, dtype=float)
        known = task == "sharpe_known"
        worker = lambda b: _sharpe_trial(design, n, b, cell_axis, known)  # noqa: E731

    true_values = np.empty((trials, len(cell_axis)))
    hat_values = np.empty((trials, len(cell_axis)))
    if threads > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
            for b, (t, h) in zip(range(trials), pool.map(worker, range(trials))):
                true_values[b], hat_values[b] = t, h
    else:
        for b in range(trials):
            true_values[b], hat_values[b] = worker(b)

    cells, summary = aggregate_cells(task, cell_axis, true_values, hat_values)
    config = {
        "task": task,
        "n": n,
        "trials": trials,
        "c": c,
        "p": spec.p,
        "sigma_kind": spec.sigma_kind,
        "mu_kind": spec.mu_kind,
        "q_kind": spec.q_kind,
        "seed": spec.seed,
        "cells": [float(x) for x in cell_axis],
    }
    if task == "frontier":
        config["frontier_q"] = spec.frontier_q
    return MonteCarloReport(task=task, cells=cells, summary=summary,
                            config=config, cell_axis=cell_axis,
                            true_values=true_values, hat_values=hat_values)
