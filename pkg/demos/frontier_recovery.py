"""Recovering the efficient frontier without the population covariance.

With no risk-free asset, the minimum-variance portfolio at target return mu0
is w = g + mu0*h.  Its realized volatility sigma0 = sqrt(w'Sigma w) needs the
unknown Sigma; the corrected estimator divides the in-sample variance by the
squared correction factor instead.  This script sweeps mu0 and prints both,
plus the assumption diagnostic rho that certifies the frontier is well posed.
"""

import numpy as np

from sharpe_rmt import (
    DesignSpec,
    ReturnsPanel,
    assumption_diagnostics,
    build_design,
    compute_sample_moments,
    frontier_coefficients,
    frontier_point,
)

N, P, SEED = 600, 300, 20240502

spec = DesignSpec(p=P, seed=SEED, sigma_kind="sigma3", mu_kind="mu4")
design = build_design(spec)
reg = design.family.regularizer(spec.frontier_q)

rng = np.random.default_rng(SEED)
panel = ReturnsPanel(data=design.mu + rng.standard_normal((N, P)) @ design.sigma_sqrt)
moments = compute_sample_moments(panel, known_mu=design.mu)

diag = assumption_diagnostics(design.mu, design.sigma, reg, moments.c)
print(f"frontier well-posedness: rho = {diag.rho:.4f} (< 1 required) -> ok={diag.ok}")
print()

coeffs = frontier_coefficients(design.mu, moments, reg)
print(f"two-fund scalars: A={coeffs.A:.3f} B={coeffs.B:.3f} "
      f"C={coeffs.C:.3f} D={coeffs.D:.3f}")
print(f"minimum-variance target return A/C = {coeffs.A / coeffs.C:.3f}")
print()
print(f"{'mu0':>5} {'sigma_hat (in-sample)':>22} {'sigma0 (true)':>14} {'rel err':>8}")
for mu0 in np.arange(1, 13) * 0.5:
    pt = frontier_point(coeffs, float(mu0), moments, reg, sigma_true=design.sigma)
    rel = abs(pt.sigma_hat / pt.sigma_true - 1.0)
    print(f"{mu0:5.1f} {pt.sigma_hat:22.4f} {pt.sigma_true:14.4f} {rel:8.4f}")

print()
print("the corrected volatility tracks the true hyperbola across the whole")
print("target-return range using in-sample data only; this is one panel, so")
print("a few percent of sampling noise remains (it averages out over trials).")
