"""Fiber eigenvalue branches η(α), σ(α), τ(α) and the threshold ᾱ.

η starts at -(p-1), crosses zero at ᾱ and tends to 1; σ starts at 0
because w0' spans the ℓ = 1 kernel.
"""

import numpy as np

from spikespec.fiber import branch_sweep, eta, eta_derivative, find_alpha_bar, truncation_closeness
from spikespec.ground_state import ProblemParams, solve_profile

prof = solve_profile(ProblemParams(3, 2))

alphas = np.round(np.arange(0, 3.01, 0.5), 10)
sw = branch_sweep(prof, alphas)
print(" alpha      eta      sigma      tau")
for a, e, s, t in zip(alphas, sw["eta"], sw["sigma"], sw["tau"]):
    print(f"{a:6.2f} {e:9.5f} {s:9.5f} {t:9.5f}")

res = find_alpha_bar(prof)
print(f"\nalpha_bar = {res.alpha_bar:.10f}, eta there = {res.eta_at_root:.1e}, slope = {res.eta_slope:.6f}")

# The slope of η is the L² mass of the eigenfunction in the α-weight.
a, h = 0.7, 1e-3
fd = (eta(prof, a + h) - eta(prof, a - h)) / (2 * h)
print(f"eta'(0.7): eigenvector formula {eta_derivative(prof, a):.8f}, central difference {fd:.8f}")
print(f"eta(1000) = {eta(prof, 1e3):.4f}")

# Dirichlet truncation converges exponentially in the ball radius.
rep = truncation_closeness(prof)
print("truncation closeness ratios as R doubles:", ", ".join(f"{r:.3g}" for r in rep.ratios))
