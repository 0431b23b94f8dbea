"""Model spectrum of the linearization around a concentrating layer.

Each Jacobi eigenvalue μ_j and Laplace eigenvalue ρ_j of a circle feeds
the fiber branches at α = ε²ρ_j, giving a list of approximate eigenvalues.
Morse index, gap statistics, admissible-ε intervals and the Kato flow of a
single branch are all read off this list.
"""

import math

from spikespec.geometry import build_spectra, circle_spectrum
from spikespec.ground_state import ProblemParams, compute_constants, solve_profile
from spikespec.model_operator import (assemble_model_spectrum, branch_curves, gap_report, invertibility_sweep,
                                      kato_flow, morse_report)

prof = solve_profile(ProblemParams(3, 2))
consts = compute_constants(prof)
curves = branch_curves(prof)  # memoized PCHIP curves, built once
circle = build_spectra(circle_spectrum(2 * math.pi, 10_000), 1, 0.5)

model = assemble_model_spectrum(prof, consts, circle, 0.01, curves=curves)
print(f"eps = 0.01: {len(model)} entries, Morse index {model.morse_index()}")

# The Morse index grows like Θ/ε^k.
morse = morse_report(prof, consts, circle, [0.02, 0.01, 0.005], curves=curves)
for e, m, r in zip(morse.epsilons, morse.counts, morse.ratios):
    print(f"  eps={e:<6} index={int(m):<5d} ratio to Theta/eps = {r:.4f}")

# Smallest |eigenvalue| on the η branch shrinks like ε^k, on σ like ε².
gaps = gap_report(prof, consts, circle, [0.02, 0.01, 0.005, 0.0025], curves=curves)
print(f"gap slopes: eta {gaps.eta_slope:.3f}, sigma {gaps.sigma_slope:.3f}")

# Intervals of ε where every model eigenvalue stays away from zero.
sweep = invertibility_sweep(prof, consts, circle, 0.004, 0.032, c=0.05, curves=curves)
for b in sweep.blocks:
    print(f"  block [{b.lo:.4f}, {b.hi:.4f}]: {b.intervals} admissible intervals")
print(f"log-log slope of the shortest interval length: {sweep.length_slope:.3f}")

# Eigenvalue flow through a crossing, chain rule vs finite differences.
kato = kato_flow(prof, consts, circle, 9, 0.1, 1.5, curves=curves)
print(f"Kato j=9: crossing eps {kato.epsilon_star:.6f}, relative diff {kato.max_relative_difference:.1e}")
