"""Radial ground state of -Δw + w = w^p.

Shoots for w(0), checks the 1-D closed form, and prints the integral
constants used everywhere else.
"""

import math

import numpy as np

from spikespec.ground_state import ProblemParams, compute_constants, decay_diagnostics, solve_profile

# In one dimension the soliton is known exactly: w = sqrt(2) sech(r) for p = 3.
prof = solve_profile(ProblemParams(3, 1))
err = np.max(np.abs(prof.w - math.sqrt(2) / np.cosh(prof.grid)))
print(f"d=1, p=3: w(0) = {prof.w0:.10f}, max error vs sqrt(2) sech = {err:.2e}")

# Higher dimensions have no closed form; the shooting value and constants
# are what the fiber problem consumes.
for p, d in [(3, 2), (2, 2), (3, 3), (2, 3)]:
    prof = solve_profile(ProblemParams(p, d))
    c = compute_constants(prof)
    dec = decay_diagnostics(prof)
    print(f"p={p}, d={d}: w0 = {prof.w0:.8f}  C0 = {c.C0:.8f}  C1 = {c.C1:.8f}  tail amplitude {dec.amplitude_limit:.6f}")
