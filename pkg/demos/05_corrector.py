"""First-order corrector on the half plane and the projection identities.

Solves L w1 = f orthogonally to the kernel direction w0', then shows the
residual drops from first to second order in ε once w1 is added.
"""

from spikespec.corrector import GeometryData, projection_identities, residual_order_test, w1_solve
from spikespec.ground_state import ProblemParams, solve_profile

prof = solve_profile(ProblemParams(3, 2))

geom = GeometryData.diagonal([0.3, -0.7])
field = w1_solve(prof, geom)
print(f"grid {field.grid.shape}, max |w1| = {field.max_abs:.4e}, outer max = {field.outer_max:.2e}")
print(f"kernel coefficient {field.kernel_coeff:.1e}, solver residual {field.solver_residual:.1e}")

eps_list = [0.1, 0.05, 0.025, 0.0125]
order = residual_order_test(prof, geom, field, eps_list)
for e, r0, r1 in zip(eps_list, order.r0, order.r1):
    print(f"  eps={e:<7} |E(w0)| = {r0:.3e}   |E(w0 + eps w1)| = {r1:.3e}")
print(f"residual slopes: {order.slope0:.3f} without, {order.slope1:.3f} with the corrector")

ids = projection_identities(prof)
print(f"projection identities: I1 error {ids.I1_relative_error:.1e}, exchange error {ids.exchange_relative_error:.1e}")
