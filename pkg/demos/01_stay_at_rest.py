"""Shared mass stays at rest under a strictly concave cost.

Transport the unit interval onto its half-shifted copy.  For the plain
distance cost, sliding everything by 1/2 and keeping the overlap in
place are both optimal; for any *strictly* concave increasing cost the
overlap [1/2, 1] is forced to stay put, and only the residual [0, 1/2]
moves.  We discretize both segments on a common midpoint grid, solve the
LP exactly, and read the diagonal mass off the optimal plan.
"""

import numpy as np

from concave_ot import (
    DiscreteMeasure,
    PowerCost,
    decompose,
    meet,
    solve_exact,
    verify_stay_at_rest,
)

n = 400  # atoms per segment (even, so the two grids share atoms exactly)
i = np.arange(n)
mu = DiscreteMeasure(((i + 0.5) / n)[:, None], np.full(n, 1.0 / n))
nu = DiscreteMeasure(((i + n // 2 + 0.5) / n)[:, None], np.full(n, 1.0 / n))

cost = PowerCost(0.5)
plan, potentials, objective = solve_exact(mu, nu, cost)
dec = decompose(plan)

print(f"objective                 : {objective:.6f}")
print(f"common mass (lattice meet): {meet(mu, nu).common.total_mass:.6f}")
print(f"diagonal mass of the plan : {dec.diagonal_mass:.6f}")
print(f"off-diagonal mass         : {dec.off_diagonal_mass:.6f}")

report = verify_stay_at_rest(mu, nu, plan)
print(f"diagonal equals meet      : {report.diag_matches_meet}")
print(f"off-marginals singular    : {report.off_marginals_singular}")

# where does the moving half go? look at a few off-diagonal entries
off = dec.off_diagonal
order = np.argsort(plan.source.points[off.src_idx, 0])[:5]
print("\nsample of moved atoms (source -> target):")
for k in order:
    x = plan.source.points[off.src_idx[k], 0]
    y = plan.target.points[off.tgt_idx[k], 0]
    print(f"  {x:.4f} -> {y:.4f}   (displacement {y - x:+.4f})")
