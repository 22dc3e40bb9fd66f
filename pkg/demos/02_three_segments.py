"""An instance whose optimum is approached by maps but never attained.

The source is a vertical unit segment at x = 0; the target splits its
mass between two parallel segments at x = +1 and x = -1.  Any map must
interleave ever-finer slices to feed both sides, so map costs approach
the unit-displacement cost f(1) without reaching it, while the optimal
*plan* simply sends half of every point each way at cost exactly f(1).

Discretely: the LP objective squeezes down to f(1) as the grids refine,
always staying inside [f(1), f(1 + 1/n)], and the half/half limit plan
costs f(1) on the nose at every n.
"""

from concave_ot import PowerCost, decompose, extract_map, solve_exact, three_segments
from concave_ot.cli import limit_plan_pair

cost = PowerCost(0.5)
f1 = float(cost.value(1.0))

print(f"unit-displacement cost f(1) = {f1}")
print(f"{'n':>4} {'objective':>12} {'upper f(1+1/n)':>16} {'split fraction':>15}")
for n in (1, 2, 4, 8, 16, 32):
    mu, nu = three_segments(n)
    plan, _, obj = solve_exact(mu, nu, cost)
    split = extract_map(decompose(plan)).split_fraction
    upper = float(cost.value(1.0 + 1.0 / n))
    print(f"{n:>4} {obj:>12.8f} {upper:>16.8f} {split:>15.2f}")

limit = limit_plan_pair(32)
print(f"\nhalf/half limit plan cost    = {limit.transport_cost(cost)}")
print(f"limit plan split fraction    = {extract_map(decompose(limit)).split_fraction}")
print("every source atom needs two images: no map can realize the optimum")
