"""
Splitting one MEC server between offloaders
===========================================

Given each offloader's fixed delay and server workload, the KKT solution
gives more cycles to users whose delay is dominated by computation.
"""

import numpy as np

from semoffload.capacity import CapacityInstance, even_capacity, min_capacities, solve_capacity

inst = CapacityInstance(
    accuracy_const=[90.0, 92.0, 95.0],
    fixed_delay=[0.002, 0.010, 0.015],   # transfer time, s
    work=[2e7, 6e7, 1e7],                # cycles on the server
    delay_limit=[0.02, 0.04, 0.06],
    budget=10e9,
)

f_min, _ = min_capacities(inst)
f_opt = solve_capacity(inst)
f_even = even_capacity(inst)
print("deadline floor (Gc/s):", np.round(f_min / 1e9, 3))
print("KKT split     (Gc/s):", np.round(f_opt / 1e9, 3), " sum", f_opt.sum() / 1e9)
print("even split    (Gc/s):", np.round(f_even / 1e9, 3))
print("objective KKT  %.5f" % inst.objective(f_opt))
print("objective even %.5f" % inst.objective(f_even))

# more budget never hurts
for F in (5e9, 10e9, 20e9, 40e9):
    bigger = CapacityInstance(inst.accuracy_const, inst.fixed_delay, inst.work, inst.delay_limit, F)
    print(f"F = {F/1e9:4.0f} Gc/s -> objective {bigger.objective(solve_capacity(bigger)):.4f}")
