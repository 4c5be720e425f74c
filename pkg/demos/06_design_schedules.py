"""Compare the three aperture-radius schedules for a layered filter.

equal_contamination loads every membrane with the same expected catch count,
quantile fixes catch k/n on membrane k, uniform repeats one radius.  The
equal-contamination penetration telescopes to 1 - m*c1; the quantile product
disagrees with its commonly quoted shortcut form.
"""

from clogsim.design import (equal_contamination_schedule, penetration_probability,
                            quantile_penetration_forms, quantile_schedule,
                            uniform_schedule)

rod = 2.5e-5
m = 11

eq = equal_contamination_schedule(0.09, m, rod_length=rod)
qt = quantile_schedule(m + 1, rod_length=rod)
un = uniform_schedule(0.09, m, rod_length=rod)

print(f"{m}-membrane schedules for 25 um rods, first catch 0.09:")
print(f"{'k':>3} {'equal c_k':>10} {'equal r um':>11} {'quantile c_k':>13} "
      f"{'quantile r um':>14} {'uniform c_k':>12}")
for k in range(m):
    print(f"{k + 1:>3} {eq.catch_probabilities[k]:>10.5f} "
          f"{eq.radii[k] * 1e6:>11.4f} {qt.catch_probabilities[k]:>13.5f} "
          f"{qt.radii[k] * 1e6:>14.4f} {un.catch_probabilities[k]:>12.5f}")
print()

print("penetration (probability a rod clears the whole stack):")
print(f"  equal contamination  {penetration_probability(eq):.6e}")
print(f"  1 - m*c1 shortcut    {1.0 - m * 0.09:.6e}")
print(f"  quantile             {penetration_probability(qt):.6e}")
print(f"  uniform              {penetration_probability(un):.6e}")
print()

product, shortcut = quantile_penetration_forms(m + 1)
print(f"quantile penetration forms at n = {m + 1}:")
print(f"  direct product   {product:.6e}")
print(f"  quoted shortcut  {shortcut:.6e}")
print(f"  ratio            {shortcut / product:.2f}x")
