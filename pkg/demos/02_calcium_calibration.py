"""Turn a measured scale growth rate into a surface rate constant.

Hard-water pipes gain about 0.1 mm of calcium carbonate per month.  Working
backwards through the slow-layer balance in a 1 um channel pins the rate
constant and the dissolved-load number concentrations.
"""

from clogsim.model import Chemistry
from clogsim.sediment import (axial_depletion, calibrate_rate_constant, growth_rate,
                              solve_slow_layer, stationary_velocity)

MONTH = 30 * 86400.0
growth = 1e-4 / MONTH       # 0.1 mm / month in m/s

result = calibrate_rate_constant(
    growth, 1e-3,                 # kg/m^3 dissolved calcium carbonate
    solute_molar_mass=0.136,      # kg/mol, hydrated unit in solution
    sediment_molar_mass=0.100,    # kg/mol, solid carbonate
    sediment_density=2710.0,      # kg/m^3
    diffusivity=1e-9,
    radius=1e-6,
)

print(f"target growth          {growth:.6e} m/s")
print(f"rate constant K        {result.rate_constant:.6e} m/s")
print(f"entrance concentration {result.entrance_concentration:.6e} m^-3")
print(f"wall concentration     {result.wall_concentration:.6e} m^-3")

chem = Chemistry(
    rate_constant=result.rate_constant, reaction_order=1, diffusivity=1e-9,
    sediment_molar_mass=0.100, sediment_stoichiometry=1,
    sediment_density=2710.0, solute_molar_mass=0.136)

# closing the loop: the calibrated constant reproduces the measured growth
back = growth_rate(chem, result.wall_concentration)
print(f"round-trip growth      {back:.6e} m/s "
      f"(rel err {abs(back - growth) / growth:.1e})")

v_stat = stationary_velocity(chem, 1e-6, result.entrance_concentration)
print(f"stationary speed       {v_stat:.6e} m/s")

# this sink is strong: even 100x the stationary speed leaves a 1 mm path
# starved, and holding the axial drop to 5% takes m/s-scale flow
c0 = result.entrance_concentration
print()
print(f"{'v0 m/s':>10} {'delta_c0/c0':>12} {'negligible':>11}")
for v0 in (100 * v_stat, 1.0, 4.0 * chem.rate_constant * 1e-3 / (0.05 * 1e-6)):
    sol = solve_slow_layer(chem, 1e-6, c0, v0)
    est = axial_depletion(chem, 1e-6, c0, sol.wall_concentration, v0, 1e-3)
    print(f"{v0:>10.3e} {est.delta_c0 / c0:>12.3e} {str(est.negligible):>11}")
