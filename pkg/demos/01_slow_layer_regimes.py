"""Sweep the centreline speed across the stationary point of a reacting channel.

Below the stationary speed the reaction eats the whole cross-section and the
wall concentration freezes at its diffusion-limited value; above it a slow
annulus hugs the wall and the wall concentration climbs back toward the feed.
"""

import numpy as np

from clogsim.model import Chemistry
from clogsim.sediment import (growth_rate, solve_slow_layer, stationary_velocity,
                              wall_concentration_slow)

chem = Chemistry(
    rate_constant=1.6576116288274028e-4,
    reaction_order=1,
    diffusivity=1e-9,
    sediment_molar_mass=0.100,
    sediment_stoichiometry=1,
    sediment_density=2710.0,
    solute_molar_mass=0.136,
)

radius = 1e-6          # m
c0 = 4.428044676470588e21  # m^-3

c_slow = wall_concentration_slow(chem, radius, c0)
v_stat = stationary_velocity(chem, radius, c0)
print(f"channel radius      {radius:.1e} m")
print(f"feed concentration  {c0:.3e} m^-3")
print(f"diffusion-limited wall concentration {c_slow:.3e} m^-3")
print(f"stationary speed    {v_stat:.3e} m/s")
print()

print(f"{'v0/v_stat':>10} {'regime':>18} {'s/R':>8} {'c1/c0':>8} {'growth m/s':>12}")
for mult in (0.0, 0.3, 1.0, 3.0, 10.0, 100.0, 1000.0):
    sol = solve_slow_layer(chem, radius, c0, mult * v_stat)
    s_over_r = (radius - sol.boundary_radius) / radius
    print(f"{mult:>10.1f} {sol.regime:>18} {s_over_r:>8.3f} "
          f"{sol.wall_concentration / c0:>8.3f} "
          f"{growth_rate(chem, sol.wall_concentration):>12.3e}")

print()
print("the hand-off at v0 = v_stat is seamless:")
for mult in (1 - 1e-9, 1.0, 1 + 1e-9):
    sol = solve_slow_layer(chem, radius, c0, mult * v_stat)
    print(f"  v0 = {mult:.9f} v_stat -> c1 = {sol.wall_concentration:.12e} ({sol.regime})")
