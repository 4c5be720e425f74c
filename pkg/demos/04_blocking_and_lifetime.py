"""Rod capture odds, the aperture radius that meets a target, and lifetime.

A rod of length l passes a circular aperture of radius r with probability
q = 1 - sqrt(1 - (2r/l)^2).  Designing for a given catch probability is the
inverse of that map.  With the catch odds fixed, cubic-cell bookkeeping gives
closed forms for exposure and filter lifetime.
"""

from clogsim.design import (lifetime_estimates, penetration_probability,
                            radius_for_catch, uniform_schedule)
from clogsim.engine import pass_probability
from clogsim.model import FilterConfig

l_rod = 2.5e-5

print("pass probability vs aperture radius (rod length 25 um):")
print(f"{'r/(l/2)':>8} {'q':>10} {'catch':>10}")
for frac in (0.05, 0.2, 0.4, 0.6, 0.8, 0.95, 1.0):
    r = frac * l_rod / 2.0
    q = pass_probability(r, l_rod)
    print(f"{frac:>8.2f} {q:>10.5f} {1.0 - q:>10.5f}")
print()

# invert: what radius catches 30% of arriving rods?
target_catch = 0.3
r = radius_for_catch(target_catch, l_rod)
print(f"radius for a {target_catch:.0%} catch: {r:.6e} m")
print(f"round trip catch: {1.0 - pass_probability(r, l_rod):.6f}")
print()

# a 19-membrane stack of that aperture lets through q^19
stack = penetration_probability(uniform_schedule(target_catch, 19))
print(f"19 equal membranes pass {stack:.3e} of the incoming rods")
print()

config = FilterConfig(
    L_x=1e-3, L_y=1e-3, L_z=1e-3, n_x=20, n_y=20, n_z=20,
    p_grad=-1e4, mu=1e-3, l_particle=l_rod, N_particles=1.389e7,
    r_filter=r, r_side=2e-5,
)
est = lifetime_estimates(config)
print("cubic-cell estimates for a 20x20x20 filter:")
print(f"  single aperture flow   {est.aperture_flow:.4e} m^3/s")
print(f"  clean total flow       {est.total_flow:.4e} m^3/s")
print(f"  exposure (N * T)       {est.particle_exposure:.4e} s/m^3")
print(f"  lifetime               {est.lifetime:.4e} s "
      f"({est.lifetime / 86400.0:.2f} days)")
print(f"  particles at capacity  {est.capacity:.4e}")
print(f"  half the cell count    {0.5 * config.n_x * config.n_y * config.n_z:.4e}")
