"""Solve the aperture network on a small grid and watch it degrade.

Cells are pressure nodes, open apertures are conduits.  A clean uniform grid
gives a pressure that depends on depth only; closing filtering apertures at
random bleeds the total flow down until the inlet disconnects.
"""

import numpy as np

from clogsim.hydraulics import (DegenerateNetworkError, flows_from_pressures,
                                solve_pressures, total_flow)
from clogsim.model import ApertureState, FilterConfig, build_grid

config = FilterConfig(
    L_x=4e-4, L_y=4e-4, L_z=4e-4, n_x=8, n_y=8, n_z=8,
    p_grad=-1e4, mu=1e-3, l_particle=2.5e-5, N_particles=0.0,
    r_filter=1e-5, r_side=2e-5,
)
grid = build_grid(config)
p_out = config.p_grad * config.L_z

field = solve_pressures(grid, 0.0, p_out)
print(f"converged in {field.iterations} iterations, residual {field.residual:.2e} m^3/s")
print("layer pressures (Pa), identical across each layer on a clean grid:")
for k in range(config.n_z):
    layer = field.pressure[:, :, k]
    print(f"  z = {k + 1}: {layer.mean():9.4f}  (spread {np.ptp(layer):.2e})")

flows = flows_from_pressures(grid, field)
clean = total_flow(grid, flows)
print(f"clean total flow {clean:.6e} m^3/s")
print()

# now close random filtering apertures and track the decay
rng = np.random.default_rng(3)
closed = 0
print(f"{'closed':>7} {'flow fraction':>14}")
while True:
    open_pos = np.argwhere(grid.z_state == ApertureState.OPEN)
    pick = open_pos[rng.integers(len(open_pos))]
    grid.z_state[tuple(pick)] = ApertureState.PARTICLE_BLOCKED
    grid.z_open_count[tuple(pick)] = 0
    closed += 1
    try:
        field = solve_pressures(grid, 0.0, p_out, initial=field.pressure)
    except DegenerateNetworkError:
        print(f"network disconnected after closing {closed} of "
              f"{config.n_x * config.n_y * (config.n_z - 1)} apertures")
        break
    if closed % 50 == 0:
        frac = total_flow(grid, flows_from_pressures(grid, field)) / clean
        print(f"{closed:>7} {frac:>14.4f}")
