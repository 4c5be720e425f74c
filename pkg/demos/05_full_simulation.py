"""Run the shipped scenario1 config end to end and digest the trace.

Particle capture and sediment growth compete: rods block filtering apertures
near the inlet while calcium deposits shrink every aperture until the side
channels seal and the network disconnects.  Takes a few seconds.
"""

from pathlib import Path

import numpy as np

from clogsim.cli import parse_config
from clogsim.engine import run
from clogsim.model import ApertureState

config = parse_config(Path(__file__).resolve().parent.parent / "configs" / "scenario1.cfg")
trace = run(config)

counts = trace.final_counts()
print(f"stop reason   {trace.stop_reason}")
print(f"duration      {trace.duration:.4e} s ({trace.duration / 86400.0:.2f} days)")
print(f"steps         {sum(1 for s in trace.snapshots if s.dt > 0)}")
print(f"final counts  open {counts['open']}, blocked {counts['blocked']}, "
      f"sealed {counts['sealed']}, catches {counts['catches']}")
print()

print("flow decay along the run:")
print(f"{'day':>6} {'flow m^3/s':>12} {'blocked':>8} {'sealed':>7}")
marks = np.linspace(0, len(trace.snapshots) - 1, 8).astype(int)
for idx in dict.fromkeys(marks):
    s = trace.snapshots[idx]
    print(f"{s.time / 86400.0:>6.2f} {s.total_flow:>12.3e} "
          f"{sum(s.blocked):>8} {sum(s.sealed):>7}")
print()

last = trace.snapshots[-1]
peak = max(last.catches)
print("catches per membrane (inlet side first):")
for k, c in enumerate(last.catches):
    bar = "#" * round(40 * c / peak) if peak else ""
    print(f"  m{k + 1:<3} {c:>5} {bar}")
print()

# the first membrane, straight from the final grid: . open, # blocked, o sealed
chars = {ApertureState.OPEN: ".", ApertureState.PARTICLE_BLOCKED: "#",
         ApertureState.SEDIMENT_SEALED: "o"}
layer = trace.final_grid.z_state[:, :, 0]
print("membrane 1 facet states:")
for j in range(config.n_y):
    print("  " + "".join(chars[ApertureState(layer[i, j])] for i in range(config.n_x)))
