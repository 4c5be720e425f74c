"""Domain types for the layered-filter cell lattice.

A filter is an n_x x n_y x n_z block of rectangular cells.  Every interior
facet between two adjacent cells carries a circular aperture: apertures in
z-facets are the narrow filtering holes that catch rod-shaped particles,
apertures in x/y-facets are wide side holes that only redistribute liquid
between neighbouring cavities.  Liquid enters through an inlet window on the
first cell layer and leaves through an outlet window on the last one; the
rest of the outer surface is impermeable.

An aperture is open, blocked by a caught particle, or sealed by mineral
deposit.  Deposit growth shrinks the radius of any open aperture; the
current radius never exceeds the initial one and never goes negative.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Sequence

import numpy as np

# Avogadro constant, mol^-1 (exact by SI definition)
AVOGADRO = 6.02214076e23

Window = tuple[tuple[int, int], tuple[int, int]]


class ApertureState(IntEnum):
    OPEN = 0
    PARTICLE_BLOCKED = 1
    SEDIMENT_SEALED = 2


@dataclass(frozen=True)
class Chemistry:
    """Constants of the wall deposition reaction.  SI units."""

    rate_constant: float        # m^(3n-2)/s; m/s for a first-order reaction
    reaction_order: int         # dissolved entities consumed per reaction event
    diffusivity: float          # m^2/s, of the dissolved mineral in the liquid
    sediment_molar_mass: float  # kg/mol
    sediment_stoichiometry: int  # deposit molecules produced per reaction event
    sediment_density: float     # kg/m^3
    solute_molar_mass: float    # kg/mol

    def __post_init__(self):
        for name in ("rate_constant", "diffusivity", "sediment_molar_mass",
                     "sediment_density", "solute_molar_mass"):
            value = getattr(self, name)
            if not value > 0:
                raise ValueError(f"chemistry.{name} must be positive, got {value!r}")
        if self.reaction_order < 1:
            raise ValueError(f"chemistry.reaction_order must be >= 1, got {self.reaction_order}")
        if self.sediment_stoichiometry < 1:
            raise ValueError(
                f"chemistry.sediment_stoichiometry must be >= 1, got {self.sediment_stoichiometry}")


@dataclass
class FilterConfig:
    """Complete description of one filter and its operating conditions.

    Lengths in m, pressures in Pa, concentrations in m^-3, times in s.
    ``r_filter`` is a single radius for every membrane or one radius per
    membrane (n_z - 1 values).  Windows are 1-based inclusive index ranges
    ((x_lo, x_hi), (y_lo, y_hi)); None means the whole face is open.
    """

    L_x: float                  # filter extent along x [m]
    L_y: float                  # filter extent along y [m]
    L_z: float                  # filter extent along z (flow axis) [m]
    n_x: int                    # cells along x
    n_y: int                    # cells along y
    n_z: int                    # cell layers along z (n_z - 1 membranes)
    p_grad: float               # applied pressure gradient along z [Pa/m], < 0 drives +z flow
    mu: float                   # dynamic viscosity of the liquid [Pa s]
    l_particle: float           # rod particle length [m]
    N_particles: float          # particle number concentration at the inlet [m^-3]
    r_filter: float | Sequence[float]   # filtering aperture radius [m]
    r_side: float               # side aperture radius [m]
    inlet_window: Window | None = None
    outlet_window: Window | None = None
    chemistry: Chemistry | None = None
    c0_entrance: float = 0.0    # dissolved mineral concentration at the inlet [m^-3]
    dt: float | str = "adaptive"   # fixed step [s] or "adaptive"
    seed: int = 0
    blocking_law: str = "corrected"   # "simple" | "corrected"
    solver_tol: float | None = None   # pressure-solver residual [m^3/s]; None = auto
    solver_max_iter: int = 100_000
    solver_sweep: str = "cg"          # "cg" | "redblack" | "lexicographic"
    time_limit: float | None = None   # stop the run at this model time [s]
    flow_stop_fraction: float = 1e-6  # stop when total flow drops below this times clean flow
    seal_fraction: float = 1e-2       # aperture seals when radius <= fraction of initial
    depletion_threshold: float = 0.05  # axial depletion warning level, delta_c0/c0
    aperture_multiplicity: Sequence[int] | None = None  # apertures per facet, per membrane

    @property
    def h_x(self) -> float:
        return self.L_x / self.n_x

    @property
    def h_y(self) -> float:
        return self.L_y / self.n_y

    @property
    def h_z(self) -> float:
        return self.L_z / self.n_z

    def filter_radii(self) -> np.ndarray:
        """Per-membrane filtering radius, shape (n_z - 1,)."""
        radii = np.atleast_1d(np.asarray(self.r_filter, dtype=float))
        if radii.size == 1:
            radii = np.full(self.n_z - 1, radii[0])
        return radii

    def multiplicities(self) -> np.ndarray:
        """Per-membrane aperture count per facet, shape (n_z - 1,)."""
        if self.aperture_multiplicity is None:
            return np.ones(self.n_z - 1, dtype=np.int64)
        mult = np.atleast_1d(np.asarray(self.aperture_multiplicity, dtype=np.int64))
        if mult.size == 1:
            mult = np.full(self.n_z - 1, mult[0], dtype=np.int64)
        return mult

    def resolved_window(self, which: str) -> Window:
        win = self.inlet_window if which == "inlet" else self.outlet_window
        if win is None:
            return ((1, self.n_x), (1, self.n_y))
        (x_lo, x_hi), (y_lo, y_hi) = win
        return ((int(x_lo), int(x_hi)), (int(y_lo), int(y_hi)))

    def validate(self) -> None:
        for name in ("L_x", "L_y", "L_z"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive (m), got {getattr(self, name)!r}")
        for name in ("n_x", "n_y", "n_z"):
            value = getattr(self, name)
            if not (isinstance(value, (int, np.integer)) and value >= 2):
                raise ValueError(f"{name} must be an integer >= 2, got {value!r}")
        if not self.mu > 0:
            raise ValueError(f"mu must be positive (Pa s), got {self.mu!r}")
        if self.p_grad == 0:
            raise ValueError("p_grad must be nonzero (Pa/m); nothing would flow")
        if self.l_particle < 0:
            raise ValueError(f"l_particle must be >= 0 (m), got {self.l_particle!r}")
        if self.N_particles < 0:
            raise ValueError(f"N_particles must be >= 0 (m^-3), got {self.N_particles!r}")

        half_cell = min(self.h_x, self.h_y, self.h_z) / 2
        # tiny headroom so a radius set to exactly half a cell edge survives
        # the binary rounding of L/n
        bound = half_cell * (1 + 1e-12)
        radii = self.filter_radii()
        if radii.shape != (self.n_z - 1,):
            raise ValueError(
                f"r_filter must be one radius or n_z - 1 = {self.n_z - 1} values, "
                f"got {radii.size}")
        if np.any(radii <= 0) or np.any(radii > bound):
            raise ValueError(
                f"r_filter values must lie in (0, {half_cell!r}] m "
                f"(half the smallest cell edge)")
        if not (0 < self.r_side <= bound):
            raise ValueError(
                f"r_side must lie in (0, {half_cell!r}] m, got {self.r_side!r}")

        for which, n_cells in (("inlet", None), ("outlet", None)):
            (x_lo, x_hi), (y_lo, y_hi) = self.resolved_window(which)
            if not (1 <= x_lo <= x_hi <= self.n_x):
                raise ValueError(
                    f"{which}_window x range {x_lo}..{x_hi} outside 1..{self.n_x}")
            if not (1 <= y_lo <= y_hi <= self.n_y):
                raise ValueError(
                    f"{which}_window y range {y_lo}..{y_hi} outside 1..{self.n_y}")

        if self.chemistry is not None and not self.c0_entrance > 0:
            raise ValueError(
                f"c0_entrance must be positive (m^-3) when chemistry is set, "
                f"got {self.c0_entrance!r}")
        if isinstance(self.dt, str):
            if self.dt != "adaptive":
                raise ValueError(f"dt must be a positive time in s or 'adaptive', got {self.dt!r}")
        elif not self.dt > 0:
            raise ValueError(f"dt must be a positive time in s or 'adaptive', got {self.dt!r}")
        if self.blocking_law not in ("simple", "corrected"):
            raise ValueError(
                f"blocking_law must be 'simple' or 'corrected', got {self.blocking_law!r}")
        if self.solver_tol is not None and not self.solver_tol > 0:
            raise ValueError(f"solver_tol must be positive (m^3/s), got {self.solver_tol!r}")
        if self.solver_max_iter < 1:
            raise ValueError(f"solver_max_iter must be >= 1, got {self.solver_max_iter!r}")
        if self.solver_sweep not in ("cg", "redblack", "lexicographic"):
            raise ValueError(
                f"solver_sweep must be 'cg', 'redblack' or 'lexicographic', "
                f"got {self.solver_sweep!r}")
        if self.time_limit is not None and not self.time_limit > 0:
            raise ValueError(f"time_limit must be positive (s), got {self.time_limit!r}")
        if not 0 < self.flow_stop_fraction < 1:
            raise ValueError(
                f"flow_stop_fraction must lie in (0, 1), got {self.flow_stop_fraction!r}")
        if not 0 < self.seal_fraction < 1:
            raise ValueError(f"seal_fraction must lie in (0, 1), got {self.seal_fraction!r}")
        mult = self.multiplicities()
        if mult.shape != (self.n_z - 1,) or np.any(mult < 1):
            raise ValueError(
                f"aperture_multiplicity must be one integer >= 1 or n_z - 1 of them")


@dataclass(frozen=True)
class Aperture:
    """Read-only snapshot of one facet aperture."""

    axis: str                 # "x", "y" or "z"
    index: tuple[int, int, int]
    filtering: bool           # True for z-facet apertures
    radius_initial: float     # m
    radius: float             # m, current (initial minus deposit thickness)
    state: ApertureState
    multiplicity: int
    open_count: int           # sub-apertures not yet hit by a particle

    @property
    def sediment_thickness(self) -> float:
        return self.radius_initial - self.radius

    @property
    def is_open(self) -> bool:
        return self.state == ApertureState.OPEN


@dataclass(eq=False)
class CellGrid:
    """Mutable state of the filter lattice.

    Aperture data are dense arrays indexed by the facet position: the z-facet
    between cells (i, j, k) and (i, j, k+1) is entry [i, j, k] of the z
    arrays, and likewise along x and y.  State codes follow ApertureState.
    """

    n_x: int
    n_y: int
    n_z: int
    h_x: float
    h_y: float
    h_z: float
    mu: float                     # Pa s; kept with the grid so flows are computable
    inlet_mask: np.ndarray        # (n_x, n_y) bool, first layer
    outlet_mask: np.ndarray       # (n_x, n_y) bool, last layer
    membrane_multiplicity: np.ndarray   # (n_z - 1,) int
    z_radius0: np.ndarray         # (n_x, n_y, n_z - 1) float
    z_radius: np.ndarray
    z_state: np.ndarray           # int8
    z_open_count: np.ndarray      # int64, sub-apertures still open per facet
    x_radius0: np.ndarray         # (n_x - 1, n_y, n_z) float
    x_radius: np.ndarray
    x_state: np.ndarray
    y_radius0: np.ndarray         # (n_x, n_y - 1, n_z) float
    y_radius: np.ndarray
    y_state: np.ndarray

    # --- counts -----------------------------------------------------------

    @property
    def n_membranes(self) -> int:
        return self.n_z - 1

    def filtering_aperture_count(self) -> int:
        return self.n_x * self.n_y * (self.n_z - 1)

    def side_aperture_count(self) -> int:
        return (self.n_x - 1) * self.n_y * self.n_z + self.n_x * (self.n_y - 1) * self.n_z

    def membrane_state_counts(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(open, particle_blocked, sediment_sealed) facet counts per membrane."""
        open_ = (self.z_state == ApertureState.OPEN).sum(axis=(0, 1))
        blocked = (self.z_state == ApertureState.PARTICLE_BLOCKED).sum(axis=(0, 1))
        sealed = (self.z_state == ApertureState.SEDIMENT_SEALED).sum(axis=(0, 1))
        return open_, blocked, sealed

    # --- element access ---------------------------------------------------

    def aperture(self, axis: str, i: int, j: int, k: int) -> Aperture:
        if axis == "z":
            mult = int(self.membrane_multiplicity[k])
            return Aperture("z", (i, j, k), True,
                            float(self.z_radius0[i, j, k]), float(self.z_radius[i, j, k]),
                            ApertureState(int(self.z_state[i, j, k])), mult,
                            int(self.z_open_count[i, j, k]))
        if axis == "x":
            return Aperture("x", (i, j, k), False,
                            float(self.x_radius0[i, j, k]), float(self.x_radius[i, j, k]),
                            ApertureState(int(self.x_state[i, j, k])), 1,
                            int(self.x_state[i, j, k] == ApertureState.OPEN))
        if axis == "y":
            return Aperture("y", (i, j, k), False,
                            float(self.y_radius0[i, j, k]), float(self.y_radius[i, j, k]),
                            ApertureState(int(self.y_state[i, j, k])), 1,
                            int(self.y_state[i, j, k] == ApertureState.OPEN))
        raise ValueError(f"axis must be 'x', 'y' or 'z', got {axis!r}")

    # --- serialization ----------------------------------------------------

    def to_json(self) -> str:
        payload = {
            "shape": [self.n_x, self.n_y, self.n_z],
            "cell_size": [self.h_x, self.h_y, self.h_z],
            "viscosity": self.mu,
            "inlet_mask": self.inlet_mask.astype(int).tolist(),
            "outlet_mask": self.outlet_mask.astype(int).tolist(),
            "membrane_multiplicity": self.membrane_multiplicity.tolist(),
            "z": {
                "radius0": self.z_radius0.tolist(),
                "radius": self.z_radius.tolist(),
                "state": self.z_state.tolist(),
                "open_count": self.z_open_count.tolist(),
            },
            "x": {
                "radius0": self.x_radius0.tolist(),
                "radius": self.x_radius.tolist(),
                "state": self.x_state.tolist(),
            },
            "y": {
                "radius0": self.y_radius0.tolist(),
                "radius": self.y_radius.tolist(),
                "state": self.y_state.tolist(),
            },
        }
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text: str) -> "CellGrid":
        data = json.loads(text)
        n_x, n_y, n_z = data["shape"]
        return cls(
            n_x=n_x, n_y=n_y, n_z=n_z,
            h_x=data["cell_size"][0], h_y=data["cell_size"][1], h_z=data["cell_size"][2],
            mu=data["viscosity"],
            inlet_mask=np.asarray(data["inlet_mask"], dtype=bool),
            outlet_mask=np.asarray(data["outlet_mask"], dtype=bool),
            membrane_multiplicity=np.asarray(data["membrane_multiplicity"], dtype=np.int64),
            z_radius0=np.asarray(data["z"]["radius0"], dtype=float),
            z_radius=np.asarray(data["z"]["radius"], dtype=float),
            z_state=np.asarray(data["z"]["state"], dtype=np.int8),
            z_open_count=np.asarray(data["z"]["open_count"], dtype=np.int64),
            x_radius0=np.asarray(data["x"]["radius0"], dtype=float),
            x_radius=np.asarray(data["x"]["radius"], dtype=float),
            x_state=np.asarray(data["x"]["state"], dtype=np.int8),
            y_radius0=np.asarray(data["y"]["radius0"], dtype=float),
            y_radius=np.asarray(data["y"]["radius"], dtype=float),
            y_state=np.asarray(data["y"]["state"], dtype=np.int8),
        )

    def copy(self) -> "CellGrid":
        return CellGrid(
            n_x=self.n_x, n_y=self.n_y, n_z=self.n_z,
            h_x=self.h_x, h_y=self.h_y, h_z=self.h_z, mu=self.mu,
            inlet_mask=self.inlet_mask.copy(), outlet_mask=self.outlet_mask.copy(),
            membrane_multiplicity=self.membrane_multiplicity.copy(),
            z_radius0=self.z_radius0.copy(), z_radius=self.z_radius.copy(),
            z_state=self.z_state.copy(), z_open_count=self.z_open_count.copy(),
            x_radius0=self.x_radius0.copy(), x_radius=self.x_radius.copy(),
            x_state=self.x_state.copy(),
            y_radius0=self.y_radius0.copy(), y_radius=self.y_radius.copy(),
            y_state=self.y_state.copy(),
        )

    def equals(self, other: "CellGrid") -> bool:
        if (self.n_x, self.n_y, self.n_z) != (other.n_x, other.n_y, other.n_z):
            return False
        if (self.h_x, self.h_y, self.h_z, self.mu) != (other.h_x, other.h_y, other.h_z, other.mu):
            return False
        pairs = [
            (self.inlet_mask, other.inlet_mask), (self.outlet_mask, other.outlet_mask),
            (self.membrane_multiplicity, other.membrane_multiplicity),
            (self.z_radius0, other.z_radius0), (self.z_radius, other.z_radius),
            (self.z_state, other.z_state), (self.z_open_count, other.z_open_count),
            (self.x_radius0, other.x_radius0), (self.x_radius, other.x_radius),
            (self.x_state, other.x_state),
            (self.y_radius0, other.y_radius0), (self.y_radius, other.y_radius),
            (self.y_state, other.y_state),
        ]
        return all(a.shape == b.shape and np.array_equal(a, b) for a, b in pairs)


def _window_mask(n_x: int, n_y: int, window: Window) -> np.ndarray:
    (x_lo, x_hi), (y_lo, y_hi) = window
    mask = np.zeros((n_x, n_y), dtype=bool)
    mask[x_lo - 1:x_hi, y_lo - 1:y_hi] = True
    return mask


def build_grid(config: FilterConfig) -> CellGrid:
    """Construct the clean (fully open) lattice described by ``config``."""
    config.validate()
    n_x, n_y, n_z = config.n_x, config.n_y, config.n_z

    radii = config.filter_radii()
    mult = config.multiplicities()
    z_radius0 = np.broadcast_to(radii, (n_x, n_y, n_z - 1)).copy()
    x_radius0 = np.full((n_x - 1, n_y, n_z), config.r_side, dtype=float)
    y_radius0 = np.full((n_x, n_y - 1, n_z), config.r_side, dtype=float)

    return CellGrid(
        n_x=n_x, n_y=n_y, n_z=n_z,
        h_x=config.h_x, h_y=config.h_y, h_z=config.h_z,
        mu=config.mu,
        inlet_mask=_window_mask(n_x, n_y, config.resolved_window("inlet")),
        outlet_mask=_window_mask(n_x, n_y, config.resolved_window("outlet")),
        membrane_multiplicity=mult.copy(),
        z_radius0=z_radius0,
        z_radius=z_radius0.copy(),
        z_state=np.zeros((n_x, n_y, n_z - 1), dtype=np.int8),
        z_open_count=np.broadcast_to(mult, (n_x, n_y, n_z - 1)).astype(np.int64).copy(),
        x_radius0=x_radius0,
        x_radius=x_radius0.copy(),
        x_state=np.zeros((n_x - 1, n_y, n_z), dtype=np.int8),
        y_radius0=y_radius0,
        y_radius=y_radius0.copy(),
        y_state=np.zeros((n_x, n_y - 1, n_z), dtype=np.int8),
    )
