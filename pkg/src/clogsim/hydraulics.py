"""Pressure network of the cell lattice and its relaxation solver.

Each open aperture behaves as a conduit whose volumetric flow is

    F = -0.8 p' S^2 s / (P^2 mu),

with p' the pressure gradient between the two cell centres, S and P the
area and perimeter of the cell cross-section perpendicular to the aperture
axis, and s the aperture area.  Flow through a blocked or sealed aperture
is exactly zero.  Inlet and outlet window cells hold prescribed pressures;
every other cell balances its aperture flows to zero, which yields a linear
system.  Three interchangeable solvers honour the same residual bound:
preconditioned conjugate gradient (production), red-black successive
over-relaxation (omega = 1 is a plain Gauss-Seidel sweep), and a
lexicographic Gauss-Seidel reference loop.

Cells whose apertures are all closed have no equation; their pressure is
left untouched and carries no flow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ApertureState, CellGrid


class DegenerateNetworkError(RuntimeError):
    """No open aperture path connects the inlet window to the outlet window."""


class ConvergenceError(RuntimeError):
    """Relaxation failed to reach the residual tolerance within max_iter sweeps."""


@dataclass
class PressureField:
    pressure: np.ndarray   # (n_x, n_y, n_z), Pa
    residual: float        # max |net cell flow| over inner cells, m^3/s
    iterations: int        # full sweeps performed


@dataclass
class FlowField:
    """Signed aperture flows, positive toward +axis."""
    flow_x: np.ndarray     # (n_x - 1, n_y, n_z), m^3/s
    flow_y: np.ndarray     # (n_x, n_y - 1, n_z), m^3/s
    flow_z: np.ndarray     # (n_x, n_y, n_z - 1), m^3/s


def aperture_flow(p_a: float, p_b: float, center_dist: float, section_area: float,
                  section_perimeter: float, aperture_area: float, mu: float) -> float:
    """Flow from cell a to cell b through one aperture, m^3/s (signed)."""
    if not center_dist > 0:
        raise ValueError(f"center_dist must be positive (m), got {center_dist!r}")
    if not mu > 0:
        raise ValueError(f"mu must be positive (Pa s), got {mu!r}")
    gradient = (p_b - p_a) / center_dist
    return -0.8 * gradient * section_area ** 2 * aperture_area / (section_perimeter ** 2 * mu)


def conductance_arrays(grid: CellGrid) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-facet conductance g [m^3/(s Pa)] so that F = g (p_a - p_b).

    Closed facets get zero.  Filtering facets multiply the single-aperture
    area by the number of sub-apertures still open.
    """
    hx, hy, hz, mu = grid.h_x, grid.h_y, grid.h_z, grid.mu

    def coeff(section_a: float, section_b: float, dist: float) -> float:
        area = section_a * section_b
        perim = 2.0 * (section_a + section_b)
        return 0.8 * area ** 2 / (perim ** 2 * mu * dist)

    gx = coeff(hy, hz, hx) * math.pi * grid.x_radius ** 2
    gx = np.where(grid.x_state == ApertureState.OPEN, gx, 0.0)
    gy = coeff(hx, hz, hy) * math.pi * grid.y_radius ** 2
    gy = np.where(grid.y_state == ApertureState.OPEN, gy, 0.0)
    gz = coeff(hx, hy, hz) * math.pi * grid.z_radius ** 2 * grid.z_open_count
    gz = np.where(grid.z_state == ApertureState.OPEN, gz, 0.0)
    return gx, gy, gz


def reference_cell_flow(grid: CellGrid, p_in: float, p_out: float) -> float:
    """Clean-filter flow through one cell column's aperture at the mean radius.

    Used to scale the default solver tolerance and the flow-stop threshold.
    """
    mean_r2 = float(np.mean(grid.z_radius0 ** 2))
    length = grid.h_z * grid.n_z
    gradient = abs(p_out - p_in) / length
    area = grid.h_x * grid.h_y
    perim = 2.0 * (grid.h_x + grid.h_y)
    return 0.8 * gradient * area ** 2 * math.pi * mean_r2 / (perim ** 2 * grid.mu)


def _open_masks(grid: CellGrid) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    open_x = grid.x_state == ApertureState.OPEN
    open_y = grid.y_state == ApertureState.OPEN
    open_z = (grid.z_state == ApertureState.OPEN) & (grid.z_open_count > 0)
    return open_x, open_y, open_z


def check_connected(grid: CellGrid) -> None:
    """Raise DegenerateNetworkError unless an open path joins inlet to outlet."""
    open_x, open_y, open_z = _open_masks(grid)
    reached = np.zeros((grid.n_x, grid.n_y, grid.n_z), dtype=bool)
    reached[:, :, 0] = grid.inlet_mask
    while True:
        nxt = reached.copy()
        nxt[1:, :, :] |= reached[:-1, :, :] & open_x
        nxt[:-1, :, :] |= reached[1:, :, :] & open_x
        nxt[:, 1:, :] |= reached[:, :-1, :] & open_y
        nxt[:, :-1, :] |= reached[:, 1:, :] & open_y
        nxt[:, :, 1:] |= reached[:, :, :-1] & open_z
        nxt[:, :, :-1] |= reached[:, :, 1:] & open_z
        if np.array_equal(nxt, reached):
            break
        reached = nxt
    if not np.any(reached[:, :, -1] & grid.outlet_mask):
        raise DegenerateNetworkError(
            "no open aperture path connects the inlet window to the outlet window")


def _neighbor_sums(p, gx, gy, gz, out, scratch=None):
    """Sum of conductance-weighted neighbor pressures into ``out``.

    ``scratch`` (three facet-shaped buffers) makes the kernel allocation
    free; the solvers pass it, one-off callers may omit it.
    """
    out.fill(0.0)
    if scratch is None:
        scratch = (np.empty_like(gx), np.empty_like(gy), np.empty_like(gz))
    tx, ty, tz = scratch
    np.multiply(gx, p[1:, :, :], out=tx)
    out[:-1, :, :] += tx
    np.multiply(gx, p[:-1, :, :], out=tx)
    out[1:, :, :] += tx
    np.multiply(gy, p[:, 1:, :], out=ty)
    out[:, :-1, :] += ty
    np.multiply(gy, p[:, :-1, :], out=ty)
    out[:, 1:, :] += ty
    np.multiply(gz, p[:, :, 1:], out=tz)
    out[:, :, :-1] += tz
    np.multiply(gz, p[:, :, :-1], out=tz)
    out[:, :, 1:] += tz
    return out


def default_relaxation(grid: CellGrid) -> float:
    """Near-optimal over-relaxation factor for this lattice size.

    Most boundaries are no-flux (only the window cells hold pressures), so
    the slowest mode spans twice the lattice; hence 2n in the usual formula.
    """
    n = max(grid.n_x, grid.n_y, grid.n_z)
    return 2.0 / (1.0 + math.sin(math.pi / (2 * n)))


def solve_pressures(grid: CellGrid, p_in: float, p_out: float,
                    tol: float | None = None, max_iter: int = 100_000, *,
                    initial: np.ndarray | None = None,
                    relaxation: float | None = None,
                    sweep: str = "redblack",
                    check_connectivity: bool = True) -> PressureField:
    """Relax the cell pressures until every inner cell conserves flow.

    ``tol`` is an absolute bound on the per-cell net flow [m^3/s]; default is
    1e-6 times the clean-filter reference cell flow.  ``initial`` warm-starts
    the iteration (a linear ramp otherwise).  ``sweep`` selects "redblack"
    (relaxation, vectorised, default), "lexicographic" (reference ordering,
    small grids), or "cg" (conjugate gradient on the same system; fastest,
    used by the simulation engine).  All three converge to the same field
    and honour the same residual bound.
    """
    if check_connectivity:
        check_connected(grid)
    if tol is None:
        tol = 1e-6 * reference_cell_flow(grid, p_in, p_out)
    if not tol > 0:
        raise ValueError(f"tol must be positive (m^3/s), got {tol!r}")

    n_x, n_y, n_z = grid.n_x, grid.n_y, grid.n_z
    gx, gy, gz = conductance_arrays(grid)

    if initial is not None:
        p = np.array(initial, dtype=float, copy=True)
        if p.shape != (n_x, n_y, n_z):
            raise ValueError(f"initial pressure shape {p.shape} != {(n_x, n_y, n_z)}")
    else:
        ramp = np.linspace(p_in, p_out, n_z)
        p = np.broadcast_to(ramp, (n_x, n_y, n_z)).copy()

    fixed = np.zeros((n_x, n_y, n_z), dtype=bool)
    fixed[:, :, 0] |= grid.inlet_mask
    fixed[:, :, -1] |= grid.outlet_mask
    p[:, :, 0][grid.inlet_mask] = p_in
    p[:, :, -1][grid.outlet_mask] = p_out

    den = np.zeros((n_x, n_y, n_z))
    den[:-1, :, :] += gx
    den[1:, :, :] += gx
    den[:, :-1, :] += gy
    den[:, 1:, :] += gy
    den[:, :, :-1] += gz
    den[:, :, 1:] += gz
    active = ~fixed & (den > 0)
    safe_den = np.where(den > 0, den, 1.0)

    work = np.empty_like(p)

    if sweep == "lexicographic":
        return _solve_lexicographic(grid, p, gx, gy, gz, den, active, fixed, tol, max_iter)
    if sweep == "cg":
        return _solve_cg(p, gx, gy, gz, den, active, fixed, tol, max_iter)
    if sweep != "redblack":
        raise ValueError(
            f"sweep must be 'redblack', 'lexicographic' or 'cg', got {sweep!r}")

    omega = default_relaxation(grid) if relaxation is None else float(relaxation)
    if not 0 < omega < 2:
        raise ValueError(f"relaxation must lie in (0, 2), got {omega!r}")

    ix, iy, iz = np.indices((n_x, n_y, n_z), sparse=True)
    parity = (ix + iy + iz) % 2 == 0
    red = active & parity
    black = active & ~parity

    scratch = (np.empty_like(gx), np.empty_like(gy), np.empty_like(gz))
    check_every = 4
    for it in range(1, max_iter + 1):
        for color in (red, black):
            s = _neighbor_sums(p, gx, gy, gz, work, scratch)
            p = np.where(color, (1.0 - omega) * p + omega * s / safe_den, p)
        if it % check_every == 0 or it == max_iter:
            s = _neighbor_sums(p, gx, gy, gz, work, scratch)
            residual = float(np.max(np.abs(np.where(active, s - den * p, 0.0)))) \
                if np.any(active) else 0.0
            if residual <= tol:
                return PressureField(p, residual, it)
    raise ConvergenceError(
        f"pressure relaxation stalled: residual {residual:.3e} > tol {tol:.3e} "
        f"after {max_iter} sweeps")


def _layer_coarse_matrix(gx, gy, gz, den, active):
    """Project the pressure system onto per-layer constants.

    Returns (E, keep): the coarse operator over layers that hold active
    cells, used as the second level of the CG preconditioner.  Couplings to
    fixed or isolated cells stay on the diagonal and keep E positive
    definite.
    """
    act = active.astype(float)
    den_act = (den * act).sum(axis=(0, 1))
    gx_intra = (gx * act[:-1, :, :] * act[1:, :, :]).sum(axis=(0, 1))
    gy_intra = (gy * act[:, :-1, :] * act[:, 1:, :]).sum(axis=(0, 1))
    gz_cross = (gz * act[:, :, :-1] * act[:, :, 1:]).sum(axis=(0, 1))
    diag = den_act - 2.0 * (gx_intra + gy_intra)
    keep = np.flatnonzero(den_act > 0)
    if keep.size == 0:
        return None, keep
    n_z = den_act.size
    full = np.zeros((n_z, n_z))
    full[np.arange(n_z), np.arange(n_z)] = diag
    k = np.arange(n_z - 1)
    full[k, k + 1] = -gz_cross
    full[k + 1, k] = -gz_cross
    return full[np.ix_(keep, keep)], keep


def _solve_cg(p, gx, gy, gz, den, active, fixed, tol, max_iter):
    """Preconditioned conjugate gradient on the pressure system.

    The preconditioner combines the inverse diagonal with a coarse solve
    over per-layer constants, which removes the slowly converging smooth
    modes of the mostly no-flux network.  The residual vector CG carries is
    exactly the per-cell net flow, so the stopping rule is the same
    max-norm bound the relaxation sweeps use.  Floating regions (no path to
    a window) have balanced all-zero equations; a warm start from any
    converged field leaves them untouched.
    """
    work = np.empty_like(p)
    scratch = (np.empty_like(gx), np.empty_like(gy), np.empty_like(gz))
    act_f = active.astype(float)
    n_layers = den.shape[2]
    safe_den = np.where(den > 0, den, 1.0)
    x = np.where(active, p, 0.0)
    p_fixed = np.where(fixed, p, 0.0)
    b = np.where(active, _neighbor_sums(p_fixed, gx, gy, gz, work, scratch), 0.0)

    def apply(v, out):
        _neighbor_sums(v, gx, gy, gz, work, scratch)
        np.multiply(den, v, out=out)
        out -= work
        out *= act_f
        return out

    coarse, keep = _layer_coarse_matrix(gx, gy, gz, den, active)
    coarse_inv = None
    if coarse is not None:
        try:
            np.linalg.cholesky(coarse)   # positive definiteness test
            coarse_inv = np.linalg.inv(coarse)
        except np.linalg.LinAlgError:
            coarse_inv = None            # odd topology; diagonal level only

    def precondition(r, out):
        # r is zero off the active cells and safe_den is 1 there, so the
        # diagonal term needs no mask; the coarse correction does
        np.divide(r, safe_den, out=out)
        if coarse_inv is not None:
            r_layer = r.sum(axis=(0, 1))[keep]
            c = np.zeros(n_layers)
            c[keep] = coarse_inv @ r_layer
            np.multiply(act_f, c[np.newaxis, np.newaxis, :], out=work)
            out += work
        return out

    def max_abs(v):
        return float(max(v.max(), -v.min()))

    q = np.empty_like(p)
    z = np.empty_like(p)
    tmp = np.empty_like(p)
    r = b - apply(x, tmp)
    residual = max_abs(r)
    if residual <= tol or not np.any(active):
        return PressureField(np.where(active, x, p), residual, 0)
    precondition(r, z)
    rho = float(np.dot(r.ravel(), z.ravel()))
    d = z.copy()
    for it in range(1, max_iter + 1):
        apply(d, q)
        dq = float(np.dot(d.ravel(), q.ravel()))
        if not dq > 0:
            break
        alpha = rho / dq
        np.multiply(d, alpha, out=tmp)
        x += tmp
        np.multiply(q, alpha, out=tmp)
        r -= tmp
        residual = max_abs(r)
        if residual <= tol:
            return PressureField(np.where(active, x, p), residual, it)
        precondition(r, z)
        rho_new = float(np.dot(r.ravel(), z.ravel()))
        d *= rho_new / rho
        d += z
        rho = rho_new
    raise ConvergenceError(
        f"pressure conjugate gradient stalled: residual {residual:.3e} > tol {tol:.3e} "
        f"after {max_iter} iterations")


def _solve_lexicographic(grid, p, gx, gy, gz, den, active, fixed, tol, max_iter):
    """Plain Gauss-Seidel in index order.  Reference path for small grids."""
    n_x, n_y, n_z = grid.n_x, grid.n_y, grid.n_z
    work = np.empty_like(p)
    for it in range(1, max_iter + 1):
        for i in range(n_x):
            for j in range(n_y):
                for k in range(n_z):
                    if not active[i, j, k]:
                        continue
                    acc = 0.0
                    if i > 0:
                        acc += gx[i - 1, j, k] * p[i - 1, j, k]
                    if i < n_x - 1:
                        acc += gx[i, j, k] * p[i + 1, j, k]
                    if j > 0:
                        acc += gy[i, j - 1, k] * p[i, j - 1, k]
                    if j < n_y - 1:
                        acc += gy[i, j, k] * p[i, j + 1, k]
                    if k > 0:
                        acc += gz[i, j, k - 1] * p[i, j, k - 1]
                    if k < n_z - 1:
                        acc += gz[i, j, k] * p[i, j, k + 1]
                    p[i, j, k] = acc / den[i, j, k]
        s = _neighbor_sums(p, gx, gy, gz, work)
        residual = float(np.max(np.abs(np.where(active, s - den * p, 0.0)))) \
            if np.any(active) else 0.0
        if residual <= tol:
            return PressureField(p, residual, it)
    raise ConvergenceError(
        f"pressure relaxation stalled: residual {residual:.3e} > tol {tol:.3e} "
        f"after {max_iter} sweeps")


def flows_from_pressures(grid: CellGrid, field: PressureField) -> FlowField:
    """Signed per-aperture flows from a converged pressure field."""
    gx, gy, gz = conductance_arrays(grid)
    p = field.pressure
    return FlowField(
        flow_x=gx * (p[:-1, :, :] - p[1:, :, :]),
        flow_y=gy * (p[:, :-1, :] - p[:, 1:, :]),
        flow_z=gz * (p[:, :, :-1] - p[:, :, 1:]),
    )


def cell_net_outflow(flows: FlowField, n_x: int, n_y: int, n_z: int) -> np.ndarray:
    """Net signed outflow of every cell, m^3/s (zero for converged inner cells)."""
    net = np.zeros((n_x, n_y, n_z))
    net[:-1, :, :] += flows.flow_x
    net[1:, :, :] -= flows.flow_x
    net[:, :-1, :] += flows.flow_y
    net[:, 1:, :] -= flows.flow_y
    net[:, :, :-1] += flows.flow_z
    net[:, :, 1:] -= flows.flow_z
    return net


def total_flow(grid: CellGrid, flows: FlowField) -> float:
    """Total flow entering the filter through the inlet window, m^3/s."""
    net = cell_net_outflow(flows, grid.n_x, grid.n_y, grid.n_z)
    return float(np.sum(net[:, :, 0][grid.inlet_mask]))


def outlet_flow(grid: CellGrid, flows: FlowField) -> float:
    """Total flow leaving through the outlet window, m^3/s."""
    net = cell_net_outflow(flows, grid.n_x, grid.n_y, grid.n_z)
    return float(-np.sum(net[:, :, -1][grid.outlet_mask]))


def pressure_csv(grid: CellGrid, field: PressureField) -> str:
    """Cell pressures as CSV text with 1-based indices."""
    lines = ["x,y,z,pressure_pa"]
    p = field.pressure
    for i in range(grid.n_x):
        for j in range(grid.n_y):
            for k in range(grid.n_z):
                lines.append(f"{i + 1},{j + 1},{k + 1},{float(p[i, j, k])!r}")
    return "\n".join(lines) + "\n"
