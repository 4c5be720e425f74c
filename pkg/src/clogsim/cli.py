"""Command line front end.

Subcommands: ``simulate`` runs one or more seeds of a configured filter
and writes run artifacts, ``design`` prints aperture-sizing schedules,
``calibrate`` turns a measured deposit growth rate into a rate constant,
``estimate`` prints closed-form lifetime numbers for a configuration.

Config files are plain ``key = value`` lines, ``#`` comments allowed.
Floats are echoed back via repr so a round trip through
``format_config`` and the parser is bit exact.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .design import (LayerSchedule, equal_contamination_schedule, lifetime_estimates,
                     quantile_penetration_forms, quantile_schedule, uniform_schedule)
from .engine import SimulationTrace, run
from .model import ApertureState, Chemistry, FilterConfig
from .sediment import CalibrationInfeasibleError, calibrate_rate_constant

_FLOAT_KEYS = {
    "L_x": "m", "L_y": "m", "L_z": "m",
    "p_grad": "Pa/m", "mu": "Pa s",
    "l_particle": "m", "N_particles": "m^-3",
    "r_side": "m", "c0_entrance": "m^-3",
    "flow_stop_fraction": "1", "seal_fraction": "1",
    "depletion_threshold": "1", "solver_tol": "m^3/s",
}
_INT_KEYS = {"n_x": "", "n_y": "", "n_z": "", "seed": "", "solver_max_iter": ""}
_CHEM_KEYS = {
    "chemistry.K": ("rate_constant", "concentration units"),
    "chemistry.n": ("reaction_order", ""),
    "chemistry.D": ("diffusivity", "m^2/s"),
    "chemistry.mu2": ("sediment_molar_mass", "kg/mol"),
    "chemistry.n2": ("sediment_stoichiometry", ""),
    "chemistry.rho2": ("sediment_density", "kg/m^3"),
    "chemistry.mu0": ("solute_molar_mass", "kg/mol"),
}
_STATE_CHARS = {
    int(ApertureState.OPEN): ".",
    int(ApertureState.PARTICLE_BLOCKED): "#",
    int(ApertureState.SEDIMENT_SEALED): "o",
}
_STATE_NAMES = {
    int(ApertureState.OPEN): "open",
    int(ApertureState.PARTICLE_BLOCKED): "particle-blocked",
    int(ApertureState.SEDIMENT_SEALED): "sediment-sealed",
}


def _num(key: str, value: str, unit: str) -> float:
    try:
        return float(value)
    except ValueError:
        suffix = f" ({unit})" if unit else ""
        raise ValueError(f"config key {key!r} expects a number{suffix}, got {value!r}") from None


def _int(key: str, value: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ValueError(f"config key {key!r} expects an integer, got {value!r}") from None


def _parse_window(key: str, value: str):
    if value.lower() == "full":
        return None
    parts = [p.strip() for p in value.split(",")]
    if len(parts) != 2:
        raise ValueError(
            f"config key {key!r} expects 'full' or 'a..b, c..d' (1-based cells), got {value!r}")
    spans = []
    for part in parts:
        lo, sep, hi = part.partition("..")
        if not sep:
            raise ValueError(
                f"config key {key!r} expects spans like '6..14', got {part!r}")
        spans.append((_int(key, lo.strip()), _int(key, hi.strip())))
    return tuple(spans)


def _parse_float_list(key: str, value: str, unit: str):
    parts = [p.strip() for p in value.split(",")]
    vals = [_num(key, p, unit) for p in parts]
    return vals[0] if len(vals) == 1 else tuple(vals)


def parse_config_text(text: str) -> FilterConfig:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise ValueError(f"config line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, val = key.strip(), val.strip()
        if key in values:
            raise ValueError(f"config line {lineno}: duplicate key {key!r}")
        values[key] = val

    kwargs = {}
    for key, unit in _FLOAT_KEYS.items():
        if key in values:
            kwargs[key] = _num(key, values.pop(key), unit)
    for key in _INT_KEYS:
        if key in values:
            kwargs[key] = _int(key, values.pop(key))
    if "r_filter" in values:
        kwargs["r_filter"] = _parse_float_list("r_filter", values.pop("r_filter"), "m")
    for key in ("inlet_window", "outlet_window"):
        if key in values:
            kwargs[key] = _parse_window(key, values.pop(key))
    if "dt" in values:
        val = values.pop("dt")
        kwargs["dt"] = "adaptive" if val.lower() == "adaptive" else _num("dt", val, "s")
    if "time_limit" in values:
        val = values.pop("time_limit")
        kwargs["time_limit"] = None if val.lower() == "none" else _num("time_limit", val, "s")
    if "blocking_law" in values:
        val = values.pop("blocking_law")
        if val not in ("simple", "corrected"):
            raise ValueError(f"config key 'blocking_law' expects simple or corrected, got {val!r}")
        kwargs["blocking_law"] = val
    if "solver_sweep" in values:
        kwargs["solver_sweep"] = values.pop("solver_sweep")
    if "aperture_multiplicity" in values:
        val = values.pop("aperture_multiplicity")
        parts = [_int("aperture_multiplicity", p.strip()) for p in val.split(",")]
        kwargs["aperture_multiplicity"] = parts[0] if len(parts) == 1 else tuple(parts)

    chem_vals = {}
    for key, (field_name, unit) in _CHEM_KEYS.items():
        if key in values:
            raw_val = values.pop(key)
            if field_name in ("reaction_order", "sediment_stoichiometry"):
                chem_vals[field_name] = _int(key, raw_val)
            else:
                chem_vals[field_name] = _num(key, raw_val, unit)
    if chem_vals:
        missing = [k for k, (f, _) in _CHEM_KEYS.items() if f not in chem_vals]
        if missing:
            raise ValueError(f"incomplete chemistry block, missing {', '.join(sorted(missing))}")
        kwargs["chemistry"] = Chemistry(**chem_vals)

    if values:
        raise ValueError(f"unknown config keys: {', '.join(sorted(values))}")
    missing = [k for k in ("L_x", "L_y", "L_z", "n_x", "n_y", "n_z", "p_grad", "mu",
                           "l_particle", "N_particles", "r_filter", "r_side")
               if k not in kwargs]
    if missing:
        raise ValueError(f"missing required config keys: {', '.join(missing)}")
    config = FilterConfig(**kwargs)
    config.validate()
    return config


def parse_config(path: str | Path) -> FilterConfig:
    return parse_config_text(Path(path).read_text())


def _format_window(window) -> str:
    if window is None:
        return "full"
    (x_lo, x_hi), (y_lo, y_hi) = window
    return f"{x_lo}..{x_hi}, {y_lo}..{y_hi}"


def format_config(config: FilterConfig) -> str:
    """Echo a config as parseable text; floats via repr, so round trips are exact."""
    lines = ["# clogsim filter configuration"]
    for key in ("L_x", "L_y", "L_z"):
        lines.append(f"{key} = {getattr(config, key)!r}")
    for key in ("n_x", "n_y", "n_z"):
        lines.append(f"{key} = {getattr(config, key)}")
    lines.append(f"p_grad = {config.p_grad!r}")
    lines.append(f"mu = {config.mu!r}")
    lines.append(f"l_particle = {config.l_particle!r}")
    lines.append(f"N_particles = {config.N_particles!r}")
    if np.isscalar(config.r_filter):
        lines.append(f"r_filter = {float(config.r_filter)!r}")
    else:
        lines.append("r_filter = " + ", ".join(repr(float(r)) for r in config.r_filter))
    lines.append(f"r_side = {config.r_side!r}")
    lines.append(f"inlet_window = {_format_window(config.inlet_window)}")
    lines.append(f"outlet_window = {_format_window(config.outlet_window)}")
    if config.chemistry is not None:
        chem = config.chemistry
        lines.append(f"chemistry.K = {chem.rate_constant!r}")
        lines.append(f"chemistry.n = {chem.reaction_order}")
        lines.append(f"chemistry.D = {chem.diffusivity!r}")
        lines.append(f"chemistry.mu2 = {chem.sediment_molar_mass!r}")
        lines.append(f"chemistry.n2 = {chem.sediment_stoichiometry}")
        lines.append(f"chemistry.rho2 = {chem.sediment_density!r}")
        lines.append(f"chemistry.mu0 = {chem.solute_molar_mass!r}")
        lines.append(f"c0_entrance = {config.c0_entrance!r}")
    dt = config.dt
    lines.append(f"dt = {'adaptive' if isinstance(dt, str) else repr(float(dt))}")
    limit = config.time_limit
    lines.append(f"time_limit = {'none' if limit is None else repr(float(limit))}")
    lines.append(f"blocking_law = {config.blocking_law}")
    lines.append(f"seed = {config.seed}")
    lines.append(f"flow_stop_fraction = {config.flow_stop_fraction!r}")
    lines.append(f"seal_fraction = {config.seal_fraction!r}")
    lines.append(f"depletion_threshold = {config.depletion_threshold!r}")
    if config.solver_tol is not None:
        lines.append(f"solver_tol = {config.solver_tol!r}")
    if config.solver_max_iter != 100_000:
        lines.append(f"solver_max_iter = {config.solver_max_iter}")
    if config.solver_sweep != "cg":
        lines.append(f"solver_sweep = {config.solver_sweep}")
    if config.aperture_multiplicity is not None:
        mult = config.aperture_multiplicity
        if np.isscalar(mult):
            lines.append(f"aperture_multiplicity = {int(mult)}")
        else:
            lines.append("aperture_multiplicity = " + ", ".join(str(int(m)) for m in mult))
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class RunArtifacts:
    out_dir: Path
    config_echo: Path
    trace: Path
    membrane_maps_txt: Path
    membrane_maps_csv: Path
    contamination: Path
    summary: Path


def _membrane_maps_text(grid) -> str:
    lines = []
    for k in range(grid.n_membranes):
        lines.append(f"membrane {k + 1}")
        layer = grid.z_state[:, :, k]
        for j in range(grid.n_y):
            lines.append("".join(_STATE_CHARS[int(layer[i, j])] for i in range(grid.n_x)))
        lines.append("")
    return "\n".join(lines)


def _membrane_maps_csv(grid) -> str:
    lines = ["membrane,i,j,state,initial_radius_m,radius_m,open_count"]
    for k in range(grid.n_membranes):
        for j in range(grid.n_y):
            for i in range(grid.n_x):
                lines.append(
                    f"{k + 1},{i + 1},{j + 1},{_STATE_NAMES[int(grid.z_state[i, j, k])]},"
                    f"{float(grid.z_radius0[i, j, k])!r},{float(grid.z_radius[i, j, k])!r},"
                    f"{int(grid.z_open_count[i, j, k])}")
    return "\n".join(lines) + "\n"


def _contamination_csv(trace: SimulationTrace) -> str:
    last = trace.snapshots[-1]
    lines = ["membrane,catches,open,blocked,sealed"]
    for k in range(trace.n_membranes):
        lines.append(f"{k + 1},{last.catches[k]},{last.open[k]},{last.blocked[k]},{last.sealed[k]}")
    return "\n".join(lines) + "\n"


def _summary_text(config: FilterConfig, trace: SimulationTrace) -> str:
    first, last = trace.snapshots[0], trace.snapshots[-1]
    counts = trace.final_counts()
    steps = sum(1 for s in trace.snapshots if s.dt > 0)
    lines = [
        f"stop_reason = {trace.stop_reason}",
        f"seed = {config.seed}",
        f"steps = {steps}",
        f"sim_time_s = {last.time!r}",
        f"clean_flow_m3_s = {first.total_flow!r}",
        f"final_flow_m3_s = {last.total_flow!r}",
        f"total_catches = {counts['catches']}",
        f"open_facets = {counts['open']}",
        f"blocked_facets = {counts['blocked']}",
        f"sealed_facets = {counts['sealed']}",
        f"depletion_warned = {int(any(s.depletion_warning for s in trace.snapshots))}",
    ]
    return "\n".join(lines) + "\n"


def write_run_artifacts(config: FilterConfig, trace: SimulationTrace,
                        out_dir: str | Path) -> RunArtifacts:
    if trace.final_grid is None:
        raise ValueError("trace carries no final grid; run() the simulation first")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = RunArtifacts(
        out_dir=out,
        config_echo=out / "config_echo.cfg",
        trace=out / "trace.csv",
        membrane_maps_txt=out / "membrane_maps.txt",
        membrane_maps_csv=out / "membrane_maps.csv",
        contamination=out / "contamination.csv",
        summary=out / "summary.txt",
    )
    paths.config_echo.write_text(format_config(config))
    paths.trace.write_text(trace.to_csv())
    paths.membrane_maps_txt.write_text(_membrane_maps_text(trace.final_grid))
    paths.membrane_maps_csv.write_text(_membrane_maps_csv(trace.final_grid))
    paths.contamination.write_text(_contamination_csv(trace))
    paths.summary.write_text(_summary_text(config, trace))
    return paths


def _parse_seed_spec(spec: str) -> list[int]:
    lo, sep, hi = spec.partition("..")
    if sep:
        start, stop = int(lo), int(hi)
        if stop < start:
            raise ValueError(f"seed range {spec!r} is empty")
        return list(range(start, stop + 1))
    return [int(spec)]


def _cmd_simulate(args) -> int:
    config = parse_config(args.config)
    if args.time_limit is not None:
        config = replace(config, time_limit=None if args.time_limit.lower() == "none"
                         else _num("time_limit", args.time_limit, "s"))
    if args.dt is not None:
        config = replace(config, dt="adaptive" if args.dt.lower() == "adaptive"
                         else _num("dt", args.dt, "s"))
    if args.blocking_law is not None:
        config = replace(config, blocking_law=args.blocking_law)
    if args.no_chemistry:
        config = replace(config, chemistry=None)
    seeds = _parse_seed_spec(args.seed) if args.seed is not None else [config.seed]
    out_base = Path(args.out)
    degenerate = False
    for seed in seeds:
        run_config = replace(config, seed=seed)
        run_config.validate()
        trace = run(run_config)
        out_dir = out_base if len(seeds) == 1 else out_base / f"seed_{seed}"
        write_run_artifacts(run_config, trace, out_dir)
        counts = trace.final_counts()
        print(f"seed {seed}: {trace.stop_reason} at t = {trace.duration:.6g} s, "
              f"catches = {counts['catches']}, blocked = {counts['blocked']}, "
              f"sealed = {counts['sealed']} -> {out_dir}")
        degenerate = degenerate or trace.stop_reason == "degenerate"
    return 3 if degenerate else 0


def _schedule_text(schedule: LayerSchedule, extra: list[str] | None = None) -> str:
    lines = [f"kind = {schedule.kind}", f"membranes = {schedule.membranes}",
             f"penetration = {schedule.penetration()!r}"]
    if extra:
        lines += extra
    header = "k,catch_probability" + (",radius_m" if schedule.radii is not None else "")
    lines.append(header)
    for idx, c in enumerate(schedule.catch_probabilities):
        row = f"{idx + 1},{c!r}"
        if schedule.radii is not None:
            row += f",{schedule.radii[idx]!r}"
        lines.append(row)
    return "\n".join(lines) + "\n"


def _cmd_design(args) -> int:
    extra = None
    if args.kind == "equal-contamination":
        if args.membranes is None or args.first_catch is None:
            raise ValueError("equal-contamination design needs --membranes and --first-catch")
        schedule = equal_contamination_schedule(args.first_catch, args.membranes,
                                                rod_length=args.rod_length)
    elif args.kind == "quantile":
        if args.layers is None:
            raise ValueError("quantile design needs --layers")
        schedule = quantile_schedule(args.layers, rod_length=args.rod_length)
        product, shortcut = quantile_penetration_forms(args.layers)
        extra = [f"penetration_product = {product!r}",
                 f"penetration_shortcut = {shortcut!r}"]
    else:
        if args.membranes is None or args.catch is None:
            raise ValueError("uniform design needs --membranes and --catch")
        schedule = uniform_schedule(args.catch, args.membranes, rod_length=args.rod_length)
    text = _schedule_text(schedule, extra)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_calibrate(args) -> int:
    result = calibrate_rate_constant(
        args.growth, args.mass_concentration,
        solute_molar_mass=args.solute_molar_mass,
        sediment_molar_mass=args.sediment_molar_mass,
        sediment_density=args.sediment_density,
        diffusivity=args.diffusivity,
        radius=args.radius,
        reaction_order=args.reaction_order,
        sediment_stoichiometry=args.stoichiometry,
    )
    print(f"rate_constant = {result.rate_constant!r}")
    print(f"entrance_concentration_m3 = {result.entrance_concentration!r}")
    print(f"wall_concentration_m3 = {result.wall_concentration!r}")
    return 0


def _cmd_estimate(args) -> int:
    config = parse_config(args.config)
    est = lifetime_estimates(config)
    print(f"aperture_flow_m3_s = {est.aperture_flow!r}")
    print(f"total_flow_m3_s = {est.total_flow!r}")
    print(f"particle_exposure_s_m3 = {est.particle_exposure!r}")
    print(f"lifetime_s = {est.lifetime!r}")
    print(f"capacity_particles = {est.capacity!r}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clogsim",
        description="Layered porous filter clogging: simulate, design, calibrate, estimate.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run the stochastic clogging simulation")
    p_sim.add_argument("--config", required=True, help="path to a key = value config file")
    p_sim.add_argument("--seed", help="seed, or inclusive range like 1..20 (one run each)")
    p_sim.add_argument("--out", default="runs", help="artifact directory (default: runs)")
    p_sim.add_argument("--time-limit", help="override: seconds, or 'none'")
    p_sim.add_argument("--dt", help="override: seconds, or 'adaptive'")
    p_sim.add_argument("--blocking-law", choices=("simple", "corrected"))
    p_sim.add_argument("--no-chemistry", action="store_true",
                       help="disable deposition, keep particle capture")
    p_sim.set_defaults(func=_cmd_simulate)

    p_des = sub.add_parser("design", help="print an aperture sizing schedule")
    p_des.add_argument("--kind", required=True,
                       choices=("equal-contamination", "quantile", "uniform"))
    p_des.add_argument("--membranes", type=int, help="membrane count (equal/uniform kinds)")
    p_des.add_argument("--layers", type=int, help="cell layer count (quantile kind)")
    p_des.add_argument("--first-catch", type=float, help="membrane 1 catch probability")
    p_des.add_argument("--catch", type=float, help="uniform catch probability")
    p_des.add_argument("--rod-length", type=float, help="particle rod length (m); adds radii")
    p_des.add_argument("--out", help="write the schedule to a file instead of stdout")
    p_des.set_defaults(func=_cmd_design)

    p_cal = sub.add_parser("calibrate", help="rate constant from a measured growth rate")
    p_cal.add_argument("--growth", type=float, required=True, help="deposit growth rate (m/s)")
    p_cal.add_argument("--mass-concentration", type=float, required=True,
                       help="solute mass concentration (kg/m^3)")
    p_cal.add_argument("--solute-molar-mass", type=float, required=True, help="kg/mol")
    p_cal.add_argument("--sediment-molar-mass", type=float, required=True, help="kg/mol")
    p_cal.add_argument("--sediment-density", type=float, required=True, help="kg/m^3")
    p_cal.add_argument("--diffusivity", type=float, required=True, help="m^2/s")
    p_cal.add_argument("--radius", type=float, required=True, help="aperture radius (m)")
    p_cal.add_argument("--reaction-order", type=int, default=1)
    p_cal.add_argument("--stoichiometry", type=int, default=1,
                       help="solute units per sediment unit")
    p_cal.set_defaults(func=_cmd_calibrate)

    p_est = sub.add_parser("estimate", help="closed-form lifetime numbers for a config")
    p_est.add_argument("--config", required=True)
    p_est.set_defaults(func=_cmd_estimate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CalibrationInfeasibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
