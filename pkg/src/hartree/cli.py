"""Command-line entry point: ``hartree <command> --config FILE [--out DIR]``."""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from . import diagnostics, potentials, propagator, reference, scheme
from .config import ConfigError, SimulationConfig, parse_config
from .grid import boundary_mass, gaussian, make_grid

log = logging.getLogger("hartree")

EXIT_OK, EXIT_ERROR, EXIT_ASSUMPTIONS = 0, 1, 2


def build_potentials(cfg: SimulationConfig):
    """Grids and potentials from the config; returns ``(p, shifts)``."""
    gx = make_grid(cfg["grid_x.n"], cfg["grid_x.min"], cfg["grid_x.max"])
    gy = make_grid(cfg["grid_y.n"], cfg["grid_y.min"], cfg["grid_y.max"])
    bump = potentials.BumpSpec(cfg["potentials.amplitude"], cfg["potentials.support"],
                               cfg["potentials.slope_mode"])
    preset = cfg["potentials.preset"]
    if preset == "example31":
        p = potentials.preset_example(gx, gy, cfg["potentials.ell"], cfg["potentials.omega"], bump)
    elif preset == "harmonic":
        p = potentials.preset_harmonic(gx, gy, cfg["potentials.omega_x"],
                                       cfg["potentials.omega"], bump)
    else:
        V1 = potentials.load_tabulated(cfg["potentials.v1_file"], gx)
        V2 = potentials.load_tabulated(cfg["potentials.v2_file"], gy)
        chi = bump.values(gx.points)
        p = potentials.PotentialSet(gx, gy, V1, V2, np.outer(chi, gy.points**2), kind="tabulated",
                                    params={"amplitude": bump.amplitude,
                                            "support": bump.support_radius})
    if cfg["potentials.shift_to_h1"]:
        return potentials.shift_to_H1(p)
    return p, (0.0, 0.0)


def _factor(cfg, axis, grid, V):
    kind = cfg[f"initial.{axis}.kind"]
    if kind == "gaussian":
        return gaussian(grid, cfg[f"initial.{axis}.center"], cfg[f"initial.{axis}.width"],
                        cfg[f"initial.{axis}.momentum"])
    return propagator.imaginary_time_ground_state(
        V, grid, cfg["ground_state.dt"], cfg["ground_state.tol"], cfg["ground_state.max_iter"])


def build_initial(cfg: SimulationConfig, p) -> scheme.HartreeState:
    s = scheme.HartreeState(0.0, _factor(cfg, "x", p.grid_x, p.V1),
                            _factor(cfg, "y", p.grid_y, p.V2))
    limit = cfg["tolerances.boundary_initial"]
    for name, phi in (("x", s.phi_x), ("y", s.phi_y)):
        bm = boundary_mass(phi)
        if bm >= limit:
            raise ConfigError(f"initial {name}-factor has boundary mass {bm:.3e} >= {limit:.1e}; "
                              f"enlarge grid_{name}")
    return s


def _out_dir(cfg, args) -> Path:
    out = Path(args.out or cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _manifest(out: Path, cfg: SimulationConfig, command: str, files, extra=None):
    lines = [f"command = {command}", f"config_source = {cfg.source}"]
    lines += [f"output = {f}" for f in files]
    for k, v in (extra or {}).items():
        lines.append(f"{k} = {v}")
    lines.append("# resolved configuration")
    (out / "manifest.txt").write_text("\n".join(lines) + "\n" + cfg.dump())


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        for row in rows:
            wr.writerow([v if isinstance(v, (int, str)) else f"{float(v):.17g}" for v in row])


def cmd_run(cfg, args) -> int:
    p, shifts = build_potentials(cfg)
    s0 = build_initial(cfg, p)
    traj = scheme.run_hartree(s0, p, cfg["time.T"], cfg["time.dt"], cfg["time.record_every"],
                              boundary_warn=cfg["tolerances.boundary_warn"])
    out = _out_dir(cfg, args)
    records = diagnostics.trajectory_records(traj, p, with_residual=True)
    diagnostics.write_diagnostics_csv(out / "diagnostics.csv", records)
    scheme.write_trajectory(out / "trajectory.htrj", traj)
    drift = max(abs(r.norm_x - 1.0) for r in records) if records else 0.0
    drift = max(drift, max(abs(r.norm_y - 1.0) for r in records))
    if drift > cfg["tolerances.norm"]:
        log.warning("norm drift %.3e exceeds tolerance %.1e", drift, cfg["tolerances.norm"])
    _manifest(out, cfg, "run", ["diagnostics.csv", "trajectory.htrj"],
              {"shift_x": shifts[0], "shift_y": shifts[1], "max_norm_drift": f"{drift:.3e}"})
    print(f"run: {len(traj)} snapshots, max norm drift {drift:.3e}, "
          f"energy {records[0].energy:.12g} -> {records[-1].energy:.12g}")
    return EXIT_OK


def cmd_picard(cfg, args) -> int:
    p, shifts = build_potentials(cfg)
    s0 = build_initial(cfg, p)
    kw = dict(seed=cfg["picard.seed"], density=cfg["picard.density"])
    traj, report = scheme.picard_solve(s0, p, cfg["picard.T1"], cfg["time.dt"], cfg["picard.N"],
                                       cfg["picard.tol"], **kw)
    reports = [report]
    for _ in range(cfg["picard.segments"] - 1):
        traj, report = scheme.continue_picard(traj, p, cfg["picard.T1"], cfg["picard.N"],
                                              cfg["picard.tol"], **kw)
        reports.append(report)
    out = _out_dir(cfg, args)
    rows = [row for r in reports for row in r.rows()]
    _write_csv(out / "picard_report.csv", ["n", "sup_diff", "ratio"], rows)
    every = cfg["time.record_every"]
    sub = scheme.HartreeTrajectory(traj.states[::every], traj.dt, dict(traj.meta))
    diagnostics.write_diagnostics_csv(out / "diagnostics.csv",
                                      diagnostics.trajectory_records(sub, p))
    scheme.write_trajectory(out / "trajectory.htrj", sub)
    converged = all(r.converged for r in reports)
    _manifest(out, cfg, "picard", ["picard_report.csv", "diagnostics.csv", "trajectory.htrj"],
              {"shift_x": shifts[0], "shift_y": shifts[1], "converged": converged})
    for r in reports:
        print("picard: d_n =", " ".join(f"{d:.3e}" for d in r.sup_diffs),
              "converged" if r.converged else "NOT converged")
    return EXIT_OK


def cmd_compare(cfg, args) -> int:
    p, shifts = build_potentials(cfg)
    if not cfg["compare.enabled"]:
        print("compare: disabled by compare.enabled = false")
        return EXIT_OK
    s0 = build_initial(cfg, p)
    cmp = reference.compare(s0, p, cfg["time.T"], cfg["time.dt"], cfg["time.record_every"],
                            memory_ack=cfg["compare.memory_ack"],
                            boundary_warn=cfg["tolerances.boundary_warn"])
    out = _out_dir(cfg, args)
    _write_csv(out / "error.csv", ["t", "hartree_error", "full_norm", "full_energy"],
               zip(cmp.times, cmp.hartree_error, cmp.full_norm, cmp.full_energy))
    t_last, v_last = cmp.full.snapshots[-1]
    reference.write_snapshot(out / "full_final.htr2",
                             reference.State2D(cmp.full.grid_x, cmp.full.grid_y, v_last), t_last)
    _manifest(out, cfg, "compare", ["error.csv", "full_final.htr2"],
              {"shift_x": shifts[0], "shift_y": shifts[1]})
    print(f"compare: final hartree error {cmp.hartree_error[-1]:.6e} at t = {t_last:g}")
    return EXIT_OK


def cmd_check(cfg, args) -> int:
    p, shifts = build_potentials(cfg)
    rep = potentials.check_assumptions(p, cfg["check.search_C"])
    out = _out_dir(cfg, args)
    lines = rep.lines()
    if p.kind == "example31":
        sup = float(np.abs(potentials.BumpSpec(
            cfg["potentials.amplitude"], cfg["potentials.support"],
            cfg["potentials.slope_mode"]).values(p.grid_x.points)).max())
        lines.append(f"chi grid sup = {sup:.17g} (sufficient condition needs < omega^2/2 = "
                     f"{cfg['potentials.omega'] ** 2 / 2:.17g})")
    lines.append(f"shifts: C1={shifts[0]:.17g} C2={shifts[1]:.17g}")
    lines.append(f"OVERALL: {'PASS' if rep.ok else 'FAIL'}")
    (out / "assumptions.txt").write_text("\n".join(lines) + "\n")
    _manifest(out, cfg, "check-assumptions", ["assumptions.txt"])
    print("\n".join(lines))
    return EXIT_OK if rep.ok else EXIT_ASSUMPTIONS


def cmd_ground_state(cfg, args) -> int:
    p, shifts = build_potentials(cfg)
    out = _out_dir(cfg, args)
    lines = []
    for axis, grid, V, shift in (("x", p.grid_x, p.V1, shifts[0]), ("y", p.grid_y, p.V2, shifts[1])):
        phi = propagator.imaginary_time_ground_state(
            V, grid, cfg["ground_state.dt"], cfg["ground_state.tol"], cfg["ground_state.max_iter"])
        e = propagator.rayleigh_quotient(phi, V)
        _write_csv(out / f"ground_state_{axis}.csv", ["x", "re", "im"],
                   zip(grid.points, phi.values.real, phi.values.imag))
        lines.append(f"E_{axis} = {e:.17g} (unshifted {e - shift:.17g})")
    (out / "ground_state.txt").write_text("\n".join(lines) + "\n")
    _manifest(out, cfg, "ground-state",
              ["ground_state_x.csv", "ground_state_y.csv", "ground_state.txt"])
    print("\n".join(lines))
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "picard": cmd_picard,
    "compare": cmd_compare,
    "check-assumptions": cmd_check,
    "ground-state": cmd_ground_state,
}


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="hartree", description=__doc__)
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="path to key = value config file")
    ap.add_argument("--out", default=None, help="output directory (overrides output_dir)")
    ap.add_argument("-v", "--verbose", action="store_true")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    logging.captureWarnings(True)
    try:
        cfg = parse_config(args.config)
        return COMMANDS[args.command](cfg, args)
    except Exception as exc:  # any failure is a runtime error for the caller
        print(f"hartree {args.command}: error: {exc}", file=sys.stderr)
        if args.verbose:
            raise
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
