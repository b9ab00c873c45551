"""Command-line entry point.

Every subcommand reads ``--config`` and writes its artifacts plus
``config.json`` and ``provenance.json`` into ``--out``.  Exit codes: 0
success, 2 configuration or degenerate parameters, 3 invariant violation,
4 integration failure.
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import math
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from ._backend import BACKEND
from .config import RunConfig, load_config
from .dynamics import (IntegratorConfig, classify_mode, estimate_period, integrate)
from .errors import (BJJError, ConfigError, DegenerateCoupling, DegenerateRoot, EulerViolation,
                     InsufficientData, NotPeriodic, PoleApproach, StepLimitExceeded, Unclassified)
from .fixedpoints import (DEFAULT_GRID_N, bifurcation_sweep, find_stationary_points, morse_count)
from .model import PhaseState, reduce_params
from .portrait import default_levels, extract_contours, sample_grid, separatrix_levels

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INVARIANT = 3
EXIT_INTEGRATION = 4


# ---------------------------------------------------------------------------
# serialisation
# ---------------------------------------------------------------------------

def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def write_json(path: Path, obj) -> None:
    text = json.dumps(_jsonable(obj), sort_keys=True, indent=2, ensure_ascii=False)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text + "\n")


def _point_record(p):
    return {"z": p.z, "phi": p.phi, "branch": p.branch.value, "kind": p.kind.value,
            "energy": p.energy, "f_derivative": p.f_derivative, "degenerate": p.degenerate}


class Run:
    """Output directory of one invocation."""

    def __init__(self, out: Path, command: str, cfg: RunConfig):
        self.out = Path(out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.command = command
        self.cfg = cfg
        self.artifacts = []

    def csv(self, name, header, rows):
        write_csv(self.out / name, header, rows)
        self.artifacts.append(name)

    def json(self, name, obj):
        write_json(self.out / name, obj)
        self.artifacts.append(name)

    def finish(self, exit_code: int) -> int:
        self.json("config.json", self.cfg.document)
        hashes = {name: hashlib.sha256((self.out / name).read_bytes()).hexdigest()
                  for name in sorted(self.artifacts)}
        write_json(self.out / "provenance.json", {
            "command": self.command,
            "version": __version__,
            "backend": BACKEND,
            "seed": self.cfg.seed,
            "exit_code": exit_code,
            "artifacts_sha256": hashes,
            # excluded from the hashes above
            "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        })
        return exit_code


def _load(config_path, seed, reduce=True) -> RunConfig:
    cfg = load_config(config_path, reduce=reduce)
    if seed is not None:
        cfg.seed = int(seed)
        cfg.document = dict(cfg.document, seed=int(seed))
    return cfg


def _grid_n(cfg: RunConfig, section: str, override) -> int:
    if override is not None:
        return int(override)
    return int(cfg.section(section).get("grid_n", DEFAULT_GRID_N))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_reduce(cfg: RunConfig, out: Path) -> int:
    if cfg.physical is None:
        raise ConfigError("reduce needs a [physical] block")
    p = cfg.physical
    run = Run(out, "reduce", cfg)
    try:
        red = reduce_params(p)
    except DegenerateCoupling as exc:
        click.echo(f"error: {exc}", err=True)
        run.json("reduced.json", {"error": str(exc), "delta": p.delta, "U0": p.U0})
        return run.finish(EXIT_CONFIG)

    warnings = []
    if not -1.0 <= red.B <= 1.0:
        warnings.append(f"B = {red.B:.6g} outside [-1, 1]: the cavity resonance is not reachable by z")
    if red.C > 1.0:
        warnings.append(f"C = {red.C:.6g} > 1: the cavity response is weak over the z range")
    for w in warnings:
        click.echo(f"warning: {w}", err=True)
    amplitude = red.pump.values[0]
    run.json("reduced.json", {
        "input": cfg.document.get("physical"),
        "report": {"r": red.r, "A_tilde": red.a_tilde, "B": red.B, "C": red.C, "A": amplitude,
                   "Delta": p.detuning, "delta": p.delta, "s": red.tilt_scale,
                   "U0": p.U0, "reduction_unit": p.reduction_unit},
        # loadable as a config file as is
        "reduced": {"r": red.r, "B": red.B, "C": red.C, "s": red.tilt_scale, "A": amplitude},
        "seed": cfg.seed,
        "warnings": warnings,
    })
    return run.finish(EXIT_OK)


def cmd_fixed_points(cfg: RunConfig, out: Path, grid_n: int) -> int:
    run = Run(out, "fixed-points", cfg)
    degenerate = False
    try:
        points = find_stationary_points(cfg.params, grid_n=grid_n)
    except DegenerateRoot as exc:
        points, degenerate = exc.points, True
        click.echo(f"warning: {exc}", err=True)
    counts = morse_count(points)
    run.csv("fixed_points.csv", ["z", "branch", "kind", "energy", "f_derivative"],
            [(p.z, p.branch.value, p.kind.value, p.energy, p.f_derivative) for p in points])
    run.json("morse.json", {"m0": counts.minima, "m1": counts.saddles, "m2": counts.maxima,
                            "euler": counts.euler, "euler_ok": counts.ok,
                            "degenerate": degenerate, "grid_n": grid_n,
                            "params": cfg.params.to_dict()})
    if not counts.ok and not degenerate:
        click.echo(f"error: Euler relation violated, m0-m1+m2={counts.euler}", err=True)
        return run.finish(EXIT_INVARIANT)
    return run.finish(EXIT_OK)


def cmd_trajectory(cfg: RunConfig, out: Path, grid_n: int) -> int:
    sec = cfg.section("trajectory")
    try:
        z0 = float(sec["z0"])
    except KeyError as exc:
        raise ConfigError("[trajectory] needs z0") from exc
    phi0 = float(sec.get("phi0", 0.0))
    t_end = float(sec.get("t_end", 100.0))
    try:
        icfg = IntegratorConfig(
            method=sec.get("method", "dopri5"),
            rtol=float(sec.get("rtol", 1e-10)), atol=float(sec.get("atol", 1e-12)),
            max_step=float(sec.get("max_step", 0.01)),
            max_steps=int(sec.get("max_steps", 10_000_000)),
            samples=int(sec.get("samples", 2000)))
        state0 = PhaseState(z0, phi0)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    run = Run(out, "trajectory", cfg)
    exit_code = EXIT_OK
    try:
        traj = integrate(state0, cfg.params, t_end, icfg)
    except (PoleApproach, StepLimitExceeded) as exc:
        click.echo(f"error: {exc}", err=True)
        traj = exc.trajectory
        exit_code = EXIT_INTEGRATION
    summary = {"status": traj.status if traj is not None else "pole_approach",
               "z0": z0, "phi0": state0.phi, "t_end": t_end,
               "params": cfg.params.to_dict(), "seed": cfg.seed,
               "partial": exit_code != EXIT_OK}
    if traj is not None:
        run.csv("trajectory.csv", ["t", "z", "phi_unwrapped", "H_c", "photon"],
                zip(traj.times, traj.z, traj.phi, traj.energies, traj.photons))
        summary["energy_drift"] = traj.energy_drift
        summary["stats"] = {k: v for k, v in traj.stats.items() if k != "backend"}
    if exit_code == EXIT_OK:
        try:
            est = estimate_period(traj)
            summary["period"] = est.period
            summary["period_spread"] = est.spread
        except NotPeriodic as exc:
            summary["period"] = None
            summary["period_note"] = str(exc)
        except InsufficientData as exc:
            summary["period"] = None
            summary["period_note"] = str(exc)
        separatrices = None
        if cfg.params.pump.is_constant:
            try:
                points = find_stationary_points(cfg.params, grid_n=grid_n)
            except DegenerateRoot as exc:
                points = exc.points
            separatrices = separatrix_levels(points)
            summary["separatrix_energies"] = separatrices
        try:
            summary["mode"] = classify_mode(traj, separatrices).value
        except Unclassified as exc:
            summary["mode"] = "unclassified"
            summary["mode_note"] = str(exc)
    run.json("summary.json", summary)
    return run.finish(exit_code)


def cmd_portrait(cfg: RunConfig, out: Path, grid_n: int) -> int:
    sec = cfg.section("portrait")
    n_z = int(sec.get("n_z", 512))
    n_phi = int(sec.get("n_phi", 512))
    t = float(sec.get("t", 0.0))
    try:
        grid = sample_grid(cfg.params, n_z, n_phi, t)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    degenerate = False
    try:
        points = find_stationary_points(cfg.params, grid_n=grid_n, t=t)
    except DegenerateRoot as exc:
        points, degenerate = exc.points, True
    if "levels" in sec:
        levels = [float(x) for x in sec["levels"]]
    else:
        levels = default_levels(grid, points, int(sec.get("n_quantiles", 16)))
    contours = extract_contours(grid, levels)

    run = Run(out, "portrait", cfg)
    zz, pp = np.meshgrid(grid.z, grid.phi, indexing="ij")
    run.csv("grid.csv", ["z", "phi", "H_c"],
            zip(zz.ravel(), pp.ravel(), grid.values.ravel()))
    run.json("contours.json", {"levels": [
        {"level": lc.level, "n_components": lc.n_components, "error": lc.error,
         "polylines": [{"component": pl.component, "closed": pl.closed,
                        "vertices": pl.vertices} for pl in lc.polylines]}
        for lc in contours.levels.values()]})
    run.json("separatrix.json", {"levels": separatrix_levels(points),
                                 "stationary_points": [_point_record(p) for p in points],
                                 "degenerate": degenerate})
    return run.finish(EXIT_OK)


def cmd_sweep(cfg: RunConfig, out: Path, grid_n: int) -> int:
    sec = cfg.section("sweep")
    try:
        vary = sec["vary"]
        start, stop = float(sec["start"]), float(sec["stop"])
        steps = int(sec.get("steps", 11))
    except KeyError as exc:
        raise ConfigError(f"[sweep] is missing {exc}") from exc
    if vary not in ("r", "A_tilde", "B", "C"):
        raise ConfigError(f"cannot sweep {vary!r}; expected r, A_tilde, B or C")
    if steps < 2:
        raise ConfigError("[sweep] steps must be >= 2")
    rows = bifurcation_sweep(cfg.params, vary, start, stop, steps, grid_n=grid_n)
    run = Run(out, "sweep", cfg)

    def serialise(points):
        return ";".join(f"{p.kind.value}:{p.branch.value}:{fmt(p.z)}" for p in points)

    run.csv("sweep.csv", ["value", "m0", "m1", "m2", "euler_ok", "flag", "points"],
            [(row.value,
              *(row.counts.as_tuple() if row.counts else ("", "", "")),
              row.euler_ok, row.flag or "ok", serialise(row.points)) for row in rows])
    return run.finish(EXIT_OK)


# ---------------------------------------------------------------------------
# click wiring
# ---------------------------------------------------------------------------

def _common(func):
    func = click.option("--seed", type=int, default=None, help="Seed recorded in the outputs.")(func)
    func = click.option("--grid-n", "grid_n", type=int, default=None,
                        help="Bracketing grid size for the stationary-point search.")(func)
    func = click.option("--out", "out", type=click.Path(file_okay=False), required=True,
                        help="Output directory.")(func)
    func = click.option("--config", "config", type=click.Path(), required=True,
                        help="TOML or JSON run configuration.")(func)
    return func


def _dispatch(fn, config, out, seed, reduce=True, **kw) -> None:
    try:
        cfg = _load(config, seed, reduce=reduce)
        code = fn(cfg, Path(out), **kw)
    except (ConfigError, DegenerateCoupling) as exc:
        click.echo(f"error: {exc}", err=True)
        code = EXIT_CONFIG
    except EulerViolation as exc:
        click.echo(f"error: {exc}", err=True)
        code = EXIT_INVARIANT
    except BJJError as exc:
        click.echo(f"error: {exc}", err=True)
        code = EXIT_INVARIANT
    sys.exit(code)


@click.group()
@click.version_option(__version__, prog_name="bjjcavity")
def main():
    """Bose Josephson junction in a driven optical cavity: mean-field analysis."""


@main.command("reduce")
@_common
def reduce_command(config, out, grid_n, seed):
    """Reduce a physical parameter block to (r, A~, B, C)."""
    _dispatch(cmd_reduce, config, out, seed, reduce=False)


@main.command("fixed-points")
@_common
def fixed_points_command(config, out, grid_n, seed):
    """Stationary points, their kinds and the Morse counts."""
    _dispatch(lambda cfg, o: cmd_fixed_points(cfg, o, _grid_n(cfg, "fixed_points", grid_n)),
              config, out, seed)


@main.command("trajectory")
@_common
def trajectory_command(config, out, grid_n, seed):
    """Integrate one orbit; CSV time series plus period and mode summary."""
    _dispatch(lambda cfg, o: cmd_trajectory(cfg, o, _grid_n(cfg, "fixed_points", grid_n)),
              config, out, seed)


@main.command("portrait")
@_common
def portrait_command(config, out, grid_n, seed):
    """Energy grid, iso-energy contours and separatrix levels."""
    _dispatch(lambda cfg, o: cmd_portrait(cfg, o, _grid_n(cfg, "fixed_points", grid_n)),
              config, out, seed)


@main.command("sweep")
@_common
def sweep_command(config, out, grid_n, seed):
    """Stationary-point census along one parameter."""
    _dispatch(lambda cfg, o: cmd_sweep(cfg, o, _grid_n(cfg, "sweep", grid_n)),
              config, out, seed)


if __name__ == "__main__":
    main()
