"""Command-line entry point: run scenarios and write portable artifacts.

Exit codes: 0 success, 2 invalid configuration or usage, 3 numerical
precondition violated (strict mode), 4 I/O or file-format error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, Scenario, load_config
from .fourier import ComplexField2D, Domain, Grid2D, RealField2D
from .io import FormatError, dump_field, load_field, render_preview, write_csv, write_json
from .measurement import Observable, estimate_correlations, estimated_row_map, render_frames
from .observables import (
    ImagingMode,
    RowCorrelationMap,
    intensity_marginal,
    map_to_camera,
    minus_projection,
    near_field_state,
    radial_profile,
    ridge_extract,
    row_correlation_map,
    sum_projection,
)
from .pump import pump_angular_spectrum, shape_pump
from .state import CrystalSpec, TwoPhotonState, build_state, kernel_check
from .tailor import forward_sum_projection, tailor_pump_to_target

log = logging.getLogger("pumpshaping")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


class PreconditionError(RuntimeError):
    """A numerical precondition failed in strict mode."""


def _grid_meta(g: Grid2D) -> dict:
    return {"n": g.n, "pitch": g.pitch, "domain": g.domain.value}


class Writer:
    """Emits artifacts with sidecars into one directory."""

    def __init__(self, out: Path, formats, scale: str, context: dict):
        self.out = Path(out)
        self.formats = tuple(formats)
        self.scale = scale
        self.context = context
        self.written: list[str] = []

    def _meta(self, name: str, extra: dict) -> None:
        meta = {"artifact": name, **self.context, **extra}
        write_json(self.out / f"{name}.json", meta)
        self.written.append(f"{name}.json")

    def real(self, name: str, values, grid: Grid2D | None = None, **extra) -> None:
        values = np.asarray(values, dtype=float)
        if "binary" in self.formats:
            dump_field(values, self.out / f"{name}.bpr")
            self.written.append(f"{name}.bpr")
        if "pgm" in self.formats:
            render_preview(np.clip(values, 0.0, None), self.out / f"{name}.pgm", self.scale)
            self.written.append(f"{name}.pgm")
        if grid is not None:
            extra = {"grid": _grid_meta(grid), **extra}
        self._meta(name, extra)

    def complex(self, name: str, field: ComplexField2D, **extra) -> None:
        dump_field(field, self.out / f"{name}.bpf")
        self.written.append(f"{name}.bpf")
        self._meta(name, {"grid": _grid_meta(field.grid), **extra})

    def profile(self, name: str, field: RealField2D) -> None:
        if "csv" not in self.formats:
            return
        r, v = radial_profile(field)
        write_csv(self.out / f"{name}.csv", ["radius", "value"], [r, v])
        self.written.append(f"{name}.csv")

    def raw(self, name: str, obj) -> None:
        dump_field(obj, self.out / name)
        self.written.append(name)


def _context(sc: Scenario, seed: int) -> dict:
    return {
        "scenario": sc.raw,
        "seed": seed,
        "versions": {"pumpshaping": __version__, "numpy": np.__version__},
    }


def _ridges(m: RowCorrelationMap, **kw) -> list[dict]:
    rep = ridge_extract(m, **kw)
    return [{"offset": r.offset, "strength": r.strength, "columns": r.columns} for r in rep.ridges]


def _state_for(sc: Scenario, strict: bool) -> tuple[TwoPhotonState, dict]:
    mask = sc.mask()
    vp = pump_angular_spectrum(shape_pump(sc.pump, mask))
    diag = kernel_check(vp, sc.crystal)
    info = {"blocked_fraction": diag.blocked_fraction, "observable": diag.observable}
    if not diag.observable:
        msg = f"pump spectrum is mostly blocked by phase matching (fraction {diag.blocked_fraction:.3f})"
        if strict:
            raise PreconditionError(msg)
        log.warning(msg)
    return build_state(vp, sc.crystal), {"kernel_check": info, "mask": mask}


def _camera_meta(imaging, field: RealField2D, mode: ImagingMode) -> dict:
    if imaging is None or imaging.mode is not mode:
        return {}
    cam = map_to_camera(field, imaging)
    return {"camera_grid": _grid_meta(cam.grid), "camera_focal": imaging.focal}


def write_observables(w: Writer, state: TwoPhotonState, which, imaging=None) -> None:
    for name in which:
        if name == "sum_projection":
            f = sum_projection(state)
            w.real(name, f.values, f.grid, **_camera_meta(imaging, f, ImagingMode.FAR_FIELD))
            w.profile(f"{name}_radial", f)
        elif name == "minus_projection":
            f = minus_projection(state)
            w.real(name, f.values, f.grid)
        elif name == "row_map":
            m = row_correlation_map(state)
            w.real(name, m.values, state.photon_grid, sum_bin=m.bin, ridges=_ridges(m))
        elif name == "intensity":
            f = intensity_marginal(state)
            w.real(name, f.values, f.grid, **_camera_meta(imaging, f, ImagingMode.FAR_FIELD))
            w.profile(f"{name}_radial", f)
        elif name == "near_field":
            pos = near_field_state(state)
            f = sum_projection(pos)
            w.real("near_field_sum", f.values, f.grid, **_camera_meta(imaging, f, ImagingMode.NEAR_FIELD))
            g = minus_projection(pos)
            w.real("near_field_minus", g.values, g.grid)
        else:  # pragma: no cover - the schema enumerates names
            raise ConfigError(f"unknown observable {name!r}")


def write_state(w: Writer, state: TwoPhotonState) -> None:
    w.complex("state_vp", state.vp)
    w.complex("state_vc", state.vc)
    c = state.crystal
    write_json(
        w.out / "state.json",
        {
            "grid": _grid_meta(state.grid),
            "crystal": {
                "length": c.length,
                "wavelength_pump": c.wavelength_pump,
                "refractive_index": c.refractive_index,
                "model": c.model.value,
            },
        },
    )
    w.written.append("state.json")


def load_state(directory: Path) -> TwoPhotonState:
    directory = Path(directory)
    meta = json.loads((directory / "state.json").read_text())
    g = meta["grid"]
    grid = Grid2D(int(g["n"]), float(g["pitch"]), Domain(g["domain"]))
    vp = load_field(directory / "state_vp.bpf")
    vc = load_field(directory / "state_vc.bpf")
    if not (isinstance(vp, np.ndarray) and np.iscomplexobj(vp) and isinstance(vc, np.ndarray) and np.iscomplexobj(vc)):
        raise FormatError("state files must hold complex fields")
    return TwoPhotonState(ComplexField2D(grid, vp), ComplexField2D(grid, vc), CrystalSpec(**meta["crystal"]))


def run_measurement(w: Writer, sc: Scenario, state: TwoPhotonState, seed: int) -> None:
    m = sc.measurement
    obs = Observable(m.get("observable", "row_map"))
    stack = render_frames(state, sc.camera, m["frames"], seed)
    if m.get("save_frames", False):
        w.raw("frames.bpb", stack)
    est = estimate_correlations(stack, obs)
    extra = {"frames": stack.frames, "camera": {
        "n": sc.camera.n,
        "quantum_efficiency": sc.camera.quantum_efficiency,
        "dark_count_prob": sc.camera.dark_count_prob,
        "pairs_per_frame_mean": sc.camera.pairs_per_frame_mean,
    }}
    if obs is Observable.ROW_MAP:
        rm = estimated_row_map(est, state)
        extra["ridges"] = _ridges(rm, stderr=est.stderr)
        grid = state.photon_grid
    else:
        grid = Grid2D(state.grid.n, state.grid.pitch * state.sum_scale, state.domain)
    w.real(f"measured_{obs.value}", est.values, grid, **extra)
    w.real(f"measured_{obs.value}_stderr", est.stderr, grid)


def cmd_simulate(args, sc: Scenario) -> None:
    seed = sc.seed if args.seed is None else args.seed
    w = Writer(args.out or sc.output_dir, sc.formats, sc.preview_scale, _context(sc, seed))
    state, info = _state_for(sc, args.strict or sc.strict)
    w.real("mask_phase", info["mask"].phase, sc.grid, kernel_check=info["kernel_check"])
    write_state(w, state)
    write_observables(w, state, sc.observables, sc.imaging)
    if sc.camera is not None:
        mseed = seed if args.seed is not None else int(sc.measurement.get("seed", seed))
        run_measurement(w, sc, state, mseed)


def cmd_rowmap(args, sc: Scenario) -> None:
    seed = sc.seed if args.seed is None else args.seed
    w = Writer(args.out or sc.output_dir, sc.formats, sc.preview_scale, _context(sc, seed))
    state, _ = _state_for(sc, args.strict or sc.strict)
    write_observables(w, state, ["row_map"], sc.imaging)


def cmd_sample(args, sc: Scenario) -> None:
    if sc.camera is None:
        raise ConfigError("scenario has no measurement section")
    seed = sc.seed if args.seed is None else args.seed
    mseed = seed if args.seed is not None else int(sc.measurement.get("seed", seed))
    w = Writer(args.out or sc.output_dir, sc.formats, sc.preview_scale, _context(sc, mseed))
    state, _ = _state_for(sc, args.strict or sc.strict)
    run_measurement(w, sc, state, mseed)


def cmd_tailor(args, sc: Scenario) -> None:
    if not sc.tailor:
        raise ConfigError("scenario has no tailor section")
    seed = sc.seed if args.seed is None else args.seed
    w = Writer(args.out or sc.output_dir, sc.formats, sc.preview_scale, _context(sc, seed))
    target = sc.tailor_target()
    res = tailor_pump_to_target(target, sc.pump, sc.tailor.get("iterations", 50), seed)
    w.real("tailored_mask", res.mask.phase, sc.grid, residual=res.residual)
    achieved = forward_sum_projection(sc.pump, res.mask)
    w.real("tailor_target", target.values, target.grid)
    w.real("tailored_sum_projection", achieved.values, achieved.grid, residual=res.residual)
    if "csv" in sc.formats:
        write_csv(w.out / "tailor_history.csv", ["iteration", "residual"],
                  [np.arange(1, res.history.size + 1), res.history])
        w.written.append("tailor_history.csv")


def cmd_project(args) -> None:
    state = load_state(Path(args.state))
    which = args.observables or ["sum_projection", "minus_projection", "row_map", "intensity"]
    w = Writer(Path(args.out or args.state), args.formats, args.scale,
               {"source_state": str(args.state), "versions": {"pumpshaping": __version__, "numpy": np.__version__}})
    write_observables(w, state, which)


def cmd_preview(args) -> None:
    values = load_field(args.input)
    if not isinstance(values, np.ndarray) or np.iscomplexobj(values):
        raise FormatError("preview needs a real field (BPR1)")
    out = args.out or str(Path(args.input).with_suffix(".pgm"))
    render_preview(np.clip(values, 0.0, None), out, args.scale)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pumpshaping", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def scenario_cmd(name, help_):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", required=True, help="scenario JSON file")
        s.add_argument("--out", help="output directory (overrides the config)")
        s.add_argument("--seed", type=int, help="override the scenario seed")
        s.add_argument("--strict", action="store_true", help="fail when phase matching blocks the pump")
        return s

    scenario_cmd("simulate", "full pipeline: pump, state, observables, optional measurement")
    scenario_cmd("rowmap", "symmetric-row correlation map and its ridges")
    scenario_cmd("sample", "photon-counting measurement chain")
    scenario_cmd("tailor", "phase mask for a target sum-coordinate distribution")

    pr = sub.add_parser("project", help="observables from a saved state directory")
    pr.add_argument("--state", required=True)
    pr.add_argument("--out")
    pr.add_argument("--observables", nargs="+",
                    choices=["sum_projection", "minus_projection", "row_map", "intensity", "near_field"])
    pr.add_argument("--formats", nargs="+", default=["binary", "pgm"], choices=["binary", "pgm", "csv"])
    pr.add_argument("--scale", default="linear", choices=["linear", "log"])

    pv = sub.add_parser("preview", help="render a BPR1 file as a PGM image")
    pv.add_argument("--input", required=True)
    pv.add_argument("--out")
    pv.add_argument("--scale", default="linear", choices=["linear", "log"])
    return p


_SCENARIO_COMMANDS = {"simulate": cmd_simulate, "rowmap": cmd_rowmap, "sample": cmd_sample, "tailor": cmd_tailor}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    t0 = time.perf_counter()
    try:
        if args.command in _SCENARIO_COMMANDS:
            if args.seed is not None and args.seed < 0:
                raise ConfigError("seed must be non-negative")
            sc = load_config(args.config)
            _SCENARIO_COMMANDS[args.command](args, sc)
            out = Path(args.out or sc.output_dir)
        elif args.command == "project":
            cmd_project(args)
            out = Path(args.out or args.state)
        else:
            cmd_preview(args)
            out = None
    except ConfigError as exc:
        log.error("configuration: %s", exc)
        return EXIT_CONFIG
    except PreconditionError as exc:
        log.error("precondition: %s", exc)
        return EXIT_NUMERICAL
    except (OSError, FormatError) as exc:
        log.error("i/o: %s", exc)
        return EXIT_IO
    except ValueError as exc:
        log.error("numerical precondition: %s", exc)
        return EXIT_NUMERICAL
    if out is not None:
        # wall time is kept apart from the sidecars so they stay byte-reproducible
        try:
            write_json(out / "timing.json", {"command": args.command, "wall_time_s": time.perf_counter() - t0})
        except OSError as exc:
            log.error("i/o: %s", exc)
            return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
