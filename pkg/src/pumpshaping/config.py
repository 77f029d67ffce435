"""Scenario configuration: JSON schema validation plus module precondition checks.

Everything that can be checked without running the pipeline is checked
here, so an invalid scenario fails before any computation or file output.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .fourier import TWO_PI, Domain, Grid2D, RealField2D, conjugate_grid, make_grid
from .io import load_field
from .measurement import CameraSpec, Observable
from .observables import ImagingConfig
from .pump import (
    MaskKind,
    PumpSpec,
    SlmMask,
    axicon_mask,
    checkerboard_mask,
    custom_mask,
    flat_mask,
    random_mask,
    ring_fourier_bessel_mask,
)
from .state import CrystalSpec

SCHEMA_VERSION = 1

_MASK_KEYS = {
    MaskKind.FLAT: set(),
    MaskKind.AXICON: {"k_r", "k_r_bins"},
    MaskKind.CHECKERBOARD: {"tile_size", "depth"},
    MaskKind.RANDOM: {"seed", "correlation_length"},
    MaskKind.RING_FOURIER_BESSEL: {"k_r", "k_r_bins", "width", "focal", "period"},
    MaskKind.CUSTOM: {"path"},
}


class ConfigError(ValueError):
    """Scenario rejected by the schema or by a module precondition."""


def load_schema() -> dict:
    text = resources.files("pumpshaping").joinpath("schema/scenario.schema.json").read_text()
    return json.loads(text)


@dataclass(frozen=True)
class Scenario:
    raw: dict
    base_dir: Path
    grid: Grid2D
    pump: PumpSpec
    crystal: CrystalSpec
    imaging: ImagingConfig | None
    observables: tuple[str, ...]
    output_dir: Path
    formats: tuple[str, ...]
    preview_scale: str
    seed: int
    strict: bool
    camera: CameraSpec | None = None
    measurement: dict = field(default_factory=dict)
    tailor: dict = field(default_factory=dict)

    @property
    def name(self) -> str:
        return self.raw.get("name", "scenario")

    def mask(self) -> SlmMask:
        return build_mask(self.raw["pump"]["mask"], self.grid, self.pump, self.base_dir)

    def tailor_target(self) -> RealField2D:
        return build_target(self.tailor["target"], self.grid, self.base_dir)


def _k_r(params: dict, grid: Grid2D) -> float:
    if ("k_r" in params) == ("k_r_bins" in params):
        raise ConfigError("give exactly one of k_r (rad/m) or k_r_bins")
    if "k_r" in params:
        return float(params["k_r"])
    return float(params["k_r_bins"]) * TWO_PI / grid.extent


def build_mask(params: dict, grid: Grid2D, pump: PumpSpec, base_dir: Path) -> SlmMask:
    kind = MaskKind(params["kind"])
    extra = set(params) - {"kind"} - _MASK_KEYS[kind]
    if extra:
        raise ConfigError(f"{kind.value} mask does not take {sorted(extra)}")
    try:
        if kind is MaskKind.FLAT:
            return flat_mask(grid)
        if kind is MaskKind.AXICON:
            return axicon_mask(grid, _k_r(params, grid))
        if kind is MaskKind.CHECKERBOARD:
            return checkerboard_mask(grid, params["tile_size"], params["depth"])
        if kind is MaskKind.RANDOM:
            return random_mask(grid, params["seed"], params["correlation_length"])
        if kind is MaskKind.RING_FOURIER_BESSEL:
            return ring_fourier_bessel_mask(
                grid,
                _k_r(params, grid),
                params["width"],
                params.get("focal", 0.2),
                pump.wavelength,
                params.get("period", 4),
            )
        phase = load_field(base_dir / params["path"])
        if not isinstance(phase, np.ndarray) or np.iscomplexobj(phase):
            raise ConfigError("custom mask file must hold a real phase array")
        return custom_mask(grid, phase)
    except KeyError as exc:
        raise ConfigError(f"{kind.value} mask is missing parameter {exc.args[0]!r}") from None
    except (ValueError, OSError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid {kind.value} mask: {exc}") from None


def build_target(params: dict, grid: Grid2D, base_dir: Path) -> RealField2D:
    """Tailoring target on the pump's momentum grid, unit sum."""
    qgrid = conjugate_grid(grid)
    kind = params["kind"]
    try:
        if kind == "file":
            values = load_field(base_dir / params["path"])
        else:
            q = qgrid.radius()
            w = float(params["width"])
            r0 = float(params.get("radius", 0.0)) if kind == "ring" else 0.0
            values = np.exp(-(((q - r0) / w) ** 2))
        target = RealField2D(qgrid, values)
        return target.normalized()
    except KeyError as exc:
        raise ConfigError(f"{kind} target is missing parameter {exc.args[0]!r}") from None
    except (ValueError, OSError) as exc:
        raise ConfigError(f"invalid tailoring target: {exc}") from None


def parse_config(raw: dict, base_dir: Path | str = ".") -> Scenario:
    try:
        jsonschema.validate(raw, load_schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from None
    base_dir = Path(base_dir)
    try:
        grid = make_grid(raw["grid"]["n"], raw["grid"]["extent"], Domain.POSITION)
        p = raw["pump"]
        pump = PumpSpec(p.get("wavelength", 405e-9), p.get("waist", 0.25 * grid.extent), grid)
        c = raw.get("crystal", {})
        crystal = CrystalSpec(
            c.get("length", 2e-3), pump.wavelength, c.get("refractive_index", 1.0), c.get("model", "sinc")
        )
        im = raw.get("imaging")
        imaging = ImagingConfig(im["d"], im.get("mode", "far_field"), im.get("wavelength_dc", 810e-9)) if im else None
        m = raw.get("measurement", {})
        camera = None
        if m:
            # the camera samples the single-photon lattice, twice the pump grid size
            camera = CameraSpec(
                2 * grid.n,
                m.get("quantum_efficiency", 1.0),
                m.get("dark_count_prob", 0.0),
                m.get("pairs_per_frame_mean", 1.0),
            )
            Observable(m.get("observable", "row_map"))
    except (ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from None
    out = raw["output"]
    scenario = Scenario(
        raw=raw,
        base_dir=base_dir,
        grid=grid,
        pump=pump,
        crystal=crystal,
        imaging=imaging,
        observables=tuple(raw["observables"]),
        output_dir=base_dir / out["directory"],
        formats=tuple(out.get("formats", ["binary", "pgm"])),
        preview_scale=out.get("preview_scale", "linear"),
        seed=int(raw.get("seed", 0)),
        strict=bool(raw.get("strict", False)),
        camera=camera,
        measurement=dict(m),
        tailor=dict(raw.get("tailor", {})),
    )
    scenario.mask()
    if scenario.tailor:
        scenario.tailor_target()
    return scenario


def load_config(path) -> Scenario:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    return parse_config(raw, path.parent)
