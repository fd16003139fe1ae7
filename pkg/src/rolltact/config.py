"""Run configuration: strict JSON documents with canonical hashing.

A config file is a single JSON object with optional sections; every
omitted key takes a documented default, every unknown key is rejected,
and any file the config references must exist when the config loads.
The fully resolved configuration serializes back to a canonical
document whose SHA-256 identifies the run in reports.

The pose can be given inline (``theta_rad``/``d_mm``) or as a
``calibration_file`` produced by the calibrate subcommand; the two
forms are mutually exclusive.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

from .calibration import DetectParams, GridSpec
from .errors import ConfigInvalid
from .geometry import CameraIntrinsics, CylinderModel, ExtrinsicPose
from .localization import LocalizeParams

__all__ = [
    "RunConfig",
    "SimulateParams",
    "StitchParams",
    "default_config",
    "load_config",
    "config_from_dict",
]

_DEFAULT_TAPS = tuple(
    (x, angle)
    for angle in (-math.pi / 12, 0.0, math.pi / 12)
    for x in (-25.0, 0.0, 25.0)
)

# Three hand-roll speeds over the same traversal, slowest first.
_DEFAULT_DURATIONS = (("slow", 15.0), ("medium", 10.0), ("fast", 5.0))


@dataclass(frozen=True)
class StitchParams:
    """Map-assembly knobs surfaced in the config file."""

    patch_height: int = 70
    shift_min: int = -25
    shift_max: int = 25
    average_overlap: bool = False
    subpixel: bool = False

    @property
    def search_range(self) -> tuple[int, int]:
        return (self.shift_min, self.shift_max)


@dataclass(frozen=True)
class SimulateParams:
    """Synthetic-data generation knobs.

    The defaults describe a full pass over an 80 x 110 mm fabric patch.
    The traversal length is chosen so that the medium-speed sequence
    advances exactly 3 rows of image content per frame (span = 249 gaps
    * 3 px / (fx / radius) = 93.375 mm at the default camera and frame
    rate), which keeps integer shift accumulation drift-free end to
    end.  Placing the texture at y0 = -6 mm keeps the whole contact
    band on the texture over the traversal.  The reference image
    resolution matches the camera's scale at the contact line
    (fx / radius = 8 px/mm).
    """

    texture_width_mm: float = 80.0
    texture_height_mm: float = 110.0
    texture_pitch_mm: float = 0.25
    texture_y0_mm: float = -6.0
    texture_seed: int = 0
    span_mm: float = 93.375
    fps: float = 25.0
    durations_s: tuple[tuple[str, float], ...] = _DEFAULT_DURATIONS
    speed_jitter: float = 0.05
    noise_sigma: float = 0.0
    contact_halfwidth_mm: float = 5.0
    tap_radius_mm: float = 2.0
    taps: tuple[tuple[float, float], ...] = _DEFAULT_TAPS
    calib_frames: int = 10
    calib_span_mm: float = 10.0
    px_per_mm: float = 8.0


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved run configuration."""

    camera: CameraIntrinsics
    cylinder: CylinderModel
    pose: ExtrinsicPose | None
    calibration_file: Path | None
    grid: GridSpec
    detect: DetectParams
    localize: LocalizeParams
    stitch: StitchParams
    simulate: SimulateParams
    flip_u: bool = False
    flip_v: bool = False
    seed: int = 0

    def to_dict(self) -> dict:
        """Canonical fully-resolved document (defaults included)."""
        pose: dict
        if self.calibration_file is not None:
            pose = {"calibration_file": str(self.calibration_file)}
        else:
            pose = {"theta_rad": self.pose.theta, "d_mm": self.pose.d}
        return {
            "camera": {
                "fx": self.camera.fx, "fy": self.camera.fy,
                "u0": self.camera.u0, "v0": self.camera.v0,
                "width": self.camera.width, "height": self.camera.height,
            },
            "cylinder": {
                "radius_mm": self.cylinder.radius,
                "length_mm": self.cylinder.length,
            },
            "pose": pose,
            "grid": {
                "rows": self.grid.rows, "cols": self.grid.cols,
                "radius_mm": self.grid.radius_mm,
                "pitch_mm": self.grid.pitch_mm,
            },
            "detect": {
                "blur_sigma": self.detect.blur_sigma,
                "threshold": self.detect.threshold,
                "min_area": self.detect.min_area,
                "open_size": self.detect.open_size,
            },
            "localize": {
                "blur_sigma": self.localize.blur_sigma,
                "threshold": self.localize.threshold,
                "min_area": self.localize.min_area,
                "invert": self.localize.invert,
            },
            "stitch": {
                "patch_height": self.stitch.patch_height,
                "shift_min": self.stitch.shift_min,
                "shift_max": self.stitch.shift_max,
                "average_overlap": self.stitch.average_overlap,
                "subpixel": self.stitch.subpixel,
            },
            "simulate": {
                "texture_width_mm": self.simulate.texture_width_mm,
                "texture_height_mm": self.simulate.texture_height_mm,
                "texture_pitch_mm": self.simulate.texture_pitch_mm,
                "texture_y0_mm": self.simulate.texture_y0_mm,
                "texture_seed": self.simulate.texture_seed,
                "span_mm": self.simulate.span_mm,
                "fps": self.simulate.fps,
                "durations_s": {name: s for name, s in self.simulate.durations_s},
                "speed_jitter": self.simulate.speed_jitter,
                "noise_sigma": self.simulate.noise_sigma,
                "contact_halfwidth_mm": self.simulate.contact_halfwidth_mm,
                "tap_radius_mm": self.simulate.tap_radius_mm,
                "taps": [[x, a] for x, a in self.simulate.taps],
                "calib_frames": self.simulate.calib_frames,
                "calib_span_mm": self.simulate.calib_span_mm,
                "px_per_mm": self.simulate.px_per_mm,
            },
            "flip_u": self.flip_u,
            "flip_v": self.flip_v,
            "seed": self.seed,
        }

    def sha256(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True,
                               separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# parsing helpers
# ---------------------------------------------------------------------------

class _Section:
    """One JSON object with typed key extraction and leftover detection."""

    def __init__(self, name: str, data):
        if not isinstance(data, dict):
            raise ConfigInvalid(f"section {name!r} must be a JSON object")
        self.name = name
        self.data = dict(data)

    def _get(self, key, default):
        return self.data.pop(key, default)

    def number(self, key, default, *, allow_none=False):
        value = self._get(key, default)
        if value is None and allow_none:
            return None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigInvalid(f"{self.name}.{key} must be a number")
        return float(value)

    def integer(self, key, default):
        value = self._get(key, default)
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigInvalid(f"{self.name}.{key} must be an integer")
        return value

    def boolean(self, key, default):
        value = self._get(key, default)
        if not isinstance(value, bool):
            raise ConfigInvalid(f"{self.name}.{key} must be true or false")
        return value

    def raw(self, key, default):
        return self._get(key, default)

    def finish(self):
        if self.data:
            extra = ", ".join(sorted(self.data))
            raise ConfigInvalid(f"unknown key(s) in {self.name!r}: {extra}")


def _require(condition: bool, message: str):
    if not condition:
        raise ConfigInvalid(message)


def _parse_durations(name: str, value) -> tuple[tuple[str, float], ...]:
    if not isinstance(value, dict) or not value:
        raise ConfigInvalid(f"{name} must be a non-empty JSON object")
    out = []
    for key, seconds in value.items():
        _require(isinstance(key, str) and key
                 and all(c.isalnum() or c == "_" for c in key),
                 f"{name} names must be alphanumeric, got {key!r}")
        _require(isinstance(seconds, (int, float))
                 and not isinstance(seconds, bool) and seconds > 0,
                 f"{name}[{key!r}] must be a positive duration")
        out.append((key, float(seconds)))
    return tuple(out)


def _parse_taps(name: str, value) -> tuple[tuple[float, float], ...]:
    if not isinstance(value, list):
        raise ConfigInvalid(f"{name} must be a list of [x_mm, angle_rad] pairs")
    out = []
    for item in value:
        ok = (isinstance(item, list) and len(item) == 2
              and all(isinstance(v, (int, float)) and not isinstance(v, bool)
                      for v in item))
        _require(ok, f"{name} entries must be [x_mm, angle_rad] pairs")
        out.append((float(item[0]), float(item[1])))
    return tuple(out)


def config_from_dict(doc: dict, base_dir: Path | str = ".") -> RunConfig:
    """Build a validated RunConfig from a parsed JSON document.

    Relative file references resolve against ``base_dir`` (normally the
    config file's directory).

    Raises ConfigInvalid on unknown keys, wrong types, out-of-range
    values, or missing referenced files.
    """
    base = Path(base_dir)
    if not isinstance(doc, dict):
        raise ConfigInvalid("config must be a JSON object")
    top = _Section("config", doc)

    cam = _Section("camera", top.raw("camera", {}))
    try:
        camera = CameraIntrinsics(
            fx=cam.number("fx", 400.0), fy=cam.number("fy", 400.0),
            u0=cam.number("u0", 320.0), v0=cam.number("v0", 240.0),
            width=cam.integer("width", 640), height=cam.integer("height", 480),
        )
    except ValueError as exc:
        raise ConfigInvalid(f"camera: {exc}") from exc
    cam.finish()

    cyl_sec = _Section("cylinder", top.raw("cylinder", {}))
    try:
        cylinder = CylinderModel(
            radius=cyl_sec.number("radius_mm", 50.0),
            length=cyl_sec.number("length_mm", 100.0),
        )
    except ValueError as exc:
        raise ConfigInvalid(f"cylinder: {exc}") from exc
    cyl_sec.finish()

    pose_sec = _Section("pose", top.raw("pose", {}))
    calib_ref = pose_sec.raw("calibration_file", None)
    pose: ExtrinsicPose | None
    calibration_file: Path | None
    if calib_ref is not None:
        _require(isinstance(calib_ref, str) and calib_ref,
                 "pose.calibration_file must be a path string")
        _require("theta_rad" not in pose_sec.data
                 and "d_mm" not in pose_sec.data,
                 "pose: give either theta_rad/d_mm or calibration_file, "
                 "not both")
        calibration_file = base / calib_ref
        _require(calibration_file.is_file(),
                 f"pose.calibration_file not found: {calibration_file}")
        pose = None
    else:
        try:
            pose = ExtrinsicPose(
                theta=pose_sec.number("theta_rad", 0.0),
                d=pose_sec.number("d_mm", 0.0),
            )
        except ValueError as exc:
            raise ConfigInvalid(f"pose: {exc}") from exc
        _require(abs(pose.d) < cylinder.radius,
                 "pose.d_mm must be smaller in magnitude than the "
                 "cylinder radius")
        calibration_file = None
    pose_sec.finish()

    grid_sec = _Section("grid", top.raw("grid", {}))
    try:
        grid = GridSpec(
            rows=grid_sec.integer("rows", 2),
            cols=grid_sec.integer("cols", 5),
            radius_mm=grid_sec.number("radius_mm", 1.0),
            pitch_mm=grid_sec.number("pitch_mm", 4.0),
        )
    except ValueError as exc:
        raise ConfigInvalid(f"grid: {exc}") from exc
    grid_sec.finish()

    det = _Section("detect", top.raw("detect", {}))
    detect = DetectParams(
        blur_sigma=det.number("blur_sigma", 2.0),
        threshold=det.number("threshold", None, allow_none=True),
        min_area=det.integer("min_area", 20),
        open_size=det.integer("open_size", 3),
    )
    det.finish()
    _require(detect.blur_sigma >= 0, "detect.blur_sigma must be >= 0")
    _require(detect.min_area >= 1, "detect.min_area must be >= 1")
    _require(detect.open_size >= 1, "detect.open_size must be >= 1")

    loc = _Section("localize", top.raw("localize", {}))
    localize = LocalizeParams(
        blur_sigma=loc.number("blur_sigma", 2.0),
        threshold=loc.number("threshold", None, allow_none=True),
        min_area=loc.integer("min_area", 30),
        invert=loc.boolean("invert", False),
    )
    loc.finish()
    _require(localize.blur_sigma >= 0, "localize.blur_sigma must be >= 0")
    _require(localize.min_area >= 1, "localize.min_area must be >= 1")

    sti = _Section("stitch", top.raw("stitch", {}))
    stitch = StitchParams(
        patch_height=sti.integer("patch_height", 70),
        shift_min=sti.integer("shift_min", -25),
        shift_max=sti.integer("shift_max", 25),
        average_overlap=sti.boolean("average_overlap", False),
        subpixel=sti.boolean("subpixel", False),
    )
    sti.finish()
    _require(1 <= stitch.patch_height <= camera.height,
             "stitch.patch_height must fit the frame height")
    _require(stitch.shift_min <= stitch.shift_max,
             "stitch.shift_min must not exceed stitch.shift_max")

    sim = _Section("simulate", top.raw("simulate", {}))
    simulate = SimulateParams(
        texture_width_mm=sim.number("texture_width_mm", 80.0),
        texture_height_mm=sim.number("texture_height_mm", 110.0),
        texture_pitch_mm=sim.number("texture_pitch_mm", 0.25),
        texture_y0_mm=sim.number("texture_y0_mm", -6.0),
        texture_seed=sim.integer("texture_seed", 0),
        span_mm=sim.number("span_mm", 93.375),
        fps=sim.number("fps", 25.0),
        durations_s=_parse_durations(
            "simulate.durations_s",
            sim.raw("durations_s", dict(_DEFAULT_DURATIONS))),
        speed_jitter=sim.number("speed_jitter", 0.05),
        noise_sigma=sim.number("noise_sigma", 0.0),
        contact_halfwidth_mm=sim.number("contact_halfwidth_mm", 5.0),
        tap_radius_mm=sim.number("tap_radius_mm", 2.0),
        taps=_parse_taps("simulate.taps",
                         sim.raw("taps", [[x, a] for x, a in _DEFAULT_TAPS])),
        calib_frames=sim.integer("calib_frames", 10),
        calib_span_mm=sim.number("calib_span_mm", 10.0),
        px_per_mm=sim.number("px_per_mm", 8.0),
    )
    sim.finish()
    _require(simulate.texture_width_mm > 0 and simulate.texture_height_mm > 0,
             "simulate texture extents must be positive")
    _require(simulate.texture_pitch_mm > 0,
             "simulate.texture_pitch_mm must be positive")
    _require(simulate.span_mm > 0, "simulate.span_mm must be positive")
    _require(simulate.fps > 0, "simulate.fps must be positive")
    _require(0.0 <= simulate.speed_jitter < 1.0,
             "simulate.speed_jitter must lie in [0, 1)")
    _require(simulate.noise_sigma >= 0, "simulate.noise_sigma must be >= 0")
    _require(simulate.contact_halfwidth_mm > 0,
             "simulate.contact_halfwidth_mm must be positive")
    _require(simulate.tap_radius_mm > 0,
             "simulate.tap_radius_mm must be positive")
    _require(simulate.calib_frames >= 1,
             "simulate.calib_frames must be >= 1")
    _require(simulate.calib_span_mm > 0,
             "simulate.calib_span_mm must be positive")
    _require(simulate.px_per_mm > 0, "simulate.px_per_mm must be positive")

    flip_u = top.boolean("flip_u", False)
    flip_v = top.boolean("flip_v", False)
    seed = top.integer("seed", 0)
    _require(seed >= 0, "seed must be >= 0")
    top.finish()

    return RunConfig(
        camera=camera, cylinder=cylinder, pose=pose,
        calibration_file=calibration_file, grid=grid, detect=detect,
        localize=localize, stitch=stitch, simulate=simulate,
        flip_u=flip_u, flip_v=flip_v, seed=seed,
    )


def load_config(path: str | Path | None) -> RunConfig:
    """Load a JSON config file, or the all-defaults config when ``path`` is None."""
    if path is None:
        return config_from_dict({}, Path("."))
    p = Path(path)
    if not p.is_file():
        raise ConfigInvalid(f"config file not found: {p}")
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"config is not valid JSON: {exc}") from exc
    return config_from_dict(doc, p.parent)


def default_config() -> RunConfig:
    return load_config(None)
