"""Synthetic sensor: renders tactile frames with exact ground truth.

The simulator draws what the in-shell camera would see while the
cylinder rolls over a flat scene.  It is intensity-based: surface
material in contact renders bright (foreground span 80..255), the rest
of the frame stays at a dark background level (20).  Two scene kinds are
supported:

* ``texture``          -- a flat grayscale material patch (fabric-like),
* ``hemisphere_grid``  -- a calibration frame carrying a marker grid.

Scene coordinates are millimetres: ``x`` along the cylinder axis,
``y`` along the rolling direction.  Pure rolling maps the shell's
circumferential arc onto the scene, so the shell point at angle ``phi``
touches scene row ``contact_y + radius * phi`` when the contact line is
at ``contact_y``; the same map drives rendering inside the contact band.

Every frame can carry a :class:`FrameTruth` record with the exact pose,
contact position, inter-frame row shift, and marker positions, which
downstream tests use as ground truth.  Rendering is deterministic:
identical scene, trajectory and seed give bit-identical frames.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .calibration import GridSpec
from .errors import SceneExhausted
from .geometry import (
    CameraIntrinsics,
    CylinderModel,
    ExtrinsicPose,
    PixelPoint,
    SurfacePoint,
    lift_to_surface,
    project,
)
from .imageops import bilinear_sample, round_half_up, to_uint8

__all__ = [
    "FrameTruth",
    "RollState",
    "SimScene",
    "TactileFrame",
    "make_fabric_texture",
    "make_roll_trajectory",
    "render_frame",
    "render_reference",
    "render_roll_sequence",
    "render_taps",
]

BACKGROUND_LEVEL = 20.0
FOREGROUND_LO = 80.0
FOREGROUND_HI = 255.0

# contact_y must equal radius * roll_angle to this tolerance (mm).
_ROLL_CONSISTENCY_TOL = 1e-6


# ===========================================================================
# value types
# ===========================================================================

@dataclass(frozen=True, eq=False)
class SimScene:
    """A flat scene the sensor rolls over.

    ``origin_x_mm`` is the scene x-coordinate that touches the cylinder's
    axial center (world ``Xw == 0``); ``y0_mm`` is the scene y-coordinate
    of the texture's first row edge.  For marker scenes the grid is
    described by its :class:`GridSpec` plus the scene position of the
    grid center.
    """

    kind: str
    texture: np.ndarray | None = None
    pitch_mm: float = 0.25
    origin_x_mm: float = 0.0
    y0_mm: float = 0.0
    grid: GridSpec | None = None
    grid_center_x_mm: float = 0.0
    grid_center_y_mm: float = 0.0

    def __post_init__(self):
        if self.kind not in ("texture", "hemisphere_grid"):
            raise ValueError(f"unknown scene kind {self.kind!r}")
        if self.kind == "texture":
            if self.texture is None or np.asarray(self.texture).ndim != 2:
                raise ValueError("texture scenes need a 2-D texture array")
            if self.pitch_mm <= 0:
                raise ValueError("texture pitch must be positive")
        if self.kind == "hemisphere_grid" and self.grid is None:
            raise ValueError("hemisphere_grid scenes need a GridSpec")

    # -- construction helpers ------------------------------------------------

    @staticmethod
    def from_texture(texture: np.ndarray, pitch_mm: float, *,
                     origin_x_mm: float | None = None, y0_mm: float = 0.0) -> "SimScene":
        """Texture scene; by default the axial center sits mid-texture."""
        tex = np.asarray(texture, dtype=np.float64)
        if origin_x_mm is None:
            origin_x_mm = tex.shape[1] * pitch_mm / 2.0
        return SimScene(kind="texture", texture=tex, pitch_mm=pitch_mm,
                        origin_x_mm=origin_x_mm, y0_mm=y0_mm)

    @staticmethod
    def from_grid(grid: GridSpec, *, center_x_mm: float = 0.0,
                  center_y_mm: float = 0.0) -> "SimScene":
        """Marker-grid scene with the grid center at the given scene position."""
        return SimScene(kind="hemisphere_grid", grid=grid,
                        grid_center_x_mm=center_x_mm, grid_center_y_mm=center_y_mm)

    # -- extents ---------------------------------------------------------------

    @property
    def extent_x_mm(self) -> float:
        if self.kind == "texture":
            return self.texture.shape[1] * self.pitch_mm
        return (self.grid.cols - 1) * self.grid.pitch_mm + 2 * self.grid.radius_mm

    @property
    def extent_y_mm(self) -> float:
        if self.kind == "texture":
            return self.texture.shape[0] * self.pitch_mm
        return (self.grid.rows - 1) * self.grid.pitch_mm + 2 * self.grid.radius_mm

    def marker_scene_positions(self) -> list[tuple[float, float]]:
        """Scene (x, y) of each marker apex, row-major."""
        if self.grid is None:
            return []
        g = self.grid
        out = []
        for rr in range(g.rows):
            sy = self.grid_center_y_mm + (rr - (g.rows - 1) / 2.0) * g.pitch_mm
            for cc in range(g.cols):
                sx = self.grid_center_x_mm + (cc - (g.cols - 1) / 2.0) * g.pitch_mm
                out.append((sx, sy))
        return out


@dataclass(frozen=True)
class RollState:
    """One trajectory sample: the contact line position and matching roll angle.

    Pure rolling without slip ties the two together: ``contact_y``
    equals ``radius * roll_angle`` (the roll starts at scene y = 0).
    """

    contact_y: float
    roll_angle: float
    pose: ExtrinsicPose
    frame_index: int = 0


@dataclass(frozen=True)
class FrameTruth:
    """Exact per-frame ground truth recorded by the simulator."""

    frame_index: int
    theta: float
    d: float
    contact_y: float
    dy_px: float | None = None          # content row shift vs. previous frame
    dy_int: int | None = None           # same, rounded to the nearest integer
    band_row_min: int | None = None
    band_row_max: int | None = None
    blob_px: tuple[PixelPoint, ...] = ()
    blob_world: tuple[SurfacePoint, ...] = ()


@dataclass(frozen=True, eq=False)
class TactileFrame:
    """A rendered sensor frame plus optional ground truth."""

    pixels: np.ndarray
    index: int = 0
    truth: FrameTruth | None = None


# ===========================================================================
# per-pose pixel geometry (cached)
# ===========================================================================

class _RowGeometry:
    """Per-row unprojection of a raster: phi/lam depend only on the row."""

    def __init__(self, k: CameraIntrinsics, pose: ExtrinsicPose, cyl: CylinderModel):
        from .geometry import unproject_many

        vs = np.arange(k.height, dtype=np.float64)
        us = np.full(k.height, k.u0)
        _, phi, lam, valid = unproject_many(us, vs, k, pose, cyl)
        self.phi = phi                      # (H,) circumferential angle per row
        self.lam = lam                      # (H,) depth per row
        self.valid = valid
        self.arc = cyl.radius * phi         # (H,) arc offset from the contact line
        self.du = (np.arange(k.width, dtype=np.float64) - k.u0) / k.fx  # (W,)

    def world_x(self, rows: np.ndarray) -> np.ndarray:
        """Axial world coordinate for every pixel of the given rows: (len(rows), W)."""
        return self.lam[rows, None] * self.du[None, :]


_GEOMETRY_CACHE: dict[tuple, _RowGeometry] = {}


def _row_geometry(k: CameraIntrinsics, pose: ExtrinsicPose, cyl: CylinderModel) -> _RowGeometry:
    key = (k, pose, cyl.radius)
    if key not in _GEOMETRY_CACHE:
        if len(_GEOMETRY_CACHE) > 8:
            _GEOMETRY_CACHE.clear()
        _GEOMETRY_CACHE[key] = _RowGeometry(k, pose, cyl)
    return _GEOMETRY_CACHE[key]


# ===========================================================================
# textures and trajectories
# ===========================================================================

def make_fabric_texture(
    width_mm: float = 80.0,
    height_mm: float = 130.0,
    pitch_mm: float = 0.25,
    *,
    seed: int = 0,
    smooth_mm: float = 1.2,
) -> np.ndarray:
    """Random fabric-like texture in [0, 1], smoothed to ~millimetre grain."""
    from scipy import ndimage

    rng = np.random.default_rng(seed)
    rows = int(round(height_mm / pitch_mm))
    cols = int(round(width_mm / pitch_mm))
    noise = rng.standard_normal((rows, cols))
    smooth = ndimage.gaussian_filter(noise, sigma=smooth_mm / pitch_mm, mode="reflect")
    lo, hi = np.percentile(smooth, [1.0, 99.0])
    return np.clip((smooth - lo) / (hi - lo), 0.0, 1.0)


def make_roll_trajectory(
    start_y: float,
    end_y: float,
    n_frames: int,
    cyl: CylinderModel,
    pose: ExtrinsicPose = ExtrinsicPose(0.0, 0.0),
    *,
    speed_jitter: float = 0.0,
    seed: int = 0,
) -> list[RollState]:
    """Contact-line positions for a monotone roll from start_y to end_y.

    ``speed_jitter`` perturbs each inter-frame step by a uniform factor
    in ``[1 - j, 1 + j]`` (steps are renormalized so the final frame
    lands exactly on ``end_y``), mimicking hand-roll speed variation.
    """
    if n_frames < 1:
        raise ValueError("trajectory needs at least one frame")
    if not 0.0 <= speed_jitter < 1.0:
        raise ValueError("speed_jitter must lie in [0, 1)")
    if n_frames == 1:
        ys = np.array([start_y])
    else:
        steps = np.ones(n_frames - 1)
        if speed_jitter > 0.0:
            rng = np.random.default_rng(seed)
            steps *= rng.uniform(1.0 - speed_jitter, 1.0 + speed_jitter, n_frames - 1)
        steps *= (end_y - start_y) / steps.sum()
        ys = start_y + np.concatenate([[0.0], np.cumsum(steps)])
        ys[-1] = end_y
    return [
        RollState(contact_y=float(y), roll_angle=float(y / cyl.radius),
                  pose=pose, frame_index=i)
        for i, y in enumerate(ys)
    ]


# ===========================================================================
# rendering
# ===========================================================================

def _base_canvas(k: CameraIntrinsics) -> np.ndarray:
    return np.full((k.height, k.width), BACKGROUND_LEVEL, dtype=np.float64)


def _finalize(canvas: np.ndarray, index: int, truth: FrameTruth | None,
              noise_sigma: float, rng: np.random.Generator | None) -> TactileFrame:
    if noise_sigma > 0.0:
        if rng is None:
            rng = np.random.default_rng(0)
        canvas = canvas + rng.normal(0.0, noise_sigma, canvas.shape)
    return TactileFrame(pixels=to_uint8(canvas), index=index, truth=truth)


def _render_blobs(
    canvas: np.ndarray,
    centers: list[tuple[float, float]],   # (world x, circumferential angle)
    radius_mm: float,
    geo: _RowGeometry,
    cyl: CylinderModel,
) -> None:
    """Paint dome-profile blobs (bright where material protrudes) in place."""
    r = cyl.radius
    for xb, phib in centers:
        if not abs(phib) < math.pi / 2:
            continue
        arc_dist = r * (geo.phi - phib)
        rows = np.nonzero(geo.valid & (np.abs(arc_dist) <= radius_mm))[0]
        if rows.size == 0:
            continue
        xs = geo.world_x(rows)
        d2 = (xs - xb) ** 2 + arc_dist[rows, None] ** 2
        dome = np.sqrt(np.clip(1.0 - d2 / (radius_mm * radius_mm), 0.0, None))
        vals = FOREGROUND_LO + dome * (FOREGROUND_HI - FOREGROUND_LO)
        sub = canvas[rows, :]
        canvas[rows, :] = np.where(dome > 0.0, np.maximum(sub, vals), sub)


def render_frame(
    scene: SimScene,
    state: RollState,
    k: CameraIntrinsics,
    cyl: CylinderModel,
    *,
    contact_halfwidth_mm: float = 5.0,
    noise_sigma: float = 0.0,
    rng: np.random.Generator | None = None,
    with_truth: bool = True,
) -> TactileFrame:
    """Render one frame of the scene at the given roll state.

    Texture scenes paint the material inside the contact band (arc
    distance to the contact line at most ``contact_halfwidth_mm``);
    marker scenes paint each hemisphere as a dome-shaded blob.  Additive
    Gaussian pixel noise is applied when ``noise_sigma > 0``.

    Raises
    ------
    SceneExhausted
        If a texture scene's contact line leaves the texture extent.
    ValueError
        If the roll state is kinematically inconsistent (``contact_y``
        not matching ``radius * roll_angle``).
    """
    if abs(state.contact_y - cyl.radius * state.roll_angle) > _ROLL_CONSISTENCY_TOL:
        raise ValueError(
            f"roll state violates pure rolling: contact_y={state.contact_y}, "
            f"radius*roll_angle={cyl.radius * state.roll_angle}"
        )
    geo = _row_geometry(k, state.pose, cyl)
    canvas = _base_canvas(k)
    truth: FrameTruth | None = None

    if scene.kind == "texture":
        y_lo, y_hi = scene.y0_mm, scene.y0_mm + scene.extent_y_mm
        if not (y_lo <= state.contact_y <= y_hi):
            raise SceneExhausted(
                f"contact line at y={state.contact_y:.3f} mm is outside the "
                f"scene extent [{y_lo:.3f}, {y_hi:.3f}] mm"
            )
        band = geo.valid & (np.abs(geo.arc) <= contact_halfwidth_mm)
        rows = np.nonzero(band)[0]
        if rows.size:
            tex = scene.texture
            sy = state.contact_y + geo.arc[rows]                # (n,)
            sx = geo.world_x(rows) + scene.origin_x_mm          # (n, W)
            tr = (sy[:, None] - scene.y0_mm) / scene.pitch_mm - 0.5
            tc = sx / scene.pitch_mm - 0.5
            tr = np.broadcast_to(tr, tc.shape)
            inside = (
                (tr >= -0.5) & (tr <= tex.shape[0] - 0.5)
                & (tc >= -0.5) & (tc <= tex.shape[1] - 0.5)
            )
            vals = bilinear_sample(tex, tr, tc, mode="clamp")
            shade = FOREGROUND_LO + vals * (FOREGROUND_HI - FOREGROUND_LO)
            canvas[rows, :] = np.where(inside, shade, BACKGROUND_LEVEL)
        if with_truth:
            band_rows = np.nonzero(band)[0]
            truth = FrameTruth(
                frame_index=state.frame_index,
                theta=state.pose.theta, d=state.pose.d,
                contact_y=state.contact_y,
                band_row_min=int(band_rows[0]) if band_rows.size else None,
                band_row_max=int(band_rows[-1]) if band_rows.size else None,
            )
    else:
        centers = []
        world_pts = []
        pix_pts = []
        for sx, sy in scene.marker_scene_positions():
            phib = (sy - state.contact_y) / cyl.radius
            xb = sx - scene.origin_x_mm
            centers.append((xb, phib))
            if abs(phib) < math.pi / 2:
                p = lift_to_surface(xb, phib, cyl)
                px, _ = project(p, k, state.pose)
                world_pts.append(p)
                pix_pts.append(px)
        _render_blobs(canvas, centers, scene.grid.radius_mm, geo, cyl)
        if with_truth:
            truth = FrameTruth(
                frame_index=state.frame_index,
                theta=state.pose.theta, d=state.pose.d,
                contact_y=state.contact_y,
                blob_px=tuple(pix_pts),
                blob_world=tuple(world_pts),
            )

    return _finalize(canvas, state.frame_index, truth, noise_sigma, rng)


def render_taps(
    contacts: list[tuple[float, float]],
    k: CameraIntrinsics,
    pose: ExtrinsicPose,
    cyl: CylinderModel,
    *,
    tap_radius_mm: float = 2.0,
    noise_sigma: float = 0.0,
    rng: np.random.Generator | None = None,
    frame_index: int = 0,
) -> TactileFrame:
    """Render point contacts pressed onto the shell, no rolling involved.

    ``contacts`` lists (axial position mm, circumferential angle rad)
    pairs; each renders as a dome blob of ``tap_radius_mm``.  Ground
    truth carries the exact contact points and their projections.
    """
    geo = _row_geometry(k, pose, cyl)
    canvas = _base_canvas(k)
    _render_blobs(canvas, contacts, tap_radius_mm, geo, cyl)
    world_pts = []
    pix_pts = []
    for x_mm, angle in contacts:
        p = lift_to_surface(x_mm, angle, cyl)
        px, _ = project(p, k, pose)
        world_pts.append(p)
        pix_pts.append(px)
    truth = FrameTruth(
        frame_index=frame_index, theta=pose.theta, d=pose.d,
        contact_y=0.0, blob_px=tuple(pix_pts), blob_world=tuple(world_pts),
    )
    return _finalize(canvas, frame_index, truth, noise_sigma, rng)


def content_row_shift(
    prev_contact_y: float,
    cur_contact_y: float,
    k: CameraIntrinsics,
    pose: ExtrinsicPose,
    cyl: CylinderModel,
) -> float:
    """Exact sub-pixel row shift of scene content between two contact positions.

    The material feature under the contact line of the earlier frame
    reappears in the later frame at circumferential angle
    ``(prev - cur) / radius``; the shift is the difference of the two
    projected rows.  Forward motion gives negative values (content moves
    up the image).
    """
    phi = (prev_contact_y - cur_contact_y) / cyl.radius
    v_then = project(lift_to_surface(0.0, 0.0, cyl), k, pose)[0].v
    v_now = project(lift_to_surface(0.0, phi, cyl), k, pose)[0].v
    return v_now - v_then


def render_roll_sequence(
    scene: SimScene,
    trajectory: list[RollState],
    k: CameraIntrinsics,
    cyl: CylinderModel,
    *,
    contact_halfwidth_mm: float = 5.0,
    noise_sigma: float = 0.0,
    seed: int = 0,
) -> list[TactileFrame]:
    """Render a whole roll, annotating each frame with its ground truth.

    The trajectory must be monotone in ``contact_y``.  Frames after the
    first carry the exact (float) inter-frame content shift and its
    nearest-integer version.
    """
    ys = [s.contact_y for s in trajectory]
    diffs = np.diff(ys)
    if len(diffs) and not (np.all(diffs >= 0) or np.all(diffs <= 0)):
        raise ValueError("trajectory must be monotone in contact_y")

    rng = np.random.default_rng(seed) if noise_sigma > 0.0 else None
    frames: list[TactileFrame] = []
    for i, state in enumerate(trajectory):
        frame = render_frame(
            scene, state, k, cyl,
            contact_halfwidth_mm=contact_halfwidth_mm,
            noise_sigma=noise_sigma, rng=rng,
        )
        if i > 0 and frame.truth is not None:
            dy = content_row_shift(trajectory[i - 1].contact_y, state.contact_y,
                                   k, state.pose, cyl)
            frame = TactileFrame(
                pixels=frame.pixels, index=frame.index,
                truth=_with_shift(frame.truth, dy),
            )
        frames.append(frame)
    return frames


def _with_shift(truth: FrameTruth, dy: float) -> FrameTruth:
    return FrameTruth(
        frame_index=truth.frame_index, theta=truth.theta, d=truth.d,
        contact_y=truth.contact_y, dy_px=dy, dy_int=round_half_up(dy),
        band_row_min=truth.band_row_min, band_row_max=truth.band_row_max,
        blob_px=truth.blob_px, blob_world=truth.blob_world,
    )


def render_reference(
    scene: SimScene,
    y_min_mm: float,
    y_max_mm: float,
    px_per_mm: float,
) -> np.ndarray:
    """Flat rendering of a texture scene region with the sensor's shading.

    Samples the texture over scene y in [y_min, y_max] and the full x
    extent at ``px_per_mm``, applying the same foreground intensity span
    the sensor uses.  This is the ground-truth image a stitched map of
    the region should reproduce.
    """
    if scene.kind != "texture":
        raise ValueError("reference rendering is defined for texture scenes")
    rows = int(round((y_max_mm - y_min_mm) * px_per_mm))
    cols = int(round(scene.extent_x_mm * px_per_mm))
    rr, cc = np.meshgrid(np.arange(rows), np.arange(cols), indexing="ij")
    sy = y_min_mm + (rr + 0.5) / px_per_mm
    sx = (cc + 0.5) / px_per_mm
    tr = (sy - scene.y0_mm) / scene.pitch_mm - 0.5
    tc = sx / scene.pitch_mm - 0.5
    vals = bilinear_sample(scene.texture, tr, tc, mode="clamp")
    return to_uint8(FOREGROUND_LO + vals * (FOREGROUND_HI - FOREGROUND_LO))
