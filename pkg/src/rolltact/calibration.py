"""Extrinsic calibration from images of a hemisphere marker grid.

A thin rectangular frame carrying a regular rows x cols grid of small
hemisphere markers is pressed against the bottom of the shell.  The
markers show up as bright blobs.  Detection recovers their sub-pixel
centers, which are matched against the marker positions wrapped onto the
shell, and a two-parameter pose solve recovers the camera mounting
rotation ``theta`` and offset ``d``.

The solver is a damped Gauss-Newton iteration on the squared pixel
reprojection error.  Because only two parameters are free, each step is
an explicit 2x2 solve.  A full six-degree-of-freedom variant (solve a
free pose, then project it onto the one-axis-rotation-plus-offset
subspace) is available for comparison via ``method="full"``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    GridIncomplete,
    InsufficientPoints,
    NoValidFrames,
    SolverDiverged,
)
from .geometry import (
    CameraIntrinsics,
    CylinderModel,
    ExtrinsicPose,
    PixelPoint,
    SurfacePoint,
    lift_to_surface,
)
from .imageops import binary_open, gaussian_blur, label_components, otsu_threshold

log = logging.getLogger(__name__)

__all__ = [
    "CalibrationResult",
    "DetectParams",
    "GridSpec",
    "PoseEstimate",
    "calibrate",
    "detect_grid_centers",
    "grid_object_points",
    "solve_pnp",
]

# Gauss-Newton termination: parameter step below this, or the iteration cap.
_STEP_TOL = 1e-10
_MAX_ITERS = 100
# Consecutive rejected (residual-increasing) damping escalations before
# the solve is declared divergent.
_MAX_REJECTS = 10


@dataclass(frozen=True)
class GridSpec:
    """Marker grid layout: ``rows x cols`` hemispheres on a regular pitch."""

    rows: int = 2
    cols: int = 5
    radius_mm: float = 1.0
    pitch_mm: float = 4.0

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"grid must be at least 1x1, got {self.rows}x{self.cols}")
        if self.pitch_mm <= 0 or self.radius_mm <= 0:
            raise ValueError("grid pitch and marker radius must be positive")

    @property
    def count(self) -> int:
        return self.rows * self.cols


@dataclass(frozen=True)
class DetectParams:
    """Blob detection tuning for marker frames."""

    blur_sigma: float = 2.0
    min_area: int = 20
    open_size: int = 3
    threshold: float | None = None  # None selects Otsu


@dataclass(frozen=True)
class PoseEstimate:
    """Single-frame pose solve: parameters plus fit quality."""

    theta: float
    d: float
    rmse_px: float
    n_points: int


@dataclass(frozen=True)
class CalibrationResult:
    """Aggregated calibration: the averaged pose and the per-frame table."""

    pose: ExtrinsicPose
    estimates: tuple[PoseEstimate, ...]
    theta_std: float
    d_std: float
    skipped_frames: tuple[int, ...] = field(default=())


# ---------------------------------------------------------------------------
# marker geometry
# ---------------------------------------------------------------------------

def grid_object_points(grid: GridSpec, cyl: CylinderModel) -> list[SurfacePoint]:
    """Marker apex points wrapped onto the shell, row-major order.

    The grid is taken to be centered under the lowest shell line: columns
    run along the axis, rows along the rolling direction.  Wrapping
    preserves arc length, so a marker printed ``y`` millimetres from the
    grid center sits at circumferential angle ``y / radius``.  The
    ~1 mm marker height is absorbed by the fit rather than modeled.
    """
    pts = []
    for rr in range(grid.rows):
        y = (rr - (grid.rows - 1) / 2.0) * grid.pitch_mm
        phi = y / cyl.radius
        for cc in range(grid.cols):
            x = (cc - (grid.cols - 1) / 2.0) * grid.pitch_mm
            pts.append(lift_to_surface(x, phi, cyl))
    return pts


# ---------------------------------------------------------------------------
# blob detection
# ---------------------------------------------------------------------------

def detect_grid_centers(
    image: np.ndarray,
    grid: GridSpec,
    params: DetectParams = DetectParams(),
) -> list[PixelPoint]:
    """Sub-pixel marker centers, ordered row-major (top row first, left to right).

    Pipeline: Gaussian blur, global threshold (Otsu unless a fixed value
    is given), 3x3 morphological opening, connected components, area
    filter, then intensity-weighted centroids over each component.  The
    weights are the intensity above the threshold: weighting by raw
    intensity would let the flat pedestal of a blob pull the centroid
    toward the shape of its outline, which is perspective-distorted,
    while the excess intensity peaks at the marker apex.

    Raises
    ------
    GridIncomplete
        If the number of surviving blobs differs from ``grid.count``.
    """
    img = np.asarray(image, dtype=np.float64)
    blurred = gaussian_blur(img, params.blur_sigma)
    thr = params.threshold if params.threshold is not None else otsu_threshold(blurred)
    mask = blurred > thr
    if params.open_size > 1:
        mask = binary_open(mask, params.open_size)

    labels, count = label_components(mask)
    centers = []
    for lab in range(1, count + 1):
        sel = labels == lab
        area = int(sel.sum())
        if area < params.min_area:
            continue
        rows, cols = np.nonzero(sel)
        weights = blurred[rows, cols] - thr
        wsum = weights.sum()
        u = float((weights * cols).sum() / wsum)
        v = float((weights * rows).sum() / wsum)
        centers.append(PixelPoint(u, v))

    if len(centers) != grid.count:
        raise GridIncomplete(len(centers), grid.count)

    # Row-major ordering: group by the row coordinate, then sort each
    # group along the column coordinate.
    centers.sort(key=lambda p: p.v)
    ordered = []
    for rr in range(grid.rows):
        row = sorted(centers[rr * grid.cols:(rr + 1) * grid.cols], key=lambda p: p.u)
        ordered.extend(row)
    return ordered


# ---------------------------------------------------------------------------
# pose solving
# ---------------------------------------------------------------------------

def _residuals_and_jacobian(
    theta: float,
    d: float,
    obj: np.ndarray,
    img: np.ndarray,
    k: CameraIntrinsics,
) -> tuple[np.ndarray, np.ndarray, bool]:
    """Stacked pixel residuals and their 2-column Jacobian.

    Analytic partials follow from ``u = u0 + fx*Xw/lam`` and
    ``v = v0 + fy*s/lam`` with ``lam = -Yw*sin(t) + Zw*cos(t) + d`` and
    ``s = Yw*cos(t) + Zw*sin(t)``; note ``dlam/dt = -s`` and
    ``ds/dt = lam - d``.  The boolean is False when any point falls at or
    behind the camera for these parameters.
    """
    st, ct = math.sin(theta), math.cos(theta)
    xw, yw, zw = obj[:, 0], obj[:, 1], obj[:, 2]
    lam = -yw * st + zw * ct + d
    if np.any(lam <= 0.0):
        return np.empty(0), np.empty((0, 2)), False
    s = yw * ct + zw * st

    u = k.u0 + k.fx * xw / lam
    v = k.v0 + k.fy * s / lam
    res = np.concatenate([u - img[:, 0], v - img[:, 1]])

    lam2 = lam * lam
    du_dt = k.fx * xw * s / lam2
    du_dd = -k.fx * xw / lam2
    dv_dt = k.fy * ((lam - d) * lam + s * s) / lam2
    dv_dd = -k.fy * s / lam2
    jac = np.column_stack([
        np.concatenate([du_dt, dv_dt]),
        np.concatenate([du_dd, dv_dd]),
    ])
    return res, jac, True


def _solve_restricted(
    obj: np.ndarray,
    img: np.ndarray,
    k: CameraIntrinsics,
    init: ExtrinsicPose,
) -> tuple[float, float]:
    """Damped Gauss-Newton on (theta, d)."""
    theta, d = init.theta, init.d
    res, jac, ok = _residuals_and_jacobian(theta, d, obj, img, k)
    if not ok:
        raise SolverDiverged("initial pose places markers behind the camera")
    cost = float(res @ res)
    damping = 1e-3
    rejects = 0

    for it in range(_MAX_ITERS):
        jtj = jac.T @ jac
        jtr = jac.T @ res
        step = np.linalg.solve(jtj + damping * np.diag(np.diag(jtj)) + 1e-15 * np.eye(2), -jtr)
        if float(np.linalg.norm(step)) < _STEP_TOL:
            break  # converged: the proposed update no longer moves the parameters
        cand_theta = theta + float(step[0])
        cand_d = d + float(step[1])
        cand_res, cand_jac, ok = _residuals_and_jacobian(cand_theta, cand_d, obj, img, k)
        cand_cost = float(cand_res @ cand_res) if ok else math.inf

        if cand_cost <= cost:
            theta, d = cand_theta, cand_d
            res, jac, cost = cand_res, cand_jac, cand_cost
            damping = max(damping * 0.1, 1e-12)
            rejects = 0
        else:
            damping *= 10.0
            rejects += 1
            if rejects >= _MAX_REJECTS:
                raise SolverDiverged(
                    f"residual failed to decrease after {rejects} damping escalations "
                    f"(iteration {it}, cost {cost:.4g})"
                )
    return theta, d


def _solve_full_then_project(
    obj: np.ndarray,
    img: np.ndarray,
    k: CameraIntrinsics,
    init: ExtrinsicPose,
) -> tuple[float, float]:
    """Free 6-DoF pose fit, then projection onto the restricted subspace.

    The free pose is parameterized as a rotation vector plus translation
    and fit with scipy's Levenberg-Marquardt.  The nearest one-axis
    rotation maximizes ``trace(Rx(t)^T R)``, giving
    ``t = atan2(R12 - R21, R11 + R22)``; the offset keeps only the
    z-translation.
    """
    from scipy.optimize import least_squares
    from scipy.spatial.transform import Rotation

    def residual(p: np.ndarray) -> np.ndarray:
        rot = Rotation.from_rotvec(p[:3]).as_matrix()
        cam = obj @ rot.T + p[3:]
        lam = cam[:, 2]
        bad = lam <= 1e-9
        lam = np.where(bad, 1e-9, lam)
        u = k.u0 + k.fx * cam[:, 0] / lam
        v = k.v0 + k.fy * cam[:, 1] / lam
        out = np.concatenate([u - img[:, 0], v - img[:, 1]])
        if bad.any():
            out = out + np.concatenate([bad, bad]) * 1e6
        return out

    # Our restricted rotation matrix equals a right-handed rotation about
    # x by -theta, so the rotation-vector seed is (-theta, 0, 0).
    p0 = np.array([-init.theta, 0.0, 0.0, 0.0, 0.0, init.d])
    fit = least_squares(residual, p0, method="lm", xtol=1e-14, ftol=1e-14, gtol=1e-14)
    rot = Rotation.from_rotvec(fit.x[:3]).as_matrix()
    theta = math.atan2(rot[1, 2] - rot[2, 1], rot[1, 1] + rot[2, 2])
    return theta, float(fit.x[5])


def solve_pnp(
    object_points: list[SurfacePoint],
    image_points: list[PixelPoint],
    k: CameraIntrinsics,
    init: ExtrinsicPose = ExtrinsicPose(0.0, 0.0),
    *,
    method: str = "restricted",
) -> PoseEstimate:
    """Recover (theta, d) from marker correspondences.

    Parameters
    ----------
    object_points, image_points:
        Matched lists, same length and order.
    init:
        Starting pose for the iteration.
    method:
        ``"restricted"`` (default) iterates directly on the two
        parameters; ``"full"`` fits a free pose first and projects it
        onto the restricted subspace.

    Raises
    ------
    InsufficientPoints
        Fewer than 2 correspondences (4 for ``method="full"``).
    SolverDiverged
        The residual could not be reduced.
    """
    if len(object_points) != len(image_points):
        raise ValueError(
            f"{len(object_points)} object points vs {len(image_points)} image points"
        )
    minimum = 4 if method == "full" else 2
    if len(object_points) < minimum:
        raise InsufficientPoints(
            f"need at least {minimum} correspondences for method={method!r}, "
            f"got {len(object_points)}"
        )
    if method not in ("restricted", "full"):
        raise ValueError(f"unknown method {method!r}")

    obj = np.array([[p.xw, p.yw, p.zw] for p in object_points], dtype=float)
    img = np.array([[p.u, p.v] for p in image_points], dtype=float)

    if method == "restricted":
        theta, d = _solve_restricted(obj, img, k, init)
    else:
        theta, d = _solve_full_then_project(obj, img, k, init)

    res, _, ok = _residuals_and_jacobian(theta, d, obj, img, k)
    if not ok:
        raise SolverDiverged("converged parameters leave markers behind the camera")
    n = len(object_points)
    rmse = math.sqrt(float(res @ res) / n)
    log.debug("solve_pnp(%s): theta=%.6g d=%.6g rmse=%.4g px over %d points",
              method, theta, d, rmse, n)
    return PoseEstimate(theta=theta, d=d, rmse_px=rmse, n_points=n)


# ---------------------------------------------------------------------------
# multi-frame calibration
# ---------------------------------------------------------------------------

def calibrate(
    frames,
    grid: GridSpec,
    k: CameraIntrinsics,
    cyl: CylinderModel,
    params: DetectParams = DetectParams(),
    *,
    method: str = "restricted",
) -> CalibrationResult:
    """Calibrate from several marker-grid frames.

    Each frame is detected and solved independently; the reported pose
    averages the per-frame parameters arithmetically.  Frames where the
    grid is not fully detected or the solve diverges are skipped and
    listed in the result.

    ``frames`` may be 2-D uint8 arrays or objects exposing ``.pixels``.

    Raises
    ------
    NoValidFrames
        If every frame was skipped.
    """
    obj_pts = grid_object_points(grid, cyl)
    estimates: list[PoseEstimate] = []
    skipped: list[int] = []
    for idx, frame in enumerate(frames):
        pixels = getattr(frame, "pixels", frame)
        try:
            centers = detect_grid_centers(pixels, grid, params)
            est = solve_pnp(obj_pts, centers, k, method=method)
        except (GridIncomplete, SolverDiverged, InsufficientPoints) as exc:
            log.warning("calibration frame %d skipped: %s", idx, exc)
            skipped.append(idx)
            continue
        estimates.append(est)

    if not estimates:
        raise NoValidFrames(f"all {len(skipped)} calibration frames were skipped")

    thetas = np.array([e.theta for e in estimates])
    ds = np.array([e.d for e in estimates])
    pose = ExtrinsicPose(theta=float(thetas.mean()), d=float(ds.mean()))
    return CalibrationResult(
        pose=pose,
        estimates=tuple(estimates),
        theta_std=float(thetas.std()),
        d_std=float(ds.std()),
        skipped_frames=tuple(skipped),
    )
