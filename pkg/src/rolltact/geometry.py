"""Projection geometry for a camera mounted inside a rolling cylinder shell.

Coordinate conventions
----------------------
The sensing shell is a circular cylinder of radius ``r``.  World frame:

* ``x`` runs along the cylinder's central axis,
* ``z`` points vertically down toward the contact region,
* ``y`` completes the right-handed frame (tangential, along the rolling
  direction),
* the origin sits at the cylinder center.

Shell points therefore satisfy ``Yw**2 + Zw**2 == r**2``, and the half
of the shell the camera can see is ``Zw > 0``.

The camera sits near the cylinder center looking down.  Its mounting
freedom is restricted to two parameters:

* ``theta`` -- rotation about the cylinder axis (radians),
* ``d``     -- offset along the camera's optical axis (millimetres).

World-to-camera is ``p_cam = Rx(theta) @ p_world + (0, 0, d)`` with

    Rx(theta) = [[1,       0,          0         ],
                 [0,       cos(theta), sin(theta)],
                 [0,      -sin(theta), cos(theta)]]

followed by the pinhole map ``u = u0 + fx*Xc/Zc``, ``v = v0 + fy*Yc/Zc``.
The projective depth ``Zc`` is called ``lam`` throughout.  Writing the
shell point with the circumferential angle ``phi`` (``Yw = r*sin(phi)``,
``Zw = r*cos(phi)``) gives the closed forms used below:

    lam = r*cos(phi + theta) + d
    u   = u0 + fx * Xw / lam
    v   = v0 + fy * r * sin(phi + theta) / lam

Unprojection inverts the ``v`` row for ``phi``.  That row rearranges to
a single harmonic equation ``A*sin(psi) + B*cos(psi) = C`` in
``psi = phi + theta``, solved exactly via the harmonic-addition
identity; candidate roots are filtered to the unique one with positive
depth on the visible half-shell.  A bisection fallback handles the
principal row ``v == v0`` when the camera is offset (``d != 0``).

All functions are pure and every type is immutable, so this module is
safe to use from multiple threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePoint, NonPositiveDepth, NoVisibleSolution

__all__ = [
    "CameraIntrinsics",
    "CylinderModel",
    "ExtrinsicPose",
    "PixelPoint",
    "SurfacePoint",
    "central_angle",
    "lift_to_surface",
    "project",
    "unproject",
    "unproject_many",
]

# Relative tolerance for the on-surface check: |hypot(Yw, Zw) - r| <= tol * r.
SURFACE_TOL = 1e-9

# Bisection fallback stops once the bracket is narrower than this (radians).
_BISECT_TOL = 1e-12


# ===========================================================================
# value types
# ===========================================================================

@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics in pixel units plus the sensor raster size."""

    fx: float
    fy: float
    u0: float
    v0: float
    width: int = 640
    height: int = 480

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")
        if not (self.width > 0 and self.height > 0):
            raise ValueError(f"image size must be positive, got {self.width}x{self.height}")


@dataclass(frozen=True)
class CylinderModel:
    """The sensing shell: a circular cylinder of ``radius`` millimetres."""

    radius: float
    length: float = 100.0

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"cylinder radius must be positive, got {self.radius}")
        if not self.length > 0:
            raise ValueError(f"cylinder length must be positive, got {self.length}")

    def on_surface(self, point: "SurfacePoint", tol: float = SURFACE_TOL) -> bool:
        """True if ``point`` lies on the shell within ``tol * radius``."""
        return abs(math.hypot(point.yw, point.zw) - self.radius) <= tol * self.radius


@dataclass(frozen=True)
class ExtrinsicPose:
    """Camera mounting pose: axis rotation ``theta`` (rad), offset ``d`` (mm).

    ``theta`` must stay within the open interval (-pi/2, pi/2); beyond
    that the camera no longer faces the contact half of the shell.  The
    offset is additionally required to satisfy ``|d| < radius`` wherever
    a cylinder is in play, which callers enforce at the point of use.
    """

    theta: float = 0.0
    d: float = 0.0

    def __post_init__(self):
        if not abs(self.theta) < math.pi / 2:
            raise ValueError(f"|theta| must be < pi/2, got {self.theta}")


@dataclass(frozen=True)
class SurfacePoint:
    """A point on the cylinder shell, world coordinates in millimetres."""

    xw: float
    yw: float
    zw: float

    def as_array(self) -> np.ndarray:
        return np.array([self.xw, self.yw, self.zw], dtype=float)


@dataclass(frozen=True)
class PixelPoint:
    """A (possibly sub-pixel) image location, ``u`` along columns, ``v`` along rows."""

    u: float
    v: float

    def as_array(self) -> np.ndarray:
        return np.array([self.u, self.v], dtype=float)


# ===========================================================================
# forward projection
# ===========================================================================

def project(
    point: SurfacePoint,
    k: CameraIntrinsics,
    pose: ExtrinsicPose,
) -> tuple[PixelPoint, float]:
    """Project a world point into the image.

    Parameters
    ----------
    point:
        World point (usually on the shell, though the pinhole map does
        not require that).
    k:
        Camera intrinsics.
    pose:
        Mounting pose (theta, d).

    Returns
    -------
    (PixelPoint, lam):
        The image location and the projective depth ``lam`` in mm.

    Raises
    ------
    NonPositiveDepth
        If the point sits at or behind the camera plane (``lam <= 0``).
    """
    st, ct = math.sin(pose.theta), math.cos(pose.theta)
    lam = -point.yw * st + point.zw * ct + pose.d
    if lam <= 0.0:
        raise NonPositiveDepth(
            f"point {point} has depth {lam:.6g} <= 0 at theta={pose.theta}, d={pose.d}"
        )
    # Camera-frame coordinates after the axis rotation and z-offset.
    xc = point.xw
    yc = point.yw * ct + point.zw * st
    u = k.u0 + k.fx * xc / lam
    v = k.v0 + k.fy * yc / lam
    return PixelPoint(u, v), lam


def central_angle(point: SurfacePoint) -> float:
    """Circumferential angle ``phi = atan2(Yw, Zw)`` of a shell point.

    Zero at the lowest line of the shell (straight down), increasing
    toward positive ``y``.  Raises :class:`DegeneratePoint` for points
    on the cylinder axis, where the angle is undefined.
    """
    if point.yw == 0.0 and point.zw == 0.0:
        raise DegeneratePoint(f"point {point} lies on the cylinder axis")
    return math.atan2(point.yw, point.zw)


def lift_to_surface(x_mm: float, phi: float, cyl: CylinderModel) -> SurfacePoint:
    """Shell point at axial position ``x_mm`` and circumferential angle ``phi``."""
    return SurfacePoint(x_mm, cyl.radius * math.sin(phi), cyl.radius * math.cos(phi))


# ===========================================================================
# unprojection
# ===========================================================================

def _check_offset(pose: ExtrinsicPose, cyl: CylinderModel) -> None:
    if not abs(pose.d) < cyl.radius:
        raise ValueError(
            f"camera offset |d|={abs(pose.d)} must be smaller than the "
            f"cylinder radius {cyl.radius}"
        )


def _wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    a = math.fmod(a, 2.0 * math.pi)
    if a <= -math.pi:
        a += 2.0 * math.pi
    elif a > math.pi:
        a -= 2.0 * math.pi
    return a


def _phi_candidates_closed_form(dv: float, k: CameraIntrinsics, pose: ExtrinsicPose,
                                cyl: CylinderModel) -> list[float]:
    """Closed-form roots (as psi = phi + theta) of the row equation.

    The ``v`` row of the projection, restricted to the shell, reads

        fy * r * sin(psi) - dv * r * cos(psi) = dv * d

    which is ``A*sin(psi) + B*cos(psi) = C`` with amplitude
    ``hypot(A, B) = r * hypot(fy, dv) > 0``.  Since ``|C| <= |d| * r``
    the right-hand side is always within range and two roots exist per
    period.
    """
    r = cyl.radius
    a = k.fy * r
    b = -dv * r
    c = dv * pose.d
    amp = math.hypot(a, b)
    delta = math.atan2(b, a)
    s = c / amp
    # |s| <= |d|/r < 1 is guaranteed by the pose check; clamp only for
    # floating-point round-off at the boundary.
    s = max(-1.0, min(1.0, s))
    base = math.asin(s)
    return [_wrap_angle(base - delta), _wrap_angle(math.pi - base - delta)]


def _phi_by_bisection(dv: float, k: CameraIntrinsics, pose: ExtrinsicPose,
                      cyl: CylinderModel) -> list[float]:
    """Bracket-and-bisect the row equation over phi in (-pi/2, pi/2).

    Used for the principal row (``v == v0``) with an offset camera, where
    we prefer the plain root finder over the harmonic identity.  Scans a
    coarse grid for sign changes, then bisects each bracket down to
    1e-12 radians.
    """
    r = cyl.radius

    def g(phi: float) -> float:
        psi = phi + pose.theta
        return k.fy * r * math.sin(psi) - dv * (r * math.cos(psi) + pose.d)

    lo_edge = -math.pi / 2 + 1e-9
    hi_edge = math.pi / 2 - 1e-9
    grid = np.linspace(lo_edge, hi_edge, 129)
    vals = [g(p) for p in grid]
    roots = []
    for i in range(len(grid) - 1):
        ga, gb = vals[i], vals[i + 1]
        if ga == 0.0:
            roots.append(grid[i])
            continue
        if ga * gb < 0.0:
            lo, hi = grid[i], grid[i + 1]
            while hi - lo > _BISECT_TOL:
                mid = 0.5 * (lo + hi)
                gm = g(mid)
                if gm == 0.0:
                    lo = hi = mid
                    break
                if ga * gm < 0.0:
                    hi = mid
                else:
                    lo, ga = mid, gm
            roots.append(0.5 * (lo + hi))
    if vals[-1] == 0.0:
        roots.append(grid[-1])
    # Return as psi values to share the selection logic with the closed form.
    return [phi + pose.theta for phi in roots]


def unproject(
    px: PixelPoint,
    k: CameraIntrinsics,
    pose: ExtrinsicPose,
    cyl: CylinderModel,
) -> SurfacePoint:
    """Invert the projection back onto the visible half of the shell.

    Parameters
    ----------
    px:
        Image location (sub-pixel allowed, and it need not be inside the
        raster bounds).
    k, pose, cyl:
        Camera intrinsics, mounting pose, and shell geometry.  Requires
        ``|pose.d| < cyl.radius``.

    Returns
    -------
    SurfacePoint
        The unique shell point with positive depth and ``Zw > 0`` that
        projects to ``px``.

    Raises
    ------
    NoVisibleSolution
        If no such point exists (the ray meets only the hidden half).
    ValueError
        If ``|d| >= radius``.
    """
    _check_offset(pose, cyl)
    r = cyl.radius
    dv = px.v - k.v0

    if dv == 0.0 and pose.d != 0.0:
        psis = _phi_by_bisection(dv, k, pose, cyl)
    else:
        psis = _phi_candidates_closed_form(dv, k, pose, cyl)

    accepted = []
    for psi in psis:
        lam = r * math.cos(psi) + pose.d
        if lam <= 0.0:
            continue
        phi = psi - pose.theta
        if not -math.pi / 2 < phi < math.pi / 2:
            continue
        accepted.append((phi, lam))

    if not accepted:
        raise NoVisibleSolution(
            f"pixel ({px.u}, {px.v}) does not come from the visible half-shell "
            f"at theta={pose.theta}, d={pose.d}, r={r}"
        )
    # Depth is strictly monotone in the row coordinate on the positive-depth
    # arc, so a second visible root cannot exist.
    assert len(accepted) == 1, f"ambiguous unprojection for pixel {px}: {accepted}"

    phi, lam = accepted[0]
    xw = lam * (px.u - k.u0) / k.fx
    return SurfacePoint(xw, r * math.sin(phi), r * math.cos(phi))


def unproject_many(
    us: np.ndarray,
    vs: np.ndarray,
    k: CameraIntrinsics,
    pose: ExtrinsicPose,
    cyl: CylinderModel,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized unprojection for whole pixel grids.

    Same mathematics as :func:`unproject`, evaluated with numpy over
    arrays of pixel coordinates.  Instead of raising per element, pixels
    without a visible solution are masked out.

    Returns
    -------
    (xw, phi, lam, valid):
        Arrays matching the broadcast shape of ``us``/``vs``.  ``phi``
        is the circumferential angle; entries where ``valid`` is False
        hold NaN.
    """
    _check_offset(pose, cyl)
    r = cyl.radius
    us = np.asarray(us, dtype=float)
    vs = np.asarray(vs, dtype=float)
    dv = vs - k.v0

    a = k.fy * r
    b = -dv * r
    c = dv * pose.d
    amp = np.hypot(a, b)
    delta = np.arctan2(b, a)
    base = np.arcsin(np.clip(c / amp, -1.0, 1.0))

    best_phi = np.full(dv.shape, np.nan)
    best_lam = np.full(dv.shape, np.nan)
    valid = np.zeros(dv.shape, dtype=bool)
    two_pi = 2.0 * math.pi
    for psi in (base - delta, math.pi - base - delta):
        psi = np.mod(psi + math.pi, two_pi) - math.pi
        lam = r * np.cos(psi) + pose.d
        phi = psi - pose.theta
        ok = (lam > 0.0) & (np.abs(phi) < math.pi / 2)
        best_phi = np.where(ok, phi, best_phi)
        best_lam = np.where(ok, lam, best_lam)
        valid |= ok

    xw = np.where(valid, best_lam * (us - k.u0) / k.fx, np.nan)
    return xw, best_phi, best_lam, valid
