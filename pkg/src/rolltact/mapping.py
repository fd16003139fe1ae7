"""Surface map assembly from a rolling video, plus image-quality metrics.

While the sensor rolls, only a thin horizontal band of each frame images
material at the contact line, so the map is built from 70-pixel center
crops.  Consecutive patches overlap heavily; the vertical translation
between them is found by exhaustive search of the integer shift in
[-25, 25] that minimizes the mean absolute intensity error over the
overlapping rows.  Chaining those shifts places every patch at a
cumulative row offset, and overlaps are resolved by letting the later
patch overwrite (or, behind a flag, average into) the earlier rows.

Negative shifts encode forward motion: scene content climbs up the
image as the cylinder rolls ahead.

For scoring, a stitched map is aligned to a reference view with an
affine transform derived from two point correspondences on matching
vertical lines (a third pair is constructed by rotating the second
point 90 degrees about the first in both images, forming congruent
right isosceles triangles), then compared with SSIM, PSNR, and MAE.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegeneratePoints,
    DimensionMismatch,
    NoOverlap,
    PatchTooTall,
)
from .imageops import bilinear_sample, round_half_up

log = logging.getLogger(__name__)

__all__ = [
    "AlignmentSpec",
    "Patch",
    "ShiftEstimate",
    "TactileMap",
    "apply_affine",
    "crop_center_patch",
    "derive_affine",
    "find_shift",
    "mae",
    "psnr",
    "ssim",
    "stitch",
]

DEFAULT_PATCH_HEIGHT = 70
DEFAULT_SHIFT_RANGE = (-25, 25)


# ===========================================================================
# value types
# ===========================================================================

@dataclass(frozen=True, eq=False)
class Patch:
    """A thin horizontal band cropped from a frame's vertical center."""

    pixels: np.ndarray
    frame_index: int = 0

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True, eq=False)
class ShiftEstimate:
    """Best vertical translation between two consecutive patches.

    ``dy`` is the integer row shift of the later patch's content
    relative to the earlier one (negative when content moved up) and
    minimizes the error curve; ``curve`` holds the mean absolute error
    for every candidate, ``inf`` marking candidates with no row overlap.
    ``dy_refined`` carries the optional sub-pixel refinement (parabolic
    fit through the minimum and its neighbors) when requested, else
    ``None``.
    """

    dy: int
    mae_at_dy: float
    curve: tuple[tuple[int, float], ...]
    dy_refined: float | None = None


@dataclass(frozen=True, eq=False)
class TactileMap:
    """A stitched surface map with its assembly record."""

    pixels: np.ndarray
    shifts: tuple[ShiftEstimate, ...]   # one per consecutive patch pair
    row_offsets: tuple[int, ...]        # placement row of each patch

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True, eq=False)
class AlignmentSpec:
    """A 2x3 affine map from source (map) to target (reference) pixels."""

    matrix: np.ndarray
    src_points: tuple[tuple[float, float], ...] = ()
    dst_points: tuple[tuple[float, float], ...] = ()

    def transform(self, points: np.ndarray) -> np.ndarray:
        """Apply the affine to an (N, 2) array of (x, y) points."""
        pts = np.asarray(points, dtype=np.float64)
        return pts @ self.matrix[:, :2].T + self.matrix[:, 2]


# ===========================================================================
# patch extraction and shift search
# ===========================================================================

def _pixels_of(frame) -> np.ndarray:
    return np.asarray(getattr(frame, "pixels", frame))


def crop_center_patch(frame, patch_height: int = DEFAULT_PATCH_HEIGHT) -> Patch:
    """Crop the centered horizontal band of a frame.

    The band starts at row ``(H - patch_height) // 2``; a 480-row frame
    with the default height yields rows 205..274.
    """
    pixels = _pixels_of(frame)
    if patch_height < 1:
        raise ValueError("patch_height must be at least 1")
    h = pixels.shape[0]
    if patch_height > h:
        raise PatchTooTall(
            f"patch height {patch_height} exceeds frame height {h}"
        )
    top = (h - patch_height) // 2
    index = getattr(frame, "index", 0)
    return Patch(pixels=pixels[top:top + patch_height].copy(),
                 frame_index=index)


def find_shift(
    a,
    b,
    search_range: tuple[int, int] = DEFAULT_SHIFT_RANGE,
) -> ShiftEstimate:
    """Exhaustive integer search for the row shift of ``b`` relative to ``a``.

    For each candidate ``k`` the mean absolute error is computed between
    ``a[v]`` and ``b[v + k]`` over the rows where both exist; the best
    candidate is the one with the smallest error, ties broken toward
    smaller ``|k|`` and then toward the negative sign.  A pure content
    shift ``b[v + k] == a[v]`` is therefore recovered exactly with a
    zero error.

    Raises NoOverlap when no candidate leaves any overlapping rows, and
    DimensionMismatch when the patch widths differ.
    """
    pa = np.asarray(_pixels_of(a), dtype=np.float64)
    pb = np.asarray(_pixels_of(b), dtype=np.float64)
    if pa.shape[1] != pb.shape[1]:
        raise DimensionMismatch(
            f"patch widths differ: {pa.shape[1]} vs {pb.shape[1]}"
        )
    lo, hi = int(search_range[0]), int(search_range[1])
    if lo > hi:
        raise ValueError("search range must satisfy lo <= hi")

    ha, hb = pa.shape[0], pb.shape[0]
    curve = {}
    for k in range(lo, hi + 1):
        v0 = max(0, -k)
        v1 = min(ha, hb - k)
        if v1 <= v0:
            curve[k] = math.inf
            continue
        curve[k] = float(np.mean(np.abs(pa[v0:v1] - pb[v0 + k:v1 + k])))

    finite = [k for k in curve if math.isfinite(curve[k])]
    if not finite:
        raise NoOverlap(
            f"no candidate in [{lo}, {hi}] overlaps patches of heights "
            f"{ha} and {hb}"
        )
    best = min(finite, key=lambda k: (curve[k], abs(k), k))
    n_ties = sum(1 for k in finite if curve[k] == curve[best])
    if n_ties > 1:
        log.info("shift minimum not unique (%d candidates at %.6f), "
                 "tie-break chose %d", n_ties, curve[best], best)
    return ShiftEstimate(
        dy=best,
        mae_at_dy=curve[best],
        curve=tuple(sorted(curve.items())),
    )


def _refine_parabolic(est: ShiftEstimate) -> float:
    """Sub-pixel minimum from a parabola through the integer minimum.

    Falls back to the integer value when the minimum sits at the edge of
    the search range or the three-point fit is not convex.
    """
    curve = dict(est.curve)
    m0 = curve.get(est.dy)
    m_lo = curve.get(est.dy - 1)
    m_hi = curve.get(est.dy + 1)
    if m_lo is None or m_hi is None:
        return float(est.dy)
    if not (math.isfinite(m_lo) and math.isfinite(m0) and math.isfinite(m_hi)):
        return float(est.dy)
    denom = m_lo - 2.0 * m0 + m_hi
    if denom <= 0.0:
        return float(est.dy)
    offset = 0.5 * (m_lo - m_hi) / denom
    return est.dy + float(np.clip(offset, -0.5, 0.5))


def stitch(
    frames,
    *,
    patch_height: int = DEFAULT_PATCH_HEIGHT,
    search_range: tuple[int, int] = DEFAULT_SHIFT_RANGE,
    average_overlap: bool = False,
    subpixel: bool = False,
) -> TactileMap:
    """Assemble a surface map from a sequence of frames.

    Each frame contributes its center patch; patch ``i+1`` is placed
    ``-dy_i`` rows below patch ``i`` so that shifted content lines up.
    Overlapping rows keep the later patch's values unless
    ``average_overlap`` is set, in which case all contributions are
    averaged.  With ``subpixel`` the cumulative offsets accumulate the
    parabolic refinement of each shift before rounding to placement
    rows.

    The canvas spans exactly the written extent; under uniform-direction
    motion its height is ``patch_height + sum(|dy|)``.
    """
    frames = list(frames)
    if not frames:
        raise ValueError("stitch needs at least one frame")
    patches = [crop_center_patch(f, patch_height) for f in frames]

    shifts = []
    offsets = [0.0]
    for prev, cur in zip(patches, patches[1:]):
        est = find_shift(prev, cur, search_range)
        if subpixel:
            refined = _refine_parabolic(est)
            est = ShiftEstimate(dy=est.dy, mae_at_dy=est.mae_at_dy,
                                curve=est.curve, dy_refined=refined)
            offsets.append(offsets[-1] - refined)
        else:
            offsets.append(offsets[-1] - est.dy)
        shifts.append(est)

    base = min(offsets)
    rows = [round_half_up(off - base) for off in offsets]
    height = max(rows) + patch_height
    width = patches[0].width

    canvas = np.zeros((height, width), dtype=np.float64)
    if average_overlap:
        weight = np.zeros((height, 1), dtype=np.float64)
        for patch, row in zip(patches, rows):
            canvas[row:row + patch_height] += np.asarray(patch.pixels,
                                                         dtype=np.float64)
            weight[row:row + patch_height] += 1.0
        np.divide(canvas, weight, out=canvas, where=weight > 0.0)
    else:
        for patch, row in zip(patches, rows):
            canvas[row:row + patch_height] = patch.pixels

    return TactileMap(pixels=canvas, shifts=tuple(shifts),
                      row_offsets=tuple(rows))


# ===========================================================================
# affine alignment
# ===========================================================================

def _as_xy(point) -> tuple[float, float]:
    if hasattr(point, "u"):
        return float(point.u), float(point.v)
    x, y = point
    return float(x), float(y)


def _third_point(p1, p2) -> tuple[float, float]:
    # Rotate p2 by a quarter turn about p1; the three points then form a
    # right isosceles triangle with the right angle at p1.
    dx, dy = p2[0] - p1[0], p2[1] - p1[1]
    return (p1[0] - dy, p1[1] + dx)


def derive_affine(map_points, ref_points) -> AlignmentSpec:
    """Exact affine from two point correspondences plus a constructed third.

    ``map_points`` and ``ref_points`` each give two pixel positions
    (typically along matching vertical lines).  Both pairs are completed
    with a third point by the same quarter-turn construction, and the
    six affine coefficients are solved exactly from the three
    correspondences.

    Raises DegeneratePoints when either pair coincides.
    """
    src = [_as_xy(p) for p in map_points]
    dst = [_as_xy(p) for p in ref_points]
    if len(src) != 2 or len(dst) != 2:
        raise ValueError("derive_affine needs exactly two points per image")
    for pair, name in ((src, "map"), (dst, "reference")):
        if math.hypot(pair[1][0] - pair[0][0], pair[1][1] - pair[0][1]) < 1e-9:
            raise DegeneratePoints(f"the two {name} points coincide")
    src = src + [_third_point(*src)]
    dst = dst + [_third_point(*dst)]

    system = np.zeros((6, 6), dtype=np.float64)
    rhs = np.zeros(6, dtype=np.float64)
    for i, ((x, y), (xp, yp)) in enumerate(zip(src, dst)):
        system[2 * i, 0:3] = (x, y, 1.0)
        system[2 * i + 1, 3:6] = (x, y, 1.0)
        rhs[2 * i] = xp
        rhs[2 * i + 1] = yp
    coeff = np.linalg.solve(system, rhs)
    return AlignmentSpec(
        matrix=coeff.reshape(2, 3),
        src_points=tuple(src),
        dst_points=tuple(dst),
    )


def apply_affine(image, spec: AlignmentSpec, out_shape: tuple[int, int]) -> np.ndarray:
    """Warp ``image`` into the target frame of the affine.

    Every output pixel is sampled from the source at the inverse-mapped
    position with bilinear interpolation; reads outside the source fill
    with 0.  ``out_shape`` is (rows, cols).
    """
    pixels = np.asarray(_pixels_of(image), dtype=np.float64)
    a = spec.matrix[:, :2]
    t = spec.matrix[:, 2]
    inv = np.linalg.inv(a)

    rows, cols = int(out_shape[0]), int(out_shape[1])
    yy, xx = np.meshgrid(np.arange(rows, dtype=np.float64),
                         np.arange(cols, dtype=np.float64), indexing="ij")
    sx = inv[0, 0] * (xx - t[0]) + inv[0, 1] * (yy - t[1])
    sy = inv[1, 0] * (xx - t[0]) + inv[1, 1] * (yy - t[1])
    return bilinear_sample(pixels, sy, sx, mode="fill", fill=0.0)


# ===========================================================================
# quality metrics
# ===========================================================================

_DATA_RANGE = 255.0
_SSIM_WINDOW = 11
_SSIM_SIGMA = 1.5
_SSIM_K1 = 0.01
_SSIM_K2 = 0.03


def _metric_pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    pa = np.asarray(_pixels_of(a), dtype=np.float64)
    pb = np.asarray(_pixels_of(b), dtype=np.float64)
    if pa.shape != pb.shape:
        raise DimensionMismatch(f"image shapes differ: {pa.shape} vs {pb.shape}")
    if pa.ndim != 2:
        raise DimensionMismatch("metrics are defined for 2-D grayscale images")
    return pa, pb


def mae(a, b) -> float:
    """Mean absolute error as a percentage of the 8-bit full scale."""
    pa, pb = _metric_pair(a, b)
    return float(np.mean(np.abs(pa - pb))) / _DATA_RANGE * 100.0


def psnr(a, b) -> float:
    """Peak signal-to-noise ratio in dB (peak 255); identical images give inf."""
    pa, pb = _metric_pair(a, b)
    mse = float(np.mean((pa - pb) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(_DATA_RANGE * _DATA_RANGE / mse)


def _ssim_kernel() -> np.ndarray:
    half = (_SSIM_WINDOW - 1) // 2
    xs = np.arange(-half, half + 1, dtype=np.float64)
    kernel = np.exp(-(xs * xs) / (2.0 * _SSIM_SIGMA * _SSIM_SIGMA))
    return kernel / kernel.sum()


def _windowed(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    from scipy.ndimage import correlate1d

    out = correlate1d(img, kernel, axis=0, mode="nearest")
    return correlate1d(out, kernel, axis=1, mode="nearest")


def ssim(a, b) -> float:
    """Mean structural similarity with the standard Gaussian window.

    11x11 window with sigma 1.5, stability constants K1=0.01 and
    K2=0.03 on the 8-bit range, population (biased) window statistics.
    The mean is taken over pixels whose window lies fully inside the
    image, so both dimensions must be at least 11.
    """
    pa, pb = _metric_pair(a, b)
    if min(pa.shape) < _SSIM_WINDOW:
        raise ValueError(
            f"images must be at least {_SSIM_WINDOW} pixels in each "
            f"dimension, got {pa.shape}"
        )
    kernel = _ssim_kernel()
    mu_a = _windowed(pa, kernel)
    mu_b = _windowed(pb, kernel)
    var_a = _windowed(pa * pa, kernel) - mu_a * mu_a
    var_b = _windowed(pb * pb, kernel) - mu_b * mu_b
    cov = _windowed(pa * pb, kernel) - mu_a * mu_b

    c1 = (_SSIM_K1 * _DATA_RANGE) ** 2
    c2 = (_SSIM_K2 * _DATA_RANGE) ** 2
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    smap = num / den

    half = (_SSIM_WINDOW - 1) // 2
    return float(np.mean(smap[half:-half, half:-half]))
