"""Contact detection in tactile frames and placement on the shell.

A pressed object shows up as a bright region against the dark
background.  The pipeline binarizes the frame (blur + global threshold),
extracts connected foreground components, takes their raw-moment
centroids, and unprojects each centroid onto the shell to obtain the
contact's world position: its circumferential angle and axial offset.

Accuracy evaluation mirrors the bench protocol for the physical sensor:
test contacts arranged over five circumferential angles
(-pi/6 ... pi/6) crossed with three axial stations (1/4, 1/2, 3/4 of the
shell length), reported as a 5x3 table of mean +- standard deviation of
the Euclidean position error.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import NoVisibleSolution
from .geometry import (
    CameraIntrinsics,
    CylinderModel,
    ExtrinsicPose,
    PixelPoint,
    SurfacePoint,
    central_angle,
    unproject,
)
from .imageops import gaussian_blur, label_components, otsu_threshold

log = logging.getLogger(__name__)

__all__ = [
    "CellStats",
    "ContactEstimate",
    "ContactRegion",
    "LocalizationReport",
    "LocalizeParams",
    "TEST_ANGLES",
    "TEST_FRACTIONS",
    "evaluate_localization",
    "find_contact_regions",
    "localize_contacts",
    "preprocess",
]

# Bench protocol grid: five circumferential angles by three axial stations.
TEST_ANGLES = (-math.pi / 6, -math.pi / 12, 0.0, math.pi / 12, math.pi / 6)
TEST_FRACTIONS = (0.25, 0.5, 0.75)


@dataclass(frozen=True)
class LocalizeParams:
    """Binarization and filtering knobs for contact detection."""

    blur_sigma: float = 2.0
    threshold: float | None = None   # None selects Otsu
    min_area: int = 30
    invert: bool = False             # set for sensors with inverted contrast


@dataclass(frozen=True, eq=False)
class ContactRegion:
    """One connected foreground component."""

    centroid: PixelPoint
    area: int
    bbox: tuple[int, int, int, int]   # (row_min, col_min, row_max, col_max)
    mask: np.ndarray                  # boolean patch cropped to bbox


@dataclass(frozen=True, eq=False)
class ContactEstimate:
    """A contact placed on the shell."""

    point: SurfacePoint
    angle: float       # circumferential angle of the contact (rad)
    axial_mm: float    # position along the cylinder axis
    region: ContactRegion


@dataclass(frozen=True)
class CellStats:
    mean_mm: float
    std_mm: float
    count: int


@dataclass(frozen=True, eq=False)
class LocalizationReport:
    """Accuracy summary over a set of evaluated contacts."""

    angles: tuple[float, ...]
    fractions: tuple[float, ...]
    cells: dict
    mean_mm: float
    std_mm: float
    matched: tuple
    n_unmatched_estimates: int
    n_unmatched_truth: int

    def cell(self, angle_idx: int, fraction_idx: int) -> CellStats | None:
        return self.cells.get((angle_idx, fraction_idx))

    def format_table(self) -> str:
        """Render the 5x3 grid as aligned text (mm, mean +- std (count))."""
        header = ["angle_rad".ljust(10)] + [
            f"x={f:g}L".ljust(20) for f in self.fractions
        ]
        lines = ["".join(header)]
        for ai, ang in enumerate(self.angles):
            row = [f"{ang:+.4f}".ljust(10)]
            for fi in range(len(self.fractions)):
                stats = self.cells.get((ai, fi))
                if stats is None:
                    row.append("-".ljust(20))
                else:
                    row.append(
                        f"{stats.mean_mm:.2f}+-{stats.std_mm:.2f} ({stats.count})".ljust(20)
                    )
            lines.append("".join(row))
        lines.append(f"overall    {self.mean_mm:.2f}+-{self.std_mm:.2f} "
                     f"({len(self.matched)})")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# detection
# ---------------------------------------------------------------------------

def preprocess(frame, params: LocalizeParams = LocalizeParams()) -> np.ndarray:
    """Binarize a frame: optional inversion, Gaussian blur, global threshold.

    ``frame`` may be a 2-D array or any object exposing ``.pixels``.
    Returns the boolean foreground mask.
    """
    pixels = np.asarray(getattr(frame, "pixels", frame), dtype=np.float64)
    if params.invert:
        pixels = 255.0 - pixels
    blurred = gaussian_blur(pixels, params.blur_sigma)
    thr = params.threshold if params.threshold is not None else otsu_threshold(blurred)
    return blurred > thr


def find_contact_regions(mask: np.ndarray, min_area: int = 30) -> list[ContactRegion]:
    """Connected foreground components of at least ``min_area`` pixels.

    Centroids are the raw moments of the binary component
    (mean column, mean row).  Regions come back sorted by area,
    largest first; ties keep scan order.
    """
    labels, count = label_components(mask)
    regions = []
    for lab in range(1, count + 1):
        sel = labels == lab
        area = int(sel.sum())
        if area < min_area:
            continue
        rows, cols = np.nonzero(sel)
        r0, r1 = int(rows.min()), int(rows.max())
        c0, c1 = int(cols.min()), int(cols.max())
        centroid = PixelPoint(float(cols.mean()), float(rows.mean()))
        regions.append(ContactRegion(
            centroid=centroid, area=area, bbox=(r0, c0, r1, c1),
            mask=sel[r0:r1 + 1, c0:c1 + 1].copy(),
        ))
    regions.sort(key=lambda r: -r.area)
    return regions


def localize_contacts(
    frame,
    k: CameraIntrinsics,
    pose: ExtrinsicPose,
    cyl: CylinderModel,
    params: LocalizeParams = LocalizeParams(),
) -> list[ContactEstimate]:
    """Full per-frame pipeline: binarize, segment, place on the shell.

    Regions whose centroid does not unproject onto the visible
    half-shell are skipped with a warning.
    """
    mask = preprocess(frame, params)
    estimates = []
    for region in find_contact_regions(mask, params.min_area):
        try:
            point = unproject(region.centroid, k, pose, cyl)
        except NoVisibleSolution as exc:
            log.warning("contact region at (%.1f, %.1f) skipped: %s",
                        region.centroid.u, region.centroid.v, exc)
            continue
        estimates.append(ContactEstimate(
            point=point,
            angle=central_angle(point),
            axial_mm=point.xw,
            region=region,
        ))
    return estimates


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def _nearest_index(value: float, options: tuple[float, ...]) -> int:
    return min(range(len(options)), key=lambda i: abs(options[i] - value))


def evaluate_localization(
    estimates: list[ContactEstimate],
    ground_truth: list[SurfacePoint],
    cyl: CylinderModel,
    *,
    angles: tuple[float, ...] = TEST_ANGLES,
    fractions: tuple[float, ...] = TEST_FRACTIONS,
    match_gate_mm: float = 20.0,
) -> LocalizationReport:
    """Match estimates to ground-truth contacts and tabulate the errors.

    Matching is greedy nearest-neighbor with a ``match_gate_mm``
    Euclidean gate; each estimate and each truth point is used at most
    once.  Each matched pair lands in the cell of the truth point's
    nearest protocol angle and nearest axial station (axial fraction
    measured from the -x end of the shell body).
    """
    pairs = []
    for ei, est in enumerate(estimates):
        for ti, truth in enumerate(ground_truth):
            dist = float(np.linalg.norm(est.point.as_array() - truth.as_array()))
            if dist <= match_gate_mm:
                pairs.append((dist, ei, ti))
    pairs.sort()

    used_e: set[int] = set()
    used_t: set[int] = set()
    matched = []
    cell_errors: dict[tuple[int, int], list[float]] = {}
    for dist, ei, ti in pairs:
        if ei in used_e or ti in used_t:
            continue
        used_e.add(ei)
        used_t.add(ti)
        truth = ground_truth[ti]
        ai = _nearest_index(central_angle(truth), angles)
        fi = _nearest_index((truth.xw + cyl.length / 2.0) / cyl.length, fractions)
        cell_errors.setdefault((ai, fi), []).append(dist)
        matched.append((estimates[ei], truth, dist))

    cells = {
        key: CellStats(mean_mm=float(np.mean(v)), std_mm=float(np.std(v)),
                       count=len(v))
        for key, v in cell_errors.items()
    }
    all_err = [m[2] for m in matched]
    return LocalizationReport(
        angles=tuple(angles),
        fractions=tuple(fractions),
        cells=cells,
        mean_mm=float(np.mean(all_err)) if all_err else math.nan,
        std_mm=float(np.std(all_err)) if all_err else math.nan,
        matched=tuple(matched),
        n_unmatched_estimates=len(estimates) - len(used_e),
        n_unmatched_truth=len(ground_truth) - len(used_t),
    )
