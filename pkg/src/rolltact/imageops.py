"""Small shared raster helpers: blurring, thresholding, sampling, labeling.

Everything operates on plain numpy arrays with rows as the image ``v``
axis and columns as ``u``.  Heavier lifting (separable filtering,
connected-component labeling, morphology) is delegated to scipy.ndimage.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import ndimage


def gaussian_blur(image: np.ndarray, sigma: float) -> np.ndarray:
    """Gaussian blur in float64. ``sigma <= 0`` returns an unblurred copy."""
    img = np.asarray(image, dtype=np.float64)
    if sigma <= 0:
        return img.copy()
    return ndimage.gaussian_filter(img, sigma=sigma, mode="reflect")


def otsu_threshold(image: np.ndarray) -> float:
    """Otsu's threshold over a 256-bin histogram of an 8-bit-range image.

    Returns the bin value ``t`` maximizing the between-class variance;
    foreground is conventionally ``image > t``.  Ties resolve to the
    lowest maximizing bin.
    """
    img = np.asarray(image)
    hist, _ = np.histogram(np.clip(img, 0, 255), bins=256, range=(0, 256))
    hist = hist.astype(np.float64)
    total = hist.sum()
    if total == 0:
        return 0.0
    occupied = np.nonzero(hist)[0]
    if occupied.size == 1:
        # Constant image: no split exists; put the threshold at the value
        # itself so nothing counts as foreground.
        return float(occupied[0])

    bins = np.arange(256, dtype=np.float64)
    w0 = np.cumsum(hist)
    m0 = np.cumsum(hist * bins)
    mean_all = m0[-1]
    w1 = total - w0
    # Between-class variance for foreground = bins above t.
    with np.errstate(divide="ignore", invalid="ignore"):
        mu0 = m0 / w0
        mu1 = (mean_all - m0) / w1
        var_between = w0 * w1 * (mu0 - mu1) ** 2
    var_between[~np.isfinite(var_between)] = -1.0
    return float(np.argmax(var_between))


def binary_open(mask: np.ndarray, size: int = 3) -> np.ndarray:
    """Morphological opening with a ``size`` x ``size`` square structure."""
    structure = np.ones((size, size), dtype=bool)
    return ndimage.binary_opening(np.asarray(mask, dtype=bool), structure=structure)


def label_components(mask: np.ndarray) -> tuple[np.ndarray, int]:
    """8-connected component labeling of a boolean mask."""
    structure = np.ones((3, 3), dtype=int)
    labels, count = ndimage.label(np.asarray(mask, dtype=bool), structure=structure)
    return labels, int(count)


def bilinear_sample(
    image: np.ndarray,
    rows: np.ndarray,
    cols: np.ndarray,
    *,
    mode: str = "fill",
    fill: float = 0.0,
) -> np.ndarray:
    """Bilinear interpolation of ``image`` at fractional (row, col) positions.

    mode="fill":  positions outside the raster read 0-weighted ``fill``
                  values (out-of-range neighbor pixels count as ``fill``).
    mode="clamp": positions are clamped to the raster edge first.
    """
    img = np.asarray(image, dtype=np.float64)
    h, w = img.shape
    r = np.asarray(rows, dtype=np.float64)
    c = np.asarray(cols, dtype=np.float64)

    if mode == "clamp":
        r = np.clip(r, 0.0, float(h - 1))
        c = np.clip(c, 0.0, float(w - 1))

    r0 = np.floor(r).astype(np.int64)
    c0 = np.floor(c).astype(np.int64)
    fr = r - r0
    fc = c - c0

    if mode == "fill":
        acc = np.zeros(np.broadcast(r, c).shape, dtype=np.float64)
        for dr, dc, wgt in (
            (0, 0, (1 - fr) * (1 - fc)),
            (0, 1, (1 - fr) * fc),
            (1, 0, fr * (1 - fc)),
            (1, 1, fr * fc),
        ):
            rr = r0 + dr
            cc = c0 + dc
            inside = (rr >= 0) & (rr < h) & (cc >= 0) & (cc < w)
            vals = np.where(inside, img[np.clip(rr, 0, h - 1), np.clip(cc, 0, w - 1)], fill)
            acc += wgt * vals
        return acc

    r0 = np.clip(r0, 0, h - 1)
    c0 = np.clip(c0, 0, w - 1)
    r1 = np.minimum(r0 + 1, h - 1)
    c1 = np.minimum(c0 + 1, w - 1)
    top = img[r0, c0] * (1 - fc) + img[r0, c1] * fc
    bot = img[r1, c0] * (1 - fc) + img[r1, c1] * fc
    return top * (1 - fr) + bot * fr


def to_uint8(image: np.ndarray) -> np.ndarray:
    """Clip to [0, 255] and round half away from zero to uint8."""
    img = np.asarray(image, dtype=np.float64)
    return np.clip(np.floor(img + 0.5), 0, 255).astype(np.uint8)


def round_half_up(x: float) -> int:
    """Round to the nearest integer, halves toward +inf."""
    return int(math.floor(x + 0.5))
