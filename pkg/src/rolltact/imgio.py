"""Lossless 8-bit image reading/writing and frame-directory handling."""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import InputMissing
from .imageops import to_uint8

_FRAME_STEM = re.compile(r"^\D*(\d+)$")


def save_gray(path: str | Path, image: np.ndarray) -> None:
    """Write a 2-D array as an 8-bit grayscale PNG."""
    arr = np.asarray(image)
    if arr.dtype != np.uint8:
        arr = to_uint8(arr)
    Image.fromarray(arr, mode="L").save(str(path), format="PNG")


def load_gray(path: str | Path) -> np.ndarray:
    """Read an image as 8-bit grayscale.

    Color inputs are reduced with the standard luma weights
    0.299 R + 0.587 G + 0.114 B, rounded half up.
    """
    p = Path(path)
    if not p.is_file():
        raise InputMissing(f"image not found: {p}")
    with Image.open(p) as im:
        if im.mode == "L":
            return np.asarray(im, dtype=np.uint8).copy()
        rgb = np.asarray(im.convert("RGB"), dtype=np.float64)
    luma = rgb[..., 0] * 0.299 + rgb[..., 1] * 0.587 + rgb[..., 2] * 0.114
    return to_uint8(luma)


def frame_paths(directory: str | Path) -> list[Path]:
    """Image files of a frame directory in frame order.

    Frames are individual image files whose stems end in a zero-padded
    frame number (``frame_0000.png``, ``0012.png``, ...).  Ordering is by
    that number.  Raises :class:`InputMissing` when the directory does
    not exist or contains no readable frames.
    """
    d = Path(directory)
    if not d.is_dir():
        raise InputMissing(f"frame directory not found: {d}")
    entries = []
    for p in sorted(d.iterdir()):
        if not p.is_file() or p.suffix.lower() not in {".png", ".bmp", ".tif", ".tiff"}:
            continue
        m = _FRAME_STEM.match(p.stem)
        if m is None:
            raise InputMissing(
                f"frame file {p.name} has no trailing frame number; "
                "expected names like frame_0000.png"
            )
        entries.append((int(m.group(1)), p))
    if not entries:
        raise InputMissing(f"no frame images in {d}")
    entries.sort(key=lambda t: t[0])
    return [p for _, p in entries]
