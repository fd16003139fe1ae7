"""Structured-text run reports and the calibration file format.

Reports are line oriented and deterministic: ``key = value`` pairs in
insertion order, simple whitespace-aligned tables, and free-text notes.
Timing lines are prefixed ``timing_`` so reproducibility checks can
drop them; everything else must be byte-identical across reruns of the
same config, inputs, and seed.

The calibration file is a small report of the same shape that the
localize and stitch stages can read a pose back from.
"""

from __future__ import annotations

import math
from pathlib import Path

from .calibration import CalibrationResult
from .errors import ConfigInvalid, InputMissing
from .geometry import ExtrinsicPose

__all__ = [
    "Report",
    "SCHEMA_VERSION",
    "format_number",
    "read_calibration",
    "strip_timing_lines",
    "write_calibration",
]

SCHEMA_VERSION = 1


def format_number(value) -> str:
    """Stable text for report numbers: shortest round-trip form."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
        return repr(value)
    return str(value)


class Report:
    """Accumulates report lines and renders them deterministically."""

    def __init__(self, command: str, config_hash: str):
        self._lines: list[str] = [
            f"schema_version = {SCHEMA_VERSION}",
            f"command = {command}",
            f"config_sha256 = {config_hash}",
        ]

    def add(self, key: str, value) -> None:
        self._lines.append(f"{key} = {format_number(value)}")

    def add_timing(self, key: str, seconds: float) -> None:
        self._lines.append(f"timing_{key}_s = {seconds:.6f}")

    def add_blank(self) -> None:
        self._lines.append("")

    def add_note(self, text: str) -> None:
        """A free-text block; each line prefixed so notes stay greppable."""
        for line in text.splitlines():
            self._lines.append(f"note {line}".rstrip())

    def add_table(self, name: str, header: list[str], rows: list[list]) -> None:
        cells = [[str(h) for h in header]]
        cells += [[format_number(v) for v in row] for row in rows]
        widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
        self._lines.append(f"table {name}")
        for row in cells:
            padded = "  ".join(c.ljust(w) for c, w in zip(row, widths))
            self._lines.append(f"  {padded.rstrip()}")
        self._lines.append(f"end {name}")

    def render(self) -> str:
        return "\n".join(self._lines) + "\n"

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.render(), encoding="utf-8")


def strip_timing_lines(text: str) -> str:
    """Drop ``timing_`` lines; the rest must be reproducible byte by byte."""
    kept = [line for line in text.splitlines()
            if not line.startswith("timing_")]
    return "\n".join(kept) + ("\n" if text.endswith("\n") else "")


# ---------------------------------------------------------------------------
# calibration files
# ---------------------------------------------------------------------------

def write_calibration(path: str | Path, result: CalibrationResult) -> None:
    """Persist a calibration result as a parseable key = value report."""
    lines = [
        f"schema_version = {SCHEMA_VERSION}",
        f"theta_rad = {format_number(result.pose.theta)}",
        f"d_mm = {format_number(result.pose.d)}",
        f"theta_std_rad = {format_number(result.theta_std)}",
        f"d_std_mm = {format_number(result.d_std)}",
        f"n_frames_used = {len(result.estimates)}",
        f"n_frames_skipped = {len(result.skipped_frames)}",
        "table frames",
        "  index  theta_rad  d_mm  rmse_px  n_points",
    ]
    for i, est in enumerate(result.estimates):
        lines.append(
            f"  {i}  {format_number(est.theta)}  {format_number(est.d)}"
            f"  {format_number(est.rmse_px)}  {est.n_points}"
        )
    lines.append("end frames")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_calibration(path: str | Path) -> tuple[ExtrinsicPose, dict]:
    """Read a calibration file back into a pose plus its summary fields.

    Raises InputMissing when the file is absent and ConfigInvalid when
    it cannot be parsed.
    """
    p = Path(path)
    if not p.is_file():
        raise InputMissing(f"calibration file not found: {p}")
    fields: dict[str, float] = {}
    for line in p.read_text(encoding="utf-8").splitlines():
        if "=" not in line or line.startswith(("table", "end", " ", "note")):
            continue
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        try:
            fields[key] = float(value)
        except ValueError:
            continue
    if "theta_rad" not in fields or "d_mm" not in fields:
        raise ConfigInvalid(
            f"calibration file {p} lacks theta_rad/d_mm entries"
        )
    try:
        pose = ExtrinsicPose(theta=fields["theta_rad"], d=fields["d_mm"])
    except ValueError as exc:
        raise ConfigInvalid(f"calibration file {p}: {exc}") from exc
    return pose, fields
