"""Exception types shared across the rolltact package.

Every error raised deliberately by this package derives from
:class:`RollTactError`, so callers can catch one base type at pipeline
boundaries.  The command line maps subfamilies to exit codes: bad
configuration, missing input, and everything that fails mid-pipeline.
"""

from __future__ import annotations


class RollTactError(Exception):
    """Base class for all errors raised by this package."""


# ---------------------------------------------------------------------------
# configuration / input handling
# ---------------------------------------------------------------------------

class ConfigInvalid(RollTactError):
    """A run configuration failed validation (unknown key, bad value)."""


class InputMissing(RollTactError):
    """A referenced input file or directory does not exist or is unreadable."""


# ---------------------------------------------------------------------------
# projection geometry
# ---------------------------------------------------------------------------

class NonPositiveDepth(RollTactError):
    """A point projected with non-positive depth (at or behind the camera)."""


class NoVisibleSolution(RollTactError):
    """A pixel ray does not meet the visible half of the cylinder shell."""


class DegeneratePoint(RollTactError):
    """A point on the cylinder axis has no defined circumferential angle."""


# ---------------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------------

class SceneExhausted(RollTactError):
    """A roll trajectory left the simulated scene's extent."""


# ---------------------------------------------------------------------------
# calibration
# ---------------------------------------------------------------------------

class GridIncomplete(RollTactError):
    """Marker detection found the wrong number of grid blobs."""

    def __init__(self, found: int, expected: int):
        super().__init__(f"detected {found} grid blobs, expected {expected}")
        self.found = found
        self.expected = expected


class InsufficientPoints(RollTactError):
    """Too few point correspondences to constrain the pose solve."""


class SolverDiverged(RollTactError):
    """The iterative pose solver failed to reduce the residual."""


class NoValidFrames(RollTactError):
    """No calibration frame yielded a usable pose estimate."""


# ---------------------------------------------------------------------------
# mapping
# ---------------------------------------------------------------------------

class PatchTooTall(RollTactError):
    """Requested patch height exceeds the source frame height."""


class NoOverlap(RollTactError):
    """No candidate shift leaves any overlapping rows to compare."""


class DegeneratePoints(RollTactError):
    """Alignment control points coincide and span no triangle."""


class DimensionMismatch(RollTactError):
    """Two images that must share a shape do not."""
