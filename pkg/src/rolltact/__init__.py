"""rolltact: software stack for a camera-in-cylinder rolling tactile sensor.

The package covers the full pipeline from raw sensor frames to a
stitched surface map:

* :mod:`rolltact.geometry`     -- shell projection / unprojection
* :mod:`rolltact.simulator`    -- synthetic sensor with ground truth
* :mod:`rolltact.calibration`  -- extrinsic pose from a marker grid
* :mod:`rolltact.localization` -- contact detection and world placement
* :mod:`rolltact.mapping`      -- patch stitching, alignment, metrics
* :mod:`rolltact.cli`          -- ``rolltact`` command line
"""

from .errors import RollTactError
from .geometry import (
    CameraIntrinsics,
    CylinderModel,
    ExtrinsicPose,
    PixelPoint,
    SurfacePoint,
    central_angle,
    project,
    unproject,
)

__version__ = "0.1.0"

__all__ = [
    "CameraIntrinsics",
    "CylinderModel",
    "ExtrinsicPose",
    "PixelPoint",
    "RollTactError",
    "SurfacePoint",
    "central_angle",
    "project",
    "unproject",
    "__version__",
]
