"""LiDAR-camera extrinsic calibration from Plücker line correspondences."""

from ._core import *  # noqa: F401,F403
from ._core import CalibError, __doc__  # noqa: F401

__version__ = "0.1.0"
