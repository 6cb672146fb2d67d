"""trackfeed: video-to-track-stream adapter for the roadpulse engine."""

from trackfeed.calibrate import calibrate_camera, manual_calibration
from trackfeed.config import AdapterConfig
from trackfeed.extract import extract_tracks

__version__ = "0.1.0"

__all__ = ["AdapterConfig", "calibrate_camera", "extract_tracks",
           "manual_calibration", "__version__"]
