"""Constants."""

import os

from dotenv import load_dotenv

load_dotenv()

# Radar frame period at the sensor's native 15 Hz.
FRAME_RATE_HZ = 15.0
FRAME_PERIOD_US = 1_000_000.0 / FRAME_RATE_HZ

# Geometry tolerances.
DEGENERATE_NORM = 1e-9
QUATERNION_TOLERANCE = 1e-9
RADIUS_SLACK = 1e-12

# Pose file quaternions within this of unit norm are accepted as-is, up to the
# renormalize limit they are fixed with a warning, beyond it they are rejected.
POSE_QUATERNION_ACCEPT = 1e-6
POSE_QUATERNION_RENORMALIZE = 1e-3

# Detection log and ground truth timestamps must agree to within this many seconds.
ALIGNMENT_TOLERANCE_S = 1e-3

# Used when rounding floats for display.
DECIMAL_PLACES = int(os.getenv("RADARPERCEPT_DECIMAL_PLACES", "2"))

DEFAULT_PROFILE = os.getenv("RADARPERCEPT_DEFAULT_PROFILE", "indoor")
if DEFAULT_PROFILE not in ["indoor", "outdoor"]:
    raise ValueError(
        f"RADARPERCEPT_DEFAULT_PROFILE: Invalid profile: {DEFAULT_PROFILE}. Valid profiles are: indoor, outdoor"
    )

POSE_CAPACITY = int(os.getenv("RADARPERCEPT_POSE_CAPACITY", "256"))
if POSE_CAPACITY < 2:
    raise ValueError(f"RADARPERCEPT_POSE_CAPACITY: Invalid capacity: {POSE_CAPACITY}. Must be at least 2")

EXTRAPOLATION_LIMIT_S = float(os.getenv("RADARPERCEPT_EXTRAPOLATION_LIMIT_S", "0.05"))
if EXTRAPOLATION_LIMIT_S < 0:
    raise ValueError(f"RADARPERCEPT_EXTRAPOLATION_LIMIT_S: Invalid limit: {EXTRAPOLATION_LIMIT_S}. Must be >= 0")

VELOCITY_WINDOW_S = float(os.getenv("RADARPERCEPT_VELOCITY_WINDOW_S", "0.2"))
if VELOCITY_WINDOW_S <= 0:
    raise ValueError(f"RADARPERCEPT_VELOCITY_WINDOW_S: Invalid window: {VELOCITY_WINDOW_S}. Must be > 0")

LOG_LEVEL = os.getenv("RADARPERCEPT_LOG_LEVEL", "WARNING").upper()
if LOG_LEVEL not in ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]:
    raise ValueError(
        f"RADARPERCEPT_LOG_LEVEL: Invalid level: {LOG_LEVEL}. Valid levels are: DEBUG, INFO, WARNING, ERROR, CRITICAL"
    )
