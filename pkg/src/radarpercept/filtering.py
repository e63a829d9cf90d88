"""Stage 1: multi-threshold rejection of spurious radar points."""

import logging
from collections.abc import Mapping
from dataclasses import dataclass, fields
from typing import Any, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from radarpercept.core import RadarFrame, RadarPoint, angles_deg
from radarpercept.errors import UnknownProfile

logger = logging.getLogger(__name__)


class FilterProfile(BaseModel):
    """Threshold bounds for one operating environment.

    RCS bounds are exclusive; angular and Doppler bounds are inclusive.
    """

    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)

    rcs_min: float
    rcs_max: float
    az_min: float
    az_max: float
    el_min: float
    el_max: float
    v_min: float = -10.0
    v_max: float = 10.0

    @model_validator(mode="after")
    def _check_bounds(self) -> "FilterProfile":
        for low, high in (("rcs_min", "rcs_max"), ("az_min", "az_max"), ("el_min", "el_max"), ("v_min", "v_max")):
            if getattr(self, low) >= getattr(self, high):
                raise ValueError(f"{low} ({getattr(self, low)}) must be less than {high} ({getattr(self, high)})")
        return self


BUILTIN_PROFILES: dict[str, FilterProfile] = {
    # Strict limits against wall and ceiling multipath in enclosed spaces.
    "indoor": FilterProfile(rcs_min=0.0, rcs_max=45.0, az_min=-5.0, az_max=5.0, el_min=-2.0, el_max=8.0),
    # Wider limits for long-range returns.
    "outdoor": FilterProfile(rcs_min=-5.0, rcs_max=55.0, az_min=-15.0, az_max=15.0, el_min=-6.0, el_max=12.0),
}


def builtin_profile(name: str) -> FilterProfile:
    """Get a builtin filter profile by name.

    Raises:
        UnknownProfile: If the name is not a builtin profile.
    """
    try:
        return BUILTIN_PROFILES[name]
    except KeyError as exc:
        raise UnknownProfile(name) from exc


def resolve_profile(name: str, overrides: Optional[Mapping[str, Mapping[str, Any]]] = None) -> FilterProfile:
    """Resolve a profile name against the builtins and configured overrides.

    A configured entry that shares a builtin's name only needs the fields it changes; any other configured name must
    define every bound.

    Args:
        name: Profile name.
        overrides: Configured profiles keyed by name.

    Returns:
        FilterProfile: The resolved profile.

    Raises:
        UnknownProfile: If the name is neither builtin nor configured.
        pydantic.ValidationError: If the merged profile is invalid.
    """
    overrides = overrides or {}
    if name not in overrides:
        return builtin_profile(name)
    base = BUILTIN_PROFILES[name].model_dump() if name in BUILTIN_PROFILES else {}
    return FilterProfile.model_validate({**base, **overrides[name]})


@dataclass(frozen=True)
class RejectionStats:
    """Per-criterion rejection counts for one or more frames.

    Each rejected point is counted once, under the first criterion it fails in the order RCS, degenerate position,
    angular bounds, Doppler bounds.
    """

    raw: int = 0
    kept: int = 0
    rcs: int = 0
    degenerate: int = 0
    angular: int = 0
    doppler: int = 0

    @property
    def rejected(self) -> int:
        """Get the total number of rejected points."""
        return self.raw - self.kept

    def as_dict(self) -> dict[str, int]:
        """Return the counts as a dict in field order."""
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def __add__(self, other: "RejectionStats") -> "RejectionStats":
        """Sum the counts of two stats."""
        return RejectionStats(**{f.name: getattr(self, f.name) + getattr(other, f.name) for f in fields(self)})


def _criteria(
    profile: FilterProfile, xyz: np.ndarray, doppler: np.ndarray, rcs: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    azimuth, elevation, degenerate = angles_deg(xyz)
    rcs_ok = (rcs > profile.rcs_min) & (rcs < profile.rcs_max)
    angular_ok = (
        (azimuth >= profile.az_min)
        & (azimuth <= profile.az_max)
        & (elevation >= profile.el_min)
        & (elevation <= profile.el_max)
    )
    doppler_ok = (doppler >= profile.v_min) & (doppler <= profile.v_max)
    return rcs_ok, degenerate, angular_ok, doppler_ok


def pass_mask(profile: FilterProfile, frame: RadarFrame) -> np.ndarray:
    """Get the boolean keep mask of a frame under a profile."""
    rcs_ok, degenerate, angular_ok, doppler_ok = _criteria(profile, frame.xyz, frame.doppler, frame.rcs)
    return rcs_ok & ~degenerate & angular_ok & doppler_ok


def point_passes(profile: FilterProfile, p: RadarPoint) -> bool:
    """Check whether a single point survives every threshold.

    A point at the sensor origin fails rather than raising.
    """
    rcs_ok, degenerate, angular_ok, doppler_ok = _criteria(
        profile, p.position[None, :], np.array([p.doppler]), np.array([p.rcs])
    )
    return bool(rcs_ok[0] and not degenerate[0] and angular_ok[0] and doppler_ok[0])


def filter_frame(profile: FilterProfile, frame: RadarFrame) -> tuple[RadarFrame, RejectionStats]:
    """Keep the points of a frame that pass the profile, in their original order.

    Args:
        profile: Threshold profile.
        frame: Raw frame.

    Returns:
        tuple: The filtered frame and its rejection counts.
    """
    rcs_ok, degenerate, angular_ok, doppler_ok = _criteria(profile, frame.xyz, frame.doppler, frame.rcs)
    usable = rcs_ok & ~degenerate
    geometric = usable & angular_ok
    keep = geometric & doppler_ok
    stats = RejectionStats(
        raw=len(frame),
        kept=int(keep.sum()),
        rcs=int((~rcs_ok).sum()),
        degenerate=int((rcs_ok & degenerate).sum()),
        angular=int((usable & ~angular_ok).sum()),
        doppler=int((geometric & ~doppler_ok).sum()),
    )
    logger.debug("Frame %.6f: kept %d of %d points %s", frame.timestamp, stats.kept, stats.raw, stats.as_dict())
    return frame.subset(keep), stats
