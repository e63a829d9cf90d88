"""Stage 4: rule-based object typing, motion state and line-of-sight heading."""

from dataclasses import dataclass

from pydantic import BaseModel, ConfigDict, Field, model_validator

from radarpercept._types import Heading, MotionState, ObjectType
from radarpercept.clustering import Cluster, ClusterDescriptors
from radarpercept.core import Vector3
from radarpercept.errors import EmptyCluster


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box in the sensor frame.

    `w` spans sensor y, `l` spans sensor x and `h` spans sensor z.
    """

    w: float
    l: float  # noqa: E741
    h: float
    centroid: Vector3

    def __post_init__(self) -> None:
        """Reject negative extents."""
        if min(self.w, self.l, self.h) < 0:
            raise ValueError(f"Bounding box extents must be non-negative, got w={self.w} l={self.l} h={self.h}")


class ClassifierRules(BaseModel):
    """Thresholds of the rule-based classifier.

    Pedestrian bounds describe a body roughly 0.5-1.0 m wide, under 2 m tall, with a weak return; the large object
    bounds describe extended, strongly reflecting structures.
    """

    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)

    ped_w_min: float = Field(default=0.5, gt=0.0)
    ped_w_max: float = Field(default=1.0, gt=0.0)
    ped_h_max: float = Field(default=2.0, gt=0.0)
    ped_l_max: float = Field(default=1.0, gt=0.0)
    ped_rcs_abs_max: float = Field(default=10.0, gt=0.0)
    large_extent_min: float = Field(default=1.5, gt=0.0)
    large_rcs_min: float = Field(default=25.0, gt=0.0)
    v_static: float = Field(default=0.25, gt=0.0)

    @model_validator(mode="after")
    def _check_width(self) -> "ClassifierRules":
        if self.ped_w_min >= self.ped_w_max:
            raise ValueError(f"ped_w_min ({self.ped_w_min}) must be less than ped_w_max ({self.ped_w_max})")
        return self


@dataclass(frozen=True)
class DetectedObject:
    """A classified cluster."""

    object_type: ObjectType
    motion: MotionState
    heading: Heading
    box: BoundingBox
    descriptors: ClusterDescriptors
    frame_timestamp: float

    def __post_init__(self) -> None:
        """Enforce that only dynamic objects carry a heading."""
        if (self.heading == "none") != (self.motion == "static"):
            raise ValueError(f"Heading {self.heading!r} is inconsistent with motion {self.motion!r}")


def bounding_box(cluster: Cluster) -> BoundingBox:
    """Get the axis-aligned extents and member-mean centroid of a cluster.

    Raises:
        EmptyCluster: If the cluster has no members.
    """
    if len(cluster) == 0:
        raise EmptyCluster("Bounding box of an empty cluster")
    xyz = cluster.members.xyz
    extent = xyz.max(axis=0) - xyz.min(axis=0)
    centroid = xyz.mean(axis=0)
    return BoundingBox(
        w=float(extent[1]),
        l=float(extent[0]),
        h=float(extent[2]),
        centroid=(float(centroid[0]), float(centroid[1]), float(centroid[2])),
    )


def object_type(box: BoundingBox, descriptors: ClusterDescriptors, rules: ClassifierRules) -> ObjectType:
    """Infer the object type from size and modal RCS."""
    if (
        rules.ped_w_min <= box.w <= rules.ped_w_max
        and box.h <= rules.ped_h_max
        and box.l <= rules.ped_l_max
        and abs(descriptors.modal_rcs) <= rules.ped_rcs_abs_max
    ):
        return "pedestrian"
    if max(box.w, box.l) >= rules.large_extent_min or descriptors.modal_rcs >= rules.large_rcs_min:
        return "large_object"
    return "unknown"


def classify(
    box: BoundingBox, descriptors: ClusterDescriptors, rules: ClassifierRules, frame_timestamp: float = 0.0
) -> DetectedObject:
    """Type a retained cluster and read its motion state and heading from the compensated mean Doppler.

    A positive compensated Doppler means the object closes on the sensor.

    Args:
        box: Cluster bounding box.
        descriptors: Cluster descriptors.
        rules: Classifier thresholds.
        frame_timestamp: Time of the frame the cluster came from.

    Returns:
        DetectedObject: The classified object.
    """
    velocity = descriptors.comp_mean_doppler
    motion: MotionState = "dynamic" if abs(velocity) > rules.v_static else "static"
    heading: Heading = "none"
    if motion == "dynamic":
        heading = "approaching" if velocity > 0 else "receding"
    return DetectedObject(
        object_type=object_type(box, descriptors, rules),
        motion=motion,
        heading=heading,
        box=box,
        descriptors=descriptors,
        frame_timestamp=frame_timestamp,
    )
