from typing import Literal

ProfileName = Literal["indoor", "outdoor"]
SourceTag = Literal["current", "accumulated_previous"]
DopplerSign = Literal["closing_positive", "receding_positive"]
ObjectType = Literal["pedestrian", "large_object", "unknown"]
MotionState = Literal["static", "dynamic"]
Heading = Literal["approaching", "receding", "none"]
StageName = Literal["filter", "accumulate", "cluster", "describe", "retain", "classify", "total"]
ObjectClass = Literal["pedestrian", "wall"]
