"""Structured configuration files."""

import json
import logging
from pathlib import Path
from typing import Any, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from radarpercept._types import DopplerSign
from radarpercept.classification import ClassifierRules
from radarpercept.clustering import ClusteringParams, RetentionRules
from radarpercept.constants import DEFAULT_PROFILE
from radarpercept.ego_motion import EgoMotionParams
from radarpercept.errors import ConfigError, UnknownProfile
from radarpercept.filtering import FilterProfile, resolve_profile
from radarpercept.pipeline import PipelineConfig

logger = logging.getLogger(__name__)


class ConfigFile(BaseModel):
    """Top-level layout of a pipeline config file.

    `profile` maps names to filter profiles. An entry named like a builtin profile may list only the bounds it
    changes; any other name must give every bound.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    active_profile: str = DEFAULT_PROFILE
    doppler_sign: DopplerSign = "closing_positive"
    profile: dict[str, dict[str, float]] = Field(default_factory=dict)
    clustering: dict[str, Any] = Field(default_factory=dict)
    retention: dict[str, Any] = Field(default_factory=dict)
    classifier: dict[str, Any] = Field(default_factory=dict)
    ego_motion: dict[str, Any] = Field(default_factory=dict)


def read_json(path: Union[str, Path]) -> dict[str, Any]:
    """Read a JSON object from a config file.

    Raises:
        ConfigError: If the file is missing, is not JSON or does not hold an object.
    """
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError as exc:
        raise ConfigError(f"Config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a JSON object, got {type(data).__name__}")
    return data


def build_config(data: dict[str, Any], profile: Optional[str] = None) -> PipelineConfig:
    """Validate raw config data and resolve it into a pipeline configuration.

    Args:
        data: Parsed config file contents.
        profile: Profile name overriding the file's `active_profile`.

    Returns:
        PipelineConfig: The resolved configuration.

    Raises:
        ConfigError: If a key is unknown, a value is invalid or the profile cannot be resolved.
    """
    try:
        layout = ConfigFile.model_validate(data)
        # Every configured profile is checked, not only the active one.
        profiles: dict[str, FilterProfile] = {name: resolve_profile(name, layout.profile) for name in layout.profile}
        name = profile or layout.active_profile
        active = profiles[name] if name in profiles else resolve_profile(name)
        config = PipelineConfig.model_validate(
            {
                "profile": active,
                "clustering": ClusteringParams.model_validate(layout.clustering),
                "retention": RetentionRules.model_validate(layout.retention),
                "classifier": ClassifierRules.model_validate(layout.classifier),
                "ego_motion": EgoMotionParams.model_validate(layout.ego_motion),
                "doppler_sign": layout.doppler_sign,
            }
        )
    except ValidationError as exc:
        raise ConfigError(f"Invalid configuration: {exc}") from exc
    except UnknownProfile as exc:
        raise ConfigError(str(exc)) from exc
    logger.info("Using filter profile %r: %s", name, active.model_dump())
    return config


def load_config(path: Optional[Union[str, Path]] = None, profile: Optional[str] = None) -> PipelineConfig:
    """Load a pipeline configuration, falling back to the defaults when no file is given.

    Raises:
        ConfigError: If the file cannot be read or is invalid.
    """
    data = read_json(path) if path is not None else {}
    return build_config(data, profile)
