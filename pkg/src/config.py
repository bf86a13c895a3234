"""
Configuration Management Module
Handles encoder, fabrication and pipeline settings
"""

import copy
import json
import logging
import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from src.errors import ConfigError

logger = logging.getLogger(__name__)

CONFIG_ENV_VAR = "BALATON_TABLEWARE_CONFIG"


class Config:
    """Tableware configuration manager"""

    CONFIG_FILE = "tableware_config.toml"

    DEFAULT_CONFIG = {
        # Mug encoding
        "mug_diameter": 80.0,
        "spiral_pitch": 5.0,
        "map_scale_reedbed": 1000.0,
        "perforation_radius": 2.0,
        "spiral_groove_depth": 0.8,
        "spiral_groove_width": 2.5,

        # Jug encoding
        "jug_diameter_tall": 90.0,
        "jug_diameter_short": 90.0,
        "jug_tall_threshold": 120.0,

        # Plates
        "small_plate_diameter": 160.0,
        "small_plate_min_angle": 2.0,
        "small_plate_thickness": 8.0,
        "deep_plate_diameter": 220.0,
        "deep_plate_height": 45.0,
        "deep_plate_foot_diameter": 110.0,
        "deep_plate_pivot_height": None,  # None = rim height
        "map_scale_shoreline_outline": 22400.0,
        "flat_plate_frame": [260.0, 260.0],
        "flat_plate_diameter": 240.0,
        "flat_plate_thickness": 8.0,
        "serving_plate_diameter": 300.0,
        "serving_plate_thickness": 10.0,

        # Fabrication
        "wall_thickness": 4.0,
        "base_thickness": 4.0,
        "concrete_thickness": 4.0,
        "concrete_density": 2400.0,
        "firing_kwh_per_piece": 3.5,
        "mesh_segments": 128,

        # Geodata
        "profile_samples": 256,
        "lakebed_level": 113.0,

        # Logging
        "log_file": "",
        "log_level": "INFO",
    }

    def __init__(self, config_path: Optional[str] = None):
        self.config_path = Path(config_path) if config_path else None
        self.data: Dict[str, Any] = copy.deepcopy(self.DEFAULT_CONFIG)
        self.overridden: List[str] = []
        if self.config_path is not None:
            self.load_config()

    @classmethod
    def from_environment(cls, explicit_path: Optional[str] = None) -> "Config":
        """Resolve config path from the flag, then the environment, then defaults"""
        path = explicit_path or os.environ.get(CONFIG_ENV_VAR) or None
        return cls(path)

    def load_config(self):
        """Load configuration from a TOML or JSON file on top of the defaults"""
        path = self.config_path
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            if path.suffix.lower() == ".json":
                with open(path, "r", encoding="utf-8") as f:
                    loaded = json.load(f)
            else:
                with open(path, "rb") as f:
                    loaded = tomllib.load(f)
        except (OSError, ValueError) as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e

        if not isinstance(loaded, dict):
            raise ConfigError(f"config {path} must be a key/value table")

        self.data.update(loaded)
        self.overridden = sorted(loaded)
        logger.info("✓ Configuration loaded from %s", path)

    def save_config(self, path: Optional[str] = None):
        """Save configuration as JSON (the format the defaults round-trip through)"""
        target = Path(path) if path else self.config_path
        if target is None:
            raise ConfigError("no config path to save to")
        with open(target, "w", encoding="utf-8") as f:
            json.dump(self.data, f, indent=4, sort_keys=True)
        logger.info("✓ Configuration saved to %s", target)

    def get(self, key, default=None):
        """Get configuration value"""
        return self.data.get(key, default)

    def set(self, key, value):
        """Set configuration value in memory"""
        self.data[key] = value
        if key not in self.overridden:
            self.overridden = sorted(self.overridden + [key])

    def reset_to_defaults(self):
        """Reset configuration to default values"""
        self.data = copy.deepcopy(self.DEFAULT_CONFIG)
        self.overridden = []

    def defaults_applied(self) -> List[str]:
        """Keys whose value still comes from DEFAULT_CONFIG"""
        return sorted(k for k in self.DEFAULT_CONFIG if k not in self.overridden)

    def validate(self) -> List[str]:
        """Validate configuration values, returning the list of issues"""
        issues = []

        for key in sorted(self.data):
            if key not in self.DEFAULT_CONFIG:
                issues.append(f"unknown key '{key}'")

        for key, default in self.DEFAULT_CONFIG.items():
            value = self.data.get(key)
            if isinstance(default, float) and not isinstance(value, (int, float)):
                issues.append(f"{key} must be a number")
            elif isinstance(default, float) and value <= 0 and key != "small_plate_min_angle":
                issues.append(f"{key} must be positive")

        angle = self.data.get("small_plate_min_angle")
        if isinstance(angle, (int, float)) and not (0 <= angle < 360):
            issues.append("small_plate_min_angle must be in [0, 360)")

        frame = self.data.get("flat_plate_frame")
        if not (isinstance(frame, (list, tuple)) and len(frame) == 2
                and all(isinstance(v, (int, float)) and v > 0 for v in frame)):
            issues.append("flat_plate_frame must be two positive numbers [width, height]")

        segments = self.data.get("mesh_segments")
        if not isinstance(segments, int) or segments < 3:
            issues.append("mesh_segments must be an integer >= 3")

        samples = self.data.get("profile_samples")
        if not isinstance(samples, int) or samples < 2:
            issues.append("profile_samples must be an integer >= 2")

        pivot = self.data.get("deep_plate_pivot_height")
        if pivot is not None and not isinstance(pivot, (int, float)):
            issues.append("deep_plate_pivot_height must be a number")

        for issue in issues:
            logger.warning("⚠ Configuration issue: %s", issue)
        return issues

    def snapshot(self) -> Dict[str, Any]:
        """Effective configuration plus which keys were defaulted"""
        return {
            "values": {k: self.data[k] for k in sorted(self.data)},
            "defaults_applied": self.defaults_applied(),
        }

    def __str__(self):
        """String representation of config"""
        return json.dumps(self.data, indent=2, sort_keys=True)


@dataclass(frozen=True)
class EncoderConfig:
    """Constants the encoder and mesher consume; lengths in mm, scales as denominators"""

    mug_diameter: float = 80.0
    spiral_pitch: float = 5.0
    map_scale_reedbed: float = 1000.0
    map_scale_shoreline_outline: float = 22400.0
    jug_diameter_tall: float = 90.0
    jug_diameter_short: float = 90.0
    jug_tall_threshold: float = 120.0
    perforation_radius: float = 2.0
    spiral_groove_depth: float = 0.8
    spiral_groove_width: float = 2.5
    small_plate_diameter: float = 160.0
    small_plate_min_angle: float = 2.0
    small_plate_thickness: float = 8.0
    deep_plate_diameter: float = 220.0
    deep_plate_height: float = 45.0
    deep_plate_foot_diameter: float = 110.0
    deep_plate_pivot_height: Optional[float] = None
    flat_plate_frame: Tuple[float, float] = (260.0, 260.0)
    flat_plate_diameter: float = 240.0
    flat_plate_thickness: float = 8.0
    serving_plate_diameter: float = 300.0
    serving_plate_thickness: float = 10.0
    wall_thickness: float = 4.0
    base_thickness: float = 4.0
    concrete_thickness: float = 4.0
    concrete_density: float = 2400.0
    firing_kwh_per_piece: float = 3.5
    mesh_segments: int = 128
    profile_samples: int = 256

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name in ("small_plate_min_angle", "deep_plate_pivot_height",
                          "flat_plate_frame"):
                continue
            if value <= 0:
                raise ConfigError(f"{f.name} must be > 0, got {value}")
        if not (0 <= self.small_plate_min_angle < 360):
            raise ConfigError("small_plate_min_angle must be in [0, 360)")
        width, height = self.flat_plate_frame
        if width <= 0 or height <= 0:
            raise ConfigError("flat_plate_frame dimensions must be > 0")
        if self.perforation_radius >= self.spiral_pitch / 2:
            raise ConfigError("perforation_radius must be < spiral_pitch / 2")
        if self.spiral_groove_width > self.spiral_pitch:
            raise ConfigError("spiral_groove_width must be <= spiral_pitch")
        if self.spiral_groove_depth >= self.wall_thickness:
            raise ConfigError("spiral_groove_depth must be < wall_thickness")
        if self.mesh_segments < 3:
            raise ConfigError("mesh_segments must be >= 3")
        if 2 * self.wall_thickness >= min(self.mug_diameter, self.jug_diameter_short,
                                          self.jug_diameter_tall):
            raise ConfigError("wall_thickness leaves no cavity")

    @property
    def pivot_height(self) -> float:
        """Deep plate cutting pivot height, the rim unless configured"""
        if self.deep_plate_pivot_height is None:
            return self.deep_plate_height
        return self.deep_plate_pivot_height

    @classmethod
    def from_config(cls, config: Config) -> "EncoderConfig":
        """Build from a Config, ignoring keys the encoder does not use"""
        issues = config.validate()
        if issues:
            raise ConfigError("; ".join(issues))
        kwargs = {}
        for f in fields(cls):
            value = config.get(f.name)
            if f.name == "flat_plate_frame":
                value = tuple(float(v) for v in value)
            elif f.name in ("mesh_segments", "profile_samples"):
                value = int(value)
            elif value is not None:
                value = float(value)
            kwargs[f.name] = value
        return cls(**kwargs)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["flat_plate_frame"] = list(self.flat_plate_frame)
        return data
