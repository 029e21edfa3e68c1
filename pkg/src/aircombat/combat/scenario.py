"""Scenario configuration: spawn volumes, roster sizes, episode limits.

The on-disk form is a JSON document; the schema is documented in
docs/scenario.md.  Everything is validated up front so a bad scenario
fails at load time, not mid-episode.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from ..errors import ConfigurationError
from ..flightdyn import DEFAULT_PARAMS

MAX_TEAM_SIZE = 10

FACING_TOWARD_ENEMY = "toward-enemy"
FACING_RANDOM = "random"


@dataclass(frozen=True)
class TeamSpawn:
    """Cylindrical spawn volume for one team."""

    center: tuple[float, float]          # north, east (m)
    radius_km: float
    altitude_band: tuple[float, float]   # low, high (m)


@dataclass(frozen=True)
class SpawnSpec:
    blue: TeamSpawn
    red: TeamSpawn
    speed_band: tuple[float, float]      # m/s
    facing: str = FACING_TOWARD_ENEMY


@dataclass(frozen=True)
class ScenarioConfig:
    blue_count: int
    red_count: int
    spawn: SpawnSpec
    time_limit: float
    seed: int
    curriculum_stage: int = 0
    gamma: float = 0.99
    hit_probability: float = 0.35
    human_slots: dict[str, int] = field(default_factory=lambda: {"blue": 0, "red": 0})
    curriculum: tuple[dict, ...] | None = None

    def validate(self) -> None:
        if not 1 <= self.blue_count <= MAX_TEAM_SIZE:
            raise ConfigurationError(
                f"blue_count must be in [1, {MAX_TEAM_SIZE}], got {self.blue_count}")
        if not 1 <= self.red_count <= MAX_TEAM_SIZE:
            raise ConfigurationError(
                f"red_count must be in [1, {MAX_TEAM_SIZE}], got {self.red_count}")
        if not self.time_limit > 0:
            raise ConfigurationError(f"time_limit must be positive, got {self.time_limit}")
        if not 0.0 <= self.gamma < 1.0:
            raise ConfigurationError(f"gamma must be in [0, 1), got {self.gamma}")
        if not 0.0 <= self.hit_probability <= 1.0:
            raise ConfigurationError(
                f"hit_probability must be in [0, 1], got {self.hit_probability}")
        if self.curriculum_stage < 0:
            raise ConfigurationError("curriculum_stage must be non-negative")
        for team, count in (("blue", self.blue_count), ("red", self.red_count)):
            slots = self.human_slots.get(team, 0)
            if slots < 0 or slots > count:
                raise ConfigurationError(
                    f"human_slots[{team}] = {slots} exceeds team size {count}")
        self._validate_spawn()

    def _validate_spawn(self) -> None:
        spawn = self.spawn
        if spawn.facing not in (FACING_TOWARD_ENEMY, FACING_RANDOM):
            raise ConfigurationError(f"unknown facing {spawn.facing!r}")
        lo, hi = spawn.speed_band
        if not (DEFAULT_PARAMS.v_min <= lo <= hi <= DEFAULT_PARAMS.v_max):
            raise ConfigurationError(
                f"speed band [{lo}, {hi}] outside envelope "
                f"[{DEFAULT_PARAMS.v_min}, {DEFAULT_PARAMS.v_max}]")
        for name, team in (("blue", spawn.blue), ("red", spawn.red)):
            a_lo, a_hi = team.altitude_band
            if not (0.0 < a_lo <= a_hi <= 20000.0):
                raise ConfigurationError(
                    f"{name} altitude band [{a_lo}, {a_hi}] must sit in (0, 20000]")
            if team.radius_km < 0:
                raise ConfigurationError(f"{name} spawn radius must be non-negative")
        separation = math.dist(spawn.blue.center, spawn.red.center)
        radii = (spawn.blue.radius_km + spawn.red.radius_km) * 1000.0
        bands_overlap = not (
            spawn.blue.altitude_band[1] < spawn.red.altitude_band[0]
            or spawn.red.altitude_band[1] < spawn.blue.altitude_band[0]
        )
        if separation <= radii and bands_overlap:
            raise ConfigurationError(
                f"spawn volumes overlap: centers {separation:.0f} m apart, "
                f"radii sum {radii:.0f} m, altitude bands intersect")

    def replace(self, **changes: Any) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "blue_count": self.blue_count,
            "red_count": self.red_count,
            "time_limit": self.time_limit,
            "seed": self.seed,
            "curriculum_stage": self.curriculum_stage,
            "gamma": self.gamma,
            "hit_probability": self.hit_probability,
            "human_slots": dict(self.human_slots),
            "spawn": {
                "blue": _team_to_dict(self.spawn.blue),
                "red": _team_to_dict(self.spawn.red),
                "speed_band": list(self.spawn.speed_band),
                "facing": self.spawn.facing,
            },
            **({"curriculum": [dict(s) for s in self.curriculum]}
               if self.curriculum is not None else {}),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ScenarioConfig":
        try:
            spawn_doc = doc["spawn"]
            spawn = SpawnSpec(
                blue=_team_from_dict(spawn_doc["blue"]),
                red=_team_from_dict(spawn_doc["red"]),
                speed_band=_pair(spawn_doc["speed_band"]),
                facing=spawn_doc.get("facing", FACING_TOWARD_ENEMY),
            )
            config = cls(
                blue_count=int(doc["blue_count"]),
                red_count=int(doc["red_count"]),
                spawn=spawn,
                time_limit=float(doc["time_limit"]),
                seed=int(doc["seed"]),
                curriculum_stage=int(doc.get("curriculum_stage", 0)),
                gamma=float(doc.get("gamma", 0.99)),
                hit_probability=float(doc.get("hit_probability", 0.35)),
                human_slots={
                    "blue": int(doc.get("human_slots", {}).get("blue", 0)),
                    "red": int(doc.get("human_slots", {}).get("red", 0)),
                },
                curriculum=tuple(doc["curriculum"]) if "curriculum" in doc else None,
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigurationError(f"bad scenario document: {exc!r}") from exc
        config.validate()
        return config


def _team_to_dict(team: TeamSpawn) -> dict:
    return {
        "center": list(team.center),
        "radius_km": team.radius_km,
        "altitude_band": list(team.altitude_band),
    }


def _team_from_dict(doc: dict) -> TeamSpawn:
    return TeamSpawn(
        center=_pair(doc["center"]),
        radius_km=float(doc["radius_km"]),
        altitude_band=_pair(doc["altitude_band"]),
    )


def _pair(values: Any) -> tuple[float, float]:
    a, b = values
    return (float(a), float(b))


def load_scenario(path: str | Path) -> ScenarioConfig:
    """Read and validate a scenario JSON file."""
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigurationError(f"cannot read scenario {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"scenario {path} is not valid JSON: {exc}") from exc
    return ScenarioConfig.from_dict(doc)


def save_scenario(config: ScenarioConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(config.to_dict(), indent=2) + "\n")


def default_scenario(
    blue_count: int = 1,
    red_count: int = 1,
    seed: int = 0,
    time_limit: float = 120.0,
    separation_km: float = 10.0,
    radius_km: float = 1.0,
    **overrides: Any,
) -> ScenarioConfig:
    """Head-to-head scenario with the teams facing each other."""
    half = separation_km * 500.0
    config = ScenarioConfig(
        blue_count=blue_count,
        red_count=red_count,
        spawn=SpawnSpec(
            blue=TeamSpawn((-half, 0.0), radius_km, (2500.0, 3500.0)),
            red=TeamSpawn((half, 0.0), radius_km, (2500.0, 3500.0)),
            speed_band=(200.0, 240.0),
            facing=FACING_TOWARD_ENEMY,
        ),
        time_limit=time_limit,
        seed=seed,
        **overrides,
    )
    config.validate()
    return config


def drill_scenario(
    blue_count: int = 1,
    red_count: int = 1,
    seed: int = 0,
    time_limit: float = 120.0,
    **overrides: Any,
) -> ScenarioConfig:
    """Close-merge duel with guaranteed gun lethality.

    Teams spawn 3 km apart, co-altitude and co-speed, nose to nose, and
    every valid trigger pull kills.  Almost every episode ends decisively
    inside the time limit, which makes this the geometry of choice for
    ranking policies and for curriculum rungs: outcomes reflect
    maneuvering, not hit-roll luck or a long stern chase.
    """
    config = ScenarioConfig(
        blue_count=blue_count,
        red_count=red_count,
        spawn=SpawnSpec(
            blue=TeamSpawn((-1500.0, 0.0), 0.75, (2900.0, 3100.0)),
            red=TeamSpawn((1500.0, 0.0), 0.75, (2900.0, 3100.0)),
            speed_band=(200.0, 220.0),
            facing=FACING_TOWARD_ENEMY,
        ),
        time_limit=time_limit,
        seed=seed,
        hit_probability=1.0,
        **overrides,
    )
    config.validate()
    return config
