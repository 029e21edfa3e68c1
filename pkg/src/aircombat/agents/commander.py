"""The commander: a linear softmax over tactical features, once per second.

The commander looks at five summary features of an aircraft's situation
and picks which control policy it should run.  Parameters are a 3x6
logit matrix (five normalized features plus a bias column), small enough
to train with a plain policy gradient and to audit by eye.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..combat.observation import (
    BLK_ASPECT,
    BLK_RANGE,
    OWN_ALTITUDE,
    OWN_HP,
    OWN_SPEED,
    Observation,
)
from ..combat.rewards import PolicyKind
from ..errors import ConfigurationError
from ..flightdyn import DEFAULT_PARAMS
from .opponents import POLICY_ORDER

NUM_FEATURES = 6      # five features plus bias
NUM_POLICIES = 3
LOCAL_RADIUS = 5000.0         # m, counts toward numerical advantage
NO_THREAT_RANGE = 1.0e5       # m, stands in for "no enemy in sight"


@dataclass(frozen=True)
class CommanderFeatures:
    """Raw (unnormalized) inputs to one commander decision."""

    hp: float
    nearest_threat_range: float     # m; NO_THREAT_RANGE when none visible
    nearest_threat_aspect: float    # rad off the threat's tail; 0 = we are astern
    local_advantage: float          # (self + allies) - enemies within 5 km
    energy: float                   # h + v^2 / 2g, m

    def __post_init__(self):
        for name, value in self.__dict__.items():
            if not math.isfinite(value):
                raise ConfigurationError(f"feature {name} must be finite, got {value}")


@dataclass(frozen=True)
class CommanderDecision:
    chosen: PolicyKind
    decision_time: float
    features: CommanderFeatures
    probabilities: tuple[float, float, float]


@dataclass(frozen=True)
class CommanderParams:
    """Logit matrix mapping the feature vector to policy preferences."""

    weights: np.ndarray      # (3, 6)
    version: int = 1

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (NUM_POLICIES, NUM_FEATURES):
            raise ConfigurationError(
                f"weights must be {NUM_POLICIES}x{NUM_FEATURES}, got {w.shape}")
        if not np.all(np.isfinite(w)):
            raise ConfigurationError("weights must be finite")
        object.__setattr__(self, "weights", w)

    def with_weights(self, weights: np.ndarray) -> "CommanderParams":
        return CommanderParams(weights=weights, version=self.version)

    def to_dict(self) -> dict:
        return {"version": self.version, "weights": self.weights.tolist()}

    @classmethod
    def from_dict(cls, payload: dict) -> "CommanderParams":
        try:
            return cls(weights=np.array(payload["weights"], dtype=float),
                       version=int(payload["version"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigurationError(f"bad commander params document: {exc}") from exc

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "CommanderParams":
        try:
            payload = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"cannot read commander params: {exc}") from exc
        return cls.from_dict(payload)


def commander_features(obs: Observation) -> CommanderFeatures:
    """Summarize an observation for the commander."""
    slot = obs.nearest_enemy()
    if slot is None:
        threat_range = NO_THREAT_RANGE
        threat_aspect = math.pi / 2.0
    else:
        threat_range = float(obs.blocks[slot, BLK_RANGE])
        threat_aspect = float(obs.blocks[slot, BLK_ASPECT])
    ally_blocks, ally_mask = obs.ally_blocks()
    enemy_blocks, enemy_mask = obs.enemy_blocks()
    allies_near = 1 + int(np.sum(
        (ally_blocks[:, BLK_RANGE] <= LOCAL_RADIUS) & (ally_mask > 0)))
    enemies_near = int(np.sum(
        (enemy_blocks[:, BLK_RANGE] <= LOCAL_RADIUS) & (enemy_mask > 0)))
    speed = float(obs.own[OWN_SPEED])
    energy = float(obs.own[OWN_ALTITUDE]) + speed * speed / (2.0 * DEFAULT_PARAMS.gravity)
    return CommanderFeatures(
        hp=float(obs.own[OWN_HP]),
        nearest_threat_range=threat_range,
        nearest_threat_aspect=threat_aspect,
        local_advantage=float(allies_near - enemies_near),
        energy=energy,
    )


def feature_vector(feats: CommanderFeatures) -> np.ndarray:
    """Normalized (6,) input to the logit matrix; last entry is the bias."""
    return np.array([
        feats.hp,
        min(max(feats.nearest_threat_range / 10000.0, 0.0), 1.0),
        feats.nearest_threat_aspect / math.pi,
        min(max(feats.local_advantage / 5.0, -1.0), 1.0),
        min(max(feats.energy / 15000.0, 0.0), 2.0),
        1.0,
    ])


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = np.asarray(logits, dtype=float)
    shifted = shifted - shifted.max()
    exp = np.exp(shifted)
    return exp / exp.sum()


def commander_select(
    params: CommanderParams,
    feats: CommanderFeatures,
    rng: np.random.Generator | None = None,
    explore: bool = False,
    decision_time: float = 0.0,
) -> CommanderDecision:
    """Pick a control policy: sampled when exploring, argmax otherwise."""
    probs = softmax(params.weights @ feature_vector(feats))
    if explore:
        if rng is None:
            raise ConfigurationError("sampling a decision requires an rng")
        choice = int(rng.choice(NUM_POLICIES, p=probs))
    else:
        choice = int(np.argmax(probs))
    return CommanderDecision(
        chosen=POLICY_ORDER[choice],
        decision_time=decision_time,
        features=feats,
        probabilities=tuple(float(p) for p in probs),
    )


def log_policy_grad(
    params: CommanderParams,
    feats: CommanderFeatures,
    chosen: PolicyKind,
) -> np.ndarray:
    """Gradient of log pi(chosen | feats) with respect to the weights."""
    x = feature_vector(feats)
    probs = softmax(params.weights @ x)
    indicator = np.zeros(NUM_POLICIES)
    indicator[POLICY_ORDER.index(PolicyKind(chosen))] = 1.0
    return np.outer(indicator - probs, x)


def initial_params() -> CommanderParams:
    """Hand-initialized rule-equivalent weights.

    Pursuit wins this game, so the prior leans hard toward attack;
    engage gets a look when already parked behind a target, defend when
    outnumbered with a threat closing.  Rows are (attack, engage,
    defend), columns (hp, range, aspect, advantage, energy, bias).
    """
    weights = np.array([
        [0.0,  0.3,  0.5,  0.5,  0.0,  1.2],
        [0.0, -0.5, -2.0,  0.0,  0.0,  0.6],
        [0.0, -1.5,  1.0, -1.0, -0.5, -1.0],
    ])
    return CommanderParams(weights=weights, version=1)
