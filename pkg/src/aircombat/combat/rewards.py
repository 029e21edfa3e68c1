"""Per-policy reward terms.

Each control policy earns a different reward reflecting its tactical
intent: attack is paid for kills, engage for holding a rear-quarter
position, defend for staying alive and opening the range.  Magnitudes
are chosen so terminal events dominate shaping by at least an order of
magnitude; every constant lives here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum


class PolicyKind(str, Enum):
    """The three low-level control policies an aircraft can run."""

    ATTACK = "attack"
    ENGAGE = "engage"
    DEFEND = "defend"


ATTACK_KILL = 1.0
ATTACK_DEATH = -1.0
ATTACK_STEP_COST = -0.001

ENGAGE_SHAPE_COEF = 0.5
ENGAGE_SHAPE_RANGE = 3000.0          # m, shaping active inside this range
ENGAGE_CONE_COS = math.cos(math.radians(30.0))
ENGAGE_LOCK_BONUS = 1.0
ENGAGE_LOCK_RANGE = 3000.0           # m
ENGAGE_LOCK_ATA = math.radians(30.0)    # own nose off the line of sight
ENGAGE_LOCK_ASPECT = math.radians(45.0) # rear-quarter of the target
ENGAGE_LOCK_STEPS = 40               # 2 s at the 20 Hz decision rate
ENGAGE_DEATH = -1.0

DEFEND_STEP_ALIVE = 0.0005
DEFEND_DEATH = -1.0
DEFEND_ESCAPE_BONUS = 0.3
DEFEND_ESCAPE_RANGE = 5000.0         # m, bonus when nearest threat passes this


@dataclass(frozen=True)
class RewardContext:
    """Everything one aircraft's step reward depends on."""

    kills: int
    died: bool
    survived: bool
    nearest_enemy_range: float       # inf when no living enemy
    nearest_enemy_ata_cos: float     # cos of own nose-off angle to that enemy
    lock_achieved: bool              # rear-quarter hold crossed 2 s this step
    threat_escaped: bool             # nearest-threat range crossed 5 km outward


def step_reward(policy: PolicyKind, ctx: RewardContext) -> float:
    """Reward for one 20 Hz step under the given active policy."""
    if policy is PolicyKind.ATTACK:
        reward = ATTACK_KILL * ctx.kills + ATTACK_STEP_COST
        if ctx.died:
            reward += ATTACK_DEATH
        return reward
    if policy is PolicyKind.ENGAGE:
        reward = 0.0
        if ctx.nearest_enemy_range <= ENGAGE_SHAPE_RANGE:
            reward += ENGAGE_SHAPE_COEF * max(
                0.0, ctx.nearest_enemy_ata_cos - ENGAGE_CONE_COS)
        if ctx.lock_achieved:
            reward += ENGAGE_LOCK_BONUS
        if ctx.died:
            reward += ENGAGE_DEATH
        return reward
    if policy is PolicyKind.DEFEND:
        reward = 0.0
        if ctx.survived:
            reward += DEFEND_STEP_ALIVE
        if ctx.threat_escaped:
            reward += DEFEND_ESCAPE_BONUS
        if ctx.died:
            reward += DEFEND_DEATH
        return reward
    raise ValueError(f"unknown policy kind {policy!r}")
