"""Mixed-strategy opponent assignment.

A mixed team draws one control policy per aircraft at episode start,
i.i.d. from a fixed weight vector; the stock opposition runs 40%
attack, 40% engage, 20% defend.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..combat.rewards import PolicyKind
from ..discodec import EntityId
from ..errors import ConfigurationError

POLICY_ORDER = (PolicyKind.ATTACK, PolicyKind.ENGAGE, PolicyKind.DEFEND)


@dataclass(frozen=True)
class MixedStrategy:
    """Per-policy probabilities in (attack, engage, defend) order."""

    weights: tuple[float, float, float]

    def __post_init__(self):
        if len(self.weights) != 3:
            raise ConfigurationError("mixed strategy needs exactly three weights")
        if any(w < 0.0 or not math.isfinite(w) for w in self.weights):
            raise ConfigurationError(f"weights must be non-negative: {self.weights}")
        if abs(sum(self.weights) - 1.0) > 1e-9:
            raise ConfigurationError(f"weights must sum to 1: {self.weights}")


MIXED_DEFAULT = MixedStrategy((0.4, 0.4, 0.2))


def mixed_opponent_assign(
    strategy: MixedStrategy,
    team: list[EntityId],
    rng: np.random.Generator,
) -> dict[EntityId, PolicyKind]:
    """Draw one policy per aircraft, i.i.d. from the strategy weights."""
    picks = rng.choice(3, size=len(team), p=list(strategy.weights))
    return {eid: POLICY_ORDER[int(k)] for eid, k in zip(team, picks)}
