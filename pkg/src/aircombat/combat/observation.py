"""Fixed-size per-aircraft observations.

Every aircraft sees its own kinematics plus one six-value block per
other aircraft, padded to the 10-vs-10 maximum roster so observation
shape never depends on the scenario.  Slots 0-8 hold teammates, slots
9-18 hold enemies, each ordered by entity id; absent or dead aircraft
leave a zero block with mask 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..discodec import EntityId
from .geometry import PairwiseGeometry

MAX_TEAM_SIZE = 10
ALLY_SLOTS = MAX_TEAM_SIZE - 1
ENEMY_SLOTS = MAX_TEAM_SIZE
NUM_SLOTS = ALLY_SLOTS + ENEMY_SLOTS

# Own-state vector layout.
OWN_SPEED, OWN_ALTITUDE, OWN_HEADING, OWN_BANK, OWN_HP = range(5)
OWN_SIZE = 5

# Relative block columns.
BLK_RANGE, BLK_BEARING, BLK_ASPECT, BLK_CLOSURE, BLK_ALT_DELTA, BLK_ALIVE = range(6)
BLOCK_SIZE = 6


@dataclass(frozen=True)
class Observation:
    """One aircraft's view of the world.

    ``blocks`` is (19, 6); ``mask`` is 1.0 where the slot holds a living
    aircraft.  Enemy slots start at :data:`ALLY_SLOTS`.
    """

    viewer: EntityId
    own: np.ndarray
    blocks: np.ndarray
    mask: np.ndarray

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.own, self.blocks.ravel(), self.mask])

    def enemy_blocks(self) -> tuple[np.ndarray, np.ndarray]:
        """(blocks, mask) restricted to the enemy slots."""
        return self.blocks[ALLY_SLOTS:], self.mask[ALLY_SLOTS:]

    def ally_blocks(self) -> tuple[np.ndarray, np.ndarray]:
        return self.blocks[:ALLY_SLOTS], self.mask[:ALLY_SLOTS]

    def nearest_enemy(self) -> int | None:
        """Slot index (into blocks) of the closest living enemy."""
        blocks, mask = self.enemy_blocks()
        if not mask.any():
            return None
        ranges = np.where(mask > 0, blocks[:, BLK_RANGE], np.inf)
        return ALLY_SLOTS + int(np.argmin(ranges))


def slot_layout(
    index: int, teams: "list[str] | tuple[str, ...]"
) -> np.ndarray:
    """Roster indices feeding each observation slot of one viewer.

    Returns a (19,) int array; -1 marks a permanently empty slot.
    Teammates fill slots 0-8 and enemies 9-18, both in roster order,
    which is entity-id order within each team.
    """
    rows = np.full(NUM_SLOTS, -1, dtype=int)
    allies = [j for j, t in enumerate(teams) if t == teams[index] and j != index]
    enemies = [j for j, t in enumerate(teams) if t != teams[index]]
    rows[:len(allies)] = allies
    rows[ALLY_SLOTS:ALLY_SLOTS + len(enemies)] = enemies
    return rows


def build_observation(
    index: int,
    slot_rows: np.ndarray,
    geom: PairwiseGeometry,
    speed: np.ndarray,
    altitude: np.ndarray,
    heading: np.ndarray,
    bank: np.ndarray,
    hp: np.ndarray,
    alive: np.ndarray,
    viewer: EntityId,
) -> Observation:
    own = np.array([
        speed[index], altitude[index], heading[index], bank[index], hp[index],
    ])
    safe = np.where(slot_rows >= 0, slot_rows, 0)
    valid = (slot_rows >= 0) & alive[safe]
    blocks = np.stack([
        geom.rng[index, safe],
        geom.bearing[index, safe],
        geom.aspect[index, safe],
        geom.closure[index, safe],
        geom.alt_delta[index, safe],
        np.ones(NUM_SLOTS),
    ], axis=1)
    # Indexing through `safe` can touch the geometry diagonal (range = inf),
    # so masked slots must be overwritten rather than multiplied by zero.
    blocks = np.where(valid[:, None], blocks, 0.0)
    return Observation(
        viewer=viewer, own=own, blocks=blocks, mask=valid.astype(float))
