"""Pairwise combat geometry computed once per environment step.

All angle/range relations between every pair of aircraft come out of a
single vectorized pass over the roster arrays; the weapon check, reward
shaping and observations all read from the same matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..flightdyn import AircraftState, StateArrays

GUN_RANGE = 1500.0
GUN_ATA = math.radians(10.0)
_GUN_ATA_COS = math.cos(GUN_ATA)


@dataclass
class PairwiseGeometry:
    """Square matrices indexed [viewer, other].

    ``rng`` carries +inf on the diagonal so self-pairs never win a
    nearest-neighbour scan.  ``aspect[i, j]`` is the angle off the tail
    of j as seen along the line of sight from j to i: 0 means i sits
    dead astern of j.
    """

    rng: np.ndarray
    bearing: np.ndarray
    ata: np.ndarray
    aspect: np.ndarray
    closure: np.ndarray
    alt_delta: np.ndarray
    nose_dot: np.ndarray    # nose_i . (pos_j - pos_i), for the cone test


def compute_geometry(arrays: StateArrays) -> PairwiseGeometry:
    pos = np.stack([arrays.north, arrays.east, arrays.down], axis=1)
    vel = arrays.velocity_ned()
    speed_safe = np.maximum(arrays.speed, 1e-9)
    nose = vel / speed_safe[:, None]

    rel = pos[None, :, :] - pos[:, None, :]          # rel[i, j] = pos_j - pos_i
    rng = np.sqrt(np.einsum("ijk,ijk->ij", rel, rel))
    np.fill_diagonal(rng, np.inf)

    nose_dot = np.einsum("ik,ijk->ij", nose, rel)
    tail_dot = np.einsum("jk,ijk->ij", nose, rel)
    ata = np.arccos(np.clip(nose_dot / rng, -1.0, 1.0))
    aspect = np.arccos(np.clip(tail_dot / rng, -1.0, 1.0))

    dvel = vel[None, :, :] - vel[:, None, :]
    closure = -np.einsum("ijk,ijk->ij", rel, dvel) / rng

    bearing = np.arctan2(rel[:, :, 1], rel[:, :, 0]) - arrays.heading[:, None]
    bearing = np.mod(bearing + math.pi, 2.0 * math.pi) - math.pi

    alt_delta = arrays.down[:, None] - arrays.down[None, :]

    return PairwiseGeometry(
        rng=rng, bearing=bearing, ata=ata, aspect=aspect,
        closure=closure, alt_delta=alt_delta, nose_dot=nose_dot,
    )


def wez_mask(geom: PairwiseGeometry) -> np.ndarray:
    """Boolean matrix: [shooter, target] inside the gun engagement zone.

    The cone test compares dot products rather than angles so the 10
    degree boundary is inclusive without arccos rounding.
    """
    return (geom.rng <= GUN_RANGE) & (geom.nose_dot >= geom.rng * _GUN_ATA_COS)


def wez_check(shooter: AircraftState, target: AircraftState) -> bool:
    """True when the target sits inside the shooter's gun engagement
    zone: range at most 1500 m and at most 10 degrees off the nose,
    both boundaries inclusive."""
    rel = np.array(target.position) - np.array(shooter.position)
    rng = float(np.linalg.norm(rel))
    if rng == 0.0 or rng > GUN_RANGE:
        return False
    vn, ve, vd = shooter.velocity_ned()
    speed = max(shooter.speed, 1e-9)
    nose = np.array([vn, ve, vd]) / speed
    return float(nose @ rel) >= rng * _GUN_ATA_COS
