"""Scripted control policies.

Each policy is a deterministic map from one aircraft's observation to a
stick-and-throttle command:

* attack — pure pursuit of the nearest enemy, guns as soon as the nose
  estimate falls inside the engagement cone.
* engage — stalks toward a perch 500 m behind the target and station-
  keeps there; holds fire unless looking at the target's rear quarter.
* defend — turns to put the nearest threat dead astern, firewalls the
  throttle and trades a little altitude for speed.  Never fires.

A shared low-altitude guard overrides everything below 800 m: wings
level, full power, climb.  With no enemy in view every policy cruises
straight ahead at a mid throttle.
"""

from __future__ import annotations

import math

from ..combat.env import ActionCommand
from ..combat.geometry import GUN_ATA, GUN_RANGE
from ..combat.observation import (
    BLK_ALT_DELTA,
    BLK_ASPECT,
    BLK_BEARING,
    BLK_CLOSURE,
    BLK_RANGE,
    OWN_ALTITUDE,
    OWN_BANK,
    Observation,
)
from ..combat.rewards import PolicyKind
from ..flightdyn import ControlInput

ALTITUDE_FLOOR = 800.0          # m; below this everything climbs
CRUISE_THROTTLE = 0.55
REAR_QUARTER_ASPECT = math.radians(45.0)
STATION_RANGE = 500.0           # m astern for the engage perch
HEAD_ON_ASPECT = math.radians(120.0)
DESCENT_FLOOR = 1800.0          # m; defend stops trading altitude here

_ROLL_SATURATION = math.radians(10.0)   # full roll command this far off the nose


def _clip(value: float, lo: float, hi: float) -> float:
    return lo if value < lo else hi if value > hi else value


def _level_pitch(bank: float) -> float:
    """Pitch command holding a level turn at the current bank angle."""
    load = 1.0 / max(math.cos(bank), 0.2)
    return (load - 1.0) / 8.0


def _cruise(obs: Observation) -> ControlInput:
    return ControlInput(
        throttle=CRUISE_THROTTLE,
        pitch_cmd=_clip(_level_pitch(obs.own[OWN_BANK]), -1.0, 1.0),
        roll_cmd=0.0,
    )


def _climb_out() -> ActionCommand:
    return ActionCommand(ControlInput(throttle=1.0, pitch_cmd=0.45, roll_cmd=0.0))


def _target_geometry(obs: Observation, slot: int):
    block = obs.blocks[slot]
    rng = float(block[BLK_RANGE])
    bearing = float(block[BLK_BEARING])
    aspect = float(block[BLK_ASPECT])
    closure = float(block[BLK_CLOSURE])
    # Positive when the target is above us.
    elevation = math.asin(_clip(float(block[BLK_ALT_DELTA]) / max(rng, 1.0), -1.0, 1.0))
    return rng, bearing, aspect, closure, elevation


def _nose_on(bearing: float, elevation: float) -> float:
    """Estimated angle between our nose and the line of sight (level
    flight approximation: the observation does not carry flight path
    angle, so the vertical component uses the horizon as reference)."""
    return math.hypot(bearing, elevation)


def control_policy(kind: PolicyKind, obs: Observation) -> ActionCommand:
    """Deterministic command for one aircraft under the given policy."""
    kind = PolicyKind(kind)
    if obs.own[OWN_ALTITUDE] < ALTITUDE_FLOOR:
        return _climb_out()
    slot = obs.nearest_enemy()
    if slot is None:
        return ActionCommand(_cruise(obs))
    if kind is PolicyKind.ATTACK:
        return _attack(obs, slot)
    if kind is PolicyKind.ENGAGE:
        return _engage(obs, slot)
    if kind is PolicyKind.DEFEND:
        return _defend(obs, slot)
    raise ValueError(f"unknown policy kind {kind!r}")


def _pursuit_steer(obs: Observation, bearing: float, elevation: float) -> tuple[float, float]:
    """Roll/pitch steering toward the line of sight.

    Azimuth is the fast loop: full roll authority by 10 degrees off the
    nose, tapering superlinearly toward boresight so fine tracking does
    not limit-cycle through the gun cone on bank reversals, and the
    pull is exactly the level-flight compensation for the current bank —
    the hardest turn that stays flat.  Pulling harder than that always
    climbs (at the bank limit the vertical lift component exceeds
    weight), and any climb is what loses the fight: the controller
    cannot observe its own flight-path angle, so a climb picked up in a
    turn decays only through the weak elevation correction.  That
    correction is clamped asymmetrically: barely any climb authority,
    enough descent authority to follow a target running downhill.
    """
    magnitude = min(abs(bearing) / _ROLL_SATURATION, 1.0) ** 1.7
    roll = math.copysign(magnitude, bearing)
    pitch = _level_pitch(obs.own[OWN_BANK]) + _clip(0.8 * elevation, -0.25, 0.05)
    return roll, _clip(pitch, -1.0, 1.0)


def _attack(obs: Observation, slot: int) -> ActionCommand:
    rng, bearing, aspect, closure, elevation = _target_geometry(obs, slot)
    roll, pitch = _pursuit_steer(obs, bearing, elevation)
    if aspect > math.radians(90.0) and rng <= 2500.0 and closure > 250.0:
        # Closing head-on: chop the throttle before the merge so the
        # pass happens at a speed the turn radius can live with.
        throttle = 0.2
    elif rng <= 1200.0 and abs(bearing) > math.radians(30.0):
        # Just overshot and the line of sight is whipping around the
        # wingtip: stay slow through the reversal instead of blowing
        # the recovery wide.
        throttle = 0.15
    elif rng > 2500.0 or aspect > math.radians(60.0):
        # Far away, or the target is beam/nose-on: chase at full power.
        throttle = 1.0
    else:
        # In trail: manage the overtake, aiming for a closure that
        # shrinks with range so the pass is not wasted.
        desired = _clip(rng / 6.0, 30.0, 180.0)
        throttle = _clip(0.6 + 0.004 * (desired - closure), 0.1, 1.0)
    fire = rng <= GUN_RANGE and _nose_on(bearing, elevation) <= GUN_ATA
    return ActionCommand(ControlInput(throttle, pitch, roll), fire=fire)


def _engage(obs: Observation, slot: int) -> ActionCommand:
    rng, bearing, aspect, closure, elevation = _target_geometry(obs, slot)
    if aspect >= HEAD_ON_ASPECT and rng < 2500.0:
        # Nose-on merge: displace sideways instead of trading shots.
        side = 1.0 if bearing >= 0.0 else -1.0
        pitch = _level_pitch(obs.own[OWN_BANK]) + 0.1
        return ActionCommand(
            ControlInput(0.9, _clip(pitch, -1.0, 1.0), side))
    roll, pitch = _pursuit_steer(obs, bearing, elevation)
    throttle = _clip(
        CRUISE_THROTTLE + 8e-4 * (rng - STATION_RANGE) - 0.004 * closure,
        0.05, 1.0)
    fire = (
        rng <= GUN_RANGE
        and _nose_on(bearing, elevation) <= GUN_ATA
        and aspect <= REAR_QUARTER_ASPECT
    )
    return ActionCommand(ControlInput(throttle, pitch, roll), fire=fire)


def _defend(obs: Observation, slot: int) -> ActionCommand:
    _rng, bearing, _aspect, _closure, _elevation = _target_geometry(obs, slot)
    # Heading change that puts the threat dead astern.
    error = math.remainder(bearing - math.pi, 2.0 * math.pi)
    roll = _clip(error * 3.0 / math.pi, -1.0, 1.0)
    pitch = _level_pitch(obs.own[OWN_BANK])
    if abs(error) < 0.5 and obs.own[OWN_ALTITUDE] > DESCENT_FLOOR:
        pitch -= 0.015    # settled and high: a shallow descent buys speed
    return ActionCommand(
        ControlInput(1.0, _clip(pitch, -1.0, 1.0), roll), fire=False)
