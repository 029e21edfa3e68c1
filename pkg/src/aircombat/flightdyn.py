"""Point-mass flight dynamics: 3-DOF equations integrated with RK4.

State is (position NED, true airspeed, heading, flight-path angle, bank).
Controls map to engine throttle, commanded load factor, and commanded
bank angle.  The model captures the turn-rate/energy trade-offs that the
combat policies exploit; attitude dynamics, stall and wind are out of
scope.

Equations of motion (g = 9.80665, flat earth):

    speed'   = (T(throttle, v) - D(v, n)) / m - g sin(gamma)
    heading' = g n sin(bank) / (v cos(gamma))
    gamma'   = (g / v) (n cos(bank) - cos(gamma))
    north'   = v cos(gamma) cos(heading)
    east'    = v cos(gamma) sin(heading)
    down'    = -v sin(gamma)
    bank'    = bounded slew toward the commanded bank angle

Thrust lapses linearly with speed; drag is parabolic in lift coefficient
(D = q S (C_D0 + k C_L^2) with C_L set by the load factor).  Air density
is held at a single representative value so drag depends only on speed
and load factor.

All stepping goes through one vectorized kernel over arrays of aircraft;
a singleton batch and a large batch follow the identical floating-point
path, so results never depend on batch size.

Clamping note: the speed clamp at V_min can add energy when it fires in
a climb (speed held while altitude rises).  Energy decay under idle
thrust therefore holds everywhere the clamp is inactive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ContractViolationError, InfeasibleTrimError

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class FlightParams:
    """Aircraft constants, fighter-class defaults.

    One place holds every number the dynamics use; tests may build
    variants to probe edge cases.
    """

    mass: float = 9000.0                 # kg, wet
    thrust_max: float = 128e3            # N, static full throttle
    thrust_lapse: float = 0.25           # fraction of thrust lost at v_max
    wing_area: float = 27.9              # m^2
    cd0: float = 0.02                    # zero-lift drag coefficient
    induced_k: float = 0.12              # induced drag factor
    air_density: float = 1.0             # kg/m^3, fixed representative value
    gravity: float = 9.80665             # m/s^2
    v_min: float = 60.0                  # m/s
    v_max: float = 600.0                 # m/s
    load_min: float = -1.0               # g
    load_max: float = 9.0                # g
    bank_cmd_max: float = math.radians(80.0)   # |commanded bank| ceiling
    bank_rate_max: float = math.radians(120.0) # rad/s slew limit
    bank_gain: float = 10.0              # 1/s proportional slew gain
    gamma_max: float = math.radians(80.0)      # flight-path angle ceiling
    fuel_burn_rate: float = 1.0 / 1800.0 # fuel fraction/s at full throttle


DEFAULT_PARAMS = FlightParams()


@dataclass(frozen=True)
class AircraftState:
    """Kinematic state of one aircraft in the local NED frame."""

    position: tuple[float, float, float]  # north, east, down (m)
    speed: float                          # true airspeed, m/s
    heading: float                        # rad, [0, 2pi)
    flight_path_angle: float              # rad, positive climbing
    bank: float                           # rad, [-pi, pi]
    throttle: float = 0.0                 # last applied setting
    fuel_fraction: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "position", tuple(float(c) for c in self.position))

    @property
    def altitude(self) -> float:
        return -self.position[2]

    def velocity_ned(self) -> tuple[float, float, float]:
        """Inertial velocity implied by speed, heading and path angle."""
        cg = math.cos(self.flight_path_angle)
        return (
            self.speed * cg * math.cos(self.heading),
            self.speed * cg * math.sin(self.heading),
            -self.speed * math.sin(self.flight_path_angle),
        )


@dataclass(frozen=True)
class ControlInput:
    """Pilot/agent command.

    ``pitch_cmd`` maps to load factor: 0 is level 1 g, +1 commands the
    structural limit, -1 commands the negative limit.  ``roll_cmd`` maps
    to a commanded bank angle (fraction of the bank ceiling) which the
    aircraft slews toward at a bounded rate.
    """

    throttle: float
    pitch_cmd: float = 0.0
    roll_cmd: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.throttle) and 0.0 <= self.throttle <= 1.0):
            raise ValueError(f"throttle out of [0, 1]: {self.throttle}")
        if not (math.isfinite(self.pitch_cmd) and -1.0 <= self.pitch_cmd <= 1.0):
            raise ValueError(f"pitch_cmd out of [-1, 1]: {self.pitch_cmd}")
        if not (math.isfinite(self.roll_cmd) and -1.0 <= self.roll_cmd <= 1.0):
            raise ValueError(f"roll_cmd out of [-1, 1]: {self.roll_cmd}")


def thrust_available(throttle: float, speed: float, params: FlightParams = DEFAULT_PARAMS) -> float:
    """Engine thrust in newtons at the given setting and speed."""
    lapse = max(0.0, 1.0 - params.thrust_lapse * speed / params.v_max)
    return throttle * params.thrust_max * lapse


def drag(speed: float, load_factor: float, params: FlightParams = DEFAULT_PARAMS) -> float:
    """Airframe drag in newtons at the given speed and load factor."""
    q_s = 0.5 * params.air_density * speed * speed * params.wing_area
    lift = load_factor * params.mass * params.gravity
    return q_s * params.cd0 + params.induced_k * lift * lift / max(q_s, 1e-9)


def load_factor_from_pitch(pitch_cmd, params: FlightParams = DEFAULT_PARAMS):
    """Piecewise-linear map keeping pitch 0 at exactly 1 g."""
    up = params.load_max - 1.0
    down = 1.0 - params.load_min
    return 1.0 + np.where(pitch_cmd >= 0.0, up * pitch_cmd, down * pitch_cmd)


def bank_from_roll(roll_cmd, params: FlightParams = DEFAULT_PARAMS):
    """Commanded bank angle in radians."""
    return params.bank_cmd_max * np.asarray(roll_cmd, dtype=float)


@dataclass
class StateArrays:
    """Struct-of-arrays batch of aircraft states.

    The environment keeps its whole roster here and advances it with
    :func:`step_arrays`; single-aircraft callers go through :func:`step`
    which wraps a singleton batch.
    """

    north: np.ndarray
    east: np.ndarray
    down: np.ndarray
    speed: np.ndarray
    heading: np.ndarray
    gamma: np.ndarray
    bank: np.ndarray
    throttle: np.ndarray
    fuel: np.ndarray

    @classmethod
    def zeros(cls, n: int) -> "StateArrays":
        return cls(*(np.zeros(n) for _ in range(9)))

    @classmethod
    def from_states(cls, states: "list[AircraftState]") -> "StateArrays":
        return cls(
            north=np.array([s.position[0] for s in states], dtype=float),
            east=np.array([s.position[1] for s in states], dtype=float),
            down=np.array([s.position[2] for s in states], dtype=float),
            speed=np.array([s.speed for s in states], dtype=float),
            heading=np.array([s.heading for s in states], dtype=float),
            gamma=np.array([s.flight_path_angle for s in states], dtype=float),
            bank=np.array([s.bank for s in states], dtype=float),
            throttle=np.array([s.throttle for s in states], dtype=float),
            fuel=np.array([s.fuel_fraction for s in states], dtype=float),
        )

    def state_at(self, i: int) -> AircraftState:
        return AircraftState(
            position=(float(self.north[i]), float(self.east[i]), float(self.down[i])),
            speed=float(self.speed[i]),
            heading=float(self.heading[i]),
            flight_path_angle=float(self.gamma[i]),
            bank=float(self.bank[i]),
            throttle=float(self.throttle[i]),
            fuel_fraction=float(self.fuel[i]),
        )

    def set_state(self, i: int, state: AircraftState) -> None:
        self.north[i] = state.position[0]
        self.east[i] = state.position[1]
        self.down[i] = state.position[2]
        self.speed[i] = state.speed
        self.heading[i] = state.heading
        self.gamma[i] = state.flight_path_angle
        self.bank[i] = state.bank
        self.throttle[i] = state.throttle
        self.fuel[i] = state.fuel_fraction

    def velocity_ned(self) -> np.ndarray:
        """(N, 3) inertial velocities."""
        cg = np.cos(self.gamma)
        return np.stack([
            self.speed * cg * np.cos(self.heading),
            self.speed * cg * np.sin(self.heading),
            -self.speed * np.sin(self.gamma),
        ], axis=1)

    def finite(self) -> bool:
        return bool(
            np.isfinite(self.north).all() and np.isfinite(self.east).all()
            and np.isfinite(self.down).all() and np.isfinite(self.speed).all()
            and np.isfinite(self.heading).all() and np.isfinite(self.gamma).all()
            and np.isfinite(self.bank).all() and np.isfinite(self.throttle).all()
            and np.isfinite(self.fuel).all()
        )


@njit(cache=True)
def _deriv(
    north, east, down, speed, heading, gamma, bank,
    load, bank_cmd, thr_eff,
    mass, thrust_max, lapse_over_vmax, half_rho_s, cd0, induced_k, g,
    bank_rate_max, bank_gain,
):
    v = max(speed, 1.0)
    cos_g = math.cos(gamma)
    sin_g = math.sin(gamma)
    # Guard the heading equation near vertical flight paths.
    cos_g_safe = max(cos_g, 0.15)

    thrust = thr_eff * thrust_max * max(0.0, 1.0 - lapse_over_vmax * v)
    q_s = half_rho_s * v * v
    lift = load * mass * g
    drag_n = q_s * cd0 + induced_k * lift * lift / q_s

    d_speed = (thrust - drag_n) / mass - g * sin_g
    d_heading = g * load * math.sin(bank) / (v * cos_g_safe)
    d_gamma = (g / v) * (load * math.cos(bank) - cos_g)
    d_north = speed * cos_g * math.cos(heading)
    d_east = speed * cos_g * math.sin(heading)
    d_down = -speed * sin_g
    d_bank = min(max(bank_gain * (bank_cmd - bank), -bank_rate_max), bank_rate_max)
    return d_north, d_east, d_down, d_speed, d_heading, d_gamma, d_bank


@njit(cache=True)
def _rk4_kernel(
    north, east, down, speed, heading, gamma, bank, throttle, fuel,
    thr, load, bank_cmd, active,
    dt, substeps,
    mass, thrust_max, lapse_over_vmax, half_rho_s, cd0, induced_k, g,
    v_min, v_max, bank_rate_max, bank_gain, gamma_max, burn_rate,
):
    two_pi = 2.0 * math.pi
    for i in range(north.shape[0]):
        if not active[i]:
            continue
        pn = north[i]; pe = east[i]; pd = down[i]
        v = speed[i]; psi = heading[i]; gam = gamma[i]; phi = bank[i]
        fu = fuel[i]
        ld = load[i]; bc = bank_cmd[i]; th = thr[i]
        for _ in range(substeps):
            te = th if fu > 0.0 else 0.0
            a1, b1, c1, d1, e1, f1, g1 = _deriv(
                pn, pe, pd, v, psi, gam, phi, ld, bc, te,
                mass, thrust_max, lapse_over_vmax, half_rho_s, cd0,
                induced_k, g, bank_rate_max, bank_gain)
            h = 0.5 * dt
            a2, b2, c2, d2, e2, f2, g2 = _deriv(
                pn + h * a1, pe + h * b1, pd + h * c1, v + h * d1,
                psi + h * e1, gam + h * f1, phi + h * g1, ld, bc, te,
                mass, thrust_max, lapse_over_vmax, half_rho_s, cd0,
                induced_k, g, bank_rate_max, bank_gain)
            a3, b3, c3, d3, e3, f3, g3 = _deriv(
                pn + h * a2, pe + h * b2, pd + h * c2, v + h * d2,
                psi + h * e2, gam + h * f2, phi + h * g2, ld, bc, te,
                mass, thrust_max, lapse_over_vmax, half_rho_s, cd0,
                induced_k, g, bank_rate_max, bank_gain)
            a4, b4, c4, d4, e4, f4, g4 = _deriv(
                pn + dt * a3, pe + dt * b3, pd + dt * c3, v + dt * d3,
                psi + dt * e3, gam + dt * f3, phi + dt * g3, ld, bc, te,
                mass, thrust_max, lapse_over_vmax, half_rho_s, cd0,
                induced_k, g, bank_rate_max, bank_gain)
            w = dt / 6.0
            pn += w * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
            pe += w * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
            pd += w * (c1 + 2.0 * c2 + 2.0 * c3 + c4)
            v += w * (d1 + 2.0 * d2 + 2.0 * d3 + d4)
            psi += w * (e1 + 2.0 * e2 + 2.0 * e3 + e4)
            gam += w * (f1 + 2.0 * f2 + 2.0 * f3 + f4)
            phi += w * (g1 + 2.0 * g2 + 2.0 * g3 + g4)
            v = min(max(v, v_min), v_max)
            gam = min(max(gam, -gamma_max), gamma_max)
            fu = max(0.0, fu - burn_rate * te * dt)
            # Wrap only out-of-range angles: the wrap arithmetic is not
            # an exact identity, and stepping must not depend on how
            # sub-steps are batched into calls.
            if psi < 0.0 or psi >= two_pi:
                psi = psi % two_pi
            if phi > math.pi or phi < -math.pi:
                phi = (phi + math.pi) % two_pi - math.pi
        north[i] = pn; east[i] = pe; down[i] = pd
        speed[i] = v; heading[i] = psi; gamma[i] = gam; bank[i] = phi
        throttle[i] = th; fuel[i] = fu


def step_arrays(
    arrays: StateArrays,
    throttle: np.ndarray,
    pitch_cmd: np.ndarray,
    roll_cmd: np.ndarray,
    dt: float,
    substeps: int = 1,
    params: FlightParams = DEFAULT_PARAMS,
    active: np.ndarray | None = None,
) -> None:
    """Advance a batch in place by ``substeps`` RK4 steps of ``dt``.

    Rows where ``active`` is false are left untouched.  Controls are
    clamped to their ranges; a non-finite state raises
    :class:`ContractViolationError`.  Every aircraft is integrated
    element-wise by one compiled kernel, so results are independent of
    batch composition.
    """
    if dt < 0 or not math.isfinite(dt):
        raise ContractViolationError(f"dt must be non-negative and finite, got {dt}")
    if not arrays.finite():
        raise ContractViolationError("non-finite aircraft state")
    if dt == 0.0 or substeps == 0:
        return

    p = params
    thr = np.clip(np.asarray(throttle, dtype=float), 0.0, 1.0)
    pitch = np.clip(np.asarray(pitch_cmd, dtype=float), -1.0, 1.0)
    roll = np.clip(np.asarray(roll_cmd, dtype=float), -1.0, 1.0)
    load = np.clip(
        np.asarray(load_factor_from_pitch(pitch, p), dtype=float),
        p.load_min, p.load_max)
    bank_cmd = np.asarray(bank_from_roll(roll, p), dtype=float)
    if active is None:
        mask = np.ones(arrays.north.shape[0], dtype=np.bool_)
    else:
        mask = np.asarray(active, dtype=np.bool_)

    _rk4_kernel(
        arrays.north, arrays.east, arrays.down, arrays.speed, arrays.heading,
        arrays.gamma, arrays.bank, arrays.throttle, arrays.fuel,
        np.broadcast_to(thr, mask.shape).astype(float),
        np.broadcast_to(load, mask.shape).astype(float),
        np.broadcast_to(bank_cmd, mask.shape).astype(float),
        mask,
        float(dt), int(substeps),
        p.mass, p.thrust_max, p.thrust_lapse / p.v_max,
        0.5 * p.air_density * p.wing_area, p.cd0, p.induced_k, p.gravity,
        p.v_min, p.v_max, p.bank_rate_max, p.bank_gain, p.gamma_max,
        p.fuel_burn_rate,
    )


def step(
    state: AircraftState,
    control: ControlInput,
    dt: float,
    params: FlightParams = DEFAULT_PARAMS,
) -> AircraftState:
    """One RK4 integration step of size ``dt``.

    dt = 0 returns the state unchanged.  A non-finite state raises
    :class:`ContractViolationError`.
    """
    arrays = StateArrays.from_states([state])
    if dt == 0.0:
        if not arrays.finite():
            raise ContractViolationError("non-finite aircraft state")
        return state
    step_arrays(
        arrays,
        np.array([control.throttle]), np.array([control.pitch_cmd]),
        np.array([control.roll_cmd]), dt, substeps=1, params=params,
    )
    return arrays.state_at(0)


def trim(speed: float, altitude: float, params: FlightParams = DEFAULT_PARAMS) -> ControlInput:
    """Control input holding steady level flight at the given speed.

    The altitude argument is accepted for interface stability; drag here
    does not vary with altitude.  Raises :class:`InfeasibleTrimError`
    when level drag exceeds full thrust.
    """
    if not params.v_min <= speed <= params.v_max:
        raise InfeasibleTrimError(
            f"speed {speed} outside envelope [{params.v_min}, {params.v_max}]")
    full = thrust_available(1.0, speed, params)
    needed = drag(speed, 1.0, params)
    if needed > full or full <= 0.0:
        raise InfeasibleTrimError(
            f"level flight at {speed} m/s needs {needed:.0f} N, engine gives {full:.0f} N")
    return ControlInput(throttle=needed / full, pitch_cmd=0.0, roll_cmd=0.0)
