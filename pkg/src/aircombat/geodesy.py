"""WGS-84 coordinate conversions between a local NED frame and ECEF.

The simulation works in a flat north-east-down frame anchored at a
geodetic origin; the DIS wire format wants earth-centred coordinates and
world-frame Euler angles.  Conversion is an exact rotation plus
translation, so round trips lose only floating-point noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

WGS84_A = 6378137.0
WGS84_F = 1.0 / 298.257223563
WGS84_E2 = WGS84_F * (2.0 - WGS84_F)


@dataclass(frozen=True)
class GeodeticOrigin:
    """Anchor of the local NED frame."""

    lat_deg: float
    lon_deg: float
    alt_m: float = 0.0

    def __post_init__(self) -> None:
        if not -90.0 <= self.lat_deg <= 90.0:
            raise ValueError(f"latitude out of [-90, 90]: {self.lat_deg}")
        if not -180.0 <= self.lon_deg <= 180.0:
            raise ValueError(f"longitude out of [-180, 180]: {self.lon_deg}")


def lla_to_ecef(lat_deg: float, lon_deg: float, alt_m: float) -> np.ndarray:
    """Geodetic latitude/longitude/altitude to ECEF metres."""
    lat = math.radians(lat_deg)
    lon = math.radians(lon_deg)
    sin_lat = math.sin(lat)
    n = WGS84_A / math.sqrt(1.0 - WGS84_E2 * sin_lat * sin_lat)
    x = (n + alt_m) * math.cos(lat) * math.cos(lon)
    y = (n + alt_m) * math.cos(lat) * math.sin(lon)
    z = (n * (1.0 - WGS84_E2) + alt_m) * sin_lat
    return np.array([x, y, z])


def ecef_to_ned_matrix(origin: GeodeticOrigin) -> np.ndarray:
    """Rotation taking ECEF vectors into the origin's NED frame."""
    lat = math.radians(origin.lat_deg)
    lon = math.radians(origin.lon_deg)
    sin_lat, cos_lat = math.sin(lat), math.cos(lat)
    sin_lon, cos_lon = math.sin(lon), math.cos(lon)
    return np.array([
        [-sin_lat * cos_lon, -sin_lat * sin_lon, cos_lat],
        [-sin_lon, cos_lon, 0.0],
        [-cos_lat * cos_lon, -cos_lat * sin_lon, -sin_lat],
    ])


def ned_to_ecef(ned: np.ndarray, origin: GeodeticOrigin) -> np.ndarray:
    """Position in the local frame to ECEF metres."""
    rot = ecef_to_ned_matrix(origin)
    base = lla_to_ecef(origin.lat_deg, origin.lon_deg, origin.alt_m)
    return base + rot.T @ np.asarray(ned, dtype=float)


def ecef_to_ned(ecef: np.ndarray, origin: GeodeticOrigin) -> np.ndarray:
    """ECEF metres to position in the local frame."""
    rot = ecef_to_ned_matrix(origin)
    base = lla_to_ecef(origin.lat_deg, origin.lon_deg, origin.alt_m)
    return rot @ (np.asarray(ecef, dtype=float) - base)


def ned_vector_to_ecef(vec: np.ndarray, origin: GeodeticOrigin) -> np.ndarray:
    """Rotate a free vector (velocity) from NED into ECEF."""
    return ecef_to_ned_matrix(origin).T @ np.asarray(vec, dtype=float)


def ecef_vector_to_ned(vec: np.ndarray, origin: GeodeticOrigin) -> np.ndarray:
    """Rotate a free vector (velocity) from ECEF into NED."""
    return ecef_to_ned_matrix(origin) @ np.asarray(vec, dtype=float)


def _rot_x(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, s], [0.0, -s, c]])


def _rot_y(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0.0, -s], [0.0, 1.0, 0.0], [s, 0.0, c]])


def _rot_z(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])


def _euler_zyx(rot: np.ndarray) -> tuple[float, float, float]:
    """Extract (first, second, third) angles of a z-y-x intrinsic rotation."""
    second = -math.asin(max(-1.0, min(1.0, rot[0, 2])))
    first = math.atan2(rot[0, 1], rot[0, 0])
    third = math.atan2(rot[1, 2], rot[2, 2])
    return first, second, third


def attitude_to_dis_euler(
    heading: float, pitch: float, roll: float, origin: GeodeticOrigin
) -> tuple[float, float, float]:
    """Local heading/pitch/roll (rad, NED) to DIS world-frame psi/theta/phi."""
    body_from_ned = _rot_x(roll) @ _rot_y(pitch) @ _rot_z(heading)
    body_from_ecef = body_from_ned @ ecef_to_ned_matrix(origin)
    return _euler_zyx(body_from_ecef)


def dis_euler_to_attitude(
    psi: float, theta: float, phi: float, origin: GeodeticOrigin
) -> tuple[float, float, float]:
    """DIS world-frame psi/theta/phi to local heading/pitch/roll (rad, NED)."""
    body_from_ecef = _rot_x(phi) @ _rot_y(theta) @ _rot_z(psi)
    body_from_ned = body_from_ecef @ ecef_to_ned_matrix(origin).T
    return _euler_zyx(body_from_ned)
