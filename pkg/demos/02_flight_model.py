"""
Flying the point-mass airframe
==============================

Trims for level flight, banks into a coordinated turn, and compares
the integrated turn rate against the closed-form prediction
g * tan(bank) / V.
"""

import math

from aircombat import flightdyn as fd

# Straight and level at 220 m/s: the trim solver finds the throttle
# that exactly cancels drag.
control = fd.trim(speed=220.0, altitude=3000.0)
print(f"level trim at 220 m/s: throttle {control.throttle:.3f}")

state = fd.AircraftState(
    position=(0.0, 0.0, -3000.0), speed=220.0, heading=0.0,
    flight_path_angle=0.0, bank=0.0)
for _ in range(500):                      # five seconds at 100 Hz
    state = fd.step(state, control, 0.01)
print(f"after 5 s hands-off:   speed {state.speed:6.2f} m/s, "
      f"altitude {state.altitude:7.1f} m")

# Now a 45-degree coordinated turn.  Load factor n =1/cos(bank); the
# pitch command requests exactly that, and throttle covers the extra
# induced drag.
bank = math.radians(45.0)
n = 1.0 / math.cos(bank)
turn = fd.ControlInput(
    throttle=fd.drag(220.0, n) / fd.thrust_available(1.0, 220.0),
    pitch_cmd=(n - 1.0) / (fd.DEFAULT_PARAMS.load_max - 1.0),
    roll_cmd=bank / fd.DEFAULT_PARAMS.bank_cmd_max,
)
state = fd.AircraftState(
    position=(0.0, 0.0, -3000.0), speed=220.0, heading=0.0,
    flight_path_angle=0.0, bank=bank)

seconds = 10.0
for _ in range(int(seconds / 0.01)):
    state = fd.step(state, turn, 0.01)

measured = (state.heading % (2.0 * math.pi)) / seconds
analytic = fd.DEFAULT_PARAMS.gravity * math.tan(bank) / 220.0
print(f"turn rate integrated:  {math.degrees(measured):.3f} deg/s")
print(f"turn rate analytic:    {math.degrees(analytic):.3f} deg/s")
print(f"altitude drift:        {state.altitude - 3000.0:+.2f} m over {seconds:.0f} s")
