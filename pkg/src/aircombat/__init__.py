"""Real-time multi-agent air-combat simulation stack.

Layers, bottom up:

* :mod:`aircombat.discodec` / :mod:`aircombat.geodesy` -- DIS v6 wire
  codec and the NED/ECEF frame conversions it needs.
* :mod:`aircombat.flightdyn` -- point-mass aircraft dynamics.
* :mod:`aircombat.combat` -- the Markov game: world state, weapons,
  rewards, observations.
* :mod:`aircombat.agents` -- scripted control policies, the tactical
  commander, and its training loop.
* :mod:`aircombat.bridge` -- DIS bridge joining the simulation to an
  external simulator over UDP.
* :mod:`aircombat.gateway` -- WebSocket gateway for human participants,
  episode recording, and the command line interface.
"""

__version__ = "0.1.0"
