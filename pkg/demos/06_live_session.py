"""
A piloted episode, recorded and audited
=======================================

Runs a live session with a scripted "human" on the blue side, records
every applied command to a journal, then replays the journal from
scratch and proves the re-simulation reproduces the recorded world
bit for bit.
"""

import io

from aircombat.combat import drill_scenario
from aircombat.gateway import (
    EpisodeRecorder,
    GatewayServer,
    LoopbackClient,
    SimulationSession,
    replay_record,
)

config = drill_scenario(blue_count=2, red_count=2, time_limit=30.0)
journal = io.StringIO()
session = SimulationSession(
    config, seed=7,
    recorder=EpisodeRecorder(
        journal, config, seed=7,
        participants={"blue": "commander", "red": "commander"},
        mode="interactive"))

# The loopback client speaks the exact WebSocket message schema
# without a socket — handy for scripts and tests.
server = GatewayServer(session, port=0)
pilot = LoopbackClient(server)
reply = pilot.send({"type": "join", "team": "blue"})[0]
print(f"pilot joined as entity {reply['entity']}")

tick = 0
while not session.done:
    if tick == 40:                       # two seconds in: break hard right
        pilot.send({"type": "control", "throttle": 1.0, "pitch": 0.6,
                    "roll": 0.9, "fire": True})
        print("t=2.0s  pilot commands: full throttle, hard right, guns hot")
    session.tick()
    tick += 1

print(f"episode over: winner {session.winner} after {tick} steps")
for s in session.roster.stats().values():
    print(f"pilot stats: {s['applied']} inputs applied, "
          f"worst latency {s['max_staleness']} step(s)")

# The journal alone — scenario, seed, and applied commands — is enough
# to rebuild the episode and check every world hash.
result = replay_record(io.StringIO(journal.getvalue()))
print(f"replay audit: ok={result.ok} — {result.message}")
