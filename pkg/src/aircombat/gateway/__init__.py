"""Human-facing service layer: live sessions, recording, and the CLI.

The pieces compose in one direction:

* :mod:`snapshots` turns a world state into a deterministic, hashable
  document;
* :mod:`recorder` streams those documents to newline-delimited JSON and
  re-verifies them by re-simulation;
* :mod:`session` runs the 20 Hz decision loop, merging agent commands
  with human control inputs;
* :mod:`server` exposes a session over a full-duplex JSON channel;
* :mod:`cli` wires everything to subcommands.
"""

from .snapshots import EntitySnap, Snapshot, canonical_json, snapshot_from_state, snapshot_hash
from .recorder import (
    EpisodeRecord,
    EpisodeRecorder,
    ReplayResult,
    load_record,
    replay_record,
)
from .session import SessionRoster, SimulationSession
from .server import DisPublisher, GatewayServer, LoopbackClient

__all__ = [
    "DisPublisher",
    "EntitySnap",
    "EpisodeRecord",
    "EpisodeRecorder",
    "GatewayServer",
    "LoopbackClient",
    "ReplayResult",
    "SessionRoster",
    "SimulationSession",
    "Snapshot",
    "canonical_json",
    "load_record",
    "replay_record",
    "snapshot_from_state",
    "snapshot_hash",
]
