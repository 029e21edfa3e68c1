"""Episode recording and replay verification.

A record is newline-delimited JSON: one header line, one line per
decision step, one footer line.  Each step line stores the joint action
that was applied (human or agent -- the record does not care who steered),
the per-aircraft rewards, the events raised that step, and a hash of the
post-step snapshot.  Because the simulation is deterministic given the
scenario and seed, re-applying the recorded actions must reproduce every
hash; :func:`replay_record` does exactly that and reports the first step
where it fails.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, TextIO

from ..combat.env import ActionCommand, CombatEnv
from ..combat.rewards import PolicyKind
from ..combat.scenario import ScenarioConfig
from ..discodec import EntityId
from ..errors import RecordFormatError
from ..flightdyn import ControlInput
from .snapshots import (
    Snapshot,
    canonical_json,
    event_doc,
    snapshot_from_state,
    snapshot_hash,
)

RECORD_VERSION = 1


def action_key(eid: EntityId) -> str:
    return f"{eid.site}-{eid.application}-{eid.entity}"


def entity_from_key(key: str) -> EntityId:
    try:
        site, app, entity = (int(part) for part in key.split("-"))
    except ValueError as exc:
        raise RecordFormatError(f"bad entity key {key!r}") from exc
    return EntityId(site, app, entity)


@dataclass(frozen=True)
class EpisodeRecord:
    """A parsed record file: header, step lines, footer."""

    header: dict
    ticks: list[dict]
    footer: dict


@dataclass(frozen=True)
class ReplayResult:
    """Outcome of re-simulating a record against its stored hashes."""

    ok: bool
    ticks_checked: int
    first_divergence: int | None     # step index, or None
    message: str


class EpisodeRecorder:
    """Streams one episode to newline-delimited JSON.

    Accepts either a path (the recorder owns the file) or any writable
    text sink.  The sink's own buffering decouples the simulation loop
    from the disk; :meth:`finish` flushes.
    """

    def __init__(
        self,
        sink: str | Path | TextIO,
        scenario: ScenarioConfig,
        seed: int,
        participants: Mapping[str, str],
        mode: str = "headless",
    ):
        if isinstance(sink, (str, Path)):
            self._file: TextIO = open(sink, "w", encoding="utf-8")
            self._owns_file = True
        else:
            self._file = sink
            self._owns_file = False
        self._finished = False
        self._write({
            "kind": "header",
            "version": RECORD_VERSION,
            "scenario": scenario.to_dict(),
            "seed": seed,
            "participants": dict(participants),
            "mode": mode,
        })

    def _write(self, doc: dict) -> None:
        self._file.write(canonical_json(doc) + "\n")

    def on_step(
        self,
        step_index: int,
        snapshot: Snapshot,
        actions: Mapping[EntityId, ActionCommand],
        policies: Mapping[EntityId, PolicyKind],
        rewards: Mapping[EntityId, float],
    ) -> None:
        """Record one applied decision step and its outcome."""
        if self._finished:
            raise RecordFormatError("recorder already finished")
        self._write({
            "kind": "tick",
            "n": step_index,
            "t": snapshot.time,
            "hash": snapshot_hash(snapshot),
            "actions": {
                action_key(eid): {
                    "throttle": cmd.control.throttle,
                    "pitch": cmd.control.pitch_cmd,
                    "roll": cmd.control.roll_cmd,
                    "fire": bool(cmd.fire),
                    "policy": policies[eid].value,
                }
                for eid, cmd in actions.items()
            },
            "rewards": {action_key(e): r for e, r in rewards.items()},
            "events": [event_doc(e) for e in snapshot.events],
        })

    def finish(self, winner: str, returns: Mapping[EntityId, float]) -> None:
        if self._finished:
            return
        self._write({
            "kind": "footer",
            "winner": winner,
            "returns": {action_key(e): r for e, r in returns.items()},
        })
        self._finished = True
        self._file.flush()
        if self._owns_file:
            self._file.close()


# ---------------------------------------------------------------- loading


def load_record(source: str | Path | TextIO) -> EpisodeRecord:
    """Parse and structurally validate one record file."""
    if isinstance(source, (str, Path)):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = source.read()
    lines = [line for line in text.splitlines() if line.strip()]
    if len(lines) < 2:
        raise RecordFormatError("record needs at least a header and a footer")
    docs = []
    for i, line in enumerate(lines):
        try:
            docs.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise RecordFormatError(f"line {i + 1} is not JSON") from exc
    if docs[0].get("kind") != "header":
        raise RecordFormatError("first line must be the header")
    if docs[0].get("version") != RECORD_VERSION:
        raise RecordFormatError(
            f"unsupported record version {docs[0].get('version')!r}")
    if docs[-1].get("kind") != "footer":
        raise RecordFormatError("last line must be the footer")
    ticks = docs[1:-1]
    for doc in ticks:
        if doc.get("kind") != "tick":
            raise RecordFormatError(f"unexpected line kind {doc.get('kind')!r}")
    return EpisodeRecord(header=docs[0], ticks=ticks, footer=docs[-1])


def _actions_from_doc(
    doc: Mapping[str, dict]
) -> tuple[dict[EntityId, ActionCommand], dict[EntityId, PolicyKind]]:
    actions: dict[EntityId, ActionCommand] = {}
    policies: dict[EntityId, PolicyKind] = {}
    for key, entry in doc.items():
        eid = entity_from_key(key)
        actions[eid] = ActionCommand(
            control=ControlInput(
                throttle=float(entry["throttle"]),
                pitch_cmd=float(entry["pitch"]),
                roll_cmd=float(entry["roll"]),
            ),
            fire=bool(entry["fire"]),
        )
        policies[eid] = PolicyKind(entry["policy"])
    return actions, policies


# ----------------------------------------------------------------- replay


def replay_record(source: str | Path | TextIO | EpisodeRecord) -> ReplayResult:
    """Re-simulate a record and verify every stored snapshot hash.

    A divergence names the first step whose re-simulated world differs
    -- a mismatched hash, mismatched rewards, or an episode that
    terminates on a different step than the record claims.
    """
    record = source if isinstance(source, EpisodeRecord) else load_record(source)
    config = ScenarioConfig.from_dict(record.header["scenario"])
    env = CombatEnv(config)
    state = env.reset(seed=int(record.header["seed"]))
    events_seen = 0
    streams: dict[EntityId, list[float]] = {eid: [] for eid in state.ids}

    for count, tick in enumerate(record.ticks):
        step_index = int(tick["n"])
        if state.done:
            return ReplayResult(
                ok=False, ticks_checked=count, first_divergence=step_index,
                message=f"episode already over before recorded step {step_index}")
        actions, policies = _actions_from_doc(tick["actions"])
        env.set_active_policies(policies)
        state, rewards, _ = env.step(actions)
        new_events = state.event_log[events_seen:]
        events_seen = len(state.event_log)
        snapshot = snapshot_from_state(state, new_events)
        if snapshot_hash(snapshot) != tick["hash"]:
            return ReplayResult(
                ok=False, ticks_checked=count + 1,
                first_divergence=step_index,
                message=f"snapshot hash mismatch at step {step_index}")
        replayed = {action_key(e): r for e, r in rewards.items()}
        if replayed != tick["rewards"]:
            return ReplayResult(
                ok=False, ticks_checked=count + 1,
                first_divergence=step_index,
                message=f"reward mismatch at step {step_index}")
        for eid, reward in rewards.items():
            streams[eid].append(reward)

    ticks_checked = len(record.ticks)
    if record.ticks and not state.done:
        return ReplayResult(
            ok=False, ticks_checked=ticks_checked, first_divergence=None,
            message="record ends before the episode does")
    if record.ticks:
        winner = state.winner or "draw"
        if winner != record.footer.get("winner"):
            return ReplayResult(
                ok=False, ticks_checked=ticks_checked, first_divergence=None,
                message=(f"winner mismatch: replay says {winner!r}, "
                         f"record says {record.footer.get('winner')!r}"))
        gamma = config.gamma
        returns = {}
        for eid, stream in streams.items():
            total = 0.0
            for reward in reversed(stream):
                total = reward + gamma * total
            returns[eid] = total
        returns_doc = {action_key(e): r for e, r in returns.items()}
        if returns_doc != record.footer.get("returns"):
            return ReplayResult(
                ok=False, ticks_checked=ticks_checked, first_divergence=None,
                message="return totals do not match the footer")
    return ReplayResult(
        ok=True, ticks_checked=ticks_checked, first_divergence=None,
        message=f"verified {ticks_checked} steps")
