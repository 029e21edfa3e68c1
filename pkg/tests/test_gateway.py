"""Tests for the service layer: snapshots, recording, replay
verification, the live session loop, the message protocol, the
WebSocket server, and the command-line interface.
"""

from __future__ import annotations

import asyncio
import io
import json
import math
import statistics
import subprocess
import sys
import time

import numpy as np
import pytest

from aircombat.agents.episodes import ScriptedController
from aircombat.bridge import LoopbackTransport
from aircombat.combat.env import CombatEnv
from aircombat.combat.rewards import PolicyKind
from aircombat.combat.scenario import default_scenario, save_scenario
from aircombat.discodec import ActionDataPdu, EntityStatePdu, decode
from aircombat.errors import RecordFormatError
from aircombat.gateway import (
    DisPublisher,
    EpisodeRecorder,
    GatewayServer,
    LoopbackClient,
    SimulationSession,
    canonical_json,
    load_record,
    replay_record,
    snapshot_from_state,
    snapshot_hash,
)
from aircombat.gateway.cli import main as cli_main
from aircombat.gateway.recorder import action_key
from aircombat.gateway.session import TICKS_PER_SNAPSHOT


def small_scenario(time_limit: float = 12.0, blue: int = 2, red: int = 2):
    return default_scenario(
        blue_count=blue, red_count=red, time_limit=time_limit,
        separation_km=3.0)


def recorded_session(config, seed: int, **kwargs):
    buffer = io.StringIO()
    recorder = EpisodeRecorder(
        buffer, config, seed,
        participants={"blue": "commander", "red": "commander"},
        mode="interactive")
    session = SimulationSession(config, seed, recorder=recorder, **kwargs)
    return session, buffer


# -------------------------------------------------------------- snapshots


def test_snapshot_hash_tracks_world_content():
    config = small_scenario()
    env = CombatEnv(config)
    state = env.reset(seed=5)
    first = snapshot_hash(snapshot_from_state(state))
    assert first == snapshot_hash(snapshot_from_state(state))
    state.arrays.north[0] += 0.5
    assert snapshot_hash(snapshot_from_state(state)) != first


def test_canonical_json_is_order_insensitive_and_rejects_nan():
    assert canonical_json({"b": 1, "a": [2, 3]}) == canonical_json(
        {"a": [2, 3], "b": 1})
    with pytest.raises(ValueError):
        canonical_json({"x": float("nan")})


def test_snapshot_velocity_magnitude_matches_speed():
    env = CombatEnv(small_scenario())
    state = env.reset(seed=2)
    snapshot = snapshot_from_state(state)
    for i, snap in enumerate(snapshot.entities):
        assert math.hypot(*snap.velocity) == pytest.approx(
            float(state.arrays.speed[i]), rel=1e-12)
        assert snap.attitude[0] == pytest.approx(float(state.arrays.heading[i]))


# --------------------------------------------------------- record / replay


def test_record_then_replay_verifies():
    config = small_scenario(time_limit=15.0)
    session, buffer = recorded_session(config, seed=3)
    winner = session.run_to_completion()
    result = replay_record(io.StringIO(buffer.getvalue()))
    assert result.ok, result.message
    assert result.ticks_checked == session.state.step_index
    assert winner in ("blue", "red", "draw")


def test_replay_detects_tampered_action():
    config = small_scenario(time_limit=10.0)
    session, buffer = recorded_session(config, seed=4)
    session.run_to_completion()
    lines = buffer.getvalue().splitlines()
    middle = len(lines) // 2
    doc = json.loads(lines[middle])
    assert doc["kind"] == "tick"
    key = sorted(doc["actions"])[0]
    entry = doc["actions"][key]
    entry["throttle"] = 1.0 if entry["throttle"] < 0.5 else 0.0
    lines[middle] = canonical_json(doc)
    result = replay_record(io.StringIO("\n".join(lines) + "\n"))
    assert not result.ok
    assert result.first_divergence == doc["n"]


def test_replay_detects_wrong_seed():
    config = small_scenario(time_limit=8.0)
    session, buffer = recorded_session(config, seed=6)
    session.run_to_completion()
    record = load_record(io.StringIO(buffer.getvalue()))
    record.header["seed"] = 7
    result = replay_record(record)
    assert not result.ok
    assert result.first_divergence == 1


def test_record_without_steps_verifies_trivially():
    config = small_scenario()
    buffer = io.StringIO()
    recorder = EpisodeRecorder(buffer, config, 0, participants={})
    recorder.finish("draw", {})
    result = replay_record(io.StringIO(buffer.getvalue()))
    assert result.ok
    assert result.ticks_checked == 0


def test_record_file_round_trip(tmp_path):
    config = small_scenario(time_limit=6.0)
    path = tmp_path / "episode.jsonl"
    recorder = EpisodeRecorder(
        path, config, 9, participants={"blue": "commander", "red": "mixed"})
    session = SimulationSession(config, 9, recorder=recorder)
    session.run_to_completion()
    record = load_record(path)
    assert record.header["seed"] == 9
    assert record.header["participants"]["red"] == "mixed"
    assert all(t["kind"] == "tick" for t in record.ticks)
    assert record.footer["winner"] in ("blue", "red", "draw")
    assert replay_record(path).ok


def test_load_record_rejects_structural_garbage():
    with pytest.raises(RecordFormatError):
        load_record(io.StringIO("not json\n{}"))
    with pytest.raises(RecordFormatError):
        load_record(io.StringIO('{"kind":"header","version":1}\n'))
    with pytest.raises(RecordFormatError):          # missing footer
        load_record(io.StringIO(
            '{"kind":"header","version":1}\n{"kind":"tick"}\n'))
    with pytest.raises(RecordFormatError):          # future version
        load_record(io.StringIO(
            '{"kind":"header","version":99}\n{"kind":"footer"}\n'))


# ----------------------------------------------------------- session loop


def test_session_runs_headless_to_completion():
    session = SimulationSession(small_scenario(time_limit=10.0), seed=0)
    winner = session.run_to_completion()
    assert winner in ("blue", "red", "draw")
    assert session.done


def test_snapshot_cadence_and_event_conservation():
    session = SimulationSession(small_scenario(time_limit=4.0), seed=1)
    snapshots = []
    while not session.done:
        snapshot = session.tick()
        step = session.state.step_index
        if snapshot is not None:
            snapshots.append(snapshot)
            assert step % TICKS_PER_SNAPSHOT == 0 or session.done
    times = [s.time for s in snapshots]
    assert times == sorted(times)
    assert all(b > a for a, b in zip(times, times[1:]))
    # Every event reaches exactly one broadcast snapshot.
    broadcast_events = [e for s in snapshots for e in s.events]
    assert broadcast_events == session.state.event_log


def test_claim_release_cycle():
    session = SimulationSession(small_scenario(blue=1, red=1), seed=0)
    first = session.claim("a", "blue")
    assert first is not None
    assert session.claim("b", "blue") is None        # only one blue aircraft
    other = session.claim("b", "red")
    assert other is not None and other != first
    session.release("a")
    assert session.claim("c", "blue") == first


def test_human_commands_replace_agent_commands():
    config = small_scenario(time_limit=5.0, blue=1, red=1)
    session, buffer = recorded_session(
        config, seed=2, blue=ScriptedController(PolicyKind.ATTACK))
    entity = session.claim("pilot", "blue")
    session.set_control("pilot", throttle=0.9, pitch=0.05, roll=0.25)
    for _ in range(10):
        session.tick()
    key = action_key(entity)
    ticks = [json.loads(line) for line in buffer.getvalue().splitlines()
             if json.loads(line)["kind"] == "tick"]
    for tick in ticks:
        entry = tick["actions"][key]
        assert entry["throttle"] == 0.9
        assert entry["pitch"] == 0.05
        assert entry["roll"] == 0.25
        # The human aircraft still gets its rewards computed.
        assert key in tick["rewards"]


def test_human_input_applied_within_two_ticks():
    config = small_scenario(time_limit=5.0)
    session, buffer = recorded_session(config, seed=0)
    server = GatewayServer(session, port=0)
    pilot = LoopbackClient(server)
    reply = pilot.send({"type": "join", "team": "blue"})[0]
    assert reply["type"] == "joined"
    session.tick()
    pilot.send({"type": "control", "throttle": 1.0, "pitch": 0.0,
                "roll": 0.0, "fire": False})
    session.tick()
    last = json.loads(buffer.getvalue().splitlines()[-1])
    assert last["actions"][action_key(pilot.entity)]["throttle"] == 1.0
    stats = session.roster.stats()
    assert all(s["max_staleness"] <= 2 for s in stats.values())


def test_released_entity_reverts_to_agent_control():
    config = small_scenario(time_limit=8.0, blue=1, red=1)
    session, buffer = recorded_session(config, seed=5)
    entity = session.claim("pilot", "blue")
    session.set_control("pilot", throttle=0.777, pitch=0.0, roll=0.0)
    for _ in range(6):
        session.tick()
    session.release("pilot")
    for _ in range(6):
        session.tick()
    key = action_key(entity)
    throttles = [
        json.loads(line)["actions"][key]["throttle"]
        for line in buffer.getvalue().splitlines()
        if json.loads(line)["kind"] == "tick"
    ]
    assert throttles[:6] == [0.777] * 6
    assert throttles[6] != 0.777          # commander took over immediately


def test_twenty_recorded_episodes_with_scripted_pilot_verify():
    throttles = (1.0, 0.3, 0.8, 0.5)
    pitches = (0.1, -0.05, 0.0, 0.02)
    rolls = (0.4, -0.4, 0.0, 0.2)
    for seed in range(20):
        config = small_scenario(time_limit=12.0)
        session, buffer = recorded_session(config, seed=seed)
        server = GatewayServer(session, port=0)
        pilot = LoopbackClient(server)
        assert pilot.send({"type": "join", "team": "blue"})[0]["type"] == "joined"
        k = 0
        while not session.done:
            if k % 5 == 0:
                phase = (k // 5) % 4
                pilot.send({
                    "type": "control", "throttle": throttles[phase],
                    "pitch": pitches[phase], "roll": rolls[phase],
                    "fire": phase == 0})
            session.tick()
            k += 1
        stats = session.roster.stats()
        assert all(s["max_staleness"] <= 2 for s in stats.values())
        result = replay_record(io.StringIO(buffer.getvalue()))
        assert result.ok, f"seed {seed}: {result.message}"


def test_ten_versus_ten_tick_budget():
    config = default_scenario(
        blue_count=10, red_count=10, time_limit=60.0, radius_km=2.0)
    session, _ = recorded_session(config, seed=0)
    for _ in range(20):                    # warm the kernels untimed
        session.tick()
    samples = []
    while not session.done and len(samples) < 400:
        start = time.perf_counter_ns()
        session.tick()
        samples.append((time.perf_counter_ns() - start) / 1e6)
    assert len(samples) >= 100
    assert statistics.median(samples) < 10.0


# --------------------------------------------------------------- protocol


def test_protocol_join_control_ping_flow():
    session = SimulationSession(small_scenario(), seed=0)
    server = GatewayServer(session, port=0)

    bad_team = LoopbackClient(server)
    replies = bad_team.send({"type": "join", "team": "green"})
    assert replies[0]["code"] == "bad-team"
    assert bad_team.closed_with == "bad-team"

    pilot = LoopbackClient(server)
    joined = pilot.send({"type": "join", "team": "blue"})[0]
    assert joined["type"] == "joined" and len(joined["entity"]) == 3
    again = pilot.send({"type": "join", "team": "blue"})[0]
    assert again["code"] == "already-joined"
    assert pilot.closed_with is None       # rejections are not fatal

    assert pilot.send({"type": "ping", "t": 42})[0] == {
        "type": "pong", "t": 42}

    unjoined = LoopbackClient(server)
    assert unjoined.send({"type": "control", "throttle": 1, "pitch": 0,
                          "roll": 0})[0]["code"] == "not-joined"
    assert unjoined.closed_with == "not-joined"

    nan_sender = LoopbackClient(server)
    nan_sender.send({"type": "join", "team": "red"})
    bad = nan_sender.send({"type": "control", "throttle": float("nan"),
                           "pitch": 0, "roll": 0})
    assert bad[0]["code"] == "bad-control"
    assert nan_sender.closed_with == "bad-control"

    stranger = LoopbackClient(server)
    assert stranger.send({"type": "warp"})[0]["code"] == "unknown-type"
    assert stranger.closed_with == "unknown-type"

    shouter = LoopbackClient(server)
    assert shouter.send(["not", "a", "dict"])[0]["code"] == "bad-message"


def test_second_claim_collides_with_slot_taken():
    session = SimulationSession(small_scenario(blue=1, red=1), seed=0)
    server = GatewayServer(session, port=0)
    first = LoopbackClient(server)
    assert first.send({"type": "join", "team": "blue"})[0]["type"] == "joined"
    second = LoopbackClient(server)
    reply = second.send({"type": "join", "team": "blue"})[0]
    assert reply == {"type": "error", "code": "slot-taken"}
    assert second.closed_with is None
    assert second.send({"type": "join", "team": "red"})[0]["type"] == "joined"


def test_control_values_are_clamped():
    session = SimulationSession(small_scenario(), seed=0)
    server = GatewayServer(session, port=0)
    pilot = LoopbackClient(server)
    pilot.send({"type": "join", "team": "blue"})
    pilot.send({"type": "control", "throttle": 5.0, "pitch": -3.0,
                "roll": 2.0, "fire": True})
    slot = session.roster.slots()[0]
    assert slot.control.throttle == 1.0
    assert slot.control.pitch_cmd == -1.0
    assert slot.control.roll_cmd == 1.0
    assert slot.fire is True


def test_slow_client_sheds_snapshots_never_critical_messages():
    session = SimulationSession(small_scenario(), seed=0)
    server = GatewayServer(session, port=0)
    lagger = LoopbackClient(server)
    for k in range(30):
        server._broadcast({"type": "tick", "t": float(k)}, droppable=True)
    assert lagger.dropped == 30 - 8        # bounded queue keeps the newest 8
    server._broadcast({"type": "end", "winner": "draw"}, droppable=False)
    received = lagger.receive()
    assert received[-1]["type"] == "end"   # critical message was delivered
    # Snapshot times never run backwards, even with drops in between.
    times = [m["t"] for m in received if m["type"] == "tick"]
    assert times == sorted(times)


# ----------------------------------------------------------- WS end-to-end


def test_websocket_end_to_end_join_fly_finish():
    async def flow():
        config = small_scenario(time_limit=6.0)
        session = SimulationSession(config, seed=1)
        server = GatewayServer(session, port=0, time_scale=8.0)
        task = asyncio.create_task(server.run())
        await server.ready.wait()
        from websockets.asyncio.client import connect
        ticks, joined, end = [], None, None
        async with connect(f"ws://127.0.0.1:{server.bound_port}") as ws:
            await ws.send(json.dumps({"type": "join", "team": "blue"}))
            await ws.send(json.dumps(
                {"type": "control", "throttle": 1.0, "pitch": 0.0,
                 "roll": 0.0, "fire": False}))
            async for raw in ws:
                msg = json.loads(raw)
                if msg["type"] == "joined":
                    joined = msg
                elif msg["type"] == "tick":
                    ticks.append(msg)
                elif msg["type"] == "end":
                    end = msg
                    break
        winner = await task
        return joined, ticks, end, winner

    joined, ticks, end, winner = asyncio.run(flow())
    assert joined is not None
    assert end is not None and end["winner"] == winner
    times = [t["t"] for t in ticks]
    assert len(times) >= 10
    assert all(b > a for a, b in zip(times, times[1:]))
    # Full throttle straight flight: own aircraft gains speed.
    speeds = []
    for tick in ticks:
        for entity in tick["entities"]:
            if entity["id"] == joined["entity"]:
                speeds.append(math.hypot(*entity["vel"]))
    assert speeds[-1] > speeds[0] + 5.0


def test_websocket_violation_closes_with_coded_reason():
    async def flow():
        from websockets.asyncio.client import connect
        from websockets.exceptions import ConnectionClosed
        config = small_scenario(time_limit=4.0)
        session = SimulationSession(config, seed=0)
        server = GatewayServer(session, port=0, time_scale=8.0)
        task = asyncio.create_task(server.run())
        await server.ready.wait()
        uri = f"ws://127.0.0.1:{server.bound_port}"
        codes, close = [], None
        async with connect(uri) as ws:
            await ws.send("this is not json")
            try:
                while True:
                    codes.append(json.loads(await ws.recv()).get("code"))
            except ConnectionClosed as exc:
                close = exc.rcvd
        # The simulation kept running: a fresh client still joins.
        async with connect(uri) as ws:
            await ws.send(json.dumps({"type": "join", "team": "red"}))
            while True:
                msg = json.loads(await ws.recv())
                if msg["type"] == "joined":
                    break
        winner = await task
        return codes, close, winner

    codes, close, winner = asyncio.run(flow())
    assert "bad-json" in codes
    assert close is not None and close.code == 1008
    assert close.reason == "bad-json"
    assert winner in ("blue", "red", "draw")


# ------------------------------------------------------------ DIS fan-out


def test_dis_publisher_state_and_action_modes():
    config = small_scenario(time_limit=5.0)
    session = SimulationSession(config, seed=0)
    near, far = LoopbackTransport.pair()
    publisher = DisPublisher(near, mode="state")
    snapshot = None
    while snapshot is None:
        snapshot = session.tick()
    publisher.publish_state(snapshot)
    pdus = [decode(d) for d in far.poll()]
    alive = [s for s in snapshot.entities if s.alive]
    assert len(pdus) == len(alive)
    assert all(isinstance(p, EntityStatePdu) for p in pdus)
    assert {p.entity_id for p in pdus} == {s.entity for s in alive}
    assert {p.force_id for p in pdus} == {1, 2}

    action_pub = DisPublisher(near, mode="action")
    action_pub.publish_actions(session.last_actions, session.state.time)
    action_pdus = [decode(d) for d in far.poll()]
    assert len(action_pdus) == len(session.last_actions)
    assert all(isinstance(p, ActionDataPdu) for p in action_pdus)
    assert all(0.0 <= p.throttle <= 1.0 for p in action_pdus)


# ------------------------------------------------------------------- CLI


@pytest.fixture()
def scenario_file(tmp_path):
    path = tmp_path / "duel.json"
    save_scenario(default_scenario(
        blue_count=1, red_count=1, time_limit=30.0, separation_km=3.0), path)
    return str(path)


def test_cli_evaluate_is_deterministic(scenario_file, capsys):
    argv = ["evaluate", "--blue", "attack", "--red", "defend",
            "--scenario", scenario_file, "-n", "2", "--seed", "0"]
    assert cli_main(argv) == 0
    first = capsys.readouterr().out
    assert cli_main(argv) == 0
    second = capsys.readouterr().out
    assert first == second
    assert "win_rate=" in first
    assert "seeds=0..1" in first


def test_cli_usage_errors_exit_two(scenario_file):
    bad_argvs = [
        ["evaluate", "--blue", "ace-pilot", "--red", "defend",
         "--scenario", scenario_file],
        ["evaluate", "--blue", "attack", "--red", "defend",
         "--scenario", scenario_file, "-n", "0"],
        ["evaluate", "--blue", "attack", "--scenario", scenario_file],
        ["bridge", "--scenario", scenario_file, "--listen", "nocolon"],
        ["serve"],
    ]
    for argv in bad_argvs:
        with pytest.raises(SystemExit) as excinfo:
            cli_main(argv)
        assert excinfo.value.code == 2, argv


def test_cli_replay_exit_codes(tmp_path, capsys):
    config = small_scenario(time_limit=8.0)
    path = tmp_path / "ep.jsonl"
    recorder = EpisodeRecorder(path, config, 1, participants={})
    SimulationSession(config, 1, recorder=recorder).run_to_completion()
    assert cli_main(["replay", str(path)]) == 0
    assert "verified" in capsys.readouterr().out

    lines = path.read_text().splitlines()
    doc = json.loads(lines[3])
    key = sorted(doc["actions"])[0]
    doc["actions"][key]["roll"] = 1.0
    lines[3] = canonical_json(doc)
    tampered = tmp_path / "tampered.jsonl"
    tampered.write_text("\n".join(lines) + "\n")
    assert cli_main(["replay", str(tampered)]) == 1
    out = capsys.readouterr().out
    assert "divergence" in out


def test_cli_serve_runs_scenario_to_completion(tmp_path):
    scenario = tmp_path / "brief.json"
    save_scenario(default_scenario(
        blue_count=1, red_count=1, time_limit=2.0), scenario)
    record = tmp_path / "served.jsonl"
    proc = subprocess.run(
        [sys.executable, "-m", "aircombat", "serve",
         "--scenario", str(scenario), "--port", "0", "--seed", "1",
         "--time-scale", "20", "--record", str(record)],
        capture_output=True, text=True, timeout=60)
    assert proc.returncode == 0, proc.stderr
    assert "listening on ws://" in proc.stdout
    assert "episode complete" in proc.stdout
    assert replay_record(str(record)).ok
