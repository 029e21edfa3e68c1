"""End-to-end capability checks, one test per headline guarantee.

Each test exercises a subsystem at its full pinned scale — wire codec,
flight model, determinism, policy hierarchy, opponent sampler, trainer,
network bridge, and the live service — and finishes by printing one
summary line with the measured numbers.  The verdict rides entirely on
the assertions; the prints are for the reader of the test log.
"""

from __future__ import annotations

import io
import json
import math
import statistics
import struct
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import stats as sps

from aircombat import discodec as dc
from aircombat import flightdyn as fd
from aircombat.agents import (
    MIXED_DEFAULT,
    CommanderController,
    MixedController,
    PolicyKind,
    ScriptedController,
    evaluate_winrate,
    mixed_opponent_assign,
    run_episode,
)
from aircombat.agents.commander import (
    CommanderFeatures,
    CommanderParams,
    feature_vector,
    initial_params,
    log_policy_grad,
    softmax,
)
from aircombat.agents.opponents import POLICY_ORDER
from aircombat.agents.training import default_curriculum, train_commander
from aircombat.bridge import (
    CONTROLLED_BY_AGENT,
    CONTROLLED_BY_EXTERNAL,
    MODE_STATE,
    BridgeConfig,
    DisBridge,
    GeodeticOrigin,
    LoopbackTransport,
    VrfFilter,
    mode_equivalence_check,
    state_to_entity_pdu,
)
from aircombat.combat import drill_scenario
from aircombat.combat.env import EntityId, blue_entity_id
from aircombat.combat.scenario import default_scenario
from aircombat.gateway import (
    EpisodeRecorder,
    GatewayServer,
    LoopbackClient,
    SimulationSession,
    replay_record,
)

ORIGIN = GeodeticOrigin(35.0, -117.0, 0.0)
G = fd.DEFAULT_PARAMS.gravity
FIXTURE_DIR = Path(__file__).resolve().parent.parent / "fixtures" / "dis"


def report(name: str, detail: str) -> None:
    print(f"criterion {name}: PASS ({detail})")


# ------------------------------------------------------------ wire codec


def _random_entity_state(rng):
    marking_chars = "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789-"
    n = int(rng.integers(0, dc.MARKING_LENGTH + 1))
    marking = "".join(rng.choice(list(marking_chars)) for _ in range(n)).strip()
    return dc.EntityStatePdu(
        header=dc.make_header(
            int(rng.integers(0, 256)), dc.PDU_TYPE_ENTITY_STATE,
            timestamp=int(rng.integers(0, 2 ** 32)),
        ),
        entity_id=dc.EntityId(*(int(v) for v in rng.integers(0, 2 ** 16, size=3))),
        force_id=int(rng.integers(0, 256)),
        location=tuple(rng.uniform(-7e6, 7e6, size=3)),
        linear_velocity=tuple(rng.uniform(-700, 700, size=3)),
        orientation=tuple(rng.uniform(-math.pi, math.pi, size=3)),
        marking=marking,
    )


def _random_action_data(rng):
    return dc.ActionDataPdu(
        header=dc.make_header(
            int(rng.integers(0, 256)), dc.PDU_TYPE_DATA,
            timestamp=int(rng.integers(0, 2 ** 32)),
        ),
        entity_id=dc.EntityId(*(int(v) for v in rng.integers(0, 2 ** 16, size=3))),
        throttle=float(rng.uniform(0, 1)),
        pitch_cmd=float(rng.uniform(-1, 1)),
        roll_cmd=float(rng.uniform(-1, 1)),
        fire=int(rng.integers(0, 2)),
        request_id=int(rng.integers(0, 2 ** 32)),
    )


def test_criterion_wire_codec_round_trip():
    started = time.perf_counter()
    rng = np.random.default_rng(1)
    for i in range(10_000):
        pdu = _random_entity_state(rng) if i % 2 == 0 else _random_action_data(rng)
        blob = dc.encode(pdu)
        assert dc.decode(blob) == pdu
        expect = 144 if i % 2 == 0 else 64
        assert len(blob) == expect
        assert struct.unpack_from(">H", blob, 8)[0] == expect
    # Golden frames stay byte-for-byte stable against the checked-in files.
    for name in ("entity_state_level", "entity_state_turn",
                 "action_data_fire", "action_data_cruise"):
        blob = (FIXTURE_DIR / f"{name}.bin").read_bytes()
        assert dc.encode(dc.decode(blob)) == blob
    elapsed = time.perf_counter() - started
    assert elapsed < 5.0
    report("wire-codec", f"10000 round trips + 4 golden frames in {elapsed:.2f} s")


# -------------------------------------------------------- flight dynamics


def test_criterion_flight_model_fidelity():
    started = time.perf_counter()

    def level_state(speed, bank=0.0):
        return fd.AircraftState(
            position=(0.0, 0.0, -3000.0), speed=speed, heading=0.0,
            flight_path_angle=0.0, bank=bank)

    def rollout(state, control, dt, steps):
        out = [state]
        for _ in range(steps):
            state = fd.step(state, control, dt)
            out.append(state)
        return out

    # Coordinated level turns match the analytic rate g tan(bank)/V.
    worst_rel = 0.0
    for bank_deg in (15.0, 30.0, 45.0, 60.0):
        for speed in (150.0, 200.0, 300.0):
            bank = math.radians(bank_deg)
            n = 1.0 / math.cos(bank)
            control = fd.ControlInput(
                throttle=fd.drag(speed, n) / fd.thrust_available(1.0, speed),
                pitch_cmd=(n - 1.0) / (fd.DEFAULT_PARAMS.load_max - 1.0),
                roll_cmd=bank / fd.DEFAULT_PARAMS.bank_cmd_max,
            )
            end = rollout(level_state(speed, bank=bank), control, 0.01, 1000)[-1]
            turned = (end.heading - 0.0) % (2.0 * math.pi)
            expected = G * math.tan(bank) / speed * 10.0
            rel = abs(turned - expected) / expected
            worst_rel = max(worst_rel, rel)
            assert rel < 0.02, (bank_deg, speed, rel)

    # Step halving on a smooth trajectory moves the endpoint < 0.1 m.
    start = level_state(250.0)
    control = fd.ControlInput(throttle=0.6, pitch_cmd=0.1, roll_cmd=0.12)
    coarse = rollout(start, control, 0.01, 1000)[-1]
    fine = rollout(start, control, 0.005, 2000)[-1]
    halving_gap = math.dist(coarse.position, fine.position)
    assert halving_gap < 0.1

    # Idle throttle never creates specific energy, 100 random starts.
    rng = np.random.default_rng(42)
    for _ in range(100):
        state = fd.AircraftState(
            position=(0.0, 0.0, float(-rng.uniform(2000, 8000))),
            speed=float(rng.uniform(150, 400)),
            heading=float(rng.uniform(0, 2 * math.pi)),
            flight_path_angle=float(rng.uniform(-0.2, 0.2)),
            bank=float(rng.uniform(-1.0, 1.0)),
        )
        control = fd.ControlInput(
            throttle=0.0, pitch_cmd=0.0, roll_cmd=float(rng.uniform(-0.8, 0.8)))
        energy = None
        for s in rollout(state, control, 0.01, 500):
            e = s.altitude + s.speed ** 2 / (2.0 * G)
            if energy is not None:
                assert e <= energy + 1e-6
            energy = e

    elapsed = time.perf_counter() - started
    assert elapsed < 10.0
    report("flight-model",
           f"12 turn cases worst rel {worst_rel:.4f}, halving gap "
           f"{halving_gap:.3e} m, 100 idle decays, {elapsed:.2f} s")


# ----------------------------------------------------------- determinism


def test_criterion_bit_identical_reruns():
    started = time.perf_counter()
    config = default_scenario(
        blue_count=2, red_count=2, time_limit=20.0, separation_km=4.0)

    def run_block():
        results = []
        for seed in range(50):
            results.append(run_episode(
                config, MixedController(MIXED_DEFAULT),
                MixedController(MIXED_DEFAULT), seed=seed))
        return results

    first = run_block()
    second = run_block()
    for a, b in zip(first, second):
        assert a.winner == b.winner
        assert a.steps == b.steps
        assert a.events == b.events
        assert a.returns == b.returns                  # exact float equality
        assert a.reward_streams == b.reward_streams
    elapsed = time.perf_counter() - started
    assert elapsed < 60.0
    report("determinism", f"50 seeded episodes re-run bit-identical in {elapsed:.1f} s")


# ------------------------------------------------------- policy hierarchy


def test_criterion_policy_hierarchy():
    started = time.perf_counter()
    duel = drill_scenario()
    pursuit = evaluate_winrate(
        duel, ScriptedController(PolicyKind.ATTACK),
        ScriptedController(PolicyKind.DEFEND), episodes=10, base_seed=0)
    assert pursuit.wins >= 8, pursuit

    pairs = drill_scenario(blue_count=2, red_count=2)
    commander = evaluate_winrate(
        pairs, CommanderController(initial_params()),
        MixedController(MIXED_DEFAULT), episodes=500, base_seed=0)
    assert commander.rate > 0.5, commander
    assert commander.ci_low > 0.5, commander
    assert commander.decisive()
    elapsed = time.perf_counter() - started
    assert elapsed < 900.0
    report("policy-hierarchy",
           f"pursuit {pursuit.wins}/10 vs evasion; commander rate "
           f"{commander.rate:.3f} ci=[{commander.ci_low:.3f},"
           f"{commander.ci_high:.3f}] over 500 episodes, {elapsed:.1f} s")


# ---------------------------------------------------------- mixed sampler


def test_criterion_mixed_sampler_frequencies():
    started = time.perf_counter()
    n = 100_000
    team = [blue_entity_id(i + 1) for i in range(n)]
    picks = mixed_opponent_assign(
        MIXED_DEFAULT, team, np.random.default_rng(7))
    counts = np.array([sum(1 for p in picks.values() if p is kind)
                       for kind in POLICY_ORDER])
    freqs = counts / n
    expected = np.array(MIXED_DEFAULT.weights)
    assert np.all(np.abs(freqs - expected) < 0.01)
    chi2 = sps.chisquare(counts, expected * n)
    assert chi2.pvalue > 0.001
    elapsed = time.perf_counter() - started
    assert elapsed < 5.0
    report("mixed-sampler",
           f"n={n} max dev {np.max(np.abs(freqs - expected)):.4f}, "
           f"chi2 p={chi2.pvalue:.3f}, {elapsed:.2f} s")


# --------------------------------------------------------------- trainer


def test_criterion_trainer_gradient_and_improvement():
    started = time.perf_counter()
    # Analytic score gradient against central differences, 100 draws.
    rng = np.random.default_rng(21)
    eps = 1e-6
    worst = 0.0
    for _ in range(100):
        weights = rng.normal(scale=1.0, size=(3, 6))
        feats = CommanderFeatures(
            hp=float(rng.uniform(0.0, 1.0)),
            nearest_threat_range=float(rng.uniform(100.0, 2e4)),
            nearest_threat_aspect=float(rng.uniform(0.0, math.pi)),
            local_advantage=float(rng.uniform(-4.0, 4.0)),
            energy=float(rng.uniform(1000.0, 2e4)),
        )
        chosen = POLICY_ORDER[int(rng.integers(3))]
        row = POLICY_ORDER.index(chosen)
        params = CommanderParams(weights=weights)
        analytic = log_policy_grad(params, feats, chosen)
        x = feature_vector(feats)
        for i in range(3):
            for j in range(6):
                w_plus = weights.copy()
                w_plus[i, j] += eps
                w_minus = weights.copy()
                w_minus[i, j] -= eps
                fd_ij = (math.log(softmax(w_plus @ x)[row])
                         - math.log(softmax(w_minus @ x)[row])) / (2.0 * eps)
                scale = max(abs(fd_ij), abs(analytic[i, j]), 1e-4)
                rel = abs(fd_ij - analytic[i, j]) / scale
                worst = max(worst, rel)
                assert rel < 1e-5

    # A 300-episode budget on the first curriculum rung never makes the
    # commander worse against that rung's opponent.
    stage0 = default_curriculum(time_limit=40.0)[0]
    trained = train_commander(initial_params(), [stage0], budget=300,
                              base_seed=1000)
    opponent = ScriptedController(PolicyKind.DEFEND)
    before = evaluate_winrate(
        stage0.config, CommanderController(initial_params()), opponent,
        episodes=50, base_seed=0)
    after = evaluate_winrate(
        stage0.config, CommanderController(trained.params), opponent,
        episodes=50, base_seed=0)
    assert after.rate >= before.rate
    elapsed = time.perf_counter() - started
    assert elapsed < 600.0
    report("trainer",
           f"gradient worst rel {worst:.2e}; stage-0 win rate "
           f"{before.rate:.2f} -> {after.rate:.2f} after 300 episodes, "
           f"{elapsed:.1f} s")


# ---------------------------------------------------------------- bridge


def test_criterion_bridge_stream_and_equivalence():
    started = time.perf_counter()
    own = EntityId(1, 1, 7)
    cruise = fd.AircraftState(
        position=(0.0, 0.0, -3000.0), speed=220.0, heading=1.0,
        flight_path_angle=0.0, bank=0.0)

    # Clean 30 s loopback stream: nothing malformed, nothing dropped.
    sender_end, receiver_end = LoopbackTransport.pair()
    sender = DisBridge(
        BridgeConfig(roster={own: CONTROLLED_BY_AGENT},
                     traffic_filter=VrfFilter(1), mode=MODE_STATE,
                     send_rate=10.0, origin=ORIGIN),
        sender_end, {own: cruise})
    receiver = DisBridge(
        BridgeConfig(roster={own: CONTROLLED_BY_EXTERNAL},
                     traffic_filter=VrfFilter(1), mode=MODE_STATE,
                     send_rate=10.0, origin=ORIGIN),
        receiver_end, {})
    for k in range(3001):
        now = k * 0.01
        sender.tick(now)
        receiver.tick(now)
    assert receiver.stats.malformed == 0
    assert receiver.stats.dropped == 0
    assert sender.stats.malformed == 0
    assert receiver.stats.received == sender.stats.sent >= 300

    # Both command transports integrate to the same trajectory when the
    # peer matches the bridge integration step.
    drift = mode_equivalence_check(
        {own: cruise}, {own: PolicyKind.ENGAGE}, duration=30.0)
    assert drift < 1e-6

    # A million random datagrams neither crash the loop nor leak through.
    bridge_end, hose = LoopbackTransport.pair()
    bridge = DisBridge(
        BridgeConfig(roster={own: CONTROLLED_BY_AGENT},
                     traffic_filter=VrfFilter(1), mode=MODE_STATE,
                     send_rate=1.0, origin=ORIGIN),
        bridge_end, {own: cruise})
    rng = np.random.default_rng(20260817)
    total, chunk, fed, now = 1_000_000, 50_000, 0, 0.0
    while fed < total:
        lengths = rng.integers(0, 160, size=chunk)
        blob = rng.integers(0, 256, size=int(lengths.sum()),
                            dtype=np.uint8).tobytes()
        offset = 0
        for n in lengths:
            hose.send(blob[offset:offset + int(n)])
            offset += int(n)
        now += 0.1
        bridge.tick(now)
        fed += chunk
    assert bridge.stats.received == total
    assert (bridge.stats.malformed + bridge.stats.dropped
            + bridge.stats.filtered) == total
    assert not bridge.mirrors
    other = EntityId(1, 1, 8)
    hose.send(dc.encode(state_to_entity_pdu(other, cruise, ORIGIN, 1, now)))
    bridge.tick(now + 0.1)
    assert other in bridge.mirrors
    elapsed = time.perf_counter() - started
    assert elapsed < 120.0
    report("bridge",
           f"{receiver.stats.received} clean frames 30 s, mode drift "
           f"{drift:.2e} m, 1e6-datagram fuzz survived, {elapsed:.1f} s")


# --------------------------------------------------------------- service


def test_criterion_service_latency_and_replay():
    started = time.perf_counter()

    # Tick budget at the 10-aircraft-per-side scale, recording enabled.
    config = default_scenario(
        blue_count=10, red_count=10, time_limit=60.0, radius_km=2.0)
    recorder = EpisodeRecorder(
        io.StringIO(), config, 0,
        participants={"blue": "commander", "red": "commander"})
    session = SimulationSession(config, 0, recorder=recorder)
    for _ in range(20):
        session.tick()
    samples = []
    while not session.done and len(samples) < 400:
        t0 = time.perf_counter_ns()
        session.tick()
        samples.append((time.perf_counter_ns() - t0) / 1e6)
    median_ms = statistics.median(samples)
    assert median_ms < 10.0

    # Twenty interactive episodes record, replay, and verify, with a
    # scripted pilot whose inputs always land within two decision steps.
    throttles = (1.0, 0.3, 0.8, 0.5)
    pitches = (0.1, -0.05, 0.0, 0.02)
    rolls = (0.4, -0.4, 0.0, 0.2)
    worst_staleness = 0
    for seed in range(20):
        episode_config = default_scenario(
            blue_count=2, red_count=2, time_limit=12.0, separation_km=3.0)
        buffer = io.StringIO()
        session = SimulationSession(
            episode_config, seed,
            recorder=EpisodeRecorder(
                buffer, episode_config, seed,
                participants={"blue": "commander", "red": "commander"},
                mode="interactive"))
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
        for stat in session.roster.stats().values():
            worst_staleness = max(worst_staleness, stat["max_staleness"])
        result = replay_record(io.StringIO(buffer.getvalue()))
        assert result.ok, f"seed {seed}: {result.message}"
    assert worst_staleness <= 2
    elapsed = time.perf_counter() - started
    assert elapsed < 300.0
    report("service",
           f"20-aircraft tick median {median_ms:.2f} ms; 20 piloted episodes "
           f"replay-verified, worst input staleness {worst_staleness} "
           f"steps, {elapsed:.1f} s")
