"""Command-line entry points.

Four subcommands cover the operational surface:

* ``serve``    -- run a live scenario over WebSocket, optionally
  recording it and optionally replicating it over DIS;
* ``evaluate`` -- batch win-rate evaluation between two controllers;
* ``replay``   -- re-simulate a recorded episode and verify it;
* ``bridge``   -- stand-alone DIS bridge flying the blue team.

Usage errors (unknown controller names, malformed addresses,
non-positive episode counts) exit with status 2; a failed replay
verification exits with status 1.
"""

from __future__ import annotations

import argparse
import asyncio
import sys
from typing import Sequence

from ..agents.commander import CommanderParams, initial_params
from ..agents.episodes import (
    CommanderController,
    MixedController,
    ScriptedController,
    TeamController,
    evaluate_winrate,
)
from ..agents.opponents import MIXED_DEFAULT
from ..bridge import (
    BridgeConfig,
    CONTROLLED_BY_AGENT,
    CONTROLLED_BY_EXTERNAL,
    DisBridge,
    MODE_ACTION,
    MODE_STATE,
    UdpTransport,
    VrfFilter,
)
from ..combat.env import CombatEnv
from ..combat.rewards import PolicyKind
from ..combat.scenario import load_scenario
from ..errors import AircombatError
from .recorder import EpisodeRecorder, replay_record
from .server import DisPublisher, GatewayServer
from .session import SimulationSession

CONTROLLER_NAMES = ("commander", "mixed", "attack", "engage", "defend")


def _address(text: str) -> tuple[str, int]:
    host, sep, port = text.rpartition(":")
    if not sep or not host:
        raise argparse.ArgumentTypeError(
            f"expected HOST:PORT, got {text!r}")
    try:
        number = int(port)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad port in {text!r}") from None
    if not 0 <= number <= 65535:
        raise argparse.ArgumentTypeError(f"port out of range in {text!r}")
    return host, number


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError("value must be at least 1")
    return value


def make_controller(name: str, params_path: str | None = None) -> TeamController:
    """Instantiate a team controller by its CLI name."""
    if name == "commander":
        params = (CommanderParams.load(params_path)
                  if params_path else initial_params())
        return CommanderController(params)
    if name == "mixed":
        return MixedController(MIXED_DEFAULT)
    return ScriptedController(PolicyKind(name))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aircombat",
        description="Air-combat simulation: live service, evaluation, "
                    "replay verification, and DIS bridging.")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run a live scenario over WebSocket")
    serve.add_argument("--scenario", required=True, help="scenario JSON file")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8080)
    serve.add_argument("--seed", type=int, default=0)
    serve.add_argument("--blue", choices=CONTROLLER_NAMES, default="commander")
    serve.add_argument("--red", choices=CONTROLLER_NAMES, default="commander")
    serve.add_argument("--params", help="commander parameter JSON file")
    serve.add_argument("--record", help="write the episode to this JSONL file")
    serve.add_argument("--time-scale", type=float, default=1.0,
                       help="simulation seconds per wall second")
    serve.add_argument("--dis-bridge", action="store_true",
                       help="replicate the world over DIS UDP")
    serve.add_argument("--listen", type=_address, default=("0.0.0.0", 3000),
                       help="DIS listen address (HOST:PORT)")
    serve.add_argument("--dest", type=_address, default=("127.0.0.1", 3001),
                       help="DIS destination address (HOST:PORT)")
    serve.add_argument("--mode", choices=(MODE_STATE, MODE_ACTION),
                       default=MODE_STATE, help="DIS replication mode")
    serve.add_argument("--exercise-id", type=int, default=1)

    evaluate = sub.add_parser(
        "evaluate", help="batch win-rate evaluation, blue versus red")
    evaluate.add_argument("--blue", choices=CONTROLLER_NAMES, required=True)
    evaluate.add_argument("--red", choices=CONTROLLER_NAMES, required=True)
    evaluate.add_argument("--scenario", required=True)
    evaluate.add_argument("-n", "--episodes", type=_positive_int, default=100)
    evaluate.add_argument("--seed", type=int, default=0)
    evaluate.add_argument("--params", help="commander parameter JSON file")

    replay = sub.add_parser(
        "replay", help="re-simulate a recorded episode and verify it")
    replay.add_argument("record", help="episode JSONL file")

    bridge = sub.add_parser(
        "bridge", help="stand-alone DIS bridge flying the blue team")
    bridge.add_argument("--listen", type=_address, default=("0.0.0.0", 3000))
    bridge.add_argument("--dest", type=_address, default=("127.0.0.1", 3001))
    bridge.add_argument("--mode", choices=(MODE_STATE, MODE_ACTION),
                        default=MODE_STATE)
    bridge.add_argument("--exercise-id", type=int, default=1)
    bridge.add_argument("--rate", type=float, default=10.0,
                        help="send rate in Hz")
    bridge.add_argument("--scenario", required=True)
    bridge.add_argument("--seed", type=int, default=0)
    return parser


# ------------------------------------------------------------ subcommands


def _cmd_serve(args: argparse.Namespace) -> int:
    config = load_scenario(args.scenario)
    recorder = None
    if args.record:
        recorder = EpisodeRecorder(
            args.record, config, args.seed,
            participants={"blue": args.blue, "red": args.red},
            mode="interactive")
    session = SimulationSession(
        config, args.seed,
        blue=make_controller(args.blue, args.params),
        red=make_controller(args.red, args.params),
        recorder=recorder)
    publisher = None
    if args.dis_bridge:
        publisher = DisPublisher(
            UdpTransport(args.listen, args.dest),
            exercise_id=args.exercise_id, mode=args.mode)
    server = GatewayServer(
        session, host=args.host, port=args.port,
        time_scale=args.time_scale, publisher=publisher)

    async def announce_and_run() -> str:
        task = asyncio.create_task(server.run())
        await server.ready.wait()
        print(f"listening on ws://{server.host}:{server.bound_port}",
              flush=True)
        return await task

    try:
        winner = asyncio.run(announce_and_run())
    except KeyboardInterrupt:
        print("interrupted", flush=True)
        return 0
    print(f"episode complete: winner={winner}", flush=True)
    if args.record:
        print(f"episode recorded to {args.record}", flush=True)
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    config = load_scenario(args.scenario)
    report = evaluate_winrate(
        config,
        blue=make_controller(args.blue, args.params),
        red=make_controller(args.red, args.params),
        episodes=args.episodes,
        base_seed=args.seed)
    last_seed = args.seed + args.episodes - 1
    print(f"blue={args.blue} red={args.red} scenario={args.scenario}")
    print(f"episodes={report.episodes} seeds={args.seed}..{last_seed}")
    print(f"wins={report.wins} losses={report.losses} draws={report.draws}")
    print(f"win_rate={report.rate:.4f} "
          f"ci95=[{report.ci_low:.4f},{report.ci_high:.4f}]")
    return 0


def _cmd_replay(args: argparse.Namespace) -> int:
    result = replay_record(args.record)
    print(result.message)
    if result.first_divergence is not None:
        print(f"first divergence at step {result.first_divergence}")
    return 0 if result.ok else 1


def _cmd_bridge(args: argparse.Namespace) -> int:
    config = load_scenario(args.scenario)
    env = CombatEnv(config)
    state = env.reset(seed=args.seed)
    roster = {
        eid: (CONTROLLED_BY_AGENT if state.teams[i] == "blue"
              else CONTROLLED_BY_EXTERNAL)
        for i, eid in enumerate(state.ids)
    }
    initial = {
        eid: state.arrays.state_at(i)
        for i, eid in enumerate(state.ids) if state.teams[i] == "blue"
    }
    bridge = DisBridge(
        BridgeConfig(
            roster=roster,
            traffic_filter=VrfFilter(exercise_id=args.exercise_id),
            mode=args.mode,
            listen=args.listen,
            destination=args.dest,
            send_rate=args.rate),
        UdpTransport(args.listen, args.dest),
        initial)
    print(f"bridge up: mode={args.mode} listen={args.listen[0]}:{args.listen[1]} "
          f"dest={args.dest[0]}:{args.dest[1]} agents={len(initial)}",
          flush=True)
    try:
        bridge.run()
    except KeyboardInterrupt:
        bridge.stop()
        print("bridge stopped", flush=True)
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "serve": _cmd_serve,
        "evaluate": _cmd_evaluate,
        "replay": _cmd_replay,
        "bridge": _cmd_bridge,
    }
    try:
        return handlers[args.command](args)
    except AircombatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
