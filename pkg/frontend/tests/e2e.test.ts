/**
 * Loopback end-to-end: a real gateway subprocess, the real client
 * stack.  Joins an episode, pushes the throttle to full, and watches
 * the airframe accelerate over the following snapshots; also verifies
 * ping round-trips and that the UI phase machine rides the episode to
 * its end.
 */

import { ChildProcessByStdio, spawn } from "node:child_process";
import { Readable } from "node:stream";
import * as path from "node:path";
import { fileURLToPath } from "node:url";
import WebSocket from "ws";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { GatewayClient, SocketLike } from "../src/net.js";
import { NEUTRAL_CONTROL, TickMsg, sameId } from "../src/protocol.js";
import { ClientWorld, UiState } from "../src/state.js";

const REPO_ROOT = path.resolve(
  path.dirname(fileURLToPath(import.meta.url)),
  "..",
  "..",
);

const nodeSocket = (url: string): SocketLike =>
  new WebSocket(url) as unknown as SocketLike;

function waitFor(
  predicate: () => boolean,
  timeoutMs: number,
  label: string,
): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  return new Promise((resolve, reject) => {
    const poll = (): void => {
      if (predicate()) return resolve();
      if (Date.now() > deadline) {
        return reject(new Error(`timed out waiting for ${label}`));
      }
      setTimeout(poll, 5);
    };
    poll();
  });
}

let server: ChildProcessByStdio<null, Readable, Readable>;
let serverUrl = "";
let serverExited = false;

beforeAll(async () => {
  server = spawn(
    "python3",
    [
      "-m",
      "aircombat",
      "serve",
      "--scenario",
      "scenarios/duel_2v2.json",
      "--port",
      "0",
      "--time-scale",
      "10",
    ],
    { cwd: REPO_ROOT, stdio: ["ignore", "pipe", "pipe"] },
  );
  server.on("exit", () => {
    serverExited = true;
  });
  let stderr = "";
  server.stderr.on("data", (chunk: Buffer) => {
    stderr += chunk.toString();
  });
  serverUrl = await new Promise<string>((resolve, reject) => {
    let buffer = "";
    const onData = (chunk: Buffer): void => {
      buffer += chunk.toString();
      const match = buffer.match(/listening on (ws:\/\/[\d.]+:\d+)/);
      if (match !== null) {
        server.stdout.off("data", onData);
        resolve(match[1]!);
      }
    };
    server.stdout.on("data", onData);
    server.on("exit", (code) =>
      reject(new Error(`gateway exited early (${code}): ${stderr}`)),
    );
  });
});

afterAll(async () => {
  if (!serverExited) {
    server.kill("SIGTERM");
    await new Promise<void>((resolve) => {
      const fallback = setTimeout(() => {
        server.kill("SIGKILL");
        resolve();
      }, 5000);
      server.on("exit", () => {
        clearTimeout(fallback);
        resolve();
      });
    });
  }
});

describe("loopback episode", () => {
  it("joins, accelerates on full throttle, and rides the episode out", async () => {
    const world = new ClientWorld();
    const phases: UiState[] = [world.state];
    const note = (): void => {
      if (phases[phases.length - 1] !== world.state) phases.push(world.state);
    };
    const ticks: TickMsg[] = [];
    let fatalError: string | null = null;

    const client = new GatewayClient(
      serverUrl,
      "blue",
      {
        onJoined: (entity) => {
          world.handleJoined(entity);
          note();
        },
        onTick: (msg) => {
          world.handleTick(msg);
          ticks.push(msg);
          note();
        },
        onPong: (rttMs) => {
          world.rttMs = rttMs;
        },
        onEnd: (winner) => {
          world.handleEnd(winner);
          note();
        },
        onServerError: (code, fatal) => {
          if (fatal) fatalError = code;
        },
        onClose: () => {
          world.handleClose();
          note();
        },
      },
      nodeSocket,
    );
    client.connect();

    const ownSpeed = (msg: TickMsg): number => {
      const own = msg.entities.find((e) => sameId(e.id, world.ownId));
      expect(own).toBeDefined();
      expect(own!.alive).toBe(true);
      return Math.hypot(own!.vel[0], own!.vel[1], own!.vel[2]);
    };

    // Join, then let a few snapshots pass at the claim-default
    // setpoint to measure the baseline speed trend.
    await waitFor(() => world.ownId !== null, 10_000, "joined reply");
    const joinedAt = ticks.length;
    await waitFor(
      () => ticks.length >= joinedAt + 4,
      10_000,
      "baseline snapshots",
    );
    const before = ticks
      .slice(joinedAt, joinedAt + 4)
      .map((msg) => ownSpeed(msg));
    const beforeSlope =
      (before[before.length - 1]! - before[0]!) / (before.length - 1);

    // Firewall the throttle and watch the next three snapshots.
    client.sendControl({ ...NEUTRAL_CONTROL, throttle: 1 });
    const mark = ticks.length;
    await waitFor(
      () => ticks.length >= mark + 3,
      10_000,
      "post-throttle snapshots",
    );
    const after = ticks.slice(mark, mark + 3).map((msg) => ownSpeed(msg));
    const afterSlope = (after[2]! - after[0]!) / 2;

    // Acceleration is visible within three ticks of the command...
    expect(after[2]!).toBeGreaterThan(after[0]!);
    // ...and the trend is decisively steeper than the baseline drift.
    expect(afterSlope).toBeGreaterThan(0.6);
    expect(afterSlope).toBeGreaterThan(beforeSlope * 1.3);

    // Echo probe round-trips on the same connection.
    client.ping();
    await waitFor(() => world.rttMs !== null, 5_000, "pong");
    expect(world.rttMs!).toBeGreaterThanOrEqual(0);
    expect(world.rttMs!).toBeLessThan(5_000);

    // Snapshot times are strictly increasing as delivered.
    for (let i = 1; i < ticks.length; i++) {
      expect(ticks[i]!.t).toBeGreaterThan(ticks[i - 1]!.t);
    }

    // Ride the episode to its end: the server announces a winner and
    // the post-end close leaves the UI on the results screen.
    await waitFor(() => world.state === "ended", 45_000, "episode end");
    expect(["blue", "red", "draw"]).toContain(world.winner);
    expect(fatalError).toBeNull();
    expect(phases[0]).toBe("disconnected");
    expect(phases).toContain("joined");
    expect(phases).toContain("flying");
    expect(phases[phases.length - 1]).toBe("ended");
    // joined must precede flying, flying precede ended.
    expect(phases.indexOf("joined")).toBeLessThan(phases.indexOf("flying"));
    expect(phases.indexOf("flying")).toBeLessThan(phases.indexOf("ended"));

    client.disconnect();
  });
});
