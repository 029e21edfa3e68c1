import { describe, expect, it } from "vitest";

import { EntityDoc } from "../src/protocol.js";
import {
  MAX_EXTRAPOLATION_S,
  Snapshot,
  resolveEntities,
} from "../src/state.js";
import { makeEntity, rng } from "./helpers.js";

function snapshotPair(r: () => number): [Snapshot, Snapshot] {
  const span = 0.05 + r() * 0.3;
  const t0 = r() * 100;
  const entities = (t: number): EntityDoc[] =>
    [0, 1, 2].map((i) =>
      makeEntity({
        id: [1, 1, i + 1],
        team: i % 2 === 0 ? "blue" : "red",
        pos: [
          (r() - 0.5) * 8000 + t,
          (r() - 0.5) * 8000,
          -2000 - r() * 2000,
        ],
        vel: [(r() - 0.5) * 600, (r() - 0.5) * 600, (r() - 0.5) * 60],
      }),
    );
  return [
    { t: t0, entities: entities(t0) },
    { t: t0 + span, entities: entities(t0 + span) },
  ];
}

describe("snapshot interpolation", () => {
  it("renders nothing with an empty buffer", () => {
    expect(resolveEntities([], 5)).toEqual([]);
  });

  it("renders a single snapshot as-is at its own time", () => {
    const snap: Snapshot = { t: 3, entities: [makeEntity()] };
    const out = resolveEntities([snap], 3);
    expect(out).toHaveLength(1);
    expect(out[0]!.renderPos).toEqual(snap.entities[0]!.pos);
  });

  it("never leaves the segment between bracketing snapshots", () => {
    const r = rng(42);
    for (let trial = 0; trial < 300; trial++) {
      const [a, b] = snapshotPair(r);
      // Sweep render times well past both ends; clamping must hold.
      const tRender = a.t + (r() * 2 - 0.5) * (b.t - a.t);
      const out = resolveEntities([a, b], Math.min(tRender, b.t));
      for (const e of out) {
        const before = a.entities.find((x) => x.id[2] === e.id[2])!;
        const after = b.entities.find((x) => x.id[2] === e.id[2])!;
        for (let axis = 0; axis < 3; axis++) {
          const low = Math.min(before.pos[axis]!, after.pos[axis]!) - 1e-9;
          const high = Math.max(before.pos[axis]!, after.pos[axis]!) + 1e-9;
          expect(e.renderPos[axis]!).toBeGreaterThanOrEqual(low);
          expect(e.renderPos[axis]!).toBeLessThanOrEqual(high);
        }
      }
    }
  });

  it("hits the exact midpoint halfway between snapshots", () => {
    const a: Snapshot = {
      t: 10,
      entities: [makeEntity({ pos: [0, 0, -1000] })],
    };
    const b: Snapshot = {
      t: 10.1,
      entities: [makeEntity({ pos: [100, -50, -1100] })],
    };
    const out = resolveEntities([a, b], 10.05);
    expect(out[0]!.renderPos[0]).toBeCloseTo(50, 9);
    expect(out[0]!.renderPos[1]).toBeCloseTo(-25, 9);
    expect(out[0]!.renderPos[2]).toBeCloseTo(-1050, 9);
  });

  it("dead reckons past the newest snapshot, capped at 300 ms", () => {
    const snap: Snapshot = {
      t: 20,
      entities: [makeEntity({ pos: [0, 0, -3000], vel: [200, -100, 10] })],
    };
    const shortDt = resolveEntities([snap], 20.1)[0]!;
    expect(shortDt.renderPos[0]).toBeCloseTo(20, 9);
    expect(shortDt.renderPos[1]).toBeCloseTo(-10, 9);

    // Ten seconds after the last snapshot, motion is frozen at the cap.
    const farOut = resolveEntities([snap], 30)[0]!;
    expect(farOut.renderPos[0]).toBeCloseTo(200 * MAX_EXTRAPOLATION_S, 9);
    expect(farOut.renderPos[1]).toBeCloseTo(-100 * MAX_EXTRAPOLATION_S, 9);
    expect(farOut.renderPos[2]).toBeCloseTo(-3000 + 10 * MAX_EXTRAPOLATION_S, 9);
  });

  it("never moves a dead aircraft", () => {
    const a: Snapshot = {
      t: 5,
      entities: [makeEntity({ alive: false, pos: [10, 20, -500] })],
    };
    const b: Snapshot = {
      t: 5.1,
      entities: [makeEntity({ alive: false, pos: [10, 20, -500] })],
    };
    expect(resolveEntities([a, b], 5.05)[0]!.renderPos).toEqual([10, 20, -500]);
    expect(resolveEntities([b], 8)[0]!.renderPos).toEqual([10, 20, -500]);
  });

  it("uses the newest position for an entity absent from the older snapshot", () => {
    const a: Snapshot = { t: 1, entities: [] };
    const b: Snapshot = { t: 1.1, entities: [makeEntity({ pos: [7, 8, -9] })] };
    expect(resolveEntities([a, b], 1.05)[0]!.renderPos).toEqual([7, 8, -9]);
  });
});
