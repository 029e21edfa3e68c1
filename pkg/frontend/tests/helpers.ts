/** Shared test fixtures: a seeded PRNG and entity builders. */

import { EntityDoc, EntityId } from "../src/protocol.js";

/** Deterministic 32-bit PRNG (mulberry32); good enough for fuzz seeds. */
export function rng(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function makeEntity(overrides: Partial<EntityDoc> = {}): EntityDoc {
  return {
    id: [1, 1, 1] as EntityId,
    team: "blue",
    pos: [0, 0, -3000],
    vel: [210, 0, 0],
    att: [0, 0, 0],
    hp: 1,
    policy: "attack",
    alive: true,
    ...overrides,
  };
}
