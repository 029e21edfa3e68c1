import { describe, expect, it } from "vitest";

import {
  UI_EVENTS,
  UI_STATES,
  UiState,
  transition,
} from "../src/state.js";
import { rng } from "./helpers.js";

/** States reachable from `start` under any event sequence. */
function reachable(start: UiState): Set<UiState> {
  const seen = new Set<UiState>([start]);
  const queue: UiState[] = [start];
  while (queue.length > 0) {
    const state = queue.pop()!;
    for (const event of UI_EVENTS) {
      const next = transition(state, event);
      if (!seen.has(next)) {
        seen.add(next);
        queue.push(next);
      }
    }
  }
  return seen;
}

describe("UI phase machine", () => {
  it("is total: every state and event maps to a valid state", () => {
    for (const state of UI_STATES) {
      for (const event of UI_EVENTS) {
        expect(UI_STATES).toContain(transition(state, event));
      }
    }
  });

  it("reaches every state from disconnected", () => {
    const seen = reachable("disconnected");
    for (const state of UI_STATES) expect(seen.has(state)).toBe(true);
  });

  it("has no dead ends: every state can get back to disconnected", () => {
    for (const state of UI_STATES) {
      expect(reachable(state).has("disconnected")).toBe(true);
    }
  });

  it("walks the happy path in order", () => {
    let s: UiState = "disconnected";
    s = transition(s, "joined");
    expect(s).toBe("joined");
    s = transition(s, "tick");
    expect(s).toBe("flying");
    s = transition(s, "end");
    expect(s).toBe("ended");
    s = transition(s, "reconnect");
    expect(s).toBe("disconnected");
  });

  it("ends the episode from any live state", () => {
    for (const state of UI_STATES) {
      expect(transition(state, "end")).toBe("ended");
    }
  });

  it("keeps the results screen through the post-end close", () => {
    expect(transition("ended", "close")).toBe("ended");
    expect(transition("ended", "tick")).toBe("ended");
  });

  it("does not advance on broadcast ticks before the join is answered", () => {
    expect(transition("disconnected", "tick")).toBe("disconnected");
  });

  it("drops to disconnected when the socket closes mid-flight", () => {
    expect(transition("flying", "close")).toBe("disconnected");
    expect(transition("joined", "close")).toBe("disconnected");
  });

  it("stays inside the state set on a long random walk", () => {
    const r = rng(7);
    let s: UiState = "disconnected";
    for (let i = 0; i < 10_000; i++) {
      const event = UI_EVENTS[Math.floor(r() * UI_EVENTS.length)]!;
      s = transition(s, event);
      expect(UI_STATES).toContain(s);
    }
  });
});
