/**
 * Client-side world model: UI phase machine, snapshot buffer with
 * interpolation, kill feed, and the render clock that paces drawing
 * between network snapshots.
 */

import {
  EntityDoc,
  EntityId,
  EventDoc,
  TickMsg,
  Winner,
  idKey,
} from "./protocol.js";

// ---------------------------------------------------------------------------
// UI phase machine

export type UiState = "disconnected" | "joined" | "flying" | "ended";

/**
 * Inputs that move the UI between phases:
 *  - "joined":    the server accepted our join
 *  - "tick":      a world snapshot arrived
 *  - "end":       the episode finished
 *  - "close":     the socket closed or a fatal protocol error arrived
 *  - "reconnect": the user asked for a fresh connection
 */
export type UiEvent = "joined" | "tick" | "end" | "close" | "reconnect";

export const UI_STATES: readonly UiState[] = [
  "disconnected",
  "joined",
  "flying",
  "ended",
];

export const UI_EVENTS: readonly UiEvent[] = [
  "joined",
  "tick",
  "end",
  "close",
  "reconnect",
];

const TRANSITIONS: Record<UiState, Record<UiEvent, UiState>> = {
  // Broadcast ticks may arrive before our join is answered; they keep
  // the map warm but do not advance the phase.
  disconnected: {
    joined: "joined",
    tick: "disconnected",
    end: "ended",
    close: "disconnected",
    reconnect: "disconnected",
  },
  joined: {
    joined: "joined",
    tick: "flying",
    end: "ended",
    close: "disconnected",
    reconnect: "joined",
  },
  flying: {
    joined: "flying",
    tick: "flying",
    end: "ended",
    close: "disconnected",
    reconnect: "flying",
  },
  // After "end" the server closes with code 1000; the close must not
  // knock the UI off the results screen.  Only an explicit reconnect
  // leaves it.
  ended: {
    joined: "ended",
    tick: "ended",
    end: "ended",
    close: "ended",
    reconnect: "disconnected",
  },
};

/** Total transition function of the UI phase machine. */
export function transition(state: UiState, event: UiEvent): UiState {
  return TRANSITIONS[state][event];
}

// ---------------------------------------------------------------------------
// Snapshots and interpolation

/** One world snapshot as the renderer consumes it. */
export interface Snapshot {
  t: number;
  entities: EntityDoc[];
}

/** Entity with its position resolved for a particular render time. */
export interface RenderedEntity extends EntityDoc {
  renderPos: readonly [number, number, number];
}

/** Snapshots kept for interpolation. */
export const BUFFER_DEPTH = 3;

/** Hard cap on dead-reckoning past the newest snapshot, seconds. */
export const MAX_EXTRAPOLATION_S = 0.3;

function lerp(a: number, b: number, alpha: number): number {
  return a + (b - a) * alpha;
}

/**
 * Resolve entity positions at `tRender` from a buffer of snapshots
 * ordered by strictly increasing time.
 *
 * Between the two most recent snapshots, positions are linearly
 * interpolated — the result never leaves the segment joining the two
 * endpoint positions.  Past the newest snapshot, positions are dead
 * reckoned from its velocity for at most MAX_EXTRAPOLATION_S seconds
 * and frozen beyond that.  Dead aircraft are never moved.
 */
export function resolveEntities(
  buffer: readonly Snapshot[],
  tRender: number,
): RenderedEntity[] {
  if (buffer.length === 0) return [];
  const newest = buffer[buffer.length - 1]!;
  if (buffer.length === 1 || tRender >= newest.t) {
    const dt = Math.min(Math.max(tRender - newest.t, 0), MAX_EXTRAPOLATION_S);
    return newest.entities.map((e) => ({
      ...e,
      renderPos: e.alive
        ? ([
            e.pos[0] + e.vel[0] * dt,
            e.pos[1] + e.vel[1] * dt,
            e.pos[2] + e.vel[2] * dt,
          ] as const)
        : e.pos,
    }));
  }
  const prev = buffer[buffer.length - 2]!;
  const span = newest.t - prev.t;
  const alpha = Math.min(
    1,
    Math.max(0, span > 0 ? (tRender - prev.t) / span : 1),
  );
  const prevById = new Map(prev.entities.map((e) => [idKey(e.id), e]));
  return newest.entities.map((e) => {
    const before = prevById.get(idKey(e.id));
    if (before === undefined || !e.alive) {
      return { ...e, renderPos: e.pos };
    }
    return {
      ...e,
      renderPos: [
        lerp(before.pos[0], e.pos[0], alpha),
        lerp(before.pos[1], e.pos[1], alpha),
        lerp(before.pos[2], e.pos[2], alpha),
      ] as const,
    };
  });
}

// ---------------------------------------------------------------------------
// Render clock

/**
 * Maps wall-clock frames onto simulation time so drawing can lag one
 * snapshot interval behind the feed and interpolate smoothly.  The
 * simulation-per-wall rate is estimated from snapshot arrival spacing,
 * so time-scaled servers render correctly without configuration.
 */
export class RenderClock {
  private simT: number | null = null;
  private rate = 1; // sim seconds per wall second
  private lastSnapT: number | null = null;
  private lastSnapWall: number | null = null;

  /** Feed one snapshot arrival (wallNow in milliseconds). */
  observe(snapT: number, wallNow: number): void {
    if (this.lastSnapT !== null && this.lastSnapWall !== null) {
      const dSim = snapT - this.lastSnapT;
      const dWall = (wallNow - this.lastSnapWall) / 1000;
      if (dSim > 0 && dWall > 1e-4) {
        const sample = dSim / dWall;
        // Exponential smoothing keeps one delayed frame from jerking
        // the clock around.
        this.rate = this.rate * 0.7 + sample * 0.3;
      }
    }
    this.lastSnapT = snapT;
    this.lastSnapWall = wallNow;
    const target = snapT - this.interval();
    if (this.simT === null || Math.abs(this.simT - target) > 1) {
      this.simT = target;
    }
  }

  /** Estimated spacing between snapshots, sim seconds. */
  private interval(): number {
    return 0.1 * Math.max(this.rate, 0.01);
  }

  /**
   * Advance by a wall-clock frame delta (milliseconds) and return the
   * simulation time to render.  The result is clamped to stay between
   * one interval behind the newest snapshot and the extrapolation cap
   * past it.
   */
  advance(dtWallMs: number): number {
    if (this.simT === null || this.lastSnapT === null) return 0;
    this.simT += (dtWallMs / 1000) * this.rate;
    const low = this.lastSnapT - 3 * this.interval();
    const high = this.lastSnapT + MAX_EXTRAPOLATION_S;
    this.simT = Math.min(high, Math.max(low, this.simT));
    return this.simT;
  }
}

// ---------------------------------------------------------------------------
// Kill feed

export interface FeedLine {
  t: number;
  text: string;
}

function idLabel(id: EntityId | null, roster: Map<string, EntityDoc>): string {
  if (id === null) return "?";
  const doc = roster.get(idKey(id));
  const tag = `${id[2]}`;
  return doc === undefined ? tag : `${doc.team}-${tag}`;
}

export function formatEvent(
  event: EventDoc,
  roster: Map<string, EntityDoc>,
): string {
  const who = idLabel(event.shooter, roster);
  const whom = idLabel(event.target, roster);
  switch (event.kind) {
    case "fire":
      return `${who} fires`;
    case "hit":
      return `${who} hits ${whom}`;
    case "kill":
      return `${who} destroys ${whom}`;
    case "crash":
      return `${who} crashes`;
    case "timeout":
      return "time limit reached";
  }
}

// ---------------------------------------------------------------------------
// ClientWorld

/**
 * Everything the renderer needs, updated by network callbacks and read
 * once per animation frame.
 */
export class ClientWorld {
  state: UiState = "disconnected";
  ownId: EntityId | null = null;
  winner: Winner | null = null;
  /** Last non-fatal problem worth showing (e.g. "slot-taken"). */
  notice: string | null = null;
  rttMs: number | null = null;

  readonly buffer: Snapshot[] = [];
  readonly killFeed: FeedLine[] = [];
  /** First tick time at which each dead aircraft was seen down. */
  readonly deathTimes = new Map<string, number>();

  private roster = new Map<string, EntityDoc>();

  apply(event: UiEvent): void {
    this.state = transition(this.state, event);
  }

  handleJoined(entity: EntityId): void {
    this.ownId = entity;
    this.apply("joined");
  }

  handleTick(msg: TickMsg): void {
    const latest = this.buffer[this.buffer.length - 1];
    if (latest !== undefined && msg.t <= latest.t) {
      return; // stale or duplicate snapshot; the feed is strictly increasing
    }
    this.buffer.push({ t: msg.t, entities: msg.entities });
    while (this.buffer.length > BUFFER_DEPTH) this.buffer.shift();

    this.roster = new Map(msg.entities.map((e) => [idKey(e.id), e]));
    for (const e of msg.entities) {
      const key = idKey(e.id);
      if (!e.alive && !this.deathTimes.has(key)) {
        this.deathTimes.set(key, msg.t);
      }
    }
    for (const event of msg.events) {
      this.killFeed.push({ t: event.t, text: formatEvent(event, this.roster) });
    }
    while (this.killFeed.length > 50) this.killFeed.shift();
    this.apply("tick");
  }

  handleEnd(winner: Winner): void {
    this.winner = winner;
    this.apply("end");
  }

  handleClose(): void {
    this.apply("close");
  }

  /** Reset transient episode state ahead of a fresh connection. */
  handleReconnect(): void {
    this.apply("reconnect");
    if (this.state === "disconnected") {
      this.buffer.length = 0;
      this.killFeed.length = 0;
      this.deathTimes.clear();
      this.roster.clear();
      this.ownId = null;
      this.winner = null;
      this.notice = null;
      this.rttMs = null;
    }
  }

  latestSnapshot(): Snapshot | null {
    return this.buffer[this.buffer.length - 1] ?? null;
  }

  own(): EntityDoc | null {
    if (this.ownId === null) return null;
    return this.roster.get(idKey(this.ownId)) ?? null;
  }
}
