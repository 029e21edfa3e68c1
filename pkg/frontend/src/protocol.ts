/**
 * Message types and codecs for the gateway's JSON WebSocket protocol.
 *
 * This module is the single place that knows the wire format.  Every
 * frame is one JSON object in a text message; the full contract lives
 * in `docs/protocol.md` at the repository root.  Parsing here is
 * strict: a frame that does not match the documented shape is rejected
 * rather than partially consumed.
 */

export type Team = "blue" | "red";
export type Winner = Team | "draw";

/** Entity identity triple: [site, application, entity]. */
export type EntityId = readonly [number, number, number];

export type PolicyName = "attack" | "engage" | "defend";
export type EventKind = "fire" | "hit" | "kill" | "crash" | "timeout";

export type Vec3 = readonly [number, number, number];

/** One aircraft as it appears in a tick's roster. */
export interface EntityDoc {
  id: EntityId;
  team: Team;
  /** North-east-down metres relative to the scenario origin. */
  pos: Vec3;
  /** NED velocity, m/s. */
  vel: Vec3;
  /** [heading, flight path angle, bank], radians; heading 0 = north. */
  att: Vec3;
  hp: number;
  policy: PolicyName;
  alive: boolean;
}

/** One combat event; shooter/target are null where not applicable. */
export interface EventDoc {
  t: number;
  kind: EventKind;
  shooter: EntityId | null;
  target: EntityId | null;
}

export interface JoinedMsg {
  type: "joined";
  entity: EntityId;
}

export interface TickMsg {
  type: "tick";
  t: number;
  entities: EntityDoc[];
  events: EventDoc[];
}

export interface PongMsg {
  type: "pong";
  t: number;
}

export interface EndMsg {
  type: "end";
  winner: Winner;
}

export interface ErrorMsg {
  type: "error";
  code: string;
}

export type ServerMessage = JoinedMsg | TickMsg | PongMsg | EndMsg | ErrorMsg;

/**
 * Error codes after which the server closes the connection (code 1008).
 * `already-joined` and `slot-taken` leave the connection open.
 */
export const FATAL_ERROR_CODES: ReadonlySet<string> = new Set([
  "bad-json",
  "bad-message",
  "unknown-type",
  "bad-team",
  "not-joined",
  "bad-control",
  "bad-ping",
]);

// ---------------------------------------------------------------------------
// Pilot control state

export type InputSource = "keyboard" | "gamepad";

/** The pilot's current stick-and-throttle intent, before clamping. */
export interface ControlState {
  /** [0, 1] after clamping. */
  throttle: number;
  /** [-1, 1]; positive pulls the nose up (load factor command). */
  pitch: number;
  /** [-1, 1]; positive banks right. */
  roll: number;
  fire: boolean;
  source: InputSource;
}

export const NEUTRAL_CONTROL: ControlState = {
  throttle: 0.5,
  pitch: 0,
  roll: 0,
  fire: false,
  source: "keyboard",
};

function clampNumber(value: number, low: number, high: number): number {
  // Non-finite input (a wild gamepad axis, arithmetic gone wrong)
  // maps to the neutral midpoint rather than poisoning the frame.
  if (!Number.isFinite(value)) return (low + high) / 2;
  return Math.min(high, Math.max(low, value));
}

/** Force every field of a control state into its documented range. */
export function clampControl(state: ControlState): ControlState {
  return {
    throttle: clampNumber(state.throttle, 0, 1),
    pitch: clampNumber(state.pitch, -1, 1),
    roll: clampNumber(state.roll, -1, 1),
    fire: state.fire === true,
    source: state.source === "gamepad" ? "gamepad" : "keyboard",
  };
}

// ---------------------------------------------------------------------------
// Client -> server encoders

export function encodeJoin(team: Team): string {
  return JSON.stringify({ type: "join", team });
}

/**
 * Serialize a control frame.  The state is clamped first, so the
 * output is always schema-valid no matter what the input devices
 * produced.
 */
export function encodeControl(state: ControlState): string {
  const c = clampControl(state);
  return JSON.stringify({
    type: "control",
    throttle: c.throttle,
    pitch: c.pitch,
    roll: c.roll,
    fire: c.fire,
  });
}

export function encodePing(t: number): string {
  return JSON.stringify({ type: "ping", t: Number.isFinite(t) ? t : 0 });
}

// ---------------------------------------------------------------------------
// Validation helpers

function isFiniteNumber(x: unknown): x is number {
  return typeof x === "number" && Number.isFinite(x);
}

function isVec3(x: unknown): x is Vec3 {
  return Array.isArray(x) && x.length === 3 && x.every(isFiniteNumber);
}

function isEntityId(x: unknown): x is EntityId {
  return (
    Array.isArray(x) &&
    x.length === 3 &&
    x.every((c) => typeof c === "number" && Number.isInteger(c))
  );
}

export function sameId(a: EntityId | null, b: EntityId | null): boolean {
  if (a === null || b === null) return a === b;
  return a[0] === b[0] && a[1] === b[1] && a[2] === b[2];
}

/** Stable map key for an entity identity. */
export function idKey(id: EntityId): string {
  return `${id[0]}/${id[1]}/${id[2]}`;
}

const POLICIES: ReadonlySet<string> = new Set(["attack", "engage", "defend"]);
const EVENT_KINDS: ReadonlySet<string> = new Set([
  "fire",
  "hit",
  "kill",
  "crash",
  "timeout",
]);

function parseEntityDoc(x: unknown): EntityDoc | null {
  if (typeof x !== "object" || x === null || Array.isArray(x)) return null;
  const doc = x as Record<string, unknown>;
  if (!isEntityId(doc.id)) return null;
  if (doc.team !== "blue" && doc.team !== "red") return null;
  if (!isVec3(doc.pos) || !isVec3(doc.vel) || !isVec3(doc.att)) return null;
  if (!isFiniteNumber(doc.hp)) return null;
  if (typeof doc.policy !== "string" || !POLICIES.has(doc.policy)) return null;
  if (typeof doc.alive !== "boolean") return null;
  return {
    id: doc.id,
    team: doc.team,
    pos: doc.pos,
    vel: doc.vel,
    att: doc.att,
    hp: doc.hp,
    policy: doc.policy as PolicyName,
    alive: doc.alive,
  };
}

function parseEventDoc(x: unknown): EventDoc | null {
  if (typeof x !== "object" || x === null || Array.isArray(x)) return null;
  const doc = x as Record<string, unknown>;
  if (!isFiniteNumber(doc.t)) return null;
  if (typeof doc.kind !== "string" || !EVENT_KINDS.has(doc.kind)) return null;
  const shooter = doc.shooter ?? null;
  const target = doc.target ?? null;
  if (shooter !== null && !isEntityId(shooter)) return null;
  if (target !== null && !isEntityId(target)) return null;
  return { t: doc.t, kind: doc.kind as EventKind, shooter, target };
}

/**
 * Parse and validate one server frame.  Returns null for anything
 * that is not a documented server message; the caller decides whether
 * to ignore or surface it.
 */
export function parseServerMessage(text: string): ServerMessage | null {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch {
    return null;
  }
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    return null;
  }
  const msg = raw as Record<string, unknown>;
  switch (msg.type) {
    case "joined": {
      if (!isEntityId(msg.entity)) return null;
      return { type: "joined", entity: msg.entity };
    }
    case "tick": {
      if (!isFiniteNumber(msg.t)) return null;
      if (!Array.isArray(msg.entities) || !Array.isArray(msg.events)) {
        return null;
      }
      const entities: EntityDoc[] = [];
      for (const e of msg.entities) {
        const doc = parseEntityDoc(e);
        if (doc === null) return null;
        entities.push(doc);
      }
      const events: EventDoc[] = [];
      for (const e of msg.events) {
        const doc = parseEventDoc(e);
        if (doc === null) return null;
        events.push(doc);
      }
      return { type: "tick", t: msg.t, entities, events };
    }
    case "pong": {
      if (!isFiniteNumber(msg.t)) return null;
      return { type: "pong", t: msg.t };
    }
    case "end": {
      if (msg.winner !== "blue" && msg.winner !== "red" && msg.winner !== "draw") {
        return null;
      }
      return { type: "end", winner: msg.winner };
    }
    case "error": {
      if (typeof msg.code !== "string") return null;
      return { type: "error", code: msg.code };
    }
    default:
      return null;
  }
}

/**
 * Check an outgoing control frame against the wire contract: the exact
 * key set, finite numbers, documented ranges.  Used by tests as the
 * oracle for "schema-valid under any input", and available at runtime
 * for debugging.
 */
export function isValidControlFrame(text: string): boolean {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch {
    return false;
  }
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    return false;
  }
  const msg = raw as Record<string, unknown>;
  const keys = Object.keys(msg).sort();
  if (keys.join(",") !== "fire,pitch,roll,throttle,type") return false;
  if (msg.type !== "control") return false;
  if (!isFiniteNumber(msg.throttle) || msg.throttle < 0 || msg.throttle > 1) {
    return false;
  }
  if (!isFiniteNumber(msg.pitch) || msg.pitch < -1 || msg.pitch > 1) {
    return false;
  }
  if (!isFiniteNumber(msg.roll) || msg.roll < -1 || msg.roll > 1) {
    return false;
  }
  return typeof msg.fire === "boolean";
}
