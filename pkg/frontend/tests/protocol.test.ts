import { describe, expect, it } from "vitest";

import {
  ControlState,
  clampControl,
  encodeControl,
  encodeJoin,
  encodePing,
  idKey,
  isValidControlFrame,
  parseServerMessage,
  sameId,
} from "../src/protocol.js";
import { rng } from "./helpers.js";

describe("control clamping", () => {
  it("forces each field into its documented range", () => {
    const c = clampControl({
      throttle: 5,
      pitch: -3,
      roll: 2,
      fire: true,
      source: "keyboard",
    });
    expect(c).toMatchObject({ throttle: 1, pitch: -1, roll: 1, fire: true });
  });

  it("maps non-finite values to the neutral midpoint", () => {
    // A haywire device must never command a hard deflection: NaN and
    // the infinities all read as "no input".
    const c = clampControl({
      throttle: NaN,
      pitch: Infinity,
      roll: -Infinity,
      fire: false,
      source: "gamepad",
    });
    expect(c.throttle).toBe(0.5);
    expect(c.pitch).toBe(0);
    expect(c.roll).toBe(0);
  });

  it("keeps in-range values untouched", () => {
    const c = clampControl({
      throttle: 0.8,
      pitch: 0.1,
      roll: -0.4,
      fire: false,
      source: "keyboard",
    });
    expect(c.throttle).toBe(0.8);
    expect(c.pitch).toBe(0.1);
    expect(c.roll).toBe(-0.4);
  });
});

describe("control frames", () => {
  const weird = (r: () => number): number => {
    const pick = r();
    if (pick < 0.1) return NaN;
    if (pick < 0.2) return Infinity;
    if (pick < 0.3) return -Infinity;
    if (pick < 0.4) return (r() - 0.5) * 1e12;
    if (pick < 0.5) return r() < 0.5 ? -1 : 1; // exact bounds
    return (r() - 0.5) * 6;
  };

  it("serializes schema-valid frames for any numeric garbage", () => {
    const r = rng(20260817);
    for (let i = 0; i < 2000; i++) {
      const state = {
        throttle: weird(r),
        pitch: weird(r),
        roll: weird(r),
        fire: r() < 0.5,
        source: r() < 0.5 ? "keyboard" : "gamepad",
      } as ControlState;
      const frame = encodeControl(state);
      expect(isValidControlFrame(frame)).toBe(true);
    }
  });

  it("round-trips an ordinary setpoint exactly", () => {
    const frame = encodeControl({
      throttle: 0.8,
      pitch: 0.1,
      roll: -0.4,
      fire: false,
      source: "keyboard",
    });
    expect(JSON.parse(frame)).toEqual({
      type: "control",
      throttle: 0.8,
      pitch: 0.1,
      roll: -0.4,
      fire: false,
    });
  });

  it("rejects malformed frames in the validator", () => {
    expect(isValidControlFrame("not json")).toBe(false);
    expect(isValidControlFrame("[1,2]")).toBe(false);
    expect(isValidControlFrame('{"type":"control"}')).toBe(false);
    expect(
      isValidControlFrame(
        '{"type":"control","throttle":1.5,"pitch":0,"roll":0,"fire":false}',
      ),
    ).toBe(false);
    expect(
      isValidControlFrame(
        '{"type":"control","throttle":0.5,"pitch":0,"roll":0,"fire":"yes"}',
      ),
    ).toBe(false);
    expect(
      isValidControlFrame(
        '{"type":"control","throttle":0.5,"pitch":0,"roll":0,"fire":false,"extra":1}',
      ),
    ).toBe(false);
  });
});

describe("client-to-server encoders", () => {
  it("encodes join and ping as the documented objects", () => {
    expect(JSON.parse(encodeJoin("blue"))).toEqual({
      type: "join",
      team: "blue",
    });
    expect(JSON.parse(encodePing(1755400000.123))).toEqual({
      type: "ping",
      t: 1755400000.123,
    });
  });

  it("never sends a non-finite ping stamp", () => {
    expect(JSON.parse(encodePing(NaN)).t).toBe(0);
  });
});

describe("server message parsing", () => {
  it("parses the documented tick shape", () => {
    const text = JSON.stringify({
      type: "tick",
      t: 12.5,
      entities: [
        {
          id: [1, 1, 1],
          team: "blue",
          pos: [1032.1, -210.0, -3011.5],
          vel: [214.9, 8.2, -0.4],
          att: [0.038, 0.002, -0.11],
          hp: 1.0,
          policy: "attack",
          alive: true,
        },
      ],
      events: [
        { t: 12.45, kind: "hit", shooter: [1, 1, 1], target: [2, 1, 1] },
      ],
    });
    const msg = parseServerMessage(text);
    expect(msg).not.toBeNull();
    if (msg === null || msg.type !== "tick") throw new Error("expected tick");
    expect(msg.t).toBe(12.5);
    expect(msg.entities).toHaveLength(1);
    expect(msg.entities[0]!.team).toBe("blue");
    expect(msg.entities[0]!.policy).toBe("attack");
    expect(msg.events[0]!.kind).toBe("hit");
    expect(msg.events[0]!.target).toEqual([2, 1, 1]);
  });

  it("parses joined, pong, end, and error", () => {
    expect(parseServerMessage('{"type":"joined","entity":[1,1,2]}')).toEqual({
      type: "joined",
      entity: [1, 1, 2],
    });
    expect(parseServerMessage('{"type":"pong","t":7.25}')).toEqual({
      type: "pong",
      t: 7.25,
    });
    expect(parseServerMessage('{"type":"end","winner":"draw"}')).toEqual({
      type: "end",
      winner: "draw",
    });
    expect(parseServerMessage('{"type":"error","code":"slot-taken"}')).toEqual({
      type: "error",
      code: "slot-taken",
    });
  });

  it("returns null for anything off-contract", () => {
    expect(parseServerMessage("oops")).toBeNull();
    expect(parseServerMessage("[1,2,3]")).toBeNull();
    expect(parseServerMessage('"tick"')).toBeNull();
    expect(parseServerMessage('{"type":"warp"}')).toBeNull();
    expect(parseServerMessage('{"type":"joined","entity":[1,1]}')).toBeNull();
    expect(parseServerMessage('{"type":"end","winner":"tie"}')).toBeNull();
    expect(parseServerMessage('{"type":"pong","t":"later"}')).toBeNull();
    expect(
      parseServerMessage('{"type":"tick","t":1,"entities":[{}],"events":[]}'),
    ).toBeNull();
    expect(
      parseServerMessage(
        '{"type":"tick","t":1,"entities":[],"events":[{"t":1,"kind":"vanish"}]}',
      ),
    ).toBeNull();
  });

  it("accepts events with null shooter and target", () => {
    const msg = parseServerMessage(
      '{"type":"tick","t":9,"entities":[],"events":[{"t":9,"kind":"timeout","shooter":null,"target":null}]}',
    );
    if (msg === null || msg.type !== "tick") throw new Error("expected tick");
    expect(msg.events[0]!.shooter).toBeNull();
  });
});

describe("identity helpers", () => {
  it("compares and keys identity triples", () => {
    expect(sameId([1, 1, 2], [1, 1, 2])).toBe(true);
    expect(sameId([1, 1, 2], [2, 1, 2])).toBe(false);
    expect(sameId(null, null)).toBe(true);
    expect(sameId([1, 1, 2], null)).toBe(false);
    expect(idKey([1, 1, 2])).toBe("1/1/2");
  });
});
