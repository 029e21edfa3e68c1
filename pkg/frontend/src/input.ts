/**
 * Pilot input tracking.  Keyboard and gamepad events update internal
 * intent; `control()` reads out a clamped ControlState.  The tracker
 * never touches the DOM, so the full mapping is unit-testable; main.ts
 * wires real listeners to it.
 *
 * Keyboard layout:
 *   W / S      pitch up / down (spring-loaded — decays to level)
 *   A / D      roll left / right (spring-loaded)
 *   Q / E      throttle down / up (ratchet — holds its value)
 *   Space      fire (while held)
 *
 * Gamepad layout (standard mapping):
 *   axis 0     roll, passed through one-to-one
 *   axis 1     pitch, pull back (+) to climb
 *   button 7   right trigger: absolute throttle while pressed
 *   button 0   fire
 *
 * Whichever device produced the most recent deliberate deflection
 * drives pitch/roll; throttle holds its last value unless a throttle
 * control is actively moving it.
 */

import { ControlState, InputSource, clampControl } from "./protocol.js";

/** Full throttle sweep takes two seconds of held key. */
const THROTTLE_RATE = 0.5;
/** Held pitch/roll keys reach full deflection in ~1/6 s. */
const AXIS_RAMP_RATE = 6.0;
/** Released pitch/roll returns to neutral in ~1/4 s. */
const AXIS_DECAY_RATE = 4.0;
/** Gamepad deflections inside this band read as zero. */
const DEADZONE = 0.05;

export interface GamepadSample {
  axes: readonly number[];
  /** Button states in standard-mapping order. */
  buttons: readonly { pressed: boolean; value: number }[];
}

function towards(value: number, target: number, maxStep: number): number {
  if (value < target) return Math.min(target, value + maxStep);
  return Math.max(target, value - maxStep);
}

function deadzone(axis: number): number {
  if (!Number.isFinite(axis)) return 0;
  return Math.abs(axis) < DEADZONE ? 0 : axis;
}

export class InputTracker {
  private held = new Set<string>();
  private throttle = 0.5;
  private pitch = 0;
  private roll = 0;
  private gamepad: GamepadSample | null = null;
  private source: InputSource = "keyboard";

  /** Feed a key transition; code is KeyboardEvent.code. */
  keyEvent(code: string, down: boolean): void {
    if (down) this.held.add(code);
    else this.held.delete(code);
  }

  /** Feed the latest gamepad poll, or null when none is connected. */
  gamepadSample(sample: GamepadSample | null): void {
    this.gamepad = sample;
  }

  /** True when the gamepad is deliberately deflected right now. */
  private gamepadActive(): boolean {
    const pad = this.gamepad;
    if (pad === null) return false;
    const rollAxis = deadzone(pad.axes[0] ?? 0);
    const pitchAxis = deadzone(pad.axes[1] ?? 0);
    const trigger = pad.buttons[7];
    const firing = pad.buttons[0]?.pressed === true;
    return (
      rollAxis !== 0 || pitchAxis !== 0 || trigger?.pressed === true || firing
    );
  }

  private axisTarget(negative: string, positive: string): number {
    const neg = this.held.has(negative) ? 1 : 0;
    const pos = this.held.has(positive) ? 1 : 0;
    return pos - neg;
  }

  /**
   * Integrate key dynamics over `dt` seconds.  Call at the send rate;
   * event handlers only flip key state, so the outgoing control rate
   * is independent of how fast events arrive.
   */
  advance(dt: number): void {
    if (!Number.isFinite(dt) || dt < 0) dt = 0;
    if (this.gamepadActive()) {
      const pad = this.gamepad!;
      this.source = "gamepad";
      this.roll = deadzone(pad.axes[0] ?? 0);
      this.pitch = deadzone(pad.axes[1] ?? 0);
      const trigger = pad.buttons[7];
      if (trigger?.pressed === true) {
        this.throttle = Number.isFinite(trigger.value) ? trigger.value : 0;
      }
      return;
    }
    this.source = "keyboard";
    const pitchTarget = this.axisTarget("KeyS", "KeyW");
    const rollTarget = this.axisTarget("KeyA", "KeyD");
    const pitchRate = pitchTarget === 0 ? AXIS_DECAY_RATE : AXIS_RAMP_RATE;
    const rollRate = rollTarget === 0 ? AXIS_DECAY_RATE : AXIS_RAMP_RATE;
    this.pitch = towards(this.pitch, pitchTarget, pitchRate * dt);
    this.roll = towards(this.roll, rollTarget, rollRate * dt);
    const throttleDir =
      (this.held.has("KeyE") ? 1 : 0) - (this.held.has("KeyQ") ? 1 : 0);
    this.throttle += throttleDir * THROTTLE_RATE * dt;
    this.throttle = Math.min(1, Math.max(0, this.throttle));
  }

  private firing(): boolean {
    if (this.gamepad?.buttons[0]?.pressed === true) return true;
    return this.held.has("Space");
  }

  /** Current clamped control state, ready to serialize. */
  control(): ControlState {
    return clampControl({
      throttle: this.throttle,
      pitch: this.pitch,
      roll: this.roll,
      fire: this.firing(),
      source: this.source,
    });
  }
}
