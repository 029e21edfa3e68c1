/**
 * Top-down tactical map renderer.  North is up, east is right;
 * altitude rides as a label next to each icon.  Drawing goes through
 * the small Ctx2D interface below so tests can substitute a recording
 * fake for a real canvas context.
 */

import { ControlState, EntityId, idKey, sameId } from "./protocol.js";
import { FeedLine, RenderedEntity, UiState } from "./state.js";

/** The subset of CanvasRenderingContext2D the renderer uses. */
export interface Ctx2D {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  textAlign: CanvasTextAlign;
  textBaseline: CanvasTextBaseline;
  globalAlpha: number;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  closePath(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  fill(): void;
  stroke(): void;
  fillText(text: string, x: number, y: number): void;
  save(): void;
  restore(): void;
  translate(x: number, y: number): void;
  rotate(angle: number): void;
}

export const TEAM_COLORS = { blue: "#4da3ff", red: "#ff5a5a" } as const;
export const DEAD_COLOR = "#8a8a8a";
export const OWN_RING_COLOR = "#ffffff";

/** Dead aircraft stay on the map this long after going down, seconds. */
export const DEAD_MARKER_S = 5.0;

/** Ping above this shows the latency warning. */
export const LATENCY_WARN_MS = 200;

/** Everything one frame needs, assembled by the caller. */
export interface ViewModel {
  state: UiState;
  /** Render time on the simulation clock. */
  tSim: number;
  entities: RenderedEntity[];
  ownId: EntityId | null;
  deathTimes: ReadonlyMap<string, number>;
  killFeed: readonly FeedLine[];
  rttMs: number | null;
  winner: string | null;
  notice: string | null;
  /** Last control sent, for the HUD readback. */
  control: ControlState;
}

interface Camera {
  cx: number; // world north of screen centre
  cy: number; // world east of screen centre
  scale: number; // pixels per metre
}

function fitCamera(
  entities: readonly RenderedEntity[],
  width: number,
  height: number,
): Camera {
  let minN = -2000;
  let maxN = 2000;
  let minE = -2000;
  let maxE = 2000;
  for (const e of entities) {
    minN = Math.min(minN, e.renderPos[0]);
    maxN = Math.max(maxN, e.renderPos[0]);
    minE = Math.min(minE, e.renderPos[1]);
    maxE = Math.max(maxE, e.renderPos[1]);
  }
  const spanN = Math.max(maxN - minN, 1000) * 1.25;
  const spanE = Math.max(maxE - minE, 1000) * 1.25;
  return {
    cx: (minN + maxN) / 2,
    cy: (minE + maxE) / 2,
    scale: Math.min(height / spanN, width / spanE),
  };
}

function toScreen(
  cam: Camera,
  width: number,
  height: number,
  north: number,
  east: number,
): [number, number] {
  return [
    width / 2 + (east - cam.cy) * cam.scale,
    height / 2 - (north - cam.cx) * cam.scale,
  ];
}

function speedOf(e: RenderedEntity): number {
  return Math.hypot(e.vel[0], e.vel[1], e.vel[2]);
}

function drawGrid(
  ctx: Ctx2D,
  cam: Camera,
  width: number,
  height: number,
): void {
  const stepM = 1000;
  ctx.strokeStyle = "#20262e";
  ctx.lineWidth = 1;
  const northSpan = height / cam.scale;
  const eastSpan = width / cam.scale;
  const n0 = Math.floor((cam.cx - northSpan / 2) / stepM) * stepM;
  const e0 = Math.floor((cam.cy - eastSpan / 2) / stepM) * stepM;
  for (let n = n0; n <= cam.cx + northSpan / 2; n += stepM) {
    const [, y] = toScreen(cam, width, height, n, cam.cy);
    ctx.beginPath();
    ctx.moveTo(0, y);
    ctx.lineTo(width, y);
    ctx.stroke();
  }
  for (let e = e0; e <= cam.cy + eastSpan / 2; e += stepM) {
    const [x] = toScreen(cam, width, height, cam.cx, e);
    ctx.beginPath();
    ctx.moveTo(x, 0);
    ctx.lineTo(x, height);
    ctx.stroke();
  }
}

function drawAircraft(
  ctx: Ctx2D,
  x: number,
  y: number,
  heading: number,
  color: string,
  own: boolean,
): void {
  ctx.save();
  ctx.translate(x, y);
  ctx.rotate(heading); // heading 0 = north = screen up; positive clockwise
  ctx.fillStyle = color;
  ctx.beginPath();
  ctx.moveTo(0, -9);
  ctx.lineTo(6, 7);
  ctx.lineTo(0, 3);
  ctx.lineTo(-6, 7);
  ctx.closePath();
  ctx.fill();
  // Heading vector out of the nose.
  ctx.strokeStyle = color;
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  ctx.moveTo(0, -9);
  ctx.lineTo(0, -22);
  ctx.stroke();
  if (own) {
    ctx.strokeStyle = OWN_RING_COLOR;
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    ctx.arc(0, 0, 13, 0, Math.PI * 2);
    ctx.stroke();
  }
  ctx.restore();
}

function drawDeadMarker(ctx: Ctx2D, x: number, y: number, age: number): void {
  ctx.save();
  ctx.globalAlpha = Math.max(0.15, 1 - age / DEAD_MARKER_S);
  ctx.strokeStyle = DEAD_COLOR;
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.moveTo(x - 7, y - 7);
  ctx.lineTo(x + 7, y + 7);
  ctx.moveTo(x + 7, y - 7);
  ctx.lineTo(x - 7, y + 7);
  ctx.stroke();
  ctx.restore();
}

function drawEntities(
  ctx: Ctx2D,
  vm: ViewModel,
  cam: Camera,
  width: number,
  height: number,
): void {
  for (const e of vm.entities) {
    const [x, y] = toScreen(cam, width, height, e.renderPos[0], e.renderPos[1]);
    if (!e.alive) {
      const downAt = vm.deathTimes.get(idKey(e.id));
      const age = downAt === undefined ? 0 : vm.tSim - downAt;
      if (age <= DEAD_MARKER_S) drawDeadMarker(ctx, x, y, Math.max(age, 0));
      continue;
    }
    drawAircraft(
      ctx,
      x,
      y,
      e.att[0],
      TEAM_COLORS[e.team],
      sameId(e.id, vm.ownId),
    );
    ctx.fillStyle = "#aeb8c4";
    ctx.font = "11px system-ui, sans-serif";
    ctx.textAlign = "center";
    ctx.textBaseline = "top";
    ctx.fillText(
      `${Math.round(-e.renderPos[2])} m  ${Math.round(speedOf(e))} m/s`,
      x,
      y + 16,
    );
  }
}

function drawKillFeed(ctx: Ctx2D, vm: ViewModel, width: number): void {
  ctx.font = "12px system-ui, sans-serif";
  ctx.textAlign = "right";
  ctx.textBaseline = "top";
  const lines = vm.killFeed.slice(-6);
  lines.forEach((line, i) => {
    ctx.fillStyle = "#d7dde4";
    ctx.fillText(
      `${line.t.toFixed(1)}s  ${line.text}`,
      width - 12,
      12 + i * 16,
    );
  });
}

function drawHud(ctx: Ctx2D, vm: ViewModel, width: number, height: number): void {
  const own = vm.entities.find((e) => sameId(e.id, vm.ownId));
  ctx.fillStyle = "#11151a";
  ctx.fillRect(0, height - 34, width, 34);
  ctx.font = "13px ui-monospace, monospace";
  ctx.textAlign = "left";
  ctx.textBaseline = "middle";
  const y = height - 17;
  let x = 12;
  const put = (text: string, color = "#d7dde4", advance = 10): void => {
    ctx.fillStyle = color;
    ctx.fillText(text, x, y);
    x += text.length * 7.4 + advance;
  };
  if (own !== undefined) {
    put(`SPD ${Math.round(speedOf(own))} m/s`);
    put(`ALT ${Math.round(-own.renderPos[2])} m`);
    put(`HDG ${Math.round(((own.att[0] * 180) / Math.PI + 360) % 360)}°`);
    put(`HP ${(own.hp * 100).toFixed(0)}%`);
  } else {
    put("spectating");
  }
  put(`THR ${(vm.control.throttle * 100).toFixed(0)}%`);
  if (vm.control.fire) put("FIRE", "#ffb454");
  if (vm.rttMs !== null) {
    const warn = vm.rttMs > LATENCY_WARN_MS;
    put(
      `PING ${Math.round(vm.rttMs)} ms${warn ? " LATENCY" : ""}`,
      warn ? "#ff5a5a" : "#8fa3b8",
    );
  }
  if (vm.notice !== null) put(vm.notice, "#ffb454");
}

function drawBanner(
  ctx: Ctx2D,
  width: number,
  height: number,
  title: string,
  subtitle: string,
): void {
  ctx.save();
  ctx.globalAlpha = 0.72;
  ctx.fillStyle = "#0a0d11";
  ctx.fillRect(0, 0, width, height);
  ctx.restore();
  ctx.fillStyle = "#e8edf2";
  ctx.font = "24px system-ui, sans-serif";
  ctx.textAlign = "center";
  ctx.textBaseline = "middle";
  ctx.fillText(title, width / 2, height / 2 - 16);
  ctx.font = "14px system-ui, sans-serif";
  ctx.fillStyle = "#9fb0c0";
  ctx.fillText(subtitle, width / 2, height / 2 + 16);
}

/**
 * Draw one frame.  The last world frame stays on screen beneath the
 * disconnect and end-of-episode overlays.
 */
export function render(
  vm: ViewModel,
  ctx: Ctx2D,
  width: number,
  height: number,
): void {
  ctx.fillStyle = "#0d1117";
  ctx.fillRect(0, 0, width, height);
  const haveWorld = vm.entities.length > 0;
  if (haveWorld) {
    const cam = fitCamera(vm.entities, width, height);
    drawGrid(ctx, cam, width, height);
    drawEntities(ctx, vm, cam, width, height);
    drawKillFeed(ctx, vm, width);
    drawHud(ctx, vm, width, height);
  }
  if (vm.state === "disconnected") {
    drawBanner(
      ctx,
      width,
      height,
      haveWorld ? "connection lost" : "not connected",
      "press Reconnect to rejoin",
    );
  } else if (vm.state === "ended") {
    drawBanner(
      ctx,
      width,
      height,
      `episode over — winner: ${vm.winner ?? "?"}`,
      "press Reconnect to fly again",
    );
  } else if (!haveWorld) {
    drawBanner(ctx, width, height, "joining…", "waiting for first snapshot");
  }
}
