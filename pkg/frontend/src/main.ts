/**
 * Browser entry point: wires the DOM, input devices, network client,
 * world model, and render loop together.
 *
 * Loop structure (single-threaded, per the protocol's pacing rules):
 *  - network callbacks update ClientWorld as frames arrive;
 *  - a 50 ms interval advances input dynamics and sends one control
 *    frame — a fixed 20 Hz regardless of input event rate;
 *  - a 1 s interval sends a ping for the round-trip readout;
 *  - requestAnimationFrame reads the world and draws it.
 */

import { InputTracker } from "./input.js";
import { GatewayClient } from "./net.js";
import { NEUTRAL_CONTROL, Team } from "./protocol.js";
import { ClientWorld, RenderClock, resolveEntities } from "./state.js";
import { Ctx2D, ViewModel, render } from "./render.js";

const CONTROL_INTERVAL_MS = 50; // 20 Hz
const PING_INTERVAL_MS = 1000;

function element<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (el === null) throw new Error(`missing element #${id}`);
  return el as T;
}

function defaultUrl(): string {
  const host = location.hostname === "" ? "127.0.0.1" : location.hostname;
  return `ws://${host}:8765`;
}

function main(): void {
  const canvas = element<HTMLCanvasElement>("view");
  const urlInput = element<HTMLInputElement>("server-url");
  const joinBlue = element<HTMLButtonElement>("join-blue");
  const joinRed = element<HTMLButtonElement>("join-red");
  const reconnect = element<HTMLButtonElement>("reconnect");
  const ctx = canvas.getContext("2d");
  if (ctx === null) throw new Error("2d canvas unavailable");

  urlInput.value = defaultUrl();

  const world = new ClientWorld();
  const clock = new RenderClock();
  const tracker = new InputTracker();
  let client: GatewayClient | null = null;
  let lastSent = NEUTRAL_CONTROL;

  function connect(team: Team): void {
    client?.disconnect();
    world.handleReconnect();
    client = new GatewayClient(urlInput.value, team, {
      onJoined: (entity) => world.handleJoined(entity),
      onTick: (msg) => {
        world.handleTick(msg);
        clock.observe(msg.t, performance.now());
      },
      onPong: (rttMs) => {
        world.rttMs = rttMs;
      },
      onEnd: (winner) => world.handleEnd(winner),
      onServerError: (code, fatal) => {
        world.notice = code;
        if (fatal) world.handleClose();
      },
      onClose: () => world.handleClose(),
    });
    client.connect();
  }

  joinBlue.onclick = () => connect("blue");
  joinRed.onclick = () => connect("red");
  reconnect.onclick = () => {
    if (client !== null) client.connect();
  };

  window.addEventListener("keydown", (ev) => {
    if (ev.code === "Space") ev.preventDefault();
    if (!ev.repeat) tracker.keyEvent(ev.code, true);
  });
  window.addEventListener("keyup", (ev) => tracker.keyEvent(ev.code, false));
  window.addEventListener("blur", () => {
    // Both devices read as released when focus leaves the page.
    tracker.gamepadSample(null);
  });

  let lastAdvance = performance.now();
  setInterval(() => {
    const pads = navigator.getGamepads === undefined
      ? []
      : navigator.getGamepads();
    const pad = pads.find((p) => p !== null) ?? null;
    tracker.gamepadSample(
      pad === null
        ? null
        : {
            axes: pad.axes,
            buttons: pad.buttons.map((b) => ({
              pressed: b.pressed,
              value: b.value,
            })),
          },
    );
    const now = performance.now();
    tracker.advance((now - lastAdvance) / 1000);
    lastAdvance = now;
    lastSent = tracker.control();
    if (world.state === "joined" || world.state === "flying") {
      client?.sendControl(lastSent);
    }
  }, CONTROL_INTERVAL_MS);

  setInterval(() => client?.ping(), PING_INTERVAL_MS);

  function fitCanvas(): void {
    canvas.width = canvas.clientWidth * devicePixelRatio;
    canvas.height = canvas.clientHeight * devicePixelRatio;
  }
  window.addEventListener("resize", fitCanvas);
  fitCanvas();

  let lastFrame = performance.now();
  function frame(): void {
    const now = performance.now();
    const tSim = clock.advance(now - lastFrame);
    lastFrame = now;
    const vm: ViewModel = {
      state: world.state,
      tSim,
      entities: resolveEntities(world.buffer, tSim),
      ownId: world.ownId,
      deathTimes: world.deathTimes,
      killFeed: world.killFeed,
      rttMs: world.rttMs,
      winner: world.winner,
      notice: world.notice,
      control: lastSent,
    };
    const g = ctx as unknown as Ctx2D;
    g.save();
    (ctx as CanvasRenderingContext2D).setTransform(
      devicePixelRatio,
      0,
      0,
      devicePixelRatio,
      0,
      0,
    );
    render(vm, g, canvas.clientWidth, canvas.clientHeight);
    g.restore();
    requestAnimationFrame(frame);
  }
  requestAnimationFrame(frame);
}

main();
