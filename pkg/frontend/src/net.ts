/**
 * WebSocket client for the gateway.  All protocol knowledge lives in
 * protocol.ts; this module owns the socket lifecycle, join handshake,
 * ping round-trip timing, and the fixed-rate control send path.
 */

import {
  ControlState,
  EntityId,
  FATAL_ERROR_CODES,
  ServerMessage,
  Team,
  TickMsg,
  Winner,
  encodeControl,
  encodeJoin,
  encodePing,
  parseServerMessage,
} from "./protocol.js";

/**
 * The slice of the browser WebSocket interface the client uses.  The
 * `ws` package implements the same surface, so tests can drive a real
 * server from Node with the identical code path.
 */
export interface SocketLike {
  send(data: string): void;
  close(code?: number, reason?: string): void;
  onopen: ((ev: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev: { code: number; reason: string }) => void) | null;
  onerror: ((ev: unknown) => void) | null;
  readyState: number;
}

export type SocketFactory = (url: string) => SocketLike;

const OPEN = 1; // WebSocket.OPEN

export interface GatewayCallbacks {
  onOpen?(): void;
  onJoined?(entity: EntityId): void;
  onTick?(msg: TickMsg): void;
  /** rttMs measured from our own clock; echo is the returned ping t. */
  onPong?(rttMs: number, echo: number): void;
  onEnd?(winner: Winner): void;
  onServerError?(code: string, fatal: boolean): void;
  onClose?(code: number, reason: string): void;
}

export class GatewayClient {
  private socket: SocketLike | null = null;
  private readonly factory: SocketFactory;
  private readonly now: () => number;

  constructor(
    private readonly url: string,
    private readonly team: Team,
    private readonly callbacks: GatewayCallbacks,
    factory?: SocketFactory,
    now?: () => number,
  ) {
    this.factory =
      factory ?? ((u) => new WebSocket(u) as unknown as SocketLike);
    this.now = now ?? (() => Date.now());
  }

  /** Open the socket and join as soon as it is up. */
  connect(): void {
    this.disconnect();
    const socket = this.factory(this.url);
    this.socket = socket;
    socket.onopen = () => {
      socket.send(encodeJoin(this.team));
      this.callbacks.onOpen?.();
    };
    socket.onmessage = (ev) => {
      if (typeof ev.data !== "string") return;
      this.dispatch(parseServerMessage(ev.data));
    };
    socket.onclose = (ev) => {
      if (this.socket === socket) this.socket = null;
      this.callbacks.onClose?.(ev.code, ev.reason);
    };
    socket.onerror = () => {
      // The paired close event carries the useful information.
    };
  }

  disconnect(): void {
    const socket = this.socket;
    this.socket = null;
    if (socket !== null && socket.readyState <= OPEN) {
      socket.onclose = null;
      socket.close(1000, "client-leaving");
    }
  }

  get open(): boolean {
    return this.socket !== null && this.socket.readyState === OPEN;
  }

  /** Send the current control setpoint; drops silently when closed. */
  sendControl(state: ControlState): void {
    if (this.socket !== null && this.socket.readyState === OPEN) {
      this.socket.send(encodeControl(state));
    }
  }

  /** Send an echo probe stamped with our clock. */
  ping(): void {
    if (this.socket !== null && this.socket.readyState === OPEN) {
      this.socket.send(encodePing(this.now()));
    }
  }

  private dispatch(msg: ServerMessage | null): void {
    if (msg === null) return; // not a documented frame; ignore
    switch (msg.type) {
      case "joined":
        this.callbacks.onJoined?.(msg.entity);
        break;
      case "tick":
        this.callbacks.onTick?.(msg);
        break;
      case "pong":
        this.callbacks.onPong?.(this.now() - msg.t, msg.t);
        break;
      case "end":
        this.callbacks.onEnd?.(msg.winner);
        break;
      case "error":
        this.callbacks.onServerError?.(msg.code, FATAL_ERROR_CODES.has(msg.code));
        break;
    }
  }
}
