// Websocket client for the risk service: hello/ready handshake, frame
// streaming with backpressure drop, and reconnect with exponential
// backoff. Every reconnect is a fresh server-side session (new hello,
// new ready), surfaced to the UI through onReady.

import {
  ErrorMessage,
  Landmark,
  PredictionMessage,
  ProtocolError,
  ReadyMessage,
  frameMessage,
  helloMessage,
  parseServerMessage,
  serialize,
} from "./protocol.js";

export type ConnectionStatus =
  | "idle"
  | "connecting"
  | "connected"
  | "reconnecting"
  | "closed";

/** The subset of the WebSocket surface the client relies on; injectable
 *  so tests can script the server side. */
export interface WebSocketLike {
  readyState: number;
  bufferedAmount: number;
  send(data: string): void;
  close(code?: number, reason?: string): void;
  onopen: (() => void) | null;
  onmessage: ((event: { data: string }) => void) | null;
  onclose: ((event: { code: number; reason: string }) => void) | null;
  onerror: (() => void) | null;
}

export const SOCKET_OPEN = 1;

export type SocketFactory = (url: string) => WebSocketLike;

export interface ClientEvents {
  onStatus?: (status: ConnectionStatus) => void;
  onReady?: (msg: ReadyMessage) => void;
  onPrediction?: (msg: PredictionMessage) => void;
  onServerError?: (msg: ErrorMessage) => void;
  onProtocolError?: (err: ProtocolError) => void;
  /** Wire tap: every raw text the client puts on the socket. */
  onWireOut?: (raw: string) => void;
}

export interface ClientOptions {
  socketFactory?: SocketFactory;
  /** Frames are dropped, never queued, once this much output is unsent. */
  maxBufferedBytes?: number;
  backoffInitialMs?: number;
  backoffMaxMs?: number;
  schedule?: (fn: () => void, ms: number) => unknown;
  cancel?: (handle: unknown) => void;
}

export interface ClientStats {
  framesSent: number;
  framesDropped: number;
  sessions: number;
}

const defaultFactory: SocketFactory = (url) =>
  new WebSocket(url) as unknown as WebSocketLike;

export class StreamClient {
  readonly stats: ClientStats = { framesSent: 0, framesDropped: 0, sessions: 0 };
  status: ConnectionStatus = "idle";

  private socket: WebSocketLike | null = null;
  private ready = false;
  private closedByUs = false;
  private backoffMs: number;
  private reconnectHandle: unknown = null;

  private readonly factory: SocketFactory;
  private readonly maxBuffered: number;
  private readonly backoffInitialMs: number;
  private readonly backoffMaxMs: number;
  private readonly schedule: (fn: () => void, ms: number) => unknown;
  private readonly cancel: (handle: unknown) => void;

  constructor(
    private readonly url: string,
    private readonly events: ClientEvents = {},
    options: ClientOptions = {},
  ) {
    this.factory = options.socketFactory ?? defaultFactory;
    this.maxBuffered = options.maxBufferedBytes ?? 64 * 1024;
    this.backoffInitialMs = options.backoffInitialMs ?? 500;
    this.backoffMaxMs = options.backoffMaxMs ?? 8000;
    this.backoffMs = this.backoffInitialMs;
    this.schedule = options.schedule ?? ((fn, ms) => setTimeout(fn, ms));
    this.cancel = options.cancel ?? ((handle) => clearTimeout(handle as number));
  }

  get isReady(): boolean {
    return this.ready;
  }

  connect(): void {
    this.closedByUs = false;
    this.open("connecting");
  }

  close(): void {
    this.closedByUs = true;
    if (this.reconnectHandle !== null) {
      this.cancel(this.reconnectHandle);
      this.reconnectHandle = null;
    }
    this.socket?.close(1000, "client closed");
    this.socket = null;
    this.ready = false;
    this.setStatus("closed");
  }

  /** Send one frame; returns false when the frame was dropped (socket not
   *  ready or output backlogged). Frames are never queued client-side. */
  sendFrame(t: number, lm: Landmark[]): boolean {
    const socket = this.socket;
    if (!socket || !this.ready || socket.readyState !== SOCKET_OPEN) {
      this.stats.framesDropped += 1;
      return false;
    }
    if (socket.bufferedAmount > this.maxBuffered) {
      this.stats.framesDropped += 1;
      return false;
    }
    this.sendRaw(serialize(frameMessage(t, lm)));
    this.stats.framesSent += 1;
    return true;
  }

  private sendRaw(raw: string): void {
    this.events.onWireOut?.(raw);
    this.socket?.send(raw);
  }

  private setStatus(status: ConnectionStatus): void {
    this.status = status;
    this.events.onStatus?.(status);
  }

  private open(mode: "connecting" | "reconnecting"): void {
    this.setStatus(mode);
    this.ready = false;
    const socket = this.factory(this.url);
    this.socket = socket;
    socket.onopen = () => {
      this.sendRaw(serialize(helloMessage()));
    };
    socket.onmessage = (event) => this.handleMessage(event.data);
    socket.onerror = () => {
      // the close handler owns reconnection
    };
    socket.onclose = () => {
      this.ready = false;
      if (this.closedByUs) return;
      this.setStatus("reconnecting");
      this.reconnectHandle = this.schedule(() => {
        this.reconnectHandle = null;
        this.open("reconnecting");
      }, this.backoffMs);
      this.backoffMs = Math.min(this.backoffMs * 2, this.backoffMaxMs);
    };
  }

  private handleMessage(raw: string): void {
    let message;
    try {
      message = parseServerMessage(raw);
    } catch (err) {
      if (err instanceof ProtocolError) {
        this.events.onProtocolError?.(err);
        return;
      }
      throw err;
    }
    switch (message.type) {
      case "ready":
        this.ready = true;
        this.backoffMs = this.backoffInitialMs;
        this.stats.sessions += 1;
        this.setStatus("connected");
        this.events.onReady?.(message);
        break;
      case "prediction":
        this.events.onPrediction?.(message);
        break;
      case "error":
        this.events.onServerError?.(message);
        break;
    }
  }
}
