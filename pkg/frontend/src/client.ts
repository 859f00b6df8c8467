/**
 * Session client: wraps a WebSocket-like transport, numbers input
 * frames, dispatches parsed server messages, reconnects on loss, and
 * can stream a recorded input log (replay mode) through the live
 * protocol.
 */

import { InputEmitter } from "./input.js";
import {
  createMessage,
  finalizeMessage,
  parseServerMessage,
  startTrialMessage,
  tickMessage,
  type InputMessage,
  type RecordMessage,
  type ServerMessage,
  type StateUpdate,
} from "./protocol.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onmessage: ((event: { data: unknown }) => void) | null;
  onclose: (() => void) | null;
  onopen: (() => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export interface ClientOptions {
  url: string;
  socketFactory: SocketFactory;
  onMessage: (msg: ServerMessage) => void;
  onConnectionChange?: (connected: boolean) => void;
  reconnectDelayMs?: number;
  maxInputRateHz?: number;
}

export class SessionClient {
  private socket: SocketLike | null = null;
  private emitter: InputEmitter;
  private closed = false;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;
  readonly opts: ClientOptions;

  constructor(opts: ClientOptions) {
    this.opts = opts;
    this.emitter = new InputEmitter(opts.maxInputRateHz);
  }

  connect(): Promise<void> {
    this.closed = false;
    return new Promise((resolve) => {
      const sock = this.opts.socketFactory(this.opts.url);
      this.socket = sock;
      sock.onopen = () => {
        this.opts.onConnectionChange?.(true);
        resolve();
      };
      sock.onmessage = (event) => {
        try {
          this.opts.onMessage(parseServerMessage(String(event.data)));
        } catch {
          // unparseable server frame: surface as an error-shaped message
          this.opts.onMessage({
            type: "error",
            protocol_version: 1,
            code: "bad_server_message",
            message: "unparseable server frame",
          });
        }
      };
      sock.onclose = () => {
        this.opts.onConnectionChange?.(false);
        this.socket = null;
        if (!this.closed) {
          // connection loss: reconnect; the operator re-creates the
          // session and pickers resync from the HTTP endpoints
          this.reconnectTimer = setTimeout(
            () => void this.connect(),
            this.opts.reconnectDelayMs ?? 1000,
          );
        }
      };
    });
  }

  close(): void {
    this.closed = true;
    if (this.reconnectTimer) clearTimeout(this.reconnectTimer);
    this.socket?.close();
  }

  private send(msg: unknown): void {
    if (!this.socket) throw new Error("not connected");
    this.socket.send(JSON.stringify(msg));
  }

  createSession(taskId: string, embodimentId: string, config?: Record<string, unknown>): void {
    this.emitter = new InputEmitter(this.opts.maxInputRateHz);
    this.send(createMessage(taskId, embodimentId, config));
  }

  startTrial(t?: number, practice = false): void {
    this.send(startTrialMessage(t, practice));
  }

  finalize(): void {
    this.send(finalizeMessage());
  }

  tick(now: number): void {
    this.send(tickMessage(now));
  }

  /** Rate-limited, sequence-numbered input; returns false when skipped. */
  sendInput(
    nowMs: number,
    t: number,
    payload: { joints?: number[]; keypoints?: number[][]; wrist?: InputMessage["wrist"] },
  ): boolean {
    const frame = this.emitter.build(nowMs, t, payload);
    if (frame === null) return false;
    this.send(frame);
    return true;
  }
}

export interface ReplayResult {
  finalState: StateUpdate | null;
  record: RecordMessage;
}

/**
 * Stream a recorded input log (the `simulate`/`replay` file format)
 * through a client connection and resolve with the server's record.
 * Logs produced with manual_tick carry their own time grid.
 */
export async function runReplayLog(
  client: SessionClient,
  rows: Record<string, unknown>[],
  collect: { states: StateUpdate[] },
  waitFor: (pred: () => boolean) => Promise<void>,
): Promise<RecordMessage> {
  const create = rows.find((r) => r.type === "create");
  const start = rows.find((r) => r.type === "start_trial");
  const finalizeRow = rows.find((r) => r.type === "finalize");
  if (!create || !start || !finalizeRow) throw new Error("incomplete input log");

  const config: Record<string, unknown> = {
    ...((create.config as Record<string, unknown>) ?? {}),
    manual_tick: true,
  };
  let lastRecord: RecordMessage | null = null;
  const baseOnMessage = client.opts.onMessage;
  client.opts.onMessage = (msg) => {
    if (msg.type === "state") collect.states.push(msg);
    if (msg.type === "record") lastRecord = msg;
    baseOnMessage(msg);
  };

  client.createSession(String(create.task_id), String(create.embodiment_id), config);
  await waitFor(() => collect.states.length > 0);
  client.startTrial(Number(start.t ?? 0), Boolean(start.practice));

  const t0 = Number(start.t ?? 0);
  const tEnd = Number(finalizeRow.t ?? t0);
  const dt = Number((config.tick_period as number) ?? 0.01);
  const frames = rows.filter((r) => r.type === "input");
  let fi = 0;
  const nTicks = Math.max(0, Math.round((tEnd - t0) / dt));
  for (let k = 1; k <= nTicks; k++) {
    const now = t0 + k * dt;
    while (fi < frames.length && Number(frames[fi].t) <= now + 1e-12) {
      client["send"](frames[fi]);
      fi += 1;
    }
    client.tick(now);
  }
  client.finalize();
  await waitFor(() => lastRecord !== null);
  return lastRecord!;
}
