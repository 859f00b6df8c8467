/**
 * Console state store. The server is the single source of truth: the
 * rendered score fields are always the engine-reported values, never
 * recomputed client-side.
 */

import type {
  EmbodimentSummary,
  ProvisionalScore,
  RecordMessage,
  ServerMessage,
  StateUpdate,
  TaskSummary,
} from "./protocol.js";

export type InputMode = "sliders" | "keyboard" | "gamepad" | "replay";
export type ConnectionStatus = "disconnected" | "connecting" | "connected";

export interface ConsoleState {
  connection: ConnectionStatus;
  tasks: TaskSummary[];
  embodiments: EmbodimentSummary[];
  selectedTask: string | null;
  selectedEmbodiment: string | null;
  session: StateUpdate | null; // latest state broadcast
  lastStateAt: number | null; // wall-clock ms of the latest update
  inputMode: InputMode;
  record: RecordMessage | null; // finalized trial, straight from the server
  lastError: string | null;
}

export function initialState(): ConsoleState {
  return {
    connection: "disconnected",
    tasks: [],
    embodiments: [],
    selectedTask: null,
    selectedEmbodiment: null,
    session: null,
    lastStateAt: null,
    inputMode: "sliders",
    record: null,
    lastError: null,
  };
}

export function applyServerMessage(
  state: ConsoleState,
  msg: ServerMessage,
  nowMs: number,
): ConsoleState {
  switch (msg.type) {
    case "state":
      return { ...state, session: msg, lastStateAt: nowMs, lastError: null };
    case "record":
      return { ...state, record: msg };
    case "error":
      return { ...state, lastError: `${msg.code}: ${msg.message}` };
  }
}

/** Engine-reported provisional score; the console never recomputes it. */
export function displayedScore(state: ConsoleState): ProvisionalScore | null {
  if (state.record) return state.record.score;
  if (state.session) return state.session.provisional;
  return null;
}

export function isStale(state: ConsoleState, nowMs: number, thresholdMs = 500): boolean {
  if (state.session === null || state.session.status !== "running") return false;
  return state.lastStateAt !== null && nowMs - state.lastStateAt > thresholdMs;
}

export function progressMonotone(history: number[]): boolean {
  for (let i = 1; i < history.length; i++) {
    if (history[i] < history[i - 1]) return false;
  }
  return true;
}
