/**
 * Wire protocol types for the benchmark session service.
 *
 * JSON messages with a `type` field; numeric units are meters, radians,
 * seconds. Every message carries protocol_version.
 */

export const PROTOCOL_VERSION = 1;

export interface Pose {
  position: [number, number, number];
  quaternion: [number, number, number, number]; // w, x, y, z
}

export interface ProvisionalScore {
  correctness: number;
  speed: number;
  score: number;
}

export interface StateUpdate {
  type: "state";
  protocol_version: number;
  session_id: string;
  task_id: string;
  embodiment_id: string;
  status: "idle" | "running" | "finished";
  elapsed: number;
  progress: number;
  provisional: ProvisionalScore;
  keypoints: number[][];
  q: number[];
  wrist: Pose;
  object: Pose;
  mechanism: Record<string, unknown> & { type: string };
  attached: boolean;
  counters: Record<string, number>;
}

export interface TrialRecordData {
  task_id: string;
  embodiment_id: string;
  correctness: number;
  duration: number;
  events: [number, number][];
  [key: string]: unknown;
}

export interface RecordMessage {
  type: "record";
  protocol_version: number;
  trial_id: number | null;
  record: TrialRecordData;
  score: ProvisionalScore;
}

export interface ErrorMessage {
  type: "error";
  protocol_version: number;
  code: string;
  message: string;
}

export type ServerMessage = StateUpdate | RecordMessage | ErrorMessage;

export interface InputMessage {
  type: "input";
  protocol_version: number;
  seq: number;
  t: number;
  joints?: number[];
  keypoints?: number[][];
  wrist?: Pose;
}

export interface TaskSummary {
  id: string;
  name: string;
  configuration: string;
  axis_tag: "fixed" | "vertical" | "horizontal" | "free";
  mechanism: string;
  [key: string]: unknown;
}

export interface EmbodimentSummary {
  name: string;
  dof_count: number;
  locked: string[];
  joints: string[];
}

export function parseServerMessage(text: string): ServerMessage {
  const msg = JSON.parse(text) as { type?: string; protocol_version?: number };
  if (msg.protocol_version !== PROTOCOL_VERSION) {
    throw new Error(`protocol_version mismatch: ${msg.protocol_version}`);
  }
  if (msg.type === "state" || msg.type === "record" || msg.type === "error") {
    return msg as ServerMessage;
  }
  throw new Error(`unknown server message type: ${msg.type}`);
}

export function createMessage(taskId: string, embodimentId: string, config?: Record<string, unknown>) {
  return {
    type: "create",
    protocol_version: PROTOCOL_VERSION,
    task_id: taskId,
    embodiment_id: embodimentId,
    ...(config ? { config } : {}),
  };
}

export function startTrialMessage(t?: number, practice = false) {
  return {
    type: "start_trial",
    protocol_version: PROTOCOL_VERSION,
    ...(t !== undefined ? { t } : {}),
    practice,
  };
}

export function finalizeMessage() {
  return { type: "finalize", protocol_version: PROTOCOL_VERSION };
}

export function tickMessage(now: number) {
  return { type: "tick", protocol_version: PROTOCOL_VERSION, now };
}
