/**
 * Operator input mapping: one slider per unlocked joint, wrist axes
 * restricted to the task's motion constraint, and a rate-limited,
 * sequence-numbered input message builder.
 */

import type { EmbodimentSummary, InputMessage, TaskSummary } from "./protocol.js";
import { PROTOCOL_VERSION } from "./protocol.js";

export interface SliderSpec {
  joint: string;
  index: number; // position in the 16-joint vector
}

/** Sliders for exactly the unlocked joints, in model joint order. */
export function sliderSpecs(embodiment: EmbodimentSummary): SliderSpec[] {
  const locked = new Set(embodiment.locked);
  return embodiment.joints
    .map((joint, index) => ({ joint, index }))
    .filter((s) => !locked.has(s.joint));
}

export interface WristAxes {
  x: boolean;
  y: boolean;
  z: boolean;
  rotation: boolean;
}

/** Which wrist controls are active under the task's axis constraint. */
export function wristAxes(task: Pick<TaskSummary, "axis_tag">): WristAxes {
  switch (task.axis_tag) {
    case "fixed":
      return { x: false, y: false, z: false, rotation: false };
    case "vertical":
      return { x: false, y: false, z: true, rotation: false };
    case "horizontal":
      return { x: true, y: false, z: false, rotation: false };
    case "free":
      return { x: true, y: true, z: true, rotation: true };
  }
}

export const MAX_INPUT_RATE_HZ = 100;

/** Sequence-numbered input frames, sending at most maxRateHz. */
export class InputEmitter {
  private seq = 0;
  private lastSentMs = -Infinity;
  readonly minIntervalMs: number;

  constructor(maxRateHz: number = MAX_INPUT_RATE_HZ) {
    if (maxRateHz <= 0 || maxRateHz > MAX_INPUT_RATE_HZ) {
      throw new Error(`input rate must be in (0, ${MAX_INPUT_RATE_HZ}] Hz`);
    }
    this.minIntervalMs = 1000 / maxRateHz;
  }

  get nextSeq(): number {
    return this.seq + 1;
  }

  /** Build the next frame, or null if sending now would exceed the rate. */
  build(
    nowMs: number,
    t: number,
    payload: { joints?: number[]; keypoints?: number[][]; wrist?: InputMessage["wrist"] },
  ): InputMessage | null {
    if (nowMs - this.lastSentMs < this.minIntervalMs) return null;
    this.lastSentMs = nowMs;
    this.seq += 1;
    return {
      type: "input",
      protocol_version: PROTOCOL_VERSION,
      seq: this.seq,
      t,
      ...(payload.joints ? { joints: payload.joints } : {}),
      ...(payload.keypoints ? { keypoints: payload.keypoints } : {}),
      ...(payload.wrist ? { wrist: payload.wrist } : {}),
    };
  }
}

/** Apply a slider move: unlocked joint values only, others pinned to 0. */
export function jointVector(specs: SliderSpec[], values: Map<string, number>): number[] {
  const q = new Array<number>(16).fill(0);
  for (const s of specs) {
    q[s.index] = values.get(s.joint) ?? 0;
  }
  return q;
}
