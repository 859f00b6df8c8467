import { describe, expect, it } from "vitest";
import type { RecordMessage, StateUpdate } from "../src/protocol.js";
import {
  applyServerMessage,
  displayedScore,
  initialState,
  isStale,
  progressMonotone,
} from "../src/state.js";

function stateUpdate(overrides: Partial<StateUpdate> = {}): StateUpdate {
  return {
    type: "state",
    protocol_version: 1,
    session_id: "s1",
    task_id: "V1",
    embodiment_id: "hand_full",
    status: "running",
    elapsed: 2.0,
    progress: 0.5,
    provisional: { correctness: 0.5, speed: 0, score: 0.4 },
    keypoints: [],
    q: [],
    wrist: { position: [0, 0, 0], quaternion: [1, 0, 0, 0] },
    object: { position: [0, 0, 0], quaternion: [1, 0, 0, 0] },
    mechanism: { type: "notch_rod" },
    attached: false,
    counters: {},
    ...overrides,
  };
}

describe("applyServerMessage", () => {
  it("stores the latest state update and its arrival time", () => {
    const s1 = applyServerMessage(initialState(), stateUpdate(), 1000);
    expect(s1.session?.progress).toBe(0.5);
    expect(s1.lastStateAt).toBe(1000);
  });

  it("stores records and errors", () => {
    const rec: RecordMessage = {
      type: "record",
      protocol_version: 1,
      trial_id: 0,
      record: { task_id: "V1", embodiment_id: "hand_full", correctness: 1, duration: 10, events: [] },
      score: { correctness: 1, speed: 1.5, score: 1.1 },
    };
    let s = applyServerMessage(initialState(), rec, 0);
    expect(s.record?.score.score).toBe(1.1);
    s = applyServerMessage(s, { type: "error", protocol_version: 1, code: "c", message: "m" }, 0);
    expect(s.lastError).toContain("c");
  });
});

describe("displayedScore", () => {
  it("passes through the engine-reported provisional score untouched", () => {
    // deliberately inconsistent numbers: the console must NOT recompute
    const weird = { correctness: 1, speed: 1, score: 0.123 };
    const s = applyServerMessage(initialState(), stateUpdate({ provisional: weird }), 0);
    expect(displayedScore(s)).toEqual(weird);
  });

  it("prefers the finalized record score", () => {
    let s = applyServerMessage(initialState(), stateUpdate(), 0);
    const rec: RecordMessage = {
      type: "record",
      protocol_version: 1,
      trial_id: 1,
      record: { task_id: "V1", embodiment_id: "hand_full", correctness: 1, duration: 8, events: [] },
      score: { correctness: 1, speed: 2, score: 1.2 },
    };
    s = applyServerMessage(s, rec, 0);
    expect(displayedScore(s)?.score).toBe(1.2);
  });
});

describe("staleness", () => {
  it("flags running sessions silent for over 500 ms", () => {
    const s = applyServerMessage(initialState(), stateUpdate(), 1000);
    expect(isStale(s, 1400)).toBe(false);
    expect(isStale(s, 1600)).toBe(true);
  });

  it("idle sessions are never stale", () => {
    const s = applyServerMessage(initialState(), stateUpdate({ status: "idle" }), 0);
    expect(isStale(s, 10_000)).toBe(false);
  });
});

describe("progressMonotone", () => {
  it("checks trial progress traces", () => {
    expect(progressMonotone([0, 0.3, 0.3, 1])).toBe(true);
    expect(progressMonotone([0, 0.5, 0.4])).toBe(false);
  });
});
