import { describe, expect, it } from "vitest";
import { buildRadarCharts, radarPoints, type ReportRadarData } from "../src/radar.js";

const REPORT_RADAR: ReportRadarData = {
  manipulation_labels: ["V1", "V2", "V3", "H1", "H2", "H3", "H4", "H5", "C1", "C2", "C3", "C4"],
  grasp_labels: ["G1", "G2", "G3", "G4", "G5", "G6"],
  embodiments: {
    hand_full: { manipulation: new Array(12).fill(1), grasp: new Array(6).fill(1) },
    hand_2: { manipulation: new Array(12).fill(0.5), grasp: new Array(6).fill(0.8) },
  },
};

describe("buildRadarCharts", () => {
  it("splits a full report into 12-spoke and 6-spoke charts", () => {
    const { manipulation, grasp } = buildRadarCharts(REPORT_RADAR);
    expect(manipulation.labels).toHaveLength(12);
    expect(grasp.labels).toHaveLength(6);
    expect(manipulation.series).toHaveLength(2);
    expect(manipulation.series.map((s) => s.name)).toEqual(["hand_2", "hand_full"]);
    expect(grasp.series[1].values).toHaveLength(6);
  });
});

describe("radarPoints", () => {
  it("places equal values on a circle", () => {
    const pts = radarPoints(new Array(6).fill(1), 0, 0, 100, 1);
    for (const p of pts) {
      expect(Math.hypot(p.x, p.y)).toBeCloseTo(100, 9);
    }
  });

  it("spoke zero points up and zero values collapse to the center", () => {
    const pts = radarPoints([1, 0, 0], 10, 20, 50, 1);
    expect(pts[0].x).toBeCloseTo(10, 9);
    expect(pts[0].y).toBeCloseTo(-30, 9);
    expect(pts[1]).toEqual({ x: 10, y: 20 });
  });

  it("treats missing values as zero", () => {
    const pts = radarPoints([null, 1], 0, 0, 10, 1);
    expect(pts[0]).toEqual({ x: 0, y: 0 });
  });
});
