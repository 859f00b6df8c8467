/**
 * Radar chart geometry and canvas rendering for benchmark reports:
 * a 12-spoke manipulation chart and a 6-spoke grasping chart, one
 * series per embodiment.
 */

export interface RadarSeries {
  name: string;
  values: (number | null)[];
}

export interface RadarPoint {
  x: number;
  y: number;
}

/** Polygon vertices for one series, spoke 0 pointing up, clockwise. */
export function radarPoints(
  values: (number | null)[],
  cx: number,
  cy: number,
  radius: number,
  maxValue: number,
): RadarPoint[] {
  const n = values.length;
  return values.map((v, i) => {
    const angle = -Math.PI / 2 + (2 * Math.PI * i) / n;
    const r = ((v ?? 0) / maxValue) * radius;
    return { x: cx + r * Math.cos(angle), y: cy + r * Math.sin(angle) };
  });
}

export interface ReportRadarData {
  manipulation_labels: string[];
  grasp_labels: string[];
  embodiments: Record<string, { manipulation: (number | null)[]; grasp: (number | null)[] }>;
}

export interface RadarChart {
  labels: string[];
  series: RadarSeries[];
}

/** Split a report's radar block into the two charts. */
export function buildRadarCharts(data: ReportRadarData): { manipulation: RadarChart; grasp: RadarChart } {
  const names = Object.keys(data.embodiments).sort();
  return {
    manipulation: {
      labels: data.manipulation_labels,
      series: names.map((name) => ({ name, values: data.embodiments[name].manipulation })),
    },
    grasp: {
      labels: data.grasp_labels,
      series: names.map((name) => ({ name, values: data.embodiments[name].grasp })),
    },
  };
}

const SERIES_COLORS = ["#2b6cb0", "#c05621", "#2f855a", "#975a16", "#6b46c1"];

export function drawRadar(
  ctx: CanvasRenderingContext2D,
  chart: RadarChart,
  cx: number,
  cy: number,
  radius: number,
  title: string,
): void {
  const maxValue = Math.max(
    1,
    ...chart.series.flatMap((s) => s.values.map((v) => v ?? 0)),
  );
  const n = chart.labels.length;
  ctx.save();
  ctx.strokeStyle = "#cbd5e0";
  ctx.fillStyle = "#4a5568";
  ctx.font = "10px sans-serif";
  for (let ring = 1; ring <= 4; ring++) {
    ctx.beginPath();
    ctx.arc(cx, cy, (radius * ring) / 4, 0, 2 * Math.PI);
    ctx.stroke();
  }
  for (let i = 0; i < n; i++) {
    const angle = -Math.PI / 2 + (2 * Math.PI * i) / n;
    ctx.beginPath();
    ctx.moveTo(cx, cy);
    ctx.lineTo(cx + radius * Math.cos(angle), cy + radius * Math.sin(angle));
    ctx.stroke();
    ctx.fillText(
      chart.labels[i],
      cx + (radius + 12) * Math.cos(angle) - 8,
      cy + (radius + 12) * Math.sin(angle) + 3,
    );
  }
  chart.series.forEach((s, si) => {
    const pts = radarPoints(s.values, cx, cy, radius, maxValue);
    ctx.strokeStyle = SERIES_COLORS[si % SERIES_COLORS.length];
    ctx.fillStyle = SERIES_COLORS[si % SERIES_COLORS.length] + "22";
    ctx.beginPath();
    pts.forEach((p, i) => (i === 0 ? ctx.moveTo(p.x, p.y) : ctx.lineTo(p.x, p.y)));
    ctx.closePath();
    ctx.fill();
    ctx.stroke();
  });
  ctx.fillStyle = "#1a202c";
  ctx.font = "12px sans-serif";
  ctx.fillText(title, cx - radius, cy - radius - 16);
  ctx.restore();
}
