/**
 * Live visualization: hand keypoint skeleton plus a schematic of the
 * active mechanism (rod with notch markers, rail with section
 * boundaries, rotor dial, gear pair, screw, grasp scene).
 */

export const KEYPOINT_NAMES = [
  "forearm", "wrist",
  "thumb_base", "thumb_mid", "thumb_distal", "thumb_tip",
  "index_base", "index_mid", "index_distal", "index_tip",
  "middle_base", "middle_mid", "middle_distal", "middle_tip",
  "ring_base", "ring_mid", "ring_distal", "ring_tip",
  "pinky_base", "pinky_mid", "pinky_distal", "pinky_tip",
] as const;

/** Bone segments as keypoint index pairs (digits chain off the wrist). */
export const BONES: [number, number][] = (() => {
  const bones: [number, number][] = [[0, 1]];
  for (let d = 0; d < 5; d++) {
    const base = 2 + d * 4;
    bones.push([1, base], [base, base + 1], [base + 1, base + 2], [base + 2, base + 3]);
  }
  return bones;
})();

export interface Viewport {
  cx: number;
  cy: number;
  scale: number; // px per meter
}

/** Orthographic x-z projection (side view, z up on screen). */
export function projectXZ(point: number[], vp: Viewport): [number, number] {
  return [vp.cx + point[0] * vp.scale, vp.cy - point[2] * vp.scale];
}

export function drawSkeleton(
  ctx: CanvasRenderingContext2D,
  keypoints: number[][],
  vp: Viewport,
  attached: boolean,
): void {
  ctx.save();
  ctx.strokeStyle = attached ? "#2f855a" : "#2b6cb0";
  ctx.lineWidth = 2;
  for (const [a, b] of BONES) {
    const [x1, y1] = projectXZ(keypoints[a], vp);
    const [x2, y2] = projectXZ(keypoints[b], vp);
    ctx.beginPath();
    ctx.moveTo(x1, y1);
    ctx.lineTo(x2, y2);
    ctx.stroke();
  }
  ctx.fillStyle = "#e53e3e";
  for (const tip of [5, 9, 13, 17, 21]) {
    const [x, y] = projectXZ(keypoints[tip], vp);
    ctx.beginPath();
    ctx.arc(x, y, 3, 0, 2 * Math.PI);
    ctx.fill();
  }
  ctx.restore();
}

type Mechanism = Record<string, unknown> & { type: string };

export function drawMechanism(
  ctx: CanvasRenderingContext2D,
  mechanism: Mechanism,
  objectPosition: [number, number, number],
  vp: Viewport,
): void {
  ctx.save();
  ctx.strokeStyle = "#718096";
  ctx.fillStyle = "#718096";
  ctx.lineWidth = 1.5;
  switch (mechanism.type) {
    case "notch_rod": {
      const total = mechanism.total as number;
      const passed = mechanism.passed as number;
      const [ox, oy] = projectXZ(objectPosition, vp);
      const baseY = oy + (mechanism.z as number) * vp.scale;
      ctx.beginPath();
      ctx.moveTo(ox, baseY);
      ctx.lineTo(ox, baseY - 0.15 * vp.scale);
      ctx.stroke();
      for (let i = 0; i < total; i++) {
        const ny = baseY - 0.03 * (i + 1) * vp.scale;
        ctx.strokeStyle = i < passed ? "#2f855a" : "#e53e3e";
        ctx.beginPath();
        ctx.moveTo(ox - 10, ny);
        ctx.lineTo(ox + 10, ny);
        ctx.stroke();
      }
      ctx.fillStyle = "#2b6cb0";
      ctx.beginPath();
      ctx.arc(ox, oy, 6, 0, 2 * Math.PI);
      ctx.fill();
      break;
    }
    case "curved_rail": {
      const total = mechanism.total as number;
      const cleared = mechanism.cleared as number;
      const [ox, oy] = projectXZ(objectPosition, vp);
      const startX = ox - (mechanism.s as number) * vp.scale;
      ctx.beginPath();
      ctx.moveTo(startX, oy);
      ctx.lineTo(startX + 0.25 * vp.scale, oy);
      ctx.stroke();
      for (let i = 1; i <= total; i++) {
        const bx = startX + ((0.25 * i) / total) * vp.scale;
        ctx.strokeStyle = i <= cleared ? "#2f855a" : "#e53e3e";
        ctx.beginPath();
        ctx.moveTo(bx, oy - 8);
        ctx.lineTo(bx, oy + 8);
        ctx.stroke();
      }
      ctx.fillStyle = "#2b6cb0";
      ctx.beginPath();
      ctx.arc(ox, oy, 6, 0, 2 * Math.PI);
      ctx.fill();
      break;
    }
    case "rotor":
    case "gear": {
      const [ox, oy] = projectXZ(objectPosition, vp);
      const r = 24;
      const angle = (mechanism.type === "rotor"
        ? (mechanism.theta as number)
        : (mechanism.input as number));
      ctx.beginPath();
      ctx.arc(ox, oy, r, 0, 2 * Math.PI);
      ctx.stroke();
      ctx.beginPath();
      ctx.moveTo(ox, oy);
      ctx.lineTo(ox + r * Math.cos(-angle), oy + r * Math.sin(-angle));
      ctx.stroke();
      const acc = mechanism.type === "rotor"
        ? (mechanism.accumulated as number)
        : Math.abs(mechanism.output as number);
      ctx.strokeStyle = "#2f855a";
      ctx.beginPath();
      ctx.arc(ox, oy, r + 6, -Math.PI / 2, -Math.PI / 2 + Math.min(acc, 2 * Math.PI));
      ctx.stroke();
      break;
    }
    case "screw": {
      const [ox, oy] = projectXZ(objectPosition, vp);
      const frac = Math.min((mechanism.x as number) / (mechanism.travel as number), 1);
      ctx.strokeRect(ox - 8, oy, 16, 20);
      ctx.fillStyle = mechanism.removed ? "#2f855a" : "#2b6cb0";
      ctx.fillRect(ox - 8, oy, 16, 20 * (1 - frac));
      break;
    }
    case "grasp": {
      const [ox, oy] = projectXZ(objectPosition, vp);
      ctx.fillStyle = mechanism.phase === "relocated" ? "#2f855a" : "#2b6cb0";
      ctx.beginPath();
      ctx.arc(ox, oy, 8, 0, 2 * Math.PI);
      ctx.fill();
      const [tx, ty] = projectXZ([0.17, 0, 0.05], vp);
      ctx.strokeStyle = "#975a16";
      ctx.strokeRect(tx - 0.05 * vp.scale, ty - 0.08 * vp.scale, 0.1 * vp.scale, 0.12 * vp.scale);
      ctx.fillStyle = "#4a5568";
      ctx.font = "10px sans-serif";
      ctx.fillText(String(mechanism.phase), ox - 16, oy - 14);
      break;
    }
  }
  ctx.restore();
}

export function drawProgressBar(
  ctx: CanvasRenderingContext2D,
  progress: number,
  x: number,
  y: number,
  width: number,
): void {
  ctx.save();
  ctx.strokeStyle = "#4a5568";
  ctx.strokeRect(x, y, width, 12);
  ctx.fillStyle = "#2f855a";
  ctx.fillRect(x, y, width * Math.min(progress, 1), 12);
  ctx.restore();
}
