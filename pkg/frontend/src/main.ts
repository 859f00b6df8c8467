/**
 * Browser entry: wires the store, session client, pickers, sliders,
 * keyboard wrist control, canvas rendering, and the record panel.
 */

import { SessionClient } from "./client.js";
import { jointVector, sliderSpecs, wristAxes, type SliderSpec } from "./input.js";
import type { EmbodimentSummary, TaskSummary } from "./protocol.js";
import { buildRadarCharts, drawRadar, type ReportRadarData } from "./radar.js";
import { drawMechanism, drawProgressBar, drawSkeleton, type Viewport } from "./skeleton.js";
import {
  applyServerMessage,
  displayedScore,
  initialState,
  isStale,
  type ConsoleState,
} from "./state.js";

let state: ConsoleState = initialState();
const sliderValues = new Map<string, number>();
let wristOffset = { x: 0, y: 0, z: 0 };
let client: SessionClient | null = null;
let trialStartWall: number | null = null;

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) throw new Error(`missing element #${id}`);
  return found as T;
}

async function fetchJson<T>(path: string): Promise<T> {
  const res = await fetch(path);
  if (!res.ok) throw new Error(`${path}: ${res.status}`);
  return (await res.json()) as T;
}

function selectedTask(): TaskSummary | null {
  return state.tasks.find((t) => t.id === state.selectedTask) ?? null;
}

function selectedEmbodiment(): EmbodimentSummary | null {
  return state.embodiments.find((e) => e.name === state.selectedEmbodiment) ?? null;
}

function rebuildSliders(): void {
  const panel = el<HTMLDivElement>("sliders");
  panel.innerHTML = "";
  sliderValues.clear();
  const emb = selectedEmbodiment();
  if (!emb) return;
  for (const spec of sliderSpecs(emb)) {
    const row = document.createElement("div");
    row.className = "slider-row";
    const label = document.createElement("label");
    label.textContent = spec.joint;
    const input = document.createElement("input");
    input.type = "range";
    input.min = "-1.57";
    input.max = "1.92";
    input.step = "0.01";
    input.value = "0";
    input.dataset.joint = spec.joint;
    input.addEventListener("input", () => {
      sliderValues.set(spec.joint, parseFloat(input.value));
    });
    row.append(label, input);
    panel.append(row);
  }
}

function rebuildWristControls(): void {
  const task = selectedTask();
  const axes = task ? wristAxes(task) : { x: false, y: false, z: false, rotation: false };
  const panel = el<HTMLDivElement>("wrist-help");
  const parts: string[] = [];
  if (axes.x) parts.push("A/D: x");
  if (axes.y) parts.push("Q/E: y");
  if (axes.z) parts.push("W/S: z");
  panel.textContent = parts.length
    ? `wrist keys - ${parts.join("  ")}`
    : "wrist fixed for this task";
}

function sendInputs(): void {
  if (!client || !state.session || state.session.status !== "running") return;
  const emb = selectedEmbodiment();
  if (!emb) return;
  const q = jointVector(sliderSpecs(emb), sliderValues);
  const elapsed = trialStartWall === null ? 0 : (performance.now() - trialStartWall) / 1000;
  client.sendInput(performance.now(), elapsed, {
    joints: q,
    wrist: {
      position: [wristOffset.x, wristOffset.y, wristOffset.z],
      quaternion: [1, 0, 0, 0],
    },
  });
}

function onKey(event: KeyboardEvent): void {
  const task = selectedTask();
  if (!task) return;
  const axes = wristAxes(task);
  const step = 0.002;
  const k = event.key.toLowerCase();
  if (axes.z && k === "w") wristOffset.z += step;
  else if (axes.z && k === "s") wristOffset.z -= step;
  else if (axes.x && k === "d") wristOffset.x += step;
  else if (axes.x && k === "a") wristOffset.x -= step;
  else if (axes.y && k === "e") wristOffset.y += step;
  else if (axes.y && k === "q") wristOffset.y -= step;
}

function render(): void {
  const canvas = el<HTMLCanvasElement>("view");
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const vp: Viewport = { cx: canvas.width / 2 - 120, cy: canvas.height / 2 + 120, scale: 900 };

  const s = state.session;
  if (s) {
    drawMechanism(ctx, s.mechanism, s.object.position, vp);
    drawSkeleton(ctx, s.keypoints, vp, s.attached);
    drawProgressBar(ctx, s.progress, 20, 20, 220);
    ctx.fillStyle = "#1a202c";
    ctx.font = "12px sans-serif";
    ctx.fillText(`progress ${(s.progress * 100).toFixed(0)}%`, 250, 30);
    ctx.fillText(`elapsed ${s.elapsed.toFixed(1)} s`, 20, 50);
    const score = displayedScore(state);
    if (score) {
      ctx.fillText(
        `score ${score.score.toFixed(3)} (c=${score.correctness.toFixed(2)}, v=${score.speed.toFixed(2)})`,
        20,
        66,
      );
    }
  }

  el<HTMLDivElement>("banner").style.display =
    state.connection === "connected" ? "none" : "block";
  el<HTMLDivElement>("stale").style.display = isStale(state, performance.now())
    ? "block"
    : "none";

  const rec = state.record;
  const panel = el<HTMLDivElement>("record-panel");
  if (rec) {
    panel.textContent =
      `trial ${rec.trial_id ?? "-"} | task ${rec.record.task_id} | ` +
      `c=${rec.score.correctness} v=${rec.score.speed} score=${rec.score.score}`;
  }
  requestAnimationFrame(render);
}

async function refreshReports(): Promise<void> {
  try {
    const report = await fetchJson<{ radar: ReportRadarData }>("/reports");
    const charts = buildRadarCharts(report.radar);
    const canvas = el<HTMLCanvasElement>("radar");
    const ctx = canvas.getContext("2d");
    if (!ctx) return;
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    drawRadar(ctx, charts.manipulation, 170, 170, 110, "manipulation (12)");
    drawRadar(ctx, charts.grasp, 470, 170, 110, "grasping (6)");
  } catch {
    // no reports yet
  }
}

async function boot(): Promise<void> {
  state = { ...state, connection: "connecting" };
  const tasks = await fetchJson<{ tasks: TaskSummary[] }>("/tasks");
  const embodiments = await fetchJson<{ embodiments: EmbodimentSummary[] }>("/embodiments");
  state = {
    ...state,
    tasks: tasks.tasks,
    embodiments: embodiments.embodiments,
    selectedTask: tasks.tasks[0]?.id ?? null,
    selectedEmbodiment: embodiments.embodiments[0]?.name ?? null,
  };

  const taskPicker = el<HTMLSelectElement>("task-picker");
  taskPicker.innerHTML = "";
  for (const t of state.tasks) {
    const opt = document.createElement("option");
    opt.value = t.id;
    opt.textContent = `${t.id} ${t.name}`;
    taskPicker.append(opt);
  }
  taskPicker.addEventListener("change", () => {
    state = { ...state, selectedTask: taskPicker.value };
    rebuildWristControls();
  });

  const embPicker = el<HTMLSelectElement>("embodiment-picker");
  embPicker.innerHTML = "";
  for (const e of state.embodiments) {
    const opt = document.createElement("option");
    opt.value = e.name;
    opt.textContent = `${e.name} (${e.dof_count} DoF)`;
    embPicker.append(opt);
  }
  embPicker.addEventListener("change", () => {
    state = { ...state, selectedEmbodiment: embPicker.value };
    rebuildSliders();
  });

  client = new SessionClient({
    url: `ws://${location.host}/ws`,
    socketFactory: (url) => new WebSocket(url) as unknown as import("./client.js").SocketLike,
    onMessage: (msg) => {
      state = applyServerMessage(state, msg, performance.now());
    },
    onConnectionChange: (connected) => {
      state = { ...state, connection: connected ? "connected" : "disconnected" };
    },
  });
  await client.connect();

  el<HTMLButtonElement>("create").addEventListener("click", () => {
    const task = state.selectedTask;
    const emb = state.selectedEmbodiment;
    if (task && emb) {
      state = { ...state, record: null };
      wristOffset = { x: 0, y: 0, z: 0 };
      client!.createSession(task, emb);
    }
  });
  el<HTMLButtonElement>("start").addEventListener("click", () => {
    trialStartWall = performance.now();
    client!.startTrial();
  });
  el<HTMLButtonElement>("finalize").addEventListener("click", () => {
    client!.finalize();
    void refreshReports();
  });

  document.addEventListener("keydown", onKey);
  setInterval(sendInputs, 1000 / 50); // 50 Hz, under the 100 Hz ceiling
  rebuildSliders();
  rebuildWristControls();
  void refreshReports();
  requestAnimationFrame(render);
}

void boot();
