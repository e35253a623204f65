/** Canvas arena renderer.
 *
 * Draws only what the model holds; there is no interpolation and no
 * motion prediction. The robot is the single transformed drawing on
 * the canvas: exactly one translate/rotate pair per frame places it,
 * so tools (and tests) may read the robot's rendered pose back from
 * those two calls.
 */

import type { UiModel } from "./model.js";

/** The slice of CanvasRenderingContext2D the renderer touches. */
export interface Ctx2D {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  textAlign: CanvasTextAlign;
  textBaseline: CanvasTextBaseline;
  globalAlpha: number;
  save(): void;
  restore(): void;
  translate(x: number, y: number): void;
  rotate(angle: number): void;
  beginPath(): void;
  closePath(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  rect(x: number, y: number, w: number, h: number): void;
  fill(): void;
  stroke(): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillText(text: string, x: number, y: number): void;
  setLineDash(segments: number[]): void;
}

export const ROBOT_DRAW_RADIUS = 0.08; // display size in meters
export const BEAM_MAX = 0.4; // display length of an empty beam
export const BEAM_ALARM = 0.05; // readings under this draw in alarm color

export const COLORS = {
  floor: "#11151c",
  wall: "#3b4354",
  grid: "#1c2230",
  obstacle: "#58617a",
  object: "#9fb4d8",
  objectHeld: "#ffd479",
  fixed: "#707a92",
  robot: "#5ac8fa",
  beam: "#3f9d62",
  beamAlarm: "#ff5f56",
  text: "#c8d3e8",
};

export interface ArenaTransform {
  scale: number;
  px(x: number): number;
  py(y: number): number;
}

/** Meters-to-pixels mapping that fits the bounds into the canvas. */
export function arenaTransform(
  bounds: [number, number, number, number],
  width: number,
  height: number,
  pad = 16,
): ArenaTransform {
  const [xmin, ymin, xmax, ymax] = bounds;
  const scale = Math.min((width - 2 * pad) / (xmax - xmin), (height - 2 * pad) / (ymax - ymin));
  return {
    scale,
    px: (x: number) => pad + (x - xmin) * scale,
    py: (y: number) => height - pad - (y - ymin) * scale,
  };
}

export function renderArena(ctx: Ctx2D, model: UiModel, width: number, height: number): void {
  const t = arenaTransform(model.bounds, width, height);
  const [xmin, ymin, xmax, ymax] = model.bounds;

  ctx.fillStyle = COLORS.floor;
  ctx.fillRect(0, 0, width, height);

  ctx.strokeStyle = COLORS.grid;
  ctx.lineWidth = 1;
  ctx.setLineDash([]);
  for (let gx = Math.ceil(xmin * 2) / 2; gx <= xmax; gx += 0.5) {
    ctx.beginPath();
    ctx.moveTo(t.px(gx), t.py(ymin));
    ctx.lineTo(t.px(gx), t.py(ymax));
    ctx.stroke();
  }
  for (let gy = Math.ceil(ymin * 2) / 2; gy <= ymax; gy += 0.5) {
    ctx.beginPath();
    ctx.moveTo(t.px(xmin), t.py(gy));
    ctx.lineTo(t.px(xmax), t.py(gy));
    ctx.stroke();
  }

  ctx.strokeStyle = COLORS.wall;
  ctx.lineWidth = 2;
  ctx.strokeRect(t.px(xmin), t.py(ymax), (xmax - xmin) * t.scale, (ymax - ymin) * t.scale);

  for (const obs of model.obstacles) {
    ctx.fillStyle = COLORS.obstacle;
    ctx.beginPath();
    ctx.arc(t.px(obs.x), t.py(obs.y), obs.radius * t.scale, 0, Math.PI * 2);
    ctx.fill();
  }

  ctx.font = "11px system-ui, sans-serif";
  ctx.textAlign = "center";
  ctx.textBaseline = "bottom";
  for (const obj of model.objects) {
    if (obj.held) continue; // rides the gripper; drawn with the robot
    ctx.strokeStyle = obj.graspable ? COLORS.object : COLORS.fixed;
    ctx.lineWidth = 2;
    ctx.setLineDash(obj.graspable ? [] : [3, 2]);
    ctx.beginPath();
    ctx.arc(t.px(obj.x), t.py(obj.y), obj.radius * t.scale, 0, Math.PI * 2);
    ctx.stroke();
    ctx.fillStyle = COLORS.text;
    ctx.fillText(obj.name, t.px(obj.x), t.py(obj.y + obj.radius) - 3);
  }
  ctx.setLineDash([]);

  const snap = model.snapshot;
  if (!snap) return;

  // the robot: the one and only transformed drawing
  ctx.save();
  ctx.translate(t.px(snap.x), t.py(snap.y));
  ctx.rotate(-snap.heading); // canvas y points down, world y points up

  const r = ROBOT_DRAW_RADIUS * t.scale;

  // range beam, out along +x after the rotation
  const reading = snap.range;
  const beamLen = (reading ?? BEAM_MAX) * t.scale;
  ctx.strokeStyle = reading !== null && reading < BEAM_ALARM ? COLORS.beamAlarm : COLORS.beam;
  ctx.lineWidth = reading === null ? 1 : 2;
  ctx.setLineDash(reading === null ? [4, 4] : []);
  ctx.beginPath();
  ctx.moveTo(r, 0);
  ctx.lineTo(r + beamLen, 0);
  ctx.stroke();
  ctx.setLineDash([]);

  // body and heading wedge
  ctx.fillStyle = COLORS.robot;
  ctx.globalAlpha = 0.25;
  ctx.beginPath();
  ctx.arc(0, 0, r, 0, Math.PI * 2);
  ctx.fill();
  ctx.globalAlpha = 1;
  ctx.strokeStyle = COLORS.robot;
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.arc(0, 0, r, 0, Math.PI * 2);
  ctx.stroke();
  ctx.beginPath();
  ctx.moveTo(0, 0);
  ctx.lineTo(r, 0);
  ctx.stroke();

  // gripper claws at the front, spread when open
  const spread = snap.grip === "open" ? 0.5 : 0.15;
  ctx.beginPath();
  ctx.moveTo(r * 0.6, -r * spread - r * 0.2);
  ctx.lineTo(r * 1.3, -r * spread);
  ctx.moveTo(r * 0.6, r * spread + r * 0.2);
  ctx.lineTo(r * 1.3, r * spread);
  ctx.stroke();

  // anything held rides just past the claws
  if (snap.holding) {
    const held = model.objects.find((o) => o.name === snap.holding);
    const heldR = (held ? held.radius : 0.03) * t.scale;
    ctx.strokeStyle = COLORS.objectHeld;
    ctx.beginPath();
    ctx.arc(r + heldR, 0, heldR, 0, Math.PI * 2);
    ctx.stroke();
  }

  // lift gauge beside the body
  const gaugeH = r * 1.6;
  const liftFrac = Math.max(0, Math.min(1, snap.lift / 0.06));
  ctx.strokeStyle = COLORS.robot;
  ctx.lineWidth = 1;
  ctx.strokeRect(-r * 1.6, -gaugeH / 2, r * 0.3, gaugeH);
  ctx.fillStyle = COLORS.robot;
  ctx.fillRect(-r * 1.6, gaugeH / 2 - gaugeH * liftFrac, r * 0.3, gaugeH * liftFrac);

  ctx.restore();

  // HUD
  ctx.fillStyle = COLORS.text;
  ctx.font = "12px ui-monospace, monospace";
  ctx.textAlign = "left";
  ctx.textBaseline = "top";
  const pose = `tick ${snap.tick}  x ${snap.x.toFixed(3)}  y ${snap.y.toFixed(3)}  heading ${snap.heading.toFixed(3)}`;
  ctx.fillText(pose, 8, 6);
}
