// Poincare-sphere rendering math. Everything here is geometry for putting
// service-supplied vectors on screen; no polarization physics happens in
// the client.

import { Vec3 } from "./types.js";
import { Vec3Trail } from "./view.js";

/** Orbitable orthographic camera over the unit sphere. */
export interface Camera {
  yawRad: number;
  pitchRad: number;
  radiusPx: number;
  cx: number;
  cy: number;
}

export function defaultCamera(w: number, h: number): Camera {
  return {
    yawRad: -0.5,
    pitchRad: 0.35,
    radiusPx: 0.4 * Math.min(w, h),
    cx: w / 2,
    cy: h / 2,
  };
}

export interface Projected {
  x: number;
  y: number;
  /** toward-viewer component in [-1, 1]; negative = far hemisphere */
  depth: number;
}

/** Rotate into camera frame: yaw about s3 (vertical), then pitch. */
function toCameraFrame(v: Vec3 | number[], cam: Camera): Vec3 {
  const cy = Math.cos(cam.yawRad);
  const sy = Math.sin(cam.yawRad);
  const x1 = cy * v[0] + sy * v[1];
  const y1 = -sy * v[0] + cy * v[1];
  const z1 = v[2];
  const cp = Math.cos(cam.pitchRad);
  const sp = Math.sin(cam.pitchRad);
  // pitch tilts the pole toward the viewer
  return [x1, cp * y1 + sp * z1, -sp * y1 + cp * z1];
}

function fromCameraFrame(v: Vec3, cam: Camera): Vec3 {
  const cp = Math.cos(cam.pitchRad);
  const sp = Math.sin(cam.pitchRad);
  const y1 = cp * v[1] - sp * v[2];
  const z1 = sp * v[1] + cp * v[2];
  const cy = Math.cos(cam.yawRad);
  const sy = Math.sin(cam.yawRad);
  return [cy * v[0] - sy * y1, sy * v[0] + cy * y1, z1];
}

/** Orthographic projection; screen y grows downward. */
export function project(v: Vec3 | number[], cam: Camera): Projected {
  const c = toCameraFrame(v, cam);
  return {
    x: cam.cx + cam.radiusPx * c[0],
    y: cam.cy - cam.radiusPx * c[2],
    depth: c[1],
  };
}

/**
 * Invert a click back onto the front hemisphere of the unit sphere.
 * Returns the renormalized unit vector, or null outside the disk.
 */
export function unproject(
  x: number,
  y: number,
  cam: Camera,
): Vec3 | null {
  const u = (x - cam.cx) / cam.radiusPx;
  const w = (cam.cy - y) / cam.radiusPx;
  const r2 = u * u + w * w;
  if (r2 > 1) return null;
  const depth = Math.sqrt(1 - r2);
  const v = fromCameraFrame([u, depth, w], cam);
  const n = Math.hypot(v[0], v[1], v[2]);
  return [v[0] / n, v[1] / n, v[2] / n];
}

/** Wireframe polylines (meridians + parallels) on the unit sphere. */
export function wireframe(meridians = 12, parallels = 5, steps = 48): Vec3[][] {
  const lines: Vec3[][] = [];
  for (let m = 0; m < meridians; m++) {
    const phi = (Math.PI * m) / meridians;
    const line: Vec3[] = [];
    for (let i = 0; i <= steps; i++) {
      const t = (2 * Math.PI * i) / steps;
      line.push([
        Math.cos(phi) * Math.sin(t),
        Math.sin(phi) * Math.sin(t),
        Math.cos(t),
      ]);
    }
    lines.push(line);
  }
  for (let p = 1; p <= parallels; p++) {
    const z = Math.cos((Math.PI * p) / (parallels + 1));
    const r = Math.sqrt(1 - z * z);
    const line: Vec3[] = [];
    for (let i = 0; i <= steps; i++) {
      const t = (2 * Math.PI * i) / steps;
      line.push([r * Math.cos(t), r * Math.sin(t), z]);
    }
    lines.push(line);
  }
  return lines;
}

// Minimal slice of CanvasRenderingContext2D the renderer uses; tests pass
// a recording fake.
export interface DrawContext {
  strokeStyle: string | CanvasGradient | CanvasPattern;
  fillStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  globalAlpha: number;
  font: string;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  stroke(): void;
  fill(): void;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  fillText(text: string, x: number, y: number): void;
}

function polyline(ctx: DrawContext, pts: Projected[]): void {
  if (pts.length < 2) return;
  ctx.beginPath();
  ctx.moveTo(pts[0].x, pts[0].y);
  for (let i = 1; i < pts.length; i++) ctx.lineTo(pts[i].x, pts[i].y);
  ctx.stroke();
}

function marker(
  ctx: DrawContext,
  p: Projected,
  r: number,
  color: string,
): void {
  ctx.beginPath();
  ctx.fillStyle = color;
  ctx.globalAlpha = p.depth < 0 ? 0.35 : 1.0;
  ctx.arc(p.x, p.y, r, 0, 2 * Math.PI);
  ctx.fill();
  ctx.globalAlpha = 1.0;
}

export interface SphereColors {
  wire: string;
  trail: string;
  measured: string;
  target: string;
  launch: string;
}

export const SPHERE_COLORS: SphereColors = {
  wire: "#39404d",
  trail: "#5aa0ff",
  measured: "#6fe3a5",
  target: "#ffb454",
  launch: "#c792ea",
};

/**
 * Draw the 3-D view: wireframe, the recent-SOP trail, and markers for
 * measured, target, and launch states.
 */
export function drawSphere(
  ctx: DrawContext,
  cam: Camera,
  w: number,
  h: number,
  trail: Vec3Trail,
  measured: number[],
  target: Vec3 | null,
  launch: number[],
  colors: SphereColors = SPHERE_COLORS,
): void {
  ctx.clearRect(0, 0, w, h);
  ctx.lineWidth = 1;
  ctx.strokeStyle = colors.wire;
  for (const line of wireframe()) {
    // split each polyline at hemisphere crossings so the far side fades
    let run: Projected[] = [];
    let farRun = false;
    for (const v of line) {
      const p = project(v, cam);
      const far = p.depth < 0;
      if (run.length > 0 && far !== farRun) {
        ctx.globalAlpha = farRun ? 0.25 : 0.8;
        polyline(ctx, run);
        run = [run[run.length - 1]];
      }
      run.push(p);
      farRun = far;
    }
    ctx.globalAlpha = farRun ? 0.25 : 0.8;
    polyline(ctx, run);
  }
  ctx.globalAlpha = 0.9;
  ctx.strokeStyle = colors.trail;
  polyline(
    ctx,
    trail.map((v) => project(v, cam)),
  );
  ctx.globalAlpha = 1.0;
  marker(ctx, project(measured, cam), 5, colors.measured);
  if (target) marker(ctx, project(target, cam), 4, colors.target);
  marker(ctx, project(launch, cam), 3, colors.launch);
}

/**
 * Draw the 2-D isometric pane. The marker lands at exactly the
 * service-reported (px, py): the canvas is sized to the service screen and
 * no client-side transform is applied, so the UI cannot disagree with the
 * primary pipeline about where a state plots.
 */
export function drawPane(
  ctx: DrawContext,
  w: number,
  h: number,
  pixelTrail: Array<[number, number]>,
  px: number,
  py: number,
  color = SPHERE_COLORS.measured,
): void {
  ctx.clearRect(0, 0, w, h);
  ctx.globalAlpha = 0.7;
  ctx.fillStyle = SPHERE_COLORS.trail;
  for (const [tx, ty] of pixelTrail) {
    ctx.fillRect(tx, ty, 1, 1);
  }
  ctx.globalAlpha = 1.0;
  ctx.beginPath();
  ctx.fillStyle = color;
  ctx.arc(px, py, 3, 0, 2 * Math.PI);
  ctx.fill();
}
