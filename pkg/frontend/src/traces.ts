// Scrolling trace panes: misalignment on a log scale and per-electrode
// commanded vs realized voltage. Pure series bookkeeping plus a draw
// helper; capped windows keep memory flat at any uptime.

import { LoopFrame } from "./types.js";
import { DrawContext } from "./sphere.js";

export const TRACE_WINDOW = 600;

export interface TracePoint {
  tick: number;
  value: number;
}

export class Series {
  private pts: TracePoint[] = [];

  constructor(readonly cap: number = TRACE_WINDOW) {}

  push(tick: number, value: number): void {
    this.pts.push({ tick, value });
    if (this.pts.length > this.cap) {
      this.pts.splice(0, this.pts.length - this.cap);
    }
  }

  get points(): ReadonlyArray<TracePoint> {
    return this.pts;
  }

  get length(): number {
    return this.pts.length;
  }
}

/** Misalignment floored for the log axis; zero plots at the floor. */
export function logFloor(value: number, floor = 1e-9): number {
  return Math.log10(Math.max(value, floor));
}

export class TraceState {
  readonly misalign: Series;
  /** [stage][electrode a=0, c=1] commanded */
  cmd: Series[][] = [];
  /** [stage][electrode a=0, c=1] realized */
  out: Series[][] = [];

  constructor(readonly window: number = TRACE_WINDOW) {
    this.misalign = new Series(window);
  }

  private ensureStages(n: number): void {
    while (this.cmd.length < n) {
      this.cmd.push([new Series(this.window), new Series(this.window)]);
      this.out.push([new Series(this.window), new Series(this.window)]);
    }
  }

  accept(frame: LoopFrame): void {
    this.misalign.push(frame.tick, frame.misalign_rad);
    this.ensureStages(frame.v_cmd.length);
    for (let s = 0; s < frame.v_cmd.length; s++) {
      for (let e = 0; e < 2; e++) {
        this.cmd[s][e].push(frame.tick, frame.v_cmd[s][e]);
        this.out[s][e].push(frame.tick, frame.v_out[s][e]);
      }
    }
  }
}

export interface TraceScale {
  x(tick: number): number;
  y(value: number): number;
}

export function fitScale(
  series: ReadonlyArray<TracePoint>[],
  w: number,
  h: number,
  yLo: number,
  yHi: number,
): TraceScale {
  let tickLo = Infinity;
  let tickHi = -Infinity;
  for (const s of series) {
    if (s.length === 0) continue;
    tickLo = Math.min(tickLo, s[0].tick);
    tickHi = Math.max(tickHi, s[s.length - 1].tick);
  }
  if (!Number.isFinite(tickLo)) {
    tickLo = 0;
    tickHi = 1;
  }
  const span = Math.max(tickHi - tickLo, 1);
  const ySpan = Math.max(yHi - yLo, 1e-12);
  return {
    x: (tick) => ((tick - tickLo) / span) * (w - 2) + 1,
    y: (value) => h - 1 - ((value - yLo) / ySpan) * (h - 2),
  };
}

export function drawSeries(
  ctx: DrawContext,
  pts: ReadonlyArray<TracePoint>,
  scale: TraceScale,
  color: string,
  transform: (v: number) => number = (v) => v,
): void {
  if (pts.length < 2) return;
  ctx.strokeStyle = color;
  ctx.beginPath();
  ctx.moveTo(scale.x(pts[0].tick), scale.y(transform(pts[0].value)));
  for (let i = 1; i < pts.length; i++) {
    ctx.lineTo(scale.x(pts[i].tick), scale.y(transform(pts[i].value)));
  }
  ctx.stroke();
}
