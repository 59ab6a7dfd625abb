// Client-side view state derived from the frame stream: the latest frame
// plus a capped trail of recent measured SOPs for the converging-run
// spiral. Physics values pass through untouched.

import { LoopFrame } from "./types.js";

export const TRAIL_CAP = 240;

export interface ViewFrame {
  frame: LoopFrame;
  /** recent measured SOPs, oldest first, newest == frame.sop_meas */
  trail: Vec3Trail;
}

export type Vec3Trail = Array<[number, number, number]>;

export class ViewState {
  private trail: Vec3Trail = [];
  private current: LoopFrame | null = null;
  /** wall-clock ms of the last accepted frame, for the stale indicator */
  lastFrameAt = 0;

  constructor(readonly trailCap: number = TRAIL_CAP) {}

  accept(frame: LoopFrame, nowMs: number): ViewFrame {
    const s = frame.sop_meas;
    this.trail.push([s[0], s[1], s[2]]);
    if (this.trail.length > this.trailCap) {
      this.trail.splice(0, this.trail.length - this.trailCap);
    }
    this.current = frame;
    this.lastFrameAt = nowMs;
    return { frame, trail: this.trail };
  }

  latest(): ViewFrame | null {
    if (this.current === null) return null;
    return { frame: this.current, trail: this.trail };
  }

  /** No frame for over a second counts as stale (liveness contract). */
  isStale(nowMs: number, timeoutMs = 1000): boolean {
    return this.lastFrameAt > 0 && nowMs - this.lastFrameAt > timeoutMs;
  }

  get trailLength(): number {
    return this.trail.length;
  }
}
