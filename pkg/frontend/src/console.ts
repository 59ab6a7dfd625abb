// Headless console core: everything the operator UI does that is not
// literally painting pixels or reading DOM events. Keeping it DOM-free
// makes the full command/stream behavior testable.

import { FrameBuffer } from "./framebuffer.js";
import { CommandClient, SchemaMismatch, SendResult } from "./protocol.js";
import { TraceState } from "./traces.js";
import { CommandEvent, LoopFrame, Vec3 } from "./types.js";
import { ViewState } from "./view.js";

export const FRAMEBUFFER_DEPTH = 120;
export const PIXEL_TRAIL_CAP = 400;

/** A sent command awaiting its echo in the frame stream. */
export interface PendingCommand {
  seq: number;
  kind: string;
  sentAtMs: number;
}

export interface BannerState {
  text: string;
  fatal: boolean;
}

/**
 * Single-threaded console state machine. The stream side calls
 * ingest(line); the render side calls renderTick(now) and reads the public
 * fields. No work happens outside those two entry points.
 */
export class Console {
  readonly buffer = new FrameBuffer<LoopFrame>(FRAMEBUFFER_DEPTH);
  readonly view = new ViewState();
  readonly traces = new TraceState();
  readonly pixelTrail: Array<[number, number]> = [];
  pending: PendingCommand | null = null;
  banner: BannerState | null = null;
  target: Vec3 | null = null;
  /** set when a schema mismatch permanently stops rendering */
  halted = false;
  lastErrors: string[] = [];

  constructor(
    private readonly client: CommandClient,
    private readonly parse: (line: string) => LoopFrame,
  ) {}

  /** Stream side: one NDJSON line in, buffered frame out. */
  ingest(line: string): void {
    if (this.halted) return;
    let frame: LoopFrame;
    try {
      frame = this.parse(line);
    } catch (err) {
      if (err instanceof SchemaMismatch) {
        this.banner = { text: err.message, fatal: true };
        this.halted = true;
        return;
      }
      this.banner = { text: String(err), fatal: false };
      return;
    }
    this.buffer.push(frame);
  }

  /**
   * Render side: drain the buffer, fold every frame into the view and
   * trace state, and return the frame to paint (null when idle/halted).
   */
  renderTick(nowMs: number): LoopFrame | null {
    if (this.halted) return null;
    const frames = this.buffer.drain();
    for (const frame of frames) {
      this.view.accept(frame, nowMs);
      this.traces.accept(frame);
      this.pixelTrail.push([frame.px, frame.py]);
      if (this.pixelTrail.length > PIXEL_TRAIL_CAP) {
        this.pixelTrail.splice(0, this.pixelTrail.length - PIXEL_TRAIL_CAP);
      }
      if (frame.errors.length > 0) this.lastErrors = frame.errors;
      this.matchPending(frame);
    }
    return this.view.latest()?.frame ?? null;
  }

  private matchPending(frame: LoopFrame): void {
    if (!this.pending) return;
    for (const ev of frame.applied) {
      if (ev.client_id === this.client.clientId && ev.seq === this.pending.seq) {
        this.pending = null;
        if (this.banner && !this.banner.fatal) this.banner = null;
        return;
      }
    }
  }

  isStale(nowMs: number): boolean {
    return this.view.isStale(nowMs);
  }

  /**
   * Send a command; on acceptance an optimistic pending marker stays up
   * until the echoing frame clears it, and rejections surface verbatim.
   */
  async send(event: CommandEvent, nowMs: number): Promise<SendResult> {
    const result = await this.client.send(event);
    if (result.ok && result.ack) {
      this.pending = { seq: result.ack.seq, kind: event.kind, sentAtMs: nowMs };
      if (event.kind === "SetTarget" && event.sop) this.target = event.sop;
    } else if (result.rejection) {
      this.banner = {
        text: `command rejected: ${result.rejection.error}${
          result.rejection.detail ? ` (${result.rejection.detail})` : ""
        }`,
        fatal: false,
      };
    }
    return result;
  }
}
