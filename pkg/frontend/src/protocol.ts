// Service protocol: frame parsing with schema/norm validation, the NDJSON
// stream reader, and the sequenced command channel.

import {
  COMMAND_SCHEMA,
  CommandAck,
  CommandEvent,
  CommandRejection,
  FRAME_SCHEMA,
  LoopFrame,
} from "./types.js";

export class SchemaMismatch extends Error {
  constructor(got: unknown) {
    super(`frame schema ${String(got)} does not match ${FRAME_SCHEMA}`);
  }
}

const UNIT_SLOP = 1e-3;

export function norm3(v: number[]): number {
  return Math.hypot(v[0], v[1], v[2]);
}

/**
 * Parse one NDJSON line into a LoopFrame.
 *
 * Throws SchemaMismatch on a version we do not speak (the app turns that
 * into a banner and stops rendering) and a plain Error on frames whose
 * measured SOP is not unit norm within tolerance.
 */
export function parseFrame(line: string): LoopFrame {
  const raw = JSON.parse(line);
  if (raw.schema !== FRAME_SCHEMA) {
    throw new SchemaMismatch(raw.schema);
  }
  for (const field of ["sop_meas", "launch"] as const) {
    const v = raw[field];
    if (!Array.isArray(v) || v.length !== 3) {
      throw new Error(`frame ${field} is not a 3-vector`);
    }
    const n = norm3(v);
    if (Math.abs(n - 1) > UNIT_SLOP) {
      throw new Error(`frame ${field} norm ${n.toFixed(6)} is not unit`);
    }
  }
  if (typeof raw.tick !== "number" || typeof raw.misalign_rad !== "number") {
    throw new Error("frame missing tick or misalign_rad");
  }
  return raw as LoopFrame;
}

/**
 * Consume the service's newline-delimited frame stream, invoking onLine
 * per complete line (transport only; the caller parses). Resolves when
 * the stream ends, rejects on transport errors. Single-threaded: lines
 * are delivered on the caller's event loop, never concurrently.
 */
export async function readFrameStream(
  url: string,
  onLine: (line: string) => void,
  opts: { fetchFn?: typeof fetch; signal?: AbortSignal } = {},
): Promise<void> {
  const fetchFn = opts.fetchFn ?? fetch;
  const resp = await fetchFn(url, { signal: opts.signal });
  if (!resp.ok || !resp.body) {
    throw new Error(`frame stream: HTTP ${resp.status}`);
  }
  const reader = resp.body.getReader();
  const decoder = new TextDecoder();
  let pending = "";
  for (;;) {
    const { done, value } = await reader.read();
    if (done) break;
    pending += decoder.decode(value, { stream: true });
    let nl;
    while ((nl = pending.indexOf("\n")) >= 0) {
      const line = pending.slice(0, nl).trim();
      pending = pending.slice(nl + 1);
      if (line.length > 0) onLine(line);
    }
  }
  const tail = pending.trim();
  if (tail.length > 0) onLine(tail);
}

export interface SendResult {
  ok: boolean;
  ack?: CommandAck;
  rejection?: CommandRejection;
  /** true when a stale sequence forced a resync and single retry */
  resynced: boolean;
}

/**
 * Sequenced command channel for one client id.
 *
 * Each send carries the next sequence number. If the service answers 409
 * (another console raced us, or we restarted), the counter resyncs to the
 * reported last_seq and the command is retried exactly once; any other
 * rejection is surfaced verbatim.
 */
export class CommandClient {
  private seq = 0;

  constructor(
    private readonly base: string,
    readonly clientId: string,
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  nextSeq(): number {
    return this.seq + 1;
  }

  async send(event: CommandEvent): Promise<SendResult> {
    const first = await this.post(event, this.seq + 1);
    if (first.status === 200) {
      this.seq += 1;
      return { ok: true, ack: first.body as CommandAck, resynced: false };
    }
    const rej = first.body as CommandRejection;
    if (first.status !== 409 || typeof rej.last_seq !== "number") {
      return { ok: false, rejection: rej, resynced: false };
    }
    this.seq = rej.last_seq;
    const second = await this.post(event, this.seq + 1);
    if (second.status === 200) {
      this.seq += 1;
      return { ok: true, ack: second.body as CommandAck, resynced: true };
    }
    return {
      ok: false,
      rejection: second.body as CommandRejection,
      resynced: true,
    };
  }

  private async post(
    event: CommandEvent,
    seq: number,
  ): Promise<{ status: number; body: unknown }> {
    const envelope = {
      schema: COMMAND_SCHEMA,
      client_id: this.clientId,
      seq,
      event,
    };
    const resp = await this.fetchFn(`${this.base}/command`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(envelope),
    });
    return { status: resp.status, body: await resp.json() };
  }
}
