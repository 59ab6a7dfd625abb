// Wire types mirrored from the control service. The console performs no
// polarization math of its own beyond unit-norm validation; every physics
// value on screen comes from these frames.

export const FRAME_SCHEMA = 1;
export const COMMAND_SCHEMA = 1;

export type Vec3 = [number, number, number];

/** One event descriptor echoed back in a frame's applied list. */
export interface AppliedEvent {
  kind: string;
  sop?: number[];
  sigma?: number;
  angle?: number;
  axis?: number[];
  client_id?: string;
  seq?: number;
}

/** One loop frame as serialized by the service (field-for-field). */
export interface LoopFrame {
  tick: number;
  sop_meas: number[];
  dop: number;
  px: number;
  py: number;
  v_cmd: number[][];
  v_out: number[][];
  misalign_rad: number;
  launch: number[];
  schema: number;
  chan_est: number[];
  applied: AppliedEvent[];
  errors: string[];
  true_misalign_rad: number;
  encode_err_rad: number;
  paused: boolean;
}

export interface Snapshot {
  schema: number;
  tick: number;
  paused: boolean;
  stage_count: number;
  profile: string;
  tick_dt_us: number;
  target: number[];
  reference_in: number[];
  drift_sigma: number;
  pipeline_bits: number | null;
  frame_decimation: number;
}

export type EventKind =
  | "SetTarget"
  | "SetDrift"
  | "InjectJump"
  | "Pause"
  | "Resume"
  | "Reset";

export interface CommandEvent {
  kind: EventKind;
  sop?: Vec3;
  sigma?: number;
  angle?: number;
  axis?: Vec3;
}

export interface CommandEnvelope {
  schema: number;
  client_id: string;
  seq: number;
  event: CommandEvent;
}

export interface CommandAck {
  status: string;
  client_id: string;
  seq: number;
}

export interface CommandRejection {
  error: string;
  client_id?: string;
  seq?: number;
  last_seq?: number;
  detail?: string;
}
