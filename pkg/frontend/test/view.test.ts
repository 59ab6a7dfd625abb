import { describe, expect, it } from "vitest";

import { LoopFrame } from "../src/types";
import { ViewState } from "../src/view";

function frame(tick: number, sop: [number, number, number]): LoopFrame {
  return {
    tick,
    sop_meas: sop,
    dop: 1,
    px: 0,
    py: 0,
    v_cmd: [],
    v_out: [],
    misalign_rad: 0,
    launch: [1, 0, 0],
    schema: 1,
    chan_est: [1, 0, 0, 0],
    applied: [],
    errors: [],
    true_misalign_rad: 0,
    encode_err_rad: 0,
    paused: false,
  };
}

describe("ViewState", () => {
  it("keeps the trail in arrival order, newest last", () => {
    const vs = new ViewState(10);
    vs.accept(frame(0, [1, 0, 0]), 0);
    vs.accept(frame(1, [0, 1, 0]), 16);
    const view = vs.latest()!;
    expect(view.trail).toEqual([
      [1, 0, 0],
      [0, 1, 0],
    ]);
    expect(view.frame.tick).toBe(1);
  });

  it("caps the trail at its configured length", () => {
    const vs = new ViewState(5);
    for (let t = 0; t < 50; t++) vs.accept(frame(t, [0, 0, 1]), t);
    expect(vs.trailLength).toBe(5);
  });

  it("has no view before the first frame", () => {
    expect(new ViewState().latest()).toBeNull();
  });

  it("stale only after the timeout, never before first frame", () => {
    const vs = new ViewState();
    expect(vs.isStale(5000)).toBe(false); // nothing received yet
    vs.accept(frame(0, [0, 0, 1]), 1000);
    expect(vs.isStale(1900)).toBe(false);
    expect(vs.isStale(2001)).toBe(true);
  });
});
