import { describe, expect, it } from "vitest";

import { FrameBuffer } from "../src/framebuffer";

describe("FrameBuffer", () => {
  it("rejects nonsense capacities", () => {
    expect(() => new FrameBuffer(0)).toThrow();
    expect(() => new FrameBuffer(2.5)).toThrow();
  });

  it("drops oldest when full and counts the drops", () => {
    const buf = new FrameBuffer<number>(4);
    for (let i = 0; i < 10; i++) buf.push(i);
    expect(buf.size).toBe(4);
    expect(buf.dropped).toBe(6);
    expect(buf.drain()).toEqual([6, 7, 8, 9]);
    expect(buf.size).toBe(0);
  });

  it("drain returns oldest first and empties the buffer", () => {
    const buf = new FrameBuffer<string>(3);
    buf.push("a");
    buf.push("b");
    expect(buf.latest()).toBe("b");
    expect(buf.drain()).toEqual(["a", "b"]);
    expect(buf.drain()).toEqual([]);
    expect(buf.latest()).toBeUndefined();
  });

  it("size never exceeds capacity under sustained pressure", () => {
    const buf = new FrameBuffer<number>(16);
    for (let i = 0; i < 100_000; i++) {
      buf.push(i);
      expect(buf.size).toBeLessThanOrEqual(16);
    }
    expect(buf.dropped).toBe(100_000 - 16);
  });
});
