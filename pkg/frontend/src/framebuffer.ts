// Bounded drop-oldest buffer decoupling stream consumption from render
// cadence: the network side pushes at loop rate, the render loop drains at
// display rate, and a stalled renderer can never grow memory without bound.

export class FrameBuffer<T> {
  private items: T[] = [];
  private droppedCount = 0;

  constructor(readonly capacity: number) {
    if (!Number.isInteger(capacity) || capacity < 1) {
      throw new Error(`capacity must be a positive integer, got ${capacity}`);
    }
  }

  push(item: T): void {
    if (this.items.length === this.capacity) {
      this.items.shift();
      this.droppedCount += 1;
    }
    this.items.push(item);
  }

  /** Remove and return all buffered items, oldest first. */
  drain(): T[] {
    const out = this.items;
    this.items = [];
    return out;
  }

  /** Most recent item without consuming, or undefined when empty. */
  latest(): T | undefined {
    return this.items[this.items.length - 1];
  }

  get size(): number {
    return this.items.length;
  }

  get dropped(): number {
    return this.droppedCount;
  }
}
