import { describe, expect, it } from "vitest";

import { SeriesBuffer } from "../src/series.js";

describe("SeriesBuffer", () => {
  it("keeps only the rolling horizon", () => {
    const buf = new SeriesBuffer(100);
    for (let t = 0; t < 300; t++) buf.push(t, t);
    expect(buf.size).toBeLessThanOrEqual(101);
    expect(buf.window()[0].t).toBeGreaterThanOrEqual(199);
    expect(buf.latest()!.t).toBe(299);
  });

  it("discards stale out-of-order samples", () => {
    const buf = new SeriesBuffer(100);
    buf.push(10, 1);
    buf.push(5, 2);
    buf.push(11, 3);
    expect(buf.window().map((p) => p.t)).toEqual([10, 11]);
  });

  it("decimation preserves extremes", () => {
    const buf = new SeriesBuffer(10_000);
    for (let t = 0; t < 2000; t++) {
      buf.push(t, t === 777 ? 99 : Math.sin(t / 30));
    }
    const out = buf.decimate(100);
    expect(out.length).toBeLessThanOrEqual(100);
    expect(Math.max(...out.map((p) => p.v))).toBe(99);
    // time-ordered output
    for (let i = 1; i < out.length; i++) {
      expect(out[i].t).toBeGreaterThanOrEqual(out[i - 1].t);
    }
  });

  it("decimation is a no-op below the budget", () => {
    const buf = new SeriesBuffer(1000);
    for (let t = 0; t < 20; t++) buf.push(t, t * 2);
    expect(buf.decimate(100)).toEqual([...buf.window()]);
  });

  it("never fabricates points", () => {
    const buf = new SeriesBuffer(1000);
    buf.push(1, 10);
    buf.push(50, 20);
    const received = new Set(buf.window().map((p) => `${p.t}:${p.v}`));
    for (const p of buf.decimate(50)) {
      expect(received.has(`${p.t}:${p.v}`)).toBe(true);
    }
  });
});
