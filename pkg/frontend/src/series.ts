// Rolling time-window series with display-only decimation.
// Only received samples are stored; nothing is interpolated or invented.

export interface Point {
  t: number;
  v: number;
}

export class SeriesBuffer {
  private points: Point[] = [];

  constructor(readonly horizonTicks: number) {}

  push(t: number, v: number): void {
    const last = this.points[this.points.length - 1];
    if (last && t < last.t) return; // stale-discard, matches server ordering
    this.points.push({ t, v });
    this.trim(t);
  }

  trim(now: number): void {
    const cutoff = now - this.horizonTicks;
    let drop = 0;
    while (drop < this.points.length && this.points[drop].t < cutoff) drop++;
    if (drop > 0) this.points.splice(0, drop);
  }

  window(): readonly Point[] {
    return this.points;
  }

  get size(): number {
    return this.points.length;
  }

  latest(): Point | undefined {
    return this.points[this.points.length - 1];
  }

  /** Min/max pairs per bucket: preserves spikes at any zoom, display only. */
  decimate(maxPoints: number): Point[] {
    const pts = this.points;
    if (pts.length <= maxPoints || maxPoints < 4) return pts.slice();
    const buckets = Math.floor(maxPoints / 2);
    const per = pts.length / buckets;
    const out: Point[] = [];
    for (let b = 0; b < buckets; b++) {
      const start = Math.floor(b * per);
      const end = Math.min(pts.length, Math.floor((b + 1) * per)) || start + 1;
      let lo = pts[start];
      let hi = pts[start];
      for (let i = start; i < end; i++) {
        if (pts[i].v < lo.v) lo = pts[i];
        if (pts[i].v > hi.v) hi = pts[i];
      }
      if (lo.t <= hi.t) {
        out.push(lo);
        if (hi !== lo) out.push(hi);
      } else {
        out.push(hi, lo);
      }
    }
    return out;
  }
}
