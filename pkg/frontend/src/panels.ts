// Scope-style canvas panels: one signal family per panel, threshold
// overlays, pause/zoom, gap markers. Only received data is drawn.

import { ConsoleStore } from "./store.js";
import { SensorKind } from "./types.js";

const COLORS = ["#4fc3f7", "#81c784", "#ffb74d", "#e57373", "#ba68c8",
                "#4db6ac", "#f06292", "#a1887f", "#90a4ae", "#dce775"];

export interface Threshold {
  value: number;
  label: string;
  color: string;
}

export class ScopePanel {
  paused = false;
  zoom = 1; // 1 = full horizon, larger = tighter window
  private ctx: CanvasRenderingContext2D;

  constructor(readonly canvas: HTMLCanvasElement,
              readonly store: ConsoleStore,
              readonly kind: SensorKind,
              readonly unit: string,
              readonly thresholds: Threshold[] = []) {
    this.ctx = canvas.getContext("2d")!;
    canvas.addEventListener("click", () => {
      this.paused = !this.paused;
      this.draw();
    });
    canvas.addEventListener("wheel", (e) => {
      e.preventDefault();
      this.zoom = Math.min(8, Math.max(1, this.zoom * (e.deltaY > 0 ? 0.8 : 1.25)));
      this.draw();
    });
  }

  draw(): void {
    if (this.paused) return;
    const { ctx, canvas } = this;
    const w = canvas.width;
    const h = canvas.height;
    ctx.fillStyle = "#10151c";
    ctx.fillRect(0, 0, w, h);

    const machines = [...this.store.series[this.kind].keys()].sort();
    const horizon = 1800 / this.zoom;
    const now = this.store.tick;
    const t0 = now - horizon;

    let lo = Infinity;
    let hi = -Infinity;
    for (const m of machines) {
      for (const p of this.store.series[this.kind].get(m)!.window()) {
        if (p.t < t0) continue;
        if (p.v < lo) lo = p.v;
        if (p.v > hi) hi = p.v;
      }
    }
    for (const th of this.thresholds) {
      if (th.value < lo) lo = th.value;
      if (th.value > hi) hi = th.value;
    }
    if (!isFinite(lo)) {
      ctx.fillStyle = "#56606e";
      ctx.font = "13px monospace";
      ctx.fillText("no data", w / 2 - 24, h / 2);
      this.frame(t0, now, 0, 1);
      return;
    }
    if (hi - lo < 1e-9) {
      hi += 1;
      lo -= 1;
    }
    const pad = (hi - lo) * 0.08;
    lo -= pad;
    hi += pad;

    const x = (t: number) => ((t - t0) / horizon) * (w - 46) + 42;
    const y = (v: number) => h - 18 - ((v - lo) / (hi - lo)) * (h - 30);

    for (const th of this.thresholds) {
      ctx.strokeStyle = th.color;
      ctx.setLineDash([5, 4]);
      ctx.beginPath();
      ctx.moveTo(42, y(th.value));
      ctx.lineTo(w - 4, y(th.value));
      ctx.stroke();
      ctx.setLineDash([]);
      ctx.fillStyle = th.color;
      ctx.font = "10px monospace";
      ctx.fillText(th.label, 46, y(th.value) - 3);
    }

    machines.forEach((m, idx) => {
      const buf = this.store.series[this.kind].get(m)!;
      const pts = buf.decimate(Math.floor(w / 2)).filter((p) => p.t >= t0);
      if (!pts.length) return;
      ctx.strokeStyle = COLORS[idx % COLORS.length];
      ctx.lineWidth = 1.2;
      ctx.beginPath();
      pts.forEach((p, i) => {
        if (i === 0) ctx.moveTo(x(p.t), y(p.v));
        else ctx.lineTo(x(p.t), y(p.v));
      });
      ctx.stroke();
    });

    for (const mark of this.store.gapMarks) {
      if (mark < t0) continue;
      ctx.strokeStyle = "#ff5252";
      ctx.setLineDash([2, 3]);
      ctx.beginPath();
      ctx.moveTo(x(mark), 10);
      ctx.lineTo(x(mark), h - 18);
      ctx.stroke();
      ctx.setLineDash([]);
    }

    this.frame(t0, now, lo, hi);
  }

  private frame(t0: number, t1: number, lo: number, hi: number): void {
    const { ctx, canvas } = this;
    ctx.strokeStyle = "#2a3443";
    ctx.strokeRect(42, 10, canvas.width - 46, canvas.height - 28);
    ctx.fillStyle = "#7d8a99";
    ctx.font = "10px monospace";
    ctx.fillText(`${hi.toFixed(1)}`, 2, 18);
    ctx.fillText(`${lo.toFixed(1)}`, 2, canvas.height - 20);
    ctx.fillText(`t=${t0 | 0}`, 42, canvas.height - 5);
    ctx.fillText(`t=${t1 | 0} ${this.unit}${this.paused ? "  [paused]" : ""}`,
                 canvas.width - 150, canvas.height - 5);
  }
}

/** Fig-6-style cumulative energy: live run vs shadow baseline. */
export class EnergyComparePanel {
  private ctx: CanvasRenderingContext2D;

  constructor(readonly canvas: HTMLCanvasElement, readonly store: ConsoleStore) {
    this.ctx = canvas.getContext("2d")!;
  }

  draw(): void {
    const { ctx, canvas } = this;
    const w = canvas.width;
    const h = canvas.height;
    ctx.fillStyle = "#10151c";
    ctx.fillRect(0, 0, w, h);
    const data = this.store.energyOverlay;
    if (data.length < 2) {
      ctx.fillStyle = "#56606e";
      ctx.font = "13px monospace";
      ctx.fillText("no data", w / 2 - 24, h / 2);
      return;
    }
    const t0 = data[0].t;
    const t1 = data[data.length - 1].t;
    const hi = Math.max(...data.map((d) => Math.max(d.live, d.shadow))) * 1.08 || 1;
    const x = (t: number) => ((t - t0) / Math.max(1, t1 - t0)) * (w - 50) + 44;
    const y = (v: number) => h - 18 - (v / hi) * (h - 30);

    for (const [key, color] of [["shadow", "#8d99ae"], ["live", "#4fc3f7"]] as const) {
      ctx.strokeStyle = color;
      ctx.lineWidth = key === "live" ? 1.6 : 1.2;
      if (key === "shadow") ctx.setLineDash([6, 4]);
      ctx.beginPath();
      data.forEach((d, i) => {
        const v = key === "live" ? d.live : d.shadow;
        if (i === 0) ctx.moveTo(x(d.t), y(v));
        else ctx.lineTo(x(d.t), y(v));
      });
      ctx.stroke();
      ctx.setLineDash([]);
    }
    ctx.fillStyle = "#8d99ae";
    ctx.font = "10px monospace";
    ctx.fillText("baseline (shadow)", w - 130, 20);
    ctx.fillStyle = "#4fc3f7";
    ctx.fillText("optimized (live)", w - 130, 32);
    ctx.fillStyle = "#7d8a99";
    ctx.fillText(`${hi.toFixed(0)} Wh`, 2, 18);
    ctx.strokeStyle = "#2a3443";
    ctx.strokeRect(44, 10, w - 50, h - 28);
  }
}
