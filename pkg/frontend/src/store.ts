// Single client-side store: every UI state change flows through here.
// Views subscribe and re-render; nothing else holds state.

import { SeriesBuffer } from "./series.js";
import {
  Alert,
  KpiSnapshot,
  MachineView,
  SENSOR_KINDS,
  SensorKind,
  StateSnapshot,
  StreamEvent,
} from "./types.js";

export type ConnectionState = "connecting" | "live" | "reconnecting";

export interface AnomalyMark {
  tick: number;
  machine: string;
  kind: string;
  score: number;
}

const DEFAULT_HORIZON = 1800; // ticks kept per scope series

export class ConsoleStore {
  tick = 0;
  status: StateSnapshot["status"] = "running";
  speed = 1;
  machines: Record<string, MachineView> = {};
  alerts: Alert[] = [];
  policies: Record<string, Record<string, unknown>> = {};
  kpis: KpiSnapshot | null = null;

  // per sensor kind, per machine
  series: Record<SensorKind, Map<string, SeriesBuffer>> = {
    ENERGY: new Map(),
    TEMPERATURE: new Map(),
    PRESSURE: new Map(),
    FIRE: new Map(),
  };
  // Fig-6-style overlay: cumulative live vs shadow energy
  energyOverlay: { t: number; live: number; shadow: number }[] = [];
  anomalies: AnomalyMark[] = [];
  recentEvents: StreamEvent[] = [];

  connection: ConnectionState = "connecting";
  gap = false;            // events were lost (sequence jumped)
  gapMarks: number[] = [];
  lastSeq = 0;

  private listeners: (() => void)[] = [];
  private horizon: number;

  constructor(horizonTicks: number = DEFAULT_HORIZON) {
    this.horizon = horizonTicks;
  }

  onChange(cb: () => void): () => void {
    this.listeners.push(cb);
    return () => {
      this.listeners = this.listeners.filter((x) => x !== cb);
    };
  }

  private notify(): void {
    for (const cb of this.listeners) cb();
  }

  seriesFor(kind: SensorKind, machine: string): SeriesBuffer {
    let buf = this.series[kind].get(machine);
    if (!buf) {
      buf = new SeriesBuffer(this.horizon);
      this.series[kind].set(machine, buf);
    }
    return buf;
  }

  setConnection(state: ConnectionState): void {
    if (this.connection !== state) {
      this.connection = state;
      this.notify();
    }
  }

  applyEvent(e: StreamEvent): void {
    if (e.event === "heartbeat") {
      this.lastSeq = Math.max(this.lastSeq, e.seq);
      return;
    }
    if (this.lastSeq > 0 && e.seq > this.lastSeq + 1) {
      // the console subscribes to plant/#, so sequence numbers are dense;
      // a jump means events were lost while we were away
      this.gap = true;
      this.gapMarks.push(e.tick);
    }
    if (e.seq > this.lastSeq) this.lastSeq = e.seq;
    this.tick = Math.max(this.tick, e.tick);

    switch (e.event) {
      case "reading": {
        const d = e.data!;
        if (SENSOR_KINDS.includes(d.kind)) {
          this.seriesFor(d.kind as SensorKind, d.machine).push(d.tick, d.value);
        }
        break;
      }
      case "machine": {
        const d = e.data!;
        const m = this.machines[d.machine];
        if (m) m.mode = d.mode;
        break;
      }
      case "alert": {
        const d = e.data!;
        if (d.actuator === "sprinkler" && this.machines[d.machine]) {
          this.machines[d.machine].sprinkler_on = !!d.on;
        }
        if (d.actuator === "cooling" && this.machines[d.machine]) {
          this.machines[d.machine].cooling_on = !!d.on;
        }
        break;
      }
      case "anomaly": {
        const d = e.data!;
        this.anomalies.push({
          tick: e.tick, machine: d.machine, kind: d.kind, score: d.score,
        });
        if (this.anomalies.length > 200) this.anomalies.splice(0, 50);
        break;
      }
      case "kpi":
        // totals are in integer microjoules on the wire
        this.pushOverlay(e.tick, e.data!.e / 3.6e9, null);
        break;
    }
    this.recentEvents.push(e);
    if (this.recentEvents.length > 100) this.recentEvents.splice(0, 50);
    this.notify();
  }

  private pushOverlay(t: number, live: number | null, shadow: number | null): void {
    const last = this.energyOverlay[this.energyOverlay.length - 1];
    if (last && last.t === t) {
      if (live !== null) last.live = live;
      if (shadow !== null) last.shadow = shadow;
      return;
    }
    this.energyOverlay.push({
      t,
      live: live ?? last?.live ?? 0,
      shadow: shadow ?? last?.shadow ?? 0,
    });
    const cutoff = t - this.horizon;
    while (this.energyOverlay.length && this.energyOverlay[0].t < cutoff) {
      this.energyOverlay.shift();
    }
  }

  /** Snapshot poll: authoritative machine/policy/alert state. */
  applySnapshot(s: StateSnapshot): void {
    this.tick = Math.max(this.tick, s.tick);
    this.status = s.status;
    this.speed = s.speed;
    this.machines = s.machines;
    this.alerts = s.alerts;
    this.policies = s.policies;
    if (s.kpis && s.kpis.live) this.applyKpis(s.kpis, false);
    this.notify();
  }

  /** KPI poll: displayed numbers come from the server, never recomputed. */
  applyKpis(k: KpiSnapshot, notify = true): void {
    this.kpis = k;
    this.pushOverlay(k.tick, k.live.energy_wh, k.shadow_baseline.energy_wh);
    if (notify) this.notify();
  }
}
