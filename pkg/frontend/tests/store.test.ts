import { describe, expect, it } from "vitest";

import { ConsoleStore } from "../src/store.js";
import { StateSnapshot, StreamEvent } from "../src/types.js";

function reading(seq: number, tick: number, machine: string, kind: string,
                 value: number): StreamEvent {
  return { seq, event: "reading", topic: `plant/${machine}/${kind.toLowerCase()}`,
           tick, data: { sensor: `${machine}-x`, machine, kind, tick, value } };
}

const snapshot: StateSnapshot = {
  tick: 10, status: "running", speed: 60,
  machines: {
    m1: { mode: "RUNNING", power_w: 5000, temperature_c: 60, pressure_kpa: 210,
          wear: 0.2, units_produced: 10, units_defective: 0, cooling_on: false,
          sprinkler_on: false, fire_intensity: 5, essential: false },
  },
  alerts: [],
  policies: { idle_shutdown: { enabled: true } },
  kpis: {
    tick: 10,
    live: { energy_wh: 90, downtime_ticks: 0, material_waste_units: 1,
            units_produced: 10 },
    shadow_baseline: { energy_wh: 100, downtime_ticks: 0,
                       material_waste_units: 1, units_produced: 10 },
    reductions_pct: { energy: 10.0, downtime: null, waste: 0.0 },
  },
};

describe("ConsoleStore", () => {
  it("routes readings into the right series", () => {
    const store = new ConsoleStore();
    store.applyEvent(reading(1, 5, "m1", "TEMPERATURE", 61.5));
    store.applyEvent(reading(2, 6, "m2", "FIRE", 70.0));
    expect(store.seriesFor("TEMPERATURE", "m1").latest()!.v).toBe(61.5);
    expect(store.seriesFor("FIRE", "m2").latest()!.v).toBe(70.0);
    expect(store.seriesFor("ENERGY", "m1").size).toBe(0);
  });

  it("flags a gap when sequence numbers jump", () => {
    const store = new ConsoleStore();
    store.applyEvent(reading(1, 5, "m1", "ENERGY", 1));
    store.applyEvent(reading(2, 6, "m1", "ENERGY", 2));
    expect(store.gap).toBe(false);
    store.applyEvent(reading(9, 20, "m1", "ENERGY", 3));
    expect(store.gap).toBe(true);
    expect(store.gapMarks).toEqual([20]);
  });

  it("heartbeats advance the sequence without touching data", () => {
    const store = new ConsoleStore();
    store.applyEvent(reading(1, 5, "m1", "ENERGY", 1));
    store.applyEvent({ seq: 7, event: "heartbeat", tick: 9 });
    store.applyEvent(reading(8, 10, "m1", "ENERGY", 2));
    expect(store.gap).toBe(false);
    expect(store.seriesFor("ENERGY", "m1").size).toBe(2);
  });

  it("applies snapshots authoritatively", () => {
    const store = new ConsoleStore();
    store.applySnapshot(snapshot);
    expect(store.machines.m1.mode).toBe("RUNNING");
    expect(store.policies.idle_shutdown.enabled).toBe(true);
    expect(store.kpis!.reductions_pct.energy).toBe(10.0);
  });

  it("keeps displayed KPI numbers verbatim from the server", () => {
    const store = new ConsoleStore();
    store.applyKpis(snapshot.kpis);
    // no rounding or recomputation of reductions on the client
    expect(store.kpis!.reductions_pct).toEqual(snapshot.kpis.reductions_pct);
    const last = store.energyOverlay[store.energyOverlay.length - 1];
    expect(last.live).toBe(90);
    expect(last.shadow).toBe(100);
  });

  it("mode events update the machine grid", () => {
    const store = new ConsoleStore();
    store.applySnapshot(snapshot);
    store.applyEvent({ seq: 1, event: "machine", topic: "plant/m1/state",
                       tick: 11, data: { machine: "m1", mode: "FAULTED" } });
    expect(store.machines.m1.mode).toBe("FAULTED");
  });

  it("sprinkler alerts set the badge state", () => {
    const store = new ConsoleStore();
    store.applySnapshot(snapshot);
    store.applyEvent({ seq: 1, event: "alert", topic: "plant/alerts/safety",
                       tick: 12,
                       data: { machine: "m1", actuator: "sprinkler", on: true } });
    expect(store.machines.m1.sprinkler_on).toBe(true);
  });

  it("notifies subscribers once per change", () => {
    const store = new ConsoleStore();
    let calls = 0;
    const off = store.onChange(() => calls++);
    store.applyEvent(reading(1, 1, "m1", "ENERGY", 1));
    expect(calls).toBe(1);
    off();
    store.applyEvent(reading(2, 2, "m1", "ENERGY", 2));
    expect(calls).toBe(1);
  });
});
