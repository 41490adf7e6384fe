// Payload shapes of the control API (docs/api.md in the repo root).

export interface MachineView {
  mode: string;
  power_w: number;
  temperature_c: number;
  pressure_kpa: number;
  wear: number;
  units_produced: number;
  units_defective: number;
  cooling_on: boolean;
  sprinkler_on: boolean;
  fire_intensity: number;
  essential: boolean;
}

export interface Alert {
  kind: string;
  machine: string;
  actuator?: string;
  fault?: string;
}

export interface KpiSide {
  energy_wh: number;
  downtime_ticks: number;
  material_waste_units: number;
  units_produced: number;
}

export interface KpiSnapshot {
  tick: number;
  live: KpiSide;
  shadow_baseline: KpiSide;
  reductions_pct: {
    energy: number | null;
    downtime: number | null;
    waste: number | null;
  };
}

export interface StateSnapshot {
  tick: number;
  status: "running" | "paused" | "finished";
  speed: number;
  machines: Record<string, MachineView>;
  alerts: Alert[];
  policies: Record<string, Record<string, unknown>>;
  kpis: KpiSnapshot;
}

export interface StreamEvent {
  seq: number;
  event: "reading" | "alert" | "anomaly" | "machine" | "kpi" | "command" | "heartbeat";
  topic?: string;
  tick: number;
  data?: Record<string, any>;
}

export type SensorKind = "ENERGY" | "TEMPERATURE" | "PRESSURE" | "FIRE";

export const SENSOR_KINDS: SensorKind[] = ["ENERGY", "TEMPERATURE", "PRESSURE", "FIRE"];

export interface CommandAck {
  status: "accepted" | "already-applied";
  kind?: string;
}
