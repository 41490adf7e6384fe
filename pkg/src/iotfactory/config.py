"""Scenario configuration: loading, validation, defaults, canonical hash.

A scenario file is JSON. Every field is optional except plant.machines;
defaults are merged in (per-machine values override plant.machine_defaults,
which override the built-in defaults). Validation failures are collected
and reported together, each naming the offending path, and a config never
half-loads.

The canonical hash covers the fully merged config minus the seed, so two
trace files can be checked for pairing without re-reading the file.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from pathlib import Path

_ID_RE = re.compile(r"^[A-Za-z0-9_-]+$")

from .analytics import (AnomalyPolicy, IdleShutdownPolicy, MaintenancePolicy,
                        PolicySet, ResourceOptPolicy)
from .edge import SafetyRule
from .plant import MachineParams, SensorSpec
from .transport import LinkModel, Topology

__all__ = ["ConfigError", "ResolvedConfig", "load_config", "resolve_config",
           "canonical_hash"]

SENSOR_KINDS = ("ENERGY", "TEMPERATURE", "PRESSURE", "FIRE")
FAULT_KINDS = ("BREAKDOWN", "OVERHEAT", "FIRE")
MILLI = 1000

DEFAULT_SENSORS = {
    "ENERGY": {"sample_period": 5, "gain": 1.0, "offset": 0.0, "tolerance": 0.001},
    "TEMPERATURE": {"sample_period": 5, "gain": 1.0, "offset": 0.0, "tolerance": 0.5},
    "PRESSURE": {"sample_period": 5, "gain": 1.0, "offset": 0.0, "tolerance": 1.0},
    "FIRE": {"sample_period": 1, "gain": 1.0, "offset": 0.0, "tolerance": 0.5},
}

DEFAULT_DEADBANDS = {"ENERGY": 100.0, "TEMPERATURE": 0.75, "PRESSURE": 2.0, "FIRE": 1.5}
# alert lines sit at the nominal band edges so out-of-band readings always
# bypass the deadband and reach the cloud
DEFAULT_ALERTS = {"TEMPERATURE": 78.0, "PRESSURE": 262.0, "FIRE": 60.0}
DEFAULT_SAFETY = [
    {"kind": "FIRE_SPRINKLER", "threshold": 60.0, "release_threshold": 20.0,
     "response_deadline": 2},
    {"kind": "OVERTEMP_COOLING", "threshold": 85.0, "release_threshold": 74.0,
     "response_deadline": 2},
]


class ConfigError(Exception):
    """Validation failure; `errors` is a list of (path, message) pairs."""

    def __init__(self, errors: list[tuple[str, str]]):
        self.errors = errors
        lines = "; ".join(f"{p}: {m}" for p, m in errors)
        super().__init__(f"invalid config: {lines}")


@dataclass
class ResolvedConfig:
    ticks: int
    seed: int
    tick_duration_s: float
    tick_ms: int
    machines: list[MachineParams]
    sensors: list[SensorSpec]
    workload: dict[str, list[tuple[int, int, int]]]   # machine -> (from, to, rate_milli)
    noise_amp: float
    ambient: list[tuple[int, int, float]]
    scheduled_faults: list[dict]
    scheduled_fires: list[dict]
    status_period: int
    gateways: dict[str, list[str]]
    device_link: LinkModel
    uplink: LinkModel
    qos1_timeout: int
    batch_period: int
    batch_max_retries: int
    backoff_base: int
    window_ticks: int
    deadbands: dict[str, float]
    alerts: dict[str, float]
    safety_rules: list[SafetyRule]
    policies: PolicySet
    trace_readings: bool
    trace_deliveries: bool
    kpi_period: int
    config_hash: str
    canonical: dict
    raw: dict

    def topology(self) -> Topology:
        wiring = {}
        for gw, machines in self.gateways.items():
            for m in machines:
                wiring[m] = gw
        return Topology(device_gateway=wiring, gateways=list(self.gateways))

    def machine(self, machine_id: str) -> MachineParams:
        for m in self.machines:
            if m.machine_id == machine_id:
                return m
        raise KeyError(machine_id)

    def ambient_at(self, tick: int) -> float:
        for frm, to, val in self.ambient:
            if frm <= tick < to:
                return val
        return 25.0

    def scheduled_demand(self, machine_id: str, tick: int) -> int:
        for frm, to, rate in self.workload.get(machine_id, ()):
            if frm <= tick < to:
                return rate
        return 0


def _deep_merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], val)
        else:
            out[key] = val
    return out


class _Check:
    """Collects (path, message) problems while reading the raw dict."""

    def __init__(self):
        self.errors: list[tuple[str, str]] = []

    def fail(self, path: str, msg: str) -> None:
        self.errors.append((path, msg))

    def num(self, obj: dict, key: str, path: str, default=None, lo=None, hi=None,
            integer=False):
        val = obj.get(key, default)
        if val is None:
            self.fail(f"{path}.{key}", "required")
            return default
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            self.fail(f"{path}.{key}", "must be a number")
            return default
        if integer and int(val) != val:
            self.fail(f"{path}.{key}", "must be an integer")
            return default
        if lo is not None and val < lo:
            self.fail(f"{path}.{key}", f"must be >= {lo}")
            return default
        if hi is not None and val > hi:
            self.fail(f"{path}.{key}", f"must be <= {hi}")
            return default
        return int(val) if integer else float(val)

    def boolean(self, obj: dict, key: str, path: str, default=False) -> bool:
        val = obj.get(key, default)
        if not isinstance(val, bool):
            self.fail(f"{path}.{key}", "must be true or false")
            return default
        return val

    def segments(self, raw, path: str, value_key: str, integer=False) -> list:
        """[{from, to, <value_key>}] with from < to and no overlaps."""
        if not isinstance(raw, list):
            self.fail(path, "must be a list of segments")
            return []
        out = []
        for i, seg in enumerate(raw):
            if not isinstance(seg, dict):
                self.fail(f"{path}[{i}]", "must be an object")
                continue
            frm = self.num(seg, "from", f"{path}[{i}]", default=None, lo=0, integer=True)
            to = self.num(seg, "to", f"{path}[{i}]", default=None, lo=0, integer=True)
            val = self.num(seg, value_key, f"{path}[{i}]", default=None, lo=0,
                           integer=integer)
            if frm is None or to is None or val is None:
                continue
            if frm >= to:
                self.fail(f"{path}[{i}]", "'from' must be < 'to'")
                continue
            out.append((frm, to, val))
        out.sort()
        for a, b in zip(out, out[1:]):
            if a[1] > b[0]:
                self.fail(path, f"segments overlap at tick {b[0]}")
        return out


def _machine_params(raw: dict, check: _Check, path: str) -> MachineParams | None:
    mid = raw.get("id")
    if not isinstance(mid, str) or not mid:
        check.fail(f"{path}.id", "required non-empty string")
        return None
    if not _ID_RE.match(mid):
        check.fail(f"{path}.id", "must match [A-Za-z0-9_-]+")
        return None
    power = raw.get("power", {})
    prod = raw.get("production", {})
    thermal = raw.get("thermal", {})
    press = raw.get("pressure", {})
    wear = raw.get("wear", {})
    hazard = raw.get("hazard", {})
    defects = raw.get("defects", {})
    fire = raw.get("fire", {})
    timers = raw.get("timers", {})
    band = thermal.get("band_c", [35.0, 78.0])
    limits = press.get("limits_kpa", [150.0, 262.0])
    if not (isinstance(band, list) and len(band) == 2):
        check.fail(f"{path}.thermal.band_c", "must be [low, high]")
        band = [35.0, 78.0]
    if not (isinstance(limits, list) and len(limits) == 2):
        check.fail(f"{path}.pressure.limits_kpa", "must be [min, max]")
        limits = [150.0, 262.0]
    c = check
    params = MachineParams(
        machine_id=mid,
        essential=c.boolean(raw, "essential", path, False),
        run_w=c.num(power, "run_w", f"{path}.power", 5000.0, lo=0.0),
        standby_w=c.num(power, "standby_w", f"{path}.power", 1500.0, lo=0.0),
        maint_w=c.num(power, "maint_w", f"{path}.power", 500.0, lo=0.0),
        load_factor=c.num(power, "load_factor", f"{path}.power", 0.1, lo=0.0, hi=1.0),
        max_rate_milli=round(c.num(prod, "max_rate", f"{path}.production", 3.0, lo=0.001) * MILLI),
        scrap_on_fault=c.num(prod, "scrap_on_fault", f"{path}.production", 2, lo=0, integer=True),
        band_low_c=float(band[0]), band_high_c=float(band[1]),
        rise_run_c=c.num(thermal, "rise_run_c", f"{path}.thermal", 48.0, lo=0.0),
        rise_idle_c=c.num(thermal, "rise_idle_c", f"{path}.thermal", 8.0, lo=0.0),
        tau_heat_s=c.num(thermal, "tau_heat_s", f"{path}.thermal", 500.0, lo=1e-9),
        tau_cool_s=c.num(thermal, "tau_cool_s", f"{path}.thermal", 800.0, lo=1e-9),
        tau_cool_active_s=c.num(thermal, "tau_cool_active_s", f"{path}.thermal", 200.0, lo=1e-9),
        cooling_drop_c=c.num(thermal, "cooling_drop_c", f"{path}.thermal", 15.0, lo=0.0),
        nominal_kpa=c.num(press, "nominal_kpa", f"{path}.pressure", 200.0, lo=0.0),
        pump_kpa=c.num(press, "pump_kpa", f"{path}.pressure", 18.0, lo=0.0),
        bump_kpa=c.num(press, "bump_kpa", f"{path}.pressure", 24.0, lo=0.0),
        regulator_gain=c.num(press, "regulator_gain", f"{path}.pressure", 0.45, lo=0.0, hi=1.0),
        weak_gain=c.num(press, "weak_gain", f"{path}.pressure", 0.02, lo=0.0, hi=1.0),
        transient_decay=c.num(press, "transient_decay", f"{path}.pressure", 0.5, lo=0.0, hi=0.99),
        p_min_kpa=float(limits[0]), p_max_kpa=float(limits[1]),
        max_overshoot_kpa=c.num(press, "max_overshoot_kpa", f"{path}.pressure", 40.0, lo=0.0),
        pressure_noise_kpa=c.num(press, "noise_kpa", f"{path}.pressure", 0.4, lo=0.0),
        regulator_enabled=c.boolean(press, "regulator_enabled", f"{path}.pressure", True),
        wear_per_tick=c.num(wear, "per_tick", f"{path}.wear", 1.4e-4, lo=0.0),
        wear_temp_coeff=c.num(wear, "temp_coeff", f"{path}.wear", 1.5, lo=0.0),
        wear_pressure_coeff=c.num(wear, "pressure_coeff", f"{path}.wear", 1.0, lo=0.0),
        hazard_h0=c.num(hazard, "h0", f"{path}.hazard", 2.0e-6, lo=0.0, hi=1.0),
        hazard_beta=c.num(hazard, "beta", f"{path}.hazard", 400.0, lo=0.0),
        defect_base=c.num(defects, "base", f"{path}.defects", 0.01, lo=0.0, hi=1.0),
        defect_temp_coeff=c.num(defects, "temp_coeff", f"{path}.defects", 0.25, lo=0.0),
        defect_pressure_coeff=c.num(defects, "pressure_coeff", f"{path}.defects", 0.15, lo=0.0),
        fire_baseline=c.num(fire, "baseline", f"{path}.fire", 5.0, lo=0.0),
        fire_noise=c.num(fire, "noise", f"{path}.fire", 0.5, lo=0.0),
        fire_ramp=c.num(fire, "ramp", f"{path}.fire", 15.0, lo=0.001),
        fire_decay=c.num(fire, "decay", f"{path}.fire", 12.0, lo=0.001),
        fire_max=c.num(fire, "max", f"{path}.fire", 100.0, lo=1.0),
        fire_damage_threshold=c.num(fire, "damage_threshold", f"{path}.fire", 95.0, lo=0.0),
        fire_damage_ticks=c.num(fire, "damage_ticks", f"{path}.fire", 10, lo=1, integer=True),
        idle_to_standby_ticks=c.num(timers, "idle_to_standby_ticks", f"{path}.timers", 120, lo=1, integer=True),
        wake_delay_ticks=c.num(timers, "wake_delay_ticks", f"{path}.timers", 30, lo=0, integer=True),
        repair_ticks=c.num(timers, "repair_ticks", f"{path}.timers", 900, lo=1, integer=True),
        maintenance_ticks=c.num(timers, "maintenance_ticks", f"{path}.timers", 300, lo=1, integer=True),
    )
    if params.band_high_c <= params.band_low_c:
        check.fail(f"{path}.thermal.band_c", "high must exceed low")
    if params.p_max_kpa <= params.nominal_kpa:
        check.fail(f"{path}.pressure", "limits_kpa[1] must exceed nominal_kpa")
    return params


def _link(raw: dict, check: _Check, path: str, defaults: dict) -> LinkModel:
    merged = _deep_merge(defaults, raw if isinstance(raw, dict) else {})
    return LinkModel(
        base_latency=check.num(merged, "base_latency", path, 1, lo=0, integer=True),
        jitter=check.num(merged, "jitter", path, 0, lo=0, integer=True),
        drop_probability=check.num(merged, "drop_probability", path, 0.0, lo=0.0, hi=0.999),
    )


def resolve_config(raw: dict, seed_override: int | None = None) -> ResolvedConfig:
    """Validate and normalize a raw config dict; raises ConfigError."""
    check = _Check()
    if not isinstance(raw, dict):
        raise ConfigError([("$", "config root must be an object")])

    run = raw.get("run", {})
    ticks = check.num(run, "ticks", "run", 28800, lo=1, integer=True)
    seed = check.num(run, "seed", "run", 42, integer=True)
    tick_duration = check.num(run, "tick_duration_s", "run", 1.0, lo=0.001)
    tick_ms = round((tick_duration or 1.0) * 1000)
    if tick_duration and abs(tick_ms - tick_duration * 1000) > 1e-9:
        check.fail("run.tick_duration_s", "must be a whole number of milliseconds")
    if seed_override is not None:
        seed = seed_override

    plant = raw.get("plant", {})
    machine_defaults = plant.get("machine_defaults", {})
    raw_machines = plant.get("machines")
    machines: list[MachineParams] = []
    machine_ids: list[str] = []
    if not isinstance(raw_machines, list) or not raw_machines:
        check.fail("plant.machines", "at least one machine is required")
    else:
        for i, m in enumerate(raw_machines):
            if not isinstance(m, dict):
                check.fail(f"plant.machines[{i}]", "must be an object")
                continue
            merged = _deep_merge(machine_defaults, m)
            params = _machine_params(merged, check, f"plant.machines[{i}]")
            if params is not None:
                if params.machine_id in machine_ids:
                    check.fail(f"plant.machines[{i}].id",
                               f"duplicate machine id {params.machine_id!r}")
                else:
                    machines.append(params)
                    machine_ids.append(params.machine_id)

    # sensors: explicit list, or one per kind per machine
    sensor_defaults = _deep_merge(DEFAULT_SENSORS, plant.get("sensor_defaults", {}))
    raw_sensors = plant.get("sensors", "auto")
    sensors: list[SensorSpec] = []
    seen_sensor_ids: set[str] = set()
    if raw_sensors == "auto":
        for mid in machine_ids:
            for kind in SENSOR_KINDS:
                d = sensor_defaults[kind]
                sensors.append(SensorSpec(
                    sensor_id=f"{mid}-{kind.lower()}", kind=kind, machine_id=mid,
                    sample_period=int(d["sample_period"]), gain=float(d["gain"]),
                    offset=float(d["offset"]), tolerance=float(d["tolerance"])))
    elif isinstance(raw_sensors, list):
        for i, s in enumerate(raw_sensors):
            path = f"plant.sensors[{i}]"
            if not isinstance(s, dict):
                check.fail(path, "must be an object")
                continue
            kind = s.get("kind")
            if kind not in SENSOR_KINDS:
                check.fail(f"{path}.kind", f"must be one of {', '.join(SENSOR_KINDS)}")
                continue
            defaults = sensor_defaults[kind]
            sid = s.get("id") or f"{s.get('machine', '?')}-{kind.lower()}"
            mid = s.get("machine")
            if mid not in machine_ids:
                check.fail(f"{path}.machine", f"unknown machine {mid!r}")
                continue
            if not _ID_RE.match(sid):
                check.fail(f"{path}.id", "must match [A-Za-z0-9_-]+")
                continue
            if sid in seen_sensor_ids:
                check.fail(f"{path}.id", f"duplicate sensor id {sid!r}")
                continue
            seen_sensor_ids.add(sid)
            gain = check.num(s, "gain", path, float(defaults["gain"]))
            if gain == 0:
                check.fail(f"{path}.gain", "must be non-zero")
                gain = 1.0
            sensors.append(SensorSpec(
                sensor_id=sid, kind=kind, machine_id=mid,
                sample_period=check.num(s, "sample_period", path,
                                        int(defaults["sample_period"]), lo=1, integer=True),
                gain=gain,
                offset=check.num(s, "offset", path, float(defaults["offset"])),
                tolerance=check.num(s, "tolerance", path, float(defaults["tolerance"]), lo=0.0)))
    else:
        check.fail("plant.sensors", "must be 'auto' or a list")

    # workload
    workload_raw = plant.get("workload", {})
    noise_amp = check.num(workload_raw, "noise_amp", "plant.workload", 0.1, lo=0.0, hi=1.0)
    default_pattern = check.segments(workload_raw.get("default_pattern", []),
                                     "plant.workload.default_pattern", "rate")
    per_machine = workload_raw.get("per_machine", {})
    workload: dict[str, list[tuple[int, int, int]]] = {}
    if not isinstance(per_machine, dict):
        check.fail("plant.workload.per_machine", "must be an object keyed by machine id")
        per_machine = {}
    for mid in machine_ids:
        if mid in per_machine:
            segs = check.segments(per_machine[mid], f"plant.workload.per_machine.{mid}", "rate")
        else:
            segs = default_pattern
        workload[mid] = [(f, t, round(r * MILLI)) for f, t, r in segs]
    for mid in per_machine:
        if mid not in machine_ids:
            check.fail(f"plant.workload.per_machine.{mid}", "unknown machine id")

    ambient = [(f, t, float(v)) for f, t, v in
               check.segments(plant.get("ambient_c", [{"from": 0, "to": ticks or 1, "value": 25.0}]),
                              "plant.ambient_c", "value")]

    scheduled_faults = []
    for i, f in enumerate(plant.get("faults", [])):
        path = f"plant.faults[{i}]"
        if not isinstance(f, dict):
            check.fail(path, "must be an object")
            continue
        if f.get("machine") not in machine_ids:
            check.fail(f"{path}.machine", f"unknown machine {f.get('machine')!r}")
            continue
        kind = f.get("kind", "BREAKDOWN")
        if kind not in FAULT_KINDS:
            check.fail(f"{path}.kind", f"must be one of {', '.join(FAULT_KINDS)}")
            continue
        scheduled_faults.append({
            "machine": f["machine"], "kind": kind,
            "at_tick": check.num(f, "at_tick", path, 0, lo=0, integer=True),
            "repair_ticks": check.num(f, "repair_ticks", path, None, lo=1, integer=True)
            if "repair_ticks" in f else None,
        })

    scheduled_fires = []
    for i, f in enumerate(plant.get("fires", [])):
        path = f"plant.fires[{i}]"
        if not isinstance(f, dict):
            check.fail(path, "must be an object")
            continue
        if f.get("machine") not in machine_ids:
            check.fail(f"{path}.machine", f"unknown machine {f.get('machine')!r}")
            continue
        scheduled_fires.append({
            "machine": f["machine"],
            "at_tick": check.num(f, "at_tick", path, 0, lo=0, integer=True)})

    status_period = check.num(plant, "status_period", "plant", 10, lo=1, integer=True)

    # network
    net = raw.get("network", {})
    raw_gws = net.get("gateways")
    gateways: dict[str, list[str]] = {}
    if raw_gws is None:
        gateways = {"gw1": list(machine_ids)}
    elif isinstance(raw_gws, list) and raw_gws:
        assigned: set[str] = set()
        for i, gw in enumerate(raw_gws):
            path = f"network.gateways[{i}]"
            if not isinstance(gw, dict) or not isinstance(gw.get("id"), str):
                check.fail(path, "must be an object with an 'id'")
                continue
            members = gw.get("machines", [])
            if not isinstance(members, list):
                check.fail(f"{path}.machines", "must be a list of machine ids")
                continue
            for m in members:
                if m not in machine_ids:
                    check.fail(f"{path}.machines", f"unknown machine {m!r}")
                elif m in assigned:
                    check.fail(f"{path}.machines", f"machine {m!r} wired to two gateways")
                else:
                    assigned.add(m)
            gateways[gw["id"]] = [m for m in members if m in machine_ids]
        for m in machine_ids:
            if m not in assigned:
                check.fail("network.gateways", f"machine {m!r} not wired to any gateway")
    else:
        check.fail("network.gateways", "must be a non-empty list")

    device_link = _link(net.get("device_link", {}), check, "network.device_link",
                        {"base_latency": 1, "jitter": 0, "drop_probability": 0.0})
    uplink = _link(net.get("uplink", {}), check, "network.uplink",
                   {"base_latency": 2, "jitter": 1, "drop_probability": 0.01})
    qos1_timeout = check.num(net, "qos1_timeout", "network", 6, lo=1, integer=True)
    batch_period = check.num(net, "batch_period", "network", 60, lo=1, integer=True)
    batch_max_retries = check.num(net, "batch_max_retries", "network", 5, lo=0, integer=True)
    backoff_base = check.num(net, "backoff_base", "network", 2, lo=1, integer=True)

    # edge
    edge = raw.get("edge", {})
    window_ticks = check.num(edge, "window_ticks", "edge", 60, lo=1, integer=True)
    deadbands = {k: float(v) for k, v in
                 _deep_merge(DEFAULT_DEADBANDS, edge.get("deadbands", {})).items()}
    alerts = {k: float(v) for k, v in
              _deep_merge(DEFAULT_ALERTS, edge.get("alerts", {})).items()}
    safety_rules = []
    for i, r in enumerate(edge.get("safety", DEFAULT_SAFETY)):
        path = f"edge.safety[{i}]"
        if not isinstance(r, dict) or r.get("kind") not in ("FIRE_SPRINKLER", "OVERTEMP_COOLING"):
            check.fail(path, "kind must be FIRE_SPRINKLER or OVERTEMP_COOLING")
            continue
        rule = SafetyRule(
            kind=r["kind"],
            threshold=check.num(r, "threshold", path, 60.0),
            release_threshold=check.num(r, "release_threshold", path, 20.0),
            response_deadline=check.num(r, "response_deadline", path, 2, lo=1, integer=True))
        try:
            rule.validate()
            safety_rules.append(rule)
        except ValueError as e:
            check.fail(path, str(e))

    # policies
    pol = raw.get("policies", {})
    idle = pol.get("idle_shutdown", {})
    essential = idle.get("essential_machines", [])
    if not isinstance(essential, list):
        check.fail("policies.idle_shutdown.essential_machines", "must be a list")
        essential = []
    for m in essential:
        if m not in machine_ids:
            check.fail("policies.idle_shutdown.essential_machines",
                       f"unknown machine {m!r}")
    pm = pol.get("predictive_maintenance", {})
    an = pol.get("anomaly", {})
    ro = pol.get("resource_opt", {})
    policies = PolicySet(
        idle_shutdown=IdleShutdownPolicy(
            enabled=check.boolean(idle, "enabled", "policies.idle_shutdown", False),
            idle_threshold_ticks=check.num(idle, "idle_threshold_ticks",
                                           "policies.idle_shutdown", 300, lo=1, integer=True),
            wake_delay_ticks=check.num(idle, "wake_delay_ticks",
                                       "policies.idle_shutdown", 60, lo=0, integer=True),
            essential_machines=frozenset(essential)),
        predictive_maintenance=MaintenancePolicy(
            enabled=check.boolean(pm, "enabled", "policies.predictive_maintenance", False),
            wear_alarm=check.num(pm, "wear_alarm", "policies.predictive_maintenance",
                                 0.8, lo=0.0, hi=1.0),
            forecast_horizon=check.num(pm, "forecast_horizon",
                                       "policies.predictive_maintenance", 3000, lo=1, integer=True),
            escalation_events=check.num(pm, "escalation_events",
                                        "policies.predictive_maintenance", 8, lo=1, integer=True),
            escalation_window=check.num(pm, "escalation_window",
                                        "policies.predictive_maintenance", 600, lo=1, integer=True)),
        anomaly=AnomalyPolicy(
            enabled=check.boolean(an, "enabled", "policies.anomaly", False),
            window=check.num(an, "window", "policies.anomaly", 300, lo=2, integer=True),
            k=check.num(an, "k", "policies.anomaly", 4.0, lo=1e-9)),
        resource_opt=ResourceOptPolicy(
            enabled=check.boolean(ro, "enabled", "policies.resource_opt", False),
            excursion_slowdown_factor=check.num(ro, "excursion_slowdown_factor",
                                                "policies.resource_opt", 0.5,
                                                lo=0.0, hi=1.0)),
    )

    trace = raw.get("trace", {})
    trace_readings = check.boolean(trace, "include_readings", "trace", False)
    trace_deliveries = check.boolean(trace, "include_deliveries", "trace", False)
    kpi_period = check.num(trace, "kpi_period", "trace", 60, lo=1, integer=True)

    if check.errors:
        raise ConfigError(check.errors)

    canonical = _canonicalize(raw)
    return ResolvedConfig(
        ticks=ticks, seed=seed, tick_duration_s=tick_duration, tick_ms=tick_ms,
        machines=machines, sensors=sensors, workload=workload, noise_amp=noise_amp,
        ambient=ambient, scheduled_faults=scheduled_faults,
        scheduled_fires=scheduled_fires, status_period=status_period,
        gateways=gateways, device_link=device_link, uplink=uplink,
        qos1_timeout=qos1_timeout, batch_period=batch_period,
        batch_max_retries=batch_max_retries, backoff_base=backoff_base,
        window_ticks=window_ticks, deadbands=deadbands, alerts=alerts,
        safety_rules=safety_rules, policies=policies,
        trace_readings=trace_readings, trace_deliveries=trace_deliveries,
        kpi_period=kpi_period,
        config_hash=canonical_hash(raw), canonical=canonical,
        raw=json.loads(json.dumps(raw)))


def _canonicalize(raw: dict) -> dict:
    """Deep-copied config with the seed removed (it is checked separately)."""
    out = json.loads(json.dumps(raw))
    out.get("run", {}).pop("seed", None)
    return out


def canonical_hash(raw: dict) -> str:
    payload = json.dumps(_canonicalize(raw), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def load_config(path: str | Path, seed_override: int | None = None) -> ResolvedConfig:
    p = Path(path)
    if not p.exists():
        raise ConfigError([(str(p), "config file not found")])
    try:
        raw = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError([(str(p), f"not valid JSON: {e}")]) from e
    return resolve_config(raw, seed_override=seed_override)
