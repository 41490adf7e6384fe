"""Fixed-tick simulation engine: clock, phases, command queue.

One `step()` advances exactly one tick through a fixed phase order:

  1. apply external commands      5. edge processing
  2. plant dynamics               6. cloud analytics
  3. sensor sampling              7. actuator command enqueue
  4. transport delivery           8. metrics + trace records

External commands are serialized through a thread-safe queue and only
ever applied at a tick boundary, so a live session replays exactly. No
wall-clock time enters the engine; pacing is the caller's concern.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Any, Callable

from . import plant
from .analytics import CloudAnalytics, PolicySet
from .config import ResolvedConfig
from .edge import EdgeNode, FilterDecision
from .plant import (DemandAllocator, FaultKind, Machine, Mode, Trigger,
                    sample_sensor)
from .rng import split_rng
from .transport import Network, Qos, TelemetryEnvelope

__all__ = ["ExternalCommand", "Simulation", "SimClock"]

EXTERNAL_KINDS = ("policy-change", "fault-injection", "actuator-override", "sim-control")
MILLI = 1000


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


@dataclass
class SimClock:
    tick: int = 0                 # completed ticks; records carry 0-based indices
    tick_duration_s: float = 1.0


@dataclass
class ExternalCommand:
    kind: str
    params: dict
    apply_at_tick: int | None = None   # stamped at drain when None
    issued_at: float = 0.0             # wall time, informational only
    source: str = "external"


class Simulation:
    """One deterministic world: plant + network + edge + cloud.

    `trace` (if set) receives every trace record in order (a TraceWriter
    or anything with the same interface). `event_tap` (if set) receives
    live telemetry events for streaming.
    """

    def __init__(self, cfg: ResolvedConfig, policies: PolicySet,
                 trace=None,
                 event_tap: Callable[[dict], None] | None = None):
        self.cfg = cfg
        self.policies = policies
        self.trace = trace
        self.event_tap = event_tap
        self.clock = SimClock(tick=0, tick_duration_s=cfg.tick_duration_s)

        seed = cfg.seed
        self.machines: dict[str, Machine] = {}
        for params in cfg.machines:
            mid = params.machine_id
            self.machines[mid] = Machine(
                params, cfg.tick_duration_s,
                rng_faults=split_rng(seed, f"faults/{mid}"),
                rng_defects=split_rng(seed, f"defects/{mid}"),
                rng_fire=split_rng(seed, f"fire/{mid}"),
                rng_pressure=split_rng(seed, f"pressure/{mid}"),
                ambient_c=cfg.ambient_at(0))
        self.machine_ids = list(self.machines)

        self.sensor_rng = {s.sensor_id: split_rng(seed, f"sensor-noise/{s.sensor_id}")
                           for s in cfg.sensors}
        self.sensor_seq = {s.sensor_id: 0 for s in cfg.sensors}
        self.status_seq = {m: 0 for m in self.machine_ids}

        self.network = Network(
            cfg.topology(), cfg.device_link, cfg.uplink, seed,
            qos1_timeout=cfg.qos1_timeout,
            batch_backoff_base=cfg.backoff_base,
            batch_max_retries=cfg.batch_max_retries)
        self.network.log_deliveries = cfg.trace_deliveries

        calibrations = {s.sensor_id: (s.gain, s.offset) for s in cfg.sensors}
        grace = cfg.device_link.base_latency + cfg.device_link.jitter
        self._edge_grace = grace
        self.edges: dict[str, EdgeNode] = {
            gw: EdgeNode(gw, cfg.window_ticks, cfg.deadbands, cfg.alerts,
                         cfg.safety_rules, calibrations, grace)
            for gw in cfg.gateways
        }
        self.gateway_of = {m: gw for gw, members in cfg.gateways.items()
                           for m in members}

        downlink_margin = cfg.device_link.base_latency + cfg.uplink.base_latency + 1
        self.cloud = CloudAnalytics(
            policies, self.machine_ids, cfg.workload,
            maintenance_ticks={m.machine_id: m.maintenance_ticks for m in cfg.machines},
            temp_band_high={m.machine_id: m.band_high_c for m in cfg.machines},
            pressure_max={m.machine_id: m.p_max_kpa for m in cfg.machines},
            downlink_margin=downlink_margin)

        self.allocator = DemandAllocator(
            self.machine_ids,
            {m.machine_id: m.max_rate_milli for m in cfg.machines},
            cfg.noise_amp, split_rng(seed, "workload"))

        # dense per-tick lookups
        self.sched: dict[str, list[int]] = {}
        for mid in self.machine_ids:
            row = [0] * cfg.ticks
            for frm, to, rate in cfg.workload.get(mid, ()):
                for t in range(frm, min(to, cfg.ticks)):
                    row[t] = rate
            self.sched[mid] = row
        self.ambient = [0.0] * cfg.ticks
        for t in range(cfg.ticks):
            self.ambient[t] = cfg.ambient_at(t)

        self.fault_at: dict[int, list[dict]] = {}
        for f in cfg.scheduled_faults:
            self.fault_at.setdefault(f["at_tick"], []).append(f)
        self.fire_at: dict[int, list[str]] = {}
        for f in cfg.scheduled_fires:
            self.fire_at.setdefault(f["at_tick"], []).append(f["machine"])

        # KPI accumulators (exact integers)
        self.energy_uj = {m: 0 for m in self.machine_ids}
        self.downtime = {m: 0 for m in self.machine_ids}
        self.produced = {m: 0 for m in self.machine_ids}
        self.defective = {m: 0 for m in self.machine_ids}
        self.scrapped = {m: 0 for m in self.machine_ids}
        self.sched_ticks = {m: 0 for m in self.machine_ids}

        self._cmd_lock = threading.Lock()
        self._cmd_queue: list[ExternalCommand] = []
        self.rejected_commands = 0

        # last mode each machine has announced; command- and safety-driven
        # changes (phases 4/5) publish on the next tick's sampling phase
        self._published_mode = {m: Mode.IDLE for m in self.machine_ids}
        self._sprinkler_activation: dict[str, int] = {}  # first activation tick

        # arrival buffers and sinks are reused across ticks
        self._gw_arrivals: dict[str, list] = {gw: [] for gw in self.edges}
        self._cloud_arrivals: list[TelemetryEnvelope] = []
        self._store_arrivals: list = []
        self._sinks = {
            "gateway": lambda gw, env, tk: self._gw_arrivals[gw].append(env),
            "cloud": lambda env, tk: self._cloud_arrivals.append(env),
            "device": self._apply_device_command,
            "store": lambda batch, tk: self._store_arrivals.append(batch),
        }

        # due-sensor lists per tick phase (periods are small and repeat)
        lcm = 1
        for s in cfg.sensors:
            g = _gcd(lcm, s.sample_period)
            lcm = lcm // g * s.sample_period
            if lcm > 3600:
                lcm = 0
                break
        self._sensor_lcm = lcm
        if lcm:
            self._due_sensors = [
                [s for s in cfg.sensors if phase % s.sample_period == 0]
                for phase in range(lcm)]
        else:
            self._due_sensors = None
        if self.trace:
            self.trace.record({"k": "hdr", "v": 1, "hash": cfg.config_hash,
                               "seed": cfg.seed, "ticks": cfg.ticks,
                               "tick_ms": cfg.tick_ms})

    # -- external command ingress (thread-safe) ------------------------------

    def submit(self, command: ExternalCommand) -> tuple[bool, str]:
        """Queue a command; returns (accepted, message). FIFO per receipt."""
        err = self._validate_command(command)
        if err:
            self.rejected_commands += 1
            return False, err
        with self._cmd_lock:
            self._cmd_queue.append(command)
        return True, "accepted"

    def _validate_command(self, cmd: ExternalCommand) -> str | None:
        if cmd.kind not in EXTERNAL_KINDS:
            return f"unknown command kind {cmd.kind!r}"
        p = cmd.params
        if cmd.kind == "fault-injection":
            if p.get("machine") not in self.machines:
                return f"unknown machine {p.get('machine')!r}"
            if p.get("fault_kind", "BREAKDOWN") not in FaultKind.__members__:
                return f"unknown fault kind {p.get('fault_kind')!r}"
        elif cmd.kind == "actuator-override":
            if p.get("machine") not in self.machines:
                return f"unknown machine {p.get('machine')!r}"
            if p.get("actuator") not in ("sprinkler", "cooling", "mode", "rate_limit"):
                return f"unknown actuator {p.get('actuator')!r}"
            if p.get("actuator") == "mode" and p.get("action") not in (
                    "shutdown", "wake", "maintenance"):
                return f"unknown mode action {p.get('action')!r}"
        elif cmd.kind == "policy-change":
            if p.get("policy") not in ("idle_shutdown", "predictive_maintenance",
                                       "anomaly", "resource_opt"):
                return f"unknown policy {p.get('policy')!r}"
            if not isinstance(p.get("updates"), dict):
                return "policy-change needs an 'updates' object"
        elif cmd.kind == "sim-control":
            if p.get("action") not in ("pause", "resume", "speed"):
                return f"unknown sim action {p.get('action')!r}"
        return None

    # -- one tick -------------------------------------------------------------

    def step(self) -> None:
        t = self.clock.tick
        cfg = self.cfg

        # phase 1: external commands
        with self._cmd_lock:
            due = []
            rest = []
            for cmd in self._cmd_queue:
                if cmd.apply_at_tick is None or cmd.apply_at_tick <= t:
                    due.append(cmd)
                else:
                    rest.append(cmd)
            self._cmd_queue = rest
        for cmd in due:
            if cmd.apply_at_tick is None:
                cmd.apply_at_tick = t
            self._apply_external(cmd, t)

        # phase 2: plant dynamics
        scheduled = {m: self.sched[m][t] if t < len(self.sched[m]) else 0
                     for m in self.machine_ids}
        can_accept = {}
        for mid, machine in self.machines.items():
            can_accept[mid] = machine.s.mode in plant.LIVE_MODES
        assigned = self.allocator.assign(scheduled, can_accept)

        fires = self.fire_at.get(t, ())
        faults = self.fault_at.get(t, ())
        for mid in fires:
            self.machines[mid].start_fire()

        for mid, machine in self.machines.items():
            sched_fault = None
            for f in faults:
                if f["machine"] == mid:
                    sched_fault = plant.FaultEvent(
                        mid, FaultKind(f["kind"]), t,
                        f["repair_ticks"] or machine.p.repair_ticks)
            machine.step(t, assigned[mid], self.ambient[t] if t < len(self.ambient) else 25.0,
                         scheduled_fault=sched_fault)
            st = machine.s
            self.energy_uj[mid] += machine.last_energy_uj
            self.produced[mid] += machine.last_produced
            self.defective[mid] += machine.last_defective
            self.scrapped[mid] += machine.last_scrapped
            if scheduled[mid] > 0:
                self.sched_ticks[mid] += 1
                if st.mode is Mode.FAULTED or st.mode is Mode.MAINTENANCE:
                    self.downtime[mid] += 1

        # phase 3: sensor sampling and event publication
        if self._due_sensors is not None:
            due_sensors = self._due_sensors[t % self._sensor_lcm]
        else:
            due_sensors = [s for s in cfg.sensors if t % s.sample_period == 0]
        for spec in due_sensors:
            machine = self.machines[spec.machine_id]
            truth = self._ground_truth(machine, spec.kind)
            seq = self.sensor_seq[spec.sensor_id]
            self.sensor_seq[spec.sensor_id] = seq + 1
            reading = sample_sensor(spec, truth, t, seq, self.sensor_rng[spec.sensor_id])
            if self.trace and cfg.trace_readings:
                self.trace.reading(t, spec.sensor_id, spec.machine_id,
                                   spec.kind, reading.value, seq)
            env = TelemetryEnvelope(
                topic=f"plant/{spec.machine_id}/{spec.kind.lower()}",
                qos=Qos.AT_MOST_ONCE,
                payload={"rec": "reading", "sensor": spec.sensor_id,
                         "machine": spec.machine_id, "kind": spec.kind,
                         "tick": t, "value": reading.value, "seq": seq},
                published_tick=t, source=spec.machine_id)
            self.network.publish(env, t)

        for mid, machine in self.machines.items():
            mode = machine.s.mode
            if mode is self._published_mode[mid]:
                continue
            self._published_mode[mid] = mode
            seq = self.status_seq[mid]
            self.status_seq[mid] = seq + 1
            env = TelemetryEnvelope(
                topic=f"plant/{mid}/status", qos=Qos.AT_LEAST_ONCE,
                payload={"rec": "mode", "machine": mid, "mode": mode.value,
                         "tick": t, "seq": seq,
                         "sprinkler_on": machine.s.sprinkler_on},
                published_tick=t, source=mid)
            self.network.publish(env, t)
            if self.event_tap:
                self.event_tap({"event": "machine", "topic": f"plant/{mid}/state",
                                "tick": t, "data": {"machine": mid,
                                                    "mode": mode.value}})

        if t % cfg.status_period == 0:
            for mid, machine in self.machines.items():
                env = TelemetryEnvelope(
                    topic=f"plant/{mid}/status", qos=Qos.AT_MOST_ONCE,
                    payload={"rec": "status", "machine": mid,
                             "wear": machine.s.wear, "mode": machine.s.mode.value,
                             "tick": t},
                    published_tick=t, source=mid)
                self.network.publish(env, t)

        # phase 4: transport delivery
        gw_arrivals = self._gw_arrivals
        for lst in gw_arrivals.values():
            lst.clear()
        cloud_arrivals = self._cloud_arrivals
        cloud_arrivals.clear()
        store_arrivals = self._store_arrivals
        store_arrivals.clear()
        self.network.deliver(t, self._sinks)

        # phase 5: edge processing
        windows_due = (t + 1 - self._edge_grace) % cfg.window_ticks == 0
        for gw, edge in self.edges.items():
            for env in gw_arrivals[gw]:
                self._edge_ingest(gw, edge, env, t)
            summaries = edge.close_windows(t) if windows_due else ()
            for summary in summaries:
                edge.buffer_for_batch({
                    "rec": "window", "sensor": summary.sensor_id,
                    "machine": summary.machine_id, "kind": summary.kind,
                    "start": summary.window_start_tick, "len": summary.window_len,
                    "count": summary.count, "min": summary.min, "max": summary.max,
                    "mean": summary.mean, "last": summary.last})
            if (t + 1) % cfg.batch_period == 0:
                records = edge.drain_batch()
                if records:
                    self.network.send_batch(gw, records, t)

        # phase 6: cloud analytics
        for env in cloud_arrivals:
            self._cloud_ingest(env, t)
        for batch in store_arrivals:
            for record in batch.records:
                self.cloud.ingest_batch_record(record)
        decisions = self.cloud.step(t)
        for ev in self.cloud.anomalies:
            if self.trace:
                self.trace.record({"k": "an", "t": t, "id": ev.sensor_id,
                                   "m": ev.machine_id, "kind": ev.kind,
                                   "v": round(ev.observed, 3),
                                   "mu": round(ev.rolling_mean, 3),
                                   "sd": round(ev.rolling_std, 3),
                                   "sc": round(ev.score, 3)})
            if self.event_tap:
                self.event_tap({"event": "anomaly",
                                "topic": f"plant/{ev.machine_id}/anomaly", "tick": t,
                                "data": {"sensor": ev.sensor_id,
                                         "machine": ev.machine_id, "kind": ev.kind,
                                         "observed": round(ev.observed, 3),
                                         "score": round(ev.score, 3)}})

        # phase 7: actuator command enqueue (cloud -> devices)
        for decision in decisions:
            mid = decision["machine"]
            payload = {"rec": "cmd", **decision, "tick": t}
            env = TelemetryEnvelope(topic=f"plant/{mid}/cmd", qos=Qos.AT_LEAST_ONCE,
                                    payload=payload, published_tick=t, source="cloud")
            self.network.send_command(env, mid, t)
            self._record_command(t, "cloud", decision, "sent")

        # phase 8: metrics and trace
        if self.trace:
            ms = self.trace.machine_state
            for mid, machine in self.machines.items():
                st = machine.s
                ms(t, mid, st.mode.value, round(st.power_draw * 1000),
                   machine.last_produced, machine.last_defective,
                   machine.last_scrapped, scheduled[mid], st.temperature,
                   st.pressure, st.wear, 1 if st.cooling_on else 0,
                   1 if st.sprinkler_on else 0, st.fire_intensity)
        if (t + 1) % cfg.kpi_period == 0 or t == cfg.ticks - 1:
            totals = self.kpi_totals()
            if self.trace:
                self.trace.record({"k": "kpi", "t": t, **totals})
            if self.event_tap:
                self.event_tap({"event": "kpi", "topic": "plant/kpis/summary",
                                "tick": t, "data": totals})

        self.clock.tick = t + 1

    # -- helpers ----------------------------------------------------------------

    def _ground_truth(self, machine: Machine, kind: str) -> float:
        if kind == "ENERGY":
            return machine.s.power_draw
        if kind == "TEMPERATURE":
            return machine.s.temperature
        if kind == "PRESSURE":
            return machine.s.pressure
        return machine.s.fire_intensity

    def _edge_ingest(self, gw: str, edge: EdgeNode, env: TelemetryEnvelope,
                     t: int) -> None:
        p = env.payload
        rec = p.get("rec")
        if rec == "reading":
            if not edge.fresh(p["sensor"], p["seq"]):
                return
            corrected, decision, safety_cmds = edge.process_reading(
                p["sensor"], p["machine"], p["kind"], p["value"], p["tick"], p["seq"])
            if decision is not FilterDecision.SUPPRESS:
                topic = (f"plant/alerts/{p['kind'].lower()}"
                         if decision is FilterDecision.ALERT
                         else f"plant/{p['machine']}/{p['kind'].lower()}")
                qos = Qos.AT_LEAST_ONCE if decision is FilterDecision.ALERT else Qos.AT_MOST_ONCE
                fwd = TelemetryEnvelope(
                    topic=topic, qos=qos,
                    payload={"rec": "reading", "alert": decision is FilterDecision.ALERT,
                             "sensor": p["sensor"], "machine": p["machine"],
                             "kind": p["kind"], "tick": p["tick"],
                             "value": corrected, "seq": p["seq"]},
                    published_tick=t, source=gw)
                self.network.forward_to_cloud(fwd, gw, t)
                if decision is FilterDecision.ALERT and self.event_tap:
                    self.event_tap({"event": "alert", "topic": topic, "tick": t,
                                    "data": {"sensor": p["sensor"],
                                             "machine": p["machine"],
                                             "kind": p["kind"],
                                             "value": round(corrected, 3)}})
            for machine_id, actuator, on in safety_cmds:
                self._apply_safety(machine_id, actuator, on, t, gw)
        elif rec == "mode":
            fwd = TelemetryEnvelope(topic=env.topic, qos=Qos.AT_LEAST_ONCE,
                                    payload=p, published_tick=t, source=gw)
            self.network.forward_to_cloud(fwd, gw, t)
        elif rec == "status":
            edge.buffer_for_batch(p)

    def _apply_safety(self, mid: str, actuator: str, on: bool, t: int, gw: str) -> None:
        machine = self.machines[mid]
        if actuator == "sprinkler":
            machine.s.sprinkler_on = on
            if on and mid not in self._sprinkler_activation:
                self._sprinkler_activation[mid] = t
        else:
            machine.s.cooling_on = on
        self._record_command(t, "edge", {"machine": mid, "actuator": actuator,
                                         "on": on}, "applied")
        env = TelemetryEnvelope(
            topic="plant/alerts/safety", qos=Qos.AT_LEAST_ONCE,
            payload={"rec": "safety", "machine": mid, "actuator": actuator,
                     "on": on, "tick": t},
            published_tick=t, source=gw)
        self.network.forward_to_cloud(env, gw, t)
        if self.event_tap:
            self.event_tap({"event": "alert", "topic": "plant/alerts/safety",
                            "tick": t, "data": {"machine": mid, "actuator": actuator,
                                                "on": on}})

    def _cloud_ingest(self, env: TelemetryEnvelope, t: int) -> None:
        p = env.payload
        rec = p.get("rec")
        if rec == "reading":
            self.cloud.ingest_reading(p["sensor"], p["machine"], p["kind"],
                                      p["tick"], p["value"], p["seq"], t,
                                      alert=p.get("alert", False))
            if self.event_tap:
                self.event_tap({"event": "reading", "topic": env.topic, "tick": t,
                                "data": {"sensor": p["sensor"], "machine": p["machine"],
                                         "kind": p["kind"], "tick": p["tick"],
                                         "value": round(p["value"], 3)}})
        elif rec == "mode":
            self.cloud.ingest_status(p["machine"], p["mode"], p["tick"], p["seq"],
                                     p.get("sprinkler_on"))
        elif rec == "safety":
            if p["actuator"] == "sprinkler":
                self.cloud.ingest_sprinkler(p["machine"], p["on"])

    def _apply_device_command(self, device: str, env: TelemetryEnvelope, t: int) -> None:
        p = env.payload
        machine = self.machines.get(device)
        if machine is None:
            return
        action = p.get("action")
        if action == "shutdown":
            machine.transition_mode(Trigger.SHUTDOWN_CMD)
        elif action == "wake":
            if machine.s.sprinkler_on:
                machine.rejected_triggers += 1  # safety precedence
            else:
                machine.transition_mode(Trigger.WAKE_CMD)
        elif action == "maintenance":
            machine.transition_mode(Trigger.MAINTENANCE_START,
                                    maintenance_ticks=p.get("duration"))
        elif action == "rate_limit":
            self.allocator.set_rate_limit(device, p.get("factor_milli", MILLI))

    def _apply_external(self, cmd: ExternalCommand, t: int) -> None:
        p = cmd.params
        status = "applied"
        if cmd.kind == "fault-injection":
            machine = self.machines[p["machine"]]
            kind = FaultKind(p.get("fault_kind", "BREAKDOWN"))
            if kind is FaultKind.FIRE:
                machine.start_fire()
            else:
                ok = machine.inject_fault(kind, t, p.get("repair_ticks"))
                status = "applied" if ok else "noop"
        elif cmd.kind == "actuator-override":
            machine = self.machines[p["machine"]]
            act = p["actuator"]
            if act in ("sprinkler", "cooling"):
                on = bool(p.get("on"))
                if act == "sprinkler":
                    machine.s.sprinkler_on = on
                    if on and p["machine"] not in self._sprinkler_activation:
                        self._sprinkler_activation[p["machine"]] = t
                else:
                    machine.s.cooling_on = on
                gw = self.gateway_of[p["machine"]]
                self.edges[gw].actuator_state[(p["machine"], act)] = on
                self.cloud.ingest_sprinkler(p["machine"], on) if act == "sprinkler" else None
            elif act == "mode":
                trigger = {"shutdown": Trigger.SHUTDOWN_CMD, "wake": Trigger.WAKE_CMD,
                           "maintenance": Trigger.MAINTENANCE_START}[p["action"]]
                ok = machine.transition_mode(trigger)
                status = "applied" if ok else "noop"
            elif act == "rate_limit":
                self.allocator.set_rate_limit(p["machine"], p.get("factor_milli", MILLI))
        elif cmd.kind == "policy-change":
            self._apply_policy_change(p["policy"], p["updates"])
        elif cmd.kind == "sim-control":
            status = "noted"
        self._record_command(t, cmd.source, {"kind": cmd.kind, **p}, status)

    def _apply_policy_change(self, policy: str, updates: dict) -> None:
        target = getattr(self.policies, policy)
        for key, value in updates.items():
            if key == "essential_machines":
                value = frozenset(value)
            if hasattr(target, key):
                setattr(target, key, value)
        if policy == "anomaly":
            self.cloud.detectors.clear()

    def _record_command(self, t: int, src: str, body: dict, status: str) -> None:
        if self.trace:
            clean = {k: (sorted(v) if isinstance(v, (set, frozenset)) else v)
                     for k, v in body.items()}
            self.trace.record({"k": "cmd", "t": t, "src": src, "st": status,
                               "body": clean})
        if self.event_tap:
            self.event_tap({"event": "command", "topic": "plant/commands/log",
                            "tick": t, "data": {"src": src, "status": status,
                                                **{k: (sorted(v) if isinstance(v, (set, frozenset)) else v)
                                                   for k, v in body.items()}}})

    # -- views -------------------------------------------------------------------

    def run(self, ticks: int | None = None) -> None:
        end = self.cfg.ticks if ticks is None else self.clock.tick + ticks
        while self.clock.tick < end:
            self.step()

    def kpi_totals(self) -> dict:
        e = sum(self.energy_uj.values())
        return {"e": e, "dt": sum(self.downtime.values()),
                "w": sum(self.defective.values()) + sum(self.scrapped.values()),
                "u": sum(self.produced.values()),
                "d": sum(self.defective.values()),
                "x": sum(self.scrapped.values())}

    def per_machine_energy(self) -> dict[str, int]:
        return dict(self.energy_uj)

    def snapshot(self) -> dict:
        machines = {}
        for mid, machine in self.machines.items():
            st = machine.s
            machines[mid] = {
                "mode": st.mode.value, "power_w": round(st.power_draw, 3),
                "temperature_c": round(st.temperature, 3),
                "pressure_kpa": round(st.pressure, 3),
                "wear": round(st.wear, 6),
                "units_produced": st.units_produced,
                "units_defective": st.units_defective,
                "cooling_on": st.cooling_on, "sprinkler_on": st.sprinkler_on,
                "fire_intensity": round(st.fire_intensity, 3),
                "essential": machine.p.essential,
            }
        alerts = []
        for mid, machine in self.machines.items():
            if machine.s.sprinkler_on:
                alerts.append({"kind": "fire", "machine": mid, "actuator": "sprinkler"})
            if machine.s.cooling_on:
                alerts.append({"kind": "overtemp", "machine": mid, "actuator": "cooling"})
            if machine.s.mode is Mode.FAULTED:
                alerts.append({"kind": "fault", "machine": mid,
                               "fault": machine.active_fault.kind.value
                               if machine.active_fault else "BREAKDOWN"})
        pol = self.policies
        return {
            "tick": self.clock.tick,
            "machines": machines,
            "alerts": alerts,
            "policies": {
                "idle_shutdown": {
                    "enabled": pol.idle_shutdown.enabled,
                    "idle_threshold_ticks": pol.idle_shutdown.idle_threshold_ticks,
                    "wake_delay_ticks": pol.idle_shutdown.wake_delay_ticks,
                    "essential_machines": sorted(pol.idle_shutdown.essential_machines)},
                "predictive_maintenance": {
                    "enabled": pol.predictive_maintenance.enabled,
                    "wear_alarm": pol.predictive_maintenance.wear_alarm,
                    "forecast_horizon": pol.predictive_maintenance.forecast_horizon},
                "anomaly": {"enabled": pol.anomaly.enabled,
                            "window": pol.anomaly.window, "k": pol.anomaly.k},
                "resource_opt": {
                    "enabled": pol.resource_opt.enabled,
                    "excursion_slowdown_factor": pol.resource_opt.excursion_slowdown_factor},
            },
            "kpis": self.kpi_totals(),
        }
