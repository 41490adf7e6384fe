"""Cloud-side analytics: anomaly detection and the optimization policies.

Everything here operates on delivered telemetry only (readings the edge
forwarded, status events, batched window summaries and wear snapshots),
never on plant ground truth. Decisions come back as commands that travel
down the same star network they came up.

The four levers that distinguish an optimized run from the baseline:
idle shutdown, predictive maintenance, anomaly detection, and
excursion-driven schedule adjustment.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

__all__ = [
    "AnomalyEvent",
    "MaintenancePlan",
    "IdleShutdownPolicy",
    "MaintenancePolicy",
    "AnomalyPolicy",
    "ResourceOptPolicy",
    "PolicySet",
    "RollingDetector",
    "detect_anomaly",
    "forecast_wear_crossing",
    "CloudAnalytics",
]

MILLI = 1000


@dataclass
class AnomalyEvent:
    sensor_id: str
    machine_id: str
    kind: str
    tick: int
    observed: float
    rolling_mean: float
    rolling_std: float
    score: float


@dataclass
class MaintenancePlan:
    machine_id: str
    scheduled_tick: int
    duration: int
    reason: str                     # WEAR_FORECAST | ANOMALY_ESCALATION


@dataclass
class IdleShutdownPolicy:
    enabled: bool = False
    idle_threshold_ticks: int = 300
    wake_delay_ticks: int = 60
    essential_machines: frozenset[str] = frozenset()


@dataclass
class MaintenancePolicy:
    enabled: bool = False
    wear_alarm: float = 0.8
    forecast_horizon: int = 3000
    escalation_events: int = 8
    escalation_window: int = 600


@dataclass
class AnomalyPolicy:
    enabled: bool = False
    window: int = 300
    k: float = 4.0


@dataclass
class ResourceOptPolicy:
    enabled: bool = False
    excursion_slowdown_factor: float = 0.5


@dataclass
class PolicySet:
    idle_shutdown: IdleShutdownPolicy = field(default_factory=IdleShutdownPolicy)
    predictive_maintenance: MaintenancePolicy = field(default_factory=MaintenancePolicy)
    anomaly: AnomalyPolicy = field(default_factory=AnomalyPolicy)
    resource_opt: ResourceOptPolicy = field(default_factory=ResourceOptPolicy)

    def all_disabled(self) -> "PolicySet":
        """The baseline view of this policy set: every lever off."""
        return PolicySet(
            idle_shutdown=IdleShutdownPolicy(
                enabled=False,
                idle_threshold_ticks=self.idle_shutdown.idle_threshold_ticks,
                wake_delay_ticks=self.idle_shutdown.wake_delay_ticks,
                essential_machines=self.idle_shutdown.essential_machines),
            predictive_maintenance=MaintenancePolicy(
                enabled=False,
                wear_alarm=self.predictive_maintenance.wear_alarm,
                forecast_horizon=self.predictive_maintenance.forecast_horizon,
                escalation_events=self.predictive_maintenance.escalation_events,
                escalation_window=self.predictive_maintenance.escalation_window),
            anomaly=AnomalyPolicy(enabled=False, window=self.anomaly.window,
                                  k=self.anomaly.k),
            resource_opt=ResourceOptPolicy(
                enabled=False,
                excursion_slowdown_factor=self.resource_opt.excursion_slowdown_factor),
        )


class RollingDetector:
    """Streaming z-score over the trailing W values (excluding the current one).

    Population statistics; the first W values are warm-up and never emit.
    Running sums are re-anchored with fsum periodically to keep them exact
    enough that brute-force recomputation agrees.
    """

    def __init__(self, window: int, k: float):
        if window < 2:
            raise ValueError("window must be >= 2")
        if k <= 0:
            raise ValueError("k must be > 0")
        self.window = window
        self.k = k
        self.values: deque[float] = deque(maxlen=window)
        self.sum = 0.0
        self.sumsq = 0.0
        self._since_anchor = 0

    def push(self, value: float) -> tuple[float, float, float] | None:
        """Feed one value; returns (mean, std, score) when an event fires."""
        event = None
        if len(self.values) == self.window:
            mean = self.sum / self.window
            var = self.sumsq / self.window - mean * mean
            std = math.sqrt(var) if var > 0 else 0.0
            if std > 0:
                score = abs(value - mean) / std
                if score > self.k:
                    event = (mean, std, score)
            evicted = self.values[0]
            self.sum -= evicted
            self.sumsq -= evicted * evicted
        self.values.append(value)
        self.sum += value
        self.sumsq += value * value
        self._since_anchor += 1
        if self._since_anchor >= 1024:
            self.sum = math.fsum(self.values)
            self.sumsq = math.fsum(v * v for v in self.values)
            self._since_anchor = 0
        return event


def detect_anomaly(values: list[float], window: int, k: float) -> list[tuple[int, float, float, float]]:
    """Batch form of the detector: list of (index, mean, std, score)."""
    det = RollingDetector(window, k)
    events = []
    for i, v in enumerate(values):
        hit = det.push(v)
        if hit is not None:
            events.append((i, hit[0], hit[1], hit[2]))
    return events


def forecast_wear_crossing(history: list[tuple[int, float]], wear_alarm: float,
                           horizon: int, now: int) -> int | None:
    """Linear extrapolation of the wear trend; tick of forecast alarm crossing.

    Returns None with fewer than two points, a flat/declining trend below
    the alarm, or a crossing beyond the horizon.
    """
    if len(history) < 2:
        return None
    (t0, w0), (t1, w1) = history[-2], history[-1]
    if w1 >= wear_alarm:
        return now
    if t1 <= t0:
        return None
    slope = (w1 - w0) / (t1 - t0)
    if slope <= 0:
        return None
    crossing = t1 + (wear_alarm - w1) / slope
    if crossing > now + horizon:
        return None
    return max(now, int(math.ceil(crossing - 1e-9)))


class CloudAnalytics:
    """Holds the cloud's believed plant state and evaluates the policies.

    `schedule_segments` maps machine -> list of (from_tick, to_tick, rate)
    covering the run; the production plan is cloud data, so looking ahead
    in it is legitimate (unlike reading live plant state).
    """

    def __init__(self, policies: PolicySet, machine_ids: list[str],
                 schedule_segments: dict[str, list[tuple[int, int, int]]],
                 maintenance_ticks: dict[str, int],
                 temp_band_high: dict[str, float],
                 pressure_max: dict[str, float],
                 downlink_margin: int = 4):
        self.policies = policies
        self.machine_ids = machine_ids
        self.schedule_segments = schedule_segments
        self.maintenance_ticks = maintenance_ticks
        self.temp_band_high = temp_band_high
        self.pressure_max = pressure_max
        self.downlink_margin = downlink_margin

        self.detectors: dict[str, RollingDetector] = {}
        self.last_seq: dict[str, int] = {}
        self.stale_drops = 0

        self.known_mode: dict[str, str] = {m: "IDLE" for m in machine_ids}
        self.idle_since: dict[str, int] = {m: 0 for m in machine_ids}
        self.sprinkler_on: dict[str, bool] = {m: False for m in machine_ids}
        self.wear_history: dict[str, list[tuple[int, float]]] = {m: [] for m in machine_ids}
        self.commanded_off: set[str] = set()
        self.wake_pending: set[str] = set()
        self.plans: dict[str, MaintenancePlan] = {}
        self.dispatched_plans: list[MaintenancePlan] = []
        self.anomaly_ticks: dict[str, deque[int]] = {m: deque() for m in machine_ids}
        self.excursions: dict[str, str] = {}   # machine -> sensor kind that opened it
        self.rate_limited: set[str] = set()

        self.anomalies: list[AnomalyEvent] = []   # emitted this tick
        self._new_events: list[AnomalyEvent] = []

    # -- ingestion ----------------------------------------------------------

    def _fresh(self, stream_key: str, seq: int) -> bool:
        last = self.last_seq.get(stream_key, -1)
        if seq <= last:
            self.stale_drops += 1
            return False
        self.last_seq[stream_key] = seq
        return True

    def ingest_reading(self, sensor_id: str, machine_id: str, kind: str,
                       tick: int, value: float, seq: int, now: int,
                       alert: bool = False) -> None:
        """One forwarded (calibration-corrected) reading delivered to the cloud."""
        if not self._fresh(f"r/{sensor_id}", seq):
            return
        if self.policies.anomaly.enabled and kind != "FIRE":
            det = self.detectors.get(sensor_id)
            if det is None:
                det = self.detectors[sensor_id] = RollingDetector(
                    self.policies.anomaly.window, self.policies.anomaly.k)
            hit = det.push(value)
            if hit is not None:
                ev = AnomalyEvent(sensor_id, machine_id, kind, now,
                                  value, hit[0], hit[1], hit[2])
                self._new_events.append(ev)
                self._note_anomaly(ev, value)
        if alert and kind in ("TEMPERATURE", "PRESSURE") and \
                value > self._band_limit(machine_id, kind):
            # an alert-line crossing is an excursion even when the z-score
            # has already absorbed a slow climb
            self.excursions.setdefault(machine_id, kind)
        if machine_id in self.excursions and kind == self.excursions[machine_id]:
            if value <= self._band_limit(machine_id, kind):
                del self.excursions[machine_id]

    def _band_limit(self, machine_id: str, kind: str) -> float:
        if kind == "TEMPERATURE":
            return self.temp_band_high.get(machine_id, float("inf"))
        if kind == "PRESSURE":
            return self.pressure_max.get(machine_id, float("inf"))
        return float("inf")

    def _note_anomaly(self, ev: AnomalyEvent, value: float) -> None:
        dq = self.anomaly_ticks.setdefault(ev.machine_id, deque())
        dq.append(ev.tick)
        if ev.kind in ("TEMPERATURE", "PRESSURE") and value > ev.rolling_mean:
            if value > self._band_limit(ev.machine_id, ev.kind):
                self.excursions.setdefault(ev.machine_id, ev.kind)

    def ingest_status(self, machine_id: str, mode: str, tick: int, seq: int,
                      sprinkler_on: bool | None = None) -> None:
        """Mode-change event (real-time) from a machine."""
        if not self._fresh(f"s/{machine_id}", seq):
            return
        prev = self.known_mode.get(machine_id)
        self.known_mode[machine_id] = mode
        if sprinkler_on is not None:
            self.sprinkler_on[machine_id] = sprinkler_on
        if mode in ("IDLE", "STANDBY"):
            if prev not in ("IDLE", "STANDBY"):
                self.idle_since[machine_id] = tick
        if mode in ("MAINTENANCE", "FAULTED"):
            self.plans.pop(machine_id, None)  # service started, or repair will reset wear
        if mode not in ("OFF",):
            self.commanded_off.discard(machine_id)
        if mode in ("RUNNING", "STANDBY"):
            self.wake_pending.discard(machine_id)

    def ingest_sprinkler(self, machine_id: str, on: bool) -> None:
        self.sprinkler_on[machine_id] = on

    def ingest_batch_record(self, record: dict) -> None:
        """Periodic HTTP-path records: wear snapshots and window summaries."""
        if record.get("rec") == "status":
            hist = self.wear_history.setdefault(record["machine"], [])
            hist.append((record["tick"], record["wear"]))
            if len(hist) > 64:
                del hist[:-64]
            if len(hist) >= 2 and hist[-1][1] < hist[-2][1] - 1e-9:
                # wear was reset by a repair or service; restart the trend
                del hist[:-1]
                self.plans.pop(record["machine"], None)

    # -- policy evaluation ----------------------------------------------------

    def step(self, now: int) -> list[dict]:
        """Evaluate every enabled policy; returns commands for the downlink."""
        commands: list[dict] = []
        self.anomalies = self._new_events
        self._new_events = []

        if self.policies.idle_shutdown.enabled:
            commands.extend(self._energy_policy(now))
        if self.policies.predictive_maintenance.enabled:
            commands.extend(self._maintenance_policy(now))
        if self.policies.resource_opt.enabled:
            commands.extend(self._resource_policy(now))
        return commands

    def _demand_within(self, machine_id: str, start: int, span: int) -> bool:
        for frm, to, rate in self.schedule_segments.get(machine_id, ()):
            if rate > 0 and frm < start + span and to > start:
                return True
        return False

    def _find_idle_window(self, machine_id: str, start: int, deadline: int,
                          duration: int) -> int | None:
        """Earliest tick in [start, deadline] opening a zero-demand stretch."""
        segments = self.schedule_segments.get(machine_id, ())
        boundaries = sorted({start} | {to for _f, to, _r in segments if start < to <= deadline})
        for candidate in boundaries:
            if candidate > deadline:
                break
            if not self._demand_within(machine_id, candidate, duration):
                return candidate
        return None

    def _energy_policy(self, now: int) -> list[dict]:
        pol = self.policies.idle_shutdown
        commands = []
        for m in self.machine_ids:
            mode = self.known_mode.get(m)
            if self.sprinkler_on.get(m):
                continue  # safety precedence: hands off burning machines
            if mode in ("IDLE", "STANDBY") and m not in pol.essential_machines \
                    and m not in self.commanded_off:
                span = now - self.idle_since.get(m, 0)
                if span >= pol.idle_threshold_ticks and \
                        not self._demand_within(m, now, pol.wake_delay_ticks):
                    commands.append({"machine": m, "action": "shutdown"})
                    self.commanded_off.add(m)
            elif mode == "OFF" and m not in self.wake_pending:
                if self._demand_within(m, now, pol.wake_delay_ticks):
                    commands.append({"machine": m, "action": "wake"})
                    self.wake_pending.add(m)
        return commands

    def _maintenance_policy(self, now: int) -> list[dict]:
        pol = self.policies.predictive_maintenance
        commands = []
        for m in self.machine_ids:
            plan = self.plans.get(m)
            if plan is None and self.known_mode.get(m) not in ("FAULTED", "MAINTENANCE"):
                duration = self.maintenance_ticks.get(m, 300)
                crossing = forecast_wear_crossing(
                    self.wear_history.get(m, []), pol.wear_alarm,
                    pol.forecast_horizon, now)
                reason = None
                if crossing is not None:
                    reason = "WEAR_FORECAST"
                elif self._escalated(m, now, pol):
                    crossing = now + pol.escalation_window
                    reason = "ANOMALY_ESCALATION"
                if reason is not None:
                    # the service slot may sit anywhere inside the horizon;
                    # an idle window beats acting at the forecast crossing
                    start = now + self.downlink_margin + 1
                    deadline = now + pol.forecast_horizon
                    window = self._find_idle_window(m, start, deadline, duration)
                    when = window if window is not None else start
                    plan = MaintenancePlan(m, when, duration, reason)
                    self.plans[m] = plan
            if plan is not None and now >= plan.scheduled_tick - self.downlink_margin:
                if self.known_mode.get(m) in ("IDLE", "STANDBY", "OFF"):
                    commands.append({"machine": m, "action": "maintenance",
                                     "duration": plan.duration})
                    self.dispatched_plans.append(plan)
                    self.plans.pop(m, None)
                    if m in self.anomaly_ticks:
                        self.anomaly_ticks[m].clear()
                elif self.known_mode.get(m) == "RUNNING" and \
                        now >= plan.scheduled_tick + self.downlink_margin:
                    # window never materialized; wait for the next idle moment
                    plan.scheduled_tick = now + 1
        return commands

    def _escalated(self, machine_id: str, now: int, pol: MaintenancePolicy) -> bool:
        dq = self.anomaly_ticks.get(machine_id)
        if not dq:
            return False
        while dq and dq[0] < now - pol.escalation_window:
            dq.popleft()
        return len(dq) >= pol.escalation_events

    def _resource_policy(self, now: int) -> list[dict]:
        pol = self.policies.resource_opt
        commands = []
        factor_milli = max(0, min(MILLI, round(pol.excursion_slowdown_factor * MILLI)))
        want = set(self.excursions)
        for m in sorted(want - self.rate_limited):
            commands.append({"machine": m, "action": "rate_limit",
                             "factor_milli": factor_milli})
        for m in sorted(self.rate_limited - want):
            commands.append({"machine": m, "action": "rate_limit",
                             "factor_milli": MILLI})
        self.rate_limited = want
        return commands
