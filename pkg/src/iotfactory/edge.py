"""Gateway-local preprocessing and safety control.

The edge corrects calibration, thins traffic with a deadband prefilter,
rolls tumbling-window summaries for the periodic batch channel, and runs
the low-latency safety rules (sprinkler, cooling) without any cloud round
trip. Safety must work even with the uplink fully dead.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

__all__ = [
    "WindowSummary",
    "SafetyRule",
    "FilterDecision",
    "correct_calibration",
    "aggregate_window",
    "prefilter",
    "local_safety",
    "EdgeNode",
]


class FilterDecision(str, Enum):
    FORWARD = "FORWARD"
    SUPPRESS = "SUPPRESS"
    ALERT = "ALERT"


@dataclass
class WindowSummary:
    sensor_id: str
    machine_id: str
    kind: str
    window_start_tick: int
    window_len: int
    count: int
    min: float
    max: float
    mean: float
    last: float


@dataclass(frozen=True)
class SafetyRule:
    kind: str                    # FIRE_SPRINKLER | OVERTEMP_COOLING
    threshold: float
    release_threshold: float
    response_deadline: int = 2

    def validate(self) -> None:
        if self.release_threshold >= self.threshold:
            raise ValueError(f"{self.kind}: release_threshold must be below threshold")
        if self.response_deadline < 1:
            raise ValueError(f"{self.kind}: response_deadline must be >= 1")


def correct_calibration(value: float, gain: float, offset: float) -> float:
    """Invert the sensor calibration: corrected = (value - offset) / gain."""
    return (value - offset) / gain


def aggregate_window(sensor_id: str, machine_id: str, kind: str,
                     window_start: int, window_len: int,
                     values: list[float]) -> WindowSummary | None:
    """Exact summary statistics over one tumbling window; None when empty."""
    if not values:
        return None
    return WindowSummary(
        sensor_id=sensor_id, machine_id=machine_id, kind=kind,
        window_start_tick=window_start, window_len=window_len,
        count=len(values), min=min(values), max=max(values),
        mean=sum(values) / len(values), last=values[-1])


def prefilter(value: float, previous_forwarded: float | None,
              deadband: float, alert_threshold: float | None) -> FilterDecision:
    """Deadband suppression; alert-threshold crossings always pass.

    A zero deadband disables suppression entirely (everything forwards,
    even exact repeats); a positive one forwards only changes larger than
    the band.
    """
    if alert_threshold is not None and value >= alert_threshold:
        return FilterDecision.ALERT
    if previous_forwarded is None:
        return FilterDecision.FORWARD
    if deadband == 0 or abs(value - previous_forwarded) > deadband:
        return FilterDecision.FORWARD
    return FilterDecision.SUPPRESS


def local_safety(value: float, rule: SafetyRule, actuator_on: bool) -> bool | None:
    """Returns the new actuator state, or None inside the hysteresis band."""
    if not actuator_on and value >= rule.threshold:
        return True
    if actuator_on and value <= rule.release_threshold:
        return False
    return None


_RULE_SENSOR_KIND = {"FIRE_SPRINKLER": "FIRE", "OVERTEMP_COOLING": "TEMPERATURE"}
_RULE_ACTUATOR = {"FIRE_SPRINKLER": "sprinkler", "OVERTEMP_COOLING": "cooling"}


class EdgeNode:
    """Per-gateway edge state: deadbands, windows, safety, batching.

    Readings are bucketed into tumbling windows by their sample tick; a
    window closes `grace` ticks after it ends so in-flight readings can
    still land in the right bucket (grace = worst-case device-link delay).
    Out-of-order arrivals per sensor are discarded, never reordered.
    """

    def __init__(self, gateway_id: str, window_len: int,
                 deadbands: dict[str, float], alert_thresholds: dict[str, float],
                 safety_rules: list[SafetyRule],
                 calibrations: dict[str, tuple[float, float]],
                 grace: int = 1):
        self.gateway_id = gateway_id
        self.window_len = window_len
        self.grace = grace
        self.deadbands = deadbands
        self.alert_thresholds = alert_thresholds
        self.rules_by_kind: dict[str, SafetyRule] = {}
        for rule in safety_rules:
            rule.validate()
            self.rules_by_kind[_RULE_SENSOR_KIND[rule.kind]] = rule
        self.calibrations = calibrations  # sensor_id -> (gain, offset)

        self.last_forwarded: dict[str, float] = {}
        self.last_seq: dict[str, int] = {}
        # sensor -> window_start -> values, in sample order
        self.windows: dict[str, dict[int, list[float]]] = {}
        self.window_meta: dict[str, tuple[str, str]] = {}  # sensor -> (machine, kind)
        self.actuator_state: dict[tuple[str, str], bool] = {}
        self.batch_buffer: list[dict] = []
        self.suppressed = 0
        self.stale_drops = 0
        self.late_drops = 0

    def fresh(self, sensor_id: str, seq_no: int) -> bool:
        """Stale-discard: only strictly increasing seq_no per sensor passes."""
        if seq_no <= self.last_seq.get(sensor_id, -1):
            self.stale_drops += 1
            return False
        self.last_seq[sensor_id] = seq_no
        return True

    def process_reading(self, sensor_id: str, machine_id: str, kind: str,
                        value: float, sample_tick: int, now: int):
        """Handle one delivered reading.

        Returns (corrected, decision, safety_commands) where safety_commands
        is a list of (machine_id, actuator, on) to apply locally.
        """
        gain, offset = self.calibrations.get(sensor_id, (1.0, 0.0))
        corrected = correct_calibration(value, gain, offset)

        start = sample_tick - sample_tick % self.window_len
        if start + self.window_len + self.grace <= now:
            self.late_drops += 1  # its window already closed
        else:
            buckets = self.windows.get(sensor_id)
            if buckets is None:
                buckets = self.windows[sensor_id] = {}
                self.window_meta[sensor_id] = (machine_id, kind)
            buckets.setdefault(start, []).append(corrected)

        decision = prefilter(corrected, self.last_forwarded.get(sensor_id),
                             self.deadbands.get(kind, 0.0),
                             self.alert_thresholds.get(kind))
        if decision is FilterDecision.SUPPRESS:
            self.suppressed += 1
        else:
            self.last_forwarded[sensor_id] = corrected

        commands: list[tuple[str, str, bool]] = []
        rule = self.rules_by_kind.get(kind)
        if rule is not None:
            actuator = _RULE_ACTUATOR[rule.kind]
            key = (machine_id, actuator)
            new_state = local_safety(corrected, rule, self.actuator_state.get(key, False))
            if new_state is not None:
                self.actuator_state[key] = new_state
                commands.append((machine_id, actuator, new_state))
        return corrected, decision, commands

    def close_windows(self, now: int) -> list[WindowSummary]:
        """Summaries for every window whose grace period ends at `now`."""
        summaries = []
        for sensor_id, buckets in self.windows.items():
            due = [s for s in buckets if s + self.window_len + self.grace <= now + 1]
            for start in sorted(due):
                values = buckets.pop(start)
                machine_id, kind = self.window_meta[sensor_id]
                summary = aggregate_window(sensor_id, machine_id, kind,
                                           start, self.window_len, values)
                if summary is not None:
                    summaries.append(summary)
        return summaries

    def buffer_for_batch(self, record: dict) -> None:
        self.batch_buffer.append(record)

    def drain_batch(self) -> list[dict]:
        records = self.batch_buffer
        self.batch_buffer = []
        return records
