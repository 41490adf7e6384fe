"""Machines, sensors, faults and the physical signals they produce.

Each machine carries energy, thermal, pressure, wear and production
dynamics driven by a demand schedule and a small set of actuators
(cooling, sprinkler, shutdown/wake, rate limits). All stochastic terms
come from named per-machine RNG streams so two runs with the same seed
see identical draws regardless of which policies are active.

Units are fixed: watts and milliwatts for power, degrees Celsius,
kilopascals, integer milli-units per tick for demand (1000 = one unit).
Energy is accumulated in integer microjoules (mW times ms) so per-run
totals are exact and trace sums reproduce them bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from .rng import RngStream

__all__ = [
    "Mode",
    "Trigger",
    "FaultKind",
    "MachineParams",
    "MachineState",
    "Machine",
    "SensorSpec",
    "SensorReading",
    "FaultEvent",
    "sample_sensor",
    "noise_bound",
    "DemandAllocator",
]

MILLI = 1000


class Mode(str, Enum):
    RUNNING = "RUNNING"
    IDLE = "IDLE"
    STANDBY = "STANDBY"
    OFF = "OFF"
    FAULTED = "FAULTED"
    MAINTENANCE = "MAINTENANCE"


LIVE_MODES = (Mode.RUNNING, Mode.IDLE, Mode.STANDBY)


class Trigger(str, Enum):
    DEMAND_ARRIVES = "demand-arrives"
    DEMAND_ENDS = "demand-ends"
    SHUTDOWN_CMD = "shutdown-cmd"
    WAKE_CMD = "wake-cmd"
    FAULT = "fault"
    REPAIR_DONE = "repair-done"
    MAINTENANCE_START = "maintenance-start"
    MAINTENANCE_DONE = "maintenance-done"


class FaultKind(str, Enum):
    BREAKDOWN = "BREAKDOWN"
    OVERHEAT = "OVERHEAT"
    FIRE = "FIRE"


@dataclass(frozen=True)
class MachineParams:
    """Static per-machine configuration (see docs/config.md)."""

    machine_id: str
    essential: bool = False
    # power (watts)
    run_w: float = 5000.0
    standby_w: float = 1500.0
    maint_w: float = 500.0
    load_factor: float = 0.1
    # production
    max_rate_milli: int = 3000          # units/tick * 1000
    scrap_on_fault: int = 2             # units scrapped when a fault interrupts work
    # thermal
    band_low_c: float = 35.0
    band_high_c: float = 78.0
    rise_run_c: float = 48.0            # setpoint rise over ambient at full load
    rise_idle_c: float = 8.0
    tau_heat_s: float = 500.0
    tau_cool_s: float = 800.0
    tau_cool_active_s: float = 200.0    # when cooling_on
    cooling_drop_c: float = 15.0        # setpoint pull-down while cooling_on
    # pressure (kPa)
    nominal_kpa: float = 200.0
    pump_kpa: float = 18.0              # extra setpoint while RUNNING
    bump_kpa: float = 24.0              # transient injected on RUNNING<->IDLE
    regulator_gain: float = 0.45
    weak_gain: float = 0.02             # used when the regulator is disabled
    transient_decay: float = 0.5
    p_min_kpa: float = 150.0
    p_max_kpa: float = 262.0
    max_overshoot_kpa: float = 40.0
    pressure_noise_kpa: float = 0.4
    regulator_enabled: bool = True
    # wear and hazard
    wear_per_tick: float = 1.4e-4
    wear_temp_coeff: float = 1.5
    wear_pressure_coeff: float = 1.0
    hazard_h0: float = 2.0e-6
    hazard_beta: float = 400.0
    # defects
    defect_base: float = 0.01
    defect_temp_coeff: float = 0.25
    defect_pressure_coeff: float = 0.15
    # fire signal
    fire_baseline: float = 5.0
    fire_noise: float = 0.5
    fire_ramp: float = 15.0
    fire_decay: float = 12.0
    fire_max: float = 100.0
    fire_damage_threshold: float = 95.0
    fire_damage_ticks: int = 10
    # timers (ticks)
    idle_to_standby_ticks: int = 120
    wake_delay_ticks: int = 30
    repair_ticks: int = 900             # unscheduled (run-to-failure) repair
    maintenance_ticks: int = 300        # scheduled service


@dataclass
class MachineState:
    """Dynamic state of one machine at a tick boundary."""

    machine_id: str
    mode: Mode = Mode.IDLE
    power_draw: float = 0.0             # watts
    temperature: float = 25.0           # deg C
    pressure: float = 200.0             # kPa
    wear: float = 0.0                   # [0, 1]
    units_produced: int = 0
    units_defective: int = 0
    cooling_on: bool = False
    sprinkler_on: bool = False
    fire_intensity: float = 5.0


@dataclass
class SensorSpec:
    sensor_id: str
    kind: str                           # ENERGY | TEMPERATURE | PRESSURE | FIRE
    machine_id: str
    sample_period: int = 5
    gain: float = 1.0
    offset: float = 0.0
    tolerance: float = 0.0              # relative for ENERGY, absolute otherwise


@dataclass
class SensorReading:
    sensor_id: str
    kind: str
    machine_id: str
    tick: int
    value: float
    seq_no: int


@dataclass
class FaultEvent:
    machine_id: str
    kind: FaultKind
    start_tick: int
    repair_ticks: int
    # wear-driven breakdowns replace the worn part on repair; exogenous
    # faults (scheduled or injected) leave wear untouched
    wear_out: bool = False


def noise_bound(spec: SensorSpec, truth: float) -> float:
    """Absolute half-width of the calibration tolerance for a reading."""
    ideal = truth * spec.gain + spec.offset
    if spec.kind == "ENERGY":
        return spec.tolerance * abs(ideal)
    return spec.tolerance


def sample_sensor(spec: SensorSpec, truth: float, tick: int, seq_no: int,
                  rng: RngStream) -> SensorReading:
    """One calibrated, noisy measurement: value = truth*gain + offset + U(+/-bound).

    Exactly one draw per sample, even at tolerance 0, so sampling stays
    paired across runs.
    """
    ideal = truth * spec.gain + spec.offset
    bound = noise_bound(spec, truth)
    noise = bound * (2.0 * rng.random() - 1.0)
    return SensorReading(spec.sensor_id, spec.kind, spec.machine_id,
                         tick, ideal + noise, seq_no)


def binomial_quantile(u: float, n: int, p: float) -> int:
    """Smallest k with Binom(n, p) CDF >= u; monotone in p for fixed u."""
    if p <= 0.0 or n <= 0:
        return 0
    if p >= 1.0:
        return n
    q = 1.0 - p
    pmf = q ** n
    cdf = pmf
    k = 0
    while cdf < u and k < n:
        pmf *= (n - k) / (k + 1) * (p / q)
        k += 1
        cdf += pmf
    return k


class Machine:
    """One machine: mode state machine plus per-tick physical dynamics."""

    def __init__(self, params: MachineParams, tick_duration_s: float,
                 rng_faults: RngStream, rng_defects: RngStream,
                 rng_fire: RngStream, rng_pressure: RngStream,
                 ambient_c: float = 25.0):
        self.p = params
        self.s = MachineState(
            machine_id=params.machine_id,
            temperature=ambient_c,
            pressure=params.nominal_kpa,
            fire_intensity=params.fire_baseline,
        )
        self.dt = tick_duration_s
        self.rng_faults = rng_faults
        self.rng_defects = rng_defects
        self.rng_fire = rng_fire
        self.rng_pressure = rng_pressure

        # precomputed first-order thermal coefficients
        self.alpha_heat = 1.0 - math.exp(-tick_duration_s / params.tau_heat_s)
        self.alpha_cool = 1.0 - math.exp(-tick_duration_s / params.tau_cool_s)
        self.alpha_cool_active = 1.0 - math.exp(-tick_duration_s / params.tau_cool_active_s)
        self._band_width = max(params.band_high_c - params.band_low_c, 1e-9)
        self._p_span = max(params.p_max_kpa - params.nominal_kpa, 1e-9)
        self._tick_ms = round(tick_duration_s * 1000)

        # internal timers and transients
        self.idle_ticks = 0
        self.warmup_left = 0
        self.repair_left = 0
        self.maint_left = 0
        self.pressure_transient = 0.0
        self._pressure_bump = False
        self.fire_event_active = False
        self.fire_damage_ticks = 0
        self.production_credit = 0             # milli-units of work in progress
        self.active_fault: FaultEvent | None = None
        self.rejected_triggers = 0

        # per-tick outputs, read by the engine after step()
        self.last_energy_uj = 0
        self.last_produced = 0
        self.last_defective = 0
        self.last_scrapped = 0
        self.mode_changed = False

    # -- state machine -------------------------------------------------------

    def transition_mode(self, trigger: Trigger, fault: FaultEvent | None = None,
                        maintenance_ticks: int | None = None) -> bool:
        """Apply one trigger; illegal (mode, trigger) pairs are counted no-ops."""
        s, p = self.s, self.p
        m = s.mode
        new: Mode | None = None

        if trigger is Trigger.DEMAND_ARRIVES:
            if m is Mode.IDLE:
                new = Mode.RUNNING
            elif m is Mode.STANDBY and self.warmup_left <= 0:
                new = Mode.RUNNING
        elif trigger is Trigger.DEMAND_ENDS:
            if m is Mode.RUNNING:
                new = Mode.IDLE
        elif trigger is Trigger.SHUTDOWN_CMD:
            if m in (Mode.IDLE, Mode.STANDBY):
                new = Mode.OFF
        elif trigger is Trigger.WAKE_CMD:
            if m is Mode.OFF:
                new = Mode.STANDBY
                self.warmup_left = p.wake_delay_ticks
        elif trigger is Trigger.FAULT:
            if m in LIVE_MODES and self.active_fault is None:
                new = Mode.FAULTED
                self.active_fault = fault
                self.repair_left = fault.repair_ticks if fault else p.repair_ticks
        elif trigger is Trigger.REPAIR_DONE:
            if m is Mode.FAULTED:
                new = Mode.IDLE
                if self.active_fault is None or self.active_fault.wear_out:
                    s.wear = 0.0  # the worn part was replaced
                self.active_fault = None
        elif trigger is Trigger.MAINTENANCE_START:
            if m in (Mode.IDLE, Mode.STANDBY, Mode.OFF):
                new = Mode.MAINTENANCE
                self.maint_left = maintenance_ticks if maintenance_ticks else p.maintenance_ticks
        elif trigger is Trigger.MAINTENANCE_DONE:
            if m is Mode.MAINTENANCE:
                new = Mode.IDLE
                s.wear = 0.0

        if new is None:
            self.rejected_triggers += 1
            return False
        if new is not m:
            self.mode_changed = True
            s.mode = new
            if new is not Mode.IDLE:
                self.idle_ticks = 0
        return True

    def inject_fault(self, kind: FaultKind, tick: int, repair_ticks: int | None = None) -> bool:
        ev = FaultEvent(self.p.machine_id, kind, tick,
                        repair_ticks if repair_ticks else self.p.repair_ticks)
        return self.transition_mode(Trigger.FAULT, fault=ev)

    # -- dynamics ------------------------------------------------------------

    def step(self, tick: int, demand_milli: int, ambient_c: float,
             scheduled_fault: FaultEvent | None = None) -> None:
        """Advance one tick. Draw counts per stream are mode-independent."""
        s, p = self.s, self.p
        prev_running = s.mode is Mode.RUNNING
        self.mode_changed = False
        self.last_scrapped = 0
        if demand_milli < 0:
            demand_milli = 0

        # timers
        if s.mode is Mode.FAULTED:
            self.repair_left -= 1
            if self.repair_left <= 0:
                self.transition_mode(Trigger.REPAIR_DONE)
        elif s.mode is Mode.MAINTENANCE:
            self.maint_left -= 1
            if self.maint_left <= 0:
                self.transition_mode(Trigger.MAINTENANCE_DONE)
        if self.warmup_left > 0:
            self.warmup_left -= 1

        # hazard draw happens every tick so runs stay paired; the hazard
        # itself only bites under load (run-to-failure wear model)
        u_fault = self.rng_faults.random()
        hazard = p.hazard_h0 * (1.0 + p.hazard_beta * s.wear)
        if scheduled_fault is not None:
            self._fault_interrupts_work(scheduled_fault, tick)
        elif s.mode is Mode.RUNNING and u_fault < hazard:
            ev = FaultEvent(p.machine_id, FaultKind.BREAKDOWN, tick,
                            p.repair_ticks, wear_out=True)
            self._fault_interrupts_work(ev, tick)

        # demand triggers and idle dwell
        if demand_milli > 0:
            if s.mode is Mode.IDLE or (s.mode is Mode.STANDBY and self.warmup_left <= 0):
                self.transition_mode(Trigger.DEMAND_ARRIVES)
        else:
            if s.mode is Mode.RUNNING:
                self.transition_mode(Trigger.DEMAND_ENDS)
        if s.mode is Mode.IDLE:
            self.idle_ticks += 1
            if self.idle_ticks >= p.idle_to_standby_ticks:
                s.mode = Mode.STANDBY
                self.warmup_left = 0
                self.mode_changed = True
                self.idle_ticks = 0
        elif s.mode is not Mode.STANDBY:
            self.idle_ticks = 0

        # production; one defect draw per tick keeps runs paired
        effective = min(demand_milli, p.max_rate_milli)
        produced = 0
        defective = 0
        util = 0.0
        over_t = max(0.0, s.temperature - p.band_high_c) / self._band_width
        over_p = max(0.0, s.pressure - p.p_max_kpa) / self._p_span
        u_defect = self.rng_defects.random()
        if s.mode is Mode.RUNNING:
            util = effective / p.max_rate_milli if p.max_rate_milli else 0.0
            self.production_credit += effective
            produced = self.production_credit // MILLI
            self.production_credit -= produced * MILLI
            if produced > 0:
                d_prob = p.defect_base + p.defect_temp_coeff * over_t + \
                    p.defect_pressure_coeff * over_p
                defective = binomial_quantile(u_defect, produced,
                                              min(1.0, max(0.0, d_prob)))
            s.units_produced += produced
            s.units_defective += defective
        self.last_produced = produced
        self.last_defective = defective
        self._pressure_bump = prev_running != (s.mode is Mode.RUNNING)

        # power and energy
        if s.mode is Mode.RUNNING:
            power = p.run_w * (1.0 + p.load_factor * (2.0 * util - 1.0))
        elif s.mode in (Mode.IDLE, Mode.STANDBY):
            power = p.standby_w
        elif s.mode is Mode.MAINTENANCE:
            power = p.maint_w
        else:  # OFF, FAULTED
            power = 0.0
        s.power_draw = power
        self.last_energy_uj = round(power * 1000) * self._tick_ms

        # thermal: first-order approach to a mode/load setpoint
        if s.mode is Mode.RUNNING:
            target = ambient_c + p.rise_idle_c + (p.rise_run_c - p.rise_idle_c) * util
        elif s.mode in (Mode.IDLE, Mode.STANDBY, Mode.MAINTENANCE):
            target = ambient_c + p.rise_idle_c
        else:
            target = ambient_c
        if s.cooling_on:
            target = max(ambient_c, target - p.cooling_drop_c)
            alpha = self.alpha_cool_active if target < s.temperature else self.alpha_heat
        else:
            alpha = self.alpha_heat if target > s.temperature else self.alpha_cool
        s.temperature += (target - s.temperature) * alpha

        # pressure: proportional regulator plus transition transients
        self._step_pressure()

        # fire signal
        self._step_fire(tick)

        # wear accrues only while producing (excursions measured pre-update);
        # full wear is a worn-out part: the machine breaks down on the spot
        if s.mode is Mode.RUNNING:
            s.wear = min(1.0, s.wear + p.wear_per_tick *
                         (1.0 + p.wear_temp_coeff * over_t + p.wear_pressure_coeff * over_p))
            if s.wear >= 1.0:
                ev = FaultEvent(p.machine_id, FaultKind.BREAKDOWN, tick,
                                p.repair_ticks, wear_out=True)
                self._fault_interrupts_work(ev, tick)

    def _fault_interrupts_work(self, ev: FaultEvent, tick: int) -> None:
        was_running = self.s.mode is Mode.RUNNING
        if self.transition_mode(Trigger.FAULT, fault=ev) and was_running:
            self.last_scrapped = self.p.scrap_on_fault
            self.production_credit = 0

    def _defect_probability(self) -> float:
        over_t, over_p = self._excursions()
        prob = (self.p.defect_base + self.p.defect_temp_coeff * over_t +
                self.p.defect_pressure_coeff * over_p)
        return min(1.0, max(0.0, prob))

    def _excursions(self) -> tuple[float, float]:
        """Normalized distance above the nominal temperature/pressure bands."""
        s, p = self.s, self.p
        band = p.band_high_c - p.band_low_c
        over_t = max(0.0, s.temperature - p.band_high_c) / band if band > 0 else 0.0
        span = p.p_max_kpa - p.nominal_kpa
        over_p = max(0.0, s.pressure - p.p_max_kpa) / span if span > 0 else 0.0
        return over_t, over_p

    def _step_pressure(self) -> None:
        s, p = self.s, self.p
        if self._pressure_bump:
            self.pressure_transient += p.bump_kpa
        # drawn every tick for pairing, applied only while powered
        noise = self.rng_pressure.uniform(-p.pressure_noise_kpa, p.pressure_noise_kpa)
        if s.mode in (Mode.OFF, Mode.FAULTED):
            target = p.nominal_kpa
            noise = 0.0
        else:
            target = p.nominal_kpa + (p.pump_kpa if s.mode is Mode.RUNNING else 0.0)
        gain = p.regulator_gain if p.regulator_enabled else p.weak_gain
        s.pressure += gain * (target - s.pressure) + self.pressure_transient + noise
        self.pressure_transient *= p.transient_decay
        if self.pressure_transient < 1e-9:
            self.pressure_transient = 0.0

    def _step_fire(self, tick: int) -> None:
        s, p = self.s, self.p
        noise = self.rng_fire.uniform(-p.fire_noise, p.fire_noise)
        if self.fire_event_active:
            if s.sprinkler_on:
                s.fire_intensity = max(p.fire_baseline, s.fire_intensity - p.fire_decay)
                if s.fire_intensity <= p.fire_baseline:
                    self.fire_event_active = False
            else:
                s.fire_intensity = min(p.fire_max, s.fire_intensity + p.fire_ramp)
            if s.fire_intensity >= p.fire_damage_threshold:
                self.fire_damage_ticks += 1
                if self.fire_damage_ticks >= p.fire_damage_ticks:
                    ev = FaultEvent(p.machine_id, FaultKind.FIRE, tick, p.repair_ticks)
                    self._fault_interrupts_work(ev, tick)
            else:
                self.fire_damage_ticks = 0
        else:
            s.fire_intensity = p.fire_baseline + noise
            self.fire_damage_ticks = 0

    def start_fire(self) -> None:
        self.fire_event_active = True


class DemandAllocator:
    """Turns the raw schedule into per-machine demand while conserving units.

    Rate-limited machines (flagged by the cloud during excursions) run at
    a fraction of their scheduled rate; the deficit moves to unflagged
    machines that are active this tick, and anything left spills into a
    backlog drained on later ticks. All arithmetic is integer milli-units,
    so `sum(assigned) + backlog == sum(scheduled)` holds exactly.
    """

    def __init__(self, machine_ids: list[str], max_rates: dict[str, int],
                 noise_amp: float, rng_workload: RngStream):
        self.machine_ids = machine_ids
        self.max_rates = max_rates
        self.noise_amp = noise_amp
        self.rng = rng_workload
        self.rate_limits: dict[str, int] = {}   # machine -> factor in [0, MILLI]
        self.backlog = 0
        self.total_scheduled = 0
        self.total_assigned = 0

    def set_rate_limit(self, machine_id: str, factor_milli: int) -> None:
        if factor_milli >= MILLI:
            self.rate_limits.pop(machine_id, None)
        else:
            self.rate_limits[machine_id] = max(0, factor_milli)

    def assign(self, scheduled: dict[str, int],
               can_accept: dict[str, bool]) -> dict[str, int]:
        """One tick of demand. `scheduled` is raw milli-units per machine."""
        noisy: dict[str, int] = {}
        for mid in self.machine_ids:
            base = scheduled.get(mid, 0)
            u = self.rng.random()  # one draw per machine per tick, always
            if base > 0 and self.noise_amp > 0:
                base = max(0, round(base * (1.0 + self.noise_amp * (2.0 * u - 1.0))))
            noisy[mid] = base
            self.total_scheduled += base

        if not self.rate_limits and self.backlog == 0:
            # fast path: nothing to slow down or redistribute
            for mid in self.machine_ids:
                self.total_assigned += noisy[mid]
            return noisy

        assigned: dict[str, int] = {}
        deficit = 0
        for mid in self.machine_ids:
            d = noisy[mid]
            limit = self.rate_limits.get(mid)
            if limit is not None and d > 0:
                slowed = (d * limit) // MILLI
                deficit += d - slowed
                d = slowed
            assigned[mid] = d

        # redistribute the deficit, then drain backlog, into active headroom
        pool = deficit + self.backlog
        if pool > 0:
            for mid in self.machine_ids:
                if pool <= 0:
                    break
                if mid in self.rate_limits or not can_accept.get(mid, False):
                    continue
                if noisy[mid] <= 0:
                    continue  # only machines already scheduled this tick
                headroom = self.max_rates[mid] - assigned[mid]
                if headroom > 0:
                    extra = min(headroom, pool)
                    assigned[mid] += extra
                    pool -= extra
        self.backlog = pool

        for mid in self.machine_ids:
            self.total_assigned += assigned[mid]
        return assigned
