import math

from iotfactory.plant import Mode

from conftest import make_machine


def test_quiet_fire_signal_stays_below_alarm():
    m = make_machine(seed=4, hazard_h0=0.0)
    threshold = 60.0
    for t in range(2000):
        m.step(t, 1000, 25.0)
        assert m.s.fire_intensity < threshold
        assert m.s.fire_intensity >= m.p.fire_baseline - m.p.fire_noise


def test_injected_fire_crosses_threshold_within_ramp_time():
    m = make_machine(seed=4, hazard_h0=0.0, fire_baseline=5.0, fire_ramp=15.0)
    threshold = 60.0
    m.start_fire()
    ramp_ticks = math.ceil((threshold - m.p.fire_baseline) / m.p.fire_ramp)
    crossed_at = None
    for t in range(ramp_ticks + 2):
        m.step(t, 0, 25.0)
        if crossed_at is None and m.s.fire_intensity >= threshold:
            crossed_at = t
    assert crossed_at is not None
    assert crossed_at <= ramp_ticks


def test_fire_decays_only_after_sprinkler():
    m = make_machine(seed=4, hazard_h0=0.0, fire_decay=12.0, fire_max=100.0,
                     fire_damage_threshold=1e9)
    m.start_fire()
    for t in range(10):
        m.step(t, 0, 25.0)
    peak = m.s.fire_intensity
    assert peak == m.p.fire_max  # saturated, no decay without sprinkler
    m.s.sprinkler_on = True
    release = 20.0
    decay_window = math.ceil((peak - release) / m.p.fire_decay)
    below_at = None
    for t in range(10, 10 + decay_window + 2):
        m.step(t, 0, 25.0)
        if below_at is None and m.s.fire_intensity <= release:
            below_at = t
    assert below_at is not None
    assert below_at - 10 <= decay_window


def test_unattended_fire_eventually_faults_machine():
    m = make_machine(seed=4, hazard_h0=0.0, fire_damage_threshold=95.0,
                     fire_damage_ticks=5)
    m.s.mode = Mode.RUNNING
    m.start_fire()
    for t in range(30):
        m.step(t, 2000, 25.0)
    assert m.s.mode is Mode.FAULTED


def test_idle_pressure_holds_nominal():
    m = make_machine(seed=8, hazard_h0=0.0)
    wobble = m.p.pressure_noise_kpa / m.p.regulator_gain + 1e-9
    for t in range(2000):
        m.step(t, 0, 25.0)
        assert abs(m.s.pressure - m.p.nominal_kpa) <= wobble


def expected_pressure_path(p0, nominal, gain, bump, decay, n):
    """Independent step-response recurrence, no noise."""
    p, transient, path = p0, bump, []
    for _ in range(n):
        p = p + gain * (nominal - p) + transient
        transient *= decay
        path.append(p)
    return path


def test_transition_overshoot_bounded_with_regulator():
    m = make_machine(seed=8, hazard_h0=0.0, pressure_noise_kpa=0.0,
                     idle_to_standby_ticks=10**9)
    # run, then stop demand once: exactly one RUNNING -> IDLE transition
    for t in range(50):
        m.step(t, 2500, 25.0)
    for t in range(50, 90):
        m.step(t, 0, 25.0)
        assert m.s.pressure - m.p.nominal_kpa <= m.p.max_overshoot_kpa

    # closed-form check of the worst excursion after the bump
    path = expected_pressure_path(
        m.p.nominal_kpa + m.p.pump_kpa, m.p.nominal_kpa,
        m.p.regulator_gain, m.p.bump_kpa, m.p.transient_decay, 40)
    assert max(path) - m.p.nominal_kpa <= m.p.max_overshoot_kpa


def test_disabled_regulator_exceeds_overshoot_bound():
    reg = make_machine(seed=8, hazard_h0=0.0, pressure_noise_kpa=0.0,
                       idle_to_standby_ticks=10**9)
    loose = make_machine(seed=8, hazard_h0=0.0, pressure_noise_kpa=0.0,
                         regulator_enabled=False, idle_to_standby_ticks=10**9)
    peaks = {}
    for machine, name in ((reg, "reg"), (loose, "loose")):
        peak = 0.0
        for t in range(40):
            machine.step(t, 2500, 25.0)
        for t in range(40, 120):
            machine.step(t, 0, 25.0)
            peak = max(peak, machine.s.pressure - machine.p.nominal_kpa)
        peaks[name] = peak
    assert peaks["reg"] <= reg.p.max_overshoot_kpa
    assert peaks["loose"] > loose.p.max_overshoot_kpa
    assert peaks["loose"] > peaks["reg"]


def test_regulated_pressure_stays_within_limits():
    m = make_machine(seed=12, hazard_h0=0.0)
    for t in range(4000):
        m.step(t, 2500 if (t // 97) % 2 == 0 else 0, 25.0)
        assert m.p.p_min_kpa <= m.s.pressure <= m.p.p_max_kpa
