from hypothesis import given, settings
from hypothesis import strategies as st

from iotfactory.plant import FaultKind, Mode, Trigger, binomial_quantile

from conftest import make_machine

WH_UJ = 3_600_000_000  # microjoule per watt-hour


def run_ticks(machine, n, demand=0, ambient=25.0):
    total_uj = 0
    produced = 0
    defective = 0
    for t in range(n):
        machine.step(t, demand, ambient)
        total_uj += machine.last_energy_uj
        produced += machine.last_produced
        defective += machine.last_defective
    return total_uj, produced, defective


def test_off_machine_accrues_nothing():
    m = make_machine()
    m.s.mode = Mode.OFF
    energy, produced, _ = run_ticks(m, 10, demand=5000)
    assert energy == 0
    assert produced == 0
    assert m.s.mode is Mode.OFF


def test_idle_standby_power_closed_form():
    # 200 W standby for one hour of 1 s ticks is exactly 200 Wh
    m = make_machine(standby_w=200.0, hazard_h0=0.0, idle_to_standby_ticks=10**9)
    energy, produced, _ = run_ticks(m, 3600, demand=0)
    assert energy == 200 * WH_UJ
    assert produced == 0
    assert m.s.mode is Mode.IDLE


def test_over_temperature_band_yields_strictly_more_defects():
    # same seed, same dynamics; only the nominal band differs, so the
    # second machine spends the whole run above it
    hot = make_machine(seed=5, band_low_c=-50.0, band_high_c=-40.0,
                       hazard_h0=0.0, defect_base=0.02, wear_per_tick=0.0)
    cool = make_machine(seed=5, band_low_c=35.0, band_high_c=500.0,
                        hazard_h0=0.0, defect_base=0.02, wear_per_tick=0.0)
    _, p_hot, d_hot = run_ticks(hot, 2000, demand=3000)
    _, p_cool, d_cool = run_ticks(cool, 2000, demand=3000)
    assert p_hot == p_cool  # production identical, only quality differs
    assert d_hot > d_cool


def test_binomial_quantile_monotone_in_p():
    for u in (0.05, 0.3, 0.77, 0.99):
        last = 0
        for p in (0.0, 0.1, 0.3, 0.6, 0.9, 1.0):
            k = binomial_quantile(u, 5, p)
            assert k >= last
            last = k
        assert binomial_quantile(u, 5, 0.0) == 0
        assert binomial_quantile(u, 5, 1.0) == 5


def test_fault_while_off_is_noop():
    m = make_machine()
    m.s.mode = Mode.OFF
    before = m.rejected_triggers
    assert not m.inject_fault(FaultKind.BREAKDOWN, tick=0)
    assert m.s.mode is Mode.OFF
    assert m.rejected_triggers == before + 1


def test_fault_while_running_sets_repair_timer():
    m = make_machine()
    m.s.mode = Mode.RUNNING
    assert m.inject_fault(FaultKind.BREAKDOWN, tick=3, repair_ticks=17)
    assert m.s.mode is Mode.FAULTED
    assert m.repair_left == 17
    assert m.active_fault.kind is FaultKind.BREAKDOWN


def test_shutdown_from_idle():
    m = make_machine()
    assert m.s.mode is Mode.IDLE
    assert m.transition_mode(Trigger.SHUTDOWN_CMD)
    assert m.s.mode is Mode.OFF


def test_shutdown_from_running_rejected():
    m = make_machine()
    m.s.mode = Mode.RUNNING
    assert not m.transition_mode(Trigger.SHUTDOWN_CMD)
    assert m.s.mode is Mode.RUNNING


def test_wake_then_demand_reaches_running_after_warmup():
    m = make_machine(wake_delay_ticks=3, hazard_h0=0.0)
    m.s.mode = Mode.OFF
    assert m.transition_mode(Trigger.WAKE_CMD)
    assert m.s.mode is Mode.STANDBY
    modes = []
    for t in range(6):
        m.step(t, 2000, 25.0)
        modes.append(m.s.mode)
    assert Mode.RUNNING in modes
    first_running = modes.index(Mode.RUNNING)
    assert first_running >= 2  # not before warmup has elapsed


def test_exogenous_repair_leaves_wear_untouched():
    m = make_machine(hazard_h0=0.0)
    m.s.mode = Mode.RUNNING
    m.s.wear = 0.6
    m.inject_fault(FaultKind.BREAKDOWN, tick=0, repair_ticks=5)
    for t in range(6):
        m.step(t, 0, 25.0)
    assert m.s.mode is Mode.IDLE
    assert m.s.wear == 0.6  # clearing a jam does not replace the part


def test_wear_out_breakdown_repair_replaces_part():
    m = make_machine(hazard_h0=0.0, wear_per_tick=0.05, repair_ticks=5)
    for t in range(25):
        m.step(t, 3000, 25.0)
        if m.s.mode is Mode.FAULTED:
            break
    assert m.s.mode is Mode.FAULTED  # worn out at wear 1.0
    assert m.active_fault.wear_out
    for t in range(25, 32):
        m.step(t, 0, 25.0)
    assert m.s.mode is Mode.IDLE
    assert m.s.wear == 0.0


def test_maintenance_only_from_quiet_modes():
    m = make_machine()
    m.s.mode = Mode.RUNNING
    assert not m.transition_mode(Trigger.MAINTENANCE_START)
    m.s.mode = Mode.IDLE
    assert m.transition_mode(Trigger.MAINTENANCE_START, maintenance_ticks=4)
    assert m.s.mode is Mode.MAINTENANCE
    for t in range(5):
        m.step(t, 0, 25.0)
    assert m.s.mode is Mode.IDLE
    assert m.s.wear == 0.0


def test_idle_dwell_reaches_standby():
    m = make_machine(idle_to_standby_ticks=5, hazard_h0=0.0)
    for t in range(6):
        m.step(t, 0, 25.0)
    assert m.s.mode is Mode.STANDBY


def test_wear_monotone_between_services():
    m = make_machine(seed=3, hazard_h0=0.0)
    last = 0.0
    for t in range(3000):
        m.step(t, 2500 if t % 700 < 500 else 0, 25.0)
        assert m.s.wear >= last
        last = m.s.wear
    assert last > 0.0


def test_production_sanity_and_energy_coupling():
    m = make_machine(seed=9, max_rate_milli=3000)
    standby_uj = round(m.p.standby_w * 1000) * 1000
    for t in range(2000):
        m.step(t, 4500 if t % 11 else 0, 25.0)
        assert m.last_produced <= 4  # ceil of max rate + credit
        assert m.last_defective <= m.last_produced
        if m.s.mode is Mode.RUNNING:
            assert m.last_energy_uj >= standby_uj
        if m.s.mode in (Mode.OFF, Mode.FAULTED):
            assert m.last_energy_uj == 0


def test_negative_demand_clamps():
    m = make_machine(hazard_h0=0.0)
    m.step(0, -100, 25.0)
    assert m.s.mode is Mode.IDLE
    assert m.last_produced == 0


@given(st.integers(min_value=0, max_value=5000), st.integers(min_value=1, max_value=40))
@settings(max_examples=30, deadline=None)
def test_production_never_exceeds_rate(demand, ticks):
    m = make_machine(seed=2, hazard_h0=0.0, max_rate_milli=2000)
    for t in range(ticks):
        m.step(t, demand, 25.0)
        assert m.last_produced <= 3
    total_possible = (min(demand, 2000) * ticks) // 1000 + 1
    assert m.s.units_produced <= total_possible
