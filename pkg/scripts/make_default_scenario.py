#!/usr/bin/env python3
"""Generate default.scenario: the calibrated 10-machine, 4-hour shift.

Workload: per-machine alternating run/idle blocks (staggered phases) with a
high-rate spike at the end of each running block. The spike pushes
full-load machines above their nominal thermal band, which drives the
excursion/defect channel; the idle blocks give the shutdown policy room to
act and the maintenance planner its service windows.

Every number here is a calibration choice made against this simulator,
not a measured fact. Re-run this script after changing knobs.
"""

import json
from pathlib import Path

TICKS = 14400          # 4-hour shift at 1 s ticks
BLOCK = 2700           # running block length
PERIOD = 5400          # run + idle
SPIKE = 600            # high-rate tail of each running block
BASE_RATE = 1.8
SPIKE_RATE = 3.0
N_MACHINES = 10
ESSENTIAL = ["m9", "m10"]


def machine_pattern(phase: int) -> list[dict]:
    """Alternating run/idle blocks with a spike tail, clipped to the shift."""
    segments = []
    start = -phase
    while start < TICKS:
        run_start = start
        spike_start = run_start + BLOCK - SPIKE
        run_end = run_start + BLOCK
        for a, b, rate in ((run_start, spike_start, BASE_RATE),
                           (spike_start, run_end, SPIKE_RATE)):
            a2, b2 = max(0, a), min(TICKS, b)
            if a2 < b2:
                segments.append({"from": a2, "to": b2, "rate": rate})
        start += PERIOD
    return segments


def main() -> None:
    per_machine = {}
    faults = []
    for i in range(1, N_MACHINES + 1):
        mid = f"m{i}"
        phase = (i - 1) * 540
        per_machine[mid] = machine_pattern(phase)
        # two exogenous breakdowns per machine inside running blocks,
        # identical in baseline and optimized runs
        for k, seg in enumerate(s for s in per_machine[mid]
                                if s["rate"] == BASE_RATE and
                                s["to"] - s["from"] > 1500):
            if k >= 2:
                break
            faults.append({"machine": mid, "kind": "BREAKDOWN",
                           "at_tick": seg["from"] + 300 + 37 * i,
                           "repair_ticks": 600})

    config = {
        "run": {"ticks": TICKS, "seed": 42, "tick_duration_s": 1.0},
        "plant": {
            "machine_defaults": {
                "power": {"run_w": 5000.0, "standby_w": 1800.0,
                          "maint_w": 500.0, "load_factor": 0.1},
                "production": {"max_rate": 3.0, "scrap_on_fault": 10},
                "thermal": {"band_c": [35.0, 78.0], "rise_run_c": 60.0,
                            "rise_idle_c": 8.0, "tau_heat_s": 200.0,
                            "tau_cool_s": 800.0, "tau_cool_active_s": 120.0,
                            "cooling_drop_c": 15.0},
                "wear": {"per_tick": 2.1e-4, "temp_coeff": 1.5,
                         "pressure_coeff": 1.0},
                "hazard": {"h0": 2.0e-6, "beta": 50.0},
                "defects": {"base": 0.01, "temp_coeff": 0.12,
                            "pressure_coeff": 0.15},
                "timers": {"idle_to_standby_ticks": 120,
                           "wake_delay_ticks": 30,
                           "repair_ticks": 360,
                           "maintenance_ticks": 100},
            },
            "machines": [{"id": f"m{i}", "essential": f"m{i}" in ESSENTIAL}
                         for i in range(1, N_MACHINES + 1)],
            "sensors": "auto",
            "workload": {"per_machine": per_machine, "noise_amp": 0.1},
            "ambient_c": [{"from": 0, "to": 7200, "value": 25.0},
                          {"from": 7200, "to": TICKS, "value": 26.5}],
            "faults": faults,
            "fires": [{"machine": "m3", "at_tick": 4000},
                      {"machine": "m7", "at_tick": 11000}],
            "status_period": 10,
        },
        "network": {
            "gateways": [
                {"id": "gw1", "machines": [f"m{i}" for i in range(1, 6)]},
                {"id": "gw2", "machines": [f"m{i}" for i in range(6, 11)]},
            ],
            "device_link": {"base_latency": 1, "jitter": 0, "drop_probability": 0.0},
            "uplink": {"base_latency": 2, "jitter": 1, "drop_probability": 0.01},
            "qos1_timeout": 6,
            "batch_period": 60,
            "batch_max_retries": 5,
            "backoff_base": 2,
        },
        "edge": {
            "window_ticks": 60,
            "deadbands": {"ENERGY": 100.0, "TEMPERATURE": 0.75,
                          "PRESSURE": 2.0, "FIRE": 1.5},
            "alerts": {"TEMPERATURE": 78.0, "PRESSURE": 262.0, "FIRE": 60.0},
            "safety": [
                {"kind": "FIRE_SPRINKLER", "threshold": 60.0,
                 "release_threshold": 20.0, "response_deadline": 2},
                {"kind": "OVERTEMP_COOLING", "threshold": 90.0,
                 "release_threshold": 76.0, "response_deadline": 2},
            ],
        },
        "policies": {
            "idle_shutdown": {"enabled": True, "idle_threshold_ticks": 240,
                              "wake_delay_ticks": 60,
                              "essential_machines": ESSENTIAL},
            "predictive_maintenance": {"enabled": True, "wear_alarm": 0.4,
                                       "forecast_horizon": 3000},
            "anomaly": {"enabled": True, "window": 120, "k": 4.0},
            "resource_opt": {"enabled": True,
                             "excursion_slowdown_factor": 0.5},
        },
        "trace": {"include_readings": False, "include_deliveries": False,
                  "kpi_period": 60},
    }
    out = Path(__file__).resolve().parent.parent / "default.scenario"
    out.write_text(json.dumps(config, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
