import pytest

from iotfactory.plant import Machine, MachineParams
from iotfactory.rng import split_rng


def make_machine(seed: int = 1, tick_s: float = 1.0, **overrides) -> Machine:
    """A Machine wired to fresh named streams, with param overrides."""
    params = MachineParams(machine_id=overrides.pop("machine_id", "m1"), **overrides)
    return Machine(
        params, tick_s,
        rng_faults=split_rng(seed, f"faults/{params.machine_id}"),
        rng_defects=split_rng(seed, f"defects/{params.machine_id}"),
        rng_fire=split_rng(seed, f"fire/{params.machine_id}"),
        rng_pressure=split_rng(seed, f"pressure/{params.machine_id}"),
    )


def small_raw_config(ticks=600, seed=11, machines=2, rate=2.0, **extra):
    """A compact scenario dict for engine-level tests."""
    raw = {
        "run": {"ticks": ticks, "seed": seed},
        "plant": {
            "machines": [{"id": f"m{i}"} for i in range(1, machines + 1)],
            "workload": {"default_pattern": [{"from": 0, "to": ticks, "rate": rate}],
                         "noise_amp": 0.1},
        },
    }
    for key, val in extra.items():
        raw[key] = val
    return raw


@pytest.fixture
def machine():
    return make_machine()
