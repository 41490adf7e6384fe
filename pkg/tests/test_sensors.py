import math

from hypothesis import given, settings
from hypothesis import strategies as st

from iotfactory.edge import correct_calibration
from iotfactory.plant import SensorSpec, noise_bound, sample_sensor
from iotfactory.rng import split_rng


def spec(kind="ENERGY", tolerance=0.001, gain=1.0, offset=0.0):
    return SensorSpec(sensor_id="s1", kind=kind, machine_id="m1",
                      sample_period=1, gain=gain, offset=offset,
                      tolerance=tolerance)


def test_energy_reading_within_relative_band():
    rng = split_rng(42, "sensor-noise/s1")
    s = spec("ENERGY", tolerance=0.001)
    for i in range(5000):
        r = sample_sensor(s, 1000.0, i, i, rng)
        assert 999.0 <= r.value <= 1001.0


def test_temperature_reading_within_absolute_band():
    rng = split_rng(42, "sensor-noise/s2")
    s = spec("TEMPERATURE", tolerance=0.5)
    for i in range(5000):
        r = sample_sensor(s, 25.0, i, i, rng)
        assert 24.5 <= r.value <= 25.5


def test_zero_tolerance_is_identity():
    rng = split_rng(1, "sensor-noise/s3")
    s = spec("TEMPERATURE", tolerance=0.0)
    r = sample_sensor(s, 33.25, 0, 0, rng)
    assert r.value == 33.25


def test_draw_count_is_constant_even_at_zero_tolerance():
    # zero-tolerance sensors must consume the stream at the same rate
    rng_a = split_rng(5, "sensor-noise/x")
    rng_b = split_rng(5, "sensor-noise/x")
    sample_sensor(spec("TEMPERATURE", tolerance=0.0), 20.0, 0, 0, rng_a)
    sample_sensor(spec("TEMPERATURE", tolerance=0.5), 20.0, 0, 0, rng_b)
    assert rng_a.random() == rng_b.random()


@given(truth=st.floats(-1e4, 1e4), gain=st.floats(0.5, 2.0),
       offset=st.floats(-50, 50), tol=st.floats(0, 2.0),
       kind=st.sampled_from(["ENERGY", "TEMPERATURE", "PRESSURE", "FIRE"]))
@settings(max_examples=200, deadline=None)
def test_noise_bound_invariant(truth, gain, offset, tol, kind):
    rng = split_rng(9, "sensor-noise/prop")
    s = spec(kind, tolerance=tol, gain=gain, offset=offset)
    r = sample_sensor(s, truth, 0, 0, rng)
    ideal = truth * gain + offset
    assert abs(r.value - ideal) <= noise_bound(s, truth) + 1e-12


@given(truth=st.floats(-1e3, 1e3), gain=st.floats(-3, 3).filter(lambda g: abs(g) > 1e-3),
       offset=st.floats(-100, 100))
@settings(max_examples=200, deadline=None)
def test_calibration_round_trip(truth, gain, offset):
    # sample noiselessly, then invert: must recover ground truth exactly
    rng = split_rng(3, "sensor-noise/rt")
    s = spec("PRESSURE", tolerance=0.0, gain=gain, offset=offset)
    r = sample_sensor(s, truth, 0, 0, rng)
    recovered = correct_calibration(r.value, gain, offset)
    assert math.isclose(recovered, truth, rel_tol=1e-9, abs_tol=1e-9)


def test_correct_calibration_examples():
    assert correct_calibration(101.0, 1.0, 1.0) == 100.0
    assert correct_calibration(42.0, 1.0, 0.0) == 42.0
