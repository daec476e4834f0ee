import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vo2snn.characterization import classify_analytic, settle_duration
from vo2snn.device import DeviceState, device_params
from vo2snn.errors import Ambiguous, NonFiniteState, WindowTooShort
from vo2snn.oscillator import (
    Constant,
    NeuronCircuit,
    NotOscillating,
    Response,
    Sine,
    SquarePulse,
    StepSizeWarning,
    classify_response,
    closed_form_period,
    default_circuit,
    extract_spikes,
    measured_period,
    preset,
    response_from_period,
    segment_times,
    simulate,
)

INS, MET = DeviceState.INSULATING, DeviceState.METALLIC


@pytest.fixture(autouse=True)
def _quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", StepSizeWarning)
        yield


def run_constant(c, v, per_period=1000, periods=20):
    T = closed_form_period(c, v)
    return simulate(c, Constant(v, settle_duration(c, v, periods)), T / per_period), T


def test_circuit_thresholds():
    c = default_circuit(1)
    d = c.device
    assert c.v_up == pytest.approx(d.v_th * (d.r_ins + 50) / d.r_ins)
    assert c.v_down == pytest.approx(d.v_h * (d.r_met + 50) / d.r_met)
    assert c.v_down < c.v_up


def test_collapsed_hysteresis_rejected():
    from vo2snn.device import DeviceParams

    d = DeviceParams(1, 6.5, 4.5, 1e5, 100.0)  # 100 ohm metal + 50 ohm sampler
    with pytest.raises(ValueError, match="hysteresis"):
        NeuronCircuit(d)


def test_zero_drive_gives_zero_trace():
    c = default_circuit(1)
    tr = simulate(c, Constant(0.0, 20e-6), 10e-9)
    assert np.all(tr.v_node == 0) and not tr.switch_events
    assert classify_response(tr) is Response.UN_FIRING
    sp = extract_spikes(tr)
    assert len(sp) == 0 and sp.rate == 0


@pytest.mark.parametrize("level", [1, 2, 3, 4])
def test_period_matches_closed_form(level):
    c = default_circuit(level)
    tr, T = run_constant(c, 10.0)
    assert abs(measured_period(tr) / T - 1) < 0.01
    assert classify_response(tr) is Response.OSCILLATING


def test_fine_step_self_consistency():
    c = default_circuit(1)
    tr, T = run_constant(c, 10.0, per_period=10_000, periods=10)
    assert abs(measured_period(tr) / T - 1) <= 1e-3


def test_error_shrinks_with_dt():
    c = default_circuit(1)
    errs = [abs(measured_period(run_constant(c, 10.0, n)[0]) / closed_form_period(c, 10.0) - 1)
            for n in (100, 10_000)]
    # first order or better: 100x smaller step, at least 30x smaller error
    assert errs[1] < errs[0] / 30


def test_closed_form_edges():
    c = default_circuit(1)
    assert closed_form_period(c, 0.0) is NotOscillating.STUCK_INSULATING
    assert closed_form_period(c, 1e4) is NotOscillating.STUCK_METALLIC
    t_i, t_m = segment_times(c, 10.0)
    assert t_i > 0 and t_m > 0
    assert closed_form_period(c, -10.0) == closed_form_period(c, 10.0)


def test_response_mapping():
    assert response_from_period(NotOscillating.STUCK_INSULATING) is Response.UN_FIRING
    assert response_from_period(NotOscillating.STUCK_METALLIC) is Response.FIRING
    assert response_from_period(1e-6) is Response.OSCILLATING


def test_level5_pulse_does_not_oscillate():
    c = default_circuit(5)
    drive = preset("pulse")
    tr = simulate(c, drive, min(c.tau(INS), c.tau(MET)) / 1000)
    # a single switch then a latch at most; never a sustained train
    assert classify_response(tr) is not Response.OSCILLATING
    assert len(extract_spikes(tr, settle_fraction=0.0)) <= 1


def test_level1_pulse_oscillates():
    c = default_circuit(1)
    tr = simulate(c, preset("pulse"), 2e-9)
    assert classify_response(tr) is Response.OSCILLATING


def test_square_pulse_integrates_across_pulses():
    c = default_circuit(1)
    amp, width = 12.0, 2e-6
    # a single pulse from rest cannot reach the threshold
    one = simulate(c, SquarePulse(amp, 4e-6, width, width), 2e-9)
    assert not one.switch_events
    tr = simulate(c, preset("pulse-train", amplitude=amp), 2e-9)
    sp = extract_spikes(tr, settle_fraction=0.0)
    n_pulses = 25
    assert 0 < len(sp) < n_pulses
    phase = np.mod(sp.spike_times, 4e-6)
    # fired from within the on-phase, not at either edge
    assert np.all((phase > 0.05e-6) & (phase < width))


def test_spike_latency_depends_on_amplitude():
    c = default_circuit(1)
    lat = []
    for amp in (12.0, 14.0):
        sp = extract_spikes(simulate(c, preset("pulse-train", amplitude=amp), 2e-9), settle_fraction=0.0)
        lat.append(np.median(np.mod(sp.spike_times, 4e-6)))
    assert abs(lat[0] - lat[1]) > 0.1e-6


def test_sine_gives_both_polarities():
    c = default_circuit(1)
    amp = 12.0
    tr = simulate(c, preset("sine", amplitude=amp), 1e-8)
    sp = extract_spikes(tr, settle_fraction=0.0)
    pos = sp.spike_times[sp.polarity > 0]
    neg = sp.spike_times[sp.polarity < 0]
    assert pos.size and neg.size
    assert np.all(pos < 1e-3) and np.all(neg > 1e-3)
    # only while |drive| is above the constant-drive onset
    onset = c.v_up / c.divider(INS)
    drive = amp * np.abs(np.sin(2 * np.pi * sp.spike_times / 2e-3))
    assert np.all(drive > onset * 0.97)


def test_spike_count_matches_period():
    c = default_circuit(2)
    tr, T = run_constant(c, 9.0)
    sp = extract_spikes(tr)
    t0, t1 = sp.window
    inside = np.count_nonzero((sp.spike_times >= t0) & (sp.spike_times <= t1))
    assert abs(inside - math.floor((t1 - t0) / T)) <= 1
    assert sp.rate == pytest.approx(1 / T, rel=0.1)


def test_polarity_symmetry():
    c = default_circuit(1)
    w = SquarePulse(12.0, 4e-6, 2e-6, 40e-6)
    a = simulate(c, w, 4e-9)
    b = simulate(c, -w, 4e-9)
    np.testing.assert_array_equal(b.v_node, -a.v_node)
    np.testing.assert_array_equal(b.state, a.state)


def test_spike_voltage_identity():
    c = default_circuit(1)
    tr, _ = run_constant(c, 10.0, 200)
    met = tr.state == MET
    g = c.r_sample / (c.device.r_met + c.r_sample)
    np.testing.assert_allclose(tr.v_spike[met], tr.v_node[met] * g, rtol=0, atol=1e-15)


def test_determinism_with_jitter():
    c = NeuronCircuit(device_params(1).stochastic())
    d = Constant(10.0, 60e-6)
    a = simulate(c, d, 5e-9, rng_seed=7)
    b = simulate(c, d, 5e-9, rng_seed=7)
    np.testing.assert_array_equal(a.v_node, b.v_node)
    assert a.switch_events == b.switch_events
    other = simulate(c, d, 5e-9, rng_seed=8)
    assert not np.array_equal(a.v_node, other.v_node)


def test_seed_rules():
    c = default_circuit(1)
    with pytest.raises(ValueError):
        simulate(c, Constant(1.0, 1e-6), 1e-9, rng_seed=3)
    cj = NeuronCircuit(device_params(1).stochastic())
    with pytest.raises(ValueError):
        simulate(cj, Constant(1.0, 1e-6), 1e-9)


def test_step_size_warning():
    with warnings.catch_warnings():
        warnings.simplefilter("error", StepSizeWarning)
        with pytest.raises(StepSizeWarning):
            simulate(default_circuit(1), Constant(1.0, 1e-5), 1e-7)


def test_non_finite_drive():
    with pytest.raises(NonFiniteState):
        simulate(default_circuit(1), Constant(float("nan"), 1e-6), 1e-9)


def test_trace_read_only_and_csv(tmp_path):
    tr = simulate(default_circuit(1), Constant(10.0, 2e-6), 1e-9)
    with pytest.raises(ValueError):
        tr.v_node[0] = 1.0
    p = tmp_path / "t.csv"
    tr.to_csv(p)
    lines = p.read_text().splitlines()
    assert lines[0] == "t,v_node,v_spike,state" and len(lines) == tr.t.size + 1


def test_window_too_short():
    tr = simulate(default_circuit(1), Constant(10.0, 2e-6), 1e-9)
    with pytest.raises(WindowTooShort):
        extract_spikes(tr, settle_fraction=1.0)


def test_ambiguous_short_trace():
    c = default_circuit(1)
    T = closed_form_period(c, 10.0)
    # a single switch in the steady window fits none of the three patterns
    tr = simulate(c, Constant(10.0, 1.2 * T), T / 500)
    with pytest.raises(Ambiguous):
        classify_response(tr, settle_fraction=0.5)


def test_latched_is_firing():
    c = NeuronCircuit(device_params(1), r_series=300.0)
    v = 20.0
    assert closed_form_period(c, v) is NotOscillating.STUCK_METALLIC
    tr = simulate(c, Constant(v, settle_duration(c, v)), min(c.tau(INS), c.tau(MET)) / 200)
    assert classify_response(tr) is Response.FIRING


def test_classifier_agrees_with_closed_form_on_grid():
    dev = device_params(1)
    mismatches = []
    for r in np.geomspace(500, 50e3, 20):
        c = NeuronCircuit(dev, r)
        for v in np.linspace(1, 15, 20):
            T = closed_form_period(c, v)
            dur = settle_duration(c, v)
            dt = (T if isinstance(T, float) else min(c.tau(INS), c.tau(MET))) / 200
            tr = simulate(c, Constant(v, dur), min(dt, dur / 2000))
            if classify_response(tr) is not classify_analytic(c, v):
                mismatches.append((r, v))
    assert not mismatches


@settings(max_examples=20, deadline=None)
@given(st.floats(7.0, 11.0))
def test_period_oracle_property(v):
    c = default_circuit(1)
    tr, T = run_constant(c, v, 300, periods=5)
    assert abs(measured_period(tr) / T - 1) < 0.01


def test_drive_shapes():
    s = Sine(2.0, 1.0, 1.0, offset=0.5)
    assert s(0.25) == pytest.approx(2.5)
    assert (-s)(0.25) == pytest.approx(-2.5)
    p = SquarePulse(3.0, 4.0, 1.0, 8.0)
    assert p(0.5) == 3.0 and p(2.0) == 0.0
    with pytest.raises(ValueError):
        SquarePulse(1.0, 1.0, 2.0, 1.0)
    with pytest.raises(KeyError):
        preset("nope")
    with pytest.raises(TypeError):
        preset("pulse-train")  # amplitude is required
