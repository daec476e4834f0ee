"""Relaxation-oscillator neuron: one VO2 device in the circuit

    V_in --[r_series]--+-- node (V_osc) --[device]--[r_sample]-- GND
                       |
                    [c_par]
                       |
                      GND

Node equation: ``c_par dV/dt = (V_in - V)/r_series - V/(r_dev + r_sample)``.
In a fixed device state this is linear, so each state segment is advanced
with the exact exponential solution and the only numerical error comes from
locating switch instants, which is done by bisection inside the step.
"""
from __future__ import annotations

import csv
import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np

from .device import DeviceParams, DeviceState, device_params
from .errors import Ambiguous, NonFiniteState, WindowTooShort

INS = DeviceState.INSULATING
MET = DeviceState.METALLIC

DEFAULT_SETTLE_FRACTION = 0.1
_MAX_EVENTS_PER_STEP = 10_000


class StepSizeWarning(UserWarning):
    """dt is coarse compared with the circuit time constants."""


@dataclass(frozen=True)
class NeuronCircuit:
    device: DeviceParams
    r_series: float = 3e3
    c_par: float = 1.8e-9
    r_sample: float = 50.0

    def __post_init__(self):
        if self.r_series <= 0 or self.c_par <= 0 or self.r_sample <= 0:
            raise ValueError("circuit elements must be positive")
        if self.r_sample >= 0.5 * (self.device.r_met + self.device.r_ins):
            raise ValueError("sampling resistor dominates the device")
        if self.v_down >= self.v_up:
            # the device would fall back to insulating at the instant it switches
            raise ValueError(
                f"hysteresis collapses through the sampling divider "
                f"(node hold {self.v_down:.4g} V >= node threshold {self.v_up:.4g} V)"
            )

    def r_branch(self, state: DeviceState) -> float:
        r_dev = self.device.r_met if state == MET else self.device.r_ins
        return r_dev + self.r_sample

    def divider(self, state: DeviceState) -> float:
        """Fraction of the drive seen at the node at equilibrium."""
        rp = self.r_branch(state)
        return rp / (self.r_series + rp)

    def tau(self, state: DeviceState) -> float:
        rp = self.r_branch(state)
        return self.c_par * self.r_series * rp / (self.r_series + rp)

    @property
    def v_up(self) -> float:
        """Node voltage at which the insulating device reaches v_th."""
        d = self.device
        return d.v_th * (d.r_ins + self.r_sample) / d.r_ins

    @property
    def v_down(self) -> float:
        """Node voltage at which the metallic device falls to v_h."""
        d = self.device
        return d.v_h * (d.r_met + self.r_sample) / d.r_met

    def spike_gain(self, state: DeviceState) -> float:
        """v_spike / v_node in the given state."""
        return self.r_sample / self.r_branch(state)

    @property
    def spike_amplitude(self) -> float:
        """v_spike right after an insulating -> metallic switch."""
        return self.v_up * self.spike_gain(MET)

    def with_device(self, device: DeviceParams) -> "NeuronCircuit":
        return NeuronCircuit(device, self.r_series, self.c_par, self.r_sample)


def default_circuit(level: int = 1, **kw) -> NeuronCircuit:
    return NeuronCircuit(device_params(level), **kw)


# -- drive waveforms ---------------------------------------------------------

@dataclass(frozen=True)
class Constant:
    v: float
    duration: float

    def __call__(self, t):
        return np.full_like(np.asarray(t, dtype=float), self.v)

    def __neg__(self):
        return Constant(-self.v, self.duration)


@dataclass(frozen=True)
class SquarePulse:
    amplitude: float
    period: float
    width: float
    duration: float
    offset: float = 0.0

    def __post_init__(self):
        if self.period <= 0 or not (0 < self.width <= self.period):
            raise ValueError("need period > 0 and 0 < width <= period")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        on = np.mod(t, self.period) < self.width
        return self.offset + np.where(on, self.amplitude, 0.0)

    def __neg__(self):
        return SquarePulse(-self.amplitude, self.period, self.width, self.duration, -self.offset)


@dataclass(frozen=True)
class Sine:
    amplitude: float
    period: float
    duration: float
    offset: float = 0.0

    def __post_init__(self):
        if self.period <= 0:
            raise ValueError("period must be positive")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return self.offset + self.amplitude * np.sin(2 * np.pi * t / self.period)

    def __neg__(self):
        return Sine(-self.amplitude, self.period, self.duration, -self.offset)


Drive = Union[Constant, SquarePulse, Sine]


def _single_pulse(amplitude: float = 12.5, width: float = 100e-6) -> SquarePulse:
    # one pulse; the trace covers only its on-phase
    return SquarePulse(amplitude, period=2 * width, width=width, duration=width)


def _pulse_train(amplitude: float, cycles: int = 25) -> SquarePulse:
    return SquarePulse(amplitude, period=4e-6, width=2e-6, duration=cycles * 4e-6)


def _sine_cycle(amplitude: float, cycles: int = 1) -> Sine:
    return Sine(amplitude, period=2e-3, duration=cycles * 2e-3)


# name -> factory; factories without defaults need their amplitude passed in
PRESETS: Dict[str, Callable[..., Drive]] = {
    "pulse": _single_pulse,
    "pulse-train": _pulse_train,
    "sine": _sine_cycle,
}


def preset(name: str, **kw) -> Drive:
    try:
        factory = PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown drive preset {name!r}; choose from {sorted(PRESETS)}") from None
    return factory(**kw)


# -- time-domain simulation --------------------------------------------------

@dataclass
class Trace:
    dt: float
    t: np.ndarray
    v_node: np.ndarray
    v_spike: np.ndarray
    state: np.ndarray
    switch_events: List[Tuple[float, DeviceState]]
    circuit: Optional[NeuronCircuit] = None
    drive: Optional[Drive] = None

    def __post_init__(self):
        for arr in (self.t, self.v_node, self.v_spike, self.state):
            arr.setflags(write=False)

    @property
    def duration(self) -> float:
        return float(self.t[-1] - self.t[0])

    def i_device(self) -> np.ndarray:
        rs = self.circuit.r_sample
        return self.v_spike / rs

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "v_node", "v_spike", "state"])
            for row in zip(self.t, self.v_node, self.v_spike, self.state):
                w.writerow([f"{row[0]:.9e}", f"{row[1]:.9e}", f"{row[2]:.9e}", int(row[3])])


def _crosses(state, v_start, v_end, v_up, v_down):
    """True if the monotone segment v_start -> v_end hits the switch condition."""
    if state == INS:
        return abs(v_end) >= v_up
    s = 1.0 if v_start >= 0 else -1.0
    return s * v_end <= v_down


def simulate(
    circuit: NeuronCircuit,
    drive: Drive,
    dt: float,
    rng_seed: Optional[int] = None,
) -> Trace:
    """Integrate the neuron under ``drive`` for ``drive.duration`` seconds.

    The drive is held at its step-midpoint value across each step. A switch
    inside a step is bracketed by bisection until the bracket is below
    ``dt/100``; the state changes at the upper end and the remainder of the
    step continues in the new state.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    dev = circuit.device
    if (dev.jitter_sigma > 0) != (rng_seed is not None):
        raise ValueError("rng_seed must be given exactly when jitter_sigma > 0")
    tau_min = min(circuit.tau(INS), circuit.tau(MET))
    if dt > tau_min / 1000:
        warnings.warn(
            f"dt={dt:.3g}s exceeds 1/1000 of the fastest time constant ({tau_min:.3g}s)",
            StepSizeWarning,
            stacklevel=2,
        )

    n = int(round(drive.duration / dt))
    if n < 1:
        raise WindowTooShort("drive duration shorter than one step")
    t = np.arange(n + 1) * dt
    u_mid = drive((np.arange(n) + 0.5) * dt)

    rng = np.random.default_rng(rng_seed) if rng_seed is not None else None
    cyc = dev.jittered(rng) if rng is not None else dev

    def thresholds(p: DeviceParams):
        c = circuit
        return (
            p.v_th * (p.r_ins + c.r_sample) / p.r_ins,
            p.v_h * (p.r_met + c.r_sample) / p.r_met,
        )

    v_up, v_down = thresholds(cyc)
    rs, c = circuit.r_series, circuit.c_par
    seg = {}
    for st in (INS, MET):
        rp = circuit.r_branch(st)
        seg[st] = (rp / (rs + rp), c * rs * rp / (rs + rp))

    v_node = np.empty(n + 1)
    states = np.empty(n + 1, dtype=np.int8)
    events: List[Tuple[float, DeviceState]] = []
    tol = dt / 100.0

    v = 0.0
    state = INS
    v_node[0] = v
    states[0] = state
    exp = math.exp
    for k in range(n):
        u = float(u_mid[k])
        t0 = k * dt
        remaining = dt
        elapsed = 0.0
        hops = 0
        while True:
            frac, tau = seg[state]
            v_inf = u * frac
            v_end = v_inf + (v - v_inf) * exp(-remaining / tau)
            if not _crosses(state, v, v_end, v_up, v_down):
                v = v_end
                break
            lo, hi = 0.0, remaining
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                vm = v_inf + (v - v_inf) * exp(-mid / tau)
                if _crosses(state, v, vm, v_up, v_down):
                    hi = mid
                else:
                    lo = mid
            v = v_inf + (v - v_inf) * exp(-hi / tau)
            elapsed += hi
            remaining -= hi
            state = MET if state == INS else INS
            if state == INS and rng is not None:
                # a full insulating -> metallic -> insulating cycle closed
                cyc = dev.jittered(rng)
                v_up, v_down = thresholds(cyc)
            if events and t0 + elapsed <= events[-1][0]:
                elapsed = math.nextafter(events[-1][0], math.inf) - t0
            events.append((t0 + elapsed, state))
            hops += 1
            if hops > _MAX_EVENTS_PER_STEP:
                raise NonFiniteState(f"switching chatter at t={t0:.6g}s")
            if remaining <= 0:
                break
        if not math.isfinite(v):
            raise NonFiniteState(f"non-finite node voltage at t={t0 + dt:.6g}s")
        v_node[k + 1] = v
        states[k + 1] = state

    gain = np.where(states == MET, circuit.spike_gain(MET), circuit.spike_gain(INS))
    return Trace(
        dt=dt,
        t=t,
        v_node=v_node,
        v_spike=v_node * gain,
        state=states,
        switch_events=events,
        circuit=circuit,
        drive=drive,
    )


# -- analytic period ---------------------------------------------------------

class NotOscillating(enum.Enum):
    STUCK_INSULATING = "stuck-insulating"
    STUCK_METALLIC = "stuck-metallic"


def segment_times(circuit: NeuronCircuit, v_in: float):
    """(t_insulating, t_metallic) of one steady cycle, or a NotOscillating tag.

    Insulating: the node charges from v_down toward a_i = |v_in|*div_i and
    switches at v_up, taking tau_i*ln((a_i - v_down)/(a_i - v_up)).
    Metallic: it discharges from v_up toward a_m = |v_in|*div_m and releases
    at v_down, taking tau_m*ln((v_up - a_m)/(v_down - a_m)).
    """
    a = abs(v_in)
    v_up, v_dn = circuit.v_up, circuit.v_down
    a_i = a * circuit.divider(INS)
    if a_i <= v_up:
        return NotOscillating.STUCK_INSULATING
    a_m = a * circuit.divider(MET)
    if a_m >= v_dn:
        return NotOscillating.STUCK_METALLIC
    t_ins = circuit.tau(INS) * math.log((a_i - v_dn) / (a_i - v_up))
    t_met = circuit.tau(MET) * math.log((v_up - a_m) / (v_dn - a_m))
    return t_ins, t_met


def closed_form_period(circuit: NeuronCircuit, v_in: float) -> Union[float, NotOscillating]:
    seg = segment_times(circuit, v_in)
    if isinstance(seg, NotOscillating):
        return seg
    return seg[0] + seg[1]


def measured_period(trace: Trace, settle_fraction: float = DEFAULT_SETTLE_FRACTION) -> float:
    """Mean spacing of insulating -> metallic switches after the settle time."""
    t_settle = trace.t[0] + settle_fraction * trace.duration
    ups = np.array([t for t, s in trace.switch_events if s == MET and t >= t_settle])
    if ups.size < 2:
        return math.nan
    return float((ups[-1] - ups[0]) / (ups.size - 1))


# -- spikes and classification -----------------------------------------------

class Polarity(enum.IntEnum):
    NEGATIVE = -1
    POSITIVE = 1


class Response(enum.Enum):
    UN_FIRING = "un-firing"
    OSCILLATING = "oscillating"
    FIRING = "firing"


@dataclass(frozen=True)
class SpikeTrain:
    spike_times: np.ndarray
    polarity: np.ndarray
    window: Tuple[float, float]
    rate: float = field(init=False)

    def __post_init__(self):
        t0, t1 = self.window
        inside = (self.spike_times >= t0) & (self.spike_times <= t1)
        object.__setattr__(self, "rate", float(np.count_nonzero(inside) / (t1 - t0)))

    def __len__(self):
        return len(self.spike_times)


def _steady_start(trace: Trace, settle_fraction: float) -> float:
    duration = trace.duration
    settle = settle_fraction * duration
    if settle >= duration:
        raise WindowTooShort(f"settle time {settle:.3g}s >= duration {duration:.3g}s")
    return float(trace.t[0] + settle)


def extract_spikes(
    trace: Trace,
    v_thresh: Optional[float] = None,
    settle_fraction: float = DEFAULT_SETTLE_FRACTION,
) -> SpikeTrain:
    """One spike per upward crossing of |v_spike| through ``v_thresh``.

    Crossing times are linearly interpolated between samples. The default
    threshold is half the analytic metallic-state spike amplitude.
    """
    if v_thresh is None:
        v_thresh = 0.5 * trace.circuit.spike_amplitude
    if v_thresh <= 0:
        raise ValueError("v_thresh must be positive")
    t_start = _steady_start(trace, settle_fraction)

    mag = np.abs(trace.v_spike)
    idx = np.flatnonzero((mag[:-1] < v_thresh) & (mag[1:] >= v_thresh)) + 1
    m0, m1 = mag[idx - 1], mag[idx]
    frac = (v_thresh - m0) / (m1 - m0)
    times = trace.t[idx - 1] + frac * (trace.t[idx] - trace.t[idx - 1])
    pol = np.where(trace.v_spike[idx] >= 0, 1, -1).astype(np.int8)
    return SpikeTrain(times, pol, (t_start, float(trace.t[-1])))


def classify_response(trace: Trace, settle_fraction: float = DEFAULT_SETTLE_FRACTION) -> Response:
    t_start = _steady_start(trace, settle_fraction)
    steady = trace.t >= t_start
    states = trace.state[steady]
    events = [s for t, s in trace.switch_events if t >= t_start]
    ups = sum(1 for s in events if s == MET)
    downs = len(events) - ups
    if not events:
        if np.all(states == INS):
            return Response.UN_FIRING
        if np.all(states == MET):
            return Response.FIRING
    if ups >= 2 and downs >= 2:
        return Response.OSCILLATING
    raise Ambiguous(
        f"{ups} up / {downs} down switches in the steady window; trace too short to classify"
    )


def response_from_period(result: Union[float, NotOscillating]) -> Response:
    """Map a closed_form_period outcome onto the three response classes."""
    if result is NotOscillating.STUCK_INSULATING:
        return Response.UN_FIRING
    if result is NotOscillating.STUCK_METALLIC:
        return Response.FIRING
    return Response.OSCILLATING
