"""Device- and neuron-level characterization sweeps.

I-V hysteresis loops, threshold statistics over repeated cycles, tri-state
phase diagrams over (series resistance, drive), and frequency / power curves
of the oscillating neuron.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, ndimage, optimize

from .device import DeviceParams, DeviceState, draw_thresholds
from .errors import EmptyRun, NoOscillatingBand
from .oscillator import (
    INS,
    MET,
    Constant,
    NeuronCircuit,
    NotOscillating,
    Response,
    closed_form_period,
    classify_response,
    measured_period,
    response_from_period,
    segment_times,
    simulate,
)

DEFAULT_IV_LOAD = 10.0


class Branch(enum.IntEnum):
    UP = 0
    DOWN = 1


@dataclass
class IVCurve:
    v_applied: np.ndarray
    current: np.ndarray
    branch: np.ndarray
    load_resistor: float
    switched: bool
    v_th_source: Optional[float] = None
    v_h_source: Optional[float] = None
    v_th_device: Optional[float] = None
    v_h_device: Optional[float] = None

    @property
    def extracted_v_th(self):
        return self.v_th_source

    @property
    def extracted_v_h(self):
        return self.v_h_source

    @property
    def step(self) -> float:
        return float(self.v_applied[1] - self.v_applied[0])


def _sweep(v_src, v_th, v_h, r_ins, r_met, r_load):
    """Quasi-static sweep for a batch of (v_th, v_h) pairs.

    ``v_src`` is the 1-D source sequence; ``v_th``/``v_h`` are 1-D arrays,
    one entry per sweep in the batch. Returns (states, device voltages
    before the update) with shape (batch, len(v_src)).
    """
    nb = v_th.shape[0]
    state = np.zeros(nb, dtype=bool)  # True = metallic
    states = np.empty((nb, v_src.size), dtype=bool)
    v_dev_pre = np.empty((nb, v_src.size))
    f_ins = r_ins / (r_ins + r_load)
    f_met = r_met / (r_met + r_load)
    for k, vs in enumerate(v_src):
        vd = abs(vs) * np.where(state, f_met, f_ins)
        v_dev_pre[:, k] = vd
        turn_on = ~state & (vd >= v_th)
        turn_off = state & (vd <= v_h)
        state = (state | turn_on) & ~turn_off
        # a device that cannot hold the metallic state drops straight back
        state &= ~(turn_on & (abs(vs) * f_met <= v_h))
        states[:, k] = state
    return states, v_dev_pre


def _sweep_grid(v_max: float, steps: int):
    up = np.linspace(0.0, v_max, steps + 1)
    down = up[::-1][1:]
    v = np.concatenate([up, down])
    branch = np.concatenate([np.full(up.size, Branch.UP), np.full(down.size, Branch.DOWN)])
    return v, branch


def iv_sweep(
    device: DeviceParams,
    v_max: Optional[float] = None,
    steps: int = 1000,
    load_resistor: float = DEFAULT_IV_LOAD,
) -> IVCurve:
    """Up-then-down source sweep through a series load.

    Thresholds are read at the jumps as the midpoint of the bracketing
    source step, so they are within half a step of the true switch point.
    Device-referred values apply the load divider of the pre-jump state.
    """
    if steps < 100:
        raise ValueError("steps must be >= 100")
    if load_resistor <= 0:
        raise ValueError("load_resistor must be positive")
    if v_max is None:
        v_max = 1.5 * device.v_th * (device.r_ins + load_resistor) / device.r_ins
    v, branch = _sweep_grid(v_max, steps)
    states, _ = _sweep(
        v, np.array([device.v_th]), np.array([device.v_h]),
        device.r_ins, device.r_met, load_resistor,
    )
    met = states[0]
    r_dev = np.where(met, device.r_met, device.r_ins)
    current = v / (r_dev + load_resistor)

    f_ins = device.r_ins / (device.r_ins + load_resistor)
    f_met = device.r_met / (device.r_met + load_resistor)
    prev = np.concatenate([[False], met[:-1]])
    on = np.flatnonzero(met & ~prev & (branch == Branch.UP))
    off = np.flatnonzero(~met & prev & (branch == Branch.DOWN))
    curve = IVCurve(v, current, branch, load_resistor, switched=on.size > 0)
    if on.size:
        k = on[0]
        curve.v_th_source = 0.5 * (v[k - 1] + v[k])
        curve.v_th_device = curve.v_th_source * f_ins
    if off.size:
        k = off[0]
        curve.v_h_source = 0.5 * (v[k - 1] + v[k])
        curve.v_h_device = curve.v_h_source * f_met
    return curve


@dataclass
class ThresholdStats:
    values: np.ndarray  # sorted per-cycle device-referred thresholds
    mean: float
    std: float
    seed: Optional[int]

    @property
    def cdf(self) -> np.ndarray:
        n = self.values.size
        return np.arange(1, n + 1) / n

    @property
    def relative_spread(self) -> float:
        return self.std / self.mean


def threshold_stats(
    device: DeviceParams,
    n_cycles: int,
    rng_seed: Optional[int] = 0,
    steps: int = 1000,
    v_max: Optional[float] = None,
    load_resistor: float = DEFAULT_IV_LOAD,
) -> ThresholdStats:
    """Repeat the I-V cycle ``n_cycles`` times with fresh jitter per cycle."""
    if n_cycles < 1:
        raise EmptyRun("n_cycles must be >= 1")
    rng = np.random.default_rng(rng_seed)
    v_th, v_h = draw_thresholds(device, rng, n_cycles)
    if v_max is None:
        v_max = 1.5 * (device.v_th + 6 * device.jitter_sigma)
        v_max *= (device.r_ins + load_resistor) / device.r_ins
    v, branch = _sweep_grid(v_max, steps)
    up = branch == Branch.UP
    states, _ = _sweep(v[up], v_th, v_h, device.r_ins, device.r_met, load_resistor)
    if not states[:, -1].all():
        raise ValueError("v_max too low: some cycles never switched")
    k = states.argmax(axis=1)
    f_ins = device.r_ins / (device.r_ins + load_resistor)
    vals = np.sort(0.5 * (v[k - 1] + v[k]) * f_ins)
    dev = vals - vals[0]
    return ThresholdStats(
        values=vals,
        mean=float(vals[0] + dev.mean()),
        std=float(dev.std()),
        seed=rng_seed,
    )


# -- phase diagram -----------------------------------------------------------

LABEL_CODES = {Response.UN_FIRING: 0, Response.OSCILLATING: 1, Response.FIRING: 2}
CODE_LABELS = {v: k for k, v in LABEL_CODES.items()}


def classify_analytic(circuit: NeuronCircuit, v_in: float) -> Response:
    return response_from_period(closed_form_period(circuit, v_in))


def _bisect(pred, lo, hi, tol):
    """Smallest x in [lo, hi] with pred(x) true, assuming pred monotone."""
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return hi


def band_edges(circuit: NeuronCircuit, v_max: float = 1e3, tol: float = 1e-9):
    """Drive at which firing starts (onset) and at which the device latches.

    Both found by bisection on the analytic classifier; when no oscillating
    band exists the two coincide.
    """
    def left_unfiring(v):
        return classify_analytic(circuit, v) != Response.UN_FIRING

    def latched(v):
        return classify_analytic(circuit, v) == Response.FIRING

    if not latched(v_max):
        raise ValueError("v_max too small to reach the latched state")
    onset = _bisect(left_unfiring, 0.0, v_max, tol)
    latch = _bisect(latched, 0.0, v_max, tol)
    return onset, latch


@dataclass
class PhaseDiagram:
    r_axis: np.ndarray
    v_axis: np.ndarray
    labels: np.ndarray  # (nr, nv) codes, see LABEL_CODES
    triple_point: Optional[Tuple[float, float]]
    level: int
    log_r: bool = True
    n_regions: int = 0
    crosscheck: List[dict] = field(default_factory=list)

    @property
    def has_triple_point(self) -> bool:
        return self.triple_point is not None


def _count_regions(labels: np.ndarray) -> int:
    total = 0
    for code in np.unique(labels):
        _, n = ndimage.label(labels == code)
        total += n
    return total


def _triple_cell(labels: np.ndarray):
    nr, nv = labels.shape
    for i in range(nr - 1):
        for j in range(nv - 1):
            if np.unique(labels[i:i + 2, j:j + 2]).size == 3:
                return i, j
    return None


def phase_diagram(
    device: DeviceParams,
    r_range: Tuple[float, float] = (500.0, 50e3),
    v_range: Tuple[float, float] = (1.0, 15.0),
    grid: Tuple[int, int] = (64, 64),
    c_par: float = 1.8e-9,
    r_sample: float = 50.0,
    log_r: bool = True,
    crosscheck: int = 0,
    rng_seed: int = 0,
) -> PhaseDiagram:
    """Label every (r_series, v_in) cell from the analytic period.

    The triple point starts from a 2x2 block holding all three labels and is
    refined by bisection in r on whether an oscillating band exists, with
    the drive placed on the un-firing boundary found by bisection in v.
    """
    nr, nv = grid
    if nr < 8 or nv < 8:
        raise ValueError("grid must be at least 8x8")
    if min(r_range) <= 0 or min(v_range) <= 0:
        raise ValueError("ranges must be positive")
    if log_r:
        r_axis = np.geomspace(*r_range, nr)
    else:
        r_axis = np.linspace(*r_range, nr)
    v_axis = np.linspace(*v_range, nv)

    circuits = [NeuronCircuit(device, r, c_par, r_sample) for r in r_axis]
    labels = np.empty((nr, nv), dtype=np.int8)
    for i, c in enumerate(circuits):
        for j, v in enumerate(v_axis):
            labels[i, j] = LABEL_CODES[classify_analytic(c, v)]

    pd = PhaseDiagram(r_axis, v_axis, labels, None, device.level, log_r, _count_regions(labels))
    cell = _triple_cell(labels)
    if cell is not None:
        pd.triple_point = _refine_triple(device, r_axis, v_axis, cell, c_par, r_sample, log_r)
    if crosscheck:
        pd.crosscheck = crosscheck_cells(pd, c_par, r_sample, crosscheck, rng_seed, device)
    return pd


def _refine_triple(device, r_axis, v_axis, cell, c_par, r_sample, log_r):
    i, j = cell
    lo_i, hi_i = max(i - 1, 0), min(i + 2, r_axis.size - 1)
    to_x = np.log if log_r else (lambda x: x)
    from_x = np.exp if log_r else (lambda x: x)
    x_lo, x_hi = to_x(r_axis[lo_i]), to_x(r_axis[hi_i])
    v_lo, v_hi = v_axis[0], v_axis[-1]
    v_tol = 1e-9 * (v_hi - v_lo)

    def onset(r):
        c = NeuronCircuit(device, r, c_par, r_sample)
        return c, _bisect(lambda v: classify_analytic(c, v) != Response.UN_FIRING, 0.0, 2 * v_hi, v_tol)

    def has_band(x):
        c, v1 = onset(float(from_x(x)))
        return classify_analytic(c, v1) == Response.OSCILLATING

    if has_band(x_lo) or not has_band(x_hi):
        return None
    x_star = _bisect(has_band, x_lo, x_hi, 1e-6 * abs(to_x(r_axis[-1]) - to_x(r_axis[0])))
    r_star = float(from_x(x_star))
    _, v_star = onset(r_star)
    if not (v_lo <= v_star <= v_hi):
        return None
    return r_star, float(v_star)


def settle_duration(circuit: NeuronCircuit, v_in: float, periods: int = 20) -> float:
    """Trace length that covers the first switch plus ``periods`` cycles."""
    a = abs(v_in)
    tau_i = circuit.tau(INS)
    a_i = a * circuit.divider(INS)
    first = 5 * tau_i
    if a_i > circuit.v_up:
        first = tau_i * math.log(a_i / (a_i - circuit.v_up)) + 5 * circuit.tau(MET)
    T = closed_form_period(circuit, v_in)
    body = periods * T if isinstance(T, float) else 10 * tau_i
    # settle window is 10% of the total; keep the startup inside it
    return max(body / 0.9, 12 * first)


def crosscheck_cells(pd: PhaseDiagram, c_par, r_sample, n, rng_seed, device) -> List[dict]:
    rng = np.random.default_rng(rng_seed)
    out = []
    for _ in range(n):
        i = int(rng.integers(pd.r_axis.size))
        j = int(rng.integers(pd.v_axis.size))
        r, v = float(pd.r_axis[i]), float(pd.v_axis[j])
        c = NeuronCircuit(device, r, c_par, r_sample)
        dur = settle_duration(c, v)
        T = closed_form_period(c, v)
        dt = (T if isinstance(T, float) else min(c.tau(INS), c.tau(MET))) / 200
        dt = min(dt, dur / 2000)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            tr = simulate(c, Constant(v, dur), dt)
        sim = classify_response(tr)
        out.append({
            "r_series": r, "v_in": v,
            "analytic": CODE_LABELS[int(pd.labels[i, j])].value,
            "simulated": sim.value,
            "agree": LABEL_CODES[sim] == int(pd.labels[i, j]),
        })
    return out


# -- frequency and power -----------------------------------------------------

@dataclass
class CurveSeries:
    x: np.ndarray
    y: np.ndarray
    level: int
    v_in: np.ndarray
    flags: List[str]
    crosscheck: List[dict] = field(default_factory=list)

    def __post_init__(self):
        if not (self.x.size == self.y.size == self.v_in.size == len(self.flags)):
            raise ValueError("curve arrays must have equal length")

    @property
    def valid(self) -> np.ndarray:
        return np.array([f == "ok" for f in self.flags], dtype=bool)


def rising_band(circuit: NeuronCircuit) -> Tuple[float, float, float]:
    """(onset, peak, latch): frequency rises on [onset, peak] and falls after.

    Above the peak the slow metallic discharge dominates and the rate drops to
    zero at the latch voltage.
    """
    onset, latch = band_edges(circuit)
    if latch <= onset:
        raise NoOscillatingBand(f"level {circuit.device.level} never oscillates at r_series={circuit.r_series}")
    span = latch - onset
    res = optimize.minimize_scalar(
        lambda v: closed_form_period(circuit, v),
        bounds=(onset + 1e-6 * span, latch - 1e-6 * span),
        method="bounded",
        options={"xatol": 1e-9 * span},
    )
    return onset, float(res.x), latch


def vf_curve(
    device: DeviceParams,
    circuit: NeuronCircuit,
    v_points: Sequence[float],
    crosscheck: int = 3,
    rng_seed: int = 0,
) -> CurveSeries:
    """Frequency vs drive from the closed-form period, spot-checked by simulation."""
    circuit = circuit.with_device(device)
    v = np.asarray(v_points, dtype=float)
    freq = np.full(v.size, np.nan)
    flags = []
    for k, vk in enumerate(v):
        T = closed_form_period(circuit, vk)
        if isinstance(T, NotOscillating):
            flags.append(T.value)
        else:
            freq[k] = 1.0 / T
            flags.append("ok")
    curve = CurveSeries(v, freq, device.level, v, flags)
    curve.crosscheck = _crosscheck_frequency(circuit, curve, crosscheck, rng_seed)
    return curve


def _crosscheck_frequency(circuit, curve, n, rng_seed):
    ok = np.flatnonzero(curve.valid)
    if n <= 0 or ok.size == 0:
        return []
    rng = np.random.default_rng(rng_seed)
    pick = rng.choice(ok, size=min(n, ok.size), replace=False)
    out = []
    for k in sorted(pick):
        v = float(curve.v_in[k])
        T = closed_form_period(circuit, v)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            tr = simulate(circuit, Constant(v, settle_duration(circuit, v)), T / 1000)
        f_sim = 1.0 / measured_period(tr)
        out.append({"v_in": v, "analytic": 1.0 / T, "simulated": f_sim,
                    "rel_err": abs(f_sim * T - 1.0)})
    return out


def average_power(circuit: NeuronCircuit, v_in: float) -> float:
    """Time-averaged source power v_in * i_source over one cycle.

    Each state segment relaxes exponentially toward a with time constant tau,
    so the source charge over a segment of length t from V0 to V1 is
    ((v_in - a) t - tau (V0 - V1)) / r_series. Stuck circuits dissipate the
    DC value of their final state.
    """
    a = abs(v_in)
    seg = segment_times(circuit, a)
    rs = circuit.r_series
    if seg is NotOscillating.STUCK_INSULATING:
        return a * a / (rs + circuit.r_branch(INS))
    if seg is NotOscillating.STUCK_METALLIC:
        return a * a / (rs + circuit.r_branch(MET))
    t_i, t_m = seg
    a_i = a * circuit.divider(INS)
    a_m = a * circuit.divider(MET)
    v_up, v_dn = circuit.v_up, circuit.v_down
    q_i = ((a - a_i) * t_i - circuit.tau(INS) * (v_dn - v_up)) / rs
    q_m = ((a - a_m) * t_m - circuit.tau(MET) * (v_up - v_dn)) / rs
    return a * (q_i + q_m) / (t_i + t_m)


def power_from_trace(trace, v_in: float) -> float:
    """Trapezoid average of v_in * i_source over whole cycles of a trace."""
    ups = [t for t, s in trace.switch_events if s == MET and t >= 0.1 * trace.duration]
    if len(ups) < 2:
        raise ValueError("need at least one full steady cycle")
    t0, t1 = ups[0], ups[-1]
    t = trace.t
    m = (t >= t0) & (t <= t1)
    i_src = (v_in - trace.v_node[m]) / trace.circuit.r_series
    return float(v_in * integrate.trapezoid(i_src, t[m]) / (t[m][-1] - t[m][0]))


def power_curve(
    device: DeviceParams,
    circuit: NeuronCircuit,
    v_points: Sequence[float],
    crosscheck: int = 1,
    rng_seed: int = 0,
) -> CurveSeries:
    """Average total power against oscillation frequency.

    Points past the frequency peak are flagged so frequency stays increasing.
    """
    circuit = circuit.with_device(device)
    v = np.asarray(v_points, dtype=float)
    freq = np.zeros(v.size)
    power = np.array([average_power(circuit, vk) for vk in v])
    flags = []
    peak = None
    for k, vk in enumerate(v):
        T = closed_form_period(circuit, vk)
        if isinstance(T, NotOscillating):
            flags.append(T.value)
            continue
        if peak is None:
            peak = rising_band(circuit)[1]
        freq[k] = 1.0 / T
        flags.append("ok" if abs(vk) <= peak else "past-peak")
    curve = CurveSeries(freq, power, device.level, v, flags)
    ok = np.flatnonzero(curve.valid)
    if crosscheck and ok.size:
        rng = np.random.default_rng(rng_seed)
        for k in sorted(rng.choice(ok, size=min(crosscheck, ok.size), replace=False)):
            vk = float(v[k])
            T = 1.0 / freq[k]
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                tr = simulate(circuit, Constant(vk, settle_duration(circuit, vk)), T / 2000)
            p_sim = power_from_trace(tr, vk)
            curve.crosscheck.append({"v_in": vk, "analytic": float(power[k]), "simulated": p_sim,
                                     "rel_err": abs(p_sim / power[k] - 1.0)})
    return curve


def drive_for_frequency(circuit: NeuronCircuit, f: float) -> float:
    """Drive on the rising branch that oscillates at ``f`` hertz."""
    onset, peak, _ = rising_band(circuit)
    if not 0 < f < 1.0 / closed_form_period(circuit, peak):
        raise ValueError(f"{f:.4g} Hz outside the rising band of level {circuit.device.level}")
    span = peak - onset
    lo = onset + 1e-12 * span
    return float(optimize.brentq(lambda v: 1.0 / closed_form_period(circuit, v) - f, lo, peak, xtol=1e-12 * span))


def power_at_frequency(circuit: NeuronCircuit, f: float) -> float:
    return average_power(circuit, drive_for_frequency(circuit, f))
