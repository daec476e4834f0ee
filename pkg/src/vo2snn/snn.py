"""Rate-coded spiking network on the oscillator's drive-to-rate curve.

Training works in a normalized view: drives map [v_lo, v_hi] -> [0, 1] and
rates [0, r_max] -> [0, 1], so the activation is the neuron's own
frequency curve. Synapses are exact signed weighted sums. The same weights
drive a circuit-level simulation where every neuron is an oscillator and
presynaptic spikes reach the next layer through an exponential filter.
"""
from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from .characterization import rising_band, vf_curve
from .device import DeviceParams, DeviceState, device_params
from .errors import DivergedLoss, ShapeMismatch, WindowTooShort
from .mnist_io import Dataset
from .oscillator import NeuronCircuit, closed_form_period

FORMAT_VERSION = 1
DEFAULT_LEVEL = 4
DEFAULT_LAYERS = (784, 128, 10)
TAU_SYN = 2e-6
NETWORK_SETTLE_FRACTION = 0.3
FIRST_KNOT_FRACTION = 0.05


# -- transfer ----------------------------------------------------------------

@dataclass(frozen=True)
class RateTransfer:
    v_knots: np.ndarray
    r_knots: np.ndarray
    v_on: float
    v_latch: float
    v_lo: float
    v_hi: float
    r_max: float
    circuit: NeuronCircuit

    def __post_init__(self):
        if np.any(np.diff(self.v_knots) <= 0):
            raise ValueError("v_knots must be strictly increasing")
        if np.any(np.diff(self.r_knots) < 0) or self.r_knots[0] != 0:
            raise ValueError("r_knots must start at 0 and be non-decreasing")
        span = self.v_hi - self.v_lo
        object.__setattr__(self, "_xk", (self.v_knots - self.v_lo) / span)
        object.__setattr__(self, "_yk", self.r_knots / self.r_max)
        object.__setattr__(self, "_slope", np.diff(self._yk) / np.diff(self._xk))

    @property
    def span(self) -> float:
        return self.v_hi - self.v_lo

    def rate(self, v):
        """Firing rate in hertz at drive ``v`` volts."""
        return np.interp(np.clip(v, self.v_lo, self.v_hi), self.v_knots, self.r_knots)

    def __call__(self, x):
        """Normalized rate for normalized drive ``x``; clamps outside [0, 1]."""
        return np.interp(x, self._xk, self._yk)

    def derivative(self, x, leak: float = 0.0, cap: float = np.inf):
        """Left derivative.

        ``leak`` stands in for the zero slope outside the knot range and
        ``cap`` bounds the slope inside it; the defaults give the exact value.
        """
        x = np.asarray(x)
        idx = np.searchsorted(self._xk, x, side="left")
        ok = (idx >= 1) & (idx < self._xk.size)
        slope = np.minimum(self._slope, cap)[np.clip(idx - 1, 0, self._slope.size - 1)]
        return np.where(ok, slope, leak)

    def to_volts(self, x):
        return self.v_lo + np.clip(x, 0.0, 1.0) * self.span

    @property
    def knot_spacing(self) -> np.ndarray:
        return np.diff(self._xk)

    @property
    def x_knots(self) -> np.ndarray:
        return self._xk


def build_transfer(
    device=None,
    circuit: Optional[NeuronCircuit] = None,
    n_samples: int = 64,
) -> RateTransfer:
    """Sample the rising part of the V-F curve as an activation.

    The period diverges only logarithmically at onset, so the rate jumps to
    a few percent of its peak almost immediately. The first knot above
    onset sits where the rate reaches ``FIRST_KNOT_FRACTION`` of the peak;
    knots are geometric from there to 5% of the band, then uniform.
    """
    if n_samples < 16:
        raise ValueError("n_samples must be >= 16")
    if device is None:
        device = circuit.device if circuit is not None else device_params(DEFAULT_LEVEL)
    if circuit is None:
        circuit = NeuronCircuit(device)
    circuit = circuit.with_device(device)
    _, peak, latch = rising_band(circuit)
    onset = stuck_onset(circuit)

    span = peak - onset
    r_peak = 1.0 / closed_form_period(circuit, peak)
    gap = lambda lu: FIRST_KNOT_FRACTION - 1.0 / (closed_form_period(circuit, onset + 10**lu * span) * r_peak)
    u0 = 10 ** brentq(gap, -14.0, math.log10(0.05))

    n_geo = max(4, n_samples // 4)
    n_lin = n_samples - 1 - n_geo
    u = np.concatenate([np.geomspace(u0, 0.05, n_geo, endpoint=False), np.linspace(0.05, 1.0, n_lin)])
    v = onset + u * span
    curve = vf_curve(device, circuit, v, crosscheck=0)
    r = np.concatenate([[0.0], curve.y])
    if not np.all(np.isfinite(r)):
        raise ValueError("transfer knot outside the oscillating band")
    r = np.maximum.accumulate(r)  # guards round-off at the peak plateau
    return RateTransfer(
        v_knots=np.concatenate([[onset], v]),
        r_knots=r,
        v_on=onset,
        v_latch=latch,
        v_lo=onset,
        v_hi=float(v[-1]),
        r_max=float(r[-1]),
        circuit=circuit,
    )


def stuck_onset(circuit: NeuronCircuit) -> float:
    """Largest drive whose insulating asymptote does not exceed the node threshold.

    At or below it the node never reaches v_up, so the neuron stays silent.
    """
    d_ins = circuit.divider(DeviceState.INSULATING)
    v = circuit.v_up / d_ins
    while v * d_ins > circuit.v_up:
        v = np.nextafter(v, 0.0)
    return float(v)


# -- network -----------------------------------------------------------------

@dataclass
class Network:
    layer_sizes: Tuple[int, ...]
    weights: List[np.ndarray]  # weights[l]: (n_{l+1}, n_l)
    biases: List[np.ndarray]
    transfer: RateTransfer

    def __post_init__(self):
        self.layer_sizes = tuple(int(n) for n in self.layer_sizes)
        if len(self.weights) != len(self.layer_sizes) - 1 or len(self.biases) != len(self.weights):
            raise ShapeMismatch("one weight matrix and bias vector per layer transition")
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (self.layer_sizes[l + 1], self.layer_sizes[l]):
                raise ShapeMismatch(f"weights[{l}] has shape {w.shape}")
            if b.shape != (self.layer_sizes[l + 1],):
                raise ShapeMismatch(f"biases[{l}] has shape {b.shape}")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValueError(f"non-finite parameters in layer {l}")

    def copy(self) -> "Network":
        return Network(self.layer_sizes, [w.copy() for w in self.weights],
                       [b.copy() for b in self.biases], self.transfer)


def init_network(transfer: RateTransfer, layer_sizes=DEFAULT_LAYERS, seed: int = 0) -> Network:
    """Glorot-uniform weights; biases put initial drives in the middle third."""
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for n_in, n_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        lim = math.sqrt(6.0 / (n_in + n_out))
        weights.append(rng.uniform(-lim, lim, size=(n_out, n_in)))
        biases.append(rng.uniform(1 / 3, 2 / 3, size=n_out))
    return Network(tuple(layer_sizes), weights, biases, transfer)


def _as_batch(net: Network, inputs) -> np.ndarray:
    x = np.asarray(inputs, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != net.layer_sizes[0]:
        raise ShapeMismatch(f"input of shape {np.shape(inputs)} for a {net.layer_sizes[0]}-input network")
    return x


def _forward(net: Network, x: np.ndarray):
    g = net.transfer
    pre = [x]
    acts = [g(x)]
    for w, b in zip(net.weights, net.biases):
        z = acts[-1] @ w.T + b
        pre.append(z)
        acts.append(g(z))
    return pre, acts


def forward(net: Network, inputs) -> List[np.ndarray]:
    """Per-layer normalized rates.

    ``inputs`` are normalized input drives (pixels in [0, 1]); layer 0's
    rates are the transfer of those drives. Accepts one vector or a batch.
    """
    single = np.ndim(inputs) == 1
    _, acts = _forward(net, _as_batch(net, inputs))
    return [a[0] for a in acts] if single else acts


# -- training ----------------------------------------------------------------

@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10
    batch_size: int = 64
    learning_rate: float = 0.05
    momentum: float = 0.9
    rng_seed: int = 0
    target_hi: float = 1.0
    target_lo: float = 0.0
    leak: float = 0.2
    slope_cap: float = 10.0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if self.learning_rate < 0 or not (0 <= self.momentum < 1):
            raise ValueError("need learning_rate >= 0 and 0 <= momentum < 1")
        if not (self.target_lo < self.target_hi <= 1):
            raise ValueError("need target_lo < target_hi <= 1")
        if self.leak < 0 or self.slope_cap <= 0:
            raise ValueError("need leak >= 0 and slope_cap > 0")


@dataclass
class History:
    train_loss: List[float] = field(default_factory=list)
    train_accuracy: List[float] = field(default_factory=list)
    test_accuracy: List[float] = field(default_factory=list)


def targets(labels: np.ndarray, n_out: int, cfg: TrainConfig) -> np.ndarray:
    t = np.full((labels.size, n_out), cfg.target_lo)
    t[np.arange(labels.size), labels] = cfg.target_hi
    return t


def mse(out: np.ndarray, tgt: np.ndarray) -> float:
    return float(np.mean((out - tgt) ** 2))


def loss_and_grads(net: Network, x: np.ndarray, tgt: np.ndarray, leak: float = 0.0, cap: float = np.inf):
    """MSE over batch and outputs, with gradients for every weight and bias.

    ``leak`` and ``cap`` shape the transfer slope in the backward pass only
    (see ``RateTransfer.derivative``); the defaults give the exact gradient.
    """
    pre, acts = _forward(net, x)
    g = net.transfer
    delta = 2.0 * (acts[-1] - tgt) / tgt.size * g.derivative(pre[-1], leak, cap)
    grads_w = [None] * len(net.weights)
    grads_b = [None] * len(net.weights)
    for l in range(len(net.weights) - 1, -1, -1):
        grads_w[l] = delta.T @ acts[l]
        grads_b[l] = delta.sum(axis=0)
        if l:
            delta = (delta @ net.weights[l]) * g.derivative(pre[l], leak, cap)
    return mse(acts[-1], tgt), grads_w, grads_b


def train(
    net: Network,
    train_set: Dataset,
    cfg: TrainConfig = TrainConfig(),
    test_set: Optional[Dataset] = None,
    log=None,
):
    """Mini-batch SGD with momentum on the MSE to one-hot rate targets.

    Returns a trained copy of ``net`` and the per-epoch history.
    """
    if len(train_set) == 0:
        raise ValueError("empty training set")
    if train_set.labels.max() >= net.layer_sizes[-1]:
        raise ValueError("label outside the output layer")
    net = net.copy()
    rng = np.random.default_rng(cfg.rng_seed)
    vel_w = [np.zeros_like(w) for w in net.weights]
    vel_b = [np.zeros_like(b) for b in net.biases]
    hist = History()
    n = len(train_set)
    n_out = net.layer_sizes[-1]
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        tot, correct = 0.0, 0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            x = train_set.images[idx].astype(float)
            tgt = targets(train_set.labels[idx], n_out, cfg)
            loss, gw, gb = loss_and_grads(net, x, tgt, cfg.leak, cfg.slope_cap)
            if not math.isfinite(loss):
                raise DivergedLoss(f"loss became {loss} in epoch {epoch + 1}")
            tot += loss * idx.size
            if cfg.learning_rate == 0:
                continue
            for l in range(len(net.weights)):
                vel_w[l] = cfg.momentum * vel_w[l] - cfg.learning_rate * gw[l]
                vel_b[l] = cfg.momentum * vel_b[l] - cfg.learning_rate * gb[l]
                net.weights[l] += vel_w[l]
                net.biases[l] += vel_b[l]
        hist.train_loss.append(tot / n)
        hist.train_accuracy.append(evaluate(net, train_set).accuracy)
        if test_set is not None:
            hist.test_accuracy.append(evaluate(net, test_set).accuracy)
        if log is not None:
            log(epoch + 1, hist)
    return net, hist


@dataclass
class Evaluation:
    accuracy: float
    confusion: np.ndarray  # rows = true label, columns = predicted

    @property
    def total(self) -> int:
        return int(self.confusion.sum())


def predict(net: Network, images: np.ndarray, batch: int = 2000) -> np.ndarray:
    out = []
    for s in range(0, images.shape[0], batch):
        _, acts = _forward(net, _as_batch(net, images[s:s + batch]))
        out.append(np.argmax(acts[-1], axis=1))
    return np.concatenate(out) if out else np.zeros(0, dtype=int)


def confusion_matrix(labels: np.ndarray, predicted: np.ndarray, n_classes: int = 10) -> np.ndarray:
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (labels.astype(int), predicted.astype(int)), 1)
    return cm


def evaluate(net: Network, test_set: Dataset) -> Evaluation:
    if len(test_set) == 0:
        raise ValueError("empty test set")
    pred = predict(net, test_set.images)
    cm = confusion_matrix(test_set.labels, pred, net.layer_sizes[-1])
    return Evaluation(float(np.trace(cm) / cm.sum()), cm)


# -- serialization -----------------------------------------------------------

def _circuit_dict(c: NeuronCircuit) -> dict:
    d = c.device
    return {
        "device": {"level": d.level, "v_th": d.v_th, "v_h": d.v_h, "r_ins": d.r_ins,
                   "r_met": d.r_met, "jitter_sigma": d.jitter_sigma},
        "r_series": c.r_series, "c_par": c.c_par, "r_sample": c.r_sample,
    }


def network_to_dict(net: Network) -> dict:
    t = net.transfer
    return {
        "format": "vo2snn-network",
        "version": FORMAT_VERSION,
        "layer_sizes": list(net.layer_sizes),
        "weights": [w.ravel().tolist() for w in net.weights],
        "biases": [b.tolist() for b in net.biases],
        "transfer": {
            "v_knots": t.v_knots.tolist(), "r_knots": t.r_knots.tolist(),
            "v_on": t.v_on, "v_latch": t.v_latch, "v_lo": t.v_lo, "v_hi": t.v_hi,
            "r_max": t.r_max, "circuit": _circuit_dict(t.circuit),
        },
    }


def network_from_dict(doc: dict) -> Network:
    if doc.get("format") != "vo2snn-network":
        raise ValueError("not a vo2snn network file")
    if doc.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported network file version {doc.get('version')}")
    sizes = tuple(doc["layer_sizes"])
    tr = doc["transfer"]
    cd = tr["circuit"]
    circuit = NeuronCircuit(DeviceParams(**cd["device"]), cd["r_series"], cd["c_par"], cd["r_sample"])
    transfer = RateTransfer(
        np.array(tr["v_knots"]), np.array(tr["r_knots"]), tr["v_on"], tr["v_latch"],
        tr["v_lo"], tr["v_hi"], tr["r_max"], circuit,
    )
    weights = [np.array(w, dtype=float).reshape(sizes[l + 1], sizes[l]) for l, w in enumerate(doc["weights"])]
    biases = [np.array(b, dtype=float) for b in doc["biases"]]
    return Network(sizes, weights, biases, transfer)


def save_network(net: Network, path) -> None:
    with open(path, "w") as fh:
        json.dump(network_to_dict(net), fh)


def load_network(path) -> Network:
    with open(path) as fh:
        return network_from_dict(json.load(fh))


# -- time domain -------------------------------------------------------------

@dataclass(frozen=True)
class RasterPlot:
    """Spike times per neuron of one layer inside ``[0, window]``."""

    spikes: Tuple[np.ndarray, ...]
    window: float
    layer: int = 0

    def __post_init__(self):
        for i, s in enumerate(self.spikes):
            if s.size and (s[0] < 0 or s[-1] > self.window):
                raise ValueError(f"neuron {i}: spike outside the window")
            if np.any(np.diff(s) <= 0):
                raise ValueError(f"neuron {i}: spike times not strictly increasing")

    def __len__(self):
        return len(self.spikes)

    @property
    def n_spikes(self) -> int:
        return int(sum(s.size for s in self.spikes))

    def counts(self, t_start: float = 0.0) -> np.ndarray:
        return np.array([np.count_nonzero(s >= t_start) for s in self.spikes])

    def rates(self, t_start: float = 0.0) -> np.ndarray:
        """Rate from the mean inter-spike interval after ``t_start``.

        Neurons with fewer than two spikes there fall back to count / time,
        which is 0 for silent ones.
        """
        out = np.empty(len(self.spikes))
        span = self.window - t_start
        for i, s in enumerate(self.spikes):
            s = s[s >= t_start]
            out[i] = (s.size - 1) / (s[-1] - s[0]) if s.size >= 2 else s.size / span
        return out

    def rows(self):
        """(neuron, time) pairs ordered by neuron then time."""
        for i, s in enumerate(self.spikes):
            for t in s:
                yield i, float(t)


@dataclass
class TimeDomainResult:
    rasters: List[RasterPlot]
    rates: List[np.ndarray]  # hertz, per layer, from the steady part of the window
    t_start: float

    @property
    def output_rates(self) -> np.ndarray:
        return self.rates[-1]

    @property
    def label(self) -> int:
        return int(np.argmax(self.output_rates))


def _expected_period(transfer: RateTransfer) -> float:
    """Period at the middle of the normalized drive range."""
    return 1.0 / (float(transfer(0.5)) * transfer.r_max)


def _run(
    net: Network,
    drives: np.ndarray,
    window: float,
    dt: float,
    rng_seed: int,
):
    """Advance every neuron of every sample on a shared clock.

    ``drives`` is (batch, n_inputs) in volts. Each step applies the exact
    exponential solution for the current device state and drive; a threshold
    crossing inside the step is timed from the same solution and the rest of
    the step continues in the new state. Spikes are insulating -> metallic
    switches. Presynaptic spikes feed an exponential filter whose output,
    divided by r_max, is the normalized rate estimate that the weights act on.

    Returns, per layer, arrays (sample, neuron, time) of all spikes.
    """
    tf = net.transfer
    c = tf.circuit
    ins, met = DeviceState.INSULATING, DeviceState.METALLIC
    div = np.array([c.divider(ins), c.divider(met)])
    tau = np.array([c.tau(ins), c.tau(met)])
    decay = np.exp(-dt / tau)
    v_up, v_dn = c.v_up, c.v_down
    syn_decay = math.exp(-dt / TAU_SYN)
    kick = 1.0 / (TAU_SYN * tf.r_max)
    x_min = -tf.v_lo / tf.span  # zero volts

    rng = np.random.default_rng(rng_seed)
    batch = drives.shape[0]
    sizes = net.layer_sizes
    # start each neuron at a random point of its charging ramp so that equal
    # drives do not fire in lockstep
    v = [rng.uniform(v_dn, v_up, size=(batch, n)) for n in sizes]
    met_state = [np.zeros((batch, n), dtype=bool) for n in sizes]
    syn = [np.zeros((batch, n)) for n in sizes[1:]]  # filtered input per post layer
    drive = [np.asarray(drives, dtype=float)] + [None] * (len(sizes) - 1)
    events = [[] for _ in sizes]

    n_steps = int(round(window / dt))
    for k in range(n_steps):
        t0 = k * dt
        for l in range(len(sizes)):
            if l:
                x = np.clip(net.biases[l - 1] + syn[l - 1], x_min, 1.0)
                drive[l] = tf.v_lo + x * tf.span
            vin = drive[l]
            s = met_state[l]
            si = s.astype(np.intp)
            a = vin * div[si]
            v_new = a + (v[l] - a) * decay[si]
            feeds = l + 1 < len(sizes)
            if feeds:
                syn[l] *= syn_decay
            hit = np.where(s, v_new <= v_dn, v_new > v_up)
            if hit.any():
                b_idx, n_idx = np.nonzero(hit)
                sh = si[b_idx, n_idx]
                a_h = a[b_idx, n_idx]
                thr = np.where(sh == 1, v_dn, v_up)
                t_c = np.clip(tau[sh] * np.log((a_h - v[l][b_idx, n_idx]) / (a_h - thr)), 0.0, dt)
                ns = 1 - sh
                a_n = vin[b_idx, n_idx] * div[ns]
                v_new[b_idx, n_idx] = a_n + (thr - a_n) * np.exp(-(dt - t_c) / tau[ns])
                s[b_idx, n_idx] = ns.astype(bool)
                up = sh == 0
                if up.any():
                    bu, nu, tu = b_idx[up], n_idx[up], t_c[up]
                    events[l].append(np.column_stack([bu, nu, t0 + tu]))
                    if feeds:
                        # each spike, decayed over the rest of the step
                        contrib = np.zeros((batch, sizes[l]))
                        np.add.at(contrib, (bu, nu), kick * np.exp(-(dt - tu) / TAU_SYN))
                        cols = np.unique(nu)
                        syn[l] += contrib[:, cols] @ net.weights[l][:, cols].T
            if not np.all(np.isfinite(v_new)):
                raise ValueError("non-finite node voltage in network simulation")
            v[l] = v_new
    out = []
    for ev in events:
        out.append(np.concatenate(ev) if ev else np.zeros((0, 3)))
    return out


def _rasters(spikes: np.ndarray, batch: int, sizes, layer: int, window: float):
    """Split one layer's (sample, neuron, time) spikes into rasters per sample."""
    n = sizes[layer]
    res = []
    order = np.lexsort((spikes[:, 2], spikes[:, 1], spikes[:, 0])) if spikes.size else []
    spikes = spikes[order] if len(order) else spikes
    for b in range(batch):
        sb = spikes[spikes[:, 0] == b] if spikes.size else spikes
        nid = sb[:, 1].astype(int)
        bounds = np.searchsorted(nid, np.arange(n + 1))
        res.append(RasterPlot(tuple(sb[bounds[i]:bounds[i + 1], 2].copy() for i in range(n)), window, layer))
    return res


def _check_window(net: Network, window: float, dt: float):
    if dt <= 0 or dt > window:
        raise ValueError("need 0 < dt <= window")
    need = 10 * _expected_period(net.transfer)
    if window < need:
        raise WindowTooShort(f"window {window:.3g}s < {need:.3g}s (10 mid-band periods)")


def simulate_network_batch(
    net: Network,
    input_voltages: np.ndarray,
    window: float = 50e-6,
    dt: float = 2e-9,
    rng_seed: int = 0,
) -> List[TimeDomainResult]:
    """Time-domain run for a batch of inputs, (batch, n_inputs) volts."""
    drives = np.asarray(input_voltages, dtype=float)
    if drives.ndim == 1:
        drives = drives[None, :]
    if drives.ndim != 2 or drives.shape[1] != net.layer_sizes[0]:
        raise ShapeMismatch(f"drive of shape {np.shape(input_voltages)} for a {net.layer_sizes[0]}-input network")
    _check_window(net, window, dt)
    spikes = _run(net, drives, window, dt, rng_seed)
    t_start = NETWORK_SETTLE_FRACTION * window
    per_layer = [_rasters(sp, drives.shape[0], net.layer_sizes, l, window) for l, sp in enumerate(spikes)]
    results = []
    for b in range(drives.shape[0]):
        rasters = [per_layer[l][b] for l in range(len(spikes))]
        results.append(TimeDomainResult(rasters, [r.rates(t_start) for r in rasters], t_start))
    return results


def simulate_network_timedomain(
    net: Network,
    input_voltages,
    window: float = 50e-6,
    dt: float = 2e-9,
    rng_seed: int = 0,
) -> TimeDomainResult:
    """Circuit-level run of the whole network for one input drive vector.

    Every neuron is a full oscillator; hidden and output drives are the bias
    plus the weighted sum of filtered presynaptic spike trains, mapped to
    volts through the transfer normalization and limited to [0, v_hi].
    """
    return simulate_network_batch(net, np.asarray(input_voltages, dtype=float)[None, :], window, dt, rng_seed)[0]


DEMO_2X2_WEIGHTS = ((0.3, 0.3), (-0.3, -0.3))
DEMO_2X2_BIAS = 0.5
DEMO_2X2_INPUT = 0.5


def simulate_2x2(
    weights=DEMO_2X2_WEIGHTS,
    inputs=(DEMO_2X2_INPUT, DEMO_2X2_INPUT),
    window: float = 200e-6,
    bias=DEMO_2X2_BIAS,
    transfer: Optional[RateTransfer] = None,
    dt: float = 2e-9,
    rng_seed: int = 0,
) -> TimeDomainResult:
    """Two input oscillators feeding two outputs through signed weights.

    ``weights[i][j]`` couples input j to output i; ``inputs`` are normalized
    input drives. The window must hold ten spikes of the slowest neuron the
    rate model predicts to be active.
    """
    w = np.asarray(weights, dtype=float)
    if w.shape != (2, 2):
        raise ShapeMismatch(f"2x2 weights expected, got {w.shape}")
    x = np.asarray(inputs, dtype=float)
    if x.shape != (2,):
        raise ShapeMismatch(f"two inputs expected, got {x.shape}")
    tf = transfer if transfer is not None else build_transfer()
    net = Network((2, 2), [w], [np.broadcast_to(np.asarray(bias, dtype=float), (2,)).copy()], tf)
    rates = np.concatenate(forward(net, x)) * tf.r_max
    active = rates[rates > 0]
    if active.size:
        need = 10.0 / active.min() / (1 - NETWORK_SETTLE_FRACTION)
        if window < need:
            raise WindowTooShort(f"window {window:.3g}s < {need:.3g}s for ten spikes of the slowest neuron")
    drives = tf.v_lo + np.clip(x, 0, 1) * tf.span
    spikes = _run(net, drives[None, :], window, dt, rng_seed)
    t_start = NETWORK_SETTLE_FRACTION * window
    rasters = [_rasters(sp, 1, net.layer_sizes, l, window)[0] for l, sp in enumerate(spikes)]
    return TimeDomainResult(rasters, [r.rates(t_start) for r in rasters], t_start)
