"""Command-line entry point: one subcommand per experiment.

Every run writes ``<outdir>/<subcommand>-<tag>.{csv,json,svg}`` and prints
the JSON summary. Usage errors exit with 2, runtime failures with 1 and a
message naming the stage that failed.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
import warnings
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from . import characterization as ch
from . import snn
from .device import DeviceState, device_params
from .errors import VO2Error
from .mnist_io import encode_rate, load_split
from .oscillator import (
    Constant,
    NeuronCircuit,
    StepSizeWarning,
    classify_response,
    closed_form_period,
    extract_spikes,
    measured_period,
    preset,
    simulate,
)
from .svg import Grid, Series, emit_svg

SCHEMA_VERSION = 1
DEFAULT_SEED = 0
LEVELS = (1, 2, 3, 4, 5)
PHASE_COLORS = {0: "#c6dbef", 1: "#fdae6b", 2: "#a1d99b"}
MAX_SVG_POINTS = 4000


class Stage:
    """Tracks which step of a command is running, for error messages."""

    def __init__(self):
        self.name = "setup"

    def __call__(self, name: str) -> "Stage":
        self.name = name
        return self


# -- output helpers ----------------------------------------------------------

def _clean(obj):
    """Make numpy scalars, arrays and non-finite floats JSON-safe."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


class Outputs:
    def __init__(self, outdir: Path, command: str, tag: str):
        self.outdir = outdir
        self.stem = f"{command}-{tag}"
        self.written: Dict[str, str] = {}

    def path(self, suffix: str) -> Path:
        return self.outdir / f"{self.stem}{suffix}"

    def csv(self, header: List[str], rows, suffix: str = ".csv"):
        p = self.path(suffix)
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
        self.written[suffix.lstrip(".")] = str(p)

    def svg(self, text: str):
        p = self.path(".svg")
        p.write_text(text)
        self.written["svg"] = str(p)

    def json(self, summary: dict) -> str:
        p = self.path(".json")
        summary = dict(summary)
        summary["outputs"] = dict(sorted({**self.written, "json": str(p)}.items()))
        text = json.dumps(_clean(summary), indent=2, sort_keys=True) + "\n"
        p.write_text(text)
        return text


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.9e}" if math.isfinite(v) else "nan"
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


def _thin(x: np.ndarray, *ys: np.ndarray):
    step = max(1, x.size // MAX_SVG_POINTS)
    return (x[::step],) + tuple(y[::step] for y in ys)


# -- argument types ----------------------------------------------------------

def positive(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return v


def nonneg(text: str) -> float:
    v = float(text)
    if not (v >= 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"must be >= 0: {text!r}")
    return v


def count(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1: {text!r}")
    return v


def _circuit(args, level: Optional[int] = None) -> NeuronCircuit:
    dev = device_params(level if level is not None else args.level)
    return NeuronCircuit(dev, args.r_series, args.c_par, args.r_sample)


# -- subcommands -------------------------------------------------------------

def cmd_iv(args, out: Outputs, stage: Stage) -> dict:
    stage("sweep")
    dev = device_params(args.level)
    curve = ch.iv_sweep(dev, v_max=args.v_max, steps=args.steps, load_resistor=args.load)
    stage("write")
    out.csv(["v_applied", "current", "branch"],
            zip(curve.v_applied, curve.current, curve.branch.astype(int)))
    up = curve.branch == ch.Branch.UP
    out.svg(emit_svg(
        [Series(curve.v_applied[up], curve.current[up] * 1e3, "up sweep"),
         Series(curve.v_applied[~up], curve.current[~up] * 1e3, "down sweep")],
        title=f"I-V loop, level {args.level}", xlabel="applied voltage (V)", ylabel="current (mA)",
    ))
    return {
        "level": args.level, "steps": args.steps, "load_resistor": args.load,
        "sweep_step": curve.step, "switched": curve.switched,
        "v_th_device": curve.v_th_device, "v_h_device": curve.v_h_device,
        "v_th_source": curve.v_th_source, "v_h_source": curve.v_h_source,
    }


def cmd_cycles(args, out: Outputs, stage: Stage) -> dict:
    stage("cycles")
    dev = device_params(args.level)
    if args.jitter > 0:
        dev = dev.stochastic(args.jitter)
    st = ch.threshold_stats(dev, args.n, rng_seed=args.seed, steps=args.steps, load_resistor=args.load)
    stage("write")
    out.csv(["rank", "v_th_device", "cdf"], zip(range(1, st.values.size + 1), st.values, st.cdf))
    out.svg(emit_svg(Series(st.values, st.cdf, f"{args.n} cycles"),
                     title=f"Threshold CDF, level {args.level}", xlabel="v_th (V)",
                     ylabel="cumulative probability"))
    return {
        "level": args.level, "n_cycles": args.n, "jitter_fraction": args.jitter,
        "mean": st.mean, "std": st.std, "relative_spread": st.relative_spread,
        "min": float(st.values[0]), "max": float(st.values[-1]),
    }


def cmd_oscillate(args, out: Outputs, stage: Stage) -> dict:
    stage("setup")
    circ = _circuit(args)
    period = None
    if args.preset == "constant":
        if args.amplitude is None:
            raise ValueError("--amplitude is required for a constant drive")
        period = closed_form_period(circ, args.amplitude)
        in_band = isinstance(period, float)
        duration = args.duration or ch.settle_duration(circ, args.amplitude, periods=args.periods)
        drive = Constant(args.amplitude, duration)
    else:
        kw = {} if args.amplitude is None else {"amplitude": args.amplitude}
        drive = preset(args.preset, **kw)
        in_band = False
    if args.dt is not None:
        dt = args.dt
    elif in_band:
        dt = period / args.steps_per_period
    else:
        dt = min(circ.tau(DeviceState.INSULATING), circ.tau(DeviceState.METALLIC)) / 1000
    stage("simulate")
    seed = args.seed if circ.device.jitter_sigma > 0 else None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", StepSizeWarning)
        trace = simulate(circ, drive, dt, rng_seed=seed)
    stage("analyse")
    spikes = extract_spikes(trace)
    try:
        response = classify_response(trace).value
    except VO2Error:
        response = "ambiguous"
    T_meas = measured_period(trace)
    stage("write")
    out.csv(["t", "v_node", "v_spike", "state"],
            zip(trace.t, trace.v_node, trace.v_spike, trace.state.astype(int)))
    t, vs = _thin(trace.t * 1e6, trace.v_spike)
    out.svg(emit_svg(Series(t, vs, "v_spike"), title=f"Oscillator output, level {args.level}",
                     xlabel="time (us)", ylabel="sampling voltage (V)"))
    cf = period if isinstance(period, float) else None
    return {
        "level": args.level, "preset": args.preset, "amplitude": args.amplitude,
        "duration": trace.duration, "dt": dt,
        "circuit": {"r_series": circ.r_series, "c_par": circ.c_par, "r_sample": circ.r_sample},
        "response": response, "n_spikes": len(spikes), "spike_rate": spikes.rate,
        "closed_form_period": cf, "measured_period": T_meas,
        "period_rel_err": abs(T_meas / cf - 1) if cf and math.isfinite(T_meas) else None,
        "n_switches": len(trace.switch_events),
    }


def cmd_phase(args, out: Outputs, stage: Stage) -> dict:
    stage("phase map")
    dev = device_params(args.level)
    pd = ch.phase_diagram(dev, r_range=(args.r_min, args.r_max), v_range=(args.v_min, args.v_max),
                          grid=tuple(args.grid), c_par=args.c_par, r_sample=args.r_sample,
                          crosscheck=args.crosscheck, rng_seed=args.seed)
    stage("write")
    rows = ((r, v, ch.CODE_LABELS[int(pd.labels[i, j])].value)
            for i, r in enumerate(pd.r_axis) for j, v in enumerate(pd.v_axis))
    out.csv(["r_series", "v_in", "label"], rows)
    names = {code: resp.value for resp, code in ch.LABEL_CODES.items()}
    out.svg(emit_svg(
        Grid(pd.r_axis, pd.v_axis, pd.labels.T, names, PHASE_COLORS, pd.triple_point),
        title=f"Tri-state map, level {args.level}", xlabel="series resistance (ohm)",
        ylabel="drive (V)", log_x=True,
    ))
    counts = {resp.value: int(np.count_nonzero(pd.labels == code)) for resp, code in ch.LABEL_CODES.items()}
    tp = pd.triple_point
    return {
        "level": args.level, "grid": list(args.grid),
        "r_range": [args.r_min, args.r_max], "v_range": [args.v_min, args.v_max],
        "n_regions": pd.n_regions, "cell_counts": counts,
        "triple_point": {"r_series": tp[0], "v_in": tp[1]} if tp else None,
        "crosscheck": pd.crosscheck,
        "crosscheck_agree": all(c["agree"] for c in pd.crosscheck),
    }


def _band_points(circ: NeuronCircuit, n: int, full: bool):
    onset, peak, latch = ch.rising_band(circ)
    top = latch if full else peak
    span = top - onset
    # stay a hair inside both edges so every point oscillates
    return onset, peak, latch, onset + span * np.linspace(1e-3, 1 - 1e-3, n)


def cmd_vf(args, out: Outputs, stage: Stage) -> dict:
    rows, series, per_level = [], [], []
    for level in args.levels:
        stage(f"level {level}")
        circ = _circuit(args, level)
        try:
            onset, peak, latch, v = _band_points(circ, args.points, args.full_band)
        except ch.NoOscillatingBand:
            per_level.append({"level": level, "oscillates": False})
            continue
        curve = ch.vf_curve(circ.device, circ, v, crosscheck=args.crosscheck, rng_seed=args.seed)
        ok = curve.valid
        f = curve.y
        rising = v <= peak
        rows += [(level, vi, fi, fl) for vi, fi, fl in zip(v, f, curve.flags)]
        series.append(Series(v, f / 1e3, f"level {level}"))
        per_level.append({
            "level": level, "oscillates": True, "onset": onset, "peak": peak, "latch": latch,
            "f_max": 1.0 / closed_form_period(circ, peak),
            "strictly_increasing": bool(np.all(np.diff(f[ok & rising]) > 0)),
            "crosscheck": curve.crosscheck,
        })
    stage("write")
    out.csv(["level", "v_in", "frequency", "flag"], rows)
    if series:
        out.svg(emit_svg(series, title="Frequency vs drive", xlabel="drive (V)", ylabel="frequency (kHz)"))
    return {"levels": list(args.levels), "points": args.points, "full_band": args.full_band,
            "curves": per_level}


def cmd_power(args, out: Outputs, stage: Stage) -> dict:
    rows, series, per_level = [], [], []
    matched = {}
    for level in args.levels:
        stage(f"level {level}")
        circ = _circuit(args, level)
        try:
            onset, peak, latch, v = _band_points(circ, args.points, False)
        except ch.NoOscillatingBand:
            per_level.append({"level": level, "oscillates": False})
            continue
        curve = ch.power_curve(circ.device, circ, v, crosscheck=args.crosscheck, rng_seed=args.seed)
        rows += [(level, vi, fi, pi, fl) for vi, fi, pi, fl in zip(v, curve.x, curve.y, curve.flags)]
        series.append(Series(curve.x / 1e3, curve.y * 1e3, f"level {level}"))
        entry = {"level": level, "oscillates": True, "f_max": 1.0 / closed_form_period(circ, peak),
                 "crosscheck": curve.crosscheck}
        per_level.append(entry)
        for f in args.match:
            try:
                matched.setdefault(str(f), {})[str(level)] = ch.power_at_frequency(circ, f)
            except ValueError:
                matched.setdefault(str(f), {})[str(level)] = None
    stage("write")
    out.csv(["level", "v_in", "frequency", "power", "flag"], rows)
    if series:
        out.svg(emit_svg(series, title="Power vs frequency", xlabel="frequency (kHz)", ylabel="power (mW)"))
    return {"levels": list(args.levels), "points": args.points, "curves": per_level,
            "power_at_frequency": matched}


def _raster_rows(rasters):
    for layer, r in enumerate(rasters):
        for neuron, t in r.rows():
            yield layer, neuron, t


def _raster_svg(rasters, title, layers=None):
    series = []
    offset = 0
    for layer, r in enumerate(rasters):
        if layers is not None and layer not in layers:
            continue
        xs = [t * 1e6 for _, t in r.rows()]
        ys = [offset + n for n, _ in r.rows()]
        series.append(Series(xs, ys, f"layer {layer}", style="marker"))
        offset += len(r)
    if not any(len(s.x) for s in series):
        series = [Series([0.0], [0.0], "no spikes", style="marker", color="#fff")]
    return emit_svg(series, title=title, xlabel="time (us)", ylabel="neuron")


def cmd_net2x2(args, out: Outputs, stage: Stage) -> dict:
    stage("transfer")
    tf = snn.build_transfer(circuit=_circuit(args), n_samples=args.knots)
    stage("simulate")
    w = np.array(args.weights, dtype=float).reshape(2, 2)
    res = snn.simulate_2x2(w, (args.input, args.input), window=args.window, bias=args.bias,
                           transfer=tf, dt=args.dt, rng_seed=args.seed)
    stage("write")
    out.csv(["layer", "neuron", "t"], _raster_rows(res.rasters))
    out.svg(_raster_svg(res.rasters, "2x2 network raster"))
    r = {f"v({l + 1},{n + 1})": float(res.rates[l][n]) for l in range(2) for n in range(2)}
    expect = np.concatenate(snn.forward(snn.Network((2, 2), [w], [np.full(2, args.bias)], tf),
                                        np.array([args.input, args.input]))) * tf.r_max
    v11, v12, v21, v22 = r["v(1,1)"], r["v(1,2)"], r["v(2,1)"], r["v(2,2)"]
    return {
        "level": args.level, "weights": w, "bias": args.bias, "input": args.input,
        "window": args.window, "dt": args.dt, "rates": r,
        "rate_model": dict(zip(["v(1,1)", "v(1,2)", "v(2,1)", "v(2,2)"], expect)),
        "ordering_holds": bool(v21 > max(v11, v12) and min(v11, v12) > v22
                               and abs(v11 - v12) <= 0.02 * max(v11, v12)),
    }


def _net_for(args, stage: Stage):
    if args.network:
        stage("load network")
        return snn.load_network(args.network)
    stage("init network")
    tf = snn.build_transfer(circuit=_circuit(args), n_samples=args.knots)
    return snn.init_network(tf, seed=args.seed)


def cmd_train(args, out: Outputs, stage: Stage) -> dict:
    stage("load MNIST")
    tr = load_split("train", args.data_dir, limit=args.train_limit)
    te = load_split("test", args.data_dir, limit=args.test_limit)
    stage("transfer")
    tf = snn.build_transfer(circuit=_circuit(args), n_samples=args.knots)
    cfg = snn.TrainConfig(epochs=args.epochs, batch_size=args.batch_size, learning_rate=args.lr,
                          momentum=args.momentum, rng_seed=args.seed, target_hi=args.target_hi,
                          target_lo=args.target_lo, leak=args.leak, slope_cap=args.slope_cap)
    stage("train")
    net = snn.init_network(tf, seed=args.seed)
    log = (lambda e, h: print(f"epoch {e}: loss {h.train_loss[-1]:.5f} test {h.test_accuracy[-1]:.4f}",
                              file=sys.stderr)) if args.verbose else None
    net, hist = snn.train(net, tr, cfg, te, log=log)
    stage("write")
    net_path = out.path(".network.json")
    snn.save_network(net, net_path)
    out.written["network"] = str(net_path)
    out.csv(["epoch", "train_loss", "train_accuracy", "test_accuracy"],
            zip(range(1, cfg.epochs + 1), hist.train_loss, hist.train_accuracy, hist.test_accuracy))
    ep = np.arange(1, cfg.epochs + 1)
    out.svg(emit_svg([Series(ep, np.array(hist.test_accuracy) * 100, "test"),
                      Series(ep, np.array(hist.train_accuracy) * 100, "train")],
                     title="Accuracy per epoch", xlabel="epoch", ylabel="accuracy (%)"))
    return {
        "level": tf.circuit.device.level, "n_train": len(tr), "n_test": len(te),
        "config": {"epochs": cfg.epochs, "batch_size": cfg.batch_size, "learning_rate": cfg.learning_rate,
                   "momentum": cfg.momentum, "target_hi": cfg.target_hi, "target_lo": cfg.target_lo,
                   "leak": cfg.leak, "slope_cap": cfg.slope_cap},
        "train_loss": hist.train_loss, "train_accuracy": hist.train_accuracy,
        "test_accuracy": hist.test_accuracy, "final_test_accuracy": hist.test_accuracy[-1],
    }


def cmd_eval(args, out: Outputs, stage: Stage) -> dict:
    net = _net_for(args, stage)
    stage("load MNIST")
    te = load_split("test", args.data_dir, limit=args.limit)
    stage("evaluate")
    ev = snn.evaluate(net, te)
    stage("write")
    out.csv(["true_label"] + [f"pred_{k}" for k in range(ev.confusion.shape[1])],
            ([k] + row.tolist() for k, row in enumerate(ev.confusion)))
    recall = np.diag(ev.confusion) / np.maximum(ev.confusion.sum(axis=1), 1)
    out.svg(emit_svg(Series(np.arange(recall.size), recall * 100, "per-class accuracy", style="bar"),
                     title="Per-class accuracy", xlabel="digit", ylabel="accuracy (%)"))
    return {"network": args.network, "untrained": not args.network, "n_test": ev.total,
            "accuracy": ev.accuracy, "confusion": ev.confusion}


def _pick_digit(te, args) -> int:
    if args.index is not None:
        if not 0 <= args.index < len(te):
            raise ValueError(f"--index {args.index} outside the test set")
        return args.index
    hits = np.flatnonzero(te.labels == args.digit)
    if not hits.size:
        raise ValueError(f"no test digit labelled {args.digit}")
    return int(hits[0])


def _timedomain(args, stage: Stage):
    net = _net_for(args, stage)
    stage("load MNIST")
    te = load_split("test", args.data_dir)
    k = _pick_digit(te, args)
    stage("simulate network")
    enc = encode_rate(te.images[k], net.transfer, args.window)
    res = snn.simulate_network_timedomain(net, enc.drive, window=args.window, dt=args.dt, rng_seed=args.seed)
    rate_label = int(snn.predict(net, te.images[k:k + 1])[0])
    return net, te, k, res, rate_label


def cmd_infer(args, out: Outputs, stage: Stage) -> dict:
    net, te, k, res, rate_label = _timedomain(args, stage)
    stage("write")
    counts = res.rasters[-1].counts(res.t_start)
    out.csv(["neuron", "rate", "count"], zip(range(counts.size), res.output_rates, counts))
    out.svg(emit_svg(Series(np.arange(counts.size), res.output_rates / 1e3, "output rate", style="bar"),
                     title=f"Output rates, test digit {k}", xlabel="output neuron", ylabel="rate (kHz)"))
    return {"network": args.network, "index": k, "true_label": int(te.labels[k]),
            "predicted": res.label, "rate_domain_predicted": rate_label,
            "output_rates": res.output_rates, "window": args.window, "dt": args.dt}


def cmd_raster(args, out: Outputs, stage: Stage) -> dict:
    net, te, k, res, rate_label = _timedomain(args, stage)
    stage("write")
    out.csv(["layer", "neuron", "t"], _raster_rows(res.rasters))
    layers = set(args.layers)
    out.svg(_raster_svg(res.rasters, f"Raster, test digit {k}", layers))
    return {"network": args.network, "index": k, "true_label": int(te.labels[k]),
            "predicted": res.label, "rate_domain_predicted": rate_label,
            "spikes_per_layer": [r.n_spikes for r in res.rasters], "window": args.window, "dt": args.dt}


# -- parser ------------------------------------------------------------------

def _common(p: argparse.ArgumentParser, level_default: int = 1):
    p.add_argument("--outdir", type=Path, default=Path("out"))
    p.add_argument("--tag", default=None, help="filename tag (default: UTC timestamp)")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--level", type=int, choices=LEVELS, default=level_default)
    p.add_argument("--r-series", type=positive, default=3e3)
    p.add_argument("--c-par", type=positive, default=1.8e-9)
    p.add_argument("--r-sample", type=positive, default=50.0)


def _mnist(p):
    p.add_argument("--data-dir", default=None, help="MNIST directory (or $VO2SNN_DATA_DIR)")


def _network_flags(p):
    p.add_argument("--network", default=None, help="trained network file (default: untrained)")
    p.add_argument("--knots", type=count, default=64)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vo2snn", description="VO2 oscillator neuron experiments")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("iv", help="quasi-static I-V loop")
    _common(p)
    p.add_argument("--steps", type=count, default=1000)
    p.add_argument("--v-max", type=positive, default=None)
    p.add_argument("--load", type=positive, default=ch.DEFAULT_IV_LOAD)

    p = sub.add_parser("cycles", help="threshold statistics over repeated cycles")
    _common(p)
    p.add_argument("--n", type=count, default=1000)
    p.add_argument("--jitter", type=nonneg, default=0.01, help="threshold sigma as a fraction of v_th")
    p.add_argument("--steps", type=count, default=1000)
    p.add_argument("--load", type=positive, default=ch.DEFAULT_IV_LOAD)

    p = sub.add_parser("oscillate", help="single-neuron transient")
    _common(p)
    p.add_argument("--preset", choices=["pulse", "pulse-train", "sine", "constant"], default="pulse")
    p.add_argument("--amplitude", type=positive, default=None)
    p.add_argument("--duration", type=positive, default=None)
    p.add_argument("--periods", type=count, default=20)
    p.add_argument("--dt", type=positive, default=None)
    p.add_argument("--steps-per-period", type=count, default=1000)

    p = sub.add_parser("phase", help="tri-state phase diagram")
    _common(p)
    p.add_argument("--grid", type=count, nargs=2, default=[64, 64], metavar=("NR", "NV"))
    p.add_argument("--r-min", type=positive, default=500.0)
    p.add_argument("--r-max", type=positive, default=50e3)
    p.add_argument("--v-min", type=positive, default=1.0)
    p.add_argument("--v-max", type=positive, default=15.0)
    p.add_argument("--crosscheck", type=int, default=3)

    for name, helptext in (("vf", "frequency vs drive"), ("power", "power vs frequency")):
        p = sub.add_parser(name, help=helptext)
        _common(p)
        p.add_argument("--levels", type=int, nargs="+", choices=LEVELS, default=[1, 2, 3, 4])
        p.add_argument("--points", type=count, default=40)
        p.add_argument("--crosscheck", type=int, default=1)
        if name == "vf":
            p.add_argument("--full-band", action="store_true", help="extend past the frequency peak")
        else:
            p.add_argument("--match", type=positive, nargs="*", default=[100e3, 150e3])

    p = sub.add_parser("net2x2", help="2x2 network demo")
    _common(p, level_default=snn.DEFAULT_LEVEL)
    p.add_argument("--weights", type=float, nargs=4, default=[0.3, 0.3, -0.3, -0.3],
                   metavar=("W11", "W12", "W21", "W22"))
    p.add_argument("--bias", type=float, default=snn.DEMO_2X2_BIAS)
    p.add_argument("--input", type=float, default=snn.DEMO_2X2_INPUT)
    p.add_argument("--window", type=positive, default=200e-6)
    p.add_argument("--dt", type=positive, default=2e-9)
    p.add_argument("--knots", type=count, default=64)

    p = sub.add_parser("train", help="train the MNIST network")
    _common(p, level_default=snn.DEFAULT_LEVEL)
    _mnist(p)
    d = snn.TrainConfig()
    p.add_argument("--epochs", type=count, default=d.epochs)
    p.add_argument("--batch-size", type=count, default=d.batch_size)
    p.add_argument("--lr", type=nonneg, default=d.learning_rate)
    p.add_argument("--momentum", type=nonneg, default=d.momentum)
    p.add_argument("--target-hi", type=float, default=d.target_hi)
    p.add_argument("--target-lo", type=float, default=d.target_lo)
    p.add_argument("--leak", type=nonneg, default=d.leak)
    p.add_argument("--slope-cap", type=positive, default=d.slope_cap)
    p.add_argument("--train-limit", type=count, default=None)
    p.add_argument("--test-limit", type=count, default=None)
    p.add_argument("--knots", type=count, default=64)
    p.add_argument("--verbose", action="store_true")

    p = sub.add_parser("eval", help="accuracy and confusion matrix")
    _common(p, level_default=snn.DEFAULT_LEVEL)
    _mnist(p)
    _network_flags(p)
    p.add_argument("--limit", type=count, default=None)

    for name, helptext in (("infer", "time-domain inference on one test digit"),
                           ("raster", "time-domain raster of one test digit")):
        p = sub.add_parser(name, help=helptext)
        _common(p, level_default=snn.DEFAULT_LEVEL)
        _mnist(p)
        _network_flags(p)
        g = p.add_mutually_exclusive_group()
        g.add_argument("--index", type=int, default=None)
        g.add_argument("--digit", type=int, choices=range(10), default=8)
        p.add_argument("--window", type=positive, default=50e-6)
        p.add_argument("--dt", type=positive, default=2e-9)
        if name == "raster":
            p.add_argument("--layers", type=int, nargs="+", default=[1, 2])
    return ap


COMMANDS = {
    "iv": cmd_iv, "cycles": cmd_cycles, "oscillate": cmd_oscillate, "phase": cmd_phase,
    "vf": cmd_vf, "power": cmd_power, "net2x2": cmd_net2x2, "train": cmd_train,
    "eval": cmd_eval, "infer": cmd_infer, "raster": cmd_raster,
}


def load_schema(command: str) -> dict:
    """The JSON schema that ``command``'s summary satisfies."""
    text = resources.files("vo2snn").joinpath("schemas", f"{command}.json").read_text()
    return json.loads(text)


def dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    stage = Stage()
    tag = args.tag or time.strftime("%Y%m%dT%H%M%SZ", time.gmtime())
    try:
        stage("output directory")
        args.outdir.mkdir(parents=True, exist_ok=True)
        out = Outputs(args.outdir, args.command, tag)
        summary = COMMANDS[args.command](args, out, stage)
        stage("write")
        summary = {"command": args.command, "schema_version": SCHEMA_VERSION, "tag": tag,
                   "seed": args.seed, **summary}
        text = out.json(summary)
    except (VO2Error, ValueError, ArithmeticError, OSError, KeyError) as e:
        print(f"vo2snn {args.command}: failed during {stage.name}: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    sys.stdout.write(text)
    return 0


def main(argv=None):
    sys.exit(dispatch(argv))


if __name__ == "__main__":
    main()
