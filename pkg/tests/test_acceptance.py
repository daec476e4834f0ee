"""Acceptance checks, one printed PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v`` or directly as a script.
MNIST criteria need the IDX files (``$VO2SNN_DATA_DIR``).
"""
import json
import sys
import time
import warnings

import numpy as np
import pytest
from scipy import ndimage

from vo2snn import snn
from vo2snn.characterization import (
    iv_sweep,
    phase_diagram,
    power_at_frequency,
    rising_band,
    settle_duration,
    threshold_stats,
    vf_curve,
)
from vo2snn.cli import dispatch
from vo2snn.device import device_params
from vo2snn.mnist_io import encode_rate, load_split
from vo2snn.oscillator import (
    Constant,
    Response,
    StepSizeWarning,
    classify_response,
    closed_form_period,
    default_circuit,
    measured_period,
    preset,
    simulate,
)

# printed at the end of the session by the terminal-summary hook in conftest
ACCEPTANCE_LINES = []


def report(n, ok, detail):
    line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


# -- device and circuit ------------------------------------------------------


def test_c01_oscillator_oracle():
    worst = 0.0
    for level in (1, 2, 3, 4):
        c = default_circuit(level)
        onset, _, latch = rising_band(c)
        for frac in (0.25, 0.5, 0.75):
            v = onset + frac * (latch - onset)
            T = closed_form_period(c, v)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", StepSizeWarning)
                tr = simulate(c, Constant(v, settle_duration(c, v)), T / 1000)
            worst = max(worst, abs(measured_period(tr) / T - 1))
    report(1, worst < 0.01, f"max period error {worst:.2e} over 12 drives (tol 1e-2)")


def test_c02_threshold_endpoints():
    curves = [iv_sweep(device_params(k), steps=1000) for k in range(1, 6)]
    v = [c.v_th_device for c in curves]
    e1, e5 = abs(v[0] - 6.5), abs(v[4] - 1.75)
    tol1, tol5 = min(0.05, curves[0].step), min(0.05, curves[4].step)
    mono = all(a > b for a, b in zip(v, v[1:]))
    report(2, e1 <= tol1 and e5 <= tol5 and mono,
           f"v_th level1 {v[0]:.4f} V, level5 {v[4]:.4f} V, monotone={mono}")


def test_c03_threshold_spread():
    s = threshold_stats(device_params(1).stochastic(0.01), 1000, rng_seed=0)
    r = s.relative_spread
    report(3, 0.005 <= r <= 0.015, f"std/mean {100 * r:.3f}% (band 0.5-1.5%)")


def _triple_clusters(labels):
    nr, nv = labels.shape
    blocks = np.zeros((nr - 1, nv - 1), dtype=bool)
    for i in range(nr - 1):
        for j in range(nv - 1):
            blocks[i, j] = np.unique(labels[i:i + 2, j:j + 2]).size == 3
    return ndimage.label(blocks, structure=np.ones((3, 3)))[1]


def test_c04_tri_state():
    pd1 = phase_diagram(device_params(1), grid=(64, 64))
    clusters = _triple_clusters(pd1.labels)
    pts = [phase_diagram(device_params(k), r_range=(100.0, 50e3)).triple_point for k in range(1, 5)]
    found = all(p is not None for p in pts)
    mono = found and all(a[0] > b[0] and a[1] > b[1] for a, b in zip(pts, pts[1:]))
    shown = ", ".join(f"({p[0]:.0f} ohm, {p[1]:.3f} V)" for p in pts if p)
    report(4, pd1.n_regions == 3 and clusters == 1 and pd1.has_triple_point and mono,
           f"level1 regions {pd1.n_regions}, triple points {clusters}; levels 1-4: {shown}")


def test_c05_level5_pulse():
    c = default_circuit(5)
    drive = preset("pulse")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", StepSizeWarning)
        tr = simulate(c, drive, 2e-9)
    resp = classify_response(tr)
    report(5, resp is not Response.OSCILLATING, f"level 5 under the 12.5 V pulse: {resp.value}")


def test_c06_vf_and_power():
    inc = []
    for level in (1, 2, 3, 4):
        c = default_circuit(level)
        onset, peak, _ = rising_band(c)
        curve = vf_curve(device_params(level), c, np.linspace(onset, peak, 42)[1:-1], crosscheck=0)
        inc.append(bool(np.all(np.diff(curve.y) > 0)))
    c1, c4 = default_circuit(1), default_circuit(4)
    ratios = [power_at_frequency(c4, f) / power_at_frequency(c1, f) for f in (100e3, 150e3)]
    report(6, all(inc) and all(r < 1 for r in ratios),
           f"V-F increasing per level {inc}; P4/P1 at 100/150 kHz {ratios[0]:.3f}/{ratios[1]:.3f}")


def test_c07_two_by_two(transfer):
    t0 = time.perf_counter()
    res = snn.simulate_2x2(transfer=transfer)
    v11, v12 = res.rates[0] / transfer.r_max
    v21, v22 = res.rates[1] / transfer.r_max
    eq = abs(v11 - v12) / max(v11, v12)
    ok = v21 > max(v11, v12) and min(v11, v12) > v22 and eq <= 0.02
    report(7, ok, f"v21 {v21:.4f} > v11 {v11:.4f} = v12 {v12:.4f} (diff {100 * eq:.2f}%) > v22 {v22:.4f}; "
                  f"{time.perf_counter() - t0:.1f} s")


def test_c08_gradients(transfer):
    rng = np.random.default_rng(0)
    net = snn.init_network(transfer, (784, 128, 10), seed=0)
    x = rng.uniform(0, 1, (10, 784))
    tgt = snn.targets(rng.integers(0, 10, 10), 10, snn.TrainConfig())
    _, gw, gb = snn.loss_and_grads(net, x, tgt)
    eps = 1e-6
    knots = transfer.x_knots

    def pieces():
        pre, _ = snn._forward(net, x)
        return [np.searchsorted(knots, z) for z in pre[1:]]

    base = pieces()
    params = [(net.weights[0], gw[0]), (net.weights[1], gw[1]), (net.biases[0], gb[0]), (net.biases[1], gb[1])]
    num, den, used, skipped = 0.0, 0.0, 0, 0
    for p, g in params:
        flat = rng.choice(p.size, size=min(60, p.size), replace=False)
        for k in flat:
            idx = np.unravel_index(k, p.shape)
            keep = p[idx]
            p[idx] = keep + eps
            lp, pp = snn.loss_and_grads(net, x, tgt)[0], pieces()
            p[idx] = keep - eps
            lm, pm = snn.loss_and_grads(net, x, tgt)[0], pieces()
            p[idx] = keep
            if not all(np.array_equal(a, b) and np.array_equal(a, c) for a, b, c in zip(base, pp, pm)):
                skipped += 1
                continue
            fd = (lp - lm) / (2 * eps)
            num += (g[idx] - fd) ** 2
            den += max(g[idx] ** 2, fd ** 2)
            used += 1
    err = np.sqrt(num / den)
    report(8, err <= 1e-4 and used >= 150,
           f"relative error {err:.2e} over {used} parameters ({skipped} straddling a kink skipped)")


# -- MNIST ---------------------------------------------------------------------


@pytest.fixture(scope="module")
def full_run(mnist_dir):
    tr = load_split("train", mnist_dir)
    te = load_split("test", mnist_dir)
    tf = snn.build_transfer()
    t0 = time.perf_counter()
    net, hist = snn.train(snn.init_network(tf, seed=0), tr, snn.TrainConfig(), te)
    return net, hist, te, time.perf_counter() - t0


@pytest.mark.slow
def test_c09_mnist(full_run, mnist_dir, transfer):
    net, hist, te, secs = full_run
    tr = load_split("train", mnist_dir, limit=10_000)
    t0 = time.perf_counter()
    _, desk = snn.train(snn.init_network(transfer, seed=0), tr, snn.TrainConfig(), te)
    dsecs = time.perf_counter() - t0
    full_acc, desk_acc = hist.test_accuracy[-1], desk.test_accuracy[-1]
    ok = full_acc >= 0.87 and desk_acc >= 0.82 and secs <= 1800 and dsecs <= 300
    report(9, ok, f"full {100 * full_acc:.2f}% in {secs:.0f} s (>= 87%); "
                  f"desk {100 * desk_acc:.2f}% in {dsecs:.0f} s (>= 82%)")


@pytest.mark.slow
def test_c10_digit8_and_agreement(full_run):
    net, _, te, _ = full_run
    k8 = int(np.flatnonzero(te.labels == 8)[0])
    res = snn.simulate_network_timedomain(net, encode_rate(te.images[k8], net.transfer).drive, window=50e-6)
    pick = np.sort(np.random.default_rng(0).choice(len(te), 100, replace=False))
    drives = np.array([encode_rate(te.images[i], net.transfer).drive for i in pick])
    t0 = time.perf_counter()
    td = np.array([r.label for r in snn.simulate_network_batch(net, drives, window=50e-6)])
    rd = snn.predict(net, te.images[pick])
    agree = int(np.sum(td == rd))
    report(10, res.label == 8 and agree >= 95,
           f"test digit {k8} (label 8) -> output {res.label}; time/rate agreement {agree}/100 "
           f"({time.perf_counter() - t0:.0f} s)")


@pytest.mark.slow
def test_c11_untrained(mnist_test, transfer):
    accs = [snn.evaluate(snn.init_network(transfer, seed=s), mnist_test).accuracy for s in range(10)]
    spread = " ".join(f"{100 * a:.1f}" for a in accs)
    report(11, abs(accs[0] - 0.10) <= 0.03,
           f"seed 0 accuracy {100 * accs[0]:.2f}% (10 +/- 3%); seeds 0-9: {spread}")


# -- determinism ---------------------------------------------------------------


def _artifacts(outdir, argv):
    code = dispatch([*argv, "--outdir", str(outdir), "--tag", "acc"])
    assert code == 0
    return {p.name: p.read_bytes() for p in sorted(outdir.iterdir())}


@pytest.mark.slow
def test_c12_determinism(tmp_path, mnist_dir, capsys):
    runs = {
        "oscillate": ["oscillate", "--preset", "constant", "--amplitude", "10"],
        "net2x2": ["net2x2"],
        "train": ["train", "--data-dir", str(mnist_dir), "--train-limit", "10000"],
    }
    same = {}
    for name, argv in runs.items():
        a = _artifacts(tmp_path / f"{name}-a", argv)
        b = _artifacts(tmp_path / f"{name}-a", argv)
        same[name] = a == b and len(a) >= 3
        capsys.readouterr()
    report(12, all(same.values()), "byte-identical reruns: " + ", ".join(f"{k}={v}" for k, v in same.items()))


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
