"""Acceptance suite: one PASS/FAIL line per criterion at the agreed tolerance.

Every check runs the real pipeline at full size. A criterion that the
implementation does not meet is reported as FAIL and the test fails; nothing
here is loosened to make a number fit. The lines are collected into an
"acceptance criteria" section at the end of the pytest run.
"""
import itertools
import time
from math import log, sqrt
from pathlib import Path

import numpy as np
import pytest

from photonic_qnn.effdim import EDConfig, effective_dimension, normalized_ed
from photonic_qnn.harness import DEFAULT_SHOT_COUNTS, ExperimentConfig, run_experiment
from photonic_qnn.models import expected_probability
from photonic_qnn.photonics import (
    NoiseParams,
    batch_permanent,
    beam_splitter,
    build_postselected_cnot,
    compile_circuit_to_photonics,
    compile_interferometer,
    fock_evolve,
    net_shot_rate,
    permanent,
    postselected_distributions,
    sample_shots,
)
from photonic_qnn.statevector import Gate, apply_gate, qnn2_circuit, qnn6_circuit, run_circuit
from photonic_qnn.training import gradient, mean_loss

pytestmark = pytest.mark.slow

README = Path(__file__).resolve().parents[1] / "README.md"


def finals(series):
    """Per-trial converged (loss, accuracy) arrays for one series."""
    pairs = np.array([tr.converged() for tr in series.traces])
    return pairs[:, 0], pairs[:, 1]


def test_criterion_1_xor_separation(tmp_path, criterion):
    t0 = time.perf_counter()
    report = run_experiment(ExperimentConfig("xor_compare", trials=10, out=str(tmp_path)))
    elapsed = time.perf_counter() - t0
    ql, qa = finals(report.series["QNN2"])
    al, aa = finals(report.series["ANN2"])
    q_good = int(np.sum((ql <= 0.1) & (qa == 1.0)))
    a_good = bool(np.all(np.abs(al - log(2)) <= 0.05) and np.all(aa <= 0.6))
    ok = q_good >= 8 and a_good and elapsed < 120
    criterion(1, ok, f"QNN2 solved {q_good}/10 seeds (mean loss {ql.mean():.3f}); "
                     f"ANN2 loss {al.min():.3f}..{al.max():.3f}, accuracy {aa.min():.3f}..{aa.max():.3f} "
                     f"[need 0.69+-0.05, <=0.6 on all]; {elapsed:.0f}s")
    assert ok


def test_criterion_2_effective_dimension_ranking(criterion):
    t0 = time.perf_counter()
    ned = {k: [] for k in ("QNN2", "ANN2", "QNN6", "ANN6")}
    for seed in range(5):
        cfg = EDConfig(seed=seed)
        for kind in ned:
            ned[kind].append(normalized_ed(effective_dimension(kind, cfg), int(kind[-1])))
    elapsed = time.perf_counter() - t0
    m = {k: float(np.mean(v)) for k, v in ned.items()}
    ranked = sum(q > a for q, a in zip(ned["QNN2"], ned["ANN2"]))
    near = abs(m["QNN2"] - 0.95) <= 0.10 and abs(m["ANN2"] - 0.68) <= 0.10
    deep = m["QNN6"] >= m["ANN6"] and m["QNN6"] - m["ANN6"] <= 0.05
    ok = ranked == 5 and near and deep and elapsed < 600
    criterion(2, ok, f"QNN2 > ANN2 on {ranked}/5 seeds; QNN2 {m['QNN2']:.3f} (0.95+-0.10), "
                     f"ANN2 {m['ANN2']:.3f} (0.68+-0.10); QNN6 {m['QNN6']:.3f} vs ANN6 {m['ANN6']:.3f}; {elapsed:.0f}s")
    assert ok


def test_criterion_3_iris_model_ordering(tmp_path, criterion):
    t0 = time.perf_counter()
    cfg = ExperimentConfig("iris_batch_compare", models=("QNN2", "QNN6"), batch_sizes=(1,), trials=20,
                           out=str(tmp_path))
    report = run_experiment(cfg)
    elapsed = time.perf_counter() - t0
    l2 = finals(report.series["QNN2_batch1"])[0].mean()
    l6 = finals(report.series["QNN6_batch1"])[0].mean()
    ok = l2 < l6 and abs(l2 - 0.02) <= 0.04 and abs(l6 - 0.06) <= 0.04 and elapsed < 300
    criterion(3, ok, f"mean converged loss QNN2 {l2:.3f} (0.02+-0.04) vs QNN6 {l6:.3f} (0.06+-0.04), "
                     f"ordering {'holds' if l2 < l6 else 'violated'}; {elapsed:.0f}s")
    assert ok


def test_criterion_4_shot_sweep(tmp_path, criterion):
    t0 = time.perf_counter()
    cfg = ExperimentConfig("shot_sweep", trials=10, shot_counts=DEFAULT_SHOT_COUNTS, out=str(tmp_path))
    report = run_experiment(cfg)
    elapsed = time.perf_counter() - t0
    rows, problems = [], []
    for s in DEFAULT_SHOT_COUNTS:
        loss, acc = finals(report.series[f"QNN6_shots{int(s)}"])
        lm, am, sd = loss.mean(), acc.mean(), loss.std(ddof=1)
        rows.append(f"{int(s)}:{lm:.3f}/{am:.2f}/{sd:.3f}")
        if s == 10 and abs(lm - log(2)) > 0.15:
            problems.append(f"10 shots loss {lm:.3f} not within 0.15 of ln2")
        # accuracies are means of k/100 fractions; compare with a round-off guard
        if s >= 300 and (lm > 0.3 + 1e-9 or am < 0.9 - 1e-9):
            problems.append(f"{int(s)} shots loss {lm:.3f} acc {am:.3f}")
        if s >= 100 and sd > 0.15:
            problems.append(f"{int(s)} shots std {sd:.3f}")
    ok = not problems and elapsed < 600
    criterion(4, ok, f"shots:loss/acc/std {' '.join(rows)}; "
                     f"{'; '.join(problems) if problems else 'all bands met'}; {elapsed:.0f}s")
    assert ok


def test_criterion_5_online_vs_minibatch(tmp_path, criterion):
    t0 = time.perf_counter()
    cfg = ExperimentConfig("iris_batch_compare", models=("QNN6",), batch_sizes=(1, 4), trials=100, out=str(tmp_path))
    report = run_experiment(cfg)
    elapsed = time.perf_counter() - t0
    l1, a1 = (v.mean() for v in finals(report.series["QNN6_batch1"]))
    l4, a4 = (v.mean() for v in finals(report.series["QNN6_batch4"]))
    ok = l1 <= l4 - 0.2 + 1e-9 and a1 - a4 >= 0.08 - 1e-9 and elapsed < 1200
    criterion(5, ok, f"batch1 loss {l1:.3f} acc {a1:.3f} vs batch4 loss {l4:.3f} acc {a4:.3f}; "
                     f"loss gain {l4 - l1:+.3f} (need >=0.2), accuracy gain {a1 - a4:+.3f} (need >=0.08); {elapsed:.0f}s")
    assert ok


def test_criterion_6_throughput(criterion):
    current = net_shot_rate(80e6, 0.022, 1 / 9)
    projected = net_shot_rate(320e6, 0.27, 1 / 9)
    ok = (abs(current - 195_555.5556) < 0.01 and abs(current - 196e3) / 196e3 <= 0.01
          and abs(projected - 9.6e6) < 1e-3)
    criterion(6, ok, f"current {current:.1f} Hz, projected {projected:.1f} Hz")
    assert ok


def test_criterion_7_photonic_cnot(criterion):
    t0 = time.perf_counter()
    pc = build_postselected_cnot()
    u = pc.unitary()
    table = {"00": "00", "01": "01", "10": "11", "11": "10"}
    worst = 0.0
    for bits, target in table.items():
        out = fock_evolve(u, pc.logical_pattern(bits))
        for b in table.values():
            want = 1 / 3 if b == target else 0.0
            worst = max(worst, abs(abs(out.get(pc.logical_pattern(b), 0.0)) - want))
    n = 10**5
    batch = sample_shots(pc, NoiseParams.ideal(), n, rng_seed=2024)
    z = (batch.accepted - n / 9) / sqrt(n / 9 * 8 / 9)
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-12 and abs(z) <= 3 and elapsed < 60
    criterion(7, ok, f"max |amplitude - 1/3 or 0| = {worst:.1e} on 4 inputs; "
                     f"sampled success {batch.accepted}/{n} (z = {z:+.2f}); {elapsed:.1f}s")
    assert ok


def test_criterion_8_cross_simulator(criterion):
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    worst = {}
    for name, circuit, d in (("QNN2", qnn2_circuit(), 2), ("QNN6", qnn6_circuit(), 6)):
        x = rng.uniform(0, 1, (50, 2))
        w = rng.uniform(0, 2 * np.pi, (50, d))
        quantum, _ = postselected_distributions(compile_circuit_to_photonics(circuit, x, w))
        photonic = quantum / quantum.sum(axis=-1, keepdims=True)
        gate = np.abs(run_circuit(circuit, x, w)) ** 2
        worst[name] = float(np.abs(photonic - gate).max())
    elapsed = time.perf_counter() - t0
    ok = max(worst.values()) <= 1e-8 and elapsed < 120
    criterion(8, ok, f"max distribution gap over 50 bindings: QNN2 {worst['QNN2']:.1e}, "
                     f"QNN6 {worst['QNN6']:.1e}; {elapsed:.1f}s")
    assert ok


def _brute_permanent(a):
    k = len(a)
    return sum(np.prod([a[i, p[i]] for i in range(k)]) for p in itertools.permutations(range(k)))


def test_criterion_9_numerical_properties(tmp_path, criterion):
    t0 = time.perf_counter()
    rng = np.random.default_rng(9)
    checks = {}

    perm_err = 0.0
    for i in range(100):
        k = 1 + i % 5
        a = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
        ref = _brute_permanent(a)
        perm_err = max(perm_err, abs(permanent(a) - ref), abs(batch_permanent(a) - ref))
    checks["permanent"] = (perm_err <= 1e-9, f"{perm_err:.1e}")

    grad_err = 0.0
    for kind, d in (("QNN2", 2), ("QNN6", 6)):
        x, y = rng.uniform(0, 1, (8, 2)), rng.integers(0, 2, 8)
        for _ in range(10):
            w = rng.uniform(0, 2 * np.pi, d)
            fd = np.zeros(d)
            for j in range(d):
                e = np.zeros(d)
                e[j] = 1e-5
                fd[j] = (mean_loss(expected_probability(kind, w + e, x), y)
                         - mean_loss(expected_probability(kind, w - e, x), y)) / 2e-5
            grad_err = max(grad_err, float(np.abs(gradient(kind, w, x, y) - fd).max()))
    checks["shift-vs-fd"] = (grad_err <= 1e-6, f"{grad_err:.1e}")

    u = compile_interferometer([beam_splitter(0, 1)], 2)
    coincidence = abs(fock_evolve(u, (1, 1)).get((1, 1), 0.0))
    checks["HOM"] = (coincidence == 0.0, f"{coincidence:.1e}")

    norm_err = 0.0
    for _ in range(200):
        v = rng.normal(size=4) + 1j * rng.normal(size=4)
        v /= np.linalg.norm(v)
        for g in (Gate(rng.choice(["rx", "ry", "rz"]), int(rng.integers(2)), slot="w0"), Gate("cnot", 1, control=0)):
            v = apply_gate(v, g, rng.uniform(-10, 10)) if g.kind != "cnot" else apply_gate(v, g)
        norm_err = max(norm_err, abs(np.linalg.norm(v) - 1))
    checks["norm"] = (norm_err <= 1e-10, f"{norm_err:.1e}")

    def csv_bytes(tag):
        cfg = ExperimentConfig("shot_sweep", trials=2, shot_counts=(30,), out=str(tmp_path / tag))
        return [f.read_bytes() for f in run_experiment(cfg).files if f.suffix == ".csv"]

    same = csv_bytes("a") == csv_bytes("b")
    checks["csv-repro"] = (same, "identical" if same else "differs")

    elapsed = time.perf_counter() - t0
    ok = all(v for v, _ in checks.values()) and elapsed < 120
    criterion(9, ok, ", ".join(f"{k} {d}" for k, (_, d) in checks.items()) + f"; {elapsed:.1f}s")
    assert ok


def test_criterion_10_documented_scope(tmp_path, criterion):
    # Hardware trajectories and the superconducting rate are not numeric targets; the
    # check is that the scope statement exists and the simulated substitute runs.
    text = README.read_text() if README.exists() else ""
    documented = "Not reproduced" in text and "superconducting" in text
    report = run_experiment(ExperimentConfig("platform_compare", trials=1, out=str(tmp_path)))
    simulated = report.series["QNN2_gate_noise"].stats is not None
    ok = documented and simulated
    criterion(10, ok, f"scope statement in README: {'yes' if documented else 'missing'}; "
                      f"platform_compare substitute ran: {'yes' if simulated else 'no'}")
    assert ok
