"""Exit criteria. Each test records a one-line PASS/FAIL verdict that is
echoed in the pytest terminal summary (or printed when run as a script)."""
import random
import time

import numpy as np
import pytest

from stochstream.channel import DETERMINISTIC, ChannelModel, LinkBudget, capacities, sample_gains
from stochstream.control import ControllerSpec, select_quality
from stochstream.engine import SimConfig, run, step_log_csv
from stochstream.trace import builtin_table1, entry, validate

from conftest import ACCEPTANCE_LINES
from test_trace import RAW_TABLE1

BUDGET = LinkBudget(bandwidth_hz=1e6, tx_power_dbm=5.0, noise_mw=1.0)
SEEDS = range(1, 11)
QP22_MEAN = sum(p for _, qp, p, _ in RAW_TABLE1 if qp == 22) / 10
QP37_MEAN = sum(p for _, qp, p, _ in RAW_TABLE1 if qp == 37) / 10


def rayleigh(seed):
    return ChannelModel("rayleigh", mean_gain=1.0, seed=seed)


def cfg(controller, k, channel, horizon=3000):
    return SimConfig(controller, k=k, horizon=horizon, budget=BUDGET, channel=channel,
                     table=builtin_table1())


GOLDEN = cfg(ControllerSpec.fixed(37), 10, ChannelModel(DETERMINISTIC, fixed_gain=1.0))


def record(number, name, ok, detail, elapsed=None, limit=None):
    if limit is not None:
        ok = ok and elapsed < limit
        detail += f"; {elapsed:.2f}s (limit {limit}s)"
    ACCEPTANCE_LINES[f"{number} {name}"] = f"[{'PASS' if ok else 'FAIL'}] {number}. {name}: {detail}"
    assert ok, detail


def test_1_table_fidelity():
    t0 = time.perf_counter()
    table = builtin_table1()
    mismatches = [
        (s, qp) for s, qp, p, b in RAW_TABLE1
        if (entry(table, s, qp).psnr_db, entry(table, s, qp).bitrate_kbps) != (p, b)
    ]
    violations = validate(table)
    ok = len(table.entries) == 40 and not mismatches and not violations
    record(1, "Table I fidelity", ok,
           f"{40 - len(mismatches)}/40 pairs exact, {len(violations)} violations",
           time.perf_counter() - t0, 1.0)


def test_2_golden_deterministic_qp37():
    t0 = time.perf_counter()
    r = run(GOLDEN)
    q = np.array([s.queue_bits_after for s in r.steps])
    zero_frac = float((q == 0).mean())
    ok = zero_frac >= 0.8 and q.max() < 1e6
    record(2, "golden deterministic QP37 k=10", ok,
           f"Q=0 at {zero_frac:.1%} of steps, max Q {q.max():.4g} bits",
           time.perf_counter() - t0, 1.0)


def test_3_qp22_diverges():
    t0 = time.perf_counter()
    results = [run(cfg(ControllerSpec.fixed(22), 10, rayleigh(s))) for s in SEEDS]
    finals = [r.final_queue_bits for r in results]
    slopes = [r.tail_slope_bits_per_unit for r in results]
    ok = all(f > 1.5e9 for f in finals) and all(s > 5e5 for s in slopes)
    record(3, "QP22 divergence (10 seeds)", ok,
           f"min final Q {min(finals):.4g}, min tail slope {min(slopes):.4g}",
           time.perf_counter() - t0, 5.0)


def test_4_k_sensitivity():
    k1 = [run(cfg(ControllerSpec.fixed(37), 1, rayleigh(s))) for s in SEEDS]
    k10 = [run(cfg(ControllerSpec.fixed(37), 10, rayleigh(s))) for s in SEEDS]
    golden = run(GOLDEN)
    q = np.array([s.queue_bits_after for s in golden.steps])
    slopes = [r.tail_slope_bits_per_unit for r in k1]
    ok = (all(s > 5e5 for s in slopes)
          and (q == 0).mean() >= 0.8 and q.max() < 1e6
          and all(r.verdict() == "stable" for r in k10))
    record(4, "K sensitivity QP37", ok,
           f"k=1 min tail slope {min(slopes):.4g}; k=10 stable "
           f"(max rayleigh tail slope {max(r.tail_slope_bits_per_unit for r in k10):.3g})")


def test_5_stochastic_stability():
    t0 = time.perf_counter()
    results = [run(cfg(ControllerSpec.stochastic(1e-16), 10, rayleigh(s))) for s in SEEDS]
    elapsed = time.perf_counter() - t0
    verdicts = [r.verdict() for r in results]
    psnrs = [r.mean_psnr_db for r in results]
    bounds_ok = abs(QP37_MEAN - 33.95) <= 0.1 and abs(QP22_MEAN - 41.62) <= 0.1
    ok = (bounds_ok and all(v == "stable" for v in verdicts)
          and all(QP37_MEAN < p < QP22_MEAN for p in psnrs))
    record(5, "stochastic stability k=10 v=1e-16 (10 seeds)", ok,
           f"{verdicts.count('stable')}/10 stable, max |tail slope| "
           f"{max(abs(r.tail_slope_bits_per_unit) for r in results):.3g}, mean PSNR "
           f"{min(psnrs):.3f}..{max(psnrs):.3f} in ({QP37_MEAN:.3f}, {QP22_MEAN:.3f})",
           elapsed, 5.0)


def test_6_v_ordering():
    wins = 0
    for s in SEEDS:
        lo = run(cfg(ControllerSpec.stochastic(1e-16), 1, rayleigh(s))).tail_mean_queue_bits
        hi = run(cfg(ControllerSpec.stochastic(5e-16), 1, rayleigh(s))).tail_mean_queue_bits
        wins += lo > hi
    record(6, "V ordering k=1", wins >= 9, f"tailQ(v=1e-16) > tailQ(v=5e-16) in {wins}/10 seeds")


def test_7_controller_oracle():
    t0 = time.perf_counter()
    table = builtin_table1()
    raw = {(s, qp): (p, b) for s, qp, p, b in RAW_TABLE1}
    qps = (22, 27, 32, 37)
    rng = random.Random(7)
    mismatches = 0
    for _ in range(1000):
        stream, q, v = rng.randint(1, 10), 10 ** rng.uniform(0, 13), 10 ** rng.uniform(-18, -14)
        scores = [raw[(stream, qp)][0] - v * (raw[(stream, qp)][1] * 1000.0) * q for qp in qps]
        expected = qps[scores.index(max(scores))]
        mismatches += select_quality(table, stream, q, v).quality.qp != expected
    grid = np.geomspace(1e6, 1e13, 50)
    non_monotone = 0
    for stream in range(1, 11):
        for v in (1e-17, 1e-16, 5e-16, 1e-15):
            chosen = [select_quality(table, stream, float(q), v).quality.qp for q in grid]
            non_monotone += chosen != sorted(chosen)
    record(7, "controller oracle equivalence", mismatches == 0 and non_monotone == 0,
           f"{1000 - mismatches}/1000 match brute force, {40 - non_monotone}/40 grids monotone",
           time.perf_counter() - t0, 1.0)


def test_8_channel_statistics():
    mean_cap = float(capacities(BUDGET, sample_gains(rayleigh(1), 0, 10**5)).mean())
    record(8, "Rayleigh mean capacity", 1.65e6 <= mean_cap <= 1.78e6,
           f"{mean_cap:.5g} bits/unit in [1.65e6, 1.78e6]")


def test_9_determinism():
    configs = [GOLDEN]
    configs += [cfg(ControllerSpec.fixed(22), 10, rayleigh(s)) for s in (1, 5)]
    configs += [cfg(ControllerSpec.fixed(37), 1, rayleigh(2))]
    configs += [cfg(ControllerSpec.stochastic(1e-16), 10, rayleigh(s)) for s in (3, 10)]
    configs += [cfg(ControllerSpec.stochastic(v), 1, rayleigh(4)) for v in (1e-16, 5e-16)]
    same = sum(step_log_csv(run(c)).encode() == step_log_csv(run(c)).encode() for c in configs)
    record(9, "determinism", same == len(configs), f"{same}/{len(configs)} step logs byte-identical")


if __name__ == "__main__":
    import sys
    failed = 0
    for name, fn in list(globals().items()):
        if name.startswith("test_") and callable(fn):
            try:
                fn()
            except AssertionError:
                failed += 1
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: int(k.split()[0])):
        print(ACCEPTANCE_LINES[key])
    sys.exit(1 if failed else 0)
