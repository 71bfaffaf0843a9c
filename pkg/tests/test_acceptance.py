"""Acceptance criteria 1-10, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v``; the lines are collected in
RESULTS and printed in the terminal summary (or directly when this file is
executed as a script).
"""

import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from bohl_spectra.exponents import (accumulation_interval_check, bohl_exponents_direction,
                                    bohl_exponents_fullspace)
from bohl_spectra.propagation import (WindowConfig, extreme_window_growth,
                                      propagate_direction)
from bohl_spectra.spectra import (SpectrumConfig, ed_spectrum, hausdorff, spectrum)
from bohl_spectra.systems import SystemSpec, builtin_specs, load_system, random_qdq_sequence
from bohl_spectra.triangularize import diagonal_matrix_sequence, diagonal_of, qr_normal_form

import oracles

LN2 = math.log(2.0)
RESULTS = {}


def record(k, ok, detail):
    RESULTS[k] = f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(RESULTS[k])
    assert ok, RESULTS[k]


def all_three(seq, cfg):
    return {k: spectrum(seq, k, cfg) for k in ("bohl", "bd", "ed")}


def dist_to_points(res, points):
    return max(max(abs(iv.lo - p), abs(iv.hi - p)) for iv, p in zip(res.intervals, points)) \
        if len(res.intervals) == len(points) else math.inf


@pytest.fixture(scope="module")
def check_all(tmp_path_factory, warm_jit):
    """One run of `check --suite all`, shared by criteria 7 and 8."""
    out = tmp_path_factory.mktemp("check") / "report.json"
    t = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "bohl_spectra", "check", "--suite", "all",
                           "--horizon", "100000", "--seed", "42", "--output", str(out)],
                          capture_output=True, text=True)
    elapsed = time.perf_counter() - t
    report = json.loads(out.read_text(encoding="utf-8")) if out.exists() else None
    return proc.returncode, elapsed, report, proc.stderr


def test_criterion_01_constant_scalar(warm_jit):
    seq = load_system(SystemSpec("constant", 1, {"matrix": [[2.0]]}))
    t = time.perf_counter()
    res = all_three(seq, SpectrumConfig.default(20_000))
    elapsed = time.perf_counter() - t
    err = max(dist_to_points(r, [LN2]) for r in res.values())
    record(1, err <= 1e-3 and elapsed < 1.0,
           f"max distance to ln2 {err:.2e} (tol 1e-3), runtime {elapsed:.3f}s (< 1s, JIT warm)")


def test_criterion_02_periodic_scalar(warm_jit):
    seq = load_system(SystemSpec("periodic", 1, {"matrices": [[[1.0]], [[4.0]]]}))
    cfg = SpectrumConfig.default(20_000)
    assert cfg.window.n_last >= 1000
    res = all_three(seq, cfg)
    err = max(dist_to_points(r, [LN2]) for r in res.values())
    monotone = True
    for est in (bohl_exponents_direction(propagate_direction(seq, [1.0], 20_000), cfg.window),
                bohl_exponents_fullspace(seq, cfg.window)):
        sups = [s for _, s, _ in est.per_threshold]
        infs = [i for _, _, i in est.per_threshold]
        monotone &= all(b <= a for a, b in zip(sups, sups[1:]))
        monotone &= all(b >= a for a, b in zip(infs, infs[1:]))
    record(2, err <= 5e-3 and monotone,
           f"max distance to ln2 {err:.2e} (tol 5e-3), N_last {cfg.window.n_last}, "
           f"traces monotone {monotone}")


def test_criterion_03_diagonal(warm_jit):
    seq = load_system(SystemSpec("diagonal", 2, {"entries": [2.0, 0.5]}))
    cfg = SpectrumConfig.default(100_000)
    res = ed_spectrum(seq, cfg)
    err = dist_to_points(res, [-LN2, LN2])
    full = bohl_exponents_fullspace(seq, cfg.window)
    end = max(abs(res.lo - full.lower), abs(res.hi - full.upper))
    ok = err <= 1e-2 and res.filtration_dims == [0, 1, 2] and end <= 1e-2
    record(3, ok, f"distance to +-ln2 {err:.2e}, filtration {res.filtration_dims}, "
                  f"endpoint vs fullspace {end:.2e}")


def test_criterion_04_dyadic(warm_jit):
    n = 2**18
    seq = load_system(SystemSpec("dyadic_switching_scalar", 1, {}))
    t = time.perf_counter()
    cfg = SpectrumConfig.default(n)
    res = ed_spectrum(seq, cfg)
    acc = accumulation_interval_check(propagate_direction(seq, [1.0], n), cfg.window,
                                      probes=[-1.0, -0.5, 0.0, 0.5, 1.0])
    elapsed = time.perf_counter() - t
    (iv,) = res.intervals if len(res.intervals) == 1 else (None,)
    inside = iv is not None and iv.lo <= -0.9 and iv.hi >= 0.9 and iv.lo >= -1.05 and iv.hi <= 1.05
    gaps = [abs(p["lambda"] - p["probe"]) for p in acc.probes]
    ok = inside and max(gaps) <= 0.05 and elapsed < 30
    record(4, ok, f"interval {res.intervals[0].to_list() if iv else res.intervals}, "
                  f"worst probe gap {max(gaps):.2e} (tol 0.05), runtime {elapsed:.2f}s")


def test_criterion_05_upper_triangular(warm_jit):
    seq = load_system(SystemSpec("upper_triangular", 2, {"matrices": [[[2.0, 1.0], [0.0, 0.5]]]}))
    cfg = SpectrumConfig.default(100_000)
    a = ed_spectrum(seq, cfg)
    diag = diagonal_matrix_sequence(diagonal_of(seq, cfg.n_max), cfg.n_max)
    b = ed_spectrum(diag, cfg)
    h = hausdorff(a.intervals, b.intervals)
    record(5, h <= 2e-2 and a.filtration_dims == [0, 1, 2],
           f"Hausdorff(ED(A), ED(A_diag)) {h:.2e} (tol 2e-2), filtration {a.filtration_dims}")


def test_criterion_06_qr_residual(warm_jit):
    worst_res, worst_orth, ok = 0.0, 0.0, True
    n = 100_000
    for name, spec in builtin_specs(n):
        seq = load_system(spec)
        tri = qr_normal_form(seq, n)
        A = seq.prefix(n)
        T = tri.frames(0, n + 1)
        # independent recomputation of both quantities in the spectral norm
        res = np.linalg.norm(T[1:] @ tri.b - A @ T[:-1], ord=2, axis=(1, 2)).max()
        orth = np.linalg.norm(np.swapaxes(T, 1, 2) @ T - np.eye(seq.dim), ord=2, axis=(1, 2)).max()
        ok &= res <= 1e-9 * (1 + seq.norm_bound) and orth <= 1e-10
        worst_res = max(worst_res, res / (1 + seq.norm_bound))
        worst_orth = max(worst_orth, orth)
    record(6, ok, f"max residual/(1+norm_bound) {worst_res:.2e} (tol 1e-9), "
                  f"max orthogonality {worst_orth:.2e} (tol 1e-10)")


def test_criterion_07_invariance(check_all):
    _, _, report, _ = check_all
    rows = [c for c in report["checks"] if c["name"] in
            ("invariance.ed", "invariance.bd", "invariance.bohl")]
    pairs = {c["system"].split("@")[0] + "|" + c["system"].split("|")[1] for c in rows}
    ok = len(pairs) == 5 and len(rows) == 5 * 3 * 2
    worst = -math.inf
    for c in rows:
        m = c["measured"]
        h = int(c["system"].split("@")[1].split("|")[0])
        n_last = WindowConfig.default(h).n_last
        tol = 2e-2 + 2 * math.log(4.0) / n_last
        ok &= m["condition"] <= 4.0 + 1e-9 and m["hausdorff"] <= tol
        worst = max(worst, m["hausdorff"] / tol)
    record(7, ok, f"{len(pairs)} pairs x 3 spectra x 2 horizons, "
                  f"worst Hausdorff/tolerance ratio {worst:.3f}")


def test_criterion_08_inclusion_chain(check_all):
    code, elapsed, report, err = check_all
    inc = [c for c in report["checks"] if c["name"] in ("relations.bohl_in_bd", "relations.bd_in_ed")]
    systems = {c["system"] for c in inc}
    worst = max(c["measured"]["excess"] for c in inc)
    ok = code == 0 and report["ok"] and len(systems) == 14 and worst <= 2e-2 and elapsed < 300
    record(8, ok, f"exit {code}, {report['summary']}, {len(systems)} system-horizons, "
                  f"worst excess {worst:.2e} (tol 2e-2), check --suite all {elapsed:.0f}s (< 300s)")


def test_criterion_09_brute_force_windows(warm_jit):
    worst = 0.0
    count = 0
    rng = np.random.default_rng(909)
    for seed in range(5):
        seq = random_qdq_sequence(3, 1000 + seed, 0.3, 3.0)
        A = seq.block(0, 2000)
        for _ in range(40):
            m = int(rng.integers(0, 1980))
            n = m + int(rng.integers(1, 13))
            hi, lo = extreme_window_growth(seq, n, m)
            sv = oracles.log_singular_values(A, n, m)
            worst = max(worst, abs(hi - sv[0]), abs(lo - sv[-1]))
            count += 1
    record(9, count == 200 and worst <= 1e-8,
           f"{count} windows, worst log singular value error {worst:.2e} (tol 1e-8)")


def test_criterion_10_determinism(warm_jit):
    cmds = [["spectrum", "--kind", "bd", "--gen", "random_qdq", "--dim", "3", "--seed", "7",
             "--horizon", "10000"],
            ["exponents", "--gen", "dyadic", "--direction", "1", "--horizon", "20000"],
            ["check", "--suite", "relations", "--horizon", "10000", "--seed", "42"]]
    same = True
    for cmd in cmds:
        outs = [subprocess.run([sys.executable, "-m", "bohl_spectra", *cmd, "--threads", str(t)],
                               capture_output=True, check=False).stdout for t in (1, 1, 2)]
        same &= outs[0] == outs[1] == outs[2] and len(outs[0]) > 0
    record(10, same, f"{len(cmds)} commands x 3 runs (threads 1, 1, 2) byte-identical: {same}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
