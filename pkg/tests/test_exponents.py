import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bohl_spectra.exponents import (accumulation_interval_check, bohl_exponents_direction,
                                    bohl_exponents_fullspace, bohl_exponents_subspace,
                                    estimate_from_logn, growth_constant)
from bohl_spectra.propagation import WindowConfig, propagate_direction
from bohl_spectra.systems import (SystemSpec, builtin_specs, load_system, random_qdq_sequence,
                                  rotation_matrix, shift)

import oracles

LN2 = math.log(2.0)


def direction(seq, x0, n_max, n_last=None, rep="all_m"):
    cfg = WindowConfig.default(n_max, n_last, rep)
    return bohl_exponents_direction(propagate_direction(seq, x0, n_max), cfg)


def test_constant_exact(const2):
    for n_max in (100, 5000):
        e = direction(const2, [1.0], n_max)
        assert abs(e.lower - LN2) < 1e-12 and abs(e.upper - LN2) < 1e-12


def test_periodic_against_closed_form(periodic14):
    e = direction(periodic14, [1.0], 20_000, 1000)
    assert LN2 - 5e-3 <= e.lower <= LN2 <= e.upper <= LN2 + 5e-3
    # closed form: the extreme windows of length N+1 or N+2 deviate by ln2/(n-m)
    assert e.upper == pytest.approx(LN2 + LN2 / 1001, abs=1e-12)
    assert e.lower == pytest.approx(LN2 - LN2 / 1001, abs=1e-12)


def test_periodic_matches_double_loop_on_short_horizon(periodic14):
    e = direction(periodic14, [1.0], 300, 40)
    sup, inf = oracles.periodic_window_extremes([1.0, 4.0], 300, 40)
    assert e.upper == pytest.approx(sup, abs=1e-12)
    assert e.lower == pytest.approx(inf, abs=1e-12)


def test_dyadic_block_oracle(dyadic):
    e = direction(dyadic, [1.0], 2**18, 2**12)
    assert 0.9 <= e.upper <= 1.0 + 1e-6
    assert -1.0 - 1e-6 <= e.lower <= -0.9


def test_per_threshold_traces_are_monotone(periodic14, dyadic):
    for seq, n in ((periodic14, 20_000), (dyadic, 2**16)):
        e = direction(seq, [1.0], n)
        sups = [s for _, s, _ in e.per_threshold]
        infs = [i for _, _, i in e.per_threshold]
        assert all(b <= a for a, b in zip(sups, sups[1:]))
        assert all(b >= a for a, b in zip(infs, infs[1:]))


def test_fullspace_diag_and_rotation(diag_half):
    cfg = WindowConfig.default(20_000, 1000)
    e = bohl_exponents_fullspace(diag_half, cfg)
    assert abs(e.upper - LN2) < 1e-3 and abs(e.lower + LN2) < 1e-3
    rot = load_system(SystemSpec("constant", 2, {"matrix": (1.5 * rotation_matrix(1.0)).tolist()}))
    e = bohl_exponents_fullspace(rot, cfg)
    assert abs(e.upper - math.log(1.5)) < 1e-6 and abs(e.lower - math.log(1.5)) < 1e-6


def test_fullspace_random_qdq_bounds_and_short_window_oracle():
    seq = random_qdq_sequence(3, 7)
    cfg = WindowConfig(400, (3, 6))
    e = bohl_exponents_fullspace(seq, cfg)
    assert e.lower >= -LN2 - 1e-6 and e.upper <= LN2 + 1e-6
    # exhaustive brute force over every window with n - m > 6
    A = seq.block(0, 400)
    hi, lo = -np.inf, np.inf
    for m in range(0, 400):
        for n in range(m + 7, min(400, m + 40) + 1):
            sv = oracles.log_singular_values(A, n, m) / (n - m)
            hi, lo = max(hi, sv[0]), min(lo, sv[-1])
    # the lattice is an inner bound of the exhaustive extremes
    assert e.upper <= hi + 1e-9 and e.lower >= lo - 1e-9
    assert hi - e.upper < 0.05 and e.lower - lo < 0.05


def test_zero_direction_rejected(const2):
    with pytest.raises(ValueError):
        propagate_direction(const2, [0.0], 100)


def test_accumulation_examples(const2, dyadic, periodic14):
    cfg = WindowConfig.default(5000)
    rep = accumulation_interval_check(propagate_direction(const2, [1.0], 5000), cfg)
    assert rep.ok and rep.upper - rep.lower < 1e-12
    assert all(abs(p["lambda"] - LN2) < 1e-12 for p in rep.probes)

    cfg = WindowConfig.default(20_000, 1000)
    sol = propagate_direction(periodic14, [1.0], 20_000)
    rep = accumulation_interval_check(sol, cfg)
    assert rep.ok
    S = sol.logn
    rng = np.random.default_rng(1)
    m = rng.integers(0, 18_000, 2000)
    n = np.minimum(m + 1001 + rng.integers(0, 5000, 2000), 20_000)
    assert np.max(np.abs((S[n] - S[m]) / (n - m) - LN2)) <= 2e-3

    n = 2**18
    cfg = WindowConfig.default(n, 2**12)
    rep = accumulation_interval_check(propagate_direction(dyadic, [1.0], n), cfg,
                                      probes=[-1, -0.5, 0, 0.5, 1])
    assert rep.ok
    for p in rep.probes:
        assert abs(p["lambda"] - p["probe"]) <= 0.05
        w = p["window"]
        assert w[0] - w[1] > cfg.n_last


@pytest.mark.parametrize("idx", range(7))
def test_representations_agree(idx):
    _, spec = builtin_specs(10_000)[idx]
    seq = load_system(spec)
    cfg = WindowConfig.default(10_000)
    C = max(seq.norm_bound, seq.inv_norm_bound)
    tol = max(1e-2, 2 * math.log(C) / cfg.n_last)
    sol = propagate_direction(seq, np.ones(seq.dim), 10_000)
    a = bohl_exponents_direction(sol, cfg)
    b = bohl_exponents_direction(sol, cfg.with_representation("m_beyond_N"))
    assert abs(a.lower - b.lower) <= tol and abs(a.upper - b.upper) <= tol
    fa = bohl_exponents_fullspace(seq, cfg)
    fb = bohl_exponents_fullspace(seq, cfg.with_representation("m_beyond_N"))
    assert abs(fa.lower - fb.lower) <= tol and abs(fa.upper - fb.upper) <= tol


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**16), gamma=st.floats(-2, 2))
def test_shift_identity(seed, gamma):
    seq = random_qdq_sequence(2, seed)
    a = direction(seq, [1.0, -0.3], 3000)
    b = direction(shift(seq, gamma), [1.0, -0.3], 3000)
    assert abs(b.lower - (a.lower - gamma)) <= 1e-9
    assert abs(b.upper - (a.upper - gamma)) <= 1e-9


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**16), k=st.integers(-30, 30), neg=st.booleans())
def test_scaling_by_powers_of_two_is_bit_identical(seed, k, neg):
    seq = random_qdq_sequence(3, seed)
    x = np.random.default_rng(seed).standard_normal(3)
    alpha = (-1.0 if neg else 1.0) * 2.0**k
    a = direction(seq, x, 2000)
    b = direction(seq, alpha * x, 2000)
    assert (a.lower, a.upper) == (b.lower, b.upper)
    assert a.per_threshold == b.per_threshold


@settings(max_examples=20, deadline=None)
@given(alpha=st.floats(1e-6, 1e6), neg=st.booleans())
def test_scaling_general(alpha, neg):
    seq = random_qdq_sequence(2, 4)
    x = np.array([0.4, 1.1])
    a = direction(seq, x, 2000)
    b = direction(seq, (-alpha if neg else alpha) * x, 2000)
    assert abs(a.lower - b.lower) <= 1e-12 and abs(a.upper - b.upper) <= 1e-12


def test_decaying_pairs_on_diagonal(diag_half):
    """Closed-form diagonal solutions: e2 decays at ln 1/2, e1 grows at ln 2."""
    n = 20_000
    e2 = direction(diag_half, [0.0, 1.0], n)
    assert e2.upper < -0.1
    s = direction(diag_half, [0.0, 3.0], n)  # x0 + x1 with x1 = 2 e2
    assert s.lower <= 1e-2
    for eps in (1e-3, 0.5, 10.0):
        p = direction(diag_half, [1.0, eps], n)
        assert p.lower >= LN2 - 1e-2


def test_subspace_bracket():
    seq = random_qdq_sequence(3, 7)
    cfg = WindowConfig.default(10_000)
    br = bohl_exponents_subspace(seq, np.eye(3)[:, :2], cfg)
    full = bohl_exponents_fullspace(seq, cfg)
    tol = 2e-2
    assert br.frame_lower <= br.sample_lower + tol
    assert br.sample_upper <= br.frame_upper + tol
    assert full.lower - tol <= br.frame_lower and br.frame_upper <= full.upper + tol


def test_subspace_of_diagonal_axis(diag_half):
    cfg = WindowConfig.default(10_000)
    br = bohl_exponents_subspace(diag_half, [[0.0], [1.0]], cfg)
    assert br.frame_lower == pytest.approx(-LN2, abs=1e-9)
    assert br.frame_upper == pytest.approx(-LN2, abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**16), gamma=st.floats(-1, 1), upper=st.booleans())
def test_growth_constant_brute_force(seed, gamma, upper):
    S = np.cumsum(np.random.default_rng(seed).normal(0, 0.7, 120))
    S = np.concatenate([[0.0], S])
    got = growth_constant(S, gamma, upper)
    want = -math.inf
    for m in range(len(S)):
        for n in range(m + 1, len(S)):
            dev = (S[n] - S[m]) - gamma * (n - m)
            want = max(want, dev if upper else -dev)
    assert got == pytest.approx(max(want, 0.0), abs=1e-10)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**16))
def test_estimates_within_observed_bounds(seed):
    seq = random_qdq_sequence(2, seed, 0.7, 1.6)
    e = direction(seq, [1.0, 1.0], 3000)
    assert -math.log(1 / 0.7) - 1e-9 <= e.lower <= e.upper <= math.log(1.6) + 1e-9


def test_estimate_from_logn_records_windows():
    S = np.concatenate([[0.0], np.cumsum(np.where(np.arange(400) % 50 < 25, 1.0, -1.0))])
    e = estimate_from_logn(S, WindowConfig(400, (10, 20)))
    n, m = e.windows["sup"]
    assert (S[n] - S[m]) / (n - m) == pytest.approx(e.upper)
    assert n - m > 20
