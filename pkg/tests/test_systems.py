import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bohl_spectra.systems import (MatrixSequence, SystemSpec, SystemSpecError,
                                  builtin_specs, constant_transform, diagonal_sequence,
                                  dyadic_switching_sequence, identity_transform,
                                  inverse_transform, load_system, random_qdq_sequence,
                                  random_transform, rotation_matrix, rotation_transform,
                                  save_matrix_file, shift, sine_diagonal_transform,
                                  spectral_norms, transform, validate_lyapunov)

from oracles import dyadic_exponent


def test_constant_scalar_readback(const2):
    assert all(const2.eval(n)[0, 0] == 2.0 for n in (0, 1, 17, 10**6))
    assert const2.norm_bound == 2.0
    assert const2.inv_norm_bound == 0.5


def test_periodic_readback(periodic14):
    assert [periodic14.eval(n)[0, 0] for n in range(5)] == [1.0, 4.0, 1.0, 4.0, 1.0]
    assert periodic14.norm_bound == 4.0


def test_random_qdq_bounds_against_scan():
    seq = load_system(SystemSpec("random_qdq", 3, {"seed": 42, "range": [0.5, 2.0]}, 5000))
    A = seq.block(0, 5000)
    assert spectral_norms(A).max() <= 2.0 + 1e-12
    assert spectral_norms(np.linalg.inv(A)).max() <= 2.0 + 1e-12
    assert seq.norm_bound <= 2.0 and seq.inv_norm_bound <= 2.0
    # the two orthogonal factors leave singular values inside the range
    sv = np.linalg.svd(A, compute_uv=False)
    assert sv.min() >= 0.5 - 1e-12 and sv.max() <= 2.0 + 1e-12


def test_random_qdq_is_deterministic_and_blockwise_consistent():
    a = random_qdq_sequence(3, 9)
    b = random_qdq_sequence(3, 9)
    np.testing.assert_array_equal(a.block(1000, 1100), b.block(1000, 1100))
    np.testing.assert_array_equal(a.block(0, 3000)[1000:1100], b.block(1000, 1100))
    assert not np.array_equal(a.block(0, 10), random_qdq_sequence(3, 10).block(0, 10))


def test_dyadic_formula():
    seq = dyadic_switching_sequence()
    got = np.log(seq.block(0, 1024)[:, 0, 0])
    want = [dyadic_exponent(n) for n in range(1024)]
    np.testing.assert_allclose(got, want, atol=1e-15)


def test_validate_constant_and_diagonal(const2, diag_half):
    rep = validate_lyapunov(const2, 100)
    assert rep.observed_norm == pytest.approx(2.0) and rep.observed_inv_norm == pytest.approx(0.5)
    assert rep.ok
    rep = validate_lyapunov(diag_half, 100)
    assert rep.observed_norm == pytest.approx(2.0) and rep.observed_inv_norm == pytest.approx(2.0)
    assert rep.ok


def test_validate_flags_understated_bound():
    seq = MatrixSequence(1, lambda s, e: np.full((e - s, 1, 1), 2.0), None, 1.9, 0.5)
    rep = validate_lyapunov(seq, 50)
    assert "norm_bound_exceeded" in rep.flags
    assert not rep.ok


def test_validate_flags_wrong_inverse():
    seq = MatrixSequence(1, lambda s, e: np.full((e - s, 1, 1), 2.0),
                         lambda s, e: np.full((e - s, 1, 1), 0.6), 2.0, 0.6)
    assert "inverse_residual" in validate_lyapunov(seq, 10).flags


def test_shift_examples(const2, diag_half):
    s = shift(const2, math.log(2.0))
    np.testing.assert_allclose(s.block(0, 5), 1.0, rtol=1e-15)
    np.testing.assert_array_equal(shift(const2, 0.0).block(0, 5), const2.block(0, 5))
    s = shift(diag_half, 1.0)
    np.testing.assert_allclose(s.eval(3), np.diag([2 / math.e, 0.5 / math.e]), rtol=1e-15)
    assert s.norm_bound == pytest.approx(2 / math.e)


def test_transform_identity_and_permutation(diag_half):
    out = transform(diag_half, identity_transform(2))
    np.testing.assert_array_equal(out.block(0, 20), diag_half.block(0, 20))
    P = constant_transform([[0.0, 1.0], [1.0, 0.0]])
    np.testing.assert_array_equal(transform(diag_half, P).eval(4), np.diag([0.5, 2.0]))


def test_transform_rotation_scale_oracle():
    theta, r = 0.7, 1.5
    seq = load_system(SystemSpec("constant", 2, {"matrix": (r * rotation_matrix(theta)).tolist()}))
    out = transform(seq, rotation_transform(theta)).block(0, 100)
    # independent check: T(n+1)^{-1} A T(n) by explicit rotation matrices
    for n in (0, 1, 50, 99):
        want = rotation_matrix(-(n + 1) * theta) @ (r * rotation_matrix(theta)) @ rotation_matrix(n * theta)
        np.testing.assert_allclose(out[n], want, atol=1e-12)
        np.testing.assert_allclose(out[n], r * np.eye(2), atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**16), gamma=st.floats(-3, 3))
def test_shift_roundtrip(seed, gamma):
    seq = random_qdq_sequence(2, seed)
    back = shift(shift(seq, gamma), -gamma)
    np.testing.assert_allclose(back.block(0, 64), seq.block(0, 64), rtol=1e-12, atol=1e-12)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**16), tseed=st.integers(0, 2**16))
def test_transform_roundtrip(seed, tseed):
    seq = random_qdq_sequence(3, seed)
    t = random_transform(3, tseed, 4.0)
    back = transform(transform(seq, t), inverse_transform(t))
    np.testing.assert_allclose(back.block(0, 64), seq.block(0, 64), atol=1e-9)


@settings(max_examples=10, deadline=None)
@given(idx=st.integers(0, 6), seed=st.integers(0, 2**16))
def test_builtin_bounds_hold_on_random_vectors(idx, seed):
    _, spec = builtin_specs(2000)[idx]
    seq = load_system(spec)
    rng = np.random.default_rng(seed)
    A = seq.block(0, 2000)
    Ai = seq.inv_block(0, 2000)
    x = rng.standard_normal((100, seq.dim))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    for n in rng.integers(0, 2000, size=20):
        assert np.linalg.norm(x @ A[n].T, axis=1).max() <= seq.norm_bound * (1 + 1e-12)
        assert np.linalg.norm(x @ Ai[n].T, axis=1).max() <= seq.inv_norm_bound * (1 + 1e-12)


def test_transforms_have_stated_condition():
    assert sine_diagonal_transform(2, 0.5).condition == pytest.approx(3.0)
    t = random_transform(3, 1, 4.0)
    assert t.condition <= 4.0 + 1e-9
    M = t.block(0, 500)
    assert (spectral_norms(M).max() * spectral_norms(np.linalg.inv(M)).max()) <= 4.0 + 1e-9


def test_spec_errors(tmp_path):
    with pytest.raises(SystemSpecError):
        load_system(SystemSpec("constant", 2, {"matrix": [[1.0, 2.0], [2.0, 4.0]]}))
    with pytest.raises(SystemSpecError):
        load_system(SystemSpec("upper_triangular", 2, {"matrices": [[[1.0, 0.0], [1.0, 1.0]]]}))
    with pytest.raises(SystemSpecError):
        load_system(SystemSpec("nope", 1, {}))
    with pytest.raises(SystemSpecError):
        load_system(SystemSpec("constant", 3, {"matrix": [[1.0]]}))
    with pytest.raises(SystemSpecError):
        diagonal_sequence([1.0, 0.0])
    with pytest.raises(SystemSpecError):
        SystemSpec.from_dict({"dim": 1})


def test_file_roundtrip(tmp_path):
    mats = np.array([[[1.0, 2.0], [0.0, 3.0]], [[2.0, 0.0], [1.0, 1.0]]])
    path = tmp_path / "m.json"
    save_matrix_file(path, mats)
    seq = load_system(SystemSpec("file", 2, {"path": str(path)}, 2))
    np.testing.assert_array_equal(seq.block(0, 2), mats)
    with pytest.raises(IndexError):
        seq.block(0, 3)
    spec = SystemSpec("constant", 1, {"matrix": [[2.0]]}, 7)
    assert SystemSpec.from_dict(json.loads(json.dumps(spec.to_dict()))) == spec
