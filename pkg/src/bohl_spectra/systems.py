"""Coefficient sequences A(n) of x(n+1) = A(n) x(n).

A `MatrixSequence` evaluates blocks A(start..stop-1) as a (k, d, d) array,
together with the inverses and sup-norm bounds.  Generators are pure
functions of n, so blocks can be requested in any order from any thread.
"""

from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SINGULAR_DET = 1e-12
KINDS = (
    "constant",
    "periodic",
    "diagonal",
    "upper_triangular",
    "dyadic_switching_scalar",
    "random_qdq",
    "file",
)


class SystemSpecError(ValueError):
    """Malformed or singular system description."""


def spectral_norms(M):
    """Spectral norm of every matrix in a (k, d, d) stack."""
    M = np.asarray(M, dtype=float)
    if M.shape[-1] == 1:
        return np.abs(M[..., 0, 0])
    return np.linalg.norm(M, 2, axis=(-2, -1))


class MatrixSequence:
    """Evaluable coefficient sequence with its inverse and norm bounds.

    Args:
        dim: state dimension d.
        block_fn: ``(start, stop) -> (stop-start, d, d)`` array of A(n).
        inv_block_fn: same for A(n)^{-1}; batched inversion when omitted.
        norm_bound, inv_norm_bound: declared sup-norms.  When None they are
            filled in by scanning ``[0, horizon_hint)``.
        name: label used in reports.
        structure: "general", "upper_triangular" or "diagonal".
    """

    def __init__(self, dim, block_fn, inv_block_fn=None, norm_bound=None,
                 inv_norm_bound=None, name="", horizon_hint=None,
                 structure="general"):
        self.dim = int(dim)
        self._block_fn = block_fn
        self._inv_block_fn = inv_block_fn
        self.name = name
        self.horizon_hint = horizon_hint
        self.structure = structure
        self._lock = threading.Lock()
        self._prefix = {}
        self._analysis = {}
        self.bounds_source = "declared"
        if norm_bound is None or inv_norm_bound is None:
            if horizon_hint is None:
                raise SystemSpecError("bounds must be declared or a horizon_hint given")
            obs_a, obs_i = self._scan_bounds(int(horizon_hint))
            norm_bound = obs_a if norm_bound is None else norm_bound
            inv_norm_bound = obs_i if inv_norm_bound is None else inv_norm_bound
            self.bounds_source = "observed"
        self.norm_bound = float(norm_bound)
        self.inv_norm_bound = float(inv_norm_bound)

    def __repr__(self):
        return f"MatrixSequence({self.name!r}, dim={self.dim})"

    def _scan_bounds(self, horizon, chunk=1 << 14):
        hi = 0.0
        hi_inv = 0.0
        for s in range(0, horizon, chunk):
            e = min(horizon, s + chunk)
            hi = max(hi, float(spectral_norms(self.block(s, e)).max()))
            hi_inv = max(hi_inv, float(spectral_norms(self.inv_block(s, e)).max()))
        return hi, hi_inv

    def block(self, start, stop):
        if not 0 <= start <= stop:
            raise IndexError(f"bad block range [{start}, {stop})")
        out = np.asarray(self._block_fn(start, stop), dtype=float)
        return out.reshape(stop - start, self.dim, self.dim)

    def inv_block(self, start, stop):
        if self._inv_block_fn is not None:
            out = np.asarray(self._inv_block_fn(start, stop), dtype=float)
            return out.reshape(stop - start, self.dim, self.dim)
        return np.linalg.inv(self.block(start, stop))

    def eval(self, n):
        return self.block(n, n + 1)[0]

    def eval_inv(self, n):
        return self.inv_block(n, n + 1)[0]

    def prefix(self, n, inverse=False):
        """A(0..n-1) (or the inverses) as one contiguous array, memoized."""
        key = ("inv" if inverse else "fwd")
        with self._lock:
            have = self._prefix.get(key)
            if have is not None and have.shape[0] >= n:
                return have[:n]
        arr = self.inv_block(0, n) if inverse else self.block(0, n)
        arr = np.ascontiguousarray(arr)
        if not np.all(np.isfinite(arr)):
            raise FloatingPointError(f"non-finite coefficients in {self.name}")
        arr.setflags(write=False)
        with self._lock:
            have = self._prefix.get(key)
            if have is None or have.shape[0] < n:
                self._prefix[key] = arr
            else:
                arr = have[:n]
        return arr

    def cached(self, key, make):
        """Per-sequence memo used by the analysis layers."""
        with self._lock:
            if key in self._analysis:
                return self._analysis[key]
        value = make()
        with self._lock:
            return self._analysis.setdefault(key, value)

    @property
    def log_c(self):
        """ln max(norm_bound, inv_norm_bound), the per-step growth cap."""
        return math.log(max(self.norm_bound, self.inv_norm_bound, 1.0))


class TransformSequence(MatrixSequence):
    """Lyapunov transformation T(n); same interface as MatrixSequence."""

    @property
    def condition(self):
        return self.norm_bound * self.inv_norm_bound


# --------------------------------------------------------------------------
# spec handling


@dataclass
class SystemSpec:
    kind: str
    dim: int
    params: dict = field(default_factory=dict)
    horizon_hint: int = 100_000

    def to_dict(self):
        return {"kind": self.kind, "dim": self.dim, "params": self.params,
                "horizon_hint": self.horizon_hint}

    @classmethod
    def from_dict(cls, obj):
        try:
            return cls(kind=obj["kind"], dim=int(obj["dim"]),
                       params=dict(obj.get("params", {})),
                       horizon_hint=int(obj.get("horizon_hint", 100_000)))
        except (KeyError, TypeError) as exc:
            raise SystemSpecError(f"malformed system spec: {exc}") from exc

    @classmethod
    def from_json(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _as_matrix(obj, d):
    a = np.asarray(obj, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    elif a.ndim == 1:
        if a.size != d * d:
            raise SystemSpecError(f"expected {d * d} entries, got {a.size}")
        a = a.reshape(d, d)
    if a.shape != (d, d):
        raise SystemSpecError(f"expected a {d}x{d} matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise SystemSpecError("non-finite matrix entry")
    return a


def _check_invertible(mats):
    dets = np.abs(np.linalg.det(mats))
    if np.any(dets < SINGULAR_DET):
        k = int(np.argmin(dets))
        raise SystemSpecError(f"singular matrix (|det| = {dets[k]:.3g}) at index {k}")


def _periodic(mats, name, structure="general", cls=MatrixSequence):
    mats = np.ascontiguousarray(mats, dtype=float)
    _check_invertible(mats)
    invs = np.linalg.inv(mats)
    p, d = mats.shape[0], mats.shape[1]

    def fwd(s, e):
        return mats[np.arange(s, e) % p]

    def inv(s, e):
        return invs[np.arange(s, e) % p]

    return cls(d, fwd, inv, float(spectral_norms(mats).max()),
               float(spectral_norms(invs).max()), name=name, structure=structure)


def constant_sequence(matrix, name="constant"):
    a = np.atleast_2d(np.asarray(matrix, dtype=float))
    return _periodic(a[None], name, _structure_of(a))


def periodic_sequence(matrices, name="periodic"):
    mats = np.asarray(matrices, dtype=float)
    if mats.ndim == 1:
        mats = mats.reshape(-1, 1, 1)
    if mats.shape[0] < 1:
        raise SystemSpecError("periodic kind needs period >= 1")
    return _periodic(mats, name, _structure_of(*mats))


def _structure_of(*mats):
    if all(np.count_nonzero(m - np.diag(np.diag(m))) == 0 for m in mats):
        return "diagonal"
    if all(np.count_nonzero(np.tril(m, -1)) == 0 for m in mats):
        return "upper_triangular"
    return "general"


def diagonal_sequence(entries, name="diagonal"):
    """diag(a_1(n), ..., a_d(n)); each entry a number or a periodic list."""
    cols = [np.atleast_1d(np.asarray(e, dtype=float)) for e in entries]
    if not cols:
        raise SystemSpecError("diagonal kind needs at least one entry")
    for c in cols:
        if c.size == 0 or np.any(np.abs(c) < SINGULAR_DET) or not np.all(np.isfinite(c)):
            raise SystemSpecError("diagonal entries must be finite and nonzero")
    d = len(cols)

    def vals(s, e):
        idx = np.arange(s, e)
        return np.stack([c[idx % c.size] for c in cols], axis=-1)

    def fwd(s, e):
        out = np.zeros((e - s, d, d))
        out[:, np.arange(d), np.arange(d)] = vals(s, e)
        return out

    def inv(s, e):
        out = np.zeros((e - s, d, d))
        out[:, np.arange(d), np.arange(d)] = 1.0 / vals(s, e)
        return out

    hi = max(float(np.abs(c).max()) for c in cols)
    hi_inv = max(float((1.0 / np.abs(c)).max()) for c in cols)
    return MatrixSequence(d, fwd, inv, hi, hi_inv, name=name, structure="diagonal")


def dyadic_switching_sequence(amplitude=1.0, name="dyadic_switching_scalar"):
    """a(n) = e^{s(n)}, s = +amp when floor(log2(n+1)) is even, -amp otherwise."""
    amp = float(amplitude)

    def exponent(s, e):
        # frexp gives floor(log2(n+1)) + 1 exactly for n+1 < 2**53
        level = np.frexp(np.arange(s + 1, e + 1, dtype=float))[1] - 1
        return np.where(level % 2 == 0, amp, -amp)

    def fwd(s, e):
        return np.exp(exponent(s, e)).reshape(-1, 1, 1)

    def inv(s, e):
        return np.exp(-exponent(s, e)).reshape(-1, 1, 1)

    b = math.exp(abs(amp))
    return MatrixSequence(1, fwd, inv, b, b, name=name)


def _haar_orthogonal(rng, k, d):
    G = rng.standard_normal((k, d, d))
    Q, R = np.linalg.qr(G)
    s = np.sign(np.diagonal(R, axis1=1, axis2=2))
    s[s == 0] = 1.0
    return Q * s[:, None, :]


class _BlockCache:
    """Lazily generated fixed-size blocks, keyed by block index."""

    def __init__(self, make, size=1024):
        self.make = make
        self.size = size
        self.blocks = {}
        self.lock = threading.Lock()

    def get(self, b):
        with self.lock:
            hit = self.blocks.get(b)
        if hit is None:
            hit = self.make(b)
            with self.lock:
                hit = self.blocks.setdefault(b, hit)
        return hit

    def rows(self, s, e, which):
        if e <= s:
            return None
        parts = []
        for b in range(s // self.size, (e - 1) // self.size + 1):
            lo = max(s, b * self.size) - b * self.size
            hi = min(e, (b + 1) * self.size) - b * self.size
            parts.append(self.get(b)[which][lo:hi])
        return np.concatenate(parts, axis=0)


def random_qdq_sequence(dim, seed, d_lo=0.5, d_hi=2.0, name="random_qdq",
                        cls=MatrixSequence):
    """A(n) = Q1(n) D(n) Q2(n): Haar orthogonal factors, D uniform in [d_lo, d_hi].

    Block b of 1024 indices is drawn from ``default_rng([seed, b])`` so any
    A(n) depends only on (seed, n).
    """
    d = int(dim)
    if not 0 < d_lo <= d_hi:
        raise SystemSpecError("random_qdq needs 0 < d_lo <= d_hi")
    seed = int(seed) % (1 << 64)

    def make(b):
        rng = np.random.default_rng([seed, b])
        k = 1024
        Q1 = _haar_orthogonal(rng, k, d)
        Q2 = _haar_orthogonal(rng, k, d)
        D = rng.uniform(d_lo, d_hi, size=(k, d))
        A = Q1 @ (D[:, :, None] * Q2)
        Ainv = np.swapaxes(Q2, 1, 2) @ (np.swapaxes(Q1, 1, 2) / D[:, :, None])
        return A, Ainv

    cache = _BlockCache(make)
    empty = np.zeros((0, d, d))
    return cls(d, lambda s, e: empty if e <= s else cache.rows(s, e, 0),
               lambda s, e: empty if e <= s else cache.rows(s, e, 1),
               float(d_hi), 1.0 / float(d_lo), name=name)


def load_matrix_file(path, dim=None):
    """Read a JSON list of row-major d*d arrays; returns an (n, d, d) array."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        arr = np.asarray(raw, dtype=float)
    except (OSError, ValueError) as exc:
        raise SystemSpecError(f"cannot read matrix file {path}: {exc}") from exc
    if arr.ndim == 3:
        arr = arr.reshape(arr.shape[0], -1)
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise SystemSpecError(f"matrix file {path} is not a list of matrices")
    d = int(round(math.sqrt(arr.shape[1])))
    if d * d != arr.shape[1] or (dim is not None and d != dim):
        raise SystemSpecError(f"matrix file {path}: entries do not form {dim}x{dim} matrices")
    if not np.all(np.isfinite(arr)):
        raise SystemSpecError(f"matrix file {path} has non-finite entries")
    return arr.reshape(-1, d, d)


def save_matrix_file(path, mats):
    mats = np.asarray(mats, dtype=float)
    rows = mats.reshape(mats.shape[0], -1).tolist()
    Path(path).write_text(json.dumps(rows) + "\n", encoding="utf-8")


def file_sequence(path, dim=None, name=None):
    mats = load_matrix_file(path, dim)
    _check_invertible(mats)
    invs = np.linalg.inv(mats)
    n = mats.shape[0]

    def fwd(s, e):
        if e > n:
            raise IndexError(f"matrix file holds {n} entries, asked for index {e - 1}")
        return mats[s:e]

    def inv(s, e):
        if e > n:
            raise IndexError(f"matrix file holds {n} entries, asked for index {e - 1}")
        return invs[s:e]

    return MatrixSequence(mats.shape[1], fwd, inv, None, None,
                          name=name or Path(path).name, horizon_hint=n,
                          structure=_structure_of(*mats[:64]) if n <= 64 else "general")


def load_system(spec):
    """Build the evaluable sequence described by a SystemSpec (or dict)."""
    if isinstance(spec, dict):
        spec = SystemSpec.from_dict(spec)
    p = spec.params
    d = spec.dim
    if d < 1:
        raise SystemSpecError("dim must be >= 1")
    name = p.get("id", spec.kind)
    try:
        if spec.kind == "constant":
            seq = constant_sequence(_as_matrix(p["matrix"], d), name)
        elif spec.kind in ("periodic", "upper_triangular"):
            mats = np.stack([_as_matrix(m, d) for m in p["matrices"]])
            if spec.kind == "upper_triangular" and np.any(np.tril(mats, -1) != 0):
                raise SystemSpecError("upper_triangular matrices have entries below the diagonal")
            seq = periodic_sequence(mats, name)
        elif spec.kind == "diagonal":
            if len(p["entries"]) != d:
                raise SystemSpecError("diagonal kind needs dim entries")
            seq = diagonal_sequence(p["entries"], name)
        elif spec.kind == "dyadic_switching_scalar":
            if d != 1:
                raise SystemSpecError("dyadic_switching_scalar is scalar")
            seq = dyadic_switching_sequence(p.get("amplitude", 1.0), name)
        elif spec.kind == "random_qdq":
            lo, hi = p.get("range", (p.get("d_lo", 0.5), p.get("d_hi", 2.0)))
            seq = random_qdq_sequence(d, p["seed"], lo, hi, name)
        elif spec.kind == "file":
            fmt = p.get("format", "json-matrices")
            if fmt != "json-matrices":
                raise SystemSpecError(f"unsupported file format {fmt!r}")
            seq = file_sequence(p["path"], d, name)
        else:
            raise SystemSpecError(f"unknown kind {spec.kind!r}")
    except KeyError as exc:
        raise SystemSpecError(f"{spec.kind} spec lacks parameter {exc}") from exc
    if seq.dim != d:
        raise SystemSpecError(f"spec says dim={d}, data has dim={seq.dim}")
    if seq.horizon_hint is None:
        seq.horizon_hint = spec.horizon_hint
    return seq


# --------------------------------------------------------------------------
# operations on sequences


@dataclass
class ValidationReport:
    horizon: int
    declared_norm: float
    declared_inv_norm: float
    observed_norm: float
    observed_inv_norm: float
    inverse_residual: float
    flags: list

    @property
    def ok(self):
        return not self.flags

    def to_dict(self):
        return {
            "horizon": self.horizon,
            "declared": {"norm_bound": self.declared_norm,
                         "inv_norm_bound": self.declared_inv_norm},
            "observed": {"norm_bound": self.observed_norm,
                         "inv_norm_bound": self.observed_inv_norm},
            "inverse_residual": self.inverse_residual,
            "flags": list(self.flags),
        }


def validate_lyapunov(seq, horizon, chunk=1 << 14):
    """Scan A(n), A(n)^{-1} for n < horizon against the declared bounds."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    hi = hi_inv = resid = 0.0
    for s in range(0, horizon, chunk):
        e = min(horizon, s + chunk)
        A = seq.block(s, e)
        Ai = seq.inv_block(s, e)
        hi = max(hi, float(spectral_norms(A).max()))
        hi_inv = max(hi_inv, float(spectral_norms(Ai).max()))
        eye = np.eye(seq.dim)
        resid = max(resid, float(np.abs(A @ Ai - eye).max()))
    flags = []
    if hi > seq.norm_bound * (1 + 1e-9):
        flags.append("norm_bound_exceeded")
    if hi_inv > seq.inv_norm_bound * (1 + 1e-9):
        flags.append("inv_norm_bound_exceeded")
    if resid > 1e-12 * max(1.0, hi * hi_inv):
        flags.append("inverse_residual")
    return ValidationReport(horizon, seq.norm_bound, seq.inv_norm_bound,
                            hi, hi_inv, resid, flags)


def shift(seq, gamma):
    """The gamma-shifted sequence e^{-gamma} A(n)."""
    f = math.exp(-gamma)
    g = math.exp(gamma)
    return MatrixSequence(
        seq.dim,
        lambda s, e: f * seq.block(s, e),
        lambda s, e: g * seq.inv_block(s, e),
        seq.norm_bound * f, seq.inv_norm_bound * g,
        name=f"{seq.name}|shift({gamma:g})", horizon_hint=seq.horizon_hint,
        structure=seq.structure)


def transform(seq, t):
    """B(n) = T(n+1)^{-1} A(n) T(n)."""
    if seq.dim != t.dim:
        raise ValueError(f"dimension mismatch: system {seq.dim}, transform {t.dim}")

    def fwd(s, e):
        return t.inv_block(s + 1, e + 1) @ seq.block(s, e) @ t.block(s, e)

    def inv(s, e):
        return t.inv_block(s, e) @ seq.inv_block(s, e) @ t.block(s + 1, e + 1)

    c = t.norm_bound * t.inv_norm_bound
    return MatrixSequence(seq.dim, fwd, inv, seq.norm_bound * c,
                          seq.inv_norm_bound * c, name=f"{seq.name}|{t.name}",
                          horizon_hint=seq.horizon_hint)


# --------------------------------------------------------------------------
# transformations


def identity_transform(dim):
    eye = np.eye(dim)
    f = lambda s, e: np.broadcast_to(eye, (e - s, dim, dim)).copy()
    return TransformSequence(dim, f, f, 1.0, 1.0, name="identity")


def constant_transform(matrix, name="constant_T"):
    m = np.atleast_2d(np.asarray(matrix, dtype=float))
    return _periodic(m[None], name, cls=TransformSequence)


def inverse_transform(t):
    """n -> T(n)^{-1}."""
    return TransformSequence(t.dim, t.inv_block, t.block, t.inv_norm_bound,
                             t.norm_bound, name=f"inv({t.name})")


def rotation_transform(theta):
    """T(n) = rotation by n*theta in the plane."""
    def rot(s, e, sign):
        a = sign * theta * np.arange(s, e)
        c, sn = np.cos(a), np.sin(a)
        return np.stack([np.stack([c, -sn], -1), np.stack([sn, c], -1)], -2)

    return TransformSequence(2, lambda s, e: rot(s, e, 1.0),
                             lambda s, e: rot(s, e, -1.0), 1.0, 1.0,
                             name=f"rotation({theta:g})")


def sine_diagonal_transform(dim=2, amplitude=0.5):
    """T(n) = diag(1 + amp sin n, 1, ..., 1)."""
    def diag(s, e, power):
        out = np.zeros((e - s, dim, dim))
        out[:, np.arange(dim), np.arange(dim)] = 1.0
        out[:, 0, 0] = (1.0 + amplitude * np.sin(np.arange(s, e))) ** power
        return out

    return TransformSequence(dim, lambda s, e: diag(s, e, 1),
                             lambda s, e: diag(s, e, -1), 1.0 + amplitude,
                             1.0 / (1.0 - amplitude), name=f"sine_diag({amplitude:g})")


def random_transform(dim, seed, condition=4.0):
    """Seeded Q1 D Q2 transformation with ||T|| ||T^{-1}|| <= condition."""
    r = math.sqrt(condition)
    t = random_qdq_sequence(dim, seed, 1.0 / r, r, name=f"random_T({seed})",
                            cls=TransformSequence)
    return t


def rotation_matrix(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


# --------------------------------------------------------------------------
# builtin roster

def builtin_specs(horizon=100_000):
    """The seven builtin test systems, as (id, SystemSpec)."""
    h = int(horizon)
    return [
        ("constant_2", SystemSpec("constant", 1, {"matrix": [[2.0]]}, h)),
        ("periodic_1_4", SystemSpec("periodic", 1, {"matrices": [[[1.0]], [[4.0]]]}, h)),
        ("diag_2_half", SystemSpec("diagonal", 2, {"entries": [2.0, 0.5]}, h)),
        ("upper_2_1_half", SystemSpec("upper_triangular", 2,
                                      {"matrices": [[[2.0, 1.0], [0.0, 0.5]]]}, h)),
        ("dyadic", SystemSpec("dyadic_switching_scalar", 1, {}, h)),
        ("rotation_1p5", SystemSpec("constant", 2,
                                    {"matrix": (1.5 * rotation_matrix(1.0)).tolist()}, h)),
        ("random_qdq_7", SystemSpec("random_qdq", 3, {"seed": 7, "range": [0.5, 2.0]}, h)),
    ]


def triangular_specs(horizon=100_000):
    h = int(horizon)
    return [
        ("upper_2_1_half", SystemSpec("upper_triangular", 2,
                                      {"matrices": [[[2.0, 1.0], [0.0, 0.5]]]}, h)),
        ("upper_periodic", SystemSpec("upper_triangular", 2, {"matrices": [
            [[1.0, 1.0], [0.0, 3.0]], [[4.0, -1.0], [0.0, 3.0]]]}, h)),
        ("diag_2_half", SystemSpec("diagonal", 2, {"entries": [2.0, 0.5]}, h)),
    ]
