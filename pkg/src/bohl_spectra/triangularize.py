"""Discrete QR reduction to upper triangular form.

A(n) T(n) = T(n+1) B(n) with T orthogonal, T(0) = I and diag(B(n)) > 0.
Frames are kept at checkpoints and replayed on demand.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .systems import (MatrixSequence, TransformSequence, save_matrix_file,
                      spectral_norms)

CHECKPOINT = 1024


def _stored_sequence(mats, name, structure, cls=MatrixSequence, invs=None):
    """Sequence backed by an (n, d, d) array; evaluation past n is an error."""
    mats = np.ascontiguousarray(mats)
    if invs is None:
        invs = np.linalg.inv(mats)
    n = mats.shape[0]

    def get(arr):
        def f(s, e):
            if e > n:
                raise IndexError(f"{name} is stored for n < {n}, asked for {e - 1}")
            return arr[s:e]
        return f

    return cls(mats.shape[1], get(mats), get(invs), float(spectral_norms(mats).max()),
               float(spectral_norms(invs).max()), name=name, horizon_hint=n,
               structure=structure)


@dataclass
class TriangularForm:
    source: MatrixSequence
    b: np.ndarray
    checkpoints: np.ndarray
    stride: int
    residual: float
    orthogonality: float

    @property
    def n_max(self):
        return self.b.shape[0]

    @property
    def dim(self):
        return self.b.shape[1]

    @property
    def b_seq(self):
        return _stored_sequence(self.b, f"{self.source.name}|B", "upper_triangular")

    def frames(self, start, stop):
        """T(start..stop-1), replayed from the nearest checkpoint."""
        if not 0 <= start <= stop <= self.n_max + 1:
            raise IndexError(f"frames stored for n <= {self.n_max}")
        out = []
        n = start
        while n < stop:
            c = n // self.stride
            base = c * self.stride
            upto = min(stop, base + self.stride)
            A = self.source.prefix(self.n_max)[base:upto - 1] if upto - 1 > base else \
                np.zeros((0, self.dim, self.dim))
            seg = _kernels.qr_replay(np.ascontiguousarray(A), self.checkpoints[c].copy())
            out.append(seg[n - base:upto - base])
            n = upto
        if not out:
            return np.zeros((0, self.dim, self.dim))
        return np.concatenate(out, axis=0)

    def frame(self, n):
        return self.frames(n, n + 1)[0]

    @property
    def t_frames(self):
        """The frames as a TransformSequence (T(n)^{-1} = T(n)^T)."""
        return TransformSequence(
            self.dim, self.frames,
            lambda s, e: np.swapaxes(self.frames(s, e), 1, 2), 1.0, 1.0,
            name=f"{self.source.name}|T")

    def diagonal(self):
        return np.diagonal(self.b, axis1=1, axis2=2).copy()

    def dump(self, b_path, t_path=None):
        save_matrix_file(b_path, self.b)
        if t_path is not None:
            save_matrix_file(t_path, self.frames(0, self.n_max + 1))


def qr_normal_form(seq, n_max, checkpoint=CHECKPOINT):
    """QR recursion from T(0) = I over n < n_max."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    A = seq.prefix(n_max)
    dets = np.abs(np.linalg.det(A)) if seq.dim > 1 else np.abs(A[:, 0, 0])
    if np.any(dets < 1e-300) or not np.all(np.isfinite(dets)):
        k = int(np.argmin(dets))
        raise np.linalg.LinAlgError(f"A({k}) is numerically singular; QR breaks down")
    B, cps, _, resid, orth = _kernels.qr_sweep(A, np.eye(seq.dim), int(checkpoint))
    if np.any(np.diagonal(B, axis1=1, axis2=2) <= 0):
        raise np.linalg.LinAlgError("QR produced a nonpositive diagonal entry")
    return TriangularForm(seq, B, cps, int(checkpoint), float(resid), float(orth))


def diagonal_part(tri):
    """The scalar sequences n -> B(n)_kk."""
    diag = tri.diagonal()
    return [_stored_sequence(diag[:, k].reshape(-1, 1, 1), f"{tri.source.name}|b{k + 1}{k + 1}",
                             "diagonal", invs=(1.0 / diag[:, k]).reshape(-1, 1, 1))
            for k in range(tri.dim)]


def diagonal_of(seq, n_max):
    """Diagonal part of a sequence that is already upper triangular."""
    A = seq.prefix(n_max)
    d = seq.dim
    out = []
    for k in range(d):
        a = A[:, k, k].reshape(-1, 1, 1)
        out.append(_stored_sequence(a, f"{seq.name}|a{k + 1}{k + 1}", "diagonal",
                                    invs=1.0 / a))
    return out


def diagonal_matrix_sequence(diag_seqs, n_max, name="diag"):
    vals = np.stack([s.prefix(n_max)[:, 0, 0] for s in diag_seqs], axis=-1)
    d = vals.shape[1]
    mats = np.zeros((n_max, d, d))
    inv = np.zeros((n_max, d, d))
    mats[:, np.arange(d), np.arange(d)] = vals
    inv[:, np.arange(d), np.arange(d)] = 1.0 / vals
    return _stored_sequence(mats, name, "diagonal", invs=inv)


# --------------------------------------------------------------------------
# slow flag


@dataclass
class SlowFlag:
    """Backward-QR frames W with A(n) W(n) = W(n+1) U(n), U upper triangular.

    Span of the first p columns of W(n) approximates the p-dimensional
    subspace of slowest forward growth (it is invariant, and numerically
    attracting under backward iteration).  Vectors in it can be followed
    forward stably inside the leading p x p block of U.
    """

    u: np.ndarray
    w0: np.ndarray

    def level(self, p):
        return np.ascontiguousarray(self.u[:, :p, :p])


def generic_frame(d, seed=20240917):
    rng = np.random.default_rng(seed)
    Q, R = np.linalg.qr(rng.standard_normal((d, d)))
    return Q * np.sign(np.diag(R))


def slow_flag(seq, n_max):
    Ainv = seq.prefix(n_max, inverse=True)
    U, W0 = _kernels.qr_backward(Ainv, generic_frame(seq.dim))
    return SlowFlag(U, W0)
