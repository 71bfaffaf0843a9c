"""Log-scaled solutions and windowed growth rates.

A solution is stored as unit directions v(n) and the cumulative log-norm
L(n), so ||x(n, x0)|| = e^{L(n)} ||x0|| never overflows.  The windowed rate
of a solution is lambda(n, m) = (L(n) - L(m)) / (n - m).

For the whole state space the per-window extremes are singular values of
Phi(n, m) = A(n-1) ... A(m).  `singular_window_scan` evaluates them on a
lattice of windows from a sparse table of normalized products of exterior
powers, which keeps every singular value (not just the largest) accurate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from itertools import combinations

import numpy as np

from . import _kernels

K_REFAC = 32
SPREAD_CAP = math.exp(50.0)
EXHAUSTIVE_LIMIT = 10_000
REPRESENTATIONS = ("all_m", "m_beyond_N")


@dataclass
class LogSolution:
    x0: np.ndarray
    dirs: np.ndarray
    logn: np.ndarray

    @property
    def n_max(self):
        return self.logn.shape[0] - 1

    def norm(self, n):
        return math.exp(self.logn[n])


@dataclass(frozen=True)
class WindowConfig:
    """Which windows (n, m) enter the sup/inf.

    n_grid holds the increasing thresholds N (windows need n - m > N); the
    reported exponents are the values at the last one.  With
    representation "m_beyond_N" the window start must exceed N as well.
    `stride` spaces window starts for the singular-value lattice scans.
    """

    n_max: int
    n_grid: tuple
    representation: str = "all_m"
    stride: int = 1

    def __post_init__(self):
        grid = tuple(int(x) for x in self.n_grid)
        object.__setattr__(self, "n_grid", grid)
        if self.n_max < 2:
            raise ValueError("n_max must be >= 2")
        if not grid:
            raise ValueError("n_grid is empty")
        if any(b <= a for a, b in zip(grid, grid[1:])) or grid[0] < 0:
            raise ValueError("n_grid must be increasing and nonnegative")
        if self.representation not in REPRESENTATIONS:
            raise ValueError(f"unknown representation {self.representation!r}")
        limit = self.n_max if self.representation == "all_m" else self.n_max // 2
        if grid[-1] >= limit:
            raise ValueError(f"largest threshold {grid[-1]} leaves no window below n_max={self.n_max}")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")

    @classmethod
    def default(cls, n_max, n_last=None, representation="all_m", stride=None):
        n_max = int(n_max)
        n_last = max(1, n_max // 8) if n_last is None else int(n_last)
        grid = [2 ** k for k in range(4, 64) if 2 ** k < n_last]
        grid.append(n_last)
        if stride is None:
            stride = 1 if n_max <= EXHAUSTIVE_LIMIT else math.ceil(n_max / EXHAUSTIVE_LIMIT)
        return cls(n_max, tuple(grid), representation, int(stride))

    @property
    def n_last(self):
        return self.n_grid[-1]

    def with_representation(self, rep):
        return replace(self, representation=rep)


def propagate_direction(seq, x0, n_max):
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.shape[0] != seq.dim:
        raise ValueError(f"x0 has {x0.shape[0]} entries, system dimension is {seq.dim}")
    nrm = float(np.linalg.norm(x0))
    if not nrm > 0 or not math.isfinite(nrm):
        raise ValueError("initial vector must be nonzero and finite")
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    A = seq.prefix(n_max)
    dirs, logn = _kernels.propagate(A, x0 / nrm)
    if not np.all(np.isfinite(logn)):
        raise FloatingPointError("non-finite growth encountered")
    return LogSolution(x0 / nrm, dirs, logn)


def propagate_logn(A, x0):
    """Log-norm trajectory only, for a raw coefficient array."""
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if not np.linalg.norm(x0) > 0:
        raise ValueError("initial vector must be nonzero")
    return _kernels.propagate_logn(np.ascontiguousarray(A), np.ascontiguousarray(x0))


def window_log_ratio(sol, n, m):
    if n <= m:
        raise ValueError(f"need n > m, got n={n}, m={m}")
    if m < 0 or n > sol.n_max:
        raise IndexError(f"window ({n}, {m}) outside [0, {sol.n_max}]")
    return (sol.logn[n] - sol.logn[m]) / (n - m)


def extreme_window_growth(seq, n, m, k_refac=K_REFAC):
    """(ln sigma_max, ln sigma_min) of Phi(n, m)."""
    if n <= m:
        raise ValueError(f"need n > m, got n={n}, m={m}")
    if m < 0:
        raise IndexError("m must be >= 0")
    A = np.ascontiguousarray(seq.block(m, n))
    Ai = np.ascontiguousarray(seq.inv_block(m, n))
    hi, lo = _kernels.window_product_logsv(A, Ai, int(k_refac), SPREAD_CAP)
    return float(hi), float(min(lo, hi))


# --------------------------------------------------------------------------
# lattice scan of singular values


def compound(A, p):
    """p-th exterior power of every matrix in a (n, d, d) stack."""
    d = A.shape[-1]
    if p == 1:
        return A
    combos = list(combinations(range(d), p))
    out = np.empty(A.shape[:-2] + (len(combos), len(combos)))
    for i, rows in enumerate(combos):
        sub = A[..., rows, :]
        for j, cols in enumerate(combos):
            out[..., i, j] = np.linalg.det(sub[..., cols])
    return out


def _top_singular(P):
    c = P.shape[-1]
    if c == 1:
        return np.abs(P[:, 0, 0])
    if c == 2:
        a, b, cc, dd = P[:, 0, 0], P[:, 0, 1], P[:, 1, 0], P[:, 1, 1]
        s = a * a + b * b + cc * cc + dd * dd
        det = np.abs(a * dd - b * cc)
        # sigma_max^2 = (s + sqrt(s^2 - 4 det^2)) / 2, written without cancellation
        return np.sqrt(0.5 * (s + np.sqrt(np.maximum(s - 2 * det, 0) * (s + 2 * det))))
    if c == 3:
        return np.sqrt(_top_eig_sym3(np.swapaxes(P, 1, 2) @ P))
    return np.linalg.svd(P, compute_uv=False)[:, 0]


def _top_eig_sym3(G):
    """Largest eigenvalue of symmetric 3x3 matrices (trigonometric formula).

    The absolute error is O(eps * ||G||), i.e. relative for the top one.
    """
    a, b, c = G[:, 0, 0], G[:, 1, 1], G[:, 2, 2]
    x, y, z = G[:, 0, 1], G[:, 0, 2], G[:, 1, 2]
    q = (a + b + c) / 3.0
    p1 = x * x + y * y + z * z
    p2 = (a - q) ** 2 + (b - q) ** 2 + (c - q) ** 2 + 2.0 * p1
    p = np.sqrt(p2 / 6.0)
    safe = np.where(p > 0, p, 1.0)
    a1, b1, c1 = (a - q) / safe, (b - q) / safe, (c - q) / safe
    x1, y1, z1 = x / safe, y / safe, z / safe
    det = a1 * (b1 * c1 - z1 * z1) - x1 * (x1 * c1 - z1 * y1) + y1 * (x1 * z1 - b1 * y1)
    r = np.clip(det / 2.0, -1.0, 1.0)
    phi = np.arccos(r) / 3.0
    return np.where(p > 0, q + 2.0 * p * np.cos(phi), q)


def _normalize(P, logs):
    scale = np.abs(P).max(axis=(1, 2))
    scale[scale == 0] = 1.0
    return P / scale[:, None, None], logs + np.log(scale)


class _ProductTable:
    """Sparse table of normalized products over runs of 2^k blocks."""

    def __init__(self, C, stride):
        g = C.shape[0] // stride
        c = C.shape[-1]
        P = np.broadcast_to(np.eye(c), (g, c, c)).copy()
        logs = np.zeros(g)
        for j in range(stride):
            P, logs = _normalize(C[j:g * stride:stride] @ P, logs)
        self.levels = [(P, logs)]
        k = 0
        while 2 ** (k + 1) <= g:
            h = 2 ** k
            Pk, lk = self.levels[-1]
            self.levels.append(_normalize(Pk[h:] @ Pk[:-h], lk[h:] + lk[:-h]))
            k += 1
        self.g = g

    def lognorms(self, length):
        """ln ||product over blocks [i, i+length)|| for every start i."""
        count = self.g - length + 1
        pos = np.arange(count)
        P = None
        logs = np.zeros(count)
        k = 0
        while length >> k:
            if (length >> k) & 1:
                Pk, lk = self.levels[k]
                M = Pk[pos]
                P = M if P is None else M @ P
                logs += lk[pos]
                P, logs = _normalize(P, logs)
                pos = pos + 2 ** k
            k += 1
        return np.log(_top_singular(P)) + logs


@dataclass
class SingularScan:
    """Windowed extremes of ln sigma_i(Phi(n, m)) / (n - m), i = 1..d.

    sup[t, i] and inf[t, i] refer to thresholds[t]; index 0 is the largest
    singular value.  `lengths` are the window lengths (in steps) scanned.
    """

    thresholds: np.ndarray
    sup: np.ndarray
    inf: np.ndarray
    stride: int
    lengths: np.ndarray
    windows: int
    representation: str = "all_m"
    meta: dict = field(default_factory=dict)


def window_lengths(g, stride, thresholds):
    """Lattice of window lengths in blocks: geometric plus the first lengths
    past each threshold."""
    out = set()
    lo = max(1, int(thresholds[0]) // stride)
    x = float(lo)
    while x <= g:
        out.add(int(x))
        x *= 2 ** 0.25
    out.add(g)
    for N in thresholds:
        first = int(N) // stride + 1
        out.update(first + j for j in range(3))
    return np.array(sorted(L for L in out if 1 <= L <= g), dtype=np.int64)


def singular_window_scan(seq, cfg, A=None):
    """Per-threshold sup/inf of ln sigma_i / (n - m) over a window lattice.

    Windows start at multiples of cfg.stride and have lengths from
    `window_lengths`; sup/inf over this set is an inner bound of the
    exhaustive one.  ln sigma_1 + ... + ln sigma_p = ln ||Lambda^p Phi||, and
    the full sum is ln |det Phi|, which is additive and exact.
    """
    d = seq.dim
    n = cfg.n_max
    if A is None:
        A = seq.prefix(n)
    s = cfg.stride
    g = n // s
    thresholds = np.asarray(cfg.n_grid, dtype=np.int64)
    beyond = cfg.representation == "m_beyond_N"
    dets = np.linalg.det(A) if d > 1 else A[:, 0, 0]
    logdet = np.concatenate([[0.0], np.cumsum(np.log(np.abs(dets)))])
    tables = [_ProductTable(compound(A, p), s) for p in range(1, d)]
    lengths = window_lengths(g, s, thresholds)
    T = thresholds.shape[0]
    sup = np.full((T, d), -np.inf)
    inf = np.full((T, d), np.inf)
    windows = 0
    for L in lengths:
        w = int(L) * s
        live = thresholds < w
        if not live.any():
            continue
        count = g - int(L) + 1
        starts = np.arange(count) * s
        cum = [np.zeros(count)]
        cum += [tab.lognorms(int(L)) for tab in tables]
        cum.append(logdet[starts + w] - logdet[starts])
        rates = np.diff(np.stack(cum, axis=1), axis=1) / w
        windows += count
        smax = np.maximum.accumulate(rates[::-1], axis=0)[::-1]
        smin = np.minimum.accumulate(rates[::-1], axis=0)[::-1]
        for t in np.nonzero(live)[0]:
            first = 0
            if beyond:
                first = -(-(int(thresholds[t]) + 1) // s)
            if first >= count:
                continue
            sup[t] = np.maximum(sup[t], smax[first])
            inf[t] = np.minimum(inf[t], smin[first])
    return SingularScan(thresholds, sup, inf, s, lengths * s, windows,
                        cfg.representation)
