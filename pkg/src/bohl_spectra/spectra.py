"""Spectra as finite unions of intervals.

Three objects are computed on a finite horizon:

* the exponential dichotomy spectrum, from the QR normal form (union of the
  scalar spectra of the diagonal entries), cross-checked by a gamma-grid
  classification that looks for a slow/fast splitting directly;
* the Bohl spectrum, as the union of Bohl intervals over a direction sample
  (an inner approximation);
* the Bohl dichotomy spectrum, as the closure of that union, cross-checked by
  classifying gamma with the per-direction dichotomy test.

Slow directions cannot be followed by forward iteration in floating point
(any rounding error picks up the fastest growth), so the default sample also
contains vectors of the slow flag, propagated inside the invariant leading
blocks of the backward QR system.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import _kernels
from .exponents import estimate_from_logn, extremes_from_logn, scalar_logn
from .propagation import WindowConfig, singular_window_scan
from .systems import MatrixSequence, spectral_norms
from .triangularize import qr_normal_form, slow_flag

KINDS = ("bohl", "bohl_dichotomy", "exponential_dichotomy")
BISECT_MAX = 20


# --------------------------------------------------------------------------
# intervals


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ValueError(f"interval needs lo <= hi, got [{self.lo}, {self.hi}]")

    @property
    def width(self):
        return self.hi - self.lo

    @property
    def mid(self):
        return 0.5 * (self.lo + self.hi)

    def to_list(self):
        return [float(self.lo), float(self.hi)]


def as_intervals(obj):
    return [x if isinstance(x, Interval) else Interval(float(x[0]), float(x[1])) for x in obj]


def merge_intervals(raw, gap_tol=0.0):
    """Sort and merge intervals whose gap is at most gap_tol."""
    if gap_tol < 0:
        raise ValueError("gap_tol must be >= 0")
    items = sorted(as_intervals(raw), key=lambda iv: (iv.lo, iv.hi))
    out = []
    for iv in items:
        if out and iv.lo - out[-1].hi <= gap_tol:
            last = out[-1]
            out[-1] = Interval(last.lo, max(last.hi, iv.hi))
        else:
            out.append(iv)
    return out


def _dist(x, ivs):
    return min(0.0 if iv.lo <= x <= iv.hi else min(abs(x - iv.lo), abs(x - iv.hi))
               for iv in ivs)


def excess(a, b):
    """sup over x in union(a) of dist(x, union(b)); 0 when a is empty."""
    a, b = as_intervals(a), as_intervals(b)
    if not a:
        return 0.0
    if not b:
        return math.inf
    bs = sorted(b, key=lambda iv: iv.lo)
    worst = 0.0
    for iv in a:
        cands = [iv.lo, iv.hi]
        for left, right in zip(bs, bs[1:]):
            m = 0.5 * (left.hi + right.lo)
            if iv.lo <= m <= iv.hi:
                cands.append(m)
        worst = max(worst, max(_dist(x, bs) for x in cands))
    return worst


def hausdorff(a, b):
    return max(excess(a, b), excess(b, a))


# --------------------------------------------------------------------------
# results


@dataclass(frozen=True)
class SpectrumConfig:
    window: WindowConfig
    grid_tol: float = 1e-2
    alpha_min: float = 1e-2
    samples_per_dim: int = 64
    seed: int = 0

    def __post_init__(self):
        if self.grid_tol <= 0 or self.alpha_min <= 0:
            raise ValueError("grid_tol and alpha_min must be positive")
        if self.samples_per_dim < 0:
            raise ValueError("samples_per_dim must be >= 0")

    @classmethod
    def default(cls, n_max, n_last=None, **kw):
        return cls(WindowConfig.default(n_max, n_last), **kw)

    @property
    def n_max(self):
        return self.window.n_max


def _clean(obj):
    """Plain-python copy of nested diagnostics (stable JSON)."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, Interval):
        return obj.to_list()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


@dataclass
class SpectrumResult:
    kind: str
    intervals: list
    filtration_dims: list
    search_box: Interval
    method: dict = field(default_factory=dict)
    caveat: str | None = None

    def to_dict(self):
        out = {
            "kind": self.kind,
            "intervals": [iv.to_list() for iv in self.intervals],
            "filtration_dims": [int(x) for x in self.filtration_dims],
            "search_box": self.search_box.to_list(),
            "method": _clean(self.method),
        }
        if self.caveat:
            out["caveat"] = self.caveat
        return out

    @property
    def lo(self):
        return self.intervals[0].lo

    @property
    def hi(self):
        return self.intervals[-1].hi


@dataclass
class GammaVerdict:
    gamma: float
    verdict: str
    margin: float
    split_dims: tuple
    witnesses: list = field(default_factory=list)

    def to_dict(self):
        return _clean({"gamma": self.gamma, "verdict": self.verdict, "margin": self.margin,
                       "split_dims": list(self.split_dims), "witnesses": self.witnesses})


def search_box(seq, pad):
    return Interval(-math.log(seq.inv_norm_bound) - pad, math.log(seq.norm_bound) + pad)


# --------------------------------------------------------------------------
# direction samples


def sphere_lattice(d, count, seed=0):
    """Quasi-uniform unit vectors: evenly spaced half-circle for d = 2,
    Fibonacci sphere for d = 3, seeded Gaussian directions beyond."""
    if count <= 0:
        return np.zeros((0, d))
    if d == 1:
        return np.ones((1, 1))
    k = np.arange(count)
    if d == 2:
        t = np.pi * (k + 0.5) / count
        return np.stack([np.cos(t), np.sin(t)], axis=1)
    if d == 3:
        z = 1.0 - (2.0 * k + 1.0) / count
        r = np.sqrt(1.0 - z * z)
        phi = k * np.pi * (3.0 - math.sqrt(5.0))
        return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)
    g = np.random.default_rng(seed).standard_normal((count, d))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


@dataclass
class DirectionSample:
    label: str
    x0: np.ndarray
    lower: float
    upper: float
    level: int = 0  # slow-flag level, 0 for plain forward samples


def _sample_dirs(seq, cfg, directions, flag=None):
    """Bohl intervals (at N_last) for explicit directions and slow-flag levels."""
    n = cfg.n_max
    th = np.array([cfg.window.n_last], dtype=np.int64)
    out = []
    A = seq.prefix(n)
    for i, x in enumerate(directions):
        x = np.asarray(x, dtype=float).reshape(-1)
        nrm = np.linalg.norm(x)
        if not nrm > 0:
            raise ValueError(f"direction {i} is zero")
        S = _kernels.propagate_logn(A, np.ascontiguousarray(x / nrm))
        sup, inf, _ = extremes_from_logn(S, cfg.window, th)
        out.append(DirectionSample(f"x{i}", x / nrm, float(inf[0]), float(sup[0])))
    if flag is not None:
        d = seq.dim
        for p in range(1, d + 1):
            U = flag.level(p)
            coords = [np.eye(p)[p - 1]]
            if p > 1:
                coords.append(np.ones(p) / math.sqrt(p))
            for j, c in enumerate(coords):
                S = _kernels.propagate_logn(U, np.ascontiguousarray(c))
                sup, inf, _ = extremes_from_logn(S, cfg.window, th)
                x0 = flag.w0[:, :p] @ c
                out.append(DirectionSample(f"flag{p}.{j}", x0, float(inf[0]),
                                           float(sup[0]), level=p))
    return out


# --------------------------------------------------------------------------
# per-system analysis cache


class _Profile:
    """Lazily computed building blocks shared by all spectrum routines."""

    def __init__(self, seq, cfg):
        self.seq = seq
        self.cfg = cfg
        self.d = seq.dim
        self.n = cfg.n_max

    @cached_property
    def tri(self):
        return qr_normal_form(self.seq, self.n)

    @cached_property
    def diag_bounds(self):
        """(lower, upper) of each diagonal entry of the QR normal form."""
        diag = np.log(self.tri.diagonal())
        out = []
        for k in range(self.d):
            S = np.concatenate([[0.0], np.cumsum(diag[:, k])])
            est = estimate_from_logn(S, self.cfg.window)
            out.append((est.lower, est.upper))
        return out

    @cached_property
    def flag(self):
        return slow_flag(self.seq, self.n)

    @cached_property
    def default_samples(self):
        d = self.d
        dirs = list(np.eye(d)) + list(sphere_lattice(d, self.cfg.samples_per_dim * d,
                                                          self.cfg.seed))
        if d == 1:
            dirs = [np.ones(1)]
            return _sample_dirs(self.seq, self.cfg, dirs)
        return _sample_dirs(self.seq, self.cfg, dirs, self.flag)

    @cached_property
    def singular(self):
        if self.d == 1:
            return None
        return singular_window_scan(self.seq, self.cfg.window)

    @cached_property
    def fullspace(self):
        if self.d == 1:
            S = scalar_logn(self.seq, self.n)
            est = estimate_from_logn(S, self.cfg.window)
            return est.lower, est.upper
        sc = self.singular
        return float(sc.inf[-1, -1]), float(sc.sup[-1, 0])

    def _block_bounds(self, mats):
        p = mats.shape[1]
        if p == 1:
            S = np.concatenate([[0.0], np.cumsum(np.log(np.abs(mats[:, 0, 0])))])
            est = estimate_from_logn(S, self.cfg.window)
            return est.lower, est.upper
        mats = np.ascontiguousarray(mats)
        sub = MatrixSequence(p, lambda s, e: mats[s:e], None, 1.0, 1.0,
                             name="block")
        sc = singular_window_scan(sub, self.cfg.window, A=mats)
        return float(sc.inf[-1, -1]), float(sc.sup[-1, 0])

    @cached_property
    def splits(self):
        """For k = 0..d: (upper exponent of the k-dim slow subspace, lower
        exponent of the (d-k)-dim fast subspace); None for a trivial side."""
        d = self.d
        out = []
        for k in range(d + 1):
            slow = None if k == 0 else self._block_bounds(self.flag.u[:, :k, :k])[1]
            fast = None if k == d else self._block_bounds(self.tri.b[:, :d - k, :d - k])[0]
            out.append((slow, fast))
        return out


def _profile(seq, cfg):
    return seq.cached(("profile", cfg), lambda: _Profile(seq, cfg))


# --------------------------------------------------------------------------
# public operations


def scalar_ed_spectrum(a, cfg):
    if a.dim != 1:
        raise ValueError("scalar_ed_spectrum needs a scalar sequence")
    window = cfg.window if isinstance(cfg, SpectrumConfig) else cfg
    est = estimate_from_logn(scalar_logn(a, window.n_max), window)
    return Interval(est.lower, est.upper)


def _filtration_from_counts(intervals, box, uppers, d, gap_margin):
    """dims at gamma below the box, at gap midpoints, and above the box."""
    points = [box.lo - 1.0]
    margins = [0.0]
    for left, right in zip(intervals, intervals[1:]):
        points.append(0.5 * (left.hi + right.lo))
        margins.append(min(gap_margin, 0.25 * (right.lo - left.hi)))
    points.append(box.hi + 1.0)
    margins.append(0.0)
    return [int(sum(1 for u in uppers if u < g - m)) if k not in (0, len(points) - 1)
            else (0 if k == 0 else d)
            for k, (g, m) in enumerate(zip(points, margins))]


def filtration_ok(dims, d):
    return (len(dims) >= 2 and dims[0] == 0 and dims[-1] == d
            and all(b > a for a, b in zip(dims, dims[1:])))


def diagonal_spectrum(diag_seqs, cfg):
    if not diag_seqs:
        raise ValueError("need at least one diagonal entry")
    if any(s.dim != 1 for s in diag_seqs):
        raise ValueError("diagonal entries must be scalar sequences")
    raw = [scalar_ed_spectrum(s, cfg) for s in diag_seqs]
    return _diag_result(raw, cfg, _diag_box(diag_seqs, cfg), route="diagonal")


def _diag_box(diag_seqs, cfg):
    hi = max(s.norm_bound for s in diag_seqs)
    lo = max(s.inv_norm_bound for s in diag_seqs)
    return Interval(-math.log(lo) - cfg.grid_tol, math.log(hi) + cfg.grid_tol)


def _diag_result(raw, cfg, box, route):
    d = len(raw)
    merged = merge_intervals(raw, cfg.grid_tol)
    dims = _filtration_from_counts(merged, box, [iv.hi for iv in raw], d, cfg.alpha_min)
    method = {"route": route, "horizon": cfg.n_max, "N_last": cfg.window.n_last,
              "entries": [iv.to_list() for iv in raw],
              "filtration_consistent": filtration_ok(dims, d)}
    return SpectrumResult("exponential_dichotomy", merged, dims, box, method)


def ed_spectrum(seq, cfg):
    """Exponential dichotomy spectrum via the QR normal form.

    Cross-check (d <= 3): gamma-grid classification with the splitting test
    (see `classify_gamma`); the Hausdorff distance between the two routes
    and the comparison of the endpoints with the full-space exponents are
    recorded in `method`.
    """
    prof = _profile(seq, cfg)
    box = search_box(seq, cfg.grid_tol)
    raw = [Interval(lo, max(lo, hi)) for lo, hi in prof.diag_bounds]
    res = _diag_result(raw, cfg, box, route="qr_diagonal")
    tol = 2 * cfg.grid_tol
    m = res.method
    m["qr_residual"] = prof.tri.residual
    m["qr_orthogonality"] = prof.tri.orthogonality
    full_lo, full_hi = prof.fullspace
    m["fullspace"] = [full_lo, full_hi]
    m["endpoint_gap"] = max(abs(res.lo - full_lo), abs(res.hi - full_hi))
    m["endpoints_agree"] = m["endpoint_gap"] <= tol
    if seq.dim <= 3:
        grid = _grid_route(lambda g: classify_gamma(seq, g, "ed", cfg), box, cfg)
        second = merge_intervals(grid["intervals"], cfg.grid_tol)
        m["cross_check"] = {"route": "splitting_gamma_grid",
                            "intervals": [iv.to_list() for iv in second],
                            "grid_points": grid["points"],
                            "hausdorff": hausdorff(res.intervals, second)}
        m["routes_agree"] = m["cross_check"]["hausdorff"] <= tol
    return res


def bohl_spectrum_sampled(seq, directions, cfg):
    """Union of Bohl intervals over a direction sample (inner approximation)."""
    prof = _profile(seq, cfg)
    if directions is None:
        samples = prof.default_samples
    else:
        if len(directions) == 0:
            raise ValueError("direction list is empty")
        samples = _sample_dirs(seq, cfg, directions)
    box = search_box(seq, cfg.grid_tol)
    raw = [Interval(s.lower, max(s.lower, s.upper)) for s in samples]
    merged = merge_intervals(raw, cfg.grid_tol)
    dims = _sample_filtration(merged, box, samples, seq.dim, cfg)
    method = {"route": "direction_sample", "horizon": cfg.n_max,
              "N_last": cfg.window.n_last, "directions": len(samples),
              "flag_levels": sum(1 for s in samples if s.level) > 0,
              "approximation": "inner",
              "filtration_consistent": filtration_ok(dims, seq.dim)}
    return SpectrumResult("bohl", merged, dims, box, method,
                          caveat="inner approximation: union over sampled directions only")


def _level_uppers(samples, d):
    """Largest upper exponent among the samples of each slow-flag level."""
    ups = [-math.inf] * d
    seen = [False] * d
    for s in samples:
        if s.level:
            ups[s.level - 1] = max(ups[s.level - 1], s.upper)
            seen[s.level - 1] = True
    return ups if all(seen) else None


def _dim_m(samples, d, gamma, margin):
    """dim of span of sampled directions with upper exponent < gamma - margin."""
    ups = _level_uppers(samples, d)
    if ups is not None:
        k = 0
        while k < d and ups[k] < gamma - margin:
            k += 1
        return k
    vecs = [s.x0 for s in samples if s.upper < gamma - margin]
    if not vecs:
        return 0
    return int(np.linalg.matrix_rank(np.array(vecs), tol=1e-8))


def _sample_filtration(intervals, box, samples, d, cfg):
    dims = [0]
    for left, right in zip(intervals, intervals[1:]):
        g = 0.5 * (left.hi + right.lo)
        dims.append(_dim_m(samples, d, g, min(cfg.alpha_min, 0.25 * (right.lo - left.hi))))
    dims.append(d)
    return dims


def classify_gamma(seq, gamma, mode, cfg, directions=None):
    """Dichotomy test for the gamma-shifted system.

    bd: every sampled direction must satisfy upper - gamma <= -alpha or
    lower - gamma >= alpha with alpha >= alpha_min.
    ed: some split k must have a k-dim slow subspace with upper exponent
    <= gamma - alpha_min and a complementary fast subspace with lower
    exponent >= gamma + alpha_min.
    Shifting subtracts gamma from every window rate, so the unshifted
    exponents are reused.
    """
    prof = _profile(seq, cfg)
    d = seq.dim
    a = cfg.alpha_min
    if mode == "bd":
        samples = prof.default_samples if directions is None else _sample_dirs(seq, cfg, directions)
        if not samples:
            return GammaVerdict(gamma, "undecided", 0.0, (0, 0))
        margins = [max(gamma - s.upper, s.lower - gamma) for s in samples]
        worst = min(margins)
        if worst < a:
            bad = [{"direction": s.label, "x0": s.x0, "shifted": [s.lower - gamma, s.upper - gamma]}
                   for s, mg in zip(samples, margins) if mg < a][:5]
            return GammaVerdict(gamma, "spectrum", worst, (None, None), bad)
        k = _dim_m(samples, d, gamma, 0.0)
        decaying = [s.x0 for s in samples if s.upper - gamma <= -a]
        rank = int(np.linalg.matrix_rank(np.array(decaying), tol=1e-8)) if decaying else 0
        if rank > k:
            return GammaVerdict(gamma, "undecided", worst, (k, d - k),
                                [{"reason": "decaying samples span more than the slow flag",
                                  "rank": rank, "flag_dim": k}])
        return GammaVerdict(gamma, "resolvent", worst, (k, d - k))
    if mode == "ed":
        best = -math.inf
        best_k = None
        for k, (slow, fast) in enumerate(prof.splits):
            m = min(math.inf if slow is None else gamma - slow,
                    math.inf if fast is None else fast - gamma)
            if m > best:
                best, best_k = m, k
        diag_count = sum(1 for lo, hi in prof.diag_bounds if hi < gamma)
        wit = [{"split": best_k, "slow_upper": prof.splits[best_k][0],
                "fast_lower": prof.splits[best_k][1], "diagonal_decaying": diag_count}]
        if best >= a:
            return GammaVerdict(gamma, "resolvent", best, (best_k, d - best_k), wit)
        return GammaVerdict(gamma, "spectrum", best, (None, None), wit)
    raise ValueError(f"unknown mode {mode!r}")


def _grid_route(verdict_fn, box, cfg):
    """Spectrum intervals from a gamma grid plus bisection of its edges.

    Verdicts switch to spectrum within alpha_min of the spectrum, so every
    detected run is shrunk by alpha_min at both ends.  Undecided counts as
    spectrum.
    """
    a = cfg.alpha_min
    pad = a + cfg.grid_tol
    lo, hi = box.lo - pad, box.hi + pad
    K = max(2, math.ceil((hi - lo) / cfg.grid_tol))
    grid = np.linspace(lo, hi, K + 1)

    def spec(g):
        return verdict_fn(float(g)).verdict != "resolvent"

    flags = [spec(g) for g in grid]

    def edge(out_pt, in_pt):
        for _ in range(BISECT_MAX):
            if abs(in_pt - out_pt) <= 1e-9:
                break
            mid = 0.5 * (out_pt + in_pt)
            if spec(mid):
                in_pt = mid
            else:
                out_pt = mid
        return in_pt

    out = []
    i = 0
    while i <= K:
        if not flags[i]:
            i += 1
            continue
        j = i
        while j + 1 <= K and flags[j + 1]:
            j += 1
        left = grid[i] if i == 0 else edge(grid[i - 1], grid[i])
        right = grid[j] if j == K else edge(grid[j + 1], grid[j])
        l2, r2 = left + a, right - a
        if l2 > r2:
            l2 = r2 = 0.5 * (left + right)
        l2, r2 = max(l2, box.lo), min(r2, box.hi)
        if l2 <= r2:
            out.append(Interval(float(l2), float(r2)))
        i = j + 1
    return {"intervals": out, "points": len(grid)}


def bd_spectrum(seq, cfg):
    """Bohl dichotomy spectrum: closure of the sampled Bohl spectrum,
    cross-checked against the gamma-grid of the direction dichotomy test."""
    base = bohl_spectrum_sampled(seq, None, cfg)
    closure = merge_intervals(base.intervals, cfg.grid_tol)
    grid = _grid_route(lambda g: classify_gamma(seq, g, "bd", cfg), base.search_box, cfg)
    second = merge_intervals(grid["intervals"], cfg.grid_tol)
    gap = hausdorff(closure, second)
    method = dict(base.method)
    method.update({"route": "closure_of_sampled",
                   "cross_check": {"route": "dichotomy_gamma_grid",
                                   "intervals": [iv.to_list() for iv in second],
                                   "grid_points": grid["points"], "hausdorff": gap},
                   "routes_agree": gap <= 2 * cfg.grid_tol})
    return SpectrumResult("bohl_dichotomy", closure, list(base.filtration_dims),
                          base.search_box, method,
                          caveat="built from sampled directions; may miss spectrum")


def subspace_dims(seq, gamma, cfg, margin=None):
    """(dim S_gamma, dim M_gamma, witness) at gamma.

    dim S counts diagonal entries of the QR normal form whose upper exponent
    is below gamma - margin; dim M counts slow-flag levels (or sampled
    directions) with upper exponent below gamma - margin.  Both are only
    meaningful when gamma lies in the respective resolvent; otherwise the
    witness carries the flag "heuristic".
    """
    prof = _profile(seq, cfg)
    m = cfg.alpha_min if margin is None else margin
    d = seq.dim
    diag = prof.diag_bounds
    dim_s = sum(1 for lo, hi in diag if hi < gamma - m)
    samples = prof.default_samples
    dim_m = _dim_m(samples, d, gamma, m)
    near = any(lo - m < gamma < hi + m for lo, hi in diag) or \
        any(s.lower - m < gamma < s.upper + m for s in samples)
    witness = {"labels": [f"b{k + 1}{k + 1}" for k in range(d)],
               "diagonal": [[lo, hi] for lo, hi in diag],
               "level_upper": _level_uppers(samples, d),
               "heuristic": bool(near)}
    return dim_s, dim_m, _clean(witness)


def filtration(seq, spec, cfg):
    """Dimensions of the filtration subspaces attached to a spectrum."""
    if not spec.intervals:
        raise ValueError("spectrum has no intervals")
    d = seq.dim
    dims = [0]
    for left, right in zip(spec.intervals, spec.intervals[1:]):
        g = 0.5 * (left.hi + right.lo)
        margin = min(cfg.alpha_min, 0.25 * (right.lo - left.hi))
        s, mm, _ = subspace_dims(seq, g, cfg, margin)
        dims.append(s if spec.kind == "exponential_dichotomy" else mm)
    dims.append(d)
    return dims


def spectrum(seq, kind, cfg):
    kind = {"ed": "exponential_dichotomy", "bd": "bohl_dichotomy", "bohl": "bohl"}.get(kind, kind)
    if kind == "exponential_dichotomy":
        return ed_spectrum(seq, cfg)
    if kind == "bohl_dichotomy":
        return bd_spectrum(seq, cfg)
    if kind == "bohl":
        return bohl_spectrum_sampled(seq, None, cfg)
    raise ValueError(f"unknown spectrum kind {kind!r}")
