"""Brute-force reference computations.

Everything here is deliberately naive (explicit products, full SVDs, O(n^2)
window loops) and shares no code with the package.
"""

import math

import numpy as np


def product(mats, n, m):
    """Phi(n, m) = A(n-1) ... A(m) by explicit multiplication."""
    d = mats.shape[1]
    P = np.eye(d)
    for k in range(m, n):
        P = mats[k] @ P
    return P


def log_singular_values(mats, n, m):
    return np.log(np.linalg.svd(product(mats, n, m), compute_uv=False))


def window_extremes(S, N, beyond=False):
    """sup and inf of (S[n] - S[m]) / (n - m) over n - m > N by double loop."""
    best, worst = -math.inf, math.inf
    n_max = len(S) - 1
    for m in range(0, n_max + 1):
        if beyond and m <= N:
            continue
        for n in range(m + N + 1, n_max + 1):
            r = (S[n] - S[m]) / (n - m)
            best = max(best, r)
            worst = min(worst, r)
    return best, worst


def log_norms(mats, x0):
    """L(n) = ln ||x(n)|| / ||x0|| by direct iteration (short horizons only)."""
    x = np.asarray(x0, dtype=float)
    out = [0.0]
    n0 = np.linalg.norm(x)
    for A in mats:
        x = A @ x
        out.append(math.log(np.linalg.norm(x) / n0))
    return np.array(out)


def sequential_qr(mats):
    """A(n) T(n) = T(n+1) B(n), T(0) = I, positive diagonal; numpy QR per step."""
    d = mats.shape[1]
    T = np.eye(d)
    Ts, Bs = [T], []
    for A in mats:
        Q, R = np.linalg.qr(A @ T)
        s = np.sign(np.diag(R))
        Q, R = Q * s, s[:, None] * R
        Ts.append(Q)
        Bs.append(R)
        T = Q
    return np.array(Ts), np.array(Bs)


def dyadic_exponent(n):
    return 1.0 if int(math.floor(math.log2(n + 1))) % 2 == 0 else -1.0


def periodic_window_extremes(values, n_max, N):
    """Extremes for a periodic scalar sequence through its log-sums."""
    S = np.concatenate([[0.0], np.cumsum(np.log(np.abs(
        [values[k % len(values)] for k in range(n_max)])))])
    return window_extremes(S, N)
