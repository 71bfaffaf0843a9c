"""Compiled inner loops.

Everything here is sequential in time and works on plain float64 arrays, so
the callers in the public modules only have to materialize coefficient blocks
and interpret the results.
"""

import numpy as np
import numba

jit = numba.njit(cache=True, nogil=True)


@jit
def _step(Ak, v, w):
    d = v.shape[0]
    r2 = 0.0
    for i in range(d):
        acc = 0.0
        for j in range(d):
            acc += Ak[i, j] * v[j]
        w[i] = acc
        r2 += acc * acc
    return np.sqrt(r2)


@jit
def propagate(A, x0):
    """Normalized forward iteration.  Returns unit directions and log-norms."""
    n = A.shape[0]
    d = A.shape[1]
    dirs = np.empty((n + 1, d))
    logn = np.empty(n + 1)
    v = x0 / np.sqrt(np.sum(x0 * x0))
    w = np.empty(d)
    dirs[0] = v
    logn[0] = 0.0
    acc = 0.0
    for k in range(n):
        r = _step(A[k], v, w)
        for i in range(d):
            v[i] = w[i] / r
        acc += np.log(r)
        dirs[k + 1] = v
        logn[k + 1] = acc
    return dirs, logn


@jit
def propagate_logn(A, x0):
    """Same as `propagate` but only keeps the cumulative log-norm."""
    n = A.shape[0]
    d = A.shape[1]
    logn = np.empty(n + 1)
    v = x0 / np.sqrt(np.sum(x0 * x0))
    w = np.empty(d)
    logn[0] = 0.0
    acc = 0.0
    for k in range(n):
        r = _step(A[k], v, w)
        for i in range(d):
            v[i] = w[i] / r
        acc += np.log(r)
        logn[k + 1] = acc
    return logn


@jit
def max_slope(S, N, m0):
    """Exact max of (S[n]-S[m])/(n-m) over n-m > N, m >= m0, n <= len(S)-1.

    Sweeps n upward while keeping the lower convex hull of the admissible
    prefix points (m, S[m]); the best m for a query point to the right of all
    of them is the tangent point, found by binary search on the hull.
    Returns (value, n, m); value is -inf when no window qualifies.
    """
    n_max = S.shape[0] - 1
    hull = np.empty(n_max + 1, np.int64)
    k = 0
    best = -np.inf
    bn = -1
    bm = -1
    for n in range(m0 + N + 1, n_max + 1):
        m = n - N - 1
        sm = S[m]
        while k >= 2:
            a = hull[k - 2]
            b = hull[k - 1]
            cr = (b - a) * (sm - S[a]) - (S[b] - S[a]) * (m - a)
            if cr <= 0.0:
                k -= 1
            else:
                break
        hull[k] = m
        k += 1
        sn = S[n]
        lo = 0
        hi = k - 1
        while lo < hi:
            mid = (lo + hi) // 2
            a = hull[mid]
            b = hull[mid + 1]
            if (sn - S[a]) / (n - a) >= (sn - S[b]) / (n - b):
                hi = mid
            else:
                lo = mid + 1
        j = hull[lo]
        val = (sn - S[j]) / (n - j)
        if val > best:
            best = val
            bn = n
            bm = j
    return best, bn, bm


@jit
def window_extremes(S, thresholds, beyond):
    """Sup and inf of the window slopes of S for every threshold.

    Output rows: sup, inf; plus the arg windows (n, m) of each.
    With `beyond` the window start must also exceed the threshold.
    """
    t = thresholds.shape[0]
    sup = np.empty(t)
    inf = np.empty(t)
    args = np.empty((t, 4), np.int64)
    neg = -S
    for i in range(t):
        N = thresholds[i]
        m0 = N + 1 if beyond else 0
        v, n1, m1 = max_slope(S, N, m0)
        w, n2, m2 = max_slope(neg, N, m0)
        sup[i] = v
        inf[i] = -w
        args[i, 0] = n1
        args[i, 1] = m1
        args[i, 2] = n2
        args[i, 3] = m2
    return sup, inf, args


@jit
def growth_constant(S, gamma, upper):
    """Smallest K with S[n]-S[m] <= ln K + gamma (n-m) for all n > m (upper),
    or S[n]-S[m] >= -ln K + gamma (n-m) (lower).  Returns ln K."""
    n_max = S.shape[0] - 1
    best = 0.0
    if upper:
        run = S[0]
        for n in range(1, n_max + 1):
            g = S[n] - gamma * n
            if g - run > best:
                best = g - run
            if g < run:
                run = g
    else:
        run = S[0]
        for n in range(1, n_max + 1):
            g = S[n] - gamma * n
            if run - g > best:
                best = run - g
            if g > run:
                run = g
    return best


@jit
def qr_sweep(A, T0, stride):
    """Forward QR recursion A(k) T(k) = T(k+1) B(k) with positive diag(B).

    T0 may be rectangular (d x p) to follow a p-frame.  Returns B, frame
    checkpoints every `stride` steps, the final frame, the worst residual
    ||T(k+1)B(k) - A(k)T(k)||_F and the worst ||T^T T - I||_F.
    """
    n = A.shape[0]
    d = T0.shape[0]
    p = T0.shape[1]
    B = np.zeros((n, p, p))
    cps = np.empty((n // stride + 1, d, p))
    T = T0.copy()
    resid = 0.0
    orth = 0.0
    for k in range(n):
        if k % stride == 0:
            cps[k // stride] = T
        M = np.ascontiguousarray(A[k]) @ T
        Q, R = np.linalg.qr(M)
        for i in range(p):
            if R[i, i] < 0.0:
                for r in range(d):
                    Q[r, i] = -Q[r, i]
                for c in range(p):
                    R[i, c] = -R[i, c]
            for c in range(i):
                R[i, c] = 0.0
        Q = np.ascontiguousarray(Q)
        R = np.ascontiguousarray(R)
        E = Q @ R - M
        e = np.sqrt(np.sum(E * E))
        if e > resid:
            resid = e
        G = np.ascontiguousarray(Q.T) @ Q
        for i in range(p):
            G[i, i] -= 1.0
        g = np.sqrt(np.sum(G * G))
        if g > orth:
            orth = g
        B[k] = R
        T = Q
    if n % stride == 0:
        cps[n // stride] = T
    return B, cps, T, resid, orth


@jit
def qr_replay(A, T):
    """Frames T(k..k+len(A)) from T(k), same sign convention as qr_sweep."""
    n = A.shape[0]
    d = T.shape[0]
    p = T.shape[1]
    out = np.empty((n + 1, d, p))
    out[0] = T
    for k in range(n):
        Q, R = np.linalg.qr(np.ascontiguousarray(A[k]) @ T)
        for i in range(p):
            if R[i, i] < 0.0:
                for r in range(d):
                    Q[r, i] = -Q[r, i]
        T = np.ascontiguousarray(Q)
        out[k + 1] = T
    return out


@jit
def qr_backward(Ainv, W_end):
    """Backward QR recursion on the inverse coefficients.

    With A(k)^{-1} W(k+1) = W(k) R(k) the forward map in the W frames is the
    upper triangular U(k) = R(k)^{-1}: A(k) W(k) = W(k+1) U(k).  The leading
    columns of W(k) converge to the most contracting directions, so the
    leading p x p blocks of U carry the slowest forward behaviour.
    """
    n = Ainv.shape[0]
    d = W_end.shape[0]
    U = np.zeros((n, d, d))
    W = W_end.copy()
    for k in range(n - 1, -1, -1):
        Q, R = np.linalg.qr(np.ascontiguousarray(Ainv[k]) @ W)
        for i in range(d):
            if R[i, i] < 0.0:
                for r in range(d):
                    Q[r, i] = -Q[r, i]
                for c in range(d):
                    R[i, c] = -R[i, c]
            for c in range(i):
                R[i, c] = 0.0
        Ui = np.linalg.inv(R)
        for i in range(d):
            for c in range(i):
                Ui[i, c] = 0.0
        U[k] = Ui
        W = np.ascontiguousarray(Q)
    return U, W


@jit
def window_product_logsv(A, Ainv, k_refac, spread_cap):
    """log sigma_max and log sigma_min of A[-1] ... A[0].

    Both the product and the product of inverses are carried as Q * e^c * R
    with Q re-orthonormalized every k_refac factors (or earlier once its
    column norms spread beyond spread_cap); sigma_min comes from the
    inverse product, so neither quantity loses relative accuracy.
    """
    n = A.shape[0]
    d = A.shape[1]
    out = np.empty(2)
    for side in range(2):
        Q = np.eye(d)
        R = np.eye(d)
        c = 0.0
        since = 0
        for j in range(n):
            if side == 0:
                Q = np.ascontiguousarray(A[j]) @ Q
            else:
                Q = np.ascontiguousarray(Ainv[n - 1 - j]) @ Q
            since += 1
            if since >= k_refac or j == n - 1:
                Q1, R1 = np.linalg.qr(Q)
                Q = np.ascontiguousarray(Q1)
                R = np.ascontiguousarray(R1) @ R
                s = np.max(np.abs(R))
                R = R / s
                c += np.log(s)
                since = 0
            else:
                hi = 0.0
                lo = np.inf
                for i in range(d):
                    x = np.sqrt(np.sum(Q[:, i] * Q[:, i]))
                    hi = max(hi, x)
                    lo = min(lo, x)
                if lo > 0.0 and hi / lo > spread_cap:
                    Q1, R1 = np.linalg.qr(Q)
                    Q = np.ascontiguousarray(Q1)
                    R = np.ascontiguousarray(R1) @ R
                    s = np.max(np.abs(R))
                    R = R / s
                    c += np.log(s)
                    since = 0
        sv = np.linalg.svd(R)[1]
        out[side] = c + np.log(sv[0])
    return out[0], -out[1]
