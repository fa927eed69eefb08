"""Bounded-variable simplex kernels with a dense explicit basis inverse.

Column layout: ``n`` structural columns followed by ``m`` row-activity columns.
Row ``i`` reads ``A[i] @ x[:n] - x[n + i] = 0``, so the activity column of row
``i`` is ``-e_i`` and its bounds are the row bounds.  Nonbasic status codes:
0 at lower bound, 1 at upper bound, 2 free at zero, 3 basic.

The structural matrix is held in CSC form (indptr, indices, data) with an
explicit row count ``m``.
"""
from __future__ import annotations

import numpy as np

from .._accel import kernel

AT_LO = 0
AT_HI = 1
FREE = 2
BASIC = 3

OPTIMAL = 0
INFEASIBLE = 1
ITER_LIMIT = 2
UNBOUNDED = 3
REFACTOR = 4


@kernel
def csc_matvec(Ap, Ai, Ax, m, v):
    out = np.zeros(m)
    for j in range(Ap.shape[0] - 1):
        vj = v[j]
        if vj != 0.0:
            for t in range(Ap[j], Ap[j + 1]):
                out[Ai[t]] += Ax[t] * vj
    return out


@kernel
def csc_rmatvec(Ap, Ai, Ax, y):
    n = Ap.shape[0] - 1
    out = np.zeros(n)
    for j in range(n):
        s = 0.0
        for t in range(Ap[j], Ap[j + 1]):
            s += Ax[t] * y[Ai[t]]
        out[j] = s
    return out


@kernel
def refactor(Ap, Ai, Ax, m, basis):
    """Explicit inverse of the basis matrix.

    Basic activity columns are signed unit vectors, so only the square block
    of basic structural columns on the rows without a basic activity column
    is inverted; the remaining rows of the inverse follow by substitution.
    """
    n = Ap.shape[0] - 1
    covered = np.zeros(m, dtype=np.bool_)
    k = 0
    for i in range(m):
        if basis[i] >= n:
            covered[basis[i] - n] = True
        else:
            k += 1
    urow = np.empty(k, dtype=np.int64)
    upos = np.full(m, -1, dtype=np.int64)
    u = 0
    for i in range(m):
        if not covered[i]:
            urow[u] = i
            upos[i] = u
            u += 1
    spos = np.empty(k, dtype=np.int64)
    M = np.zeros((k, k))
    s = 0
    for i in range(m):
        col = basis[i]
        if col < n:
            spos[s] = i
            for t in range(Ap[col], Ap[col + 1]):
                r = upos[Ai[t]]
                if r >= 0:
                    M[r, s] = Ax[t]
            s += 1
    Binv = np.zeros((m, m))
    Minv = np.ascontiguousarray(np.linalg.inv(M)) if k > 0 else M
    for a in range(k):
        for b in range(k):
            Binv[spos[a], urow[b]] = Minv[a, b]
    for i in range(m):
        col = basis[i]
        if col >= n:
            rho = col - n
            Binv[i, rho] = -1.0
            # activity of row rho = A[rho, S] x_S, expressed through Minv
    if k > 0:
        # rows of A restricted to covered rows and basic structural columns
        Ac = np.zeros((m, k))
        for a in range(k):
            col = basis[spos[a]]
            for t in range(Ap[col], Ap[col + 1]):
                if covered[Ai[t]]:
                    Ac[Ai[t], a] = Ax[t]
        P = Ac @ Minv
        for i in range(m):
            col = basis[i]
            if col >= n:
                rho = col - n
                for b in range(k):
                    Binv[i, urow[b]] = P[rho, b]
    return Binv


@kernel
def repair_basis(Ap, Ai, Ax, Binv, basis, enter, leaving):
    """Pivot the columns in ``enter`` into the basis, each replacing a column
    flagged in ``leaving``.  Returns False when no stable pivot exists."""
    for e in range(enter.shape[0]):
        q = enter[e]
        w = _column(Ap, Ai, Ax, Binv, q)
        r = -1
        best = 0.0
        wmax = 0.0
        for i in range(basis.shape[0]):
            wmax = max(wmax, abs(w[i]))
            if leaving[basis[i]] and abs(w[i]) > best:
                best = abs(w[i])
                r = i
        if r == -1 or best < 1e-5 * max(1.0, wmax):
            return False
        leaving[basis[r]] = False
        basis[r] = q
        _pivot_update(Binv, w, r)
    return True


@kernel
def recompute_primal(Ap, Ai, Ax, m, x, basis, status, Binv):
    n = Ap.shape[0] - 1
    xs = x[:n].copy()
    for i in range(m):
        if basis[i] < n:
            xs[basis[i]] = 0.0
    r = -csc_matvec(Ap, Ai, Ax, m, xs)
    for i in range(m):
        if status[n + i] != BASIC:
            r[i] += x[n + i]
    xb = Binv @ r
    for i in range(m):
        x[basis[i]] = xb[i]


@kernel
def recompute_duals(Ap, Ai, Ax, m, c, basis, status, Binv, d):
    n = Ap.shape[0] - 1
    cb = np.empty(m)
    for i in range(m):
        cb[i] = c[basis[i]]
    y = cb @ Binv
    d[:n] = c[:n] - csc_rmatvec(Ap, Ai, Ax, y)
    d[n:] = c[n:] + y
    for i in range(m):
        d[basis[i]] = 0.0
    return y


@kernel
def _column(Ap, Ai, Ax, Binv, q):
    n = Ap.shape[0] - 1
    m = Binv.shape[0]
    if q < n:
        w = np.zeros(m)
        for t in range(Ap[q], Ap[q + 1]):
            w += Binv[:, Ai[t]] * Ax[t]
        return w
    return -Binv[:, q - n].copy()


@kernel
def _pivot_update(Binv, w, r):
    piv = w[r]
    row = Binv[r] / piv
    for i in range(Binv.shape[0]):
        if i != r and w[i] != 0.0:
            Binv[i] -= w[i] * row
    Binv[r] = row


@kernel
def dual_simplex(Ap, Ai, Ax, m, c, lo, hi, basis, status, x, Binv, d,
                 max_iter, ptol, dtol, pivtol, refac_every):
    """Bounded dual simplex from a dual feasible basis.

    Returns (code, iterations); REFACTOR asks the caller for a fresh inverse.  Leaving row by normalized infeasibility,
    entering column by a Harris two-pass ratio test; falls back to the
    lowest-index rule after a run of degenerate pivots.
    """
    n = Ap.shape[0] - 1
    N = n + m
    it = 0
    since = 0
    degen = 0
    alpha = np.empty(N)
    while it < max_iter:
        if since >= refac_every:
            return REFACTOR, it
        bland = degen > 50
        r = -1
        best = 0.0
        for i in range(m):
            k = basis[i]
            v = x[k]
            if v < lo[k] - ptol:
                inf = lo[k] - v
            elif v > hi[k] + ptol:
                inf = v - hi[k]
            else:
                continue
            if bland:
                if r == -1 or k < basis[r]:
                    r = i
            else:
                wn = 0.0
                for jj in range(m):
                    wn += Binv[i, jj] * Binv[i, jj]
                score = inf * inf / wn
                if score > best:
                    best = score
                    r = i
        if r == -1:
            return OPTIMAL, it
        k = basis[r]
        below = x[k] < lo[k]
        rho = Binv[r].copy()
        alpha[:n] = csc_rmatvec(Ap, Ai, Ax, rho)
        alpha[n:] = -rho
        sgn = -1.0 if below else 1.0
        tmax = np.inf
        for j in range(N):
            st = status[j]
            if st == BASIC or lo[j] == hi[j]:
                continue
            a = sgn * alpha[j]
            if st == AT_LO:
                if a <= pivtol:
                    continue
            elif st == AT_HI:
                if a >= -pivtol:
                    continue
            elif abs(a) <= pivtol:
                continue
            val = (abs(d[j]) + dtol) / abs(a)
            if val < tmax:
                tmax = val
        if tmax == np.inf:
            return INFEASIBLE, it
        q = -1
        bestval = 0.0
        for j in range(N):
            st = status[j]
            if st == BASIC or lo[j] == hi[j]:
                continue
            a = sgn * alpha[j]
            if st == AT_LO:
                if a <= pivtol:
                    continue
            elif st == AT_HI:
                if a >= -pivtol:
                    continue
            elif abs(a) <= pivtol:
                continue
            ratio = abs(d[j]) / abs(a)
            if bland:
                if q == -1 or ratio < bestval - 1e-12:
                    bestval = ratio
                    q = j
            elif ratio <= tmax and abs(a) > bestval:
                bestval = abs(a)
                q = j
        t = abs(d[q]) / abs(alpha[q])
        for j in range(N):
            if status[j] != BASIC:
                d[j] -= t * sgn * alpha[j]
        d[q] = 0.0
        d[k] = t if below else -t
        w = _column(Ap, Ai, Ax, Binv, q)
        target = lo[k] if below else hi[k]
        delta = (x[k] - target) / w[r]
        for i in range(m):
            x[basis[i]] -= w[i] * delta
        x[q] += delta
        x[k] = target
        status[k] = AT_LO if below else AT_HI
        status[q] = BASIC
        basis[r] = q
        _pivot_update(Binv, w, r)
        if t < 1e-12:
            degen += 1
        else:
            degen = 0
        it += 1
        since += 1
    return ITER_LIMIT, it


@kernel
def primal_simplex(Ap, Ai, Ax, m, c, lo, hi, basis, status, x, Binv, d,
                   max_iter, ptol, dtol, pivtol, refac_every):
    """Bounded primal simplex from a primal feasible basis (Dantzig pricing,
    lowest-index rule after a run of degenerate pivots)."""
    n = Ap.shape[0] - 1
    N = n + m
    it = 0
    since = 0
    degen = 0
    alpha = np.empty(N)
    while it < max_iter:
        if since >= refac_every:
            return REFACTOR, it
        bland = degen > 50
        q = -1
        best = 0.0
        dirn = 0.0
        for j in range(N):
            st = status[j]
            if st == BASIC or lo[j] == hi[j]:
                continue
            dj = d[j]
            if st == AT_LO:
                if dj >= -dtol:
                    continue
                s = 1.0
            elif st == AT_HI:
                if dj <= dtol:
                    continue
                s = -1.0
            else:
                if abs(dj) <= dtol:
                    continue
                s = -1.0 if dj > 0 else 1.0
            if bland:
                q = j
                dirn = s
                break
            if abs(dj) > best:
                best = abs(dj)
                q = j
                dirn = s
        if q == -1:
            return OPTIMAL, it
        w = _column(Ap, Ai, Ax, Binv, q)
        theta = np.inf
        r = -1
        bw = 0.0
        for i in range(m):
            k = basis[i]
            dx = -dirn * w[i]
            if dx < -pivtol:
                if lo[k] > -np.inf:
                    lim = max(x[k] - lo[k], 0.0) / -dx
                else:
                    continue
            elif dx > pivtol:
                if hi[k] < np.inf:
                    lim = max(hi[k] - x[k], 0.0) / dx
                else:
                    continue
            else:
                continue
            if lim < theta - 1e-12 or (lim <= theta + 1e-12 and abs(w[i]) > bw):
                theta = min(theta, lim)
                r = i
                bw = abs(w[i])
        span = hi[q] - lo[q]
        if span < theta:
            # bound flip of the entering column
            for i in range(m):
                x[basis[i]] -= dirn * w[i] * span
            if status[q] == AT_LO:
                x[q] = hi[q]
                status[q] = AT_HI
            else:
                x[q] = lo[q]
                status[q] = AT_LO
            it += 1
            degen = 0
            continue
        if r == -1:
            return UNBOUNDED, it
        k = basis[r]
        rho = Binv[r].copy()
        alpha[:n] = csc_rmatvec(Ap, Ai, Ax, rho)
        alpha[n:] = -rho
        for i in range(m):
            x[basis[i]] -= dirn * w[i] * theta
        x[q] += dirn * theta
        if -dirn * w[r] < 0:
            x[k] = lo[k]
            status[k] = AT_LO
        else:
            x[k] = hi[k]
            status[k] = AT_HI
        ratio = d[q] / alpha[q]
        for j in range(N):
            if status[j] != BASIC:
                d[j] -= ratio * alpha[j]
        d[k] = -ratio
        d[q] = 0.0
        status[q] = BASIC
        basis[r] = q
        _pivot_update(Binv, w, r)
        if theta < 1e-12:
            degen += 1
        else:
            degen = 0
        it += 1
        since += 1
    return ITER_LIMIT, it
