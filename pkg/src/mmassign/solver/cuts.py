"""Gomory mixed-integer cuts read off an optimal simplex tableau."""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from . import kernels as K


def integral_rows(A: sp.csr_matrix, intmask: np.ndarray) -> np.ndarray:
    """Rows whose activity is integer at every integer point (integer
    coefficients on integer columns only)."""
    A = sp.csr_matrix(A)
    out = np.zeros(A.shape[0], dtype=bool)
    for i in range(A.shape[0]):
        cols = A.indices[A.indptr[i]:A.indptr[i + 1]]
        vals = A.data[A.indptr[i]:A.indptr[i + 1]]
        out[i] = bool(np.all(intmask[cols])) and bool(np.all(vals == np.round(vals)))
    return out


def _frac(v):
    return v - np.floor(v)


def gmi_cuts(lp, intmask, row_int, max_cuts=50, min_frac=1e-3, max_dyn=1e8, min_eff=1e-8):
    """Cuts ``pi @ x >= pi0`` valid for all integer points within the LP's
    current column bounds, each violated by the current LP optimum.

    ``intmask`` flags integer structural columns, ``row_int`` integer row
    activities.  Returns a list of (pi, pi0, efficacy) sorted by efficacy.
    """
    n, m = lp.n, lp.m
    x = lp.x
    lo, hi = lp.lo, lp.hi
    colint = np.concatenate([intmask, row_int[:m]])
    st = lp.status
    nonbasic = st != K.BASIC
    fixed = lo == hi
    use = nonbasic & ~fixed
    at_hi = st == K.AT_HI
    # integrality of the shifted nonbasic column also needs an integral bound
    bound = np.where(use, np.where(at_hi, hi, lo), 0.0)
    int_shift = colint & (np.abs(bound - np.round(bound)) < 1e-9)
    cands = []
    for r in range(m):
        k = lp.basis[r]
        if not colint[k]:
            continue
        f0 = _frac(x[k])
        if f0 < min_frac or f0 > 1 - min_frac:
            continue
        cands.append((-min(f0, 1 - f0), r))
    cands.sort()
    out = []
    for _, r in cands[: 4 * max_cuts]:
        k = lp.basis[r]
        f0 = _frac(x[k])
        alpha = lp.tableau_row(r)
        a = np.where(at_hi, -alpha, alpha)
        a[~use] = 0.0
        a[np.abs(a) < 1e-11] = 0.0
        fj = _frac(a)
        g = np.where(a >= 0, a / f0, -a / (1 - f0))
        gi = np.where(fj <= f0, fj / f0, (1 - fj) / (1 - f0))
        g = np.where(int_shift, gi, g)
        g[~use] = 0.0
        # sum g_j s_j >= 1 with s_j = x_j - lo_j (at lower) or hi_j - x_j (at upper)
        sgn = np.where(at_hi, -1.0, 1.0)
        coef = g * sgn
        rhs = 1.0 + float(np.sum(g * sgn * bound))
        pi = coef[:n].copy()
        rc = coef[n:]
        nzr = np.nonzero(rc)[0]
        if len(nzr):
            pi += lp.rows[nzr].T @ rc[nzr]
        # clean tiny coefficients conservatively
        lo_s, hi_s = lo[:n], hi[:n]
        small = (np.abs(pi) < 1e-9) & (pi != 0)
        if small.any():
            rhs -= float(np.sum(np.where(pi[small] > 0, pi[small] * hi_s[small], pi[small] * lo_s[small])))
            pi[small] = 0.0
        nz = np.abs(pi[pi != 0])
        if len(nz) == 0 or nz.max() / nz.min() > max_dyn:
            continue
        scale = float(nz.max())
        pi /= scale
        rhs /= scale
        # a little slack against round-off in the tableau row
        rhs -= 1e-9 * max(1.0, abs(rhs))
        viol = rhs - float(pi @ x[:n])
        eff = viol / float(np.linalg.norm(pi))
        if eff < min_eff:
            continue
        out.append((pi, rhs, eff))
    out.sort(key=lambda c: -c[2])
    return out[:max_cuts]
