"""LP engine: bounded dual simplex with warm starts and lazily activated rows."""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import kernels as K

BIG = 1e9


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded" | "limit"
    x: np.ndarray
    objective: float
    iterations: int
    duals: np.ndarray | None = None


@dataclass
class Basis:
    basis: np.ndarray
    status: np.ndarray
    x: np.ndarray
    m: int


class SimplexLP:
    """min c.x  s.t.  rlo <= A x <= rhi,  lo <= x <= hi.

    ``lazy`` rows (same form) are valid for the problem but kept out of the
    working LP until the current optimum violates them.
    """

    def __init__(self, c, A, rlo, rhi, lo, hi, lazy=None,
                 feas_tol=1e-7, dual_tol=1e-9, piv_tol=1e-7,
                 refactor_every=100, max_iter=200000):
        self.n = len(c)
        self.c0 = np.asarray(c, dtype=float)
        A = sp.csr_matrix(A, shape=(len(rlo), self.n)) if A is not None else sp.csr_matrix((0, self.n))
        self.rows = A
        self.rlo = np.asarray(rlo, dtype=float).copy()
        self.rhi = np.asarray(rhi, dtype=float).copy()
        self.lo0 = np.asarray(lo, dtype=float).copy()
        self.hi0 = np.asarray(hi, dtype=float).copy()
        self.boxed = ~np.isfinite(self.lo0) | ~np.isfinite(self.hi0)
        self.lazy = None
        if lazy is not None and lazy[0].shape[0] > 0:
            self.lazy = (sp.csr_matrix(lazy[0]), np.asarray(lazy[1], float), np.asarray(lazy[2], float))
            self.lazy_active = np.zeros(self.lazy[0].shape[0], dtype=bool)
        self.ptol = feas_tol
        self.dtol = dual_tol
        self.pivtol = piv_tol
        self.refac = refactor_every
        self.max_iter = max_iter
        self.total_iters = 0
        self.deadline = None  # perf_counter value after which solve() gives up
        self._build()
        self._cold_start()

    # -- setup -------------------------------------------------------------
    def _build(self):
        csc = self.rows.tocsc()
        csc.sort_indices()
        self.Ap = csc.indptr.astype(np.int64)
        self.Ai = csc.indices.astype(np.int64)
        self.Ax = csc.data.astype(float)
        self.m = self.rows.shape[0]
        self.c = np.concatenate([self.c0, np.zeros(self.m)])
        lo = np.where(np.isfinite(self.lo0), self.lo0, -BIG)
        hi = np.where(np.isfinite(self.hi0), self.hi0, BIG)
        self.lo = np.concatenate([lo, self.rlo])
        self.hi = np.concatenate([hi, self.rhi])

    def _cold_start(self):
        n, m = self.n, self.m
        self.status = np.full(n + m, K.BASIC, dtype=np.int8)
        xs = np.where(self.c0 >= 0, self.lo[:n], self.hi[:n])
        self.status[:n] = np.where(self.c0 >= 0, K.AT_LO, K.AT_HI)
        self.basis = np.arange(n, n + m, dtype=np.int64)
        self.x = np.concatenate([xs, self.rows @ xs])
        self.Binv = -np.eye(m)
        self.d = self.c.copy()
        self.since = 0

    def _slack_basis(self):
        """Fall back to the all-activity basis (always nonsingular)."""
        n, m = self.n, self.m
        c0 = self.c[:n]
        self.status = np.full(n + m, K.BASIC, dtype=np.int8)
        self.status[:n] = np.where(c0 >= 0, K.AT_LO, K.AT_HI)
        self.x[:n] = np.where(c0 >= 0, self.lo[:n], self.hi[:n])
        self.basis = np.arange(n, n + m, dtype=np.int64)
        self.Binv = -np.eye(m)

    def _refresh(self, refactor=True):
        if refactor or self.Binv.shape[0] != self.m:
            if self.m:
                try:
                    self.Binv = K.refactor(self.Ap, self.Ai, self.Ax, self.m, self.basis)
                except np.linalg.LinAlgError:
                    self._slack_basis()
            else:
                self.Binv = np.zeros((0, 0))
            self.since = 0
        K.recompute_primal(self.Ap, self.Ai, self.Ax, self.m, self.x, self.basis, self.status, self.Binv)
        return K.recompute_duals(self.Ap, self.Ai, self.Ax, self.m, self.c, self.basis, self.status, self.Binv, self.d)

    # -- warm start support -----------------------------------------------
    def set_bounds(self, lo, hi):
        """Replace structural bounds; nonbasic columns move to their bound."""
        lo = np.where(np.isfinite(lo), lo, -BIG)
        hi = np.where(np.isfinite(hi), hi, BIG)
        self.lo[: self.n] = lo
        self.hi[: self.n] = hi
        st = self.status[: self.n]
        xs = self.x[: self.n]
        xs[st == K.AT_LO] = lo[st == K.AT_LO]
        xs[st == K.AT_HI] = hi[st == K.AT_HI]
        self._xstale = True

    def save(self) -> Basis:
        return Basis(self.basis.copy(), self.status.copy(), self.x.copy(), self.m)

    def restore(self, b: Basis):
        m0 = b.m
        basis = np.concatenate([b.basis, np.arange(self.n + m0, self.n + self.m, dtype=np.int64)])
        status = np.concatenate([b.status, np.full(self.m - m0, K.BASIC, dtype=np.int8)])
        cur = self.status == K.BASIC
        want = status == K.BASIC
        enter = np.nonzero(want & ~cur)[0].astype(np.int64)
        leaving = cur & ~want
        self.status = status
        self.x = np.concatenate([b.x, np.zeros(self.m - m0)])
        st = self.status[: self.n]
        self.x[: self.n][st == K.AT_LO] = self.lo[: self.n][st == K.AT_LO]
        self.x[: self.n][st == K.AT_HI] = self.hi[: self.n][st == K.AT_HI]
        # a handful of pivots is much cheaper than a fresh inverse
        if (not getattr(self, "_stale", True) and len(enter) <= max(8, self.m // 8)
                and self.since + len(enter) < self.refac):
            b_cur = self.basis.copy()
            if K.repair_basis(self.Ap, self.Ai, self.Ax, self.Binv, b_cur, enter, leaving.copy()):
                self.basis = b_cur
                self.since += len(enter)
                self._xstale = True
                return
        self.basis = basis
        self._stale = True

    def _add_rows(self, idx):
        L, llo, lhi = self.lazy
        self.lazy_active[idx] = True
        self.append_rows(L[idx], llo[idx], lhi[idx])

    def append_rows(self, new, rlo, rhi):
        """Add rows ``rlo <= new @ x <= rhi`` with their activity columns basic."""
        new = sp.csr_matrix(new, shape=(new.shape[0], self.n))
        m0 = self.m
        self.rows = sp.vstack([self.rows, new]).tocsr()
        self.rlo = np.concatenate([self.rlo, rlo])
        self.rhi = np.concatenate([self.rhi, rhi])
        lo_s, hi_s = self.lo[: self.n].copy(), self.hi[: self.n].copy()
        self._build()
        self.lo[: self.n], self.hi[: self.n] = lo_s, hi_s
        k = new.shape[0]
        act = new @ self.x[: self.n]
        self.x = np.concatenate([self.x, act])
        self.status = np.concatenate([self.status, np.full(k, K.BASIC, dtype=np.int8)])
        # bordered inverse: the new activity columns enter the basis
        bcols = self.basis
        struct = bcols < self.n
        Bn = np.zeros((k, m0))
        if struct.any():
            Bn[:, struct] = new[:, bcols[struct]].toarray()
        Binv = np.zeros((m0 + k, m0 + k))
        Binv[:m0, :m0] = self.Binv
        Binv[m0:, :m0] = Bn @ self.Binv
        Binv[m0:, m0:] = -np.eye(k)
        self.Binv = Binv
        self.basis = np.concatenate([self.basis, np.arange(self.n + m0, self.n + m0 + k, dtype=np.int64)])
        self.d = np.concatenate([self.d, np.zeros(k)])

    def tableau_row(self, r):
        """Coefficients of row ``r`` of B^-1 [A, -I] over all columns."""
        rho = self.Binv[r]
        return np.concatenate([self.rows.T @ rho, -rho])

    # -- solve -------------------------------------------------------------
    def _dual_infeasible(self):
        st = self.status
        fixed = self.lo == self.hi
        bad = ((st == K.AT_LO) & (self.d < -self.dtol * 10)) | ((st == K.AT_HI) & (self.d > self.dtol * 10))
        return np.any(bad & ~fixed)

    def _primal_infeasibility(self):
        xb = self.x[self.basis]
        lo, hi = self.lo[self.basis], self.hi[self.basis]
        if len(xb) == 0:
            return 0.0
        return float(max(np.max(lo - xb), np.max(xb - hi), 0.0))

    def solve(self) -> LPResult:
        if getattr(self, "_stale", True):
            y = self._refresh()
            self._stale = False
        elif getattr(self, "_xstale", False):
            y = self._refresh(refactor=False)
        self._xstale = False
        args = lambda: (self.Ap, self.Ai, self.Ax, self.m, self.c, self.lo, self.hi, self.basis,  # noqa: E731
                        self.status, self.x, self.Binv, self.d)
        iters = 0
        confirmed_infeasible = False
        for _round in range(100000):
            if self.deadline is not None and time.perf_counter() > self.deadline:
                return self._result("limit", iters)
            if self._dual_infeasible():
                # restore dual feasibility by bound flips on boxed columns
                st = self.status
                flip_up = (st == K.AT_LO) & (self.d < -self.dtol) & (self.hi < BIG)
                flip_dn = (st == K.AT_HI) & (self.d > self.dtol) & (self.lo > -BIG)
                st[flip_up] = K.AT_HI
                self.x[flip_up] = self.hi[flip_up]
                st[flip_dn] = K.AT_LO
                self.x[flip_dn] = self.lo[flip_dn]
                K.recompute_primal(self.Ap, self.Ai, self.Ax, self.m, self.x, self.basis, self.status, self.Binv)
            if self._dual_infeasible():
                if self._primal_infeasibility() <= self.ptol:
                    code, it = K.primal_simplex(*args(), self.max_iter - iters, self.ptol, self.dtol, self.pivtol,
                                                self.refac - self.since)
                    iters += it
                    self.since += it
                    if code == K.REFACTOR:
                        y = self._refresh()
                        continue
                    if code == K.UNBOUNDED:
                        return self._result("unbounded", iters)
                    if code == K.ITER_LIMIT:
                        return self._result("limit", iters)
                    y = self._refresh(self.since >= self.refac)
                    continue
            code, it = K.dual_simplex(*args(), self.max_iter - iters, self.ptol, self.dtol, self.pivtol,
                                      self.refac - self.since)
            iters += it
            self.since += it
            if code == K.REFACTOR:
                y = self._refresh()
                continue
            if code == K.ITER_LIMIT:
                return self._result("limit", iters)
            # an infeasibility verdict is confirmed on a fresh factorization
            y = self._refresh(self.since >= self.refac or code == K.INFEASIBLE or confirmed_infeasible)
            if code == K.INFEASIBLE:
                if confirmed_infeasible:
                    return self._result("infeasible", iters)
                confirmed_infeasible = True
                continue
            confirmed_infeasible = False
            if self._primal_infeasibility() > self.ptol:
                continue
            if self._dual_infeasible():
                continue
            if self.lazy is not None and self._activate_lazy():
                y = None
                continue
            if np.any(self.boxed & (np.abs(self.x[: self.n]) >= BIG * 0.999)):
                return self._result("unbounded", iters)
            res = self._result("optimal", iters)
            res.duals = y
            return res
        return self._result("limit", iters)

    def _activate_lazy(self, cap=200):
        L, llo, lhi = self.lazy
        act = L @ self.x[: self.n]
        viol = np.maximum(llo - act, act - lhi)
        viol[self.lazy_active] = 0.0
        idx = np.nonzero(viol > self.ptol)[0]
        if len(idx) == 0:
            return False
        if len(idx) > cap:
            idx = idx[np.argsort(-viol[idx], kind="stable")[:cap]]
            idx.sort()
        self._add_rows(idx)
        self._refresh(refactor=self.since >= self.refac)
        self._stale = False
        return True

    def _result(self, status, iters):
        self.total_iters += iters
        xs = self.x[: self.n].copy()
        return LPResult(status, xs, float(self.c0 @ xs), iters)


def solve_lp(c, A, rlo, rhi, lo, hi, **kw) -> LPResult:
    return SimplexLP(c, A, rlo, rhi, lo, hi, **kw).solve()
