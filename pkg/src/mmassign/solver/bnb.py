"""Branch-and-bound over the simplex LP core."""
from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .cuts import gmi_cuts, integral_rows
from .lp import SimplexLP
from .program import MathProgram


@dataclass
class SolverOptions:
    gap_tol: float = 1e-6
    feas_tol: float = 1e-7
    int_tol: float = 1e-6
    node_limit: int = 1_000_000
    time_limit: float = 3600.0
    branching: str = "most_fractional"
    seed: int = 0
    threads: int = 1
    exact_check: bool = True
    cut_rounds: int = 30
    dive_every: int = 200

    def __post_init__(self):
        if min(self.gap_tol, self.feas_tol, self.int_tol) <= 0:
            raise ValueError("tolerances must be positive")


@dataclass
class Solution:
    status: str  # Optimal | Feasible | Infeasible | Unbounded | Limit
    values: np.ndarray | None
    objective: float
    bound: float
    gap: float
    nodes: int
    wall_time: float
    names: list = field(default_factory=list)
    lp_iterations: int = 0
    exact_violations: list = field(default_factory=list)

    def value(self, name):
        return float(self.values[self.names.index(name)])

    def as_dict(self):
        if self.values is None:
            return {}
        return {n: float(v) for n, v in zip(self.names, self.values)}


def _lp_engine(prog: MathProgram, opts: SolverOptions):
    hard, lazy = prog.split_rows()
    A, rlo, rhi = prog.matrix(hard)
    lazy_data = prog.matrix(lazy) if lazy else None
    lo, hi = prog.bounds()
    return SimplexLP(prog.c_vector(), A, rlo, rhi, lo, hi, lazy=lazy_data, feas_tol=opts.feas_tol)


def solve_lp_relaxation(prog: MathProgram, opts: SolverOptions | None = None) -> Solution:
    """Solve with integrality dropped."""
    opts = opts or SolverOptions()
    t0 = time.perf_counter()
    if prog.quad:
        raise ValueError("declared bilinear terms must be linearized before solving")
    lp = _lp_engine(prog, opts)
    res = lp.solve()
    names = [v.name for v in prog.variables]
    wall = time.perf_counter() - t0
    if res.status != "optimal":
        status = {"infeasible": "Infeasible", "unbounded": "Unbounded"}.get(res.status, "Limit")
        return Solution(status, None, math.inf, -math.inf, math.inf, 1, wall, names, res.iterations)
    obj = res.objective + prog.obj_constant
    sol = Solution("Optimal", res.x, obj, obj, 0.0, 1, wall, names, res.iterations)
    sol.duals = res.duals
    return sol


def _rel_gap(inc, bound):
    if not math.isfinite(inc):
        return math.inf
    return max(0.0, inc - bound) / max(1.0, abs(inc))


_CUT_TIERS = (
    dict(min_frac=0.01, max_dyn=1e6, min_eff=1e-6),
    dict(min_frac=1e-3, max_dyn=1e8, min_eff=1e-8),
)


class BranchAndBound:
    """Best-bound search with depth-first plunging.

    Branching picks the most fractional integer column (lowest index on ties),
    preferring primitive columns over implied-integer aggregates; the down
    branch is explored first.  The search is fully deterministic.
    """

    def __init__(self, prog: MathProgram, opts: SolverOptions | None = None):
        if prog.quad:
            raise ValueError("declared bilinear terms must be linearized before solving")
        self.prog = prog
        self.opts = opts or SolverOptions()
        self.intmask = prog.integer_mask()
        self.primary = self.intmask & ~prog.implied_mask()
        self.secondary = self.intmask & prog.implied_mask()
        self.lp = _lp_engine(prog, self.opts)
        self.row_int = integral_rows(self.lp.rows, self.intmask)
        self.lo0, self.hi0 = prog.bounds()
        self.c = prog.c_vector()
        self.cuts_added = 0
        self.inc_x = None
        self.inc_obj = math.inf
        self.nodes = 0
        self.counter = 0
        self.incumbent_trace = []

    def _pick(self, x):
        frac = np.abs(x - np.round(x))
        for mask in (self.primary, self.secondary):
            f = np.where(mask, frac, 0.0)
            if f.max() > self.opts.int_tol:
                score = np.where(f > self.opts.int_tol, 0.5 - np.abs(f - 0.5), -1.0)
                # most fractional; argmax returns the lowest index among ties
                return int(np.argmax(np.round(score, 12)))
        return -1

    def _evaluate(self, lo, hi, basis):
        self.lp.set_bounds(lo, hi)
        if basis is not None:
            self.lp.restore(basis)
        return self.lp.solve()

    def _out_of_time(self):
        return self.lp.deadline is not None and time.perf_counter() > self.lp.deadline

    def _root_cuts(self, res, **filters):
        """Rounds of Gomory cuts at the root; the cuts join the LP for good."""
        lp = self.lp
        last = res.objective
        stall = 0
        for _ in range(self.opts.cut_rounds):
            if self._pick(res.x) < 0 or self._out_of_time():
                break
            if lp.lazy is not None:
                # activated lazy rows carry no integrality flag
                extra = lp.m - len(self.row_int)
                if extra > 0:
                    self.row_int = np.concatenate([self.row_int, np.zeros(extra, dtype=bool)])
            cuts = gmi_cuts(lp, self.intmask, self.row_int, **filters)
            if not cuts:
                break
            import scipy.sparse as sp
            C = sp.csr_matrix(np.array([c[0] for c in cuts]))
            lp.append_rows(C, np.array([c[1] for c in cuts]), np.full(len(cuts), np.inf))
            self.row_int = np.concatenate([self.row_int, np.zeros(len(cuts), dtype=bool)])
            self.cuts_added += len(cuts)
            lp._xstale = True
            new = lp.solve()
            if new.status != "optimal":
                return new
            res = new
            stall = stall + 1 if res.objective - last <= 1e-12 * max(1.0, abs(last)) else 0
            if stall >= 3:
                break
            last = res.objective
        return res

    def _dive(self, lo, hi, res, max_lps=None):
        """Fractional diving: fix the least fractional column (primitive ones
        first) to its nearest integer and re-solve, flipping once when that
        side is infeasible."""
        lp = self.lp
        saved = lp.save()
        lo, hi = lo.copy(), hi.copy()
        max_lps = max_lps or 2 * int(self.primary.sum()) + 10
        found = False
        lps = 0
        while lps < max_lps:
            if res.objective >= self._cutoff() or self._out_of_time():
                break
            frac = np.abs(res.x - np.round(res.x))
            j = -1
            for mask in (self.primary, self.secondary):
                cand = mask & (frac > self.opts.int_tol)
                if cand.any():
                    j = int(np.argmin(np.where(cand, frac, np.inf)))
                    break
            if j < 0:
                self._offer(res)
                found = True
                break
            v = res.x[j]
            tries = (math.floor(v), math.ceil(v))
            if v - tries[0] > 0.5:
                tries = tries[::-1]
            ok = False
            for val in tries:
                if not lo[j] <= val <= hi[j]:
                    continue
                lo2, hi2 = lo.copy(), hi.copy()
                lo2[j] = hi2[j] = val
                lp.set_bounds(lo2, hi2)
                r2 = lp.solve()
                lps += 1
                if r2.status == "optimal":
                    lo, hi, res, ok = lo2, hi2, r2, True
                    break
            if not ok:
                break
        lp.set_bounds(self.lo0, self.hi0)
        lp.restore(saved)
        return found

    def _offer(self, res):
        x = res.x.copy()
        x[self.intmask] = np.round(x[self.intmask])
        # value at the rounded point, which is the one handed back
        obj = float(self.c @ x)
        if obj < self.inc_obj:
            self.inc_obj = obj
            self.inc_x = x
            self.incumbent_trace.append(obj + self.prog.obj_constant)

    def _polish(self):
        """Re-solve the continuous columns with the integer ones fixed at their
        rounded incumbent values, so both sides of every row agree exactly."""
        if self.inc_x is None or self.primary.all():
            return
        lo, hi = self.lo0.copy(), self.hi0.copy()
        fixed = self.inc_x[self.intmask]
        lo[self.intmask] = fixed
        hi[self.intmask] = fixed
        self.lp.set_bounds(lo, hi)
        res = self.lp.solve()
        if res.status != "optimal":
            return
        if res.objective <= self.inc_obj + self.opts.gap_tol * max(1.0, abs(self.inc_obj)):
            x = res.x.copy()
            x[self.intmask] = fixed
            self.inc_x = x
            self.inc_obj = float(self.c @ x)

    def _cutoff(self):
        if not math.isfinite(self.inc_obj):
            return math.inf
        return self.inc_obj - self.opts.gap_tol * max(1.0, abs(self.inc_obj))

    def solve(self) -> Solution:
        opts = self.opts
        t0 = time.perf_counter()
        names = [v.name for v in self.prog.variables]
        const = self.prog.obj_constant
        self.lp.deadline = t0 + opts.time_limit
        heap = []
        # node: (bound, id, lo, hi, basis)
        current = (-math.inf, 0, self.lo0.copy(), self.hi0.copy(), None)
        root_status = None
        limit_hit = False
        while True:
            if current is None:
                if not heap:
                    break
                bound, _, lo, hi, basis = heapq.heappop(heap)
                if bound >= self._cutoff():
                    heap.clear()
                    break
                current = (bound, _, lo, hi, basis)
            if self.nodes >= opts.node_limit or time.perf_counter() - t0 > opts.time_limit:
                heapq.heappush(heap, current)
                limit_hit = True
                break
            bound, nid, lo, hi, basis = current
            current = None
            res = self._evaluate(lo, hi, basis)
            self.nodes += 1
            if root_status is None:
                root_status = res.status
                if res.status in ("infeasible", "unbounded"):
                    break
                # strict cut filters first; looser ones only while a gap remains
                for filters in _CUT_TIERS:
                    if res.status != "optimal" or _rel_gap(self.inc_obj, res.objective) <= opts.gap_tol:
                        break
                    if self.opts.cut_rounds > 0:
                        res = self._root_cuts(res, **filters)
                    if res.status == "optimal" and self.opts.dive_every:
                        self._dive(lo, hi, res)
                        self.lp.set_bounds(lo, hi)
                        # cuts read the tableau, so bring it back to the root optimum
                        res = self.lp.solve()
            elif self.opts.dive_every and self.nodes % self.opts.dive_every == 0 and res.status == "optimal":
                self._dive(lo, hi, res)
                self.lp.set_bounds(lo, hi)
            if res.status == "limit":
                limit_hit = True
                continue
            if res.status != "optimal":
                continue
            obj = res.objective
            if obj >= self._cutoff():
                continue
            j = self._pick(res.x)
            if j < 0:
                self._offer(res)
                continue
            saved = self.lp.save()
            v = res.x[j]
            dn_hi = hi.copy()
            dn_hi[j] = math.floor(v)
            up_lo = lo.copy()
            up_lo[j] = math.ceil(v)
            self.counter += 1
            down = (obj, self.counter, lo, dn_hi, saved)
            self.counter += 1
            up = (obj, self.counter, up_lo, hi, saved)
            heapq.heappush(heap, up)
            current = down
            lb = min(obj, heap[0][0])
            if _rel_gap(self.inc_obj, lb) <= opts.gap_tol:
                heap.clear()
                current = None
                break
        wall = time.perf_counter() - t0
        iters = self.lp.total_iters
        if root_status == "infeasible":
            return Solution("Infeasible", None, math.inf, math.inf, math.inf, self.nodes, wall, names, iters)
        if root_status == "unbounded":
            return Solution("Unbounded", None, -math.inf, -math.inf, math.inf, self.nodes, wall, names, iters)
        pending = [h[0] for h in heap]
        if current is not None:
            pending.append(current[0])
        best_bound = min(pending) if pending else self.inc_obj
        if self.inc_x is None:
            status = "Limit" if limit_hit else "Infeasible"
            return Solution(status, None, math.inf, best_bound + const, math.inf, self.nodes, wall, names, iters)
        # the polish is one warm-started LP; let it finish past the deadline
        self.lp.deadline = None
        self._polish()
        best_bound = min(best_bound, self.inc_obj)
        gap = _rel_gap(self.inc_obj, best_bound)
        status = "Optimal" if gap <= opts.gap_tol else "Feasible"
        sol = Solution(status, self.inc_x, self.inc_obj + const, best_bound + const, gap,
                       self.nodes, wall, names, iters)
        if opts.exact_check:
            sol.exact_violations = self.prog.exact_violations(self.inc_x, opts.feas_tol * 10)
        return sol


def branch_and_bound(prog: MathProgram, opts: SolverOptions | None = None) -> Solution:
    if not prog.integer_mask().any():
        return solve_lp_relaxation(prog, opts)
    return BranchAndBound(prog, opts).solve()
