"""Container for a mixed-integer linear program in row-range form."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.sparse as sp

INF = float("inf")


@dataclass
class Variable:
    name: str
    lb: float
    ub: float
    integer: bool = False
    family: str = ""
    implied: bool = False  # integral whenever the primitive integers are


@dataclass
class Constraint:
    name: str
    coefs: dict
    lo: float
    hi: float
    family: str
    lazy: bool = False

    @property
    def sense(self) -> str:
        if self.lo == self.hi:
            return "E"
        if self.lo == -INF:
            return "L"
        if self.hi == INF:
            return "G"
        return "R"


@dataclass
class MathProgram:
    name: str = "program"
    principle: str = "UE"
    variables: list = field(default_factory=list)
    constraints: list = field(default_factory=list)
    objective: dict = field(default_factory=dict)
    obj_constant: float = 0.0
    # declared bilinear objective terms (i, j, coef); only used when the
    # exact linearization is switched off
    quad: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self._index = {v.name: k for k, v in enumerate(self.variables)}

    # -- building ------------------------------------------------------------
    def add_var(self, name, lb=0.0, ub=INF, integer=False, family="", obj=0.0, implied=False) -> int:
        if name in self._index:
            raise ValueError(f"duplicate variable {name}")
        if not (np.isfinite(lb) and np.isfinite(ub)):
            raise ValueError(f"variable {name} needs finite bounds")
        if lb > ub:
            raise ValueError(f"variable {name} has empty domain [{lb}, {ub}]")
        k = len(self.variables)
        self.variables.append(Variable(name, float(lb), float(ub), integer, family, implied))
        self._index[name] = k
        if obj:
            self.objective[k] = self.objective.get(k, 0.0) + obj
        return k

    def add_row(self, name, coefs, lo=-INF, hi=INF, family="", lazy=False) -> int:
        clean = {}
        for k, v in coefs.items():
            if v != 0.0:
                clean[k] = clean.get(k, 0.0) + float(v)
        self.constraints.append(Constraint(name, clean, float(lo), float(hi), family, lazy))
        return len(self.constraints) - 1

    def add_obj(self, k, v):
        self.objective[k] = self.objective.get(k, 0.0) + v

    def index(self, name) -> int:
        return self._index[name]

    def has(self, name) -> bool:
        return name in self._index

    # -- views ---------------------------------------------------------------
    @property
    def n(self):
        return len(self.variables)

    def c_vector(self):
        c = np.zeros(self.n)
        for k, v in self.objective.items():
            c[k] = v
        return c

    def bounds(self):
        lo = np.array([v.lb for v in self.variables], dtype=float)
        hi = np.array([v.ub for v in self.variables], dtype=float)
        return lo, hi

    def integer_mask(self):
        return np.array([v.integer for v in self.variables], dtype=bool)

    def implied_mask(self):
        return np.array([v.implied for v in self.variables], dtype=bool)

    def matrix(self, rows=None):
        rows = self.constraints if rows is None else rows
        r, cidx, data = [], [], []
        for i, con in enumerate(rows):
            for k, v in con.coefs.items():
                r.append(i)
                cidx.append(k)
                data.append(v)
        A = sp.csr_matrix((data, (r, cidx)), shape=(len(rows), self.n))
        rlo = np.array([con.lo for con in rows], dtype=float)
        rhi = np.array([con.hi for con in rows], dtype=float)
        return A, rlo, rhi

    def split_rows(self):
        hard = [c for c in self.constraints if not c.lazy]
        lazy = [c for c in self.constraints if c.lazy]
        return hard, lazy

    def families(self) -> set:
        return {c.family for c in self.constraints}

    def provenance(self) -> dict:
        return {c.name: c.family for c in self.constraints}

    def relaxed(self):
        """Copy with integrality dropped."""
        out = MathProgram(self.name, self.principle,
                          [Variable(v.name, v.lb, v.ub, False, v.family, v.implied) for v in self.variables],
                          self.constraints, dict(self.objective), self.obj_constant, list(self.quad), dict(self.meta))
        return out

    # -- checks --------------------------------------------------------------
    def objective_value(self, x) -> float:
        val = self.obj_constant + sum(v * x[k] for k, v in self.objective.items())
        for i, j, coef in self.quad:
            val += coef * x[i] * x[j]
        return val

    def violations(self, x, tol=1e-7, int_tol=1e-6):
        out = []
        for k, var in enumerate(self.variables):
            if x[k] < var.lb - tol or x[k] > var.ub + tol:
                out.append((var.name, "bound", x[k]))
            if var.integer and abs(x[k] - round(x[k])) > int_tol:
                out.append((var.name, "integrality", x[k]))
        for con in self.constraints:
            act = sum(v * x[k] for k, v in con.coefs.items())
            if act < con.lo - tol * max(1.0, abs(con.lo)) or act > con.hi + tol * max(1.0, abs(con.hi)):
                out.append((con.name, con.family, act))
        return out

    def exact_violations(self, x, tol=0.0):
        """Rational re-check: integer columns rounded, rows evaluated exactly.

        A row is reported when it misses its bound by more than
        ``tol * max(1, |bound|)``, the same scaling :meth:`violations` uses.
        """
        vals = []
        for k, var in enumerate(self.variables):
            vals.append(Fraction(round(x[k])) if var.integer else Fraction(float(x[k])))
        out = []
        for con in self.constraints:
            act = sum(Fraction(v) * vals[k] for k, v in con.coefs.items())
            lo_bad = con.lo != -INF and act < Fraction(con.lo)
            hi_bad = con.hi != INF and act > Fraction(con.hi)
            if lo_bad or hi_bad:
                gap = float(Fraction(con.lo) - act) if lo_bad else float(act - Fraction(con.hi))
                if gap > tol * max(1.0, abs(con.lo if lo_bad else con.hi)):
                    out.append((con.name, con.family, gap))
        return out

    def content_hash(self) -> str:
        """Hash of matrix, bounds, objective and integrality (names excluded)."""
        h = hashlib.sha256()
        h.update(repr(round(self.obj_constant, 12) + 0.0).encode())  # folds -0.0 into 0.0
        for v in self.variables:
            h.update(f"{v.lb!r},{v.ub!r},{int(v.integer)};".encode())
        for k in sorted(self.objective):
            if self.objective[k] != 0.0:
                h.update(f"c{k}:{self.objective[k]!r};".encode())
        rows = sorted(
            (con.lo, con.hi, tuple(sorted((k, v) for k, v in con.coefs.items() if v != 0.0)))
            for con in self.constraints
        )
        for lo, hi, coefs in rows:
            h.update(f"r{lo!r},{hi!r}:{coefs!r};".encode())
        for i, j, coef in sorted(self.quad):
            h.update(f"q{i},{j}:{coef!r};".encode())
        return h.hexdigest()
