"""Free-format MPS writer and reader."""
from __future__ import annotations

import math
import re

from .program import INF, MathProgram

_SAFE = re.compile(r"[^A-Za-z0-9_.\-\[\],:|+&()<>=/*]")


def _name(s: str) -> str:
    return _SAFE.sub("_", s)


def _num(v: float) -> str:
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def write_mps(prog: MathProgram) -> str:
    vnames = [_name(v.name) for v in prog.variables]
    rnames = [_name(c.name) for c in prog.constraints]
    if len(set(vnames)) != len(vnames) or len(set(rnames)) != len(rnames):
        raise ValueError("names collide after sanitizing")
    out = [f"NAME {_name(prog.name)}", "ROWS", " N obj"]
    for rn, con in zip(rnames, prog.constraints):
        kind = {"E": "E", "L": "L", "G": "G", "R": "G"}[con.sense]
        if con.lo == -INF and con.hi == INF:
            kind = "N"
        out.append(f" {kind} {rn}")
    cols = [[] for _ in prog.variables]
    for k, v in prog.objective.items():
        if v != 0.0:
            cols[k].append(("obj", v))
    for rn, con in zip(rnames, prog.constraints):
        for k, v in con.coefs.items():
            cols[k].append((rn, v))
    out.append("COLUMNS")
    in_int = False
    marker = 0
    for k, var in enumerate(prog.variables):
        if var.integer != in_int:
            tag = "INTORG" if var.integer else "INTEND"
            out.append(f"    M{marker} 'MARKER' '{tag}'")
            marker += 1
            in_int = var.integer
        entries = cols[k] or [("obj", 0.0)]
        for rn, v in entries:
            out.append(f"    {vnames[k]} {rn} {_num(v)}")
    if in_int:
        out.append(f"    M{marker} 'MARKER' 'INTEND'")
    out.append("RHS")
    if prog.obj_constant:
        out.append(f"    RHS obj {_num(-prog.obj_constant)}")
    ranges = []
    for rn, con in zip(rnames, prog.constraints):
        s = con.sense
        rhs = {"E": con.lo, "L": con.hi, "G": con.lo, "R": con.lo}[s] if not (con.lo == -INF and con.hi == INF) else 0.0
        if rhs != 0.0:
            out.append(f"    RHS {rn} {_num(rhs)}")
        if s == "R":
            ranges.append(f"    RNG {rn} {_num(con.hi - con.lo)}")
    if ranges:
        out.append("RANGES")
        out.extend(ranges)
    out.append("BOUNDS")
    for k, var in enumerate(prog.variables):
        if var.lb == var.ub:
            out.append(f" FX BND {vnames[k]} {_num(var.lb)}")
            continue
        out.append(f" LO BND {vnames[k]} {_num(var.lb)}")
        out.append(f" UP BND {vnames[k]} {_num(var.ub)}")
    if prog.quad:
        out.append("QUADOBJ")
        for i, j, coef in prog.quad:
            a, b = sorted((i, j))
            q = 2.0 * coef if a == b else coef
            out.append(f"    {vnames[a]} {vnames[b]} {_num(q)}")
    out.append("ENDATA")
    return "\n".join(out) + "\n"


def export_mps(prog: MathProgram, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(write_mps(prog))


def parse_mps(text: str) -> MathProgram:
    section = None
    row_kind = {}
    row_order = []
    obj_row = None
    cols = {}
    col_order = []
    integer = {}
    in_int = False
    rhs = {}
    rng = {}
    bnds = {}
    quad = []
    name = "program"
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("*"):
            continue
        if not raw[0].isspace():
            head = line.split()
            section = head[0]
            if section == "NAME" and len(head) > 1:
                name = head[1]
            continue
        tok = line.split()
        if section == "ROWS":
            kind, rn = tok
            if kind == "N" and obj_row is None:
                obj_row = rn
                continue
            row_kind[rn] = kind
            row_order.append(rn)
        elif section == "COLUMNS":
            if len(tok) >= 3 and tok[1] == "'MARKER'":
                in_int = tok[2] == "'INTORG'"
                continue
            cn = tok[0]
            if cn not in cols:
                cols[cn] = {}
                col_order.append(cn)
                integer[cn] = in_int
            for rn, val in zip(tok[1::2], tok[2::2]):
                cols[cn][rn] = cols[cn].get(rn, 0.0) + float(val)
        elif section == "RHS":
            for rn, val in zip(tok[1::2], tok[2::2]):
                rhs[rn] = float(val)
        elif section == "RANGES":
            for rn, val in zip(tok[1::2], tok[2::2]):
                rng[rn] = float(val)
        elif section == "BOUNDS":
            kind, _, cn = tok[:3]
            val = float(tok[3]) if len(tok) > 3 else None
            lo, hi = bnds.get(cn, (0.0, INF))
            if kind == "LO":
                lo = val
            elif kind == "UP":
                hi = val
            elif kind == "FX":
                lo = hi = val
            elif kind == "FR":
                lo, hi = -INF, INF
            elif kind == "MI":
                lo = -INF
            elif kind == "PL":
                hi = INF
            elif kind == "BV":
                lo, hi = 0.0, 1.0
            else:
                raise ValueError(f"unsupported bound type {kind}")
            bnds[cn] = (lo, hi)
        elif section == "QUADOBJ":
            quad.append((tok[0], tok[1], float(tok[2])))
        elif section == "ENDATA":
            break
    prog = MathProgram(name=name)
    for cn in col_order:
        lo, hi = bnds.get(cn, (0.0, INF))
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise ValueError(f"column {cn} is unbounded; only bounded programs are supported")
        prog.add_var(cn, lo, hi, integer[cn])
    rows = {rn: {} for rn in row_order}
    for k, cn in enumerate(col_order):
        for rn, val in cols[cn].items():
            if rn == obj_row:
                if val != 0.0:
                    prog.objective[k] = val
            else:
                rows[rn][k] = val
    prog.obj_constant = -rhs.get(obj_row, 0.0) if obj_row else 0.0
    for rn in row_order:
        kind = row_kind[rn]
        b = rhs.get(rn, 0.0)
        if kind == "E":
            lo = hi = b
            if rn in rng:
                r = rng[rn]
                lo, hi = (b, b + r) if r >= 0 else (b + r, b)
        elif kind == "L":
            lo, hi = -INF, b
            if rn in rng:
                lo = b - abs(rng[rn])
        elif kind == "G":
            lo, hi = b, INF
            if rn in rng:
                hi = b + abs(rng[rn])
        else:
            lo, hi = -INF, INF
        prog.add_row(rn, rows[rn], lo, hi, family="mps")
    idx = {cn: k for k, cn in enumerate(col_order)}
    for a, b, q in quad:
        i, j = idx[a], idx[b]
        prog.quad.append((i, j, q / 2.0 if i == j else q))
    return prog


def read_mps(path) -> MathProgram:
    with open(path, encoding="utf-8") as fh:
        return parse_mps(fh.read())
