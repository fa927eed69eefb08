"""Assemble the UE (Beckmann) or SO mixed-integer program for a scenario."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .costs import congestion_term, delay_coef, leg_positions, static_link_terms
from .network import FLEET_MODES, PT_MODES, SMS_MODES, Scenario, _node_key
from .paths import PathCatalog, is_subsequence
from .solver.program import INF, MathProgram

# Row families.  Each constraint carries one of these tags; the comments give
# the modelling rule it implements.
FAMILIES = {
    "link_mode_flow": "mode flow on a link equals the flows of paths using it",
    "demand": "path flows of an OD pair add up to its demand",
    "cd_stops": "drivers on a leg split over the passenger segments they serve",
    "cp_seats": "carpool passengers on a segment fit in the drivers' seats",
    "cd_passengers": "drivers serving a segment do not exceed its passengers",
    "eh_vehicles": "one e-hailing vehicle per e-hailing passenger path flow",
    "rs_vehicles": "ridesharing vehicles on a route add up over stop patterns",
    "rs_seats": "ridesharing passengers on a segment fit in matched vehicles",
    "rs_passengers": "each stop pattern has its passengers",
    "rs_no_solo": "every ridesharing passenger shares the vehicle",
    "occupied_rs": "occupied ridesharing vehicles between two nodes",
    "occupied": "occupied fleet vehicles between two nodes",
    "empty": "empty fleet vehicles between two nodes",
    "fleet_balance": "fleet vehicles entering a node equal those leaving",
    "pickup_availability": "empty or idle vehicles cover departures from a node",
    "fleet_size": "in-service, empty and idle vehicles add up to the fleet",
    "sign_flows": "passenger and driver flows are nonnegative integers",
    "sign_vehicles": "vehicle flows are nonnegative integers",
    "sign_rs_patterns": "ridesharing stop-pattern flows are nonnegative integers",
    "link_total": "link load adds private, walking, cycling, fleet and PT vehicles",
    "parking": "park-and-ride at a transfer node within its parking capacity",
    "im_cp_seats": "seats for carpool legs of multimodal trips",
    "im_cd_passengers": "multimodal driver legs have carpool passengers",
    "cp_seats_im": "carpool seats including multimodal drivers",
    "cd_passengers_im": "carpool drivers including multimodal passengers",
    "im_rs_seats": "ridesharing seats including multimodal legs",
    "eh_vehicles_im": "e-hailing vehicles including multimodal legs",
    "rs_passengers_im": "ridesharing patterns including multimodal legs",
    "link_mode_flow_im": "mode flow on a link including multimodal legs",
    "pt_capacity": "PT passengers on a line link within frequency times vehicle size",
    "pwl_epigraph": "chord cuts of the convex link cost",
    "mode_demand": "SMS demand of a mode",
    "origin_flow": "SMS flow on origin-position links",
    "wait_bits": "binary expansion of SMS demand",
    "wait_product": "bounded product of a bit and the origin flow",
    "wait_tangent": "tangent cuts of the waiting term (valid, lazily activated)",
}

# Families expected in a program with every mode and intermodality switched on.
CORE_FAMILIES = tuple(k for k in FAMILIES if k not in
                      ("pt_capacity", "pwl_epigraph", "mode_demand", "origin_flow",
                       "wait_bits", "wait_product", "wait_tangent"))


@dataclass
class ModelOptions:
    integer: bool | None = None  # None -> scenario toggle
    pwl_segments: int | None = None
    x_max: float | None = None
    tangent_cuts: bool = True


@dataclass
class Option:
    od: tuple
    k: int
    path: object
    var: int


@dataclass
class BuiltModel:
    program: MathProgram
    scenario: Scenario
    catalog: PathCatalog
    principle: str
    options: list = field(default_factory=list)
    x_vars: dict = field(default_factory=dict)  # link -> var
    xm_vars: dict = field(default_factory=dict)  # (link, mode) -> var
    line_units: dict = field(default_factory=dict)  # line index -> var
    pwl: dict = field(default_factory=dict)  # link -> PwlLink
    sms_vars: dict = field(default_factory=dict)  # mode -> (q, X)
    vehicle_vars: dict = field(default_factory=dict)
    pwl_error_bound: float = 0.0


@dataclass
class PwlLink:
    breakpoints: np.ndarray
    values: np.ndarray
    slopes: np.ndarray
    intercepts: np.ndarray
    max_gap: float


def linearize_bpr_integral(link, params, K: int, x_max: float, principle: str = "UE",
                           integral: bool = True) -> PwlLink:
    """Chords of the convex congestion term on K uniform segments of [0, x_max].

    With ``integral`` the segment width is rounded up to an integer so integer
    loads that hit a breakpoint are represented exactly, and the reported
    error is the worst gap over integer loads up to ``x_max``.
    """
    if K < 2:
        raise ValueError("need at least two segments")
    h = max(1.0, math.ceil(x_max / K - 1e-9)) if integral else x_max / K
    xs = np.arange(K + 1, dtype=float) * h
    g = np.array([congestion_term(link, x, params, principle) for x in xs])
    slopes = np.diff(g) / h
    inter = g[:-1] - slopes * xs[:-1]
    gap = 0.0
    b = delay_coef(link, params)
    if b > 0 and integral:
        # integer loads only: the chords can only be off between breakpoints
        pts = np.arange(0.0, math.floor(x_max + 1e-9) + 1.0)
        seg = np.minimum((pts // h).astype(int), K - 1)
        exact = np.array([congestion_term(link, x, params, principle) for x in pts])
        gap = float(np.max(slopes[seg] * pts + inter[seg] - exact))
    elif b > 0:
        beta = params.beta
        scale = b / link.capacity ** beta * (1.0 if principle == "UE" else beta + 1)
        for k in range(K):
            # tangent point of the chord slope: g'(x) = scale * x**beta
            xt = (slopes[k] / scale) ** (1.0 / beta) if slopes[k] > 0 else xs[k]
            xt = min(max(xt, xs[k]), xs[k + 1])
            gap = max(gap, slopes[k] * xt + inter[k] - congestion_term(link, xt, params, principle))
    return PwlLink(xs, g, slopes, inter, gap)


def linearize_bilinear_product(prog: MathProgram, q: int, x: int, uq: int, ux: float, tag: str,
                               obj: float = 0.0) -> int:
    """Exact z = q * x for integer q in [0, uq] via a binary expansion of q.

    Returns the index of z.  Four bounded-product inequalities per bit.
    """
    if not (math.isfinite(uq) and math.isfinite(ux)):
        raise ValueError("unbounded factor")
    nbits = max(1, math.ceil(math.log2(uq + 1)))
    bits, ws = [], []
    for k in range(nbits):
        bits.append(prog.add_var(f"b[{tag},{k}]", 0, 1, True, "wait_bits", implied=True))
        ws.append(prog.add_var(f"w[{tag},{k}]", 0, ux, False, "wait_product"))
    prog.add_row(f"bits[{tag}]", {q: 1.0, **{b: -(2.0 ** k) for k, b in enumerate(bits)}}, 0, 0, "wait_bits")
    for k, (b, w) in enumerate(zip(bits, ws)):
        prog.add_row(f"wub[{tag},{k}]", {w: 1.0, b: -ux}, -INF, 0, "wait_product")
        prog.add_row(f"wx[{tag},{k}]", {w: 1.0, x: -1.0}, -INF, 0, "wait_product")
        prog.add_row(f"wlb[{tag},{k}]", {w: 1.0, x: -1.0, b: -ux}, -ux, INF, "wait_product")
    zmax = float(uq) * ux
    z = prog.add_var(f"z[{tag}]", 0, zmax, False, "wait_product", obj=obj)
    prog.add_row(f"zdef[{tag}]", {z: 1.0, **{w: -(2.0 ** k) for k, w in enumerate(ws)}}, 0, 0, "wait_product")
    return z


class _Expr(dict):
    """Linear expression var -> coef, with a flag for multimodal contributions."""

    def __init__(self):
        super().__init__()
        self.intermodal = False
        self.ub = 0.0

    def add(self, var, coef, intermodal, ub):
        self[var] = self.get(var, 0.0) + coef
        self.intermodal |= intermodal
        self.ub += ub * coef


def _fam(base, im):
    return base + "_im" if im else base


def build_program(s: Scenario, catalog: PathCatalog, principle: str = "UE",
                  opts: ModelOptions | None = None) -> BuiltModel:
    principle = principle.upper()
    if principle not in ("UE", "SO"):
        raise ValueError("principle must be UE or SO")
    if catalog.scenario is not s and catalog.scenario != s:
        raise ValueError("catalog was built for a different scenario")
    opts = opts or ModelOptions()
    integer = s.toggles.integer if opts.integer is None else opts.integer
    K = opts.pwl_segments or s.toggles.pwl_segments
    p = s.params
    Q = s.Q
    V = s.fleet_size
    prog = MathProgram(name=f"{s.name}_{principle}", principle=principle)
    bm = BuiltModel(prog, s, catalog, principle)

    # passenger path flows ---------------------------------------------------
    seg_demand = {m: {} for m in ("CP", "CD", "RS", "EH")}
    mode_link = {}  # (link, mode) -> _Expr
    sms_legs = {m: _Expr() for m in SMS_MODES}
    parking = {}
    for o, d, q in s.demand:
        opts_od = catalog.options(o, d)
        row = {}
        for k, path in enumerate(opts_od):
            static = sum(static_link_terms(s, m, lid, a, b) for m, lid, a, b in leg_positions(path))
            v = prog.add_var(f"f[{o},{d},{k}]", 0, q, integer, "sign_flows", obj=static)
            bm.options.append(Option((o, d), k, path, v))
            row[v] = 1.0
            im = path.intermodal
            for leg_i, leg in enumerate(path.legs):
                for lid in leg.links:
                    mode_link.setdefault((lid, leg.mode), _Expr()).add(v, 1.0, im, q)
                if leg.mode in seg_demand:
                    seg_demand[leg.mode].setdefault(leg.links, _Expr()).add(v, 1.0, im, q)
                if leg.mode in SMS_MODES:
                    sms_legs[leg.mode].add(v, 1.0, im, q)
                if leg.mode in ("car", "CD") and leg_i < len(path.legs) - 1:
                    parking.setdefault(leg.destination, {})[v] = 1.0
        prog.add_row(f"demand[{o},{d}]", row, q, q, "demand")

    # x_{a,m}
    for (lid, m), expr in sorted(mode_link.items(), key=lambda kv: (kv[0][0], kv[0][1])):
        v = prog.add_var(f"xm[{lid},{m}]", 0, min(Q, expr.ub), integer, "sign_flows", implied=True)
        bm.xm_vars[(lid, m)] = v
        coefs = {v: 1.0}
        for f, c in expr.items():
            coefs[f] = coefs.get(f, 0.0) - c
        prog.add_row(f"xm[{lid},{m}]", coefs, 0, 0, _fam("link_mode_flow", expr.intermodal))

    # PT capacity (optionally elastic units per line)
    if s.toggles.pt_elastic:
        for li, line in enumerate(s.pt_lines):
            served = max((mode_link[(lid, line.mode)].ub for lid in line.links if (lid, line.mode) in mode_link),
                         default=0.0)
            extra = max(0, math.ceil(served / line.veh_capacity) - int(line.frequency))
            if extra > 0:
                bm.line_units[li] = prog.add_var(f"u[{li}]", 0, extra, integer, "pt_capacity")
    for (lid, m), xv in bm.xm_vars.items():
        if m not in PT_MODES:
            continue
        coefs = {xv: 1.0}
        for li, uv in bm.line_units.items():
            line = s.pt_lines[li]
            if line.mode == m and lid in line.links:
                coefs[uv] = -line.veh_capacity
        prog.add_row(f"ptcap[{lid},{m}]", coefs, -INF, s.pt_capacity(m, lid), "pt_capacity")

    # parking at transfer nodes
    for t in sorted(parking, key=_node_key):
        prog.add_row(f"park[{t}]", parking[t], -INF, s.parking_capacity.get(t, 0), "parking")

    # carpooling --------------------------------------------------------------
    cp_segs = seg_demand["CP"]
    cd_legs = seg_demand["CD"]
    seg_id = {m: {seg: i for i, seg in enumerate(sorted(seg_demand[m]))} for m in seg_demand}
    g_of_leg, g_of_seg = {}, {}
    cap_cp = p.CAP.get("CP", 1)
    for l in sorted(cd_legs):
        li = seg_id["CD"][l]
        for sgm in sorted(cp_segs):
            if is_subsequence(sgm, l):
                si = seg_id["CP"][sgm]
                ub = min(cd_legs[l].ub, cp_segs[sgm].ub, Q)
                g = prog.add_var(f"g[{li},{si}]", 0, ub, integer, "sign_flows")
                g_of_leg.setdefault(l, []).append(g)
                g_of_seg.setdefault(sgm, []).append((g, l))
    for l in sorted(cd_legs):
        expr = cd_legs[l]
        coefs = dict(expr)
        for g in g_of_leg.get(l, []):
            coefs[g] = -1.0
        prog.add_row(f"cdstop[{seg_id['CD'][l]}]", coefs, 0, 0, "cd_stops")
    for sgm in sorted(cp_segs):
        expr = cp_segs[sgm]
        si = seg_id["CP"][sgm]
        pairs = g_of_seg.get(sgm, [])
        drivers_im = any(cd_legs[l].intermodal for _, l in pairs)
        seats = dict(expr)
        for g, _ in pairs:
            seats[g] = seats.get(g, 0.0) - cap_cp
        if expr.intermodal:
            fam = "im_cp_seats"
        elif drivers_im:
            fam = "cp_seats_im"
        else:
            fam = "cp_seats"
        prog.add_row(f"cpseat[{si}]", seats, -INF, 0, fam)
        drv = {g: 1.0 for g, _ in pairs}
        for f, c in expr.items():
            drv[f] = drv.get(f, 0.0) - c
        if drv and pairs:
            prog.add_row(f"cdpax[{si}]", drv, -INF, 0,
                         "cd_passengers_im" if (expr.intermodal or drivers_im) else "cd_passengers")
    for l in sorted(cd_legs):
        expr = cd_legs[l]
        if not expr.intermodal:
            continue
        coefs = dict(expr)
        for sgm in cp_segs:
            if is_subsequence(sgm, l):
                for f, c in cp_segs[sgm].items():
                    coefs[f] = coefs.get(f, 0.0) - c
        prog.add_row(f"imcd[{seg_id['CD'][l]}]", coefs, -INF, 0, "im_cd_passengers")

    # fleet services ----------------------------------------------------------
    link_vehicles = {}  # link -> {var: coef}
    occ = {}  # (u, v) -> {var: coef} for occupied vehicles
    occ_rs = {}
    vmax = min(Q, V)
    for sgm in sorted(seg_demand["EH"]):
        expr = seg_demand["EH"][sgm]
        si = seg_id["EH"][sgm]
        y = prog.add_var(f"yeh[{si}]", 0, min(vmax, expr.ub), integer, "sign_vehicles")
        coefs = {y: 1.0}
        for f, c in expr.items():
            coefs[f] = -c
        prog.add_row(f"eh[{si}]", coefs, 0, 0, _fam("eh_vehicles", expr.intermodal))
        for lid in sgm:
            link_vehicles.setdefault(lid, {})[y] = 1.0
        nodes = catalog.segments["EH"][sgm]
        occ.setdefault((nodes[0], nodes[-1]), {})[y] = 1.0
    rs = seg_demand["RS"]
    if catalog.rs_patterns:
        cap_rs = p.CAP.get("RS", 2)
        if cap_rs < 2:
            raise ValueError("ridesharing patterns pair two passengers; CAP_RS must be at least 2")
        by_vehicle = {}
        pat_vars = []
        for pi, pat in enumerate(catalog.rs_patterns):
            ub = min(vmax, rs[pat.seg_a].ub, rs[pat.seg_b].ub)
            y = prog.add_var(f"yrs[{pi}]", 0, ub, integer, "sign_rs_patterns")
            pat_vars.append(y)
            by_vehicle.setdefault(pat.vehicle, (pat.nodes, []))[1].append(y)
        veh_id = {}
        for vi, (route, (nodes, ys)) in enumerate(sorted(by_vehicle.items())):
            yv = prog.add_var(f"yrsv[{vi}]", 0, vmax, integer, "sign_vehicles", implied=True)
            veh_id[route] = yv
            prog.add_row(f"rsveh[{vi}]", {yv: 1.0, **{y: -1.0 for y in ys}}, 0, 0, "rs_vehicles")
            for lid in route:
                link_vehicles.setdefault(lid, {})[yv] = 1.0
            occ_rs.setdefault((nodes[0], nodes[-1]), {})[yv] = 1.0
        for sgm in sorted(rs):
            expr = rs[sgm]
            si = seg_id["RS"][sgm]
            coefs = dict(expr)
            for pat, y in zip(catalog.rs_patterns, pat_vars):
                mlt = pat.mult(sgm)
                if mlt:
                    coefs[y] = coefs.get(y, 0.0) - mlt
            prog.add_row(f"rsseat[{si}]", coefs, -INF, 0, "im_rs_seats" if expr.intermodal else "rs_seats")
            prog.add_row(f"rssolo[{si}]", coefs, 0, INF, "rs_no_solo")
        for pi, (pat, y) in enumerate(zip(catalog.rs_patterns, pat_vars)):
            for tag, sgm in (("a", pat.seg_a), ("b", pat.seg_b)):
                if tag == "b" and pat.seg_b == pat.seg_a:
                    continue
                expr = rs[sgm]
                coefs = {y: float(pat.mult(sgm))}
                for f, c in expr.items():
                    coefs[f] = coefs.get(f, 0.0) - c
                prog.add_row(f"rspat[{pi},{tag}]", coefs, -INF, 0, _fam("rs_passengers", expr.intermodal))
    elif rs:
        # ridesharing segments without any feasible pairing carry nobody
        for sgm in sorted(rs):
            prog.add_row(f"rssolo[{seg_id['RS'][sgm]}]", dict(rs[sgm]), 0, 0, "rs_no_solo")

    fleet_on = bool(catalog.fleet_nodes) and any(m in s.toggles.modes for m in FLEET_MODES)
    if fleet_on:
        F = catalog.fleet_nodes
        qo, qe = {}, {}
        for (u, v), coefs in sorted(occ_rs.items(), key=lambda kv: (_node_key(kv[0][0]), _node_key(kv[0][1]))):
            var = prog.add_var(f"qors[{u},{v}]", 0, vmax, integer, "sign_vehicles", implied=True)
            prog.add_row(f"qors[{u},{v}]", {var: 1.0, **{c: -1.0 for c in coefs}}, 0, 0, "occupied_rs")
            occ.setdefault((u, v), {})[var] = 1.0
        for (u, v), coefs in sorted(occ.items(), key=lambda kv: (_node_key(kv[0][0]), _node_key(kv[0][1]))):
            if u == v:
                continue
            var = prog.add_var(f"qo[{u},{v}]", 0, V, integer, "sign_vehicles", implied=True)
            row = {var: 1.0}
            for c in coefs:
                row[c] = row.get(c, 0.0) - 1.0
            prog.add_row(f"qo[{u},{v}]", row, 0, 0, "occupied")
            qo[(u, v)] = var
        for (u, v), plist in sorted(catalog.empty_paths.items(),
                                    key=lambda kv: (_node_key(kv[0][0]), _node_key(kv[0][1]))):
            ys = []
            for k, path in enumerate(plist):
                y = prog.add_var(f"ye[{u},{v},{k}]", 0, V, integer, "sign_vehicles")
                ys.append(y)
                for lid in path.links:
                    link_vehicles.setdefault(lid, {})[y] = 1.0
            var = prog.add_var(f"qe[{u},{v}]", 0, V, integer, "sign_vehicles", implied=True)
            prog.add_row(f"qe[{u},{v}]", {var: 1.0, **{y: -1.0 for y in ys}}, 0, 0, "empty")
            qe[(u, v)] = var
        idle = {}
        for n in F:
            idle[n] = prog.add_var(f"qe[{n},{n}]", 0, V, integer, "sign_vehicles")
        for n in F:
            row = {}
            for (u, v), var in list(qo.items()) + list(qe.items()):
                if v == n:
                    row[var] = row.get(var, 0.0) + 1.0
                if u == n:
                    row[var] = row.get(var, 0.0) - 1.0
            prog.add_row(f"balance[{n}]", row, 0, 0, "fleet_balance")
            pick = {idle[n]: 1.0}
            for (u, v), var in qe.items():
                if v == n:
                    pick[var] = 1.0
            for (u, v), var in qo.items():
                if u == n:
                    pick[var] = pick.get(var, 0.0) - 1.0
            prog.add_row(f"pickup[{n}]", pick, 0, INF, "pickup_availability")
        allv = {var: 1.0 for var in list(qo.values()) + list(qe.values()) + list(idle.values())}
        prog.add_row("fleet", allv, V, V, "fleet_size")
        bm.vehicle_vars = {"qo": qo, "qe": qe, "idle": idle}

    # link totals and congestion ---------------------------------------------
    fleet_extra = V if fleet_on else 0
    for link in s.links:
        lid = link.id
        coefs = {}
        for m in ("car", "CD", "W", "B"):
            if (lid, m) in bm.xm_vars:
                coefs[bm.xm_vars[(lid, m)]] = -1.0
        for var, c in link_vehicles.get(lid, {}).items():
            coefs[var] = coefs.get(var, 0.0) - c
        unit_ub = 0.0
        for li, uv in bm.line_units.items():
            line = s.pt_lines[li]
            if lid in line.links:
                w = p.bus_pce if line.mode == "bus" else 1.0
                coefs[uv] = -w
                unit_ub += w * prog.variables[uv].ub
        const = s.pt_units(lid)
        if not coefs and const == 0:
            continue
        ub = const + unit_ub + sum(prog.variables[v].ub for v in coefs if v not in bm.line_units.values())
        xint = integer and float(const).is_integer() and float(p.bus_pce).is_integer()
        tt = s.params.alpha * link.t0 if link.subnetwork == "RN" else \
            s.params.alpha * link.length / p.Sp[{"MN": "M", "BN": "B", "WN": "W"}[link.subnetwork]]
        xv = prog.add_var(f"x[{lid}]", const, max(ub, const), xint, "sign_flows", obj=tt, implied=True)
        coefs[xv] = 1.0
        prog.add_row(f"xa[{lid}]", coefs, const, const, "link_total")
        bm.x_vars[lid] = xv
        if link.subnetwork == "RN" and delay_coef(link, p) > 0:
            xmax = opts.x_max or max(2 * link.capacity, Q + const + unit_ub + fleet_extra)
            pw = linearize_bpr_integral(link, p, K, xmax, principle, integral=xint)
            bm.pwl[lid] = pw
            bm.pwl_error_bound += p.alpha * pw.max_gap
            yv = prog.add_var(f"y[{lid}]", 0, float(pw.values[-1]), False, "pwl_epigraph", obj=p.alpha)
            for k in range(len(pw.slopes)):
                prog.add_row(f"pwl[{lid},{k}]", {yv: 1.0, xv: -pw.slopes[k]}, pw.intercepts[k], INF,
                             "pwl_epigraph", lazy=True)

    # SMS waiting time: alpha / R_m * q_m * X_m ------------------------------
    for m in SMS_MODES:
        expr = sms_legs[m]
        if not expr:
            continue
        uq = int(min(Q, expr.ub))
        qv = prog.add_var(f"q[{m}]", 0, uq, integer, "mode_demand", implied=True)
        prog.add_row(f"q[{m}]", {qv: 1.0, **{f: -c for f, c in expr.items()}}, 0, 0, "mode_demand")
        Xv = prog.add_var(f"X[{m}]", 0, uq, integer, "origin_flow", implied=True)
        prog.add_row(f"X[{m}]", {Xv: 1.0, **{f: -c for f, c in expr.items()}}, 0, 0, "origin_flow")
        bm.sms_vars[m] = (qv, Xv)
        coef = p.alpha / p.R[m]
        if not integer:
            prog.quad.append((qv, Xv, coef))
            continue
        z = linearize_bilinear_product(prog, qv, Xv, uq, float(uq), m, obj=coef)
        if opts.tangent_cuts:
            # X equals q on every feasible point, so z >= 2kq - k^2 is valid
            for k in range(1, uq + 1):
                prog.add_row(f"tan[{m},{k}]", {z: 1.0, qv: -2.0 * k}, -float(k * k), INF,
                             "wait_tangent", lazy=True)
    prog.meta["pwl_error_bound"] = bm.pwl_error_bound
    return bm


def provenance_rows(prog: MathProgram):
    """(constraint name, family, description) for audit dumps."""
    return [(c.name, c.family, FAMILIES.get(c.family, "")) for c in prog.constraints]


def provenance_families(prog: MathProgram) -> set:
    """Families present as rows or as variable sign/integrality declarations."""
    fams = {c.family for c in prog.constraints}
    fams |= {v.family for v in prog.variables}
    return fams


def check_solution(bm: BuiltModel, values, tol=1e-6):
    """Evaluate every program row at ``values``; returns violations."""
    return bm.program.violations(values, tol)
