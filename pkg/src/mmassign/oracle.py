"""Exhaustive optimizer for micro instances.

Every integer assignment of passengers to path options is enumerated, and for
each one every carpool matching, ridesharing stop-pattern vector, empty fleet
repositioning and PT unit purchase that the rules allow.  The objective is
evaluated with the exact BPR curve.  Nothing here reads the program builder;
only the scenario, the path catalog and the static per-link cost terms are
shared with it.

The enumeration is bounded: ``cap`` limits the number of candidates looked at,
and the oracle refuses (``CapExceeded``) rather than silently truncating.
"""
from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field

from .costs import leg_positions, static_link_terms
from .network import FLEET_MODES, PT_MODES, SMS_MODES, Scenario
from .paths import PathCatalog, build_catalog, is_subsequence

DEFAULT_CAP = 10 ** 7
_SELF_LOADING = ("car", "CD", "W", "B")
_SPEED = {"MN": "M", "BN": "B", "WN": "W"}


class CapExceeded(RuntimeError):
    pass


@dataclass
class OracleOptimum:
    flows: dict  # (o, d, k) -> travellers on option k
    units: dict  # PT line index -> extra units
    matching: dict  # (driver leg, carpool segment) -> drivers
    patterns: tuple  # ridesharing pattern index -> vehicles
    empties: dict  # (u, v, k) -> empty vehicles on empty path k
    idle: dict  # fleet node -> idle vehicles
    objective: float


@dataclass
class OracleResult:
    objective: float | None  # None when nothing is feasible
    optima: list = field(default_factory=list)
    candidates: int = 0

    @property
    def feasible(self):
        return self.objective is not None


def compositions(n: int, k: int):
    """All ways to write n as an ordered sum of k nonnegative integers."""
    if k == 0:
        if n == 0:
            yield ()
        return
    if k == 1:
        yield (n,)
        return
    for first in range(n + 1):
        for rest in compositions(n - first, k - 1):
            yield (first,) + rest


def n_compositions(n: int, k: int) -> int:
    if k == 0:
        return 1 if n == 0 else 0
    return math.comb(n + k - 1, k - 1)


def exact_link_cost(s: Scenario, lid, x: float, principle: str) -> float:
    """alpha times the Beckmann integral (UE) or t(x)*x (SO) on one link."""
    p = s.params
    link = s.link(lid)
    if link.subnetwork != "RN":
        return p.alpha * link.length / p.Sp[_SPEED[link.subnetwork]] * x
    b = link.delay_coef if link.delay_coef is not None else p.eta * link.t0
    power = b * x ** (p.beta + 1) / link.capacity ** p.beta
    if principle == "UE":
        power /= p.beta + 1
    return p.alpha * (link.t0 * x + power)


class _Oracle:
    def __init__(self, s: Scenario, catalog: PathCatalog, principle: str, cap: int):
        self.s, self.cat, self.principle, self.cap = s, catalog, principle.upper(), cap
        self.count = 0
        p = s.params
        self.opts = []  # per OD: list of option descriptors
        for o, d, q in s.demand:
            row = []
            for k, path in enumerate(catalog.options(o, d)):
                static = sum(static_link_terms(s, m, lid, a, b) for m, lid, a, b in leg_positions(path))
                load = Counter()
                pt = Counter()
                sms = Counter()
                segs = Counter()
                park = None
                for i, leg in enumerate(path.legs):
                    if leg.mode in _SELF_LOADING:
                        load.update(leg.links)
                    if leg.mode in PT_MODES:
                        pt.update((lid, leg.mode) for lid in leg.links)
                    if leg.mode in SMS_MODES:
                        sms[leg.mode] += 1
                    if leg.mode in ("CP", "CD", "RS", "EH"):
                        segs[(leg.mode, leg.links)] += 1
                    if leg.mode in ("car", "CD") and i < len(path.legs) - 1:
                        park = leg.destination
                row.append(dict(k=k, static=static, load=load, pt=pt, sms=sms, segs=segs, park=park))
            self.opts.append(((o, d, q), row))
        self.alpha = p.alpha
        self.R = p.R
        self.fleet_on = bool(catalog.fleet_nodes) and any(m in s.toggles.modes for m in FLEET_MODES)
        self._pt_cache, self._cp_cache, self._rs_cache, self._empty_cache = {}, {}, {}, {}
        self.eh_nodes = {seg: (nodes[0], nodes[-1]) for seg, nodes in catalog.segments.get("EH", {}).items()}

    def tick(self, n=1):
        self.count += n
        if self.count > self.cap:
            raise CapExceeded(f"more than {self.cap} candidates")

    # -- PT units ------------------------------------------------------------
    def pt_options(self, pax: Counter):
        key = tuple(sorted(pax.items()))
        if key in self._pt_cache:
            return self._pt_cache[key]
        s = self.s
        lines = list(enumerate(s.pt_lines))
        if s.toggles.pt_elastic:
            ranges = [range(0, math.ceil(s.Q / line.veh_capacity) + 1) for _, line in lines]
        else:
            ranges = [range(1) for _ in lines]
        out = []
        for units in itertools.product(*ranges):
            ok = True
            for (lid, m), n in pax.items():
                cap = sum((line.frequency + units[li]) * line.veh_capacity
                          for li, line in lines if line.mode == m and lid in line.links)
                if n > cap + 1e-9:
                    ok = False
                    break
            if ok:
                out.append(dict(enumerate(units)))
        self._pt_cache[key] = out
        return out

    # -- carpool matching ----------------------------------------------------
    def cp_match(self, cd: Counter, cp: Counter):
        """A driver-to-segment assignment, or None when none exists.

        Every driver on a leg serves one carpool segment lying on the leg; a
        segment is served by no more drivers than it has passengers, and its
        passengers fit in the seats of the drivers serving it.
        """
        key = (tuple(sorted(cd.items())), tuple(sorted(cp.items())))
        if key in self._cp_cache:
            return self._cp_cache[key]
        seat_cap = self.s.params.CAP.get("CP", 1)
        legs = sorted(l for l, n in cd.items() if n)
        segs = sorted(sg for sg, n in cp.items() if n)
        served = {l: [sg for sg in segs if is_subsequence(sg, l)] for l in legs}
        result = None
        if all(served[l] for l in legs):
            drivers = Counter()

            def rec(i, match):
                nonlocal result
                if i == len(legs):
                    if all(cp[sg] <= seat_cap * drivers[sg] for sg in segs):
                        result = dict(match)
                        return True
                    return False
                l = legs[i]
                room = [cp[sg] - drivers[sg] for sg in served[l]]
                for split in compositions(cd[l], len(served[l])):
                    if any(a > r for a, r in zip(split, room)):
                        continue
                    for sg, a in zip(served[l], split):
                        drivers[sg] += a
                        if a:
                            match[(l, sg)] = a
                    if rec(i + 1, match):
                        return True
                    for sg, a in zip(served[l], split):
                        drivers[sg] -= a
                        match.pop((l, sg), None)
                return False

            rec(0, {})
        elif not legs and not segs:
            result = {}
        self._cp_cache[key] = result
        return result

    # -- ridesharing patterns ------------------------------------------------
    def rs_vectors(self, rs: Counter):
        """Pattern flow vectors that seat every ridesharing passenger in a pair."""
        key = tuple(sorted(rs.items()))
        if key in self._rs_cache:
            return self._rs_cache[key]
        pats = self.cat.rs_patterns
        out = []
        if not any(rs.values()):
            out = [tuple(0 for _ in pats)]
        elif pats:
            rem = Counter(rs)
            last = {}
            for pi, pat in enumerate(pats):
                last[pat.seg_a] = pi
                last[pat.seg_b] = pi
            if all(sg in last for sg, n in rs.items() if n):
                vec = [0] * len(pats)

                def rec(pi):
                    if pi == len(pats):
                        if not any(rem.values()):
                            out.append(tuple(vec))
                        return
                    pat = pats[pi]
                    top = min(rem[pat.seg_a] // pat.mult(pat.seg_a), rem[pat.seg_b] // pat.mult(pat.seg_b))
                    for y in range(top + 1):
                        for sg in {pat.seg_a, pat.seg_b}:
                            rem[sg] -= y * pat.mult(sg)
                        # a segment whose last covering pattern is behind us must be empty
                        if all(rem[sg] == 0 for sg in {pat.seg_a, pat.seg_b} if last[sg] == pi):
                            vec[pi] = y
                            rec(pi + 1)
                        for sg in {pat.seg_a, pat.seg_b}:
                            rem[sg] += y * pat.mult(sg)
                    vec[pi] = 0

                rec(0)
        self._rs_cache[key] = out
        return out

    # -- fleet ---------------------------------------------------------------
    def empty_options(self, moves: Counter):
        """Empty repositioning plans with the idle vehicles that make them work.

        Returns a list of (empties {(u, v, k): n}, idle {node: n}).  Per-pair
        empty counts are bounded by the number of occupied trips.
        """
        key = tuple(sorted(moves.items(), key=repr))
        if key in self._empty_cache:
            return self._empty_cache[key]
        F = list(self.cat.fleet_nodes)
        V = self.s.fleet_size
        busy = sum(moves.values())
        pairs = sorted(self.cat.empty_paths, key=repr)
        net = {n: sum(c for (u, v), c in moves.items() if v == n) - sum(c for (u, v), c in moves.items() if u == n)
               for n in F}
        out = []
        last_touch = {}
        for i, (u, v) in enumerate(pairs):
            last_touch[u] = i
            last_touch[v] = i
        if all(net[n] == 0 for n in F if n not in last_touch):
            counts = [0] * len(pairs)
            bal = dict(net)  # arrivals minus departures so far

            def rec(i):
                if i == len(pairs):
                    self.tick()
                    plan = {pr: c for pr, c in zip(pairs, counts) if c}
                    idle = self._idle(moves, plan, F, V, busy)
                    if idle is not None:
                        for split in self._split(plan):
                            out.append((split, idle))
                    return
                u, v = pairs[i]
                for c in range(busy + 1):
                    counts[i] = c
                    bal[u] -= c
                    bal[v] += c
                    if all(bal[n] == 0 for n in (u, v) if last_touch[n] == i):
                        rec(i + 1)
                    bal[u] += c
                    bal[v] -= c
                counts[i] = 0

            rec(0)
        self._empty_cache[key] = out
        return out

    @staticmethod
    def _idle(moves, plan, F, V, busy):
        """Idle vehicles per node covering departures not met by empty arrivals."""
        need = {}
        for n in F:
            dep = sum(c for (u, v), c in moves.items() if u == n)
            arr = sum(c for (u, v), c in plan.items() if v == n)
            need[n] = max(0, dep - arr)
        spare = V - busy - sum(plan.values()) - sum(need.values())
        if spare < 0:
            return None
        idle = dict(need)
        if F:
            idle[F[0]] += spare  # any placement of the rest is equivalent
        return idle

    def _split(self, plan):
        """Spread each pair's empty vehicles over its empty paths."""
        pairs = sorted(plan, key=repr)
        choices = []
        for (u, v) in pairs:
            k = len(self.cat.empty_paths[(u, v)])
            choices.append([{(u, v, j): n for j, n in enumerate(c) if n} for c in compositions(plan[(u, v)], k)])
        for combo in itertools.product(*choices):
            merged = {}
            for part in combo:
                merged.update(part)
            yield merged

    # -- main loop -----------------------------------------------------------
    def run(self, rel_tol=1e-9) -> OracleResult:
        s = self.s
        space = 1
        for (o, d, q), row in self.opts:
            space *= n_compositions(q, len(row))
            if space > self.cap:
                raise CapExceeded(f"{space} passenger assignments exceed the cap of {self.cap}")
        per_od = [list(compositions(q, len(row))) for (o, d, q), row in self.opts]
        best = math.inf
        optima = []
        pats = self.cat.rs_patterns
        for combo in itertools.product(*per_od):
            self.tick()
            load, pt, sms, segs, parked = Counter(), Counter(), Counter(), Counter(), Counter()
            static = 0.0
            for ((o, d, q), row), split in zip(self.opts, combo):
                for opt, n in zip(row, split):
                    if not n:
                        continue
                    static += n * opt["static"]
                    for lid, c in opt["load"].items():
                        load[lid] += n * c
                    for key, c in opt["pt"].items():
                        pt[key] += n * c
                    for m, c in opt["sms"].items():
                        sms[m] += n * c
                    for key, c in opt["segs"].items():
                        segs[key] += n * c
                    if opt["park"] is not None:
                        parked[opt["park"]] += n
            if any(n > s.parking_capacity.get(t, 0) for t, n in parked.items()):
                continue
            unit_plans = self.pt_options(pt)
            if not unit_plans:
                continue
            cd = Counter({l: n for (m, l), n in segs.items() if m == "CD"})
            cp = Counter({l: n for (m, l), n in segs.items() if m == "CP"})
            match = self.cp_match(cd, cp)
            if match is None:
                continue
            rs = Counter({l: n for (m, l), n in segs.items() if m == "RS"})
            eh = Counter({l: n for (m, l), n in segs.items() if m == "EH"})
            wait = sum(self.alpha * n * n / self.R[m] for m, n in sms.items())
            for vec in self.rs_vectors(rs):
                veh_load = Counter()
                moves = Counter()
                for seg, n in eh.items():
                    veh_load.update({lid: n for lid in seg})
                    moves[self.eh_nodes[seg]] += n
                for pat, y in zip(pats, vec):
                    if y:
                        veh_load.update({lid: y for lid in pat.vehicle})
                        moves[(pat.nodes[0], pat.nodes[-1])] += y
                if self.fleet_on:
                    fleet_plans = self.empty_options(moves)
                else:
                    fleet_plans = [({}, {})] if not moves else []
                for empties, idle in fleet_plans:
                    e_load = Counter()
                    for (u, v, k), n in empties.items():
                        e_load.update({lid: n for lid in self.cat.empty_paths[(u, v)][k].links})
                    for units in unit_plans:
                        self.tick()
                        x = Counter(load)
                        x.update(veh_load)
                        x.update(e_load)
                        for li, line in enumerate(s.pt_lines):
                            w = s.params.bus_pce if line.mode == "bus" else 1.0
                            for lid in line.links:
                                x[lid] += (line.frequency + units.get(li, 0)) * w
                        obj = static + wait + sum(exact_link_cost(s, lid, xa, self.principle)
                                                  for lid, xa in x.items() if xa)
                        tol = rel_tol * max(1.0, abs(best)) if best < math.inf else 0.0
                        if obj < best - tol:
                            best = obj
                            optima = []
                        if obj <= best + tol:
                            flows = {}
                            for ((o, d, q), row), split in zip(self.opts, combo):
                                for opt, n in zip(row, split):
                                    if n:
                                        flows[(o, d, opt["k"])] = n
                            optima.append(OracleOptimum(flows, {li: u for li, u in units.items() if u},
                                                        dict(match), vec, dict(empties), dict(idle), obj))
        # a later, slightly better value can leave stale near-ties behind
        optima = [o for o in optima if o.objective <= best + rel_tol * max(1.0, abs(best))]
        return OracleResult(None if best == math.inf else best, optima, self.count)


def brute_force_solve(s: Scenario, principle: str = "UE", cap: int = DEFAULT_CAP,
                      catalog: PathCatalog | None = None) -> OracleResult:
    """Global optimum and every optimal assignment of a micro instance.

    Raises ``CapExceeded`` when more than ``cap`` candidates would be needed.
    """
    if principle.upper() not in ("UE", "SO"):
        raise ValueError("principle must be UE or SO")
    catalog = catalog or build_catalog(s)
    return _Oracle(s, catalog, principle, cap).run()


def program_values(bm, opt: OracleOptimum) -> dict:
    """Values for every variable of a built program at an oracle optimum.

    Primary decisions (path flows, units, matching, patterns, empties, idle
    vehicles) are taken from the optimum; every defined quantity is then
    recovered from the program's equality rows, the binary expansion of the
    SMS demand and the epigraph rows.
    """
    prog = bm.program
    vals = {}
    for (o, d, k), n in opt.flows.items():
        vals[f"f[{o},{d},{k}]"] = float(n)
    for v in prog.variables:
        if v.name.startswith("f["):
            vals.setdefault(v.name, 0.0)
    for li in bm.line_units:
        vals[f"u[{li}]"] = float(opt.units.get(li, 0))
    cd_ids = {seg: i for i, seg in enumerate(sorted(bm.catalog.segments.get("CD", {})))}
    cp_ids = {seg: i for i, seg in enumerate(sorted(bm.catalog.segments.get("CP", {})))}
    for v in prog.variables:
        if v.name.startswith("g["):
            vals[v.name] = 0.0
    for (l, sg), n in opt.matching.items():
        vals[f"g[{cd_ids[l]},{cp_ids[sg]}]"] = float(n)
    for pi, y in enumerate(opt.patterns):
        vals[f"yrs[{pi}]"] = float(y)
    for v in prog.variables:
        if v.name.startswith("ye["):
            vals[v.name] = 0.0
    for (u, w, k), n in opt.empties.items():
        vals[f"ye[{u},{w},{k}]"] = float(n)
    for n, c in opt.idle.items():
        vals[f"qe[{n},{n}]"] = float(c)

    names = [v.name for v in prog.variables]
    eqs = [c for c in prog.constraints if c.lo == c.hi]
    progress = True
    while progress:
        progress = False
        for con in eqs:
            unknown = [k for k in con.coefs if names[k] not in vals]
            if len(unknown) != 1:
                continue
            k = unknown[0]
            rest = sum(c * vals[names[j]] for j, c in con.coefs.items() if j != k)
            vals[names[k]] = (con.lo - rest) / con.coefs[k]
            progress = True
            if names[k].startswith("q["):
                _bits(prog, names[k][2:-1], vals)
        # the waiting products need X, which comes from its own row
        for m in SMS_MODES:
            if f"X[{m}]" in vals and f"b[{m},0]" in vals and f"w[{m},0]" not in vals:
                k = 0
                while f"b[{m},{k}]" in vals:
                    vals[f"w[{m},{k}]"] = vals[f"b[{m},{k}]"] * vals[f"X[{m}]"]
                    k += 1
                progress = True
    for lid, pw in bm.pwl.items():
        xv = vals[f"x[{lid}]"]
        vals[f"y[{lid}]"] = max(0.0, max(float(a) * xv + float(b) for a, b in zip(pw.slopes, pw.intercepts)))
    missing = [n for n in names if n not in vals]
    if missing:
        raise ValueError(f"could not recover {missing[:5]}")
    return {n: vals[n] for n in names}


def _bits(prog, m, vals):
    q = int(round(vals[f"q[{m}]"]))
    k = 0
    while prog.has(f"b[{m},{k}]"):
        vals[f"b[{m},{k}]"] = float((q >> k) & 1)
        k += 1
