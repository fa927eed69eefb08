"""Exact conservation checks on a returned assignment.

Deliberately written against the raw scenario, the path catalog and the
variable *names* of a solution only.  Nothing here calls into the program
builder, so a modelling slip there cannot hide itself here.  All counting is
done on Python integers.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .network import Scenario
from .paths import PathCatalog


class NotIntegral(ValueError):
    pass


@dataclass
class ConservationReport:
    checked: dict = field(default_factory=dict)  # check -> number of rows tested
    failures: list = field(default_factory=list)  # (check, where, detail)

    @property
    def ok(self):
        return not self.failures

    def fail(self, check, where, detail):
        self.failures.append((check, where, detail))


def _int(name, v, tol):
    r = round(v)
    if abs(v - r) > tol:
        raise NotIntegral(f"{name} = {v!r} is not integral")
    return int(r)


def _get(values, name, tol):
    v = values.get(name)
    return 0 if v is None else _int(name, v, tol)


def check_conservation(values: dict, s: Scenario, catalog: PathCatalog, tol: float = 1e-6) -> ConservationReport:
    """Demand, fleet, ridesharing no-solo, parking and PT capacity on integer counts.

    ``values`` maps variable names to values (``Solution.as_dict()``).
    """
    rep = ConservationReport()
    flows = {}  # (o, d, k) -> int
    for o, d, q in s.demand:
        total = 0
        for k, _ in enumerate(catalog.options(o, d)):
            n = _get(values, f"f[{o},{d},{k}]", tol)
            if n < 0:
                rep.fail("demand", f"{o}-{d}", f"negative flow on option {k}")
            flows[(o, d, k)] = n
            total += n
        if total != q:
            rep.fail("demand", f"{o}-{d}", f"{total} assigned, {q} demanded")
    rep.checked["demand"] = len(s.demand)

    # passengers per leg segment, per mode
    seg_pax = {}
    parked = Counter()
    pt_pax = Counter()
    for o, d, _ in s.demand:
        for k, path in enumerate(catalog.options(o, d)):
            n = flows[(o, d, k)]
            if not n:
                continue
            for i, leg in enumerate(path.legs):
                seg_pax.setdefault(leg.mode, Counter())[leg.links] += n
                if leg.mode in ("car", "CD") and i < len(path.legs) - 1:
                    parked[leg.destination] += n
                if leg.mode in ("bus", "M"):
                    for lid in leg.links:
                        pt_pax[(lid, leg.mode)] += n

    # ridesharing: every passenger sits in a two-passenger pattern
    rs = seg_pax.get("RS", Counter())
    pat_flow = [_get(values, f"yrs[{pi}]", tol) for pi in range(len(catalog.rs_patterns))]
    seats = Counter()
    for pat, y in zip(catalog.rs_patterns, pat_flow):
        if y < 0:
            rep.fail("rs_no_solo", str(pat.vehicle), "negative pattern flow")
        seats[pat.seg_a] += y
        seats[pat.seg_b] += y
    for seg in sorted(set(rs) | set(seats)):
        if rs.get(seg, 0) != seats.get(seg, 0):
            rep.fail("rs_no_solo", "|".join(seg), f"{rs.get(seg, 0)} passengers, {seats.get(seg, 0)} matched")
    rep.checked["rs_no_solo"] = len(set(rs) | set(seats))

    # fleet: occupied trips + empty repositioning balance at every node
    fleet_nodes = list(catalog.fleet_nodes)
    if fleet_nodes and any(m in s.toggles.modes for m in ("RS", "EH")):
        moves = Counter()  # (u, v) -> vehicles
        for seg, n in seg_pax.get("EH", Counter()).items():
            nodes = catalog.segments["EH"][seg]
            moves[(nodes[0], nodes[-1])] += n
        for pat, y in zip(catalog.rs_patterns, pat_flow):
            moves[(pat.nodes[0], pat.nodes[-1])] += y
        busy = sum(moves.values())
        empty = Counter()
        for (u, v), plist in catalog.empty_paths.items():
            for k, _ in enumerate(plist):
                empty[(u, v)] += _get(values, f"ye[{u},{v},{k}]", tol)
        idle = {n: _get(values, f"qe[{n},{n}]", tol) for n in fleet_nodes}
        for n in fleet_nodes:
            inflow = sum(c for (u, v), c in list(moves.items()) + list(empty.items()) if v == n and u != n)
            outflow = sum(c for (u, v), c in list(moves.items()) + list(empty.items()) if u == n and v != n)
            if inflow != outflow:
                rep.fail("fleet", str(n), f"{inflow} vehicles arrive, {outflow} leave")
            avail = idle[n] + sum(c for (u, v), c in empty.items() if v == n)
            if avail < outflow - sum(c for (u, v), c in empty.items() if u == n):
                rep.fail("fleet", str(n), "departures exceed available vehicles")
        total = busy + sum(empty.values()) + sum(idle.values())
        if total != s.fleet_size:
            rep.fail("fleet", "all", f"{total} vehicles accounted, fleet is {s.fleet_size}")
        rep.checked["fleet"] = len(fleet_nodes) + 1

    # park-and-ride
    for t, n in sorted(parked.items(), key=lambda kv: str(kv[0])):
        cap = s.parking_capacity.get(t, 0)
        if n > cap:
            rep.fail("parking", str(t), f"{n} cars parked, capacity {cap}")
    rep.checked["parking"] = len(parked)

    # PT capacity, counting any extra units the solution bought
    units = {li: _get(values, f"u[{li}]", tol) for li in range(len(s.pt_lines))}
    for (lid, m), n in sorted(pt_pax.items()):
        cap = sum((line.frequency + units[li]) * line.veh_capacity
                  for li, line in enumerate(s.pt_lines) if line.mode == m and lid in line.links)
        if n > cap + tol:
            rep.fail("pt_capacity", f"{lid}/{m}", f"{n} passengers, capacity {cap}")
    rep.checked["pt_capacity"] = len(pt_pax)
    return rep
