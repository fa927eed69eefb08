"""Post-solution analytics: link loads, exact system cost, PoA, modal shares,
and the equilibrium audit."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

from .conservation import check_conservation
from .costs import FlowState, generalized_path_cost, link_travel_time, static_link_terms, leg_positions
from .network import PT_MODES, SMS_MODES, Scenario
from .pipeline import Assignment

# leg modes whose travellers are themselves vehicles (or bodies) on the link
_SELF_LOADING = ("car", "CD", "W", "B", "EH")
# modes whose trips only exist together with a partner (driver or co-rider)
_MATCHED = ("CP", "CD", "RS")


@dataclass
class LinkFlows:
    x: dict  # link -> total load (vehicles, walkers, cyclists; PT in units)
    xm: dict  # (link, mode) -> passengers of that mode on the link
    units: dict  # PT line index -> extra units bought


def _value(a: Assignment, name: str) -> float:
    try:
        return a.solution.value(name)
    except ValueError:
        return 0.0


def pt_unit_load(s: Scenario, units: dict) -> Counter:
    """Car-equivalent PT load per link for the schedule plus ``units`` extras."""
    load = Counter()
    for li, line in enumerate(s.pt_lines):
        w = s.params.bus_pce if line.mode == "bus" else 1.0
        for lid in line.links:
            load[lid] += (line.frequency + units.get(li, 0)) * w
    return load


def aggregate_link_flows(a: Assignment) -> LinkFlows:
    """Rebuild x_a and x_{a,m} from path flows, pattern flows and vehicle moves."""
    s, cat = a.scenario, a.catalog
    xm = Counter()
    x = Counter()
    for opt, f in a.option_flows():
        if f == 0.0:
            continue
        for leg in opt.path.legs:
            for lid in leg.links:
                xm[(lid, leg.mode)] += f
                if leg.mode in _SELF_LOADING:
                    x[lid] += f
    for pi, pat in enumerate(cat.rs_patterns):
        y = _value(a, f"yrs[{pi}]")
        for lid in pat.vehicle:
            x[lid] += y
    for (u, v), plist in cat.empty_paths.items():
        for k, path in enumerate(plist):
            y = _value(a, f"ye[{u},{v},{k}]")
            for lid in path.links:
                x[lid] += y
    units = {li: _value(a, f"u[{li}]") for li in range(len(s.pt_lines))}
    for lid, w in pt_unit_load(s, units).items():
        x[lid] += w
    return LinkFlows({l.id: float(x.get(l.id, 0.0)) for l in s.links}, dict(xm), units)


def sms_demand(a: Assignment) -> dict:
    q = Counter()
    for opt, f in a.option_flows():
        for leg in opt.path.legs:
            if leg.mode in SMS_MODES:
                q[leg.mode] += f
    return dict(q)


@dataclass
class SystemCost:
    travel: float  # sum of alpha * t_a(x_a) * x_a
    static: float  # service, PT waiting and money terms
    sms_waiting: float
    total: float


def system_cost(a: Assignment) -> SystemCost:
    """Total cost C(f) with the exact BPR curve (no piecewise surrogate)."""
    s = a.scenario
    p = s.params
    lf = aggregate_link_flows(a)
    travel = sum(p.alpha * link_travel_time(s.link(lid), xa, p) * xa for lid, xa in lf.x.items())
    static = 0.0
    for opt, f in a.option_flows():
        if f:
            static += f * sum(static_link_terms(s, m, lid, o, d) for m, lid, o, d in leg_positions(opt.path))
    q = sms_demand(a)
    wait = sum(p.alpha * qm * qm / p.R[m] for m, qm in q.items())
    return SystemCost(travel, static, wait, travel + static + wait)


def total_system_cost(a: Assignment) -> float:
    return system_cost(a).total


def price_of_anarchy(ue: Assignment, so: Assignment):
    """C(UE) / C(SO); None when the SO cost is zero (ratio undefined)."""
    for a in (ue, so):
        if a.solution.status != "Optimal":
            raise ValueError(f"{a.principle} solve is {a.solution.status}, not Optimal")
    c_so = total_system_cost(so)
    if c_so == 0.0:
        return None
    return total_system_cost(ue) / c_so


def bpr_poa_factor(beta: float) -> float:
    """B(beta) = (beta+1)^(1+1/beta) / ((beta+1)^(1+1/beta) - beta)."""
    if beta < 1:
        raise ValueError("beta must be at least 1")
    k = (beta + 1.0) ** (1.0 + 1.0 / beta)
    return k / (k - beta)


def poa_upper_bound(beta: float, n_links: int, n_modes: int, Q: float) -> float:
    if min(n_links, n_modes, Q) < 0:
        raise ValueError("counts must be nonnegative")
    return bpr_poa_factor(beta) + n_links * Q ** 2 + n_links * n_modes * Q


def scenario_poa_bound(s: Scenario) -> float:
    from .paths import option_modes
    return poa_upper_bound(s.params.beta, len(s.links), len(option_modes(s)), s.Q)


def modal_share(a: Assignment) -> dict:
    """Trips per option mode over Q.  Composite modes such as ``car&M`` (first
    mile) and ``M&car`` (last mile) are separate categories."""
    Q = a.scenario.Q
    if Q == 0:
        raise ValueError("modal share is undefined without demand")
    trips = Counter()
    for opt, f in a.option_flows():
        if f:
            trips[opt.path.mode] += f
    return {m: trips[m] / Q for m in sorted(trips)}


def conservation(a: Assignment, tol: float = 1e-6):
    return check_conservation(a.values(), a.scenario, a.catalog, tol)


# -- equilibrium audit -------------------------------------------------------

@dataclass
class OptionVerdict:
    od: tuple
    option: str  # mode:path label
    flow: float
    cost: float
    min_cost: float
    best_gain: float  # largest cost drop one unit could get by moving; <= 0 is stable
    best_target: str
    deviation_cost: float  # cost the unit would face on best_target
    verdict: str  # ok | kkt_gap | deviation | unused


@dataclass
class EquilibriumReport:
    rows: list = field(default_factory=list)
    deviations: dict = field(default_factory=dict)  # (od, from, to) -> (old cost, new cost)
    informational: list = field(default_factory=list)  # skipped re-matching moves
    tol: float = 1e-6

    @property
    def passed(self) -> bool:
        """Only the integer deviation test decides; the KKT gap is advisory."""
        return all(r.verdict != "deviation" for r in self.rows)

    @property
    def kkt_consistent(self) -> bool:
        return all(r.verdict not in ("kkt_gap", "deviation") for r in self.rows)


def _parks_at(path):
    """Transfer node where a park-and-ride traveller leaves the car, if any."""
    for leg in path.legs[:-1]:
        if leg.mode in ("car", "CD"):
            return leg.destination
    return None


def _label(path):
    return f"{path.mode}:{path.label()}"


class _DeviationState:
    """Flow state that can be nudged by one passenger and restored."""

    def __init__(self, a: Assignment):
        self.s = a.scenario
        lf = aggregate_link_flows(a)
        self.x = dict(lf.x)
        self.units = {li: round(u) for li, u in lf.units.items()}
        self.q = Counter(sms_demand(a))
        self.pt = Counter({k: v for k, v in lf.xm.items() if k[1] in PT_MODES})
        self.parked = Counter()
        for opt, f in a.option_flows():
            t = _parks_at(opt.path)
            if t is not None and f:
                self.parked[t] += round(f)

    def snapshot(self):
        return dict(self.x), dict(self.units), Counter(self.q), Counter(self.pt), Counter(self.parked)

    def restore(self, snap):
        self.x, self.units, self.q, self.pt, self.parked = snap

    def state(self):
        return FlowState(dict(self.x), dict(self.q))

    def move(self, path, sign):
        """Add (sign=+1) or remove (-1) one passenger; returns False when PT
        capacity would be exceeded on a line that cannot grow, or when the
        traveller would need a parking space that is not free."""
        s = self.s
        ok = True
        t = _parks_at(path)
        if t is not None:
            self.parked[t] += sign
            ok = self.parked[t] <= s.parking_capacity.get(t, 0)
        touched = set()
        for leg in path.legs:
            if leg.mode in _SELF_LOADING:
                for lid in leg.links:
                    self.x[lid] += sign
            if leg.mode in SMS_MODES:
                self.q[leg.mode] += sign
            if leg.mode in PT_MODES:
                for lid in leg.links:
                    self.pt[(lid, leg.mode)] += sign
                touched.update(li for li, line in enumerate(s.pt_lines)
                               if line.mode == leg.mode and any(l in line.links for l in leg.links))
        return self._resize(touched) and ok

    def _resize(self, lines):
        """Smallest unit count per touched line that carries its passengers
        (extra units load the road like scheduled ones)."""
        s = self.s
        ok = True
        for li in sorted(lines):
            line = s.pt_lines[li]
            need = 0
            for lid in line.links:
                pax = self.pt.get((lid, line.mode), 0)
                other = sum((ln.frequency + self.units.get(lj, 0)) * ln.veh_capacity
                            for lj, ln in enumerate(s.pt_lines)
                            if lj != li and ln.mode == line.mode and lid in ln.links)
                spare = pax - other - line.frequency * line.veh_capacity
                if spare > 0:
                    need = max(need, math.ceil(spare / line.veh_capacity - 1e-9))
            if need > 0 and not s.toggles.pt_elastic:
                ok = False
            new = need if s.toggles.pt_elastic else self.units.get(li, 0)
            delta = new - self.units.get(li, 0)
            if delta:
                w = s.params.bus_pce if line.mode == "bus" else 1.0
                for lid in line.links:
                    self.x[lid] += delta * w
                self.units[li] = new
        return ok


def verify_equilibrium(a: Assignment, tol: float = 1e-6) -> EquilibriumReport:
    """Two audits of a UE assignment, per OD pair.

    (a) every used option costs no more than the cheapest option (generalized
        cost with the SMS delay term, evaluated at the solution's loads);
    (b) moving one traveller from a used option to any other option, with the
        loads, PT units and waiting times re-evaluated after the move, never
        lowers that traveller's cost by more than ``tol``.

    Moves into or out of matched modes (carpool driver or passenger,
    ridesharing) would need a partner to be re-matched; they are listed in
    ``informational`` and never fail the audit.
    """
    s = a.scenario
    rep = EquilibriumReport(tol=tol)
    if a.solution.values is None:
        raise ValueError("no solution to verify")
    st = _DeviationState(a)
    base = st.state()
    by_od = {}
    for opt, f in a.option_flows():
        by_od.setdefault(opt.od, []).append((opt, round(f)))
    for od, opts in by_od.items():
        costs = [generalized_path_cost(o.path, s, base, "UE").total for o, _ in opts]
        # the reference minimum only ranges over options that can take one more
        # traveller as they are, without buying extra PT units
        open_ = []
        for o, f in opts:
            snap = st.snapshot()
            open_.append(st.move(o.path, +1) and st.units == snap[1])
            st.restore(snap)
        cmin_open = min((c for c, ok in zip(costs, open_) if ok), default=math.inf)
        for i, (opt, f) in enumerate(opts):
            c = costs[i]
            cmin = min(c, cmin_open)
            if f <= 0:
                rep.rows.append(OptionVerdict(od, _label(opt.path), 0.0, c, cmin, -math.inf, "", math.nan,
                                              "unused"))
                continue
            best, target, tcost = -math.inf, "", math.nan
            for j, (alt, _) in enumerate(opts):
                if j == i:
                    continue
                if set(opt.path.leg_modes + alt.path.leg_modes) & set(_MATCHED):
                    rep.informational.append((od, _label(opt.path), _label(alt.path)))
                    continue
                snap = st.snapshot()
                feasible = st.move(opt.path, -1) & st.move(alt.path, +1)
                if feasible:
                    new = generalized_path_cost(alt.path, s, st.state(), "UE").total
                    rep.deviations[(od, _label(opt.path), _label(alt.path))] = (c, new)
                    if c - new > best:
                        best, target, tcost = c - new, _label(alt.path), new
                st.restore(snap)
            if best > tol:
                verdict = "deviation"
            elif c - cmin > tol:
                verdict = "kkt_gap"
            else:
                verdict = "ok"
            rep.rows.append(OptionVerdict(od, _label(opt.path), float(f), c, cmin, best, target, tcost, verdict))
    return rep
