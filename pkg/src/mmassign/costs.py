"""Link-level cost components and generalized path costs."""
from __future__ import annotations

from dataclasses import dataclass, field

from .network import SMS_MODES, Link, ModeParams, Scenario

_SUBNET_SPEED = {"MN": "M", "BN": "B", "WN": "W"}


def delay_coef(link: Link, params: ModeParams) -> float:
    if link.delay_coef is not None:
        return link.delay_coef
    return params.eta * link.t0


def link_travel_time(link: Link, x: float, params: ModeParams) -> float:
    """BPR time on road links, length over speed elsewhere."""
    if link.subnetwork == "RN":
        if x <= 0.0:
            return link.t0
        return link.t0 + delay_coef(link, params) * (x / link.capacity) ** params.beta
    return link.length / params.Sp[_SUBNET_SPEED[link.subnetwork]]


def congestion_term(link: Link, x: float, params: ModeParams, principle: str) -> float:
    """Nonlinear part of the link objective: the BPR primitive (UE) or t(x)*x (SO),
    without the free-flow linear part."""
    if link.subnetwork != "RN":
        return 0.0
    b = delay_coef(link, params)
    if b == 0.0:
        return 0.0
    beta = params.beta
    val = b * max(x, 0.0) ** (beta + 1) / link.capacity ** beta
    return val / (beta + 1) if principle == "UE" else val


def link_objective(link: Link, x: float, params: ModeParams, principle: str) -> float:
    """Integral of t over [0, x] for UE, t(x)*x for SO (time units)."""
    if link.subnetwork == "RN":
        return link.t0 * x + congestion_term(link, x, params, principle)
    return link_travel_time(link, x, params) * x


def waiting_time(mode: str, at_origin: bool, q_m: float = 0.0, freq: float = 0.0,
                 params: ModeParams | None = None) -> float:
    if not at_origin:
        return 0.0
    if mode in ("bus", "M"):
        return 1.0 / (2.0 * freq)
    if mode in SMS_MODES:
        return q_m / params.R[mode]
    return 0.0


def service_time(mode: str, at_origin: bool, at_dest: bool, params: ModeParams) -> float:
    o, d = float(at_origin), float(at_dest)
    if mode in ("bus", "M"):
        return params.s(mode)
    if mode in SMS_MODES:
        return params.s(mode) * (o + d)
    if mode == "CD":
        return params.s("CD") * (o + d) + params.p("car") * d
    if mode in ("car", "B"):
        return params.p(mode) * d
    return 0.0


def monetary_cost(mode: str, link: Link, at_dest: bool, params: ModeParams) -> float:
    d = float(at_dest)
    if mode == "car":
        return params.gamma * link.length + params.pf("car") * d
    if mode == "CD":
        return params.gamma * link.length + params.pf("CD") * d - params.TF.get("CD", 0.0)
    if mode in ("bus", "M") or mode in SMS_MODES:
        return params.TF.get(mode, 0.0)
    return 0.0


@dataclass(frozen=True)
class LinkCostBreakdown:
    link: str
    mode: str
    travel_time: float
    waiting: float
    service: float
    money: float


@dataclass
class GeneralizedPathCost:
    total: float
    time: float
    money: float
    delay: float
    components: list = field(default_factory=list)


@dataclass
class FlowState:
    """Link totals x_a and per-mode SMS demand q_m at which costs are evaluated."""

    x: dict = field(default_factory=dict)
    q: dict = field(default_factory=dict)


def leg_positions(path):
    """Yield (mode, link_id, at_origin, at_dest) for every link of every leg."""
    for leg in path.legs:
        last = len(leg.links) - 1
        for k, lid in enumerate(leg.links):
            yield leg.mode, lid, k == 0, k == last


def static_link_terms(s: Scenario, mode, lid, at_o, at_d):
    """Flow-independent part of a passenger's per-link cost, excluding SMS waiting
    (α·(ST + PT waiting) + money)."""
    p = s.params
    link = s.link(lid)
    wt = waiting_time(mode, at_o, 0.0, s.freq(mode, lid), p) if mode in ("bus", "M") else 0.0
    return p.alpha * (wt + service_time(mode, at_o, at_d, p)) + monetary_cost(mode, link, at_d, p)


def generalized_path_cost(path, s: Scenario, state: FlowState | None = None,
                          principle: str = "UE") -> GeneralizedPathCost:
    state = state or FlowState()
    p = s.params
    t_sum = money = delay = 0.0
    comps = []
    for mode, lid, at_o, at_d in leg_positions(path):
        link = s.link(lid)
        if link.subnetwork == "RN" and lid not in state.x and state.x:
            raise KeyError(f"missing flow for link {lid}")
        x = state.x.get(lid, s.pt_units(lid))
        tt = link_travel_time(link, x, p)
        qm = state.q.get(mode, 0.0)
        wt = waiting_time(mode, at_o, qm, s.freq(mode, lid), p)
        st = service_time(mode, at_o, at_d, p)
        c = monetary_cost(mode, link, at_d, p)
        comps.append(LinkCostBreakdown(lid, mode, tt, wt, st, c))
        t_sum += tt + wt + st
        money += c
        if principle == "UE" and mode in SMS_MODES and at_o:
            delay += p.alpha * qm / p.R[mode]
    return GeneralizedPathCost(p.alpha * t_sum + money + delay, t_sum, money, delay, comps)


def free_flow_cost(path, s: Scenario) -> float:
    return generalized_path_cost(path, s, FlowState()).total


def mid_link_weight(s: Scenario, mode: str, link: Link) -> float:
    """Free-flow cost of traversing ``link`` as an interior link of a ``mode`` leg."""
    p = s.params
    return p.alpha * (link_travel_time(link, s.pt_units(link.id), p) if link.subnetwork != "RN" else link.t0) \
        + p.alpha * service_time(mode, False, False, p) + monetary_cost(mode, link, False, p)
