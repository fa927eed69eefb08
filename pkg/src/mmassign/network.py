"""Scenario documents: parsing, defaults, validation."""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field

BASE_MODES = ("car", "bus", "M", "W", "B", "CD", "CP", "EH", "RS")
SMS_MODES = ("CP", "RS", "EH")
FLEET_MODES = ("RS", "EH")
PT_MODES = ("bus", "M")
SUBNETWORKS = ("RN", "MN", "WN", "BN")
MODE_SUBNET = {"car": "RN", "CD": "RN", "CP": "RN", "EH": "RN", "RS": "RN",
               "bus": "RN", "M": "MN", "W": "WN", "B": "BN"}

DEFAULT_PARAMS = {
    "R": {"CP": 100.0, "RS": 200.0, "EH": 200.0},
    "S": {"bus": 0.04, "M": 0.02, "CP": 0.04, "RS": 0.05, "EH": 0.03},
    "P": {"car": 0.17, "B": 0.08},
    "TF": {"bus": 0.3, "M": 0.3, "CP": 0.7, "CD": 0.7, "RS": 0.9, "EH": 1.1},
    "PF": {"car": 1.0},
    "CAP": {"CP": 1, "RS": 2},
    "Sp": {"M": 60.0, "B": 10.0, "W": 3.0},
    "alpha": 5.0,
    "gamma": 0.25,
    "eta": 0.15,
    "beta": 4.0,
    "bus_pce": 3.0,
}
DEFAULT_FLEET = 1000
DEFAULT_PARKING = 100
DEFAULT_TOGGLES = {
    "modes": list(BASE_MODES),
    "intermodality": False,
    "carpool_min_distance": None,
    "max_paths": 5,
    "max_transfers": 1,
    # extensions
    "pt_elastic": False,
    "pwl_segments": 32,
    "max_empty_paths": 1,
    "integer": True,
}


class ScenarioError(ValueError):
    """Malformed scenario document; ``path`` names the offending field."""

    def __init__(self, path, msg):
        super().__init__(f"{path}: {msg}")
        self.path = path


@dataclass(frozen=True)
class Link:
    id: str
    tail: object
    head: object
    length: float
    subnetwork: str
    t0: float = 0.0
    capacity: float = 0.0
    delay_coef: float | None = None  # congestion term scale; BPR uses eta * t0

    def to_doc(self):
        d = {"id": self.id, "tail": self.tail, "head": self.head, "length": self.length,
             "subnetwork": self.subnetwork}
        if self.subnetwork == "RN":
            d["t0"] = self.t0
            d["capacity"] = self.capacity
            if self.delay_coef is not None:
                d["delay_coef"] = self.delay_coef
        return d


@dataclass(frozen=True)
class PtLine:
    mode: str
    links: tuple
    frequency: float
    veh_capacity: float
    name: str = ""

    def to_doc(self):
        d = {"mode": self.mode, "links": list(self.links), "frequency": self.frequency,
             "veh_capacity": self.veh_capacity}
        if self.name:
            d["name"] = self.name
        return d


@dataclass(frozen=True)
class ModeParams:
    R: dict
    S: dict
    P: dict
    TF: dict
    PF: dict
    CAP: dict
    Sp: dict
    alpha: float
    gamma: float
    eta: float
    beta: float
    bus_pce: float

    def s(self, mode):
        if mode == "CD":
            return self.S.get("CP", 0.0)
        return self.S.get(mode, 0.0)

    def p(self, mode):
        if mode == "CD":
            return self.P.get("car", 0.0)
        return self.P.get(mode, 0.0)

    def pf(self, mode):
        if mode == "CD":
            return self.PF.get("car", 0.0)
        return self.PF.get(mode, 0.0)

    def to_doc(self):
        return {k: copy.deepcopy(getattr(self, k)) for k in DEFAULT_PARAMS}


@dataclass(frozen=True)
class ScenarioToggles:
    modes: tuple
    intermodality: bool
    carpool_min_distance: float | None
    max_paths: int
    max_transfers: int
    pt_elastic: bool = False
    pwl_segments: int = 32
    max_empty_paths: int = 1
    integer: bool = True

    @property
    def base_modes(self):
        return tuple(m for m in self.modes if "&" not in m)

    @property
    def composites(self):
        return tuple(m for m in self.modes if "&" in m)

    def to_doc(self):
        return {"modes": list(self.modes), "intermodality": self.intermodality,
                "carpool_min_distance": self.carpool_min_distance, "max_paths": self.max_paths,
                "max_transfers": self.max_transfers, "pt_elastic": self.pt_elastic,
                "pwl_segments": self.pwl_segments, "max_empty_paths": self.max_empty_paths,
                "integer": self.integer}


@dataclass(frozen=True)
class Scenario:
    name: str
    nodes: tuple
    transfer_nodes: tuple
    links: tuple
    pt_lines: tuple
    demand: tuple  # ((o, d, q), ...)
    params: ModeParams
    fleet_size: int
    parking_capacity: dict
    toggles: ScenarioToggles
    _link_index: dict = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_link_index", {l.id: l for l in self.links})

    @property
    def Q(self) -> int:
        return sum(q for _, _, q in self.demand)

    @property
    def od_pairs(self):
        return [(o, d) for o, d, q in self.demand]

    @property
    def origins(self):
        return tuple(sorted({o for o, _, _ in self.demand}, key=_node_key))

    @property
    def destinations(self):
        return tuple(sorted({d for _, d, _ in self.demand}, key=_node_key))

    def link(self, lid) -> Link:
        return self._link_index[lid]

    def demand_of(self, o, d) -> int:
        return sum(q for oo, dd, q in self.demand if (oo, dd) == (o, d))

    def links_of(self, subnetwork):
        return [l for l in self.links if l.subnetwork == subnetwork]

    def freq(self, mode, lid) -> float:
        return sum(line.frequency for line in self.pt_lines if line.mode == mode and lid in line.links)

    def pt_capacity(self, mode, lid) -> float:
        return sum(line.frequency * line.veh_capacity for line in self.pt_lines
                   if line.mode == mode and lid in line.links)

    def pt_units(self, lid) -> float:
        """Scheduled PT vehicles on a link in car equivalents."""
        total = 0.0
        for line in self.pt_lines:
            if lid in line.links:
                total += line.frequency * (self.params.bus_pce if line.mode == "bus" else 1.0)
        return total

    def mode_enabled(self, m) -> bool:
        return m in self.toggles.modes

    def with_demand_scale(self, k) -> "Scenario":
        doc = scenario_to_doc(self)
        for row in doc["demand"]:
            row["q"] = int(round(row["q"] * k))
        return scenario_from_doc(doc)


def _node_key(n):
    return (0, n, "") if isinstance(n, (int, float)) else (1, 0, str(n))


def _num(doc, path, key, default=None, positive=False, nonneg=True, required=False):
    if key not in doc or doc[key] is None:
        if required:
            raise ScenarioError(f"{path}.{key}", "missing required field")
        return default
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ScenarioError(f"{path}.{key}", f"expected a number, got {v!r}")
    if nonneg and v < 0:
        raise ScenarioError(f"{path}.{key}", f"negative value {v}")
    if positive and v <= 0:
        raise ScenarioError(f"{path}.{key}", f"must be positive, got {v}")
    return v


def _merge_params(doc):
    out = copy.deepcopy(DEFAULT_PARAMS)
    for k, v in (doc or {}).items():
        if k not in out:
            raise ScenarioError(f"params.{k}", "unknown parameter")
        if isinstance(out[k], dict):
            if not isinstance(v, dict):
                raise ScenarioError(f"params.{k}", "expected a mode map")
            for mk, mv in v.items():
                _num(v, f"params.{k}", mk)
                out[k][mk] = mv
        else:
            _num(doc, "params", k)
            out[k] = v
    return out


def scenario_from_doc(doc: dict, name: str = "") -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("$", "top level must be an object")
    for key in ("nodes", "links"):
        if key not in doc:
            raise ScenarioError(key, "missing required section")
    nodes, transfer = [], []
    for k, n in enumerate(doc["nodes"]):
        if isinstance(n, dict):
            if "id" not in n:
                raise ScenarioError(f"nodes[{k}].id", "missing node id")
            nodes.append(n["id"])
            if n.get("transfer"):
                transfer.append(n["id"])
        else:
            nodes.append(n)
    transfer += [t for t in doc.get("transfer_nodes", []) if t not in transfer]
    nodeset = set(nodes)
    if len(nodeset) != len(nodes):
        raise ScenarioError("nodes", "duplicate node id")
    for t in transfer:
        if t not in nodeset:
            raise ScenarioError("transfer_nodes", f"unknown node {t!r}")
    links = []
    seen = set()
    for k, ld in enumerate(doc["links"]):
        p = f"links[{k}]"
        lid = str(ld.get("id", ""))
        if not lid:
            raise ScenarioError(f"{p}.id", "missing link id")
        if lid in seen:
            raise ScenarioError(f"{p}.id", f"duplicate link id {lid}")
        seen.add(lid)
        for end in ("tail", "head"):
            if ld.get(end) not in nodeset:
                raise ScenarioError(f"{p}.{end}", f"unknown node {ld.get(end)!r}")
        sub = ld.get("subnetwork")
        if sub not in SUBNETWORKS:
            raise ScenarioError(f"{p}.subnetwork", f"expected one of {SUBNETWORKS}, got {sub!r}")
        length = _num(ld, p, "length", required=True, positive=True)
        t0 = cap = 0.0
        dc = None
        if sub == "RN":
            t0 = _num(ld, p, "t0", required=True)
            cap = _num(ld, p, "capacity", required=True)
            dc = _num(ld, p, "delay_coef")
            if t0 == 0 and not dc:
                raise ScenarioError(f"{p}.t0", "free-flow time must be positive")
        links.append(Link(lid, ld["tail"], ld["head"], float(length), sub, float(t0), float(cap),
                          None if dc is None else float(dc)))
    linkset = {l.id: l for l in links}
    lines = []
    for k, pl in enumerate(doc.get("pt_lines", [])):
        p = f"pt_lines[{k}]"
        mode = pl.get("mode")
        if mode not in PT_MODES:
            raise ScenarioError(f"{p}.mode", f"expected bus or M, got {mode!r}")
        lk = tuple(str(x) for x in pl.get("links", []))
        for x in lk:
            if x not in linkset:
                raise ScenarioError(f"{p}.links", f"unknown link {x!r}")
        freq = _num(pl, p, "frequency", required=True, positive=True)
        cap = _num(pl, p, "veh_capacity", required=True, positive=True)
        lines.append(PtLine(mode, lk, float(freq), float(cap), str(pl.get("name", ""))))
    demand = []
    for k, row in enumerate(doc.get("demand", [])):
        p = f"demand[{k}]"
        for end in ("o", "d"):
            if row.get(end) not in nodeset:
                raise ScenarioError(f"{p}.{end}", f"unknown node {row.get(end)!r}")
        q = _num(row, p, "q", required=True)
        if int(q) != q:
            raise ScenarioError(f"{p}.q", "demand must be an integer traveler count")
        if row["o"] == row["d"]:
            raise ScenarioError(p, "origin equals destination")
        demand.append((row["o"], row["d"], int(q)))
    if len({(o, d) for o, d, _ in demand}) != len(demand):
        raise ScenarioError("demand", "duplicate OD pair")
    params = _merge_params(doc.get("params"))
    mp = ModeParams(**params)
    fleet = _num(doc, "$", "fleet_size", DEFAULT_FLEET)
    if int(fleet) != fleet:
        raise ScenarioError("fleet_size", "must be an integer")
    pk = {t: DEFAULT_PARKING for t in transfer}
    raw_pk = doc.get("parking_capacity", {}) or {}
    for key, v in raw_pk.items():
        node = _lookup_node(key, nodeset)
        if node is None:
            raise ScenarioError(f"parking_capacity.{key}", "unknown node")
        _num(raw_pk, "parking_capacity", key)
        pk[node] = v
    tg = dict(DEFAULT_TOGGLES)
    for k, v in (doc.get("toggles") or {}).items():
        if k not in tg:
            raise ScenarioError(f"toggles.{k}", "unknown toggle")
        tg[k] = v
    for m in tg["modes"]:
        legs = m.split("&")
        for leg in legs:
            if leg not in BASE_MODES:
                raise ScenarioError("toggles.modes", f"unknown mode {m!r}")
    if tg["max_paths"] < 1 or tg["max_transfers"] < 0 or tg["pwl_segments"] < 2:
        raise ScenarioError("toggles", "max_paths >= 1, max_transfers >= 0, pwl_segments >= 2")
    toggles = ScenarioToggles(tuple(tg["modes"]), bool(tg["intermodality"]),
                              None if tg["carpool_min_distance"] is None else float(tg["carpool_min_distance"]),
                              int(tg["max_paths"]), int(tg["max_transfers"]), bool(tg["pt_elastic"]),
                              int(tg["pwl_segments"]), int(tg["max_empty_paths"]), bool(tg["integer"]))
    return Scenario(name or str(doc.get("name", "scenario")), tuple(nodes), tuple(transfer), tuple(links),
                    tuple(lines), tuple(demand), mp, int(fleet), pk, toggles)


def _lookup_node(key, nodeset):
    if key in nodeset:
        return key
    try:
        k = int(key)
    except (TypeError, ValueError):
        return None
    return k if k in nodeset else None


def load_scenario(text: str, name: str = "") -> Scenario:
    """Parse a scenario document (JSON text)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"line {exc.lineno} col {exc.colno}", exc.msg) from None
    return scenario_from_doc(doc, name)


def read_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return load_scenario(fh.read())


def scenario_to_doc(s: Scenario) -> dict:
    return {
        "name": s.name,
        "nodes": [{"id": n, "transfer": True} if n in s.transfer_nodes else {"id": n} for n in s.nodes],
        "links": [l.to_doc() for l in s.links],
        "pt_lines": [p.to_doc() for p in s.pt_lines],
        "demand": [{"o": o, "d": d, "q": q} for o, d, q in s.demand],
        "params": s.params.to_doc(),
        "fleet_size": s.fleet_size,
        "parking_capacity": {str(k): v for k, v in s.parking_capacity.items()},
        "toggles": s.toggles.to_doc(),
    }


def serialize_scenario(s: Scenario) -> str:
    return json.dumps(scenario_to_doc(s), indent=1)


def apply_override(doc: dict, dotted: str, value) -> dict:
    """Set ``a.b.c`` inside a scenario document, e.g. ``params.TF.RS``."""
    keys = dotted.split(".")
    cur = doc
    for k in keys[:-1]:
        if isinstance(cur, list):
            cur = cur[int(k)]
            continue
        if k not in cur or cur[k] is None:
            cur[k] = {}
        cur = cur[k]
    if isinstance(cur, list):
        cur[int(keys[-1])] = value
    else:
        cur[keys[-1]] = value
    return doc


def parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


# -- validation -------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    code: str
    message: str


def validate_scenario(s: Scenario) -> list:
    out = []
    modes = set(s.toggles.modes)
    for t in s.transfer_nodes:
        touches = {l.subnetwork for l in s.links if t in (l.tail, l.head)}
        if "MN" not in touches:
            out.append(Violation("transfer_no_metro", f"transfer node {t} unreachable by metro"))
        if "RN" not in touches:
            out.append(Violation("transfer_no_road", f"transfer node {t} has no road link"))
    for l in s.links:
        if l.subnetwork == "RN" and l.capacity <= 0:
            out.append(Violation("zero_capacity", f"road link {l.id} has zero capacity"))
    if ("CP" in modes) != ("CD" in modes):
        out.append(Violation("carpool_pair", "CP and CD must be enabled together"))
    for m in s.toggles.composites:
        for leg in m.split("&"):
            if leg not in modes:
                out.append(Violation("composite_leg", f"{m} needs base mode {leg} enabled"))
        if len(m.split("&")) > s.toggles.max_transfers + 1:
            out.append(Violation("composite_depth", f"{m} exceeds max_transfers"))
    for line in s.pt_lines:
        want = "RN" if line.mode == "bus" else "MN"
        for lid in line.links:
            if s.link(lid).subnetwork != want:
                out.append(Violation("pt_subnetwork", f"{line.mode} line uses {lid} outside {want}"))
                break
    # OD connectivity: at least one enabled option must connect each demanded pair
    from .paths import build_catalog

    if s.demand:
        cat = build_catalog(s, with_vehicles=False)
        for o, d, q in s.demand:
            if q > 0 and not cat.options(o, d):
                out.append(Violation("disconnected", f"OD ({o},{d}) disconnected for all enabled modes"))
    return out
