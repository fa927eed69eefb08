"""Path enumeration, intermodal composition and sub-path relations."""
from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field

from .costs import free_flow_cost, mid_link_weight
from .network import BASE_MODES, FLEET_MODES, MODE_SUBNET, Scenario, _node_key


@dataclass(frozen=True)
class Leg:
    mode: str
    links: tuple
    nodes: tuple

    @property
    def origin(self):
        return self.nodes[0]

    @property
    def destination(self):
        return self.nodes[-1]


@dataclass(frozen=True)
class Path:
    mode: str
    legs: tuple

    @property
    def links(self):
        return tuple(itertools.chain.from_iterable(l.links for l in self.legs))

    @property
    def nodes(self):
        out = list(self.legs[0].nodes)
        for leg in self.legs[1:]:
            out.extend(leg.nodes[1:])
        return tuple(out)

    @property
    def origin(self):
        return self.legs[0].origin

    @property
    def destination(self):
        return self.legs[-1].destination

    @property
    def transfer_nodes(self):
        return tuple(l.origin for l in self.legs[1:])

    @property
    def transfer_node(self):
        t = self.transfer_nodes
        return t[0] if t else None

    @property
    def leg_modes(self):
        return tuple(l.mode for l in self.legs)

    @property
    def intermodal(self):
        return len(self.legs) > 1

    def label(self):
        return "-".join(str(n) for n in self.nodes)


def is_subsequence(short, long) -> bool:
    """True when ``short`` is a contiguous subsequence of ``long``."""
    n, m = len(short), len(long)
    if n == 0 or n > m:
        return False
    first = short[0]
    for k in range(m - n + 1):
        if long[k] == first and long[k:k + n] == short:
            return True
    return False


# -- graph search ---------------------------------------------------------

def _legal_links(s: Scenario, mode: str):
    sub = MODE_SUBNET[mode]
    links = [l for l in s.links if l.subnetwork == sub]
    if mode in ("bus", "M"):
        links = [l for l in links if s.freq(mode, l.id) > 0]
    return links


def _adjacency(s: Scenario, mode: str):
    adj = {}
    for l in _legal_links(s, mode):
        w = max(mid_link_weight(s, mode, l), 1e-9)
        adj.setdefault(l.tail, []).append((l.id, l.head, w))
    for v in adj.values():
        v.sort(key=lambda e: e[0])
    return adj


def _dijkstra(adj, src, dst, banned_links, banned_nodes):
    """Cheapest path as (cost, link tuple, node tuple); ties by link-id sequence."""
    heap = [(0.0, (), (src,))]
    done = set()
    while heap:
        cost, links, nodes = heapq.heappop(heap)
        u = nodes[-1]
        if u == dst:
            return cost, links, nodes
        if u in done:
            continue
        done.add(u)
        for lid, v, w in adj.get(u, ()):
            if lid in banned_links or v in banned_nodes or v in done or v in nodes:
                continue
            heapq.heappush(heap, (cost + w, links + (lid,), nodes + (v,)))
    return None


def k_shortest(adj, src, dst, k):
    """Yen's loop-free k shortest paths on a multigraph given as adjacency lists."""
    first = _dijkstra(adj, src, dst, set(), set())
    if first is None:
        return []
    weight = {lid: w for edges in adj.values() for lid, _, w in edges}
    found = [first]
    cand = []
    seen = {first[1]}
    while len(found) < k:
        _, plinks, pnodes = found[-1]
        for i in range(len(plinks)):
            root_links = plinks[:i]
            root_nodes = pnodes[: i + 1]
            banned = {f[1][i] for f in found if f[1][:i] == root_links and len(f[1]) > i}
            spur = _dijkstra(adj, pnodes[i], dst, banned, set(root_nodes[:-1]))
            if spur is None:
                continue
            links = root_links + spur[1]
            if links in seen:
                continue
            seen.add(links)
            nodes = root_nodes[:-1] + spur[2]
            heapq.heappush(cand, (sum(weight[l] for l in links), links, nodes))
        if not cand:
            break
        found.append(heapq.heappop(cand))
    return found


# -- enumeration ------------------------------------------------------------

def _carpool_ok(s: Scenario, mode: str, links) -> bool:
    thr = s.toggles.carpool_min_distance
    if thr is None or mode not in ("CP", "CD"):
        return True
    return sum(s.link(l).length for l in links) > thr


def _rank(s: Scenario, paths):
    return sorted(paths, key=lambda p: (round(free_flow_cost(p, s), 9), p.links))


class _Enumerator:
    def __init__(self, s: Scenario):
        self.s = s
        self._adj = {}
        self._legs = {}

    def adj(self, mode):
        if mode not in self._adj:
            self._adj[mode] = _adjacency(self.s, mode)
        return self._adj[mode]

    def legs(self, i, j, mode, k):
        key = (i, j, mode, k)
        if key not in self._legs:
            raw = k_shortest(self.adj(mode), i, j, k)
            self._legs[key] = [Path(mode, (Leg(mode, links, nodes),)) for _, links, nodes in raw
                               if _carpool_ok(self.s, mode, links)]
        return self._legs[key]


def enumerate_paths(s: Scenario, od, m: str, limits=None, _enum=None) -> list:
    """Up to ``max_paths`` loop-free paths for OD ``od`` and mode ``m``
    (base mode or ``"m1&m2"`` composite), cheapest free-flow cost first."""
    i, j = od
    if i == j:
        raise ValueError("origin equals destination")
    max_paths, max_transfers = limits or (s.toggles.max_paths, s.toggles.max_transfers)
    enum = _enum or _Enumerator(s)
    legs = m.split("&")
    if len(legs) == 1:
        if m not in BASE_MODES:
            raise ValueError(f"unknown mode {m}")
        # search a few extra so the carpool filter and re-ranking keep max_paths
        return _rank(s, enum.legs(i, j, m, max_paths + 2))[:max_paths]
    if len(legs) - 1 > max_transfers:
        return []
    out = []
    for t in sorted(s.transfer_nodes, key=_node_key):
        if t in (i, j):
            continue
        firsts = enum.legs(i, t, legs[0], max_paths)
        rests = enumerate_paths(s, (t, j), "&".join(legs[1:]), (max_paths, max_transfers - 1), enum)
        for p1 in firsts:
            for p2 in rests:
                if set(p1.nodes[:-1]) & set(p2.nodes):
                    continue
                out.append(Path(m, p1.legs + p2.legs))
    return _rank(s, out)[:max_paths]


def compose_intermodal(s: Scenario, p1: Path, m1: str, p2: Path, m2: str) -> Path:
    if p1.destination != p2.origin:
        raise ValueError("legs do not meet")
    if p1.destination not in s.transfer_nodes:
        raise ValueError(f"junction {p1.destination} is not a transfer node")
    for p, m in ((p1, m1), (p2, m2)):
        legal = {l.id for l in _legal_links(s, m)}
        if any(l not in legal for l in p.links):
            raise ValueError(f"mode {m} cannot use links of {p.label()}")
    legs = tuple(Leg(m1, l.links, l.nodes) for l in p1.legs) + tuple(Leg(m2, l.links, l.nodes) for l in p2.legs)
    return Path(f"{m1}&{m2}", legs)


def default_composites(s: Scenario):
    """Park-and-ride style pairs around the metro when none are listed."""
    base = set(s.toggles.base_modes)
    if "M" not in base:
        return []
    first = [m for m in ("car", "CD", "CP", "RS", "EH", "bus", "W", "B") if m in base]
    last = [m for m in ("CP", "RS", "EH", "bus", "W", "B") if m in base]
    return [f"{m}&M" for m in first] + [f"M&{m}" for m in last]


def option_modes(s: Scenario):
    modes = list(s.toggles.base_modes)
    if s.toggles.intermodality:
        comps = list(s.toggles.composites) or default_composites(s)
        modes += [c for c in comps if len(c.split("&")) - 1 <= s.toggles.max_transfers]
    return modes


# -- catalog ------------------------------------------------------------------

@dataclass
class RsPattern:
    """A ridesharing vehicle route with the two passenger segments it carries."""

    vehicle: tuple  # link tuple of the vehicle path
    nodes: tuple
    seg_a: tuple
    seg_b: tuple
    kind: str  # SAME | NESTED | FIFO

    def mult(self, seg):
        return (self.seg_a == seg) + (self.seg_b == seg)


@dataclass
class PathCatalog:
    scenario: Scenario
    paths: dict = field(default_factory=dict)  # (i, j, mode) -> [Path]
    segments: dict = field(default_factory=dict)  # mode -> {link tuple: nodes}
    rs_patterns: list = field(default_factory=list)
    empty_paths: dict = field(default_factory=dict)  # (i, j) -> [Path]
    fleet_nodes: tuple = ()

    def options(self, i, j):
        out = []
        for (a, b, m), ps in self.paths.items():
            if (a, b) == (i, j):
                out.extend(ps)
        return out

    def all_paths(self):
        for key in self.paths:
            yield from self.paths[key]

    def iter_options(self):
        """(od, option index, path) in deterministic order."""
        for o, d, q in self.scenario.demand:
            for k, p in enumerate(self.options(o, d)):
                yield (o, d), k, p


def superpaths_containing(catalog: PathCatalog, p, r, s, m) -> list:
    key = p.links if isinstance(p, Path) else tuple(p)
    return [l for l in catalog.paths.get((r, s, m), []) if is_subsequence(key, l.links)]


def subpaths_of(catalog: PathCatalog, p, r, s, m) -> list:
    key = p.links if isinstance(p, Path) else tuple(p)
    return [l for l in catalog.paths.get((r, s, m), []) if is_subsequence(l.links, key)]


def build_incidence(catalog: PathCatalog):
    """delta[(i, j, mode, k)] = {link: 1}; positions[(i, j, mode, k)] = per-leg
    (origin link, destination link)."""
    delta, positions = {}, {}
    for (i, j, m), ps in catalog.paths.items():
        for k, p in enumerate(ps):
            delta[(i, j, m, k)] = {l: 1 for l in p.links}
            positions[(i, j, m, k)] = tuple((leg.links[0], leg.links[-1]) for leg in p.legs)
    return delta, positions


def segments_of(catalog: PathCatalog, mode):
    """Distinct link tuples travelled in ``mode`` (whole paths or legs)."""
    out = {}
    for p in catalog.all_paths():
        for leg in p.legs:
            if leg.mode == mode:
                out.setdefault(leg.links, leg.nodes)
    return dict(sorted(out.items()))


def rs_patterns(segs: dict, s: Scenario) -> list:
    """Vehicle routes covered exactly by two overlapping passenger segments."""
    out = []
    keys = list(segs)
    for a_i, a in enumerate(keys):
        for b in keys[a_i:]:
            na, nb = segs[a], segs[b]
            if a == b:
                out.append(RsPattern(a, na, a, b, "SAME"))
                continue
            if is_subsequence(b, a):
                out.append(RsPattern(a, na, a, b, "NESTED"))
                continue
            if is_subsequence(a, b):
                out.append(RsPattern(b, nb, a, b, "NESTED"))
                continue
            for first, second, nf, ns in ((a, b, na, nb), (b, a, nb, na)):
                # suffix of first overlaps a prefix of second by at least one link
                for ov in range(min(len(first), len(second)) - 1, 0, -1):
                    if first[-ov:] == second[:ov]:
                        nodes = nf + ns[ov + 1:]
                        if len(set(nodes)) == len(nodes):
                            out.append(RsPattern(first + second[ov:], nodes, a, b, "FIFO"))
                        break
    return out


def build_catalog(s: Scenario, with_vehicles: bool = True) -> PathCatalog:
    cat = PathCatalog(s)
    enum = _Enumerator(s)
    modes = option_modes(s)
    for o, d, q in s.demand:
        for m in modes:
            ps = enumerate_paths(s, (o, d), m, None, enum)
            if ps:
                cat.paths[(o, d, m)] = ps
    if not with_vehicles:
        return cat
    for m in ("CP", "CD", "RS", "EH"):
        segs = segments_of(cat, m)
        if segs:
            cat.segments[m] = segs
    if "RS" in cat.segments:
        cat.rs_patterns = rs_patterns(cat.segments["RS"], s)
    fleet = set()
    for p in cat.rs_patterns:
        fleet.update((p.nodes[0], p.nodes[-1]))
    for nodes in cat.segments.get("EH", {}).values():
        fleet.update((nodes[0], nodes[-1]))
    cat.fleet_nodes = tuple(sorted(fleet, key=_node_key))
    if len(cat.fleet_nodes) > 1 and any(m in s.toggles.modes for m in FLEET_MODES):
        adj = enum.adj("EH") if "EH" in s.toggles.modes else _adjacency(s, "RS")
        for a in cat.fleet_nodes:
            for b in cat.fleet_nodes:
                if a == b:
                    continue
                raw = k_shortest(adj, a, b, s.toggles.max_empty_paths)
                if raw:
                    cat.empty_paths[(a, b)] = [Path("EH", (Leg("EH", links, nodes),)) for _, links, nodes in raw]
    return cat


def catalog_rows(cat: PathCatalog, od=None, mode=None):
    """Rows (od, mode, path_links, length, transfer_node) for CSV output."""
    s = cat.scenario
    rows = []
    for (i, j, m), ps in cat.paths.items():
        if od is not None and (i, j) != tuple(od):
            continue
        if mode is not None and m != mode:
            continue
        for p in ps:
            length = sum(s.link(l).length for l in p.links)
            rows.append((f"{i}-{j}", m, "|".join(p.links), length,
                         "" if p.transfer_node is None else p.transfer_node))
    return rows
