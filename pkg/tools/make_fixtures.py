"""Regenerate the shipped scenario documents under src/mmassign/data.

All link data below is invented; the four-node ring only mirrors the
topology (ring 1-2-3-4, metro between transfer nodes 3 and 4).
"""
import json
import pathlib

OUT = pathlib.Path(__file__).resolve().parents[1] / "src" / "mmassign" / "data"

RING = {("1", "2"): 100, ("2", "3"): 110, ("3", "4"): 105, ("4", "1"): 290}


def ring_links(capacity=2000.0):
    links = []
    for (a, b), length in RING.items():
        for t, h in ((a, b), (b, a)):
            links.append({"id": f"{t}-{h}", "tail": int(t), "head": int(h), "length": length,
                          "subnetwork": "RN", "t0": round(length / 1000.0, 4), "capacity": capacity})
    for t, h in (("3", "4"), ("4", "3")):
        links.append({"id": f"m{t}-{h}", "tail": int(t), "head": int(h), "length": 105,
                      "subnetwork": "MN"})
    for (a, b), length in RING.items():
        for t, h in ((a, b), (b, a)):
            links.append({"id": f"w{t}-{h}", "tail": int(t), "head": int(h), "length": length, "subnetwork": "WN"})
            links.append({"id": f"b{t}-{h}", "tail": int(t), "head": int(h), "length": length, "subnetwork": "BN"})
    return links


def synth(name, modes, intermodality=False, bus_freq=4, bus_cap=25, demand=100, **extra):
    doc = {
        "name": name,
        "nodes": [{"id": 1}, {"id": 2}, {"id": 3, "transfer": True}, {"id": 4, "transfer": True}],
        "links": ring_links(extra.pop("capacity", 2000.0)),
        "pt_lines": [
            {"mode": "bus", "name": "cw", "links": ["1-2", "2-3", "3-4", "4-1"], "frequency": bus_freq,
             "veh_capacity": bus_cap},
            {"mode": "bus", "name": "ccw", "links": ["1-4", "4-3", "3-2", "2-1"], "frequency": bus_freq,
             "veh_capacity": bus_cap},
            {"mode": "M", "name": "metro", "links": ["m3-4", "m4-3"], "frequency": 6, "veh_capacity": 100},
        ],
        "demand": [{"o": o, "d": d, "q": demand} for o in range(1, 5) for d in range(1, 5) if o != d],
        "params": {"gamma": 0.01, "PF": {"car": 5.0}, "R": {"CP": 100.0, "RS": 400.0, "EH": 200.0},
                   "Sp": {"M": 1000.0, "B": 10.0, "W": 3.0}},
        "toggles": {"modes": modes, "intermodality": intermodality},
    }
    doc["toggles"].update(extra.pop("toggles", {}))
    doc.update(extra)
    return doc


def b1_two_paths():
    """One OD pair served by two bus lines.  The first line is full at 90
    riders; link 1-2's capacity is tuned so that the 91st rider, who forces
    an extra bus onto 1-2, faces a cost of 14.668."""
    return {
        "name": "synth_b1",
        "nodes": [{"id": 1}, {"id": 2}, {"id": 3}],
        "links": [
            {"id": "1-2", "tail": 1, "head": 2, "length": 10, "subnetwork": "RN", "t0": 2.5, "capacity": 23.234},
            {"id": "1-3", "tail": 1, "head": 3, "length": 6, "subnetwork": "RN", "t0": 1.225, "capacity": 1000.0},
            {"id": "3-2", "tail": 3, "head": 2, "length": 6, "subnetwork": "RN", "t0": 1.225, "capacity": 1000.0},
            {"id": "w1-2", "tail": 1, "head": 2, "length": 10, "subnetwork": "WN"},
        ],
        "pt_lines": [
            {"mode": "bus", "name": "direct", "links": ["1-2"], "frequency": 6, "veh_capacity": 15},
            {"mode": "bus", "name": "via3", "links": ["1-3", "3-2"], "frequency": 2, "veh_capacity": 50},
        ],
        "demand": [{"o": 1, "d": 2, "q": 100}],
        "toggles": {"modes": ["car", "bus", "W"], "pt_elastic": True},
    }


def parallel_links():
    """Two identical links with cost equal to their flow; one traveller."""
    links = [{"id": lid, "tail": 1, "head": 2, "length": 1, "subnetwork": "RN", "t0": 0.0,
              "capacity": 1.0, "delay_coef": 1.0} for lid in ("a", "b")]
    return {
        "name": "parallel_links",
        "nodes": [{"id": 1}, {"id": 2}],
        "links": links,
        "pt_lines": [],
        "demand": [{"o": 1, "d": 2, "q": 1}],
        "params": {"alpha": 1.0, "beta": 1.0, "gamma": 0.0, "P": {"car": 0.0}, "PF": {"car": 0.0}},
        "toggles": {"modes": ["car"]},
    }


def congested():
    """Car-only Pigou-style pair: a short link that congests (quartic BPR) and
    a detour whose time barely moves.  Base demand 10; the PoA sweep scales it
    up to 100, where UE still keeps everyone on the short link."""
    return {
        "name": "synth_congested",
        "nodes": [{"id": 1}, {"id": 2}, {"id": 3}],
        "links": [
            {"id": "1-2", "tail": 1, "head": 2, "length": 68, "subnetwork": "RN", "t0": 0.68,
             "capacity": 100.0, "delay_coef": 0.30},
            {"id": "1-3", "tail": 1, "head": 3, "length": 50, "subnetwork": "RN", "t0": 0.5, "capacity": 1e5},
            {"id": "3-2", "tail": 3, "head": 2, "length": 50, "subnetwork": "RN", "t0": 0.5, "capacity": 1e5},
        ],
        "pt_lines": [],
        "demand": [{"o": 1, "d": 2, "q": 10}],
        "params": {"alpha": 1.0, "gamma": 0.0, "P": {"car": 0.0}, "PF": {"car": 0.0}},
        "toggles": {"modes": ["car"], "pwl_segments": 200},
    }


# 24-node test network: (tail, head, free-flow minutes, capacity), one direction
# per row; the reverse link is added with the same data.
SIOUX = [
    (1, 2, 6, 25900), (1, 3, 4, 23403), (2, 6, 5, 4958), (3, 4, 4, 17110), (3, 12, 4, 23403),
    (4, 5, 2, 17783), (4, 11, 6, 4908), (5, 6, 4, 4948), (5, 9, 5, 10000), (6, 8, 2, 4899),
    (7, 8, 3, 7842), (7, 18, 2, 23403), (8, 9, 10, 5050), (8, 16, 5, 5046), (9, 10, 3, 13916),
    (10, 11, 5, 10000), (10, 15, 6, 13512), (10, 16, 4, 4855), (10, 17, 8, 4994), (11, 12, 6, 4909),
    (11, 14, 4, 4877), (12, 13, 3, 25900), (13, 24, 4, 5091), (14, 15, 5, 5128), (14, 23, 4, 4925),
    (15, 19, 3, 14565), (15, 22, 3, 9599), (16, 17, 2, 5230), (16, 18, 3, 19680), (17, 19, 2, 4824),
    (18, 20, 4, 23403), (19, 20, 4, 5003), (20, 21, 6, 5060), (20, 22, 5, 5076), (21, 22, 2, 5230),
    (21, 24, 3, 4885), (22, 23, 4, 5000), (23, 24, 2, 5079),
]


def siouxfalls_30od(n_od=30, q=100, seed=7):
    """Road data from the classic table (minutes -> hours, 50 km/h for
    lengths); PT lines and the OD subset are invented."""
    import random
    links = []
    for a, b, minutes, cap in SIOUX:
        for t, h in ((a, b), (b, a)):
            t0 = round(minutes / 60.0, 6)
            length = round(minutes / 60.0 * 50.0, 4)
            links.append({"id": f"{t}-{h}", "tail": t, "head": h, "length": length, "subnetwork": "RN",
                          "t0": t0, "capacity": float(cap)})
            links.append({"id": f"w{t}-{h}", "tail": t, "head": h, "length": length, "subnetwork": "WN"})
    metro = [(4, 6, 4.0), (6, 15, 9.0), (15, 19, 2.5)]
    for a, b, km in metro:
        for t, h in ((a, b), (b, a)):
            links.append({"id": f"m{t}-{h}", "tail": t, "head": h, "length": km, "subnetwork": "MN"})
    bus_routes = {
        "b1": [1, 3, 4, 11, 14, 23, 24],
        "b2": [2, 6, 8, 16, 18, 20, 22, 15],
        "b3": [12, 11, 10, 17, 19, 20, 21],
    }
    lines = []
    for name, nodes in bus_routes.items():
        fwd = [f"{a}-{b}" for a, b in zip(nodes, nodes[1:])]
        back = [f"{b}-{a}" for a, b in reversed(list(zip(nodes, nodes[1:])))]
        lines.append({"mode": "bus", "name": name, "links": fwd, "frequency": 6, "veh_capacity": 60})
        lines.append({"mode": "bus", "name": name + "r", "links": back, "frequency": 6, "veh_capacity": 60})
    lines.append({"mode": "M", "name": "m", "links": ["m4-6", "m6-15", "m15-19"], "frequency": 10,
                  "veh_capacity": 300})
    lines.append({"mode": "M", "name": "mr", "links": ["m19-15", "m15-6", "m6-4"], "frequency": 10,
                  "veh_capacity": 300})
    rng = random.Random(seed)
    pairs = [(o, d) for o in range(1, 25) for d in range(1, 25) if o != d]
    chosen = sorted(rng.sample(pairs, n_od))
    return {
        "name": "siouxfalls_30od",
        "nodes": [{"id": n, "transfer": n in (4, 6, 15, 19)} for n in range(1, 25)],
        "links": links,
        "pt_lines": lines,
        "demand": [{"o": o, "d": d, "q": q} for o, d in chosen],
        "params": {"alpha": 20.0, "R": {"CP": 500.0, "RS": 1000.0, "EH": 1000.0}},
        "fleet_size": 3500,
        "parking_capacity": {str(n): 800 for n in (4, 6, 15, 19)},
        "toggles": {"modes": ["car", "bus", "M", "W", "CD", "CP", "EH", "RS"], "intermodality": True,
                    "max_paths": 3},
    }


def empty():
    return {
        "name": "empty",
        "nodes": [{"id": 1}, {"id": 2}],
        "links": [{"id": "1-2", "tail": 1, "head": 2, "length": 1, "subnetwork": "RN", "t0": 0.1,
                   "capacity": 100.0}],
        "pt_lines": [],
        "demand": [],
        "toggles": {"modes": ["car"]},
    }


# -- micro instances for the brute-force comparison ---------------------------
# Three nodes at most, two OD pairs at most, five travellers at most.  Each
# uses small road capacities so congestion bites, a small fleet, and enough
# PWL segments for unit-width chords (exact at integer loads).

def _road(t, h, t0, cap, length=None, dc=None):
    link = {"id": f"{t}-{h}", "tail": t, "head": h, "length": length or round(t0 * 20, 4),
            "subnetwork": "RN", "t0": t0, "capacity": cap}
    if dc is not None:
        link["delay_coef"] = dc
    return link


def micro(name, roads, demand, modes, walk=(), metro=(), lines=(), transfer=(), params=None,
          fleet=3, parking=None, **toggles):
    nodes = sorted({l["tail"] for l in roads} | {l["head"] for l in roads}
                   | {n for a, b, _ in walk for n in (a, b)})
    links = list(roads)
    links += [{"id": f"w{a}-{b}", "tail": a, "head": b, "length": km, "subnetwork": "WN"} for a, b, km in walk]
    links += [{"id": f"m{a}-{b}", "tail": a, "head": b, "length": km, "subnetwork": "MN"} for a, b, km in metro]
    tg = {"modes": modes, "max_paths": 2, "pwl_segments": 64}
    tg.update(toggles)
    doc = {
        "name": name,
        "nodes": [{"id": n, "transfer": n in transfer} for n in nodes],
        "links": links,
        "pt_lines": list(lines),
        "demand": [{"o": o, "d": d, "q": q} for o, d, q in demand],
        "params": params or {},
        "fleet_size": fleet,
        "parking_capacity": {str(n): c for n, c in (parking or {}).items()},
        "toggles": tg,
    }
    return doc


def micro_fixtures():
    tri = [_road(1, 2, 0.2, 2.0), _road(2, 3, 0.2, 2.0), _road(1, 3, 0.35, 3.0),
           _road(2, 1, 0.2, 2.0), _road(3, 2, 0.2, 2.0), _road(3, 1, 0.35, 3.0)]
    pair = [_road(1, 2, 0.2, 2.0), _road(2, 1, 0.2, 2.0)]
    walk12 = [(1, 2, 6.0), (2, 1, 6.0)]
    out = {
        "micro_car_walk": micro("micro_car_walk", pair, [(1, 2, 5)], ["car", "W"], walk12),
        "micro_two_routes": micro("micro_two_routes", tri, [(1, 3, 5), (2, 3, 3)], ["car"]),
        "micro_bus_capacity": micro(
            "micro_bus_capacity", pair, [(1, 2, 4)], ["bus", "W"], [(1, 2, 4.0), (2, 1, 4.0)],
            lines=[{"mode": "bus", "links": ["1-2"], "frequency": 1, "veh_capacity": 2}]),
        "micro_bus_elastic": micro(
            "micro_bus_elastic", [_road(1, 2, 0.2, 6.0), _road(2, 1, 0.2, 6.0)], [(1, 2, 5)], ["bus", "W"],
            [(1, 2, 9.0), (2, 1, 9.0)],
            lines=[{"mode": "bus", "links": ["1-2"], "frequency": 1, "veh_capacity": 2}], pt_elastic=True),
        "micro_carpool": micro("micro_carpool", pair, [(1, 2, 4)], ["car", "CD", "CP", "W"], walk12,
                               params={"CAP": {"CP": 2, "RS": 2}}),
        "micro_carpool_nested": micro("micro_carpool_nested", tri, [(1, 3, 2), (1, 2, 2)],
                                      ["CD", "CP", "W"], [(1, 2, 6.0), (1, 3, 9.0), (2, 3, 6.0)],
                                      max_paths=1),
        "micro_ehail": micro("micro_ehail", pair, [(1, 2, 3), (2, 1, 1)], ["EH", "W"], walk12, fleet=3,
                             params={"R": {"EH": 2.0}}),
        "micro_rideshare": micro("micro_rideshare", pair, [(1, 2, 4)], ["RS", "W"], walk12,
                                 params={"R": {"RS": 4.0}}),
        "micro_rideshare_fifo": micro(
            "micro_rideshare_fifo", [_road(1, 2, 0.2, 2.0), _road(2, 3, 0.2, 2.0), _road(3, 1, 0.3, 2.0)],
            [(1, 3, 2), (2, 3, 2)], ["RS", "W"], [(1, 3, 6.0), (2, 3, 6.0)], fleet=4, max_paths=1,
            params={"R": {"RS": 4.0}}),
        "micro_park_ride": micro(
            "micro_park_ride", [_road(1, 2, 0.2, 2.0), _road(2, 1, 0.2, 2.0), _road(2, 3, 0.4, 2.0),
                                _road(3, 2, 0.4, 2.0)],
            [(1, 3, 4)], ["car", "M", "W"], [(1, 3, 5.0)], metro=[(2, 3, 10.0), (3, 2, 10.0)],
            lines=[{"mode": "M", "links": ["m2-3"], "frequency": 4, "veh_capacity": 10}],
            transfer=(2,), parking={2: 1}, intermodality=True),
        "micro_all_sms": micro("micro_all_sms", pair, [(1, 2, 3), (2, 1, 1)],
                               ["car", "CD", "CP", "EH", "RS", "W"], walk12, fleet=2, max_paths=1,
                               params={"R": {"CP": 3.0, "RS": 3.0, "EH": 3.0}}),
        "micro_parallel": micro(
            "micro_parallel", [
                {"id": "a", "tail": 1, "head": 2, "length": 1, "subnetwork": "RN", "t0": 0.1, "capacity": 1.0,
                 "delay_coef": 0.5},
                {"id": "b", "tail": 1, "head": 2, "length": 1, "subnetwork": "RN", "t0": 0.15, "capacity": 1.5,
                 "delay_coef": 0.5}],
            [(1, 2, 5)], ["car"], params={"alpha": 1.0, "gamma": 0.0, "P": {"car": 0.0}, "PF": {"car": 0.0}}),
    }
    return out


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    base = ["car", "bus", "M", "W", "B"]
    sms = base + ["CD", "CP", "RS", "EH"]
    docs = {
        "synth_s1": synth("synth_s1", base),
        "synth_s2": synth("synth_s2", sms),
        "synth_s3": synth("synth_s3", sms, intermodality=True),
        "synth_b1": b1_two_paths(),
        "parallel_links": parallel_links(),
        "empty": empty(),
        "synth_congested": congested(),
        "siouxfalls_30od": siouxfalls_30od(),
    }
    for name, doc in docs.items():
        (OUT / f"{name}.json").write_text(json.dumps(doc, indent=1) + "\n")
    (OUT / "micro").mkdir(exist_ok=True)
    for name, doc in micro_fixtures().items():
        (OUT / "micro" / f"{name}.json").write_text(json.dumps(doc, indent=1) + "\n")


if __name__ == "__main__":
    main()
