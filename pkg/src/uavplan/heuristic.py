"""Multi-objective insertion heuristic for large instances.

Tours over delivery locations are grown one stop at a time, Solomon style:
the cheapest insertion position per candidate comes from the position cost
phi1, the candidate actually inserted maximizes the savings phi2 against
serving it in a dedicated tour, and a new tour opens whenever no candidate
saves anything.  Every pair of graph nodes carries a set of alternative
routes (shortest path plus one- and two-waypoint compositions within twice
the shortest length); route choice trades travel time against coverage and
monitoring value via the (alpha1, alpha2) weights.

Route service weights depend on residual demand and are refreshed after every
committed insertion, so demand already claimed by earlier tours is not counted
twice.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .evaluator import Plan
from .paths import all_pairs_shortest, reconstruct
from .scenario import Scenario, validate


class RouteGraphError(ValueError):
    pass


class InsertionError(RuntimeError):
    """Some delivery cannot be placed; .payloads lists the offenders."""

    def __init__(self, message: str, payloads=()):
        super().__init__(message)
        self.payloads = tuple(payloads)


@dataclass(frozen=True)
class HeuristicConfig:
    alpha1: float = 0.0  # weight of coverage value
    alpha2: float = 0.0  # weight of monitoring value

    def __post_init__(self):
        if self.alpha1 < 0 or self.alpha2 < 0 or self.alpha1 + self.alpha2 > 1 + 1e-12:
            raise ValueError("weights must be nonnegative and sum to at most 1")

    @classmethod
    def save_time(cls):
        return cls(0.0, 0.0)

    @classmethod
    def privilege_coverage(cls):
        return cls(1.0, 0.0)

    @classmethod
    def privilege_monitoring(cls):
        return cls(0.0, 1.0)


PRESETS = {
    "save-time": HeuristicConfig.save_time,
    "coverage": HeuristicConfig.privilege_coverage,
    "monitoring": HeuristicConfig.privilege_monitoring,
}


@dataclass(frozen=True)
class Route:
    seq: tuple[int, ...]  # per-epoch location hops, seq[0] .. seq[-1]
    anchors: tuple[int, ...]  # intermediate anchor locations (at most two)
    length_km: float
    energy_wh_per_kg: float

    @property
    def hops(self) -> int:
        return len(self.seq) - 1


@dataclass
class RouteGraph:
    depot: int
    nodes: tuple[int, ...]
    routes: dict[tuple[int, int], tuple[Route, ...]]
    path_km: np.ndarray
    next_hop: np.ndarray

    def between(self, a: int, b: int) -> tuple[Route, ...]:
        return self.routes[(a, b)]

    def shortest_hops(self, a: int, b: int) -> int:
        return self.routes[(a, b)][0].hops if a != b else 0


def _route_from_seq(s: Scenario, seq: tuple[int, ...], anchors: tuple[int, ...]) -> Route:
    length = sum(s.dist_km[seq[j], seq[j + 1]] for j in range(len(seq) - 1))
    energy = sum(s.energy_wh_per_kg[seq[j], seq[j + 1]] for j in range(len(seq) - 1))
    return Route(seq=seq, anchors=anchors, length_km=float(length), energy_wh_per_kg=float(energy))


def build_route_graph(s: Scenario) -> RouteGraph:
    """Alternative-route graph over the depot and all delivery locations."""
    depots = s.depot_ids
    if len(depots) != 1:
        raise RouteGraphError(f"route graph needs exactly one depot, scenario has {len(depots)}")
    depot = depots[0]
    path_km, next_hop = all_pairs_shortest(s.dist_km, s.uav.max_step_km)
    targets = sorted({p.target for p in s.payloads if p.deliverable})
    for t in targets:
        if not np.isfinite(path_km[depot, t]):
            raise RouteGraphError(f"delivery location {t} is unreachable from the depot")
    nodes = tuple([depot] + [t for t in targets if t != depot])
    L = s.num_locations

    routes: dict[tuple[int, int], tuple[Route, ...]] = {}
    for a in nodes:
        for b in nodes:
            if a == b:
                routes[(a, b)] = (Route((a,), (), 0.0, 0.0),)
                continue
            cap = 2.0 * path_km[a, b] + 1e-9
            cands: dict[tuple[int, ...], Route] = {}

            def consider(seq, anchors):
                seq = tuple(seq)
                if seq not in cands:
                    cands[seq] = _route_from_seq(s, seq, anchors)

            consider(reconstruct(next_hop, a, b), ())
            via1 = path_km[a, :] + path_km[:, b]
            for l3 in np.nonzero(via1 <= cap)[0]:
                if l3 == a or l3 == b:
                    continue
                seq = reconstruct(next_hop, a, int(l3)) + reconstruct(next_hop, int(l3), b)[1:]
                consider(seq, (int(l3),))
            via2 = path_km[a, :, None] + path_km + path_km[:, b][None, :]
            for l3, l4 in np.argwhere(via2 <= cap):
                if l3 == l4 or l3 in (a, b) or l4 in (a, b):
                    continue
                seq = (
                    reconstruct(next_hop, a, int(l3))
                    + reconstruct(next_hop, int(l3), int(l4))[1:]
                    + reconstruct(next_hop, int(l4), b)[1:]
                )
                consider(seq, (int(l3), int(l4)))
            ordered = sorted(cands.values(), key=lambda r: (r.length_km, r.hops, r.seq))
            routes[(a, b)] = tuple(ordered)
    return RouteGraph(depot=depot, nodes=nodes, routes=routes, path_km=path_km, next_hop=next_hop)


# -- service weights along a route -------------------------------------------------


class _WeightContext:
    """Residual-aware coverage/monitoring value per location, normalized so
    one epoch of the busiest location scores 1."""

    def __init__(self, s: Scenario):
        self.s = s
        self.cov = self._mission_id("coverage", 0)
        self.mon = self._mission_id("monitoring", 1)
        full = s.demand.mean(axis=0) if s.epochs else np.zeros((s.num_missions, s.num_zones))
        self.norm = {}
        for mid in (self.cov, self.mon):
            if mid is None:
                continue
            per_loc = np.minimum(s.quality[:, mid, :], full[mid][None, :]).sum(axis=1)
            peak = float(per_loc.max()) if per_loc.size else 0.0
            self.norm[mid] = peak if peak > 0 else 1.0

    def _mission_id(self, name: str, fallback_rank: int):
        m = self.s.mission_by_name(name)
        if m is not None and name != "relay":
            return m.id
        service = self.s.service_mission_ids
        return service[fallback_rank] if len(service) > fallback_rank else None

    def location_value(self, residual_mean: np.ndarray):
        """(L,) normalized service value per mission for one epoch on site."""
        out = {}
        for mid in (self.cov, self.mon):
            if mid is None:
                continue
            per_loc = np.minimum(
                self.s.quality[:, mid, :], np.maximum(residual_mean[mid], 0.0)[None, :]
            ).sum(axis=1)
            out[mid] = per_loc / self.norm[mid]
        return out


def arc_service_weights(s: Scenario, route: Route, residual_mean: np.ndarray) -> tuple[float, float]:
    """Coverage and monitoring value collected over one traversal of the
    route, one epoch per waypoint, bounded by residual demand and normalized
    to the scenario's best single-epoch service."""
    ctx = _WeightContext(s)
    vals = ctx.location_value(residual_mean)
    c = v = 0.0
    for l in route.seq[1:]:
        if ctx.cov is not None:
            c += float(vals[ctx.cov][l])
        if ctx.mon is not None:
            v += float(vals[ctx.mon][l])
    return c, v


# -- tours -------------------------------------------------------------------------


@dataclass
class Stop:
    payload: int
    location: int


@dataclass
class Tour:
    stops: list[Stop]
    legs: list[Route]  # len(stops) + 1 legs, depot .. depot
    uav: int | None = None
    depart: int | None = None
    service_epochs: list[int] = field(default_factory=list)
    arrival_epochs: list[int] = field(default_factory=list)
    return_epoch: int | None = None
    energy_wh: float = 0.0

    def node_list(self, depot: int) -> list[int]:
        return [depot] + [st.location for st in self.stops] + [depot]


@dataclass
class _Schedule:
    depart: int
    arrivals: list[int]
    services: list[int]
    return_epoch: int
    energy_wh: float
    min_battery: float


def _simulate(
    s: Scenario, equip_w: float, stops: list[Stop], legs: list[Route], depart: int | None = None
) -> _Schedule | None:
    """Feasible schedule for the tour, or None.  With depart=None the latest
    window-feasible departure is used; otherwise the given epoch.  Early
    arrivals wait on site; payload weight rides for the whole tour (failed
    drops must be able to come home)."""
    K = s.epochs
    W = s.uav.empty_weight_kg
    cap = s.uav.payload_capacity_kg
    is_depot = s.is_depot_arr()
    w = s.payload_weights()
    pack_w = float(sum(w[st.payload] for st in stops))
    if equip_w + pack_w > cap + 1e-12:
        return None
    gross = W + equip_w + pack_w

    windows = []
    for st in stops:
        pl = s.payloads[st.payload]
        if not pl.deliverable or pl.target != st.location:
            return None
        windows.append(pl.window)

    m = len(stops)
    # latest service per stop, backward from the mandatory depot return
    latest = [0] * m
    bound = (K - 1) - legs[m].hops
    for i in range(m - 1, -1, -1):
        latest[i] = min(windows[i][1], bound)
        bound = latest[i] - legs[i].hops
    if m and latest[0] - legs[0].hops < 0:
        return None
    for i in range(m):
        if windows[i][0] > latest[i]:
            return None
    if depart is None:
        depart = latest[0] - legs[0].hops if m else 0
    elif depart < 0 or (m and depart > latest[0] - legs[0].hops):
        return None

    # forward pass: waits absorb early arrivals
    arrivals, services = [], []
    t = depart
    for i in range(m):
        arr = t + legs[i].hops
        svc = max(arr, windows[i][0])
        if svc > latest[i]:
            return None
        arrivals.append(arr)
        services.append(svc)
        t = svc
    ret = t + legs[m].hops
    if ret > K - 1:
        return None

    # battery along the realized epoch walk, resetting at depot waypoints
    E = s.uav.battery_capacity_wh
    battery = E
    lowest = E
    energy = 0.0
    loc = legs[0].seq[0] if legs else s.depot_ids[0]
    for i in range(m + 1):
        for j in range(legs[i].hops):
            nxt = legs[i].seq[j + 1]
            if is_depot[nxt]:
                battery = E
            else:
                step = s.energy_wh_per_kg[legs[i].seq[j], nxt] * gross
                battery -= step
                energy += step
                lowest = min(lowest, battery)
            loc = nxt
        if i < m:
            for _ in range(services[i] - arrivals[i]):
                if not is_depot[loc]:
                    step = s.energy_wh_per_kg[loc, loc] * gross
                    battery -= step
                    energy += step
                    lowest = min(lowest, battery)
    if lowest < -1e-9:
        return None
    return _Schedule(depart, arrivals, services, ret, energy, lowest)


# -- insertion machinery -----------------------------------------------------------


class _SolveContext:
    def __init__(self, s: Scenario, graph: RouteGraph, cfg: HeuristicConfig):
        self.s = s
        self.graph = graph
        self.cfg = cfg
        self.weights = _WeightContext(s)
        self.equip_ids = list(s.equipment_ids)
        w = s.payload_weights()
        self.equip_w = float(sum(w[self.equip_ids])) if self.equip_ids else 0.0
        self.residual = s.demand.copy()
        self._refresh_values()

    def _refresh_values(self):
        mean = self.residual.mean(axis=0) if self.s.epochs else self.residual.sum(axis=0)
        self.loc_value = self.weights.location_value(mean)

    def route_score(self, r: Route) -> float:
        """(1 - a1 - a2) * time - a1 * coverage - a2 * monitoring for one leg."""
        a1, a2 = self.cfg.alpha1, self.cfg.alpha2
        score = (1.0 - a1 - a2) * r.hops
        for mid, weight in ((self.weights.cov, a1), (self.weights.mon, a2)):
            if mid is not None and weight:
                score -= weight * float(sum(self.loc_value[mid][l] for l in r.seq[1:]))
        return score

    def leg_candidates(self, a: int, b: int) -> list[tuple[float, Route]]:
        cands = [(self.route_score(r), r) for r in self.graph.between(a, b)]
        cands.sort(key=lambda t: (t[0], t[1].length_km, t[1].seq))
        return cands


def phi1(ctx: _SolveContext, tour: Tour, payload_id: int, position: int):
    """Best feasible route pair for inserting the delivery at this position.

    Returns (cost, g, g_prime) minimizing the weighted detour, or None when
    every route pair breaks a window, the battery or capacity."""
    s = ctx.s
    target = s.payloads[payload_id].target
    nodes = tour.node_list(ctx.graph.depot)
    prev_node, next_node = nodes[position - 1], nodes[position]
    base = ctx.route_score(tour.legs[position - 1])
    first = ctx.leg_candidates(prev_node, target)
    second = ctx.leg_candidates(target, next_node)
    if not first or not second:
        return None

    new_stops = tour.stops[:]
    new_stops.insert(position - 1, Stop(payload_id, target))
    best = None
    min_second = second[0][0]
    for f_g, g in first:
        if best is not None and f_g + min_second - base > best[0] + 1e-12:
            break
        for f_g2, g2 in second:
            cost = f_g + f_g2 - base
            if best is not None and cost > best[0] + 1e-12:
                break
            legs = tour.legs[:]
            legs[position - 1 : position] = [g, g2]
            if _simulate(s, ctx.equip_w, new_stops, legs) is not None:
                if best is None or cost < best[0] - 1e-12:
                    best = (cost, g, g2)
                break  # later second-leg routes only cost more
    return best


def phi2(ctx: _SolveContext, tour: Tour, position: int, phi1_cost: float) -> float:
    """Savings of inserting here versus opening a dedicated tour: weighted
    value of the depot leg to the insertion successor minus the detour cost."""
    a1, a2 = ctx.cfg.alpha1, ctx.cfg.alpha2
    nodes = tour.node_list(ctx.graph.depot)
    succ = nodes[position]
    depot = ctx.graph.depot
    psi_short = ctx.graph.shortest_hops(depot, succ)
    best_term = None
    for r in ctx.graph.between(depot, succ):
        term = (1.0 - a1 - a2) * psi_short
        for mid, weight in ((ctx.weights.cov, a1), (ctx.weights.mon, a2)):
            if mid is not None and weight:
                term -= weight * float(sum(ctx.loc_value[mid][l] for l in r.seq[1:]))
        if best_term is None or term > best_term:
            best_term = term
    return best_term - phi1_cost


def _seed_tour(ctx: _SolveContext, payload_id: int) -> Tour:
    tour = Tour(stops=[], legs=[ctx.graph.between(ctx.graph.depot, ctx.graph.depot)[0]])
    got = phi1(ctx, tour, payload_id, 1)
    if got is None:
        raise InsertionError(
            f"delivery payload {payload_id} cannot be served even by a dedicated tour",
            [payload_id],
        )
    _, g, g2 = got
    target = ctx.s.payloads[payload_id].target
    tour.stops = [Stop(payload_id, target)]
    tour.legs = [g, g2]
    return tour


def _project_residual(ctx: _SolveContext, tours: list[Tour], current: Tour | None):
    """Greedy estimate of demand served by the committed tours, used to keep
    the arc weights from double-counting demand."""
    s = ctx.s
    resid = s.demand.copy()
    aboard = frozenset(ctx.equip_ids)
    all_tours = tours + ([current] if current is not None else [])
    for tour in all_tours:
        sched = _simulate(s, ctx.equip_w, tour.stops, tour.legs)
        if sched is None:
            continue
        for k, l in _epoch_walk(s, tour, sched):
            _allocate_service(s, l, k, aboard, resid, collect=None)
    ctx.residual = resid
    ctx._refresh_values()


def insertion_solve(
    s: Scenario,
    cfg: HeuristicConfig = HeuristicConfig(),
    uav_equipment: list[tuple[frozenset, frozenset]] | None = None,
) -> tuple[list[Tour], Plan]:
    """Run the insertion heuristic and materialize a full plan.

    uav_equipment optionally pins (forced_on, forbidden) payload sets per UAV;
    by default every UAV flies with the full mission equipment.
    """
    issues = validate(s)
    if issues:
        raise ValueError("scenario failed validation: " + "; ".join(map(str, issues)))
    graph = build_route_graph(s)
    ctx = _SolveContext(s, graph, cfg)

    unserved = sorted(p.id for p in s.payloads if p.deliverable)
    tours: list[Tour] = []
    current: Tour | None = None

    def deadline_key(pid: int):
        pl = s.payloads[pid]
        return (pl.window[1], pl.window[0], pid)

    while unserved or current is not None:
        if current is None:
            if not unserved:
                break
            seed = min(unserved, key=deadline_key)
            current = _seed_tour(ctx, seed)
            unserved.remove(seed)
            _project_residual(ctx, tours, current)
            continue
        candidates = []
        for pid in unserved:
            best_pos = None
            for pos in range(1, len(current.stops) + 2):
                got = phi1(ctx, current, pid, pos)
                if got is None:
                    continue
                if best_pos is None or got[0] < best_pos[1] - 1e-12:
                    best_pos = (pos, got[0], got[1], got[2])
            if best_pos is not None:
                pos, cost, g, g2 = best_pos
                savings = phi2(ctx, current, pos, cost)
                candidates.append((savings, pid, pos, g, g2))
        picked = None
        if candidates:
            candidates.sort(key=lambda t: (-t[0], t[1]))
            if candidates[0][0] >= -1e-12:
                picked = candidates[0]
        if picked is None:
            tours.append(current)
            current = None
            continue
        _, pid, pos, g, g2 = picked
        current.stops.insert(pos - 1, Stop(pid, s.payloads[pid].target))
        current.legs[pos - 1 : pos] = [g, g2]
        unserved.remove(pid)
        _project_residual(ctx, tours, current)

    _assign_tours(s, ctx, tours, uav_equipment)
    plan = tours_to_plan(s, tours, uav_equipment)
    return tours, plan


def _assign_tours(s, ctx, tours, uav_equipment):
    """Greedy schedule onto the earliest-available UAV; a UAV is busy from its
    departure epoch through one epoch past its return (battery swap).  Tours
    with the earliest latest-possible departure go first (deadline order) and
    each departs as soon as its UAV is free and the battery tolerates the
    on-site waits, which keeps the fleet from bunching at the horizon's end."""
    D = s.num_uavs
    w = s.payload_weights()
    avail = [0] * D
    unserved: list[int] = []

    def deadline(item):
        idx, tour = item
        sched = _simulate(s, ctx.equip_w, tour.stops, tour.legs)
        return (sched.depart if sched else 0, idx)

    ordered = [t for _, t in sorted(enumerate(tours), key=deadline)]
    for tour in ordered:
        placed = None
        for u in sorted(range(D), key=lambda u: (avail[u], u)):
            on, off = (frozenset(ctx.equip_ids), frozenset())
            if uav_equipment is not None:
                on, off = uav_equipment[u]
            equip = [e for e in on if not s.payloads[e].deliverable]
            equip_w = float(sum(w[e] for e in equip))
            latest = _simulate(s, equip_w, tour.stops, tour.legs)
            if latest is None or avail[u] > latest.depart:
                continue
            for depart in range(avail[u], latest.depart + 1):
                sched = _simulate(s, equip_w, tour.stops, tour.legs, depart=depart)
                if sched is not None:
                    placed = (u, sched)
                    break
            if placed:
                break
        if placed is None:
            unserved.extend(st.payload for st in tour.stops)
            continue
        u, sched = placed
        tour.uav = u
        tour.depart = sched.depart
        tour.arrival_epochs = sched.arrivals
        tour.service_epochs = sched.services
        tour.return_epoch = sched.return_epoch
        tour.energy_wh = sched.energy_wh
        avail[u] = sched.return_epoch + 1
    if unserved:
        raise InsertionError(
            f"fleet-horizon capacity exceeded; unserved deliveries: {sorted(unserved)}",
            sorted(unserved),
        )


def _epoch_walk(s: Scenario, tour: Tour, sched: _Schedule):
    """(epoch, location) for every non-depot epoch of the scheduled tour."""
    out = []
    t = sched.depart
    for i, leg in enumerate(tour.legs):
        for j in range(leg.hops):
            t += 1
            if not s.is_depot_arr()[leg.seq[j + 1]]:
                out.append((t, leg.seq[j + 1]))
        if i < len(tour.stops):
            loc = tour.stops[i].location
            while t < sched.services[i]:
                t += 1
                if not s.is_depot_arr()[loc]:
                    out.append((t, loc))
    return out


def _allocate_service(s: Scenario, l: int, k: int, aboard: frozenset, resid, collect):
    """Greedily spend one epoch's budget at location l on the most valuable
    (mission, zone) pairs; updates resid in place.  Returns generated Mb."""
    ridx = s.relay_index
    can_relay = ridx is not None and all(p in aboard for p in s.missions[ridx].requires)
    t_sink = float(s.link_sink_mb[l])
    budget = 1.0
    gen = 0.0
    pairs = []
    for m in s.service_mission_ids:
        if not all(p in aboard for p in s.missions[m].requires):
            continue
        rate = s.missions[m].mb_per_work
        if rate > 0 and (not can_relay or t_sink <= 0):
            continue  # data with nowhere to go forbids the work entirely
        for z in range(s.num_zones):
            q = s.quality[l, m, z]
            r = resid[k, m, z]
            if q > 0 and r > 1e-12:
                pairs.append((q * r, m, z, q, rate))
    pairs.sort(key=lambda t: (-t[0], t[1], t[2]))
    for _, m, z, q, rate in pairs:
        if budget <= 1e-12:
            break
        per_mu = 1.0 + (q * rate / t_sink if rate > 0 else 0.0)
        alloc = min(budget / per_mu, resid[k, m, z] / q)
        if alloc <= 1e-12:
            continue
        resid[k, m, z] -= alloc * q
        budget -= alloc * per_mu
        gen += alloc * q * rate
        if collect is not None:
            collect.append((m, z, alloc))
    return gen


def tours_to_plan(
    s: Scenario,
    tours: list[Tour],
    uav_equipment: list[tuple[frozenset, frozenset]] | None = None,
) -> Plan:
    """Expand scheduled tours into a full plan: per-epoch locations, payload
    aboard for the whole tour (equipment plus every delivery pack), greedy
    mission allocations along the way, and traffic pushed straight down to the
    ground network."""
    plan = Plan.idle(s)
    resid = s.demand.copy()
    w = s.payload_weights()
    cap = s.uav.payload_capacity_kg
    base_equip = list(s.equipment_ids)

    for tour in tours:
        if tour.uav is None or tour.depart is None:
            raise ValueError("tours must be scheduled before materialization")
        d = tour.uav
        on = frozenset(base_equip)
        if uav_equipment is not None:
            on = frozenset(e for e in uav_equipment[d][0] if not s.payloads[e].deliverable)
        pack = [st.payload for st in tour.stops]
        aboard = sorted(set(pack) | on)
        total_w = float(sum(w[list(aboard)]))
        if total_w > cap + 1e-12:
            raise InsertionError(
                f"tour payload {total_w:.3f} kg exceeds capacity {cap} kg", pack
            )
        sched = _Schedule(
            tour.depart, tour.arrival_epochs, tour.service_epochs, tour.return_epoch, tour.energy_wh, 0.0
        )
        # location timeline
        t = tour.depart
        for i, leg in enumerate(tour.legs):
            for j in range(leg.hops):
                t += 1
                plan.locations[d, t] = leg.seq[j + 1]
            if i < len(tour.stops):
                loc = tour.stops[i].location
                while t < sched.services[i]:
                    t += 1
                    plan.locations[d, t] = loc
        # payload aboard from the loading depot epoch until just before return
        for k in range(tour.depart, tour.return_epoch):
            for pid in aboard:
                plan.payloads[d, k, pid] = True
        # greedy service and direct-to-ground traffic
        aboard_set = frozenset(aboard)
        for k, l in _epoch_walk(s, tour, sched):
            taken: list = []
            gen = _allocate_service(s, l, k, aboard_set, resid, taken)
            for m, z, alloc in taken:
                plan.mission_alloc[d, k, m, z] = alloc
            if gen > 0:
                t_sink = float(s.link_sink_mb[l])
                plan.relay_frac[d, k] = gen / t_sink
                plan.sink_transfers[d, k] = gen
    return plan
