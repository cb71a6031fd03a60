"""Desk-scale exact optimizer.

solve_exact enumerates all feasible trajectory/payload assignments per UAV
(depth-first with battery, delivery-cover and objective-bound pruning), and
for each complete assignment solves the remaining continuous problem
(allocations, relay effort, transfers, satisfaction) with the bundled simplex.
UAVs are interchangeable, so assignments are enumerated as multisets per
equipment group.

solve_model_exhaustive is an independent path to the same optimum: it takes a
built (or re-parsed) MILP, branches over its binary variables with bound
propagation, and hands every completed assignment's continuous remainder to
the same simplex.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass

import numpy as np

from .evaluator import Plan
from .milp import MilpModel
from .scenario import Scenario
from .simplex import simplex_solve


class GuardError(RuntimeError):
    """Instance exceeds the desk-scale guards."""


@dataclass(frozen=True)
class EnumerationLimits:
    max_assignments: int = 2_000_000
    time_budget_s: float = 600.0
    size_guard: int = 64  # cap on uavs * epochs * locations

    def __post_init__(self):
        if self.max_assignments <= 0 or self.time_budget_s <= 0 or self.size_guard <= 0:
            raise ValueError("enumeration limits must be positive")


@dataclass
class ExactResult:
    plan: Plan | None
    objective: float | None
    proven_optimal: bool
    assignments_visited: int
    feasible: bool


@dataclass(frozen=True)
class _Config:
    """One UAV's complete binary decisions: location and payload per epoch."""

    locs: tuple[int, ...]
    aboard: tuple[frozenset, ...]
    delivered: frozenset  # deliverable payload ids this config drops in-window
    epochs_away: int
    min_battery: float


def _payload_subsets(s: Scenario, forced_on: frozenset, forbidden: frozenset) -> list[frozenset]:
    w = s.payload_weights()
    cap = s.uav.payload_capacity_kg
    ids = [p.id for p in s.payloads]
    subsets = []
    for r in range(len(ids) + 1):
        for combo in itertools.combinations(ids, r):
            sset = frozenset(combo)
            if not forced_on <= sset or sset & forbidden:
                continue
            if sum(w[list(combo)]) <= cap + 1e-12:
                subsets.append(sset)
    subsets.sort(key=lambda x: sorted(x))
    return subsets


def _hops_to_depot(s: Scenario) -> np.ndarray:
    """BFS hop counts from every location to the nearest depot."""
    L = s.num_locations
    reach = s.dist_km <= s.uav.max_step_km + 1e-12
    hops = np.full(L, np.inf)
    frontier = list(s.depot_ids)
    for l in frontier:
        hops[l] = 0
    while frontier:
        nxt = []
        for l in frontier:
            for l2 in range(L):
                if reach[l, l2] and hops[l2] > hops[l] + 1:
                    hops[l2] = hops[l] + 1
                    nxt.append(l2)
        frontier = nxt
    return hops


def _depot_idle_set(s: Scenario, forced_on: frozenset, forbidden: frozenset) -> frozenset:
    """Payload carried while parked at a depot: the full mission equipment
    plus any depot-targeted packs.  Carrying it there costs nothing (battery
    swaps are free) and only widens what the UAV can do, so this choice is
    dominant whenever it fits the capacity."""
    w = s.payload_weights()
    cap = s.uav.payload_capacity_kg
    depots = set(s.depot_ids)
    ids = set(forced_on)
    ids.update(e for e in s.equipment_ids if e not in forbidden)
    for p in s.payloads:
        if p.deliverable and p.target in depots and p.id not in forbidden:
            ids.add(p.id)
    total = float(sum(w[list(ids)])) if ids else 0.0
    if total > cap + 1e-12:
        raise GuardError(
            "exact engine requires the mission equipment (plus depot-targeted packs) "
            f"to fit the payload capacity together; {total:.3f} kg > {cap} kg"
        )
    return frozenset(ids)


def enumerate_configs(
    s: Scenario,
    forced_on: frozenset = frozenset(),
    forbidden: frozenset = frozenset(),
    depot_return: bool = True,
    prune_battery: bool = True,
) -> list[_Config]:
    """All per-UAV (trajectory, payload) schedules consistent with movement,
    capacity, payload-lock and (when pruning) battery constraints.

    Payload is canonical: the sortie payload is loaded on the depot epoch
    right before departure and held for the whole sortie (items are never
    dropped mid-flight, covering failed drops); parked depot epochs carry the
    dominant idle set from _depot_idle_set."""
    K, L = s.epochs, s.num_locations
    depots = set(s.depot_ids)
    reach = s.dist_km <= s.uav.max_step_km + 1e-12
    energy = s.energy_wh_per_kg
    W, E = s.uav.empty_weight_kg, s.uav.battery_capacity_wh
    w = s.payload_weights()
    subsets = _payload_subsets(s, forced_on, forbidden)
    subset_w = {sub: float(sum(w[list(sub)])) for sub in subsets}
    depot_hops = _hops_to_depot(s)
    deliverables = [p for p in s.payloads if p.deliverable]

    out: list[_Config] = []
    locs: list[int] = []
    aboard: list[frozenset] = []
    idle_set = _depot_idle_set(s, forced_on, forbidden)

    def finish(min_batt: float):
        delivered = set()
        for p in deliverables:
            a, b0 = p.window
            for k in range(a, b0 + 1):
                if locs[k] == p.target and p.id in aboard[k]:
                    delivered.add(p.id)
                    break
        away = sum(1 for l in locs if l not in depots)
        out.append(_Config(tuple(locs), tuple(aboard), frozenset(delivered), away, min_batt))

    def rec(k: int, battery: float, active: frozenset | None, min_batt: float):
        if k == K - 1:
            finish(min_batt)
            return
        cur = locs[k]
        steps_left = K - 1 - (k + 1)
        for nxt in range(L):
            if not reach[cur, nxt]:
                continue
            if depot_return and depot_hops[nxt] > steps_left:
                continue
            if nxt in depots:
                locs.append(nxt)
                aboard.append(idle_set)
                rec(k + 1, E, None, min_batt)
                locs.pop()
                aboard.pop()
            elif active is None:
                # leaving a depot: choose the sortie payload now
                for S in subsets:
                    cost = energy[cur, nxt] * (W + subset_w[S])
                    nb = E - cost
                    if prune_battery and nb < -1e-9:
                        continue
                    saved = aboard[k]
                    aboard[k] = S  # loading epoch
                    locs.append(nxt)
                    aboard.append(S)
                    rec(k + 1, nb, S, min(min_batt, nb))
                    locs.pop()
                    aboard.pop()
                    aboard[k] = saved
            else:
                cost = energy[cur, nxt] * (W + subset_w[active])
                nb = battery - cost
                if prune_battery and nb < -1e-9:
                    continue
                locs.append(nxt)
                aboard.append(active)
                rec(k + 1, nb, active, min(min_batt, nb))
                locs.pop()
                aboard.pop()

    for start in sorted(depots):
        if depot_return and K > 1 and depot_hops[start] > K - 1:
            continue
        locs[:] = [start]
        aboard[:] = [idle_set]
        if K == 1:
            finish(E)
        else:
            rec(0, E, None, E)
    # most-active configs first: good incumbents surface early, so the
    # objective bound prunes the bulk of the assignment space
    out.sort(key=lambda c: (-c.epochs_away, c.locs, tuple(tuple(sorted(a)) for a in c.aboard)))
    return out


def _equipped(s: Scenario, mission_id: int, aboard: frozenset) -> bool:
    return all(p in aboard for p in s.missions[mission_id].requires)


def _window_need(s: Scenario) -> np.ndarray:
    cs = np.concatenate([np.zeros((1, s.num_missions, s.num_zones)), np.cumsum(s.demand, axis=0)])
    win = np.zeros_like(s.demand)
    for k in range(s.epochs):
        lo = max(0, k - s.horizon)
        win[k] = cs[k + 1] - cs[lo]
    return win


def _objective_upper_bound(s: Scenario, assignment, win_need) -> float:
    """Cheap bound ignoring time budgets and traffic: per-epoch capable service
    capped by demand, accumulated over the satisfaction window."""
    service = s.service_mission_ids
    if not service:
        return 1.0
    K, M, Z = s.epochs, s.num_missions, s.num_zones
    cap = np.zeros((K, M, Z))
    for cfg in assignment:
        for k in range(K):
            l = cfg.locs[k]
            for m in service:
                if _equipped(s, m, cfg.aboard[k]):
                    cap[k, m, :] += s.quality[l, m, :]
    cap = np.minimum(cap, s.demand)
    cs = np.concatenate([np.zeros((1, M, Z)), np.cumsum(cap, axis=0)])
    ub = 1.0
    for k in range(K):
        lo = max(0, k - s.horizon)
        horizon_cap = cs[k + 1] - cs[lo]
        for m in service:
            mask = win_need[k, m, :] > 0
            if mask.any():
                ratios = horizon_cap[m, mask] / win_need[k, m, mask]
                ub = min(ub, float(np.minimum(ratios, 1.0).min()))
    return ub


def _inner_lp(s: Scenario, assignment, win_need):
    """LP over (mu, rho, tau, sigma, sigma_bar, Gamma) for fixed trajectories.

    Returns (gamma, var_values) where var_values maps structured keys to
    floats, or None when no service mission exists."""
    service = list(s.service_mission_ids)
    if not service:
        return 1.0, {}
    D, K, Z = len(assignment), s.epochs, s.num_zones
    ridx = s.relay_index
    q = s.quality
    n = s.demand
    rates = {m: s.missions[m].mb_per_work for m in service}

    cols: list[tuple] = []
    col_of: dict[tuple, int] = {}

    def add_col(key) -> int:
        col_of[key] = len(cols)
        cols.append(key)
        return col_of[key]

    for d, cfg in enumerate(assignment):
        for k in range(K):
            l = cfg.locs[k]
            for m in service:
                if not _equipped(s, m, cfg.aboard[k]):
                    continue
                for z in range(Z):
                    if q[l, m, z] > 0 and n[k, m, z] > 0:
                        add_col(("mu", d, k, m, z))
    if ridx is not None:
        for d, cfg in enumerate(assignment):
            for k in range(K):
                if _equipped(s, ridx, cfg.aboard[k]):
                    add_col(("rho", d, k))
        for d1, c1 in enumerate(assignment):
            for d2, c2 in enumerate(assignment):
                if d1 == d2:
                    continue
                for k in range(K):
                    if ("rho", d1, k) in col_of and s.link_uav_mb[c1.locs[k], c2.locs[k]] > 0:
                        add_col(("tau", d1, d2, k))
        for d, cfg in enumerate(assignment):
            for k in range(K):
                if ("rho", d, k) in col_of and s.link_sink_mb[cfg.locs[k]] > 0:
                    add_col(("tausink", d, k))
    for k in range(K):
        for m in service:
            for z in range(Z):
                if win_need[k, m, z] > 0:
                    add_col(("sig", k, m, z))
    for m in service:
        add_col(("sigbar", m))
    gamma_col = add_col(("Gamma",))

    ncols = len(cols)
    a_ub, b_ub, a_eq, b_eq = [], [], [], []

    def row(pairs, sense, rhs):
        arr = np.zeros(ncols)
        for key, coef in pairs:
            arr[col_of[key]] += coef
        if sense == "<=":
            a_ub.append(arr)
            b_ub.append(rhs)
        else:
            a_eq.append(arr)
            b_eq.append(rhs)

    # time budget per UAV-epoch
    for d in range(D):
        for k in range(K):
            pairs = [(key, 1.0) for key in cols if key[0] == "mu" and key[1] == d and key[2] == k]
            if ("rho", d, k) in col_of:
                pairs.append((("rho", d, k), 1.0))
            if pairs:
                row(pairs, "<=", 1.0)
    # zone needs per epoch
    for k in range(K):
        for m in service:
            for z in range(Z):
                pairs = [
                    (("mu", d, k, m, z), q[assignment[d].locs[k], m, z])
                    for d in range(D)
                    if ("mu", d, k, m, z) in col_of
                ]
                if pairs:
                    row(pairs, "<=", n[k, m, z])
    # flow conservation and relay capacity
    if ridx is not None:
        for d in range(D):
            for k in range(K):
                pairs = []
                for m in service:
                    if rates[m] == 0:
                        continue
                    for z in range(Z):
                        if ("mu", d, k, m, z) in col_of:
                            pairs.append(
                                (("mu", d, k, m, z), rates[m] * q[assignment[d].locs[k], m, z])
                            )
                for d2 in range(D):
                    if ("tau", d2, d, k) in col_of:
                        pairs.append((("tau", d2, d, k), 1.0))
                    if ("tau", d, d2, k) in col_of:
                        pairs.append((("tau", d, d2, k), -1.0))
                if ("tausink", d, k) in col_of:
                    pairs.append((("tausink", d, k), -1.0))
                if pairs:
                    row(pairs, "=", 0.0)
        for key in cols:
            if key[0] == "tau":
                _, d1, d2, k = key
                cap = s.link_uav_mb[assignment[d1].locs[k], assignment[d2].locs[k]]
                row([(key, 1.0), (("rho", d1, k), -cap)], "<=", 0.0)
            elif key[0] == "tausink":
                _, d, k = key
                cap = s.link_sink_mb[assignment[d].locs[k]]
                row([(key, 1.0), (("rho", d, k), -cap)], "<=", 0.0)
    # satisfaction definitions and the epigraph
    for k in range(K):
        lo = max(0, k - s.horizon)
        for m in service:
            for z in range(Z):
                if win_need[k, m, z] <= 0:
                    continue
                pairs = [(("sig", k, m, z), win_need[k, m, z])]
                for h in range(lo, k + 1):
                    for d in range(D):
                        if ("mu", d, h, m, z) in col_of:
                            pairs.append((("mu", d, h, m, z), -q[assignment[d].locs[h], m, z]))
                row(pairs, "=", 0.0)
                row([(("sigbar", m), 1.0), (("sig", k, m, z), -1.0)], "<=", 0.0)
                row([(("sig", k, m, z), 1.0)], "<=", 1.0)
    for m in service:
        row([(("sigbar", m), 1.0)], "<=", 1.0)
        row([(("Gamma",), 1.0), (("sigbar", m), -1.0)], "<=", 0.0)

    c = np.zeros(ncols)
    c[gamma_col] = 1.0
    res = simplex_solve(
        c,
        np.array(a_ub) if a_ub else None,
        np.array(b_ub) if b_ub else None,
        np.array(a_eq) if a_eq else None,
        np.array(b_eq) if b_eq else None,
    )
    if res.status != "optimal":  # all-zero service is always feasible
        raise RuntimeError(f"inner LP came back {res.status}")
    values = {key: float(res.x[i]) for key, i in col_of.items() if res.x[i] != 0.0}
    return float(res.value), values


def _assignment_plan(s: Scenario, assignment, lp_values) -> Plan:
    D, K = len(assignment), s.epochs
    p = Plan.idle(s)
    p.locations = np.array([cfg.locs for cfg in assignment], dtype=int)
    for d, cfg in enumerate(assignment):
        for k in range(K):
            for pid in cfg.aboard[k]:
                p.payloads[d, k, pid] = True
    for key, val in lp_values.items():
        if key[0] == "mu":
            _, d, k, m, z = key
            p.mission_alloc[d, k, m, z] = val
        elif key[0] == "rho":
            _, d, k = key
            p.relay_frac[d, k] = val
        elif key[0] == "tau":
            _, d1, d2, k = key
            p.transfers[d1, d2, k] = val
        elif key[0] == "tausink":
            _, d, k = key
            p.sink_transfers[d, k] = val
    return p


def solve_exact(
    s: Scenario,
    limits: EnumerationLimits = EnumerationLimits(),
    equipment_groups: list[tuple[int, frozenset, frozenset]] | None = None,
    depot_return: bool = True,
    prune_battery: bool = True,
    prune_bound: bool = True,
) -> ExactResult:
    """Global optimum by exhaustive assignment enumeration plus inner LPs.

    equipment_groups partitions the fleet into (count, forced_on, forbidden)
    payload policies; UAVs within a group are interchangeable.  The returned
    plan maximizes the minimum mission satisfaction, breaking ties toward
    fewer epochs away from a depot, then lexicographically.
    """
    D, K, L = s.num_uavs, s.epochs, s.num_locations
    if D * K * L > limits.size_guard:
        raise GuardError(
            f"instance size {D}x{K}x{L} = {D * K * L} exceeds the guard {limits.size_guard}"
        )
    if equipment_groups is None:
        equipment_groups = [(D, frozenset(), frozenset())]
    if sum(g[0] for g in equipment_groups) != D:
        raise ValueError("equipment group counts must sum to the fleet size")

    win_need = _window_need(s)
    deliverables = frozenset(p.id for p in s.payloads if p.deliverable)
    group_configs = []
    for count, on, off in equipment_groups:
        cfgs = enumerate_configs(
            s, frozenset(on), frozenset(off), depot_return=depot_return, prune_battery=prune_battery
        )
        if not prune_battery:
            cfgs = [c for c in cfgs if c.min_battery >= -1e-9]
        group_configs.append((count, cfgs))
        if count > 0 and not cfgs:
            return ExactResult(None, None, True, 0, False)

    t0 = time.monotonic()
    visited = 0
    best = None  # (gamma, epochs_away, flat_indices, assignment, lp_values)
    truncated = False

    iterators = [
        itertools.combinations_with_replacement(range(len(cfgs)), count)
        for count, cfgs in group_configs
    ]
    for combo in itertools.product(*iterators):
        visited += 1
        if visited > limits.max_assignments:
            truncated = True
            break
        if visited % 256 == 0 and time.monotonic() - t0 > limits.time_budget_s:
            truncated = True
            break
        assignment = []
        flat = []
        for gi, picks in enumerate(combo):
            for ci in picks:
                assignment.append(group_configs[gi][1][ci])
                flat.append((gi, ci))
        if deliverables:  # hard feasibility: every delivery needs a carrier
            covered = frozenset().union(*(c.delivered for c in assignment))
            if not deliverables <= covered:
                continue
        away = sum(c.epochs_away for c in assignment)
        if best is not None and prune_bound:
            ub = _objective_upper_bound(s, assignment, win_need)
            if ub < best[0] - 1e-12:
                continue
            if ub <= best[0] + 1e-12 and away >= best[1]:
                continue  # cannot win the objective nor the tie-break
        gamma, values = _inner_lp(s, assignment, win_need)
        better = best is None or gamma > best[0] + 1e-12
        if not better and best is not None and gamma >= best[0] - 1e-12:
            better = (away, flat) < (best[1], best[2])
        if better:
            best = (gamma, away, flat, list(assignment), values)

    if best is None:
        return ExactResult(None, None, not truncated, visited, False)
    plan = _assignment_plan(s, best[3], best[4])
    return ExactResult(plan, best[0], not truncated, visited, True)


# -- generic brute force over a built MILP ---------------------------------------


def solve_model_exhaustive(
    model: MilpModel,
    time_budget_s: float = 600.0,
    max_nodes: int = 5_000_000,
):
    """Optimize a MilpModel by exhaustive search over its binary variables.

    Depth-first branching with bound propagation over the binary rows; every
    completed assignment's continuous remainder is presolved (rows made slack
    by the fixed binaries are dropped, zero-forced variables eliminated) and
    handed to the bundled simplex.  Presolved subproblems are cached, so
    assignments differing only in binaries the continuous part never sees cost
    one LP solve.  The search stops early once the incumbent reaches the
    objective variable's upper bound.

    Returns (status, value, variable dict); status is optimal, infeasible or
    limit."""
    nvars = len(model.variables)
    kinds = [v.kind for v in model.variables]
    lbs = np.array([v.lb for v in model.variables])
    ubs = np.array([v.ub for v in model.variables])
    bin_idx = [i for i in range(nvars) if kinds[i] == "binary"]
    bin_pos = {i: j for j, i in enumerate(bin_idx)}
    cont_idx = [i for i in range(nvars) if kinds[i] != "binary"]
    cont_pos = {i: j for j, i in enumerate(cont_idx)}
    obj_i = model.name_to_idx[model.objective]
    obj_ub = ubs[obj_i]

    def _interval(i: int) -> tuple[float, float]:
        if kinds[i] == "binary":
            lo = 1.0 if lbs[i] >= 1.0 else 0.0
            hi = 0.0 if ubs[i] <= 0.0 else 1.0
            return lo, hi
        return lbs[i], ubs[i]

    rows = []
    for c in model.constraints:
        # drop rows the variable bounds already satisfy; they only widen the
        # search over binaries the continuous problem never feels
        lo_lhs = hi_lhs = 0.0
        for i, coef in c.terms:
            lo, hi = _interval(i)
            lo_lhs += coef * lo if coef >= 0 else coef * hi
            hi_lhs += coef * hi if coef >= 0 else coef * lo
        if c.sense == "<=" and hi_lhs <= c.rhs + 1e-9:
            continue
        if c.sense == ">=" and lo_lhs >= c.rhs - 1e-9:
            continue
        if c.sense == "=" and hi_lhs <= c.rhs + 1e-9 and lo_lhs >= c.rhs - 1e-9:
            continue
        bt = [(i, coef) for i, coef in c.terms if kinds[i] == "binary"]
        ct = [(i, coef) for i, coef in c.terms if kinds[i] != "binary"]
        rows.append((bt, ct, c.sense, c.rhs))
    var_rows: list[list[int]] = [[] for _ in range(nvars)]
    for ri, (bt, ct, _, _) in enumerate(rows):
        for i, _ in bt:
            var_rows[i].append(ri)

    # continuous-facing rows, vectorized for fast leaf keying
    cont_rows = [ri for ri, (bt, ct, _, _) in enumerate(rows) if ct]
    n_cr = len(cont_rows)
    B = np.zeros((n_cr, len(bin_idx)))
    base_rhs = np.zeros(n_cr)
    senses = []
    max_lhs = np.zeros(n_cr)  # largest continuous LHS the bounds allow
    for r, ri in enumerate(cont_rows):
        bt, ct, sense, rhs = rows[ri]
        base_rhs[r] = rhs
        senses.append(sense)
        for i, coef in bt:
            B[r, bin_pos[i]] += coef
        hi = 0.0
        for i, coef in ct:
            top = coef * ubs[i] if coef >= 0 else coef * lbs[i]
            hi += top
        max_lhs[r] = hi
    senses = np.array(senses)
    le_mask = senses == "<="

    # single continuous-variable <= rows can force variables to zero
    single_var = np.full(n_cr, -1, dtype=int)
    for r, ri in enumerate(cont_rows):
        _, ct, sense, _ = rows[ri]
        if sense == "<=" and len(ct) == 1 and ct[0][1] > 0 and lbs[ct[0][0]] == 0.0:
            single_var[r] = ct[0][0]

    assign = np.full(nvars, -1, dtype=np.int8)
    for i in bin_idx:
        if ubs[i] <= 0.0:
            assign[i] = 0
        elif lbs[i] >= 1.0:
            assign[i] = 1

    # structure mined from the rows, for objective bounding under partial
    # assignments: one-hot binary groups (sum = 1 rows) and continuous vars
    # dominated by a single binary (x - b <= 0 rows)
    one_hot_group: dict[int, int] = {}
    group_members: list[list[int]] = []
    for bt, ct, sense, rhs in rows:
        if sense == "=" and rhs == 1.0 and not ct and all(c == 1.0 for _, c in bt):
            g = len(group_members)
            group_members.append([i for i, _ in bt])
            for i, _ in bt:
                one_hot_group.setdefault(i, g)
    dominator: dict[int, int] = {}
    for bt, ct, sense, rhs in rows:
        if sense == "<=" and rhs == 0.0 and len(bt) == 1 and len(ct) == 1:
            (bi, bc), (xi, xc) = bt[0], ct[0]
            if xc > 0 and abs(bc + xc) < 1e-12 and bi in one_hot_group:
                dominator.setdefault(xi, bi)

    bound_rows = []
    for ri in cont_rows:
        bt, ct, sense, rhs = rows[ri]
        if sense not in ("<=", "=") or not any(coef > 0 for _, coef in ct):
            continue
        pos_terms = [(i, c) for i, c in ct if c > 0]
        neg_plain: list[tuple[int, float]] = []
        grouped: dict[int, dict[int, list[tuple[int, float]]]] = {}
        for i, c in ct:
            if c >= 0:
                continue
            b = dominator.get(i)
            if b is None:
                neg_plain.append((i, -c))
            else:
                grouped.setdefault(one_hot_group[b], {}).setdefault(b, []).append((i, -c))
        bound_rows.append((ri, pos_terms, neg_plain, grouped))

    def objective_upper_bound() -> float:
        """Upper bound on the objective given the partial binary assignment.

        Interval propagation over the continuous rows, with sums of dominated
        variables collapsed per one-hot group: a UAV-epoch group contributes
        at most its best single member, not the sum over members."""
        ub = {i: ubs[i] for i in cont_idx}
        for _ in range(2):
            for ri, pos_terms, neg_plain, grouped in bound_rows:
                bt, ct, sense, rhs = rows[ri]
                rhs_adj = rhs
                for i, coef in bt:
                    a = assign[i]
                    rhs_adj -= coef * a if a >= 0 else min(0.0, coef)
                reach = 0.0  # largest achievable total of the negated terms
                for i, mag in neg_plain:
                    reach += mag * ub[i]
                for g, per_b in grouped.items():
                    best_b = 0.0
                    for b, terms in per_b.items():
                        if assign[b] == 0:
                            continue
                        tot = 0.0
                        for i, mag in terms:
                            tot += mag * ub[i]
                        if assign[b] == 1:
                            best_b = tot
                            break
                        best_b = max(best_b, tot)
                    reach += best_b
                base = sum(c * lbs[i] for i, c in pos_terms)
                for i, c in pos_terms:
                    cand = (rhs_adj + reach - (base - c * lbs[i])) / c
                    if cand < ub[i]:
                        ub[i] = max(cand, lbs[i])
        return ub[obj_i]

    def _scan_row(ri: int, trail: list[int]):
        bt, ct, sense, rhs = rows[ri]
        lb = 0.0
        ub = 0.0
        for i, coef in ct:
            lb += coef * lbs[i] if coef >= 0 else coef * ubs[i]
            ub += coef * ubs[i] if coef >= 0 else coef * lbs[i]
        free = []
        for i, coef in bt:
            a = assign[i]
            if a >= 0:
                lb += coef * a
                ub += coef * a
            else:
                lb += min(0.0, coef)
                ub += max(0.0, coef)
                free.append((i, coef))
        if sense in ("<=", "=") and lb > rhs + 1e-9:
            return None
        if sense in (">=", "=") and ub < rhs - 1e-9:
            return None
        fixed = []
        for i, coef in free:
            force = -1
            if sense in ("<=", "="):
                if lb + max(0.0, coef) > rhs + 1e-9:
                    force = 0
                if lb - min(0.0, coef) > rhs + 1e-9:
                    force = -2 if force == 0 else 1
            if force != -2 and sense in (">=", "="):
                if ub + min(0.0, coef) < rhs - 1e-9:
                    force = -2 if force == 1 else 0
                if ub - max(0.0, coef) < rhs - 1e-9:
                    force = -2 if force == 0 else 1
            if force == -2:
                return None
            if force >= 0:
                assign[i] = force
                trail.append(i)
                fixed.append(i)
                break  # bounds are stale now; the worklist rescans
        return fixed

    def propagate(trail: list[int]) -> bool:
        queue = list(dict.fromkeys(ri for v in trail for ri in var_rows[v])) or list(
            range(len(rows))
        )
        while queue:
            ri = queue.pop()
            fixed = _scan_row(ri, trail)
            if fixed is None:
                return False
            if fixed:
                queue.append(ri)
                for v in fixed:
                    queue.extend(var_rows[v])
        return True

    lp_cache: dict[bytes, tuple] = {}

    def solve_continuous():
        """Presolve + solve the continuous remainder for the full assignment."""
        xbin = np.array([assign[i] for i in bin_idx], dtype=float)
        rhs_eff = base_rhs - B @ xbin
        live = ~(le_mask & (max_lhs <= rhs_eff + 1e-9))
        key = live.tobytes() + np.round(rhs_eff[live], 9).tobytes()
        hit = lp_cache.get(key)
        if hit is not None:
            return hit

        # fixed-point zero-forcing from single-variable <= rows
        forced_zero = set()
        live_idx = np.nonzero(live)[0]
        for r in live_idx:
            if single_var[r] >= 0 and rhs_eff[r] <= 1e-12:
                forced_zero.add(single_var[r])
        changed = True
        while changed:
            changed = False
            for r in live_idx:
                ri = cont_rows[r]
                _, ct, sense, _ = rows[ri]
                if sense != "=":
                    continue
                unfixed = [(i, coef) for i, coef in ct if i not in forced_zero]
                if len(unfixed) == 1 and abs(rhs_eff[r]) <= 1e-12:
                    i, coef = unfixed[0]
                    if lbs[i] == 0.0 and i not in forced_zero:
                        forced_zero.add(i)
                        changed = True

        keep_vars = sorted(
            {i for r in live_idx for i, _ in rows[cont_rows[r]][1] if i not in forced_zero}
            | ({obj_i} if obj_i not in forced_zero else set())
        )
        pos = {i: j for j, i in enumerate(keep_vars)}
        m = len(keep_vars)
        a_ub, b_ub, a_eq, b_eq = [], [], [], []
        for r in live_idx:
            ri = cont_rows[r]
            _, ct, sense, _ = rows[ri]
            arr = np.zeros(m)
            nonzero = False
            for i, coef in ct:
                if i in pos:
                    arr[pos[i]] += coef
                    nonzero = True
            r_eff = rhs_eff[r]
            if not nonzero:
                ok = (
                    (sense == "<=" and r_eff >= -1e-9)
                    or (sense == ">=" and r_eff <= 1e-9)
                    or (sense == "=" and abs(r_eff) <= 1e-9)
                )
                if ok:
                    continue
                lp_cache[key] = (None, None)
                return None, None
            if sense == "<=":
                a_ub.append(arr)
                b_ub.append(r_eff)
            elif sense == ">=":
                a_ub.append(-arr)
                b_ub.append(-r_eff)
            else:
                a_eq.append(arr)
                b_eq.append(r_eff)
        for i in keep_vars:
            j = pos[i]
            if lbs[i] > 0:
                arr = np.zeros(m)
                arr[j] = -1.0
                a_ub.append(arr)
                b_ub.append(-lbs[i])
            if math.isfinite(ubs[i]):
                arr = np.zeros(m)
                arr[j] = 1.0
                a_ub.append(arr)
                b_ub.append(ubs[i])
        c = np.zeros(m)
        if obj_i in pos:
            c[pos[obj_i]] = 1.0
        res = simplex_solve(
            c,
            np.array(a_ub) if a_ub else None,
            np.array(b_ub) if b_ub else None,
            np.array(a_eq) if a_eq else None,
            np.array(b_eq) if b_eq else None,
        )
        if res.status != "optimal":
            result = (None, None)
        else:
            # vars in dropped rows sit at their lower bound, which satisfies them
            xc = np.array([lbs[i] for i in cont_idx])
            for i in forced_zero:
                xc[cont_pos[i]] = 0.0
            for i in keep_vars:
                xc[cont_pos[i]] = res.x[pos[i]]
            value = float(xc[cont_pos[obj_i]])
            result = (value, xc)
        lp_cache[key] = result
        return result

    # branch binaries the continuous rows can see first; don't-cares last
    seen_in_cont = {i for r in range(n_cr) for i, _ in rows[cont_rows[r]][0]}
    order = [i for i in bin_idx if assign[i] == -1 and i in seen_in_cont]
    semantic_len = len(order)
    order += [i for i in bin_idx if assign[i] == -1 and i not in seen_in_cont]

    best_val = -math.inf
    best_vars: dict[str, float] | None = None
    nodes = 0
    t0 = time.monotonic()
    truncated = False
    proven = False

    def record(value, xc):
        nonlocal best_val, best_vars, proven
        if value > best_val + 1e-12:
            best_val = value
            best_vars = {}
            for i in bin_idx:
                best_vars[model.variables[i].name] = float(assign[i])
            for i in cont_idx:
                best_vars[model.variables[i].name] = float(xc[cont_pos[i]])
            if best_val >= obj_ub - 1e-12:
                proven = True  # nothing can beat the objective bound

    def complete_suffix(pos: int, trails: list[list[int]]) -> bool:
        """First feasible assignment of the remaining binaries.  They appear
        in no continuous row, so any completion leaves the LP unchanged."""
        nonlocal nodes, truncated
        nodes += 1
        if nodes > max_nodes or (nodes % 512 == 0 and time.monotonic() - t0 > time_budget_s):
            truncated = True
            return False
        while pos < len(order) and assign[order[pos]] != -1:
            pos += 1
        if pos == len(order):
            return True
        var = order[pos]
        for val in (1, 0):
            trail = [var]
            assign[var] = val
            if propagate(trail) and complete_suffix(pos + 1, trails):
                trails.append(trail)
                return True
            for i in trail:
                assign[i] = -1
            if truncated:
                break
        return False

    def dfs(pos: int) -> bool:
        nonlocal nodes, truncated
        if proven:
            return False
        nodes += 1
        if nodes > max_nodes or (nodes % 512 == 0 and time.monotonic() - t0 > time_budget_s):
            truncated = True
            return False
        while pos < len(order) and assign[order[pos]] != -1:
            pos += 1
        if pos >= semantic_len:
            trails: list[list[int]] = []
            if complete_suffix(pos, trails):
                value, xc = solve_continuous()
                if value is not None:
                    record(value, xc)
            for trail in reversed(trails):
                for i in trail:
                    assign[i] = -1
            return not proven and not truncated
        var = order[pos]
        grp = one_hot_group.get(var)
        for val in (1, 0):
            trail = [var]
            assign[var] = val
            if propagate(trail):
                prune = False
                if (
                    best_vars is not None
                    and grp is not None
                    and all(assign[b] != -1 for b in group_members[grp])
                ):
                    prune = objective_upper_bound() <= best_val + 1e-9
                if not prune and not dfs(pos + 1):
                    for i in trail:
                        assign[i] = -1
                    return False
            for i in trail:
                assign[i] = -1
        return True

    root_trail: list[int] = []
    feasible_root = propagate(root_trail)
    if feasible_root:
        dfs(0)
    if truncated:
        return ("limit", best_val if best_vars else None, best_vars)
    if best_vars is None:
        return ("infeasible", None, None)
    return ("optimal", best_val, best_vars)
