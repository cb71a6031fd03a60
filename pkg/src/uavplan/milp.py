"""Fully linear MILP formulation of the fleet-planning problem, plus LP-format I/O.

The builder emits only linear rows; products between decisions are replaced by
auxiliary variables:

* battery recurrence: big-M rows per location pair, with the smallest constant
  that covers every pair (battery capacity plus the costliest hop at max load);
* delivery fulfilment: indicator variables bounded by carrying and presence;
* service quality: per-location allocation shares bounded by presence, summing
  to the mission allocation;
* relay capacity: transfer-share variables bounded by both endpoint presences
  and by the sender's relay fraction;
* the max-min objective: a single epigraph variable under every per-mission
  satisfaction floor.

Variable and constraint counts follow closed forms (see ``model_size``),
asserted in the test suite.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .evaluator import Plan
from .scenario import Scenario

BINARY_ROUND_TOL = 1e-4


@dataclass(frozen=True)
class Var:
    name: str
    kind: str  # binary | continuous
    lb: float
    ub: float
    symbol: str
    indices: tuple


@dataclass(frozen=True)
class Constraint:
    name: str
    terms: tuple[tuple[int, float], ...]  # (variable index, coefficient)
    sense: str  # <= | >= | =
    rhs: float


@dataclass
class MilpModel:
    variables: list[Var]
    constraints: list[Constraint]
    objective: str  # name of the maximized variable
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.name_to_idx = {v.name: i for i, v in enumerate(self.variables)}
        if len(self.name_to_idx) != len(self.variables):
            raise ValueError("variable names must be unique")

    def var(self, symbol: str, *indices) -> Var:
        return self.variables[self.name_to_idx[_name(symbol, indices)]]

    def binaries(self) -> list[int]:
        return [i for i, v in enumerate(self.variables) if v.kind == "binary"]


def _name(symbol: str, indices) -> str:
    if not indices:
        return symbol
    return symbol + "_" + "_".join(str(i) for i in indices)


class _Builder:
    """Accumulates variables and linear rows; the only way terms enter a model."""

    def __init__(self):
        self.vars: list[Var] = []
        self.index: dict[str, int] = {}
        self.rows: list[Constraint] = []

    def add_var(self, symbol, indices=(), kind="continuous", lb=0.0, ub=math.inf) -> int:
        name = _name(symbol, indices)
        if kind == "binary" and math.isinf(ub):
            ub = 1.0
        if name in self.index:
            raise ValueError(f"duplicate variable {name}")
        if len(name) > 255:
            raise ValueError(f"variable name too long: {name}")
        self.vars.append(Var(name, kind, float(lb), float(ub), symbol, tuple(indices)))
        self.index[name] = len(self.vars) - 1
        return self.index[name]

    def add_row(self, name: str, terms, sense: str, rhs: float) -> None:
        clean = tuple((int(i), float(c)) for i, c in terms if c != 0.0)
        if not clean:
            # emit nothing for vacuously true rows; a vacuously false one is a bug
            ok = (sense == "<=" and rhs >= 0) or (sense == ">=" and rhs <= 0) or (sense == "=" and rhs == 0)
            if not ok:
                raise ValueError(f"constraint {name} is infeasible with no terms")
            return
        self.rows.append(Constraint(name, clean, sense, float(rhs)))

    def get(self, symbol, *indices) -> int:
        return self.index[_name(symbol, indices)]

    def has(self, symbol, *indices) -> bool:
        return _name(symbol, indices) in self.index


def build_milp(s: Scenario, depot_return: bool = True) -> MilpModel:
    """Emit the linearized model for a validated scenario; maximize Gamma."""
    from .scenario import validate

    issues = validate(s)
    if issues:
        raise ValueError("scenario failed validation: " + "; ".join(map(str, issues)))

    D, K, L = s.num_uavs, s.epochs, s.num_locations
    P, Z = s.num_payloads, s.num_zones
    service = list(s.service_mission_ids)
    ridx = s.relay_index
    depots = set(s.depot_ids)
    w = s.payload_weights()
    W, C, E = s.uav.empty_weight_kg, s.uav.payload_capacity_kg, s.uav.battery_capacity_wh
    V = s.uav.max_step_km
    reach = s.dist_km <= V + 1e-12
    q = s.quality
    n = s.demand
    t_uav = s.link_uav_mb
    t_sink = s.link_sink_mb
    H = s.horizon

    b = _Builder()

    # -- variables, grouped by symbol in export order --------------------------
    for d in range(D):
        for k in range(K):
            for l in range(L):
                ub = 1.0
                if k == 0 and l not in depots:
                    ub = 0.0  # fleet starts at a depot
                if depot_return and k == K - 1 and l not in depots:
                    ub = 0.0
                b.add_var("lam", (d, k, l), "binary", 0.0, ub)
    for d in range(D):
        for k in range(K):
            for p in range(P):
                b.add_var("om", (d, k, p), "binary")
    for d in range(D):
        for k in range(K):
            lb = E if k == 0 else 0.0
            b.add_var("beta", (d, k), "continuous", lb, E)
    for pl in s.payloads:
        if not pl.deliverable:
            continue
        a0, b0 = pl.window
        for d in range(D):
            for k in range(a0, b0 + 1):
                b.add_var("delta", (d, k, pl.id), "binary")
    for d in range(D):
        for k in range(K):
            for m in service:
                for z in range(Z):
                    b.add_var("mu", (d, k, m, z), "continuous", 0.0, 1.0)
    for d in range(D):
        for k in range(K):
            for l in range(L):
                for m in service:
                    for z in range(Z):
                        b.add_var("muh", (d, k, l, m, z), "continuous", 0.0, 1.0)
    has_relay = ridx is not None
    if has_relay:
        for d in range(D):
            for k in range(K):
                b.add_var("rho", (d, k), "continuous", 0.0, 1.0)
        for d1 in range(D):
            for d2 in range(D):
                if d1 == d2:
                    continue
                for k in range(K):
                    b.add_var("tau", (d1, d2, k), "continuous")
        for d in range(D):
            for k in range(K):
                b.add_var("tausink", (d, k), "continuous")
        for d1 in range(D):
            for d2 in range(D):
                if d1 == d2:
                    continue
                for k in range(K):
                    for l1 in range(L):
                        for l2 in range(L):
                            b.add_var("wt", (d1, d2, k, l1, l2), "continuous", 0.0, 1.0)
        for d in range(D):
            for k in range(K):
                for l in range(L):
                    b.add_var("wts", (d, k, l), "continuous", 0.0, 1.0)

    # windowed demand totals decide which satisfaction ratios exist
    cs = np.concatenate([np.zeros((1, s.num_missions, Z)), np.cumsum(n, axis=0)])
    win_need = np.zeros((K, s.num_missions, Z))
    for k in range(K):
        lo = max(0, k - H)
        win_need[k] = cs[k + 1] - cs[lo]
    for k in range(K):
        for m in service:
            for z in range(Z):
                if win_need[k, m, z] > 0:
                    b.add_var("sig", (k, m, z), "continuous", 0.0, 1.0)
    for m in service:
        b.add_var("sigbar", (m,), "continuous", 0.0, 1.0)
    if service:
        gamma = b.add_var("Gamma", (), "continuous", 0.0, 1.0)
    else:
        gamma = b.add_var("Gamma", (), "continuous", 1.0, 1.0)

    # -- rows -------------------------------------------------------------------
    # one location per epoch
    for d in range(D):
        for k in range(K):
            b.add_row(
                f"loc_unique_{d}_{k}",
                [(b.get("lam", d, k, l), 1.0) for l in range(L)],
                "=",
                1.0,
            )
    # movement limited to one-epoch hops
    for d in range(D):
        for k in range(1, K):
            for l in range(L):
                terms = [(b.get("lam", d, k, l), 1.0)]
                terms += [(b.get("lam", d, k - 1, l2), -1.0) for l2 in range(L) if reach[l2, l]]
                b.add_row(f"travel_{d}_{k}_{l}", terms, "<=", 0.0)
    # payload capacity
    if P:
        for d in range(D):
            for k in range(K):
                b.add_row(
                    f"cap_{d}_{k}",
                    [(b.get("om", d, k, p), w[p]) for p in range(P)],
                    "<=",
                    C,
                )
    # payload changes only at depots
    for d in range(D):
        for k in range(1, K):
            depot_terms = [(b.get("lam", d, k, l), 1.0) for l in depots]
            for p in range(P):
                up = [(b.get("om", d, k, p), 1.0), (b.get("om", d, k - 1, p), -1.0)]
                dn = [(b.get("om", d, k, p), -1.0), (b.get("om", d, k - 1, p), 1.0)]
                b.add_row(f"lock_up_{d}_{k}_{p}", up + [(i, -c) for i, c in depot_terms], "<=", 0.0)
                b.add_row(f"lock_dn_{d}_{k}_{p}", dn + [(i, -c) for i, c in depot_terms], "<=", 0.0)
    # battery recurrence away from depots, big-M per location pair
    e_max = float(s.energy_wh_per_kg.max(initial=0.0))
    big_m = E + e_max * (W + C)
    for d in range(D):
        for k in range(1, K):
            for l1 in range(L):
                for l2 in range(L):
                    if l2 in depots or not reach[l1, l2]:
                        continue
                    e = s.energy_wh_per_kg[l1, l2]
                    terms = [
                        (b.get("beta", d, k), 1.0),
                        (b.get("beta", d, k - 1), -1.0),
                        (b.get("lam", d, k - 1, l1), big_m),
                        (b.get("lam", d, k, l2), big_m),
                    ]
                    terms += [(b.get("om", d, k, p), e * w[p]) for p in range(P)]
                    b.add_row(f"batt_{d}_{k}_{l1}_{l2}", terms, "<=", 2 * big_m - e * W)
    # deliveries: carried and present at the target within the window
    for pl in s.payloads:
        if not pl.deliverable:
            continue
        a0, b0 = pl.window
        cover = []
        for d in range(D):
            for k in range(a0, b0 + 1):
                dv = b.get("delta", d, k, pl.id)
                b.add_row(f"dlt_om_{d}_{k}_{pl.id}", [(dv, 1.0), (b.get("om", d, k, pl.id), -1.0)], "<=", 0.0)
                b.add_row(
                    f"dlt_lam_{d}_{k}_{pl.id}",
                    [(dv, 1.0), (b.get("lam", d, k, pl.target), -1.0)],
                    "<=",
                    0.0,
                )
                cover.append((dv, 1.0))
        b.add_row(f"deliv_{pl.id}", cover, ">=", 1.0)
    # equipment needed for missions
    for m in service:
        for p in s.missions[m].requires:
            for d in range(D):
                for k in range(K):
                    for z in range(Z):
                        b.add_row(
                            f"equip_{d}_{k}_{m}_{z}_{p}",
                            [(b.get("mu", d, k, m, z), 1.0), (b.get("om", d, k, p), -1.0)],
                            "<=",
                            0.0,
                        )
    if has_relay:
        for p in s.missions[ridx].requires:
            for d in range(D):
                for k in range(K):
                    b.add_row(
                        f"equip_relay_{d}_{k}_{p}",
                        [(b.get("rho", d, k), 1.0), (b.get("om", d, k, p), -1.0)],
                        "<=",
                        0.0,
                    )
    # epoch time budget
    if service or has_relay:
        for d in range(D):
            for k in range(K):
                terms = [(b.get("mu", d, k, m, z), 1.0) for m in service for z in range(Z)]
                if has_relay:
                    terms.append((b.get("rho", d, k), 1.0))
                b.add_row(f"budget_{d}_{k}", terms, "<=", 1.0)
    # location shares: tie mu-hat to presence and to the mission allocation
    for d in range(D):
        for k in range(K):
            for m in service:
                for z in range(Z):
                    for l in range(L):
                        b.add_row(
                            f"muh_lam_{d}_{k}_{l}_{m}_{z}",
                            [(b.get("muh", d, k, l, m, z), 1.0), (b.get("lam", d, k, l), -1.0)],
                            "<=",
                            0.0,
                        )
                    terms = [(b.get("muh", d, k, l, m, z), 1.0) for l in range(L)]
                    terms.append((b.get("mu", d, k, m, z), -1.0))
                    b.add_row(f"muh_sum_{d}_{k}_{m}_{z}", terms, "=", 0.0)
    # zone needs per epoch
    for k in range(K):
        for m in service:
            for z in range(Z):
                terms = [
                    (b.get("muh", d, k, l, m, z), q[l, m, z])
                    for d in range(D)
                    for l in range(L)
                    if q[l, m, z] != 0.0
                ]
                b.add_row(f"need_{k}_{m}_{z}", terms, "<=", n[k, m, z])
    # traffic flow and relay capacity
    if has_relay:

        def gen_terms(d, k, sign=1.0):
            out = []
            for m in service:
                rate = s.missions[m].mb_per_work
                if rate == 0.0:
                    continue
                for l in range(L):
                    for z in range(Z):
                        if q[l, m, z] != 0.0:
                            out.append((b.get("muh", d, k, l, m, z), sign * rate * q[l, m, z]))
            return out

        for d in range(D):
            for k in range(K):
                terms = gen_terms(d, k, 1.0)
                for d2 in range(D):
                    if d2 == d:
                        continue
                    terms.append((b.get("tau", d2, d, k), 1.0))
                    terms.append((b.get("tau", d, d2, k), -1.0))
                terms.append((b.get("tausink", d, k), -1.0))
                b.add_row(f"flow_{d}_{k}", terms, "=", 0.0)
        for k in range(K):
            terms = []
            for d in range(D):
                terms += gen_terms(d, k, 1.0)
                terms.append((b.get("tausink", d, k), -1.0))
            b.add_row(f"sink_{k}", terms, "=", 0.0)
        t_max = float(t_uav.max(initial=0.0))
        ts_max = float(t_sink.max(initial=0.0))
        for d1 in range(D):
            for d2 in range(D):
                if d1 == d2:
                    continue
                for k in range(K):
                    cap_terms = [(b.get("tau", d1, d2, k), 1.0)]
                    for l1 in range(L):
                        for l2 in range(L):
                            wv = b.get("wt", d1, d2, k, l1, l2)
                            b.add_row(
                                f"wt_lam1_{d1}_{d2}_{k}_{l1}_{l2}",
                                [(wv, 1.0), (b.get("lam", d1, k, l1), -1.0)],
                                "<=",
                                0.0,
                            )
                            b.add_row(
                                f"wt_lam2_{d1}_{d2}_{k}_{l1}_{l2}",
                                [(wv, 1.0), (b.get("lam", d2, k, l2), -1.0)],
                                "<=",
                                0.0,
                            )
                            b.add_row(
                                f"wt_rho_{d1}_{d2}_{k}_{l1}_{l2}",
                                [(wv, 1.0), (b.get("rho", d1, k), -1.0)],
                                "<=",
                                0.0,
                            )
                            cap_terms.append((wv, -t_uav[l1, l2]))
                    b.add_row(f"taucap_{d1}_{d2}_{k}", cap_terms, "<=", 0.0)
                    b.add_row(
                        f"taumax_{d1}_{d2}_{k}",
                        [(b.get("tau", d1, d2, k), 1.0), (b.get("rho", d1, k), -t_max)],
                        "<=",
                        0.0,
                    )
        for d in range(D):
            for k in range(K):
                cap_terms = [(b.get("tausink", d, k), 1.0)]
                for l in range(L):
                    wv = b.get("wts", d, k, l)
                    b.add_row(
                        f"wts_lam_{d}_{k}_{l}",
                        [(wv, 1.0), (b.get("lam", d, k, l), -1.0)],
                        "<=",
                        0.0,
                    )
                    b.add_row(
                        f"wts_rho_{d}_{k}_{l}",
                        [(wv, 1.0), (b.get("rho", d, k), -1.0)],
                        "<=",
                        0.0,
                    )
                    cap_terms.append((wv, -t_sink[l]))
                b.add_row(f"tausinkcap_{d}_{k}", cap_terms, "<=", 0.0)
                b.add_row(
                    f"tausinkmax_{d}_{k}",
                    [(b.get("tausink", d, k), 1.0), (b.get("rho", d, k), -ts_max)],
                    "<=",
                    0.0,
                )
    # satisfaction ratios over the sliding window, epigraph objective
    for k in range(K):
        lo = max(0, k - H)
        for m in service:
            for z in range(Z):
                if win_need[k, m, z] <= 0:
                    continue
                terms = [(b.get("sig", k, m, z), win_need[k, m, z])]
                for h in range(lo, k + 1):
                    for d in range(D):
                        for l in range(L):
                            if q[l, m, z] != 0.0:
                                terms.append((b.get("muh", d, h, l, m, z), -q[l, m, z]))
                b.add_row(f"sig_{k}_{m}_{z}", terms, "=", 0.0)
                b.add_row(
                    f"sigbar_{k}_{m}_{z}",
                    [(b.get("sigbar", m), 1.0), (b.get("sig", k, m, z), -1.0)],
                    "<=",
                    0.0,
                )
    for m in service:
        b.add_row(f"gamma_{m}", [(gamma, 1.0), (b.get("sigbar", m), -1.0)], "<=", 0.0)

    meta = {
        "uavs": D,
        "epochs": K,
        "locations": L,
        "payloads": P,
        "zones": Z,
        "missions": [m.name for m in s.missions],
        "service_missions": service,
        "relay_index": ridx,
        "depot_return": depot_return,
    }
    return MilpModel(variables=b.vars, constraints=b.rows, objective="Gamma", meta=meta)


def model_size(s: Scenario, depot_return: bool = True) -> dict:
    """Closed-form variable and constraint counts for a scenario's model.

    Variables: |lam| = DKL, |om| = DKP, |beta| = DK, |delta| = D * sum of
    window lengths, |mu| = DK*Ms*Z, |muh| = DKL*Ms*Z, |rho| = |tausink| = DK,
    |tau| = D(D-1)K, |wt| = D(D-1)K*L^2, |wts| = DKL (relay families only
    when a relay mission exists), one sig per (epoch, service mission, zone)
    with windowed demand, one sigbar per service mission, plus Gamma.

    Constraint families follow the same index spaces; sense rows that would
    be vacuously true (no terms) are not emitted, so the need-row count skips
    (mission, zone) pairs no location can serve.
    """
    D, K, L = s.num_uavs, s.epochs, s.num_locations
    P, Z = s.num_payloads, s.num_zones
    Ms = len(s.service_mission_ids)
    has_relay = s.relay_index is not None
    win = sum(b0 - a0 + 1 for p in s.payloads if p.deliverable for a0, b0 in [p.window])
    cs = np.concatenate([np.zeros((1, s.num_missions, Z)), np.cumsum(s.demand, axis=0)])
    n_sig = 0
    for k in range(K):
        lo = max(0, k - s.horizon)
        wn = cs[k + 1] - cs[lo]
        n_sig += int((wn[list(s.service_mission_ids)] > 0).sum()) if Ms else 0
    pairs = D * (D - 1)
    nvars = (
        D * K * L  # lam
        + D * K * P  # om
        + D * K  # beta
        + D * win  # delta
        + D * K * Ms * Z  # mu
        + D * K * L * Ms * Z  # muh
        + (D * K if has_relay else 0)  # rho
        + (pairs * K if has_relay else 0)  # tau
        + (D * K if has_relay else 0)  # tausink
        + (pairs * K * L * L if has_relay else 0)  # wt
        + (D * K * L if has_relay else 0)  # wts
        + n_sig  # sig
        + Ms  # sigbar
        + 1  # Gamma
    )
    servable = int(sum(1 for m in s.service_mission_ids for z in range(Z) if s.quality[:, m, z].any()))
    n_req = sum(len(s.missions[m].requires) for m in s.service_mission_ids)
    rows = {
        "loc_unique": D * K,
        "travel": D * (K - 1) * L,
        "cap": D * K if P else 0,
        "lock": 2 * D * (K - 1) * P,
        "dlt": 2 * D * win,
        "deliv": len(s.deliverable_ids),
        "equip": D * K * Z * n_req + (D * K * len(s.missions[s.relay_index].requires) if has_relay else 0),
        "budget": D * K if (Ms or has_relay) else 0,
        "muh": D * K * Ms * Z * (L + 1),
        "need": K * servable,
        "sig": n_sig,
        "sigbar": n_sig,
        "gamma": Ms,
    }
    return {"variables": nvars, "sig": n_sig, "mu_hat": D * K * L * Ms * Z, "rows": rows}


# -- LP text export / import -----------------------------------------------------


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _write_terms(terms, variables) -> str:
    parts = []
    for i, coef in terms:
        sign = "-" if coef < 0 else "+"
        parts.append(f"{sign} {_fmt(abs(coef))} {variables[i].name}")
    if not parts:
        raise AssertionError("empty constraint row reached the exporter")
    first = parts[0]
    if first.startswith("+ "):
        first = first[2:]
    else:
        first = "- " + first[2:]
    return " ".join([first] + parts[1:])


def export_lp(m: MilpModel) -> str:
    """CPLEX-LP text with deterministic ordering and 12-significant-digit
    coefficients."""
    out = ["\\ uavplan model export", "Maximize", f" obj: {m.objective}", "Subject To"]
    for c in m.constraints:
        sense = {"<=": "<=", ">=": ">=", "=": "="}[c.sense]
        body = _write_terms(c.terms, m.variables)
        line = f" {c.name}: {body} {sense} {_fmt(c.rhs)}"
        if len(line) > 500:  # wrap very long rows for picky readers
            words = line.split(" ")
            line_parts, cur = [], ""
            for wd in words:
                if len(cur) + len(wd) + 1 > 230:
                    line_parts.append(cur)
                    cur = "   " + wd
                else:
                    cur = wd if not cur else cur + " " + wd
            line_parts.append(cur)
            line = "\n".join(line_parts)
        out.append(line)
    out.append("Bounds")
    for v in m.variables:
        if v.kind == "binary":
            if v.ub == 0.0:
                out.append(f" {v.name} = 0")
            continue
        if v.lb == v.ub:
            out.append(f" {v.name} = {_fmt(v.lb)}")
        elif math.isinf(v.ub):
            if v.lb != 0.0:
                out.append(f" {v.name} >= {_fmt(v.lb)}")
        else:
            out.append(f" {_fmt(v.lb)} <= {v.name} <= {_fmt(v.ub)}")
    binaries = [v.name for v in m.variables if v.kind == "binary"]
    if binaries:
        out.append("Binary")
        line = ""
        for name in binaries:
            if len(line) + len(name) + 1 > 230:
                out.append(" " + line.rstrip())
                line = ""
            line += name + " "
        if line:
            out.append(" " + line.rstrip())
    out.append("End")
    return "\n".join(out) + "\n"


_TERM_RE = re.compile(r"([+-]?)\s*(\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)?\s*([A-Za-z][A-Za-z0-9_]*)")


def parse_lp(text: str) -> MilpModel:
    """Re-read an exported LP file into a structurally equal model."""
    lines = []
    for raw in text.splitlines():
        line = raw.split("\\")[0].rstrip()
        if line.strip():
            lines.append(line)
    section = None
    objective = None
    rows: list[tuple[str, str, float, str]] = []  # name, body, rhs, sense
    bounds: dict[str, tuple[float, float]] = {}
    binaries: set[str] = set()
    buffer = ""

    def flush_row():
        nonlocal buffer
        if not buffer.strip():
            return
        mobj = re.match(r"\s*([A-Za-z0-9_]+)\s*:\s*(.*)", buffer, re.S)
        if not mobj:
            raise ValueError(f"cannot parse constraint: {buffer[:80]!r}")
        name, rest = mobj.group(1), mobj.group(2)
        sm = re.search(r"(<=|>=|=)\s*([-+]?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)\s*$", rest)
        if not sm:
            raise ValueError(f"constraint {name} lacks sense/rhs")
        rows.append((name, rest[: sm.start()], float(sm.group(2)), sm.group(1)))
        buffer = ""

    for line in lines:
        low = line.strip().lower()
        if low in ("maximize", "minimize"):
            section = "obj"
            continue
        if low == "subject to":
            flush_row()
            section = "rows"
            continue
        if low == "bounds":
            flush_row()
            section = "bounds"
            continue
        if low in ("binary", "binaries"):
            flush_row()
            section = "binary"
            continue
        if low == "end":
            flush_row()
            section = None
            continue
        if section == "obj":
            mobj = re.match(r"\s*\w+\s*:\s*([A-Za-z][A-Za-z0-9_]*)\s*$", line)
            if not mobj:
                raise ValueError(f"objective must be a single variable, got {line!r}")
            objective = mobj.group(1)
        elif section == "rows":
            if re.match(r"\s*[A-Za-z0-9_]+\s*:", line) and buffer:
                flush_row()
            buffer += " " + line.strip()
            if re.search(r"(<=|>=|=)\s*[-+]?\d", buffer):
                flush_row()
        elif section == "bounds":
            t = line.strip()
            mm = re.match(
                r"([-+]?[\d.eE+-]+)\s*<=\s*([A-Za-z][A-Za-z0-9_]*)\s*<=\s*([-+]?[\d.eE+-]+)", t
            )
            if mm:
                bounds[mm.group(2)] = (float(mm.group(1)), float(mm.group(3)))
                continue
            mm = re.match(r"([A-Za-z][A-Za-z0-9_]*)\s*=\s*([-+]?[\d.eE+-]+)", t)
            if mm:
                val = float(mm.group(2))
                bounds[mm.group(1)] = (val, val)
                continue
            mm = re.match(r"([A-Za-z][A-Za-z0-9_]*)\s*>=\s*([-+]?[\d.eE+-]+)", t)
            if mm:
                bounds[mm.group(1)] = (float(mm.group(2)), math.inf)
                continue
            raise ValueError(f"cannot parse bound line {t!r}")
        elif section == "binary":
            binaries.update(line.split())

    if objective is None:
        raise ValueError("no objective found")

    # collect names in first-appearance order: objective, then rows
    order: list[str] = []
    seen = set()

    def note(nm):
        if nm not in seen:
            seen.add(nm)
            order.append(nm)

    note(objective)
    parsed_rows = []
    for name, body, rhs, sense in rows:
        terms = []
        for sm in _TERM_RE.finditer(body):
            sign, coef, var = sm.groups()
            value = float(coef) if coef else 1.0
            if sign == "-":
                value = -value
            note(var)
            terms.append((var, value))
        parsed_rows.append((name, terms, sense, rhs))
    for nm in bounds:
        note(nm)
    for nm in binaries:
        note(nm)

    variables = []
    for nm in order:
        kind = "binary" if nm in binaries else "continuous"
        if nm in bounds:
            lb, ub = bounds[nm]
        elif kind == "binary":
            lb, ub = 0.0, 1.0
        else:
            lb, ub = 0.0, math.inf
        head = re.match(r"([A-Za-z]+)", nm).group(1)
        idx = tuple(int(x) for x in re.findall(r"_(\d+)", nm))
        variables.append(Var(nm, kind, lb, ub, head, idx))
    name_to_i = {v.name: i for i, v in enumerate(variables)}
    constraints = [
        Constraint(name, tuple((name_to_i[v], c) for v, c in terms), sense, rhs)
        for name, terms, sense, rhs in parsed_rows
    ]
    return MilpModel(variables=variables, constraints=constraints, objective=objective)


def models_equal(a: MilpModel, b: MilpModel, tol: float = 1e-9) -> bool:
    """Structural equality: same variables (any order), bounds, kinds, rows
    and objective."""
    if a.objective != b.objective or len(a.variables) != len(b.variables):
        return False
    for va, vb in zip(
        sorted(a.variables, key=lambda v: v.name), sorted(b.variables, key=lambda v: v.name)
    ):
        if (va.name, va.kind) != (vb.name, vb.kind):
            return False
        if abs(va.lb - vb.lb) > tol:
            return False
        if not (math.isinf(va.ub) and math.isinf(vb.ub)) and abs(va.ub - vb.ub) > tol:
            return False
    if len(a.constraints) != len(b.constraints):
        return False
    for ca, cb in zip(a.constraints, b.constraints):
        if (ca.name, ca.sense) != (cb.name, cb.sense) or abs(ca.rhs - cb.rhs) > tol:
            return False
        ta = sorted((a.variables[i].name, c) for i, c in ca.terms)
        tb = sorted((b.variables[i].name, c) for i, c in cb.terms)
        if len(ta) != len(tb):
            return False
        for (na, va_), (nb, vb_) in zip(ta, tb):
            if na != nb or abs(va_ - vb_) > tol:
                return False
    return True


# -- solutions --------------------------------------------------------------------


def parse_solution(text: str) -> dict[str, float]:
    """Whitespace-separated `name value` lines; # starts a comment."""
    out: dict[str, float] = {}
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#")[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {ln}: expected 'name value', got {raw!r}")
        val = float(parts[1])
        if math.isnan(val):
            raise ValueError(f"line {ln}: NaN value for variable {parts[0]}")
        out[parts[0]] = val
    return out


def import_solution(m: MilpModel, sol: dict[str, float]) -> Plan:
    """Rebuild a Plan from solver output on a built model.

    Binaries must all be present and within 1e-4 of 0/1; missing continuous
    values default to zero.
    """
    meta = m.meta
    if not meta:
        raise ValueError("model carries no scenario metadata; rebuild it with build_milp")
    D, K, L = meta["uavs"], meta["epochs"], meta["locations"]
    P, Z = meta["payloads"], meta["zones"]
    service = meta["service_missions"]
    M = len(meta["missions"])

    def rounded_binary(name: str) -> int:
        if name not in sol:
            raise KeyError(f"missing variable: {name}")
        val = sol[name]
        if min(abs(val), abs(val - 1.0)) > BINARY_ROUND_TOL:
            raise ValueError(f"binary {name} = {val!r} is farther than {BINARY_ROUND_TOL} from 0/1")
        return int(round(val))

    locations = np.zeros((D, K), dtype=int)
    for d in range(D):
        for k in range(K):
            ones = [l for l in range(L) if rounded_binary(_name("lam", (d, k, l)))]
            if len(ones) != 1:
                raise ValueError(f"UAV {d} epoch {k}: expected exactly one location, got {ones}")
            locations[d, k] = ones[0]
    payloads = np.zeros((D, K, P), dtype=bool)
    for d in range(D):
        for k in range(K):
            for p in range(P):
                payloads[d, k, p] = bool(rounded_binary(_name("om", (d, k, p))))
    mission_alloc = np.zeros((D, K, M, Z))
    for d in range(D):
        for k in range(K):
            for mm in service:
                for z in range(Z):
                    mission_alloc[d, k, mm, z] = sol.get(_name("mu", (d, k, mm, z)), 0.0)
    relay_frac = np.zeros((D, K))
    transfers = np.zeros((D, D, K))
    sink_transfers = np.zeros((D, K))
    if meta["relay_index"] is not None:
        for d in range(D):
            for k in range(K):
                relay_frac[d, k] = sol.get(_name("rho", (d, k)), 0.0)
                sink_transfers[d, k] = sol.get(_name("tausink", (d, k)), 0.0)
        for d1 in range(D):
            for d2 in range(D):
                if d1 == d2:
                    continue
                for k in range(K):
                    transfers[d1, d2, k] = sol.get(_name("tau", (d1, d2, k)), 0.0)
    return Plan(locations, payloads, mission_alloc, relay_frac, transfers, sink_transfers)


def solution_to_text(sol: dict[str, float]) -> str:
    return "\n".join(f"{k} {v!r}" for k, v in sol.items()) + "\n"
