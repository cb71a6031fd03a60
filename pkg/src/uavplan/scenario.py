"""Problem instances: fleet, topology, payloads, missions, demand, link capacities.

A Scenario is immutable once built; every solver and the evaluator read the
same dense arrays.  Use :func:`make_scenario` to derive the distance/energy
matrices and the dense quality tensor from the raw parts, and
:func:`load_scenario` / :func:`serialize_scenario` for the JSON file format
(documented in the README).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

RELAY = "relay"


@dataclass(frozen=True)
class Location:
    id: int
    x: float
    y: float
    is_depot: bool = False


@dataclass(frozen=True)
class Zone:
    """A demand region together with the locations that can serve it.

    served_from maps a location id to a per-mission quality dict
    (mission name -> work units one UAV can perform per epoch).
    """

    id: int
    served_from: dict[int, dict[str, float]] = field(default_factory=dict)


@dataclass(frozen=True)
class UavSpec:
    empty_weight_kg: float
    payload_capacity_kg: float
    battery_capacity_wh: float
    max_step_km: float
    count: int


@dataclass(frozen=True)
class PayloadItem:
    id: int
    weight_kg: float
    name: str = ""
    deliverable: bool = False
    target: int | None = None  # delivery location
    window: tuple[int, int] | None = None  # earliest/latest delivery epoch


@dataclass(frozen=True)
class Mission:
    id: int
    name: str
    requires: tuple[int, ...]  # payload ids needed aboard
    mb_per_work: float  # data generated by one unit of work


@dataclass(frozen=True)
class Scenario:
    locations: tuple[Location, ...]
    zones: tuple[Zone, ...]
    uav: UavSpec
    payloads: tuple[PayloadItem, ...]
    missions: tuple[Mission, ...]
    epochs: int
    horizon: int
    epoch_minutes: float
    e_per_km_kg: float
    hover_km_equiv: float
    dist_km: np.ndarray  # (L, L) pairwise distances
    energy_wh_per_kg: np.ndarray  # (L, L); diagonal holds the hover cost
    quality: np.ndarray  # (L, M, Z) work units per epoch
    demand: np.ndarray  # (K, M, Z) work units needed
    link_uav_mb: np.ndarray  # (L, L) UAV-to-UAV throughput per epoch
    link_sink_mb: np.ndarray  # (L,) throughput to the ground network
    link_default_uav_mb: float = 0.0
    link_default_sink_mb: float = 0.0

    # -- derived conveniences -------------------------------------------------

    @property
    def num_locations(self) -> int:
        return len(self.locations)

    @property
    def num_zones(self) -> int:
        return len(self.zones)

    @property
    def num_payloads(self) -> int:
        return len(self.payloads)

    @property
    def num_missions(self) -> int:
        return len(self.missions)

    @property
    def num_uavs(self) -> int:
        return self.uav.count

    @property
    def depot_ids(self) -> tuple[int, ...]:
        return tuple(l.id for l in self.locations if l.is_depot)

    @property
    def relay_index(self) -> int | None:
        for m in self.missions:
            if m.name == RELAY:
                return m.id
        return None

    @property
    def service_mission_ids(self) -> tuple[int, ...]:
        """Missions that serve zone demand (everything except relay)."""
        return tuple(m.id for m in self.missions if m.name != RELAY)

    @property
    def deliverable_ids(self) -> tuple[int, ...]:
        return tuple(p.id for p in self.payloads if p.deliverable)

    @property
    def equipment_ids(self) -> tuple[int, ...]:
        """Non-deliverable payloads required by at least one mission."""
        needed = set()
        for m in self.missions:
            needed.update(m.requires)
        return tuple(p.id for p in self.payloads if not p.deliverable and p.id in needed)

    def mission_by_name(self, name: str) -> Mission | None:
        for m in self.missions:
            if m.name == name:
                return m
        return None

    def payload_weights(self) -> np.ndarray:
        return np.array([p.weight_kg for p in self.payloads], dtype=float)

    def is_depot_arr(self) -> np.ndarray:
        return np.array([l.is_depot for l in self.locations], dtype=bool)


@dataclass(frozen=True)
class ValidationIssue:
    field: str
    indices: tuple
    rule: str

    def __str__(self) -> str:
        idx = ",".join(str(i) for i in self.indices)
        return f"{self.field}[{idx}]: {self.rule}" if self.indices else f"{self.field}: {self.rule}"


class ScenarioError(ValueError):
    """Raised on malformed scenario documents; carries the issue list."""

    def __init__(self, message: str, issues: list[ValidationIssue] | None = None):
        super().__init__(message)
        self.issues = issues or []


def max_range(spec: UavSpec, e_per_km_kg: float) -> float:
    """Flight range in km on one battery charge at maximum payload."""
    if e_per_km_kg <= 0:
        raise ValueError("energy coefficient must be positive")
    gross = spec.payload_capacity_kg + spec.empty_weight_kg
    if gross <= 0 or spec.battery_capacity_wh <= 0:
        raise ValueError("UAV parameters must be positive")
    return spec.battery_capacity_wh / (e_per_km_kg * gross)


def make_scenario(
    locations,
    zones,
    uav,
    payloads,
    missions,
    epochs,
    horizon,
    demand_entries=(),
    link_uav_entries=(),
    link_sink_entries=(),
    link_default_uav_mb=50000.0,
    link_default_sink_mb=50000.0,
    e_per_km_kg=3.125,
    hover_km_equiv=0.1,
    epoch_minutes=10.0,
) -> Scenario:
    """Assemble a Scenario, deriving distances, energies and dense tensors.

    demand_entries are sparse (epoch, mission name or id, zone, value) rows;
    missing entries default to zero.  Link entries override the defaults for
    specific location pairs.
    """
    locations = tuple(locations)
    zones = tuple(zones)
    payloads = tuple(payloads)
    missions = tuple(missions)
    L, Z, M, K = len(locations), len(zones), len(missions), int(epochs)

    coords = np.array([[l.x, l.y] for l in locations], dtype=float)
    diff = coords[:, None, :] - coords[None, :, :]
    dist = np.sqrt((diff**2).sum(axis=2))
    energy = e_per_km_kg * dist
    np.fill_diagonal(energy, hover_km_equiv * e_per_km_kg)

    name_to_mid = {m.name: m.id for m in missions}
    quality = np.zeros((L, M, Z), dtype=float)
    for z in zones:
        for loc_id, qmap in z.served_from.items():
            for mname, q in qmap.items():
                if mname not in name_to_mid:
                    raise ScenarioError(f"zone {z.id} references unknown mission {mname!r}")
                quality[loc_id, name_to_mid[mname], z.id] = q

    demand = np.zeros((K, M, Z), dtype=float)
    for k, m, z, val in demand_entries:
        mid = name_to_mid[m] if isinstance(m, str) else int(m)
        demand[int(k), mid, int(z)] = float(val)

    link_uav = np.full((L, L), float(link_default_uav_mb))
    for l1, l2, mb in link_uav_entries:
        link_uav[int(l1), int(l2)] = float(mb)
        link_uav[int(l2), int(l1)] = float(mb)
    link_sink = np.full(L, float(link_default_sink_mb))
    for l, mb in link_sink_entries:
        link_sink[int(l)] = float(mb)

    for arr in (dist, energy, quality, demand, link_uav, link_sink):
        arr.setflags(write=False)

    return Scenario(
        locations=locations,
        zones=zones,
        uav=uav,
        payloads=payloads,
        missions=missions,
        epochs=K,
        horizon=int(horizon),
        epoch_minutes=float(epoch_minutes),
        e_per_km_kg=float(e_per_km_kg),
        hover_km_equiv=float(hover_km_equiv),
        dist_km=dist,
        energy_wh_per_kg=energy,
        quality=quality,
        demand=demand,
        link_uav_mb=link_uav,
        link_sink_mb=link_sink,
        link_default_uav_mb=float(link_default_uav_mb),
        link_default_sink_mb=float(link_default_sink_mb),
    )


def validate(s: Scenario) -> list[ValidationIssue]:
    """Check every structural invariant; an empty list means the instance is sound."""
    issues: list[ValidationIssue] = []
    add = lambda f, idx, rule: issues.append(ValidationIssue(f, tuple(idx), rule))

    L, Z, M, K = s.num_locations, s.num_zones, s.num_missions, s.epochs
    if L < 1:
        add("locations", (), "at least one location required")
        return issues
    for i, loc in enumerate(s.locations):
        if loc.id != i:
            add("locations", (i,), f"ids must be dense 0..{L - 1}, found {loc.id}")
    if not any(l.is_depot for l in s.locations):
        add("locations", (), "at least one depot required")

    for z_i, z in enumerate(s.zones):
        if z.id != z_i:
            add("zones", (z_i,), f"ids must be dense 0..{Z - 1}, found {z.id}")
        for loc_id in z.served_from:
            if not 0 <= loc_id < L:
                add("zones", (z.id, loc_id), "served_from references unknown location")
    if np.any(s.quality < 0):
        bad = np.argwhere(s.quality < 0)[0]
        add("quality", tuple(int(i) for i in bad), "quality must be nonnegative")

    u = s.uav
    for fname, val in (
        ("empty_weight_kg", u.empty_weight_kg),
        ("payload_capacity_kg", u.payload_capacity_kg),
        ("battery_capacity_wh", u.battery_capacity_wh),
        ("max_step_km", u.max_step_km),
        ("count", u.count),
    ):
        if val <= 0:
            add("uavs", (fname,), "must be strictly positive")

    for i, p in enumerate(s.payloads):
        if p.id != i:
            add("payloads", (i,), "ids must be dense in list order")
        if p.weight_kg < 0:
            add("payloads", (p.id,), "weight must be nonnegative")
        if p.weight_kg > u.payload_capacity_kg:
            add("payloads", (p.id,), "payload exceeds capacity")
        if p.deliverable:
            if p.target is None or p.window is None:
                add("payloads", (p.id,), "deliverable payload needs target and window")
            else:
                a, b = p.window
                if not 0 <= a <= b:
                    add("payloads", (p.id,), "window inverted")
                if b >= K:
                    add("payloads", (p.id,), f"window end {b} beyond last epoch {K - 1}")
                if not 0 <= p.target < L:
                    add("payloads", (p.id,), "target references unknown location")
        elif p.target is not None or p.window is not None:
            add("payloads", (p.id,), "non-deliverable payload must not set target/window")

    names = [m.name for m in s.missions]
    if len(set(names)) != len(names):
        add("missions", (), "mission names must be unique")
    relay = s.mission_by_name(RELAY)
    if s.service_mission_ids and relay is None:
        add("missions", (), "relay mission required when service missions exist")
    for i, m in enumerate(s.missions):
        if m.id != i:
            add("missions", (i,), "ids must be dense in list order")
        if m.mb_per_work < 0:
            add("missions", (m.id,), "data per work unit must be nonnegative")
        for pid in m.requires:
            if not 0 <= pid < s.num_payloads:
                add("missions", (m.id,), f"requires unknown payload {pid}")
    if relay is not None and not relay.requires:
        add("missions", (relay.id,), "relay must require its radio payload")

    if s.demand.shape != (K, M, Z):
        add("demand", s.demand.shape, f"shape must be ({K},{M},{Z})")
    else:
        if np.any(s.demand < 0):
            bad = np.argwhere(s.demand < 0)[0]
            add("demand", tuple(int(i) for i in bad), "demand must be nonnegative")
        if relay is not None and np.any(s.demand[:, relay.id, :] != 0):
            add("demand", (relay.id,), "relay mission carries no zone demand")

    if s.dist_km.shape != (L, L):
        add("distances", s.dist_km.shape, f"shape must be ({L},{L})")
    else:
        if np.any(np.abs(np.diag(s.dist_km)) > 0):
            add("distances", (), "self-distance must be zero")
        asym = np.argwhere(np.abs(s.dist_km - s.dist_km.T) > 1e-9)
        if asym.size:
            l1, l2 = (int(i) for i in asym[0])
            add("distances", (l1, l2), "asymmetric distance")
    if np.any(np.diag(s.energy_wh_per_kg) <= 0):
        add("energy", (), "hover cost on the diagonal must be positive")
    if np.any(s.link_uav_mb < 0) or np.any(s.link_sink_mb < 0):
        add("links", (), "capacities must be nonnegative")
    if np.any(np.abs(s.link_uav_mb - s.link_uav_mb.T) > 1e-9):
        add("links", (), "UAV-to-UAV capacity must be symmetric")

    if s.horizon < 0 or s.horizon > K:
        add("horizon", (), "horizon must lie in [0, epochs]")
    if K < 1:
        add("epochs", (), "at least one epoch required")
    return issues


# -- file format ---------------------------------------------------------------


def _payload_to_dict(p: PayloadItem) -> dict:
    d: dict = {"name": p.name, "weight_kg": p.weight_kg}
    if p.deliverable:
        d["deliver_to"] = p.target
        d["window"] = list(p.window)
    return d


def scenario_to_dict(s: Scenario) -> dict:
    """Plain-dict form of a scenario, the inverse of scenario_from_dict."""
    mission_names = [m.name for m in s.missions]
    demand_rows = []
    for k, m, z in np.argwhere(s.demand != 0):
        demand_rows.append([int(k), mission_names[int(m)], int(z), float(s.demand[k, m, z])])
    link_rows = []
    L = s.num_locations
    for l1 in range(L):
        for l2 in range(l1, L):
            if s.link_uav_mb[l1, l2] != s.link_default_uav_mb:
                link_rows.append([l1, l2, float(s.link_uav_mb[l1, l2])])
    sink_rows = [
        [l, float(s.link_sink_mb[l])]
        for l in range(L)
        if s.link_sink_mb[l] != s.link_default_sink_mb
    ]
    zones = []
    for z in s.zones:
        served = []
        for loc_id in sorted(z.served_from):
            served.append({"location": loc_id, "quality": dict(sorted(z.served_from[loc_id].items()))})
        zones.append({"served_from": served})
    return {
        "epochs": s.epochs,
        "horizon": s.horizon,
        "epoch_minutes": s.epoch_minutes,
        "energy": {"per_km_kg": s.e_per_km_kg, "hover_km_equiv": s.hover_km_equiv},
        "locations": [
            {"x": l.x, "y": l.y, "depot": l.is_depot} for l in s.locations
        ],
        "zones": zones,
        "uavs": {
            "count": s.uav.count,
            "empty_weight_kg": s.uav.empty_weight_kg,
            "payload_capacity_kg": s.uav.payload_capacity_kg,
            "battery_capacity_wh": s.uav.battery_capacity_wh,
            "max_step_km": s.uav.max_step_km,
        },
        "payloads": [_payload_to_dict(p) for p in s.payloads],
        "missions": [
            {"name": m.name, "requires": [s.payloads[i].name for i in m.requires], "mb_per_work": m.mb_per_work}
            for m in s.missions
        ],
        "demand": demand_rows,
        "links": {
            "default_uav_mb": s.link_default_uav_mb,
            "default_sink_mb": s.link_default_sink_mb,
            "uav": link_rows,
            "sink": sink_rows,
        },
    }


def scenario_from_dict(doc: dict) -> Scenario:
    """Build a Scenario from the plain-dict file form; raises ScenarioError on bad input."""

    def need(container, key, path):
        if key not in container:
            raise ScenarioError(f"{path}: missing required field {key!r}")
        return container[key]

    locations = []
    for i, ld in enumerate(need(doc, "locations", "$")):
        locations.append(
            Location(
                id=i,
                x=float(need(ld, "x", f"locations[{i}]")),
                y=float(need(ld, "y", f"locations[{i}]")),
                is_depot=bool(ld.get("depot", False)),
            )
        )

    payloads = []
    pname_to_id: dict[str, int] = {}
    for i, pd in enumerate(doc.get("payloads", [])):
        name = pd.get("name", f"payload-{i}")
        deliver_to = pd.get("deliver_to")
        window = pd.get("window")
        payloads.append(
            PayloadItem(
                id=i,
                weight_kg=float(need(pd, "weight_kg", f"payloads[{i}]")),
                name=name,
                deliverable=deliver_to is not None,
                target=None if deliver_to is None else int(deliver_to),
                window=None if window is None else (int(window[0]), int(window[1])),
            )
        )
        pname_to_id[name] = i

    missions = []
    for i, md in enumerate(doc.get("missions", [])):
        req = []
        for r in md.get("requires", []):
            if isinstance(r, str):
                if r not in pname_to_id:
                    raise ScenarioError(f"missions[{i}]: requires unknown payload {r!r}")
                req.append(pname_to_id[r])
            else:
                req.append(int(r))
        missions.append(
            Mission(
                id=i,
                name=need(md, "name", f"missions[{i}]"),
                requires=tuple(req),
                mb_per_work=float(md.get("mb_per_work", 0.0)),
            )
        )
    mission_names = {m.name for m in missions}

    zones = []
    for i, zd in enumerate(doc.get("zones", [])):
        served: dict[int, dict[str, float]] = {}
        for entry in zd.get("served_from", []):
            loc = int(need(entry, "location", f"zones[{i}].served_from"))
            qmap = {str(k): float(v) for k, v in need(entry, "quality", f"zones[{i}].served_from").items()}
            for mname in qmap:
                if mname not in mission_names:
                    raise ScenarioError(f"zones[{i}]: quality names unknown mission {mname!r}")
            served[loc] = qmap
        zones.append(Zone(id=i, served_from=served))

    ud = need(doc, "uavs", "$")
    uav = UavSpec(
        empty_weight_kg=float(need(ud, "empty_weight_kg", "uavs")),
        payload_capacity_kg=float(need(ud, "payload_capacity_kg", "uavs")),
        battery_capacity_wh=float(need(ud, "battery_capacity_wh", "uavs")),
        max_step_km=float(need(ud, "max_step_km", "uavs")),
        count=int(need(ud, "count", "uavs")),
    )

    energy = doc.get("energy", {})
    links = doc.get("links", {})
    demand_rows = doc.get("demand", [])
    for j, row in enumerate(demand_rows):
        if len(row) != 4:
            raise ScenarioError(f"demand[{j}]: expected [epoch, mission, zone, value]")

    s = make_scenario(
        locations=locations,
        zones=zones,
        uav=uav,
        payloads=payloads,
        missions=missions,
        epochs=int(need(doc, "epochs", "$")),
        horizon=int(need(doc, "horizon", "$")),
        demand_entries=demand_rows,
        link_uav_entries=links.get("uav", []),
        link_sink_entries=links.get("sink", []),
        link_default_uav_mb=float(links.get("default_uav_mb", 50000.0)),
        link_default_sink_mb=float(links.get("default_sink_mb", 50000.0)),
        e_per_km_kg=float(energy.get("per_km_kg", 3.125)),
        hover_km_equiv=float(energy.get("hover_km_equiv", 0.1)),
        epoch_minutes=float(doc.get("epoch_minutes", 10.0)),
    )
    issues = validate(s)
    if issues:
        raise ScenarioError(
            "scenario failed validation: " + "; ".join(str(i) for i in issues), issues
        )
    return s


def load_scenario(text: str) -> Scenario:
    """Parse and validate a scenario document (JSON text)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ScenarioError("top-level document must be an object")
    return scenario_from_dict(doc)


def serialize_scenario(s: Scenario) -> str:
    """Canonical JSON text; load_scenario(serialize_scenario(s)) reproduces s exactly."""
    return json.dumps(scenario_to_dict(s), indent=2) + "\n"


def scenarios_equal(a: Scenario, b: Scenario) -> bool:
    """Structural equality on every field that defines the instance."""
    return serialize_scenario(a) == serialize_scenario(b)
