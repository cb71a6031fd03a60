"""Deterministic synthetic instance generator.

Layouts follow the reference setting: locations uniform in a square sized for a
~2 km mean nearest-neighbor spacing, a single corner depot, zones reachable
from about two locations each, and delivery windows of 5 epochs (blood packs)
or 10 epochs (medicine).  Every generated delivery is guaranteed to admit a
dedicated depot round trip within its window and battery budget at full
equipment, so instances are never trivially infeasible; layouts that cannot
offer enough such targets are redrawn from the same seeded stream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .paths import all_pairs_shortest, mst_max_edge, reconstruct
from .scenario import (
    Location,
    Mission,
    PayloadItem,
    Scenario,
    UavSpec,
    Zone,
    make_scenario,
    validate,
)


@dataclass(frozen=True)
class Dims:
    locations: int
    zones: int
    uavs: int
    deliveries: int
    epochs: int


PRESETS: dict[str, dict] = {
    # small-scale setting used for comparisons against the exact optimizer
    "sf-small": {
        "dims": Dims(locations=6, zones=4, uavs=4, deliveries=2, epochs=10),
        "horizon": 5,
        "pack_weights": (0.5, 0.3),
    },
    # full-size setting: 40 locations, 50 zones, 20 deliveries, 20 epochs
    "sf-large": {
        "dims": Dims(locations=40, zones=50, uavs=8, deliveries=20, epochs=20),
        "horizon": 10,
    },
}


class GenerationError(ValueError):
    pass


def _as_dims(dims) -> Dims:
    if isinstance(dims, Dims):
        return dims
    if isinstance(dims, dict):
        return Dims(
            locations=int(dims["locations"]),
            zones=int(dims["zones"]),
            uavs=int(dims["uavs"]),
            deliveries=int(dims["deliveries"]),
            epochs=int(dims["epochs"]),
        )
    raise GenerationError(f"unsupported dims spec: {dims!r}")


def generate_synthetic(
    seed: int,
    dims,
    *,
    spacing_km: float = 2.0,
    horizon: int | None = None,
    empty_weight_kg: float = 4.0,
    payload_capacity_kg: float = 2.5,
    battery_capacity_wh: float = 200.0,
    max_step_km: float | None = None,
    e_per_km_kg: float = 3.125,
    hover_km_equiv: float = 0.1,
    epoch_minutes: float = 10.0,
    pack_weights: tuple[float, float] = (0.25, 0.2),
    pack_windows: tuple[int, int] = (5, 10),
    equipment_weight_kg: float = 1.0,
    coverage_mb_per_work: float = 50.0,
    monitoring_mb_per_work: float = 10.0,
    demand_scale: float = 1.0,
    monitored_fraction: float = 1.0,
    include_monitoring: bool = True,
    unique_targets: bool = False,
    battery_safety: float = 0.9,
    max_attempts: int = 500,
) -> Scenario:
    """Deterministic scenario synthesis; identical (seed, dims, params) give
    byte-identical scenarios on re-serialization."""
    d = _as_dims(dims)
    if d.locations < 1 or d.uavs < 1 or d.epochs < 1:
        raise GenerationError("locations, uavs and epochs must be at least 1")
    if d.zones < 0 or d.deliveries < 0:
        raise GenerationError("zones and deliveries must be nonnegative")
    if horizon is None:
        horizon = max(1, d.epochs // 2)

    rng = np.random.default_rng(seed)
    include_missions = d.zones > 0
    n_equipment = (2 if include_monitoring else 1) if include_missions else 0
    equip_w = n_equipment * equipment_weight_kg
    heaviest_pack = max(pack_weights) if d.deliveries else 0.0
    if equip_w + heaviest_pack > payload_capacity_kg:
        raise GenerationError("equipment plus one pack exceeds payload capacity")

    needed_targets = 1 if d.deliveries else 0
    if d.locations > 1 and d.deliveries:
        # ask for spread-out targets only when the map can offer them
        needed_targets = min(3, max(1, (d.locations - 1) // 5))
    if unique_targets:
        needed_targets = max(needed_targets, d.deliveries)
        if d.deliveries > d.locations - 1:
            raise GenerationError("more deliveries than non-depot locations with unique targets")

    side = 2.0 * spacing_km * np.sqrt(d.locations)
    for _ in range(max_attempts):
        coords = rng.uniform(0.0, side, size=(d.locations, 2))
        coords[0] = (0.0, 0.0)  # depot anchors a corner
        diff = coords[:, None, :] - coords[None, :, :]
        dist = np.sqrt((diff**2).sum(axis=2))
        vmax = max_step_km
        if vmax is None:
            vmax = max(2.5, mst_max_edge(dist) * 1.05)
        path_km, next_hop = all_pairs_shortest(dist, vmax)

        gross = empty_weight_kg + equip_w + heaviest_pack
        eligible = []
        for l in range(1, d.locations):
            if not np.isfinite(path_km[0, l]):
                continue
            hops = len(reconstruct(next_hop, 0, l)) - 1
            if 2 * hops > d.epochs - 1:
                continue  # no epoch left to go out and return
            if 2.0 * path_km[0, l] * e_per_km_kg * gross > battery_safety * battery_capacity_wh:
                continue
            eligible.append((l, hops))
        if d.deliveries and len(eligible) < needed_targets:
            continue
        break
    else:
        raise GenerationError(
            f"could not draw a layout with {needed_targets} reachable delivery targets "
            f"in {max_attempts} attempts; dims are inconsistent with the UAV range"
        )

    locations = [
        Location(id=i, x=float(coords[i, 0]), y=float(coords[i, 1]), is_depot=(i == 0))
        for i in range(d.locations)
    ]

    payloads: list[PayloadItem] = []
    missions: list[Mission] = []
    if include_missions:
        payloads.append(PayloadItem(id=0, weight_kg=equipment_weight_kg, name="radio"))
        missions = [Mission(id=0, name="coverage", requires=(0,), mb_per_work=coverage_mb_per_work)]
        if include_monitoring:
            payloads.append(PayloadItem(id=1, weight_kg=equipment_weight_kg, name="camera"))
            missions.append(
                Mission(id=1, name="monitoring", requires=(1,), mb_per_work=monitoring_mb_per_work)
            )
        missions.append(
            Mission(id=len(missions), name="relay", requires=(0,), mb_per_work=0.0)
        )

    hop_count = {l: h for l, h in eligible}
    target_pool = [l for l, _ in eligible]
    for i in range(d.deliveries):
        kind = i % 2  # alternate blood / medicine
        weight = pack_weights[kind]
        win_len = pack_windows[kind]
        if unique_targets:
            pick = int(rng.integers(len(target_pool)))
            target = target_pool.pop(pick)
        else:
            target = int(target_pool[int(rng.integers(len(target_pool)))])
        hops = hop_count[target]
        lo, hi = hops, d.epochs - 1 - hops
        k_star = int(rng.integers(lo, hi + 1))
        a = max(0, k_star - int(rng.integers(0, win_len)))
        b = min(d.epochs - 1, a + win_len - 1)
        payloads.append(
            PayloadItem(
                id=len(payloads),
                weight_kg=weight,
                name=("blood-%d" % i) if kind == 0 else ("medicine-%d" % i),
                deliverable=True,
                target=target,
                window=(a, b),
            )
        )

    zones: list[Zone] = []
    demand_entries: list[tuple] = []
    if include_missions:
        k_lo = min(2, d.epochs - 1)
        k_hi = max(k_lo, d.epochs - 2)
        monitored = rng.random(d.zones) < monitored_fraction
        for z in range(d.zones):
            n_wire = int(rng.integers(1, 4))  # one to three serving locations
            wired = rng.choice(d.locations, size=min(n_wire, d.locations), replace=False)
            served: dict[int, dict[str, float]] = {}
            for loc in sorted(int(w) for w in wired):
                qmap = {"coverage": float(np.round(rng.uniform(0.5, 1.5), 6))}
                mon_q = float(np.round(rng.uniform(0.5, 1.5), 6))
                if include_monitoring:
                    qmap["monitoring"] = mon_q
                served[loc] = qmap
            zones.append(Zone(id=z, served_from=served))
            base = float(rng.uniform(0.3, 1.0)) * demand_scale
            for k in range(k_lo, k_hi + 1):
                cov = float(np.round(base * rng.uniform(0.8, 1.2), 6))
                demand_entries.append((k, "coverage", z, cov))
                if include_monitoring and monitored[z]:
                    demand_entries.append((k, "monitoring", z, float(np.round(demand_scale, 6))))

    s = make_scenario(
        locations=locations,
        zones=zones,
        uav=UavSpec(
            empty_weight_kg=empty_weight_kg,
            payload_capacity_kg=payload_capacity_kg,
            battery_capacity_wh=battery_capacity_wh,
            max_step_km=float(vmax),
            count=d.uavs,
        ),
        payloads=payloads,
        missions=missions,
        epochs=d.epochs,
        horizon=horizon,
        demand_entries=demand_entries,
        e_per_km_kg=e_per_km_kg,
        hover_km_equiv=hover_km_equiv,
        epoch_minutes=epoch_minutes,
    )
    issues = validate(s)
    if issues:  # generator bug if this ever fires
        raise GenerationError("generated scenario failed validation: " + "; ".join(map(str, issues)))
    return s


def generate_preset(name: str, seed: int, uavs: int | None = None) -> Scenario:
    """Generate one of the named reference scenarios."""
    if name not in PRESETS:
        raise GenerationError(f"unknown preset {name!r}; available: {sorted(PRESETS)}")
    cfg = dict(PRESETS[name])
    dims: Dims = cfg.pop("dims")
    if uavs is not None:
        dims = Dims(dims.locations, dims.zones, uavs, dims.deliveries, dims.epochs)
    return generate_synthetic(seed, dims, **cfg)
