"""Build, inspect and round-trip a synthetic scenario.

Scenarios are deterministic functions of (seed, dims): forty locations in a
square with ~2 km nearest-neighbor spacing, a corner depot, fifty zones each
wired to a couple of serving locations, and twenty deliveries whose windows
and targets are guaranteed reachable on one battery charge.
"""

from uavplan import generate_preset, load_scenario, max_range, serialize_scenario, validate

scenario = generate_preset("sf-large", seed=1)
print(f"locations: {scenario.num_locations}  zones: {scenario.num_zones}")
print(f"fleet: {scenario.num_uavs} UAVs, step <= {scenario.uav.max_step_km:.2f} km/epoch")
print(f"deliveries: {len(scenario.deliverable_ids)}  epochs: {scenario.epochs}")
print(f"issues: {validate(scenario)}")

print(
    "full-load range:",
    round(max_range(scenario.uav, scenario.e_per_km_kg), 3),
    "km on one charge",
)

text = serialize_scenario(scenario)
again = load_scenario(text)
print("serialize -> load is the identity:", serialize_scenario(again) == text)

for p in scenario.payloads[:6]:
    tag = f"deliver to {p.target} in {p.window}" if p.deliverable else "equipment"
    print(f"  payload {p.id} {p.name!r} {p.weight_kg} kg: {tag}")
