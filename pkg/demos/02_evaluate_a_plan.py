"""Hand-build a plan and put it through the evaluator.

One UAV, a depot and a target a kilometer out: fly over with the pack at
epoch 1 (inside the delivery window), come home at epoch 2. The evaluator
checks all thirteen constraint families and scores satisfaction.
"""

import numpy as np

from uavplan import (
    Location,
    Plan,
    PayloadItem,
    UavSpec,
    battery_trace,
    check_feasibility,
    make_scenario,
    satisfaction,
)

scenario = make_scenario(
    locations=[Location(0, 0.0, 0.0, True), Location(1, 1.0, 0.0, False)],
    zones=[],
    uav=UavSpec(4.0, 2.5, 200.0, 2.0, 1),
    payloads=[PayloadItem(0, 0.5, "blood", True, 1, (1, 1))],
    missions=[],
    epochs=3,
    horizon=1,
)

plan = Plan.idle(scenario)
plan.locations[0, 1] = 1          # out at epoch 1, back at 2
plan.payloads[0, 0, 0] = True     # load at the depot
plan.payloads[0, 1, 0] = True     # carry through the drop epoch

print("battery trace:", np.round(battery_trace(scenario, plan), 2)[0])
report = check_feasibility(scenario, plan)
print("feasible:", report.ok)

plan.payloads[0, :, 0] = False    # forget the pack entirely: delivery fails
broken = check_feasibility(scenario, plan)
print("without the pack:", sorted(broken.tags))
plan.payloads[0, 0, 0] = True
plan.payloads[0, 1, 0] = True

rep = satisfaction(scenario, plan)
print("objective with no zone demand:", rep.objective)
