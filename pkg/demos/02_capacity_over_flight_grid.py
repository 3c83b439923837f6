"""Capacities from street-level users to every allowed flight-grid point.

Builds the urban scenario, drops users on the streets, and prints the best
and worst candidate hover positions by worst-user capacity. The capacity
matrix is the only input the placement solver needs.
"""

import numpy as np

from absplace import (
    ChannelParams,
    ScenarioParams,
    build_capacity_matrix,
    build_urban,
    noise_power_from_dbm,
    sample_users,
    write_capacity_csv,
)

channel = ChannelParams.from_frequency(
    2.4e9, bandwidth=20e6, tx_power=0.1, noise_power=noise_power_from_dbm(-96), min_rate=5e6
)
# strip-aligned loss grid: 17 x 17 voxels match the 9-street layout exactly
params = ScenarioParams(
    slf_dims=(17, 17, 4), building_height=45.0, flight_dims=(5, 4, 2), num_users=4
)
scenario = build_urban(params, channel)
users = sample_users(scenario, rng=2024)

print(f"{len(scenario.buildings)} buildings, {len(scenario.flight_points)} allowed flight points")
print("users:")
for u in users:
    print(f"  ({u.x:7.1f}, {u.y:7.1f}, {u.z:4.1f})")

cm = build_capacity_matrix(channel, users, scenario.flight_points, scenario.slf)
worst_user = cm.values.min(axis=0)  # per candidate: capacity of its weakest user
order = np.argsort(-worst_user)

print("\nbest candidates by weakest-user capacity:")
for g in order[:5]:
    p = cm.candidates[g]
    print(f"  g={g:3d} at ({p.x:6.1f}, {p.y:6.1f}, {p.z:6.1f})  min {worst_user[g] / 1e6:7.2f} Mb/s")
print("worst candidates:")
for g in order[-3:]:
    p = cm.candidates[g]
    print(f"  g={g:3d} at ({p.x:6.1f}, {p.y:6.1f}, {p.z:6.1f})  min {worst_user[g] / 1e6:7.2f} Mb/s")

write_capacity_csv(cm, "capacity_matrix.csv")
print("\nfull matrix written to capacity_matrix.csv (row per user, column per candidate)")
