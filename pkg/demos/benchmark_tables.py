"""Desk-scale reproduction of the benchmark tables: path statistics for
the four weight designs over replicated synthetic datasets.

Replicate count and sizes are kept small so the demo runs in well under a
minute; raise them to approach the full study (100 replicates up to
(160, 1600)).

Run:  python3 demos/benchmark_tables.py
"""

from slopepath import run_experiment

report = run_experiment(
    scenario=1,
    sizes=[(20, 200)],
    designs=["bh", "gauss", "oscar", "qs"],
    replicates=20,
    seed_base=42,
)
print(report.to_table())
print()

report2 = run_experiment(
    scenario=2,
    sizes=[(20, 200)],
    designs=["bh", "gauss", "oscar", "qs"],
    replicates=20,
    seed_base=42,
)
print(report2.to_table())

print("\nmachine-readable form (deterministic bytes given the config):")
print(report2.to_json()[:400] + " ...")
