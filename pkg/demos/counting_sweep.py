"""Empirical counts against exact enumeration and the upper bound."""

from polylabel.counting import brute_force_count_1d, sample_count
from polylabel.families import builtin

for name, n, strong in [("POSET_DIM:1", 3, False), ("POSET_DIM:1", 3, True), ("INTERVALS", 3, False)]:
    fam = builtin(name)
    exact = brute_force_count_1d(fam, n, strong_only=strong)
    r = sample_count(fam, n, 3000, seed=1, strong_only=strong, bits=0 if not strong else 10)
    print(f"{fam.name:12s} n={n} strong={strong!s:5s} exact={exact:3d} sampled={r.distinct_count:3d} "
          f"saturated={r.saturated}")

print()
for name in ["DISKS", "SEGMENTS", "CIRCLE_ORDERS"]:
    fam = builtin(name)
    for n in (3, 4, 5):
        r = sample_count(fam, n, 3000, seed=7)
        print(f"{fam.name:14s} n={n} distinct={r.distinct_count:6d} saturated={r.saturated!s:5s} "
              f"bound={r.warren_value:.3e} (proven={r.warren_applicable})")
