"""A tour of the built-in encodings.

Each family is a list of polynomials in two points plus a sign table.  The
script labels a few hand-picked configurations and cross-checks random pairs
against direct geometry.
"""

from polylabel.families import builtin, linking_predicate, oracle_relation, random_point
from polylabel.framework import Configuration, label_configuration, strong_check
from polylabel.poly import Sign
from polylabel.sampling import trial_rng


def show(fam, points):
    cfg = Configuration(points)
    L = label_configuration(fam, cfg)
    print(f"{fam.name}: strong={strong_check(fam, cfg)}")
    for (i, j), v in L.as_dict().items():
        print(f"  {i + 1}-{j + 1}: {fam.labels[v]}")


show(builtin("DISKS"), [(0, 0, 1), (1, 0, 1), (5, 0, 1), (2, 0, 1)])
show(builtin("SEGMENTS"), [(1, 0, 0, 2), (1, 0, 1, 3), (-1, 0, -1, 1), (1, 1, 0, 2)])
show(builtin("CIRCLE_ORDERS"), [(0, 0, 1), (0, 0, 3), (5, 0, 1)])

print("\nlinking kernel")
for c1, c2 in [((0, 0, 0, 0, 0, 1), (1, 0, 0, 0, 1, 1)), ((0, 0, 0, 0, 0, 1), (100, 0, 0, 0, 1, 1))]:
    dec = linking_predicate(c1, c2)
    print(f"  {c1} / {c2}: {dec.label}, signs {''.join(s.char for s in dec.signs)}")

print("\nagreement with direct geometry on 2000 random nonzero pairs")
for name in ["DISKS", "SEGMENTS", "BOXES:2", "CIRCLE_ORDERS", "POSET_DIM:3"]:
    fam = builtin(name)
    agree = total = 0
    for t in range(2000):
        rng = trial_rng(2024, t)
        a, b = random_point(fam, rng, bits=3), random_point(fam, rng, bits=3)
        signs = fam.signs(a, b)
        if Sign.ZERO in signs:
            continue
        total += 1
        agree += fam.labels[fam.phi(signs)] == oracle_relation(fam, a, b)
    print(f"  {fam.name:14s} {agree}/{total}")
