from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polylabel.errors import PreconditionError, SearchExhausted, UnsupportedDegree
from polylabel.families import builtin
from polylabel.wallpair import (
    bareiss_det,
    certify,
    find_spanning_seed,
    find_wall_pair,
    inverse,
    is_general_wall_pair,
    make_seed,
    rank,
    seed_from_json,
)

DISKS = builtin("DISKS")
UNIT = builtin("UNIT_DISKS")


def names(fam, w):
    return tuple(fam.labels[i] for i in w.flip)


def test_general_wall_pair_examples():
    p1 = builtin("POSET_DIM:1")
    w = is_general_wall_pair(p1, (0,), (0,))
    assert w.s == 0 and names(p1, w) == ("≺", "≻")
    w = is_general_wall_pair(DISKS, (0, 0, 1), (2, 0, 1))
    assert w.s == 0 and w.grad_b == (4, 0, -4) and names(DISKS, w) == ("non-edge", "edge")
    assert is_general_wall_pair(DISKS, (0, 0, 1), (5, 0, 1)) is None


def test_special_pairs_rejected():
    # two predicates vanish at once
    p2 = builtin("POSET_DIM:2")
    assert is_general_wall_pair(p2, (0, 0), (0, 0)) is None
    # the vanishing predicate has no effect on the label
    segs = builtin("SEGMENTS")
    assert is_general_wall_pair(segs, (0, 0, 0, 1), (0, 5, 0, 1)) is None


def test_bareiss():
    assert bareiss_det([[2, 0], [0, 3]]) == 6
    assert bareiss_det([[0, 1], [1, 0]]) == -1
    assert bareiss_det([[1, 2], [2, 4]]) == 0
    assert bareiss_det([[Fraction(1, 2), 1], [1, 4]]) == 1
    assert rank([[1, 2], [2, 4], [0, 1]]) == 2
    M = [[2, 1, 0], [1, 3, 1], [0, 1, 4]]
    inv = inverse(M)
    prod = [[sum(M[i][k] * inv[k][j] for k in range(3)) for j in range(3)] for i in range(3)]
    assert prod == [[int(i == j) for j in range(3)] for i in range(3)]


matrices = st.integers(1, 4).flatmap(
    lambda n: st.lists(st.lists(st.integers(-5, 5), min_size=n, max_size=n), min_size=n, max_size=n)
)


@given(matrices)
@settings(max_examples=100, deadline=None)
def test_bareiss_matches_cofactor_expansion(M):
    def cof(A):
        if len(A) == 1:
            return A[0][0]
        return sum((-1) ** j * A[0][j] * cof([r[:j] + r[j + 1:] for r in A[1:]]) for j in range(len(A)))

    assert bareiss_det(M) == cof(M)
    assert (rank(M) == len(M)) == (cof(M) != 0)


def test_spanning_seed_examples():
    p2 = builtin("POSET_DIM:2")
    seed = find_spanning_seed(p2)
    assert seed.a_star == (0, 0)
    assert [p.b for p in seed.pairs] == [(0, 7), (7, 0)]
    assert [p.s for p in seed.pairs] == [0, 1]
    assert seed.grad_matrix == ((-1, 0), (0, -1)) and seed.det == 1

    seed = make_seed(UNIT, (0, 0), [(2, 0), (0, 2)])
    assert seed.grad_matrix == ((-4, 0), (0, -4))

    seed = make_seed(DISKS, (0, 0, 1), [(2, 0, 1), (0, 2, 1), (3, 4, 4)])
    assert seed.grad_matrix == ((-4, 0, -4), (0, -4, -4), (-6, -8, -10)) and seed.det == 64


def test_make_seed_rejections():
    # (0, 0, 3) overlaps the unit disk at the origin rather than touching it
    with pytest.raises(PreconditionError):
        make_seed(DISKS, (0, 0, 1), [(2, 0, 1), (0, 2, 1), (0, 0, 3)])
    # dependent gradients
    with pytest.raises(PreconditionError):
        make_seed(UNIT, (0, 0), [(2, 0), (2, 0)])
    with pytest.raises(PreconditionError):
        make_seed(UNIT, (0, 0), [(2, 0)])


def test_seed_json_round_trip():
    seed = make_seed(DISKS, (0, 0, 1), [(2, 0, 1), (0, 2, 1), (3, 4, 4)])
    again = seed_from_json(DISKS, seed.to_json(DISKS))
    assert again == seed and certify(DISKS, again)
    bad = seed.to_json()
    bad["pairs"][0]["b"] = ["3/1", "0/1", "1/1"]
    with pytest.raises(PreconditionError):
        seed_from_json(DISKS, bad)
    with pytest.raises(PreconditionError):
        seed_from_json(DISKS, {"pairs": []})


@pytest.mark.parametrize("name", ["DISKS", "UNIT_DISKS", "INTERVALS", "BOXES:2", "CIRCLE_ORDERS", "BALLS:3"])
def test_find_wall_pair_certifies(name):
    fam = builtin(name)
    w = find_wall_pair(fam, seed=2)
    assert is_general_wall_pair(fam, w.a, w.b) == w


def test_find_wall_pair_poset_shortcut():
    fam = builtin("POSET_DIM:3")
    for s in range(3):
        w = find_wall_pair(fam, s=s)
        assert w.a == (0, 0, 0) and w.s == s


def test_find_wall_pair_worker_independent():
    assert find_wall_pair(DISKS, seed=9, workers=1) == find_wall_pair(DISKS, seed=9, workers=2)


@pytest.mark.parametrize("name,seed", [("DISKS", 3), ("UNIT_DISKS", 3), ("INTERVALS", 3), ("BOXES:2", 3),
                                       ("CIRCLE_ORDERS", 3), ("SEGMENTS", 1)])
def test_find_spanning_seed_certifies(name, seed):
    fam = builtin(name)
    sd = find_spanning_seed(fam, seed=seed)
    assert sd.det != 0 and certify(fam, sd)
    assert all(is_general_wall_pair(fam, sd.a_star, p.b) == p for p in sd.pairs)


def test_linking_degree_unsupported():
    with pytest.raises(UnsupportedDegree):
        find_wall_pair(builtin("CIRCLE_LINKS"), seed=0)


def test_budget_exhaustion_and_validation():
    with pytest.raises(SearchExhausted):
        find_wall_pair(UNIT, seed=0, box=[(0, Fraction(1, 4))] * 2, budget=8)
    with pytest.raises(PreconditionError):
        find_wall_pair(UNIT, budget=0)
