from fractions import Fraction

import pytest

from polylabel.construct import (
    LabelingFactory,
    build_grid,
    build_verified_grid,
    generate_labelings,
    grid_parameters,
    norm_bound,
    raw_tuple_point,
    run_factory,
    sqrt_majorant,
    tuple_point,
    tuple_recovery,
    verify_grid,
)
from polylabel.counting import canonical_bytes
from polylabel.errors import GridInvalid, PreconditionError, Undecodable
from polylabel.families import builtin
from polylabel.framework import label_configuration, strong_check
from polylabel.poly import Sign
from polylabel.wallpair import find_spanning_seed, make_seed

P1 = builtin("POSET_DIM:1")
P2 = builtin("POSET_DIM:2")
UNIT = builtin("UNIT_DISKS")
DISKS = builtin("DISKS")
H = Fraction(1, 2)


@pytest.fixture(scope="module")
def p1_seed():
    return find_spanning_seed(P1)


@pytest.fixture(scope="module")
def unit_seed():
    return make_seed(UNIT, (0, 0), [(2, 0), (0, 2)])


def dot(u, v):
    return sum(x * y for x, y in zip(u, v))


def test_norm_helpers():
    for d in (1, 2, 3, 7, 16):
        r = sqrt_majorant(d)
        assert r * r >= d and (r - Fraction(1, 1024)) ** 2 <= d
    assert norm_bound((3, -4)) >= 5


def test_poset1_parameters(p1_seed):
    p = grid_parameters(P1, p1_seed, 2)
    assert p.z == ((-1,),) and p.v == ((1,),) and p.C == 0 and p.eps == H
    grid = build_grid(P1, p1_seed, 2)
    assert grid.b_pert == (((Fraction(-1, 4),), (Fraction(-3, 4),)),)


def test_unit_disk_parameters(unit_seed):
    p = grid_parameters(UNIT, unit_seed, 2)
    assert p.z == ((Fraction(-1, 4), 0), (0, Fraction(-1, 4)))
    assert p.v[0] == (Fraction(1, 4), 0)
    assert all(p.inequalities(2).values())


@pytest.mark.parametrize("fam,seed", [
    (DISKS, make_seed(DISKS, (0, 0, 1), [(2, 0, 1), (0, 2, 1), (3, 4, 4)])),
    (P2, find_spanning_seed(P2)),
    (builtin("INTERVALS"), find_spanning_seed(builtin("INTERVALS"), seed=3)),
])
def test_biorthogonality_exact(fam, seed):
    p = grid_parameters(fam, seed, 3)
    for i, wi in enumerate(seed.pairs):
        assert dot(p.v[i], wi.grad_b) == 1
        for j, wj in enumerate(seed.pairs):
            assert dot(p.z[i], wj.grad_a) == (1 if i == j else 0)
    assert all(p.inequalities(3).values())
    assert not p.inequalities(3).get("taylor") or p.eps <= H


def test_eps_shrinks_with_m(unit_seed):
    e2 = grid_parameters(UNIT, unit_seed, 2).eps
    e6 = grid_parameters(UNIT, unit_seed, 6).eps
    assert e6 * 8 <= e2


def test_tuple_point_examples(p1_seed):
    grid = build_grid(P1, p1_seed, 2)
    assert tuple_point(grid, (1,)) == (-H,)
    assert tuple_point(grid, (2,)) == (Fraction(-1),)
    for bad in [(0,), (3,), (1, 1)]:
        with pytest.raises(PreconditionError):
            tuple_point(grid, bad)


def test_recovery_examples(p1_seed):
    grid = build_grid(P1, p1_seed, 2)
    assert tuple_recovery(P1, (-H,), grid) == (1,)
    # a = b^1 makes the predicate vanish
    with pytest.raises(Undecodable):
        tuple_recovery(P1, (Fraction(-1, 4),), grid)


def test_verify_grid_examples(unit_seed):
    report = verify_grid(build_grid(P2, find_spanning_seed(P2), 3))
    assert report.passed and report.checked == 9
    report = verify_grid(build_grid(UNIT, unit_seed, 2))
    assert report.passed and report.checked == 4


def test_oversized_eps_fails(unit_seed):
    grid = build_grid(UNIT, unit_seed, 8, eps=Fraction(1))
    report = verify_grid(grid)
    assert not report.passed
    assert {f["condition"] for f in report.failures} <= {"nonzero", "positive", "negative", "preserved", "domain"}
    t = tuple(report.failures[0]["tuple"])
    with pytest.raises(GridInvalid) as exc:
        tuple_point(grid, t)
    assert exc.value.condition == report.failures[0]["condition"]


def test_sampled_mode_and_cap(unit_seed):
    grid = build_grid(UNIT, unit_seed, 3)
    report = verify_grid(grid, mode="sampled", samples=20, seed=4)
    assert report.mode == "sampled" and report.checked == 20 and report.passed
    assert verify_grid(grid, cap=4).mode == "sampled"
    with pytest.raises(PreconditionError):
        verify_grid(grid, mode="bogus")


def test_verified_grid_halves(unit_seed):
    grid, report = build_verified_grid(UNIT, unit_seed, 3)
    assert report.passed and grid.params.eps <= grid_parameters(UNIT, unit_seed, 3).eps


def test_grid_point_leaving_domain():
    # a very short partner interval shrinks past zero length under a large step
    fam = builtin("INTERVALS")
    seed = make_seed(fam, (0, 1), [(Fraction(-1, 1000), 0), (1, 2)])
    with pytest.raises(GridInvalid) as exc:
        build_grid(fam, seed, 2, eps=Fraction(1))
    assert exc.value.condition == "domain"


def test_raw_point_is_linear(unit_seed):
    grid = build_grid(UNIT, unit_seed, 3)
    a11, a21, a12 = (raw_tuple_point(grid, t) for t in [(1, 1), (2, 1), (1, 2)])
    eps, z = grid.params.eps, grid.params.z
    assert tuple(x - y for x, y in zip(a21, a11)) == tuple(eps * c for c in z[0])
    assert tuple(x - y for x, y in zip(a12, a11)) == tuple(eps * c for c in z[1])


def test_factory_small(p1_seed):
    res = run_factory(P1, p1_seed, 6, 2, keep=True, check_labels=True)
    assert res.count == res.formula_value == 16 and res.all_distinct
    for seq, L, cfg in res.labelings:
        assert strong_check(P1, cfg)
        assert label_configuration(P1, cfg) == L


def test_factory_decode_uses_cross_edges(unit_seed):
    grid, _ = build_verified_grid(UNIT, unit_seed, 2)
    factory = LabelingFactory(grid, 5)
    seen = set()
    for seq in factory.sequences():
        L = factory.labeling(seq)
        assert factory.decode(L) == seq
        cfg = factory.configuration(seq)
        assert label_configuration(UNIT, cfg) == L
        assert all(Sign.ZERO not in UNIT.signs(cfg.points[i], cfg.points[j])
                   for i in range(5) for j in range(i + 1, 5))
        seen.add(canonical_bytes(L))
    assert len(seen) == 2 ** (2 * 1)


def test_factory_precondition(p1_seed):
    with pytest.raises(PreconditionError):
        list(generate_labelings(P1, p1_seed, 3, 3))
    with pytest.raises(PreconditionError):
        run_factory(P1, p1_seed, 4, 4)


def test_factory_manifest(p1_seed):
    m = run_factory(P1, p1_seed, 4, 1).manifest()
    assert m == {"n": 4, "m": 1, "d": 1, "count": 1, "formula_value": 1,
                 "all_distinct": True, "all_strong": True, "all_decoded": True}
