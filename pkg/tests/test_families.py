from fractions import Fraction

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from polylabel.errors import PreconditionError, SamplingExhausted
from polylabel.families import (
    BUILTIN_NAMES,
    INCONCLUSIVE,
    builtin,
    export_builtin,
    gauss_link_label,
    linking_kernel,
    linking_predicate,
    oracle_relation,
    parse_builtin_id,
    random_point,
    segments_intersect,
)
from polylabel.framework import family_from_spec, pair_label
from polylabel.poly import Sign, pair_variables
from polylabel.sampling import trial_rng


def label(fam, a, b):
    return fam.labels[pair_label(fam, a, b)]


@pytest.mark.parametrize("spec,d,k", [
    ("DISKS", 3, 1), ("UNIT_DISKS", 2, 1), ("BALLS:3", 4, 1), ("UNIT_BALLS:3", 3, 1),
    ("INTERVALS", 2, 2), ("SEGMENTS", 4, 7), ("BOXES:2", 4, 4), ("CIRCLE_LINKS", 6, 4),
    ("UNIT_CIRCLE_LINKS", 5, 4), ("BALL_ORDERS:3", 4, 2), ("CIRCLE_ORDERS", 3, 2),
    ("POSET_DIM:1", 1, 1), ("POSET_DIM:3", 3, 3),
])
def test_builtin_shapes(spec, d, k):
    fam = builtin(spec)
    assert (fam.d, fam.k) == (d, k)
    assert all(not P.is_zero for P in fam.preds)


def test_builtin_ids():
    assert parse_builtin_id("BALLS(3)") == ("BALLS", 3)
    assert parse_builtin_id("balls:3") == ("BALLS", 3)
    assert builtin("BALLS", 3) is builtin("BALLS:3")
    assert builtin("POSET_DIM:2").name == "POSET_DIM(2)"
    for bad in ("RAYS", "BALLS", "DISKS:2", "POSET_DIM:0", "??"):
        with pytest.raises(PreconditionError):
            parse_builtin_id(bad)
    assert "ANGLE_ORDERS" not in BUILTIN_NAMES


def test_disks_phi():
    fam = builtin("DISKS")
    assert fam.labels[fam.phi((Sign.MINUS,))] == "edge"
    assert fam.labels[fam.phi((Sign.PLUS,))] == "non-edge"
    assert fam.labels[fam.phi((Sign.ZERO,))] == "non-edge"


def test_poset_phi():
    fam = builtin("POSET_DIM:2")
    P, M, Z = Sign.PLUS, Sign.MINUS, Sign.ZERO
    for sv in [(P, P), (P, Z), (Z, P)]:
        assert fam.labels[fam.phi(sv)] == "≺"
    for sv in [(M, M), (M, Z), (Z, M)]:
        assert fam.labels[fam.phi(sv)] == "≻"
    for sv in [(Z, Z), (P, M), (M, P)]:
        assert fam.labels[fam.phi(sv)] == "incomparable"


def test_circle_orders_labels():
    fam = builtin("CIRCLE_ORDERS")
    assert len(fam.labels) == 3 and fam.k == 2
    assert label(fam, (0, 0, 1), (0, 0, 3)) == "≺"
    assert label(fam, (0, 0, 3), (0, 0, 1)) == "≻"
    assert label(fam, (0, 0, 1), (5, 0, 1)) == "incomparable"
    # internally tangent closed disks are nested
    assert label(fam, (1, 0, 1), (0, 0, 2)) == "≺"


# -- linking ------------------------------------------------------------------------

def test_linking_examples():
    assert linking_predicate((0, 0, 0, 0, 0, 1), (1, 0, 0, 0, 1, 1)).label == "link"
    assert linking_predicate((0, 0, 0, 0, 0, 1), (100, 0, 0, 0, 1, 1)).label == "no-link"
    par = linking_predicate((0, 0, 0, 1, 2, 1), (0, 0, Fraction(1, 2), 1, 2, 3))
    assert par.label == "no-link" and par.boundary


def test_linking_rejects_bad_radius():
    with pytest.raises(PreconditionError):
        linking_predicate((0, 0, 0, 0, 0, 0), (1, 0, 0, 0, 1, 1))


def test_q_closed_form():
    for unit in (False, True):
        kern = linking_kernel(unit)
        x, y = pair_variables(kern.d)
        dd, de = x[3] - y[3], x[4] - y[4]
        assert kern.q == dd ** 2 + de ** 2 + (x[3] * y[4] - y[3] * x[4]) ** 2


def test_linking_symmetry_and_oracle():
    fam = builtin("CIRCLE_LINKS")
    seen = set()
    checked = 0
    for t in range(200):
        rng = trial_rng(41, t)
        a, b = random_point(fam, rng, bits=5), random_point(fam, rng, bits=5)
        ab, ba = linking_predicate(a, b), linking_predicate(b, a)
        if ab.boundary or ba.boundary:
            continue
        truth = gauss_link_label(a, b)
        if truth == INCONCLUSIVE:
            continue
        checked += 1
        assert ab.label == ba.label == truth
        seen.add(truth)
    assert checked > 50 and seen == {"link", "no-link"}


def test_unit_links_match_general_kernel():
    unit = builtin("UNIT_CIRCLE_LINKS")
    for t in range(40):
        rng = trial_rng(43, t)
        a, b = random_point(unit, rng, bits=5), random_point(unit, rng, bits=5)
        u = linking_predicate(a, b, unit=True)
        g = linking_predicate(a + (1,), b + (1,))
        assert u.signs == g.signs


def test_gauss_oracle_on_worked_pair():
    fam = builtin("CIRCLE_LINKS")
    assert oracle_relation(fam, (0, 0, 0, 0, 0, 1), (1, 0, 0, 0, 1, 1)) == "link"


# -- segments ------------------------------------------------------------------------

def test_segment_oracle_examples():
    fam = builtin("SEGMENTS")
    # collinear overlapping pieces of y = x
    assert oracle_relation(fam, (1, 0, 0, 2), (1, 0, 1, 3)) == "edge"
    assert label(fam, (1, 0, 0, 2), (1, 0, 1, 3)) == "edge"
    # collinear, touching at an endpoint
    assert label(fam, (1, 0, 0, 1), (1, 0, 1, 3)) == "edge"
    # collinear, disjoint
    assert label(fam, (1, 0, 0, 1), (1, 0, 2, 3)) == "non-edge"
    # parallel, distinct lines
    assert label(fam, (1, 0, 0, 2), (1, 1, 0, 2)) == "non-edge"
    # crossing
    assert label(fam, (1, 0, -1, 1), (-1, 0, -1, 1)) == "edge"
    assert segments_intersect((0, 0), (2, 2), (0, 2), (2, 0))


small = st.integers(-3, 3).map(Fraction)


@st.composite
def segment(draw):
    al, be, ga = draw(small), draw(small), draw(small)
    de = ga + draw(st.integers(1, 4))
    return (al, be, ga, Fraction(de))


@given(segment(), segment())
@settings(max_examples=400, deadline=None)
def test_segments_exact_on_degenerate_inputs(a, b):
    # integer data hits the parallel and collinear branches often; zeros must be handled too
    fam = builtin("SEGMENTS")
    assert label(fam, a, b) == oracle_relation(fam, a, b)


boxes = st.tuples(small, st.integers(0, 3)).map(lambda t: (t[0], t[0] + t[1]))


@given(st.lists(boxes, min_size=2, max_size=2), st.lists(boxes, min_size=2, max_size=2))
@settings(max_examples=200, deadline=None)
def test_boxes_exact_with_touching(a, b):
    fam = builtin("BOXES:2")
    a = tuple(c for lh in a for c in lh)
    b = tuple(c for lh in b for c in lh)
    assume(fam.contains(a) and fam.contains(b))
    assert label(fam, a, b) == oracle_relation(fam, a, b)


@pytest.mark.parametrize("name", ["DISKS", "UNIT_DISKS", "INTERVALS", "CIRCLE_ORDERS", "POSET_DIM:2", "BALLS:3"])
def test_exact_oracles_with_coarse_points(name):
    # integer-ish coordinates include tangencies and ties, which the encodings must get right as well
    fam = builtin(name)
    for t in range(1500):
        rng = trial_rng(47, t)
        a, b = random_point(fam, rng, bits=0), random_point(fam, rng, bits=0)
        assert label(fam, a, b) == oracle_relation(fam, a, b), (a, b)


def test_circle_orders_antisymmetric():
    fam = builtin("CIRCLE_ORDERS")
    flip = {"≺": "≻", "≻": "≺", "incomparable": "incomparable"}
    for t in range(2000):
        rng = trial_rng(53, t)
        a, b = random_point(fam, rng, bits=2), random_point(fam, rng, bits=2)
        if Sign.ZERO in fam.signs(a, b) or Sign.ZERO in fam.signs(b, a):
            continue
        assert label(fam, b, a) == flip[label(fam, a, b)]


# -- sampling and export ------------------------------------------------------------

def test_random_point_examples():
    disks = builtin("DISKS")
    p = random_point(disks, trial_rng(1, 0), box=(-1, 1))
    assert disks.contains(p) and all(-1 <= c <= 1 for c in p)
    assert len(random_point(builtin("POSET_DIM:2"), trial_rng(1, 1), box=(-5, 5))) == 2
    with pytest.raises(SamplingExhausted):
        random_point(builtin("SEGMENTS"), trial_rng(1, 2), box=[(-1, 1), (-1, 1), (2, 3), (0, 1)], retries=50)


@pytest.mark.parametrize("name", ["DISKS", "SEGMENTS", "BOXES:2", "CIRCLE_ORDERS", "POSET_DIM:3", "UNIT_BALLS:2"])
def test_export_round_trip(name):
    fam = builtin(name)
    back = family_from_spec(export_builtin(fam))
    assert back.preds == fam.preds and back.phi.table == fam.phi.table
    for t in range(50):
        rng = trial_rng(59, t)
        a, b = random_point(fam, rng, bits=2), random_point(fam, rng, bits=2)
        assert pair_label(back, a, b) == pair_label(fam, a, b)
