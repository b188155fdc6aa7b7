from fractions import Fraction

import pytest

from polylabel.errors import PreconditionError, SamplingExhausted
from polylabel.sampling import chunk_ranges, dyadic_uniform, parallel_map, parse_box, sample_in, trial_rng


def square(x):
    return x * x


def test_trial_streams_are_reproducible_and_distinct():
    a = trial_rng(5, 1).integers(0, 2 ** 62, size=4).tolist()
    assert a == trial_rng(5, 1).integers(0, 2 ** 62, size=4).tolist()
    assert a != trial_rng(5, 2).integers(0, 2 ** 62, size=4).tolist()
    with pytest.raises(PreconditionError):
        trial_rng(-1)


def test_dyadic_uniform_bounds():
    rng = trial_rng(0)
    for _ in range(200):
        x = dyadic_uniform(rng, Fraction(-1, 3), Fraction(2, 3), 4)
        assert Fraction(-1, 3) <= x <= Fraction(2, 3) and (x * 16).denominator == 1
    with pytest.raises(PreconditionError):
        dyadic_uniform(rng, Fraction(1, 3), Fraction(2, 5), 1)


def test_parse_box():
    assert parse_box((0, 1), 2) == ((0, 1), (0, 1))
    with pytest.raises(PreconditionError):
        parse_box([(0, 1)] * 3, 2)


def test_sample_in_exhaustion():
    with pytest.raises(SamplingExhausted):
        sample_in(trial_rng(0), parse_box((0, 1), 1), lambda p: False, retries=5)


def test_parallel_map_keeps_order():
    items = list(range(40))
    assert parallel_map(square, items, workers=3) == [x * x for x in items]


def test_chunk_ranges():
    assert chunk_ranges(10, 4) == [(0, 4), (4, 8), (8, 10)]
    assert chunk_ranges(0, 4) == []
