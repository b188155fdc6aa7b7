"""Reproducible random rational points.

Every trial draws from its own generator derived from ``(seed, index)``,
so results never depend on how trials are split across workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import PreconditionError, SamplingExhausted
from .poly import to_rat

DEFAULT_BITS = 10
DEFAULT_RETRIES = 1000


def trial_rng(seed: int, *index: int) -> np.random.Generator:
    if seed < 0:
        raise PreconditionError("seeds must be non-negative integers")
    return np.random.default_rng([seed, *index])


def parse_box(box, d: int) -> tuple[tuple[Fraction, Fraction], ...]:
    """Normalize a box to ``d`` rational ``(lo, hi)`` pairs.

    A single pair is broadcast to every coordinate.
    """
    if len(box) == 2 and not isinstance(box[0], (tuple, list)):
        box = [box] * d
    if len(box) != d:
        raise PreconditionError(f"box has {len(box)} coordinates, expected {d}")
    out = tuple((to_rat(lo), to_rat(hi)) for lo, hi in box)
    for lo, hi in out:
        if not lo < hi:
            raise PreconditionError(f"box side [{lo}, {hi}] has no volume")
    return out


def dyadic_uniform(rng: np.random.Generator, lo: Fraction, hi: Fraction, bits: int) -> Fraction:
    scale = 1 << bits
    ilo = math.ceil(lo * scale)
    ihi = math.floor(hi * scale)
    if ilo > ihi:
        raise PreconditionError(f"no dyadic of precision 2^-{bits} in [{lo}, {hi}]")
    return Fraction(int(rng.integers(ilo, ihi + 1)), scale)


def sample_in(
    rng: np.random.Generator,
    box: Sequence[tuple[Fraction, Fraction]],
    accept: Callable[[tuple], bool],
    bits: int = DEFAULT_BITS,
    retries: int = DEFAULT_RETRIES,
) -> tuple[Fraction, ...]:
    for _ in range(retries):
        p = tuple(dyadic_uniform(rng, lo, hi, bits) for lo, hi in box)
        if accept(p):
            return p
    raise SamplingExhausted(f"no accepted point after {retries} draws; the box may miss the domain")


def parallel_map(fn: Callable, items: Iterable, workers: int = 1) -> list:
    """Ordered map, optionally over a process pool.

    Output order always follows input order, so the worker count cannot
    change results.
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def chunk_ranges(total: int, size: int) -> list[tuple[int, int]]:
    return [(s, min(s + size, total)) for s in range(0, total, size)]
