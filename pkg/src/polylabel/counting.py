"""Bounds on the number of labelings, and empirical counts.

``warren_bound`` is the closed-form upper bound on the number of sign
patterns of ``C(n,2) k`` polynomials of degree ``D`` in ``d n`` variables;
``lower_bound_formula`` is the size of the factory's output.  Counting
functions return certified lower bounds: every counted labeling comes with
a witness configuration evaluated exactly.
"""

from __future__ import annotations

import itertools
import math
import struct
from dataclasses import asdict, dataclass
from fractions import Fraction

from .errors import PreconditionError
from .families import random_point
from .framework import Configuration, EdgeLabeling, Family, SignCache, label_configuration, strong_check
from .sampling import DEFAULT_BITS, chunk_ranges, parallel_map, trial_rng

SATURATION_WINDOW = Fraction(1, 5)


def _positive_ints(**kw):
    for name, v in kw.items():
        if not isinstance(v, int) or isinstance(v, bool) or v < 1:
            raise PreconditionError(f"{name} must be a positive integer, got {v!r}")


def _ceil_pow(q: Fraction, e: int) -> int:
    x = q ** e
    return -((-x.numerator) // x.denominator)


def sign_pattern_bound(l: int, m: int, D: int) -> int:
    """``ceil((24 D l / m)^m)``: sign patterns of ``l`` degree-``D`` polynomials in ``m`` variables."""
    _positive_ints(l=l, m=m, D=D)
    if l < m:
        raise PreconditionError(f"the bound needs l >= m, got l={l} < m={m}")
    return _ceil_pow(Fraction(24 * D * l, m), m)


def warren_applicable(n: int, d: int, k: int) -> bool:
    """Whether ``C(n,2) k >= d n``, the range where the closed form is a proven bound."""
    return math.comb(n, 2) * k >= d * n


def warren_bound(n: int, d: int, k: int, D: int, strict: bool = False) -> int:
    """``(12 D k n)^(d n)``.

    The closed form is returned for all positive parameters.  It is a proven
    upper bound when ``C(n,2) k >= d n`` (see :func:`warren_applicable`);
    ``strict=True`` rejects inputs outside that range.
    """
    _positive_ints(n=n, d=d, k=k, D=D)
    if strict and not warren_applicable(n, d, k):
        raise PreconditionError(f"C(n,2)*k = {math.comb(n, 2) * k} < d*n = {d * n}")
    return (12 * D * k * n) ** (d * n)


def lower_bound_formula(n: int, m: int, d: int) -> int:
    """``m^(d (n - d m))`` for ``1 <= m < n/d``."""
    _positive_ints(n=n, m=m, d=d)
    if m * d >= n:
        raise PreconditionError(f"need m < n/d, got m={m}, n={n}, d={d}")
    return m ** (d * (n - d * m))


def canonical_bytes(L: EdgeLabeling) -> bytes:
    """Injective encoding: ``n`` as 4 bytes, then one 2-byte index per pair in lexicographic order."""
    return struct.pack(f">I{len(L.labels)}H", L.n, *L.labels)


@dataclass
class CountReport:
    family: str
    n: int
    distinct_count: int
    trials: int
    used: int
    saturated: bool
    strong_only: bool
    warren_value: int
    warren_applicable: bool
    lower_value: int | None = None

    def to_json(self) -> dict:
        return asdict(self)


def _sample_chunk(args):
    fam, n, seed, lo, hi, box, strong_only, bits = args
    cache = SignCache(fam)
    out = []
    for t in range(lo, hi):
        rng = trial_rng(seed, t)
        cfg = Configuration([random_point(fam, rng, box, bits=bits) for _ in range(n)])
        if strong_only and not strong_check(fam, cfg, cache):
            out.append(None)
            continue
        out.append(canonical_bytes(label_configuration(fam, cfg, cache)))
    return out


def sample_count(fam: Family, n: int, trials: int, seed: int = 0, box=None, strong_only: bool = True,
                 bits: int = DEFAULT_BITS, workers: int = 1, chunk: int = 256, m: int | None = None,
                 keep: bool = False):
    """Distinct labelings among ``trials`` random configurations.

    Trial ``t`` always uses the stream ``(seed, t)``; chunk results are
    merged in trial order, so ``workers`` never changes the report.  With
    ``keep`` the set of canonical encodings is returned too.
    """
    _positive_ints(n=n, trials=trials)
    args = [(fam, n, seed, lo, hi, box, strong_only, bits) for lo, hi in chunk_ranges(trials, chunk)]
    seen: set = set()
    last_new = -1
    used = 0
    t = 0
    for part in parallel_map(_sample_chunk, args, workers):
        for enc in part:
            if enc is not None:
                used += 1
                if enc not in seen:
                    seen.add(enc)
                    last_new = t
            t += 1
    window = math.ceil(trials * SATURATION_WINDOW)
    saturated = last_new < trials - window
    k, D = fam.k, fam.max_degree()
    report = CountReport(
        fam.name, n, len(seen), trials, used, saturated, strong_only,
        warren_bound(n, fam.d, k, D), warren_applicable(n, fam.d, k),
        lower_bound_formula(n, m, fam.d) if m is not None else None,
    )
    return (report, seen) if keep else report


def ordered_partitions(items: int):
    """Ordered set partitions of ``range(items)``, as rank vectors."""
    for blocks in range(1, items + 1):
        for ranks in itertools.product(range(blocks), repeat=items):
            if len(set(ranks)) == blocks:
                yield ranks


def brute_force_labelings(fam: Family, n: int, strong_only: bool = False) -> set:
    """Every labeling of an order-type-determined family, as canonical encodings.

    Labels of such families depend only on how the ``n d`` scalar
    coordinates compare, so ranks of all weak orderings are a complete set
    of representatives.
    """
    if not fam.meta.get("order_type_determined"):
        raise PreconditionError(f"{fam.name} is not flagged order-type-determined")
    _positive_ints(n=n)
    d = fam.d
    cache = SignCache(fam)
    out = set()
    for ranks in ordered_partitions(n * d):
        pts = [tuple(Fraction(r) for r in ranks[i * d:(i + 1) * d]) for i in range(n)]
        if not all(fam.contains(p) for p in pts):
            continue
        cfg = Configuration(pts)
        if strong_only and not strong_check(fam, cfg, cache):
            continue
        out.add(canonical_bytes(label_configuration(fam, cfg, cache)))
    return out


def brute_force_count_1d(fam: Family, n: int, strong_only: bool = False) -> int:
    return len(brute_force_labelings(fam, n, strong_only))


def sweep_rows(fam: Family, ns, trials: int, seed: int, box=None, strong_only=True, workers=1, m=None):
    rows = []
    for n in ns:
        r = sample_count(fam, n, trials, seed, box, strong_only, workers=workers,
                         m=m if m is not None and m * fam.d < n else None)
        rows.append({
            "family": r.family, "n": n, "trials": trials, "distinct": r.distinct_count,
            "warren": r.warren_value, "lower": r.lower_value, "saturated": r.saturated,
        })
    return rows
