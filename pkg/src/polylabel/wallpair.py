"""Locating and certifying general wall pairs.

A general wall pair ``(a, b)`` has exactly one vanishing predicate ``P_s``,
a nonzero ``grad_b P_s(a, b)``, and a label flip: substituting ``+`` and
``-`` for the sign at ``s`` gives different labels.  Searches run in
floating point; every returned object is re-certified exactly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import InvariantViolation, PreconditionError, SearchExhausted, UnsupportedDegree
from .framework import Family
from .poly import Sign, format_rat, parse_rat, rational_sqrt, to_point
from .sampling import chunk_ranges, parallel_map, parse_box, sample_in, trial_rng

BISECT_BITS = 40
SNAP_BITS = (8, 16, 24, 40)


# -- exact linear algebra -------------------------------------------------------


def bareiss_det(rows: Sequence[Sequence]) -> Fraction:
    """Determinant by fraction-free elimination.

    Rows are scaled to integers first, so every intermediate division is
    exact integer division.
    """
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise PreconditionError("determinant needs a square matrix")
    if n == 0:
        return Fraction(1)
    scale = Fraction(1)
    M = []
    for r in rows:
        r = [Fraction(x) for x in r]
        L = math.lcm(*(x.denominator for x in r))
        scale /= L
        M.append([int(x * L) for x in r])
    sign = 1
    prev = 1
    for k in range(n - 1):
        if M[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if M[i][k] != 0), None)
            if swap is None:
                return Fraction(0)
            M[k], M[swap] = M[swap], M[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                M[i][j] = (M[i][j] * M[k][k] - M[i][k] * M[k][j]) // prev
        prev = M[k][k]
    return sign * M[n - 1][n - 1] * scale


def rank(rows: Sequence[Sequence]) -> int:
    M = [[Fraction(x) for x in r] for r in rows]
    if not M:
        return 0
    rk, cols = 0, len(M[0])
    for c in range(cols):
        piv = next((i for i in range(rk, len(M)) if M[i][c] != 0), None)
        if piv is None:
            continue
        M[rk], M[piv] = M[piv], M[rk]
        for i in range(rk + 1, len(M)):
            f = M[i][c] / M[rk][c]
            if f:
                M[i] = [x - f * y for x, y in zip(M[i], M[rk])]
        rk += 1
    return rk


def inverse(rows: Sequence[Sequence]) -> list[list[Fraction]]:
    """Exact Gauss-Jordan inverse."""
    n = len(rows)
    M = [[Fraction(x) for x in r] + [Fraction(int(i == j)) for j in range(n)] for i, r in enumerate(rows)]
    for c in range(n):
        piv = next((i for i in range(c, n) if M[i][c] != 0), None)
        if piv is None:
            raise PreconditionError("matrix is singular")
        M[c], M[piv] = M[piv], M[c]
        p = M[c][c]
        M[c] = [x / p for x in M[c]]
        for i in range(n):
            if i != c and M[i][c]:
                f = M[i][c]
                M[i] = [x - f * y for x, y in zip(M[i], M[c])]
    return [r[n:] for r in M]


# -- certificates -------------------------------------------------------------------


@dataclass(frozen=True)
class WallPairSeed:
    a: tuple
    b: tuple
    s: int
    cert: tuple
    grad_a: tuple
    grad_b: tuple
    flip: tuple  # (label with +, label with -) at position s

    def to_json(self, fam: Family | None = None) -> dict:
        out = {
            "a": [format_rat(x) for x in self.a],
            "b": [format_rat(x) for x in self.b],
            "s": self.s,
            "cert": "".join(x.char for x in self.cert),
            "grad_a": [format_rat(x) for x in self.grad_a],
            "grad_b": [format_rat(x) for x in self.grad_b],
            "flip": list(self.flip),
        }
        if fam is not None:
            out["flip_labels"] = [fam.labels[i] for i in self.flip]
        return out


def _flip(fam: Family, signs, s):
    plus = list(signs)
    minus = list(signs)
    plus[s], minus[s] = Sign.PLUS, Sign.MINUS
    return fam.phi(plus), fam.phi(minus)


def is_general_wall_pair(fam: Family, a, b) -> WallPairSeed | None:
    """Exact test; ``None`` covers every way of failing."""
    a, b = to_point(a), to_point(b)
    if len(a) != fam.d or len(b) != fam.d or not fam.contains(a) or not fam.contains(b):
        return None
    signs = fam.signs(a, b)
    zeros = [s for s, x in enumerate(signs) if x == Sign.ZERO]
    if len(zeros) != 1:
        return None
    s = zeros[0]
    grad = fam.preds[s].gradient(a + b)
    ga, gb = grad[: fam.d], grad[fam.d:]
    if not any(gb):
        return None
    lp, lm = _flip(fam, signs, s)
    if lp == lm:
        return None
    return WallPairSeed(a, b, s, signs, ga, gb, (lp, lm))


@dataclass(frozen=True)
class SpanningSeed:
    a_star: tuple
    pairs: tuple
    grad_matrix: tuple
    det: Fraction

    @property
    def d(self) -> int:
        return len(self.a_star)

    def to_json(self, fam: Family | None = None) -> dict:
        return {
            "a_star": [format_rat(x) for x in self.a_star],
            "pairs": [p.to_json(fam) for p in self.pairs],
            "grad_matrix": [[format_rat(x) for x in r] for r in self.grad_matrix],
            "det": format_rat(self.det),
        }


def make_seed(fam: Family, a_star, bs: Sequence) -> SpanningSeed:
    """Certify ``a_star`` with wall partners ``bs`` as a spanning seed."""
    a_star = to_point(a_star)
    if len(bs) != fam.d:
        raise PreconditionError(f"a spanning seed needs {fam.d} wall partners, got {len(bs)}")
    pairs = []
    for i, b in enumerate(bs):
        w = is_general_wall_pair(fam, a_star, b)
        if w is None:
            raise PreconditionError(f"partner {i} does not form a general wall pair with a*")
        pairs.append(w)
    G = tuple(p.grad_a for p in pairs)
    det = bareiss_det(G)
    if det == 0:
        raise PreconditionError("the a-gradients of the wall pairs do not span")
    return SpanningSeed(a_star, tuple(pairs), G, det)


def seed_from_json(fam: Family, data: dict) -> SpanningSeed:
    """Rebuild and re-certify a seed record; the stored claims are not trusted."""
    try:
        a_star = [parse_rat(x) for x in data["a_star"]]
        bs = [[parse_rat(x) for x in p["b"]] for p in data["pairs"]]
    except (KeyError, TypeError) as e:
        raise PreconditionError(f"malformed seed record: {e}") from None
    return make_seed(fam, a_star, bs)


def certify(fam: Family, seed: SpanningSeed) -> bool:
    try:
        again = make_seed(fam, seed.a_star, [p.b for p in seed.pairs])
    except PreconditionError:
        return False
    return again.det == seed.det


# -- exact snapping -------------------------------------------------------------------


def _dyadic(x: float, bits: int) -> Fraction:
    return Fraction(round(x * (1 << bits)), 1 << bits)


def _rational_roots(coeffs):
    """Rational roots of a univariate polynomial of degree 1 or 2."""
    if len(coeffs) == 2:
        return [-coeffs[0] / coeffs[1]]
    if len(coeffs) == 3:
        c0, c1, c2 = coeffs
        sq = rational_sqrt(c1 * c1 - 4 * c0 * c2)
        if sq is None:
            return []
        return sorted({(-c1 + sq) / (2 * c2), (-c1 - sq) / (2 * c2)}, key=abs)
    return []


def _directions(d):
    for c in range(d):
        e = [0] * d
        e[c] = 1
        yield tuple(e)
    for i, j in itertools.combinations(range(d), 2):
        for sj in (1, -1):
            e = [0] * d
            e[i], e[j] = 1, sj
            yield tuple(e)


def _b_restriction(fam: Family, s: int, a, base, direction):
    zero = (Fraction(0),) * fam.d
    return fam.preds[s].restrict_line(tuple(a) + tuple(base), zero + tuple(direction))


def _check_degree(fam: Family, s: int):
    deg = fam.preds[s].degree_in(range(fam.d, 2 * fam.d))
    if deg > 2:
        raise UnsupportedDegree(
            f"predicate {s} of {fam.name} has degree {deg} in the second point; exact snapping handles degree <= 2"
        )


def snap_to_wall(fam: Family, a, b_float: Sequence[float], s: int) -> WallPairSeed | None:
    """Move a float near-zero of ``P_s(a, .)`` to an exact general wall pair."""
    _check_degree(fam, s)
    a = to_point(a)
    zeros_seen: list[tuple] = []

    def try_line(base, direction):
        coeffs = _b_restriction(fam, s, a, base, direction)
        for t in _rational_roots(coeffs):
            cand = tuple(x + t * v for x, v in zip(base, direction))
            zeros_seen.append(cand)
            w = is_general_wall_pair(fam, a, cand)
            if w is not None and w.s == s:
                return w
        return None

    for bits in SNAP_BITS:
        base = tuple(_dyadic(x, bits) for x in b_float)
        for direction in _directions(fam.d):
            w = try_line(base, direction)
            if w is not None:
                return w
    # anchor lines through b = a often have rational roots (e.g. distance-type predicates)
    for direction in _directions(fam.d):
        try_line(a, direction)
    target = tuple(_dyadic(x, BISECT_BITS) for x in b_float)
    # secant: through a known rational zero p0, the second root on the line to the target is rational
    for p0 in sorted(zeros_seen, key=lambda p: sum(float(x - y) ** 2 for x, y in zip(p, target))):
        direction = tuple(x - y for x, y in zip(target, p0))
        if not any(direction):
            continue
        coeffs = _b_restriction(fam, s, a, p0, direction)
        if len(coeffs) == 3 and coeffs[0] == 0:
            t1 = -coeffs[1] / coeffs[2]
            cand = tuple(x + t1 * v for x, v in zip(p0, direction))
            w = is_general_wall_pair(fam, a, cand)
            if w is not None and w.s == s:
                return w
    return None


def _bisect(fam: Family, s: int, a, b_lo, b_hi):
    """Float bisection of ``t -> P_s(a, b_lo + t (b_hi - b_lo))`` over [0, 1]."""
    P = fam.preds[s]
    af = [float(x) for x in a]
    lo_f = [float(x) for x in b_lo]
    hi_f = [float(x) for x in b_hi]

    def f(t):
        return P.eval_float(af + [x + t * (y - x) for x, y in zip(lo_f, hi_f)])

    lo, hi = 0.0, 1.0
    f_lo = f(lo)
    while hi - lo > 2.0 ** -BISECT_BITS:
        mid = (lo + hi) / 2
        fm = f(mid)
        if fm == 0:
            lo = hi = mid
            break
        if (fm > 0) == (f_lo > 0):
            lo, f_lo = mid, fm
        else:
            hi = mid
    t = (lo + hi) / 2
    return [x + t * (y - x) for x, y in zip(lo_f, hi_f)]


def _bracket(fam: Family, a, b1, b2):
    """Index ``s`` where the two sign vectors differ strictly, all others equal and nonzero."""
    s1, s2 = fam.signs(a, b1), fam.signs(a, b2)
    if Sign.ZERO in s1 or Sign.ZERO in s2:
        return None
    diff = [s for s in range(fam.k) if s1[s] != s2[s]]
    if len(diff) != 1:
        return None
    s = diff[0]
    plus, minus = _flip(fam, s1, s)
    return s if plus != minus else None


def _search_partner(fam: Family, a, rng, box, want: int | None = None):
    b1 = sample_in(rng, box, fam.contains, retries=100)
    if rng.random() < 0.5:
        b2 = sample_in(rng, box, fam.contains, retries=100)
    else:
        # short bracket: crosses few walls, so a single sign change is likely
        h = Fraction(1, 1 << int(rng.integers(1, 8)))
        b2 = tuple(x + h * int(rng.integers(-4, 5)) / 4 for x in b1)
        if not fam.contains(b2):
            return None
    s = _bracket(fam, a, b1, b2)
    if s is None or (want is not None and s != want):
        return None
    bf = _bisect(fam, s, a, b1, b2)
    return snap_to_wall(fam, a, bf, s)


def _default_box(fam: Family, box):
    if box is None:
        box = fam.meta.get("box")
        if box is None:
            raise PreconditionError(f"family {fam.name} has no default box; pass one")
    return parse_box(box, fam.d)


def _poset_partner(d, s):
    return tuple(Fraction(0 if i == s else 7) for i in range(d))


def _is_poset(fam):
    return fam.meta.get("builtin") == "POSET_DIM"


def _wall_trial(args):
    fam, seed, t, box = args
    rng = trial_rng(seed, t)
    try:
        a = sample_in(rng, box, fam.contains, retries=100)
        return _search_partner(fam, a, rng, box)
    except SearchExhausted:
        return None


def _check_budget(budget):
    if budget < 1:
        raise PreconditionError("budget must be at least 1")


def find_wall_pair(fam: Family, seed: int = 0, box=None, budget: int = 200, workers: int = 1, s: int = 0) -> WallPairSeed:
    """Some general wall pair.

    Trials are independent; the lowest-index success is returned, so the
    result does not depend on ``workers``.  ``s`` selects the wall index of
    the deterministic shortcut for coordinate-order families.
    """
    _check_budget(budget)
    if _is_poset(fam):
        w = is_general_wall_pair(fam, (Fraction(0),) * fam.d, _poset_partner(fam.d, s))
        if w is None:
            raise InvariantViolation("poset shortcut failed to certify")
        return w
    for pred in range(fam.k):
        _check_degree(fam, pred)
    box = _default_box(fam, box)
    for lo, hi in chunk_ranges(budget, max(8, 4 * workers)):
        got = parallel_map(_wall_trial, [(fam, seed, t, box) for t in range(lo, hi)], workers)
        for w in got:
            if w is not None:
                return _recheck(fam, w)
    raise SearchExhausted(f"no general wall pair found for {fam.name} in {budget} trials")


def _recheck(fam, w):
    again = is_general_wall_pair(fam, w.a, w.b)
    if again is None or again != w:
        raise InvariantViolation("wall pair failed exact re-certification")
    return w


def _partner_trial(args):
    fam, seed, rnd, t, box, a_star = args
    rng = trial_rng(seed, 1, rnd, t)
    try:
        return _search_partner(fam, a_star, rng, box)
    except SearchExhausted:
        return None


def _grow(fam, seed, rnd, first, box, budget, workers):
    pairs = [first]
    rows = [first.grad_a]
    for lo, hi in chunk_ranges(budget, max(8, 4 * workers)):
        if len(pairs) == fam.d:
            break
        args = [(fam, seed, rnd, t, box, first.a) for t in range(lo, hi)]
        for w in parallel_map(_partner_trial, args, workers):
            if w is None or len(pairs) == fam.d:
                continue
            if rank(rows + [w.grad_a]) > len(rows):
                pairs.append(_recheck(fam, w))
                rows.append(w.grad_a)
    return pairs


def find_spanning_seed(
    fam: Family, seed: int = 0, box=None, budget: int = 4000, workers: int = 1, rounds: int = 4
) -> SpanningSeed:
    """Greedy search for ``d`` wall partners of one ``a*`` with spanning ``a``-gradients.

    Candidate partners are processed in trial order and kept only when they
    raise the rank, so the result is independent of ``workers``.  The budget
    is split over ``rounds`` choices of ``a*``, since some centers are
    poorly placed inside the box.
    """
    _check_budget(budget)
    if _is_poset(fam):
        return make_seed(fam, (Fraction(0),) * fam.d, [_poset_partner(fam.d, s) for s in range(fam.d)])
    for pred in range(fam.k):
        _check_degree(fam, pred)
    box = _default_box(fam, box)
    per_round = max(1, budget // rounds)
    best = 0
    t = 0
    for rnd in range(rounds):
        first = None
        while first is None and t < budget:
            first = _wall_trial((fam, seed, t, box))
            t += 1
        if first is None:
            break
        pairs = _grow(fam, seed, rnd, _recheck(fam, first), box, per_round, workers)
        if len(pairs) == fam.d:
            return make_seed(fam, first.a, [p.b for p in pairs])
        best = max(best, len(pairs))
    raise SearchExhausted(
        f"found at most {best} of {fam.d} spanning wall partners for {fam.name} within budget {budget}"
    )
