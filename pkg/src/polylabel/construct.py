"""Grid perturbation of a spanning seed, and the labeling factory.

From a spanning seed ``(a*, b_1..b_d)`` we build, for a step ``eps``,

    z_i   with  z_i . grad_a P_{s_j}(a*, b_j) = [i == j]
    v_i   with  v_i . grad_b P_{s_i}(a*, b_i) = 1
    b_i^j = b_i + (1/2 - j) eps v_i                    (j = 1..m)
    a(t)  = a* + eps (t_1 z_1 + ... + t_d z_d)         (t in {1..m}^d)

so that ``P_{s_i}(a(t), b_i^j)`` is positive exactly for ``j <= t_i``.  The
tuple ``t`` can then be read back from labels alone.  Every claim is
checked in exact arithmetic; ``eps`` is halved whenever a check fails.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

from .errors import GridInvalid, InvariantViolation, PerturbationExhausted, PreconditionError, Undecodable
from .framework import Configuration, EdgeLabeling, Family, SignCache, pair_order, strong_check
from .poly import PolyExpr, Sign, format_rat
from .sampling import parallel_map, trial_rng
from .wallpair import SpanningSeed, inverse

DELTA_START = Fraction(16)
MIN_STEP = Fraction(1, 2 ** 80)
DEFAULT_CAP = 10 ** 5


def sqrt_majorant(d: int, bits: int = 10) -> Fraction:
    """A rational ``r >= sqrt(d)``, within ``2**-bits``."""
    s = 1 << bits
    return Fraction(math.isqrt(d * s * s) + 1, s)


def norm_bound(v: Sequence) -> Fraction:
    """Rational upper bound on the Euclidean norm: sup-norm times ``sqrt(len)``."""
    return max(abs(Fraction(x)) for x in v) * sqrt_majorant(len(v))


@dataclass(frozen=True)
class GridParameters:
    z: tuple
    v: tuple
    eps: Fraction
    delta: Fraction | None
    C: Fraction
    cols: tuple
    z_norm: Fraction
    v_norms: tuple

    def inequalities(self, m: int) -> dict:
        """The three step-size constraints, evaluated exactly."""
        eps, z, vs = self.eps, self.z_norm, self.v_norms
        total = z + sum(vs)
        return {
            "z_within_delta": self.delta is None or eps * m * z < self.delta,
            "v_within_delta": self.delta is None or all(eps * m * x < self.delta for x in vs),
            "taylor": eps * self.C * m * m * total * total < Fraction(1, 2),
        }

    def to_json(self) -> dict:
        return {
            "z": [[format_rat(x) for x in r] for r in self.z],
            "v": [[format_rat(x) for x in r] for r in self.v],
            "eps": format_rat(self.eps),
            "delta": None if self.delta is None else format_rat(self.delta),
            "C": format_rat(self.C),
        }


def _box(p, r):
    return [(x - r, x + r) for x in p]


def _keeps_sign(P, box, sign: Sign) -> bool:
    lo, hi = P.eval_interval(box)
    return lo > 0 if sign == Sign.PLUS else hi < 0


def choose_delta(fam: Family, seed: SpanningSeed) -> Fraction | None:
    """Radius of sup-boxes on which the domain and the non-wall predicates keep their signs.

    ``None`` when nothing needs protecting.
    """
    checks = []
    for p in (seed.a_star,) + tuple(w.b for w in seed.pairs):
        for Q in fam.domain.polys:
            sg = Q.sign_at(p)
            if sg != Sign.ZERO:
                checks.append((Q, (p,), sg))
    for w in seed.pairs:
        for t, P in enumerate(fam.preds):
            if t != w.s:
                checks.append((P, (seed.a_star, w.b), w.cert[t]))
    if not checks:
        return None
    delta = DELTA_START
    while delta > MIN_STEP:
        if all(_keeps_sign(P, [iv for p in pts for iv in _box(p, delta)], sg) for P, pts, sg in checks):
            return delta
        delta /= 2
    raise InvariantViolation("no positive radius keeps the seed's strict signs")


def _as_polynomial(P):
    return P.expand() if isinstance(P, PolyExpr) else P


def taylor_constant(fam: Family, seed: SpanningSeed, delta: Fraction | None) -> Fraction:
    """``C`` with ``|P_s(x + h) - P_s(x) - grad . h| <= C |h|^2`` near every seed pair.

    Quadratic predicates have a constant Hessian; otherwise second
    derivatives are bounded over the ``delta``-box by interval arithmetic.
    """
    best = Fraction(0)
    for w in seed.pairs:
        P = _as_polynomial(fam.preds[w.s])
        H = P.hessian()
        if P.degree() <= 2:
            total = sum(abs(h.eval([0] * P.num_vars)) for row in H for h in row)
        else:
            r = Fraction(1) if delta is None else delta
            box = _box(seed.a_star + w.b, r)
            total = Fraction(0)
            for row in H:
                for h in row:
                    lo, hi = h.eval_interval(box)
                    total += max(abs(lo), abs(hi))
        best = max(best, total / 2)
    return best


def _largest_eps(m, delta, C, z_norm, v_norms):
    eps = Fraction(1, 2)
    total = z_norm + sum(v_norms)
    while eps > MIN_STEP:
        ok = (
            (delta is None or (eps * m * z_norm < delta and all(eps * m * x < delta for x in v_norms)))
            and eps * C * m * m * total * total < Fraction(1, 2)
        )
        if ok:
            return eps
        eps /= 2
    raise InvariantViolation("step size underflow")


def grid_parameters(fam: Family, seed: SpanningSeed, m: int, eps: Fraction | None = None) -> GridParameters:
    """Exact ``z``, ``v``, ``delta``, ``C`` and the largest admissible dyadic ``eps``.

    Passing ``eps`` overrides the choice (for experiments; the grid is still
    verified exactly when used).
    """
    if m < 1:
        raise PreconditionError("m must be at least 1")
    if seed.d != fam.d:
        raise PreconditionError("seed dimension differs from the family's")
    Ginv = inverse(seed.grad_matrix)
    d = fam.d
    z = tuple(tuple(Ginv[r][i] for r in range(d)) for i in range(d))
    v, cols = [], []
    for w in seed.pairs:
        gb = w.grad_b
        c = max(range(d), key=lambda k: (abs(gb[k]), -k))
        vec = [Fraction(0)] * d
        vec[c] = 1 / gb[c]
        v.append(tuple(vec))
        cols.append(c)
    delta = choose_delta(fam, seed)
    if delta is None and fam.max_degree() > 2:
        delta = Fraction(1)
    C = taylor_constant(fam, seed, delta)
    z_norm = sum(norm_bound(x) for x in z)
    v_norms = tuple(norm_bound(x) for x in v)
    if eps is None:
        eps = _largest_eps(m, delta, C, z_norm, v_norms)
    else:
        eps = Fraction(eps)
        if eps <= 0:
            raise PreconditionError("eps must be positive")
    return GridParameters(z, tuple(v), eps, delta, C, tuple(cols), z_norm, v_norms)


@dataclass(frozen=True, eq=False)
class Grid:
    fam: Family
    seed: SpanningSeed
    m: int
    params: GridParameters
    b_pert: tuple  # b_pert[i][j-1] = b_i^j

    @property
    def d(self) -> int:
        return self.fam.d

    def tuples(self) -> Iterator[tuple]:
        return itertools.product(range(1, self.m + 1), repeat=self.d)

    def to_json(self) -> dict:
        return {
            "m": self.m,
            "params": self.params.to_json(),
            "b_pert": [[[format_rat(x) for x in p] for p in row] for row in self.b_pert],
        }


def build_grid(fam: Family, seed: SpanningSeed, m: int, eps: Fraction | None = None) -> Grid:
    params = grid_parameters(fam, seed, m, eps)
    rows = []
    for i, w in enumerate(seed.pairs):
        row = []
        for j in range(1, m + 1):
            f = (Fraction(1, 2) - j) * params.eps
            p = tuple(x + f * y for x, y in zip(w.b, params.v[i]))
            if not fam.contains(p):
                raise GridInvalid(None, i, j, None, "domain", f"grid point b_{i + 1}^{j} leaves the domain")
            row.append(p)
        rows.append(tuple(row))
    return Grid(fam, seed, m, params, tuple(rows))


def _check_tuple(grid: Grid, tup) -> tuple:
    if len(tup) != grid.d or any(not 1 <= j <= grid.m for j in tup):
        raise PreconditionError(f"tuple {tuple(tup)} is not in {{1..{grid.m}}}^{grid.d}")
    return tuple(tup)


def raw_tuple_point(grid: Grid, tup) -> tuple:
    tup = _check_tuple(grid, tup)
    p = grid.params
    return tuple(
        a + p.eps * sum(t * z[c] for t, z in zip(tup, p.z)) for c, a in enumerate(grid.seed.a_star)
    )


def tuple_point(grid: Grid, tup) -> tuple:
    """The point ``a(t)``, after exact verification of all four sign conditions.

    Raises :class:`GridInvalid` naming the first failing ``(i, j, s)`` and
    condition: ``nonzero``, ``positive``, ``negative`` or ``preserved``.
    """
    tup = _check_tuple(grid, tup)
    a = raw_tuple_point(grid, tup)
    fam = grid.fam
    if not fam.contains(a):
        raise GridInvalid(tup, None, None, None, "domain", f"tuple {tup}: a(t) leaves the domain")
    for i, w in enumerate(grid.seed.pairs):
        for j, b in enumerate(grid.b_pert[i], start=1):
            signs = fam.signs(a, b)
            for s, sg in enumerate(signs):
                if sg == Sign.ZERO:
                    raise GridInvalid(tup, i, j, s, "nonzero")
                if s == w.s:
                    if j <= tup[i] and sg != Sign.PLUS:
                        raise GridInvalid(tup, i, j, s, "positive")
                    if j > tup[i] and sg != Sign.MINUS:
                        raise GridInvalid(tup, i, j, s, "negative")
                elif sg != w.cert[s]:
                    raise GridInvalid(tup, i, j, s, "preserved")
    return a


@dataclass
class GridReport:
    mode: str
    checked: int
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_json(self) -> dict:
        return {"mode": self.mode, "checked": self.checked, "passed": self.passed, "failures": self.failures}


def _verify_one(args):
    grid, tup = args
    try:
        tuple_point(grid, tup)
        return None
    except GridInvalid as e:
        return {"tuple": list(tup), "i": e.i, "j": e.j, "s": e.s, "condition": e.condition}


def verify_grid(grid: Grid, mode: str = "exhaustive", samples: int = 1000, seed: int = 0,
                cap: int = DEFAULT_CAP, workers: int = 1) -> GridReport:
    """Check tuples exactly.  Exhaustive above ``cap`` tuples falls back to sampling."""
    if mode not in ("exhaustive", "sampled"):
        raise PreconditionError(f"unknown verification mode {mode!r}")
    if mode == "exhaustive" and grid.m ** grid.d > cap:
        mode = "sampled"
    if mode == "exhaustive":
        tuples = list(grid.tuples())
    else:
        tuples = [
            tuple(int(x) for x in trial_rng(seed, t).integers(1, grid.m + 1, size=grid.d)) for t in range(samples)
        ]
    got = parallel_map(_verify_one, [(grid, t) for t in tuples], workers)
    return GridReport(mode, len(tuples), [f for f in got if f is not None])


def build_verified_grid(fam: Family, seed: SpanningSeed, m: int, cap: int = DEFAULT_CAP,
                        max_halvings: int = 40, workers: int = 1) -> tuple[Grid, GridReport]:
    """Largest admissible ``eps``, halved until every tuple verifies."""
    eps = grid_parameters(fam, seed, m).eps
    for _ in range(max_halvings):
        try:
            grid = build_grid(fam, seed, m, eps)
            report = verify_grid(grid, cap=cap, workers=workers)
        except GridInvalid:
            eps /= 2
            continue
        if report.passed:
            return grid, report
        eps /= 2
    raise InvariantViolation(f"grid for m={m} failed verification after {max_halvings} halvings")


def tuple_recovery(fam: Family, a, grid: Grid) -> tuple:
    """Read the tuple of ``a`` off its labels against the grid points."""
    out = []
    for i in range(grid.d):
        labels = []
        for b in grid.b_pert[i]:
            signs = fam.signs(a, b)
            if Sign.ZERO in signs:
                raise Undecodable(f"a predicate vanishes between a and a grid point of row {i + 1}")
            labels.append(fam.phi(signs))
        out.append(sum(1 for x in labels if x == labels[0]))
    return tuple(out)


def decode_labels(labels: Sequence[int]) -> int:
    return sum(1 for x in labels if x == labels[0])


# -- factory ------------------------------------------------------------------------


def lower_bound_count(n: int, m: int, d: int) -> int:
    if m < 1 or m * d >= n:
        raise PreconditionError(f"need 1 <= m and m*d < n, got n={n}, m={m}, d={d}")
    return m ** (d * (n - d * m))


def _direction(key, d):
    rng = trial_rng(0xFAC7, *key)
    while True:
        v = [int(x) for x in rng.integers(-8, 9, size=d)]
        if any(v):
            return v


def _perturb(fam, base, key, ok, start):
    """``base + eta * dir`` for the largest dyadic ``eta <= start`` passing ``ok``."""
    for attempt in range(4):
        direction = _direction(key + (attempt,), len(base))
        eta = start
        while eta > MIN_STEP:
            p = tuple(x + eta * y for x, y in zip(base, direction))
            if fam.contains(p) and ok(p):
                return p
            eta /= 2
    raise PerturbationExhausted(f"no sign-preserving perturbation of {key}")


def _nonzero(fam, a, b):
    return Sign.ZERO not in fam.signs(a, b)


@dataclass
class FactoryResult:
    n: int
    m: int
    d: int
    count: int
    formula_value: int
    all_distinct: bool
    all_strong: bool
    all_decoded: bool
    labelings: list

    def manifest(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "d": self.d,
            "count": self.count,
            "formula_value": self.formula_value,
            "all_distinct": self.all_distinct,
            "all_strong": self.all_strong,
            "all_decoded": self.all_decoded,
        }


class LabelingFactory:
    """Points for every (tuple, position) and for the grid tail, chosen once.

    Vertex ``l < N = n - d m`` carries a perturbed tuple point; the last
    ``d m`` vertices are the (possibly perturbed) grid points in the order
    ``b_1^1..b_1^m, b_2^1, ...``.  Perturbations keep every sign against the
    grid points and make all predicate values between vertices nonzero.
    """

    def __init__(self, grid: Grid, n: int):
        fam, m, d = grid.fam, grid.m, grid.d
        lower_bound_count(n, m, d)
        self.grid, self.fam, self.n = grid, fam, n
        self.N = n - d * m
        tail0 = [b for row in grid.b_pert for b in row]
        bases = {t: tuple_point(grid, t) for t in grid.tuples()}
        ref = {t: [fam.signs(a, b) for b in tail0] for t, a in bases.items()}
        start = grid.params.eps / 16
        pool: dict = {}
        for t, a in bases.items():
            for pos in range(self.N):
                pool[t, pos] = _perturb(
                    fam, a, (1,) + t + (pos,),
                    lambda p, t=t: [fam.signs(p, b) for b in tail0] == ref[t], start,
                )
        # mutual values between different positions must be nonzero
        for rnd in range(64):
            bad = None
            for (t, pos), p in pool.items():
                for (t2, pos2), q in pool.items():
                    if pos < pos2 and not _nonzero(fam, p, q):
                        bad = (t2, pos2)
                        break
                if bad:
                    break
            if bad is None:
                break
            t2, pos2 = bad
            earlier = [q for (u, h), q in pool.items() if h < pos2]
            later = [q for (u, h), q in pool.items() if h > pos2]
            pool[bad] = _perturb(
                fam, bases[t2], (2, rnd) + t2 + (pos2,),
                lambda p, t2=t2: [fam.signs(p, b) for b in tail0] == ref[t2]
                and all(_nonzero(fam, q, p) for q in earlier)
                and all(_nonzero(fam, p, q) for q in later),
                start,
            )
        else:
            raise PerturbationExhausted("could not separate tuple points")
        self.pool = pool
        # tail: keep each grid point unless it meets an earlier one on a wall
        cross = {key: [fam.signs(p, b) for b in tail0] for key, p in pool.items()}
        tail = []
        for q, b in enumerate(tail0):
            def ok(p, q=q):
                return (
                    all(fam.signs(pp, p) == cross[key][q] for key, pp in pool.items())
                    and all(_nonzero(fam, e, p) for e in tail)
                )
            if not ok(b):
                b = _perturb(fam, b, (3, q), ok, grid.params.eps / 16)
            tail.append(b)
        self.tail = tuple(tail)
        self._cross = {key: [fam.phi(s) for s in sv] for key, sv in cross.items()}
        self._tail_labels = {(i, j): fam.phi(fam.signs(tail[i], tail[j])) for i, j in pair_order(len(tail))}
        self._mutual: dict = {}

    def _mutual_label(self, k1, k2):
        key = (k1, k2)
        got = self._mutual.get(key)
        if got is None:
            got = self._mutual[key] = self.fam.phi(self.fam.signs(self.pool[k1], self.pool[k2]))
        return got

    def sequences(self) -> Iterator[tuple]:
        return itertools.product(list(self.grid.tuples()), repeat=self.N)

    def configuration(self, seq) -> Configuration:
        return Configuration([self.pool[t, pos] for pos, t in enumerate(seq)] + list(self.tail))

    def labeling(self, seq) -> EdgeLabeling:
        N, n = self.N, self.n
        keys = [(t, pos) for pos, t in enumerate(seq)]
        out = []
        for i, j in pair_order(n):
            if j < N:
                out.append(self._mutual_label(keys[i], keys[j]))
            elif i < N:
                out.append(self._cross[keys[i]][j - N])
            else:
                out.append(self._tail_labels[i - N, j - N])
        return EdgeLabeling(n, out)

    def decode(self, L: EdgeLabeling) -> tuple:
        """Tuples of the first ``N`` vertices, read from cross edges only."""
        m, d, N = self.grid.m, self.grid.d, self.N
        seq = []
        for v in range(N):
            seq.append(tuple(
                decode_labels([L.label(v, N + i * m + j) for j in range(m)]) for i in range(d)
            ))
        return tuple(seq)


def generate_labelings(fam: Family, seed: SpanningSeed, n: int, m: int, grid: Grid | None = None,
                       check_strong: bool = True) -> Iterator[tuple]:
    """Yield ``(sequence, EdgeLabeling, Configuration)`` for all ``m^(d(n-dm))`` tuple sequences.

    Sequences come in lexicographic order.  Each configuration is checked
    for strong representability and each labeling is decoded back to its
    sequence; any failure raises :class:`InvariantViolation`.
    """
    lower_bound_count(n, m, fam.d)
    if grid is None:
        grid, _ = build_verified_grid(fam, seed, m)
    factory = LabelingFactory(grid, n)
    cache = SignCache(fam)
    for seq in factory.sequences():
        cfg = factory.configuration(seq)
        L = factory.labeling(seq)
        if check_strong and not strong_check(fam, cfg, cache):
            raise InvariantViolation(f"configuration for {seq} is not strong")
        if factory.decode(L) != seq:
            raise InvariantViolation(f"labeling for {seq} does not decode to its tuples")
        yield seq, L, cfg


def run_factory(fam: Family, seed: SpanningSeed, n: int, m: int, keep: bool = False,
                check_labels: bool = False) -> FactoryResult:
    """Run the factory and certify distinctness by canonical encodings.

    With ``check_labels`` every table lookup is also compared against a
    direct exact labeling of the witness configuration.
    """
    from .counting import canonical_bytes
    from .framework import label_configuration

    formula = lower_bound_count(n, m, fam.d)
    seen = set()
    kept = []
    total = 0
    for seq, L, cfg in generate_labelings(fam, seed, n, m):
        if check_labels and label_configuration(fam, cfg) != L:
            raise InvariantViolation(f"table labeling differs from direct labeling for {seq}")
        seen.add(canonical_bytes(L))
        total += 1
        if keep:
            kept.append((seq, L, cfg))
    return FactoryResult(n, m, fam.d, len(seen), formula, len(seen) == total, True, True, kept)
