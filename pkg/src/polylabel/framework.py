"""Families of algebraically defined edge-labelings.

A :class:`Family` bundles a label set, pair predicates ``P_1..P_k`` in the
variables ``(x_1..x_d, y_1..y_d)``, a sign table ``phi`` and a semialgebraic
domain ``U``.  Points ``a_1..a_n`` in ``U`` label the edge ``ij`` (``i<j``)
with ``phi(sgn P_1(a_i, a_j), ..., sgn P_k(a_i, a_j))``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterator, Mapping, Sequence

from .errors import DomainError, PreconditionError, SearchExhausted
from .poly import (
    Polynomial,
    Sign,
    format_rat,
    sign_of,
    signs_to_str,
    str_to_signs,
    to_point,
)
from .sampling import DEFAULT_BITS, parse_box, sample_in, trial_rng

_SIGN_DIGIT = {Sign.MINUS: 0, Sign.ZERO: 1, Sign.PLUS: 2}
_ALL_SIGNS = (Sign.PLUS, Sign.MINUS, Sign.ZERO)


def sign_vectors(k: int) -> Iterator[tuple[Sign, ...]]:
    return itertools.product(_ALL_SIGNS, repeat=k)


def _sign_index(signs: Sequence[Sign]) -> int:
    idx = 0
    for s in signs:
        idx = idx * 3 + _SIGN_DIGIT[s]
    return idx


@dataclass(frozen=True)
class LabelSet:
    labels: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        if not self.labels:
            raise PreconditionError("label set must be non-empty")
        if len(set(self.labels)) != len(self.labels):
            raise PreconditionError(f"duplicate labels in {self.labels}")

    def index(self, name: str) -> int:
        try:
            return self.labels.index(name)
        except ValueError:
            raise PreconditionError(f"unknown label {name!r}") from None

    def __len__(self):
        return len(self.labels)

    def __getitem__(self, i):
        return self.labels[i]

    def __iter__(self):
        return iter(self.labels)


@dataclass(frozen=True)
class PhiTable:
    """Total map from ``{+,-,0}^k`` to label indices.

    ``defaulted`` records the sign vectors that were filled in from a default
    label rather than given explicitly.
    """

    k: int
    table: tuple[int, ...]
    defaulted: frozenset = frozenset()

    def __post_init__(self):
        if self.k < 1:
            raise PreconditionError("phi needs k >= 1")
        if len(self.table) != 3 ** self.k:
            raise PreconditionError(f"phi table has {len(self.table)} entries, expected {3 ** self.k}")

    def __call__(self, signs: Sequence[Sign]) -> int:
        if len(signs) != self.k:
            raise PreconditionError(f"phi expects {self.k} signs, got {len(signs)}")
        return self.table[_sign_index(signs)]

    @classmethod
    def from_function(cls, k: int, fn: Callable[[tuple[Sign, ...]], int]) -> "PhiTable":
        table = [0] * 3 ** k
        for sv in sign_vectors(k):
            table[_sign_index(sv)] = fn(sv)
        return cls(k, tuple(table))

    @classmethod
    def from_mapping(cls, k: int, labels: LabelSet, mapping: Mapping[str, str], default: str | None = None) -> "PhiTable":
        table: list[int | None] = [None] * 3 ** k
        for key, name in mapping.items():
            sv = str_to_signs(key)
            if len(sv) != k:
                raise PreconditionError(f"sign string {key!r} has length {len(sv)}, expected {k}")
            table[_sign_index(sv)] = labels.index(name)
        defaulted = set()
        for sv in sign_vectors(k):
            i = _sign_index(sv)
            if table[i] is None:
                if default is None:
                    raise PreconditionError(f"phi is undefined on {signs_to_str(sv)} and no default is given")
                table[i] = labels.index(default)
                defaulted.add(sv)
        for i, v in enumerate(table):
            if not 0 <= v < len(labels):
                raise PreconditionError(f"phi entry {i} is not a valid label index")
        return cls(k, tuple(table), frozenset(defaulted))

    def to_mapping(self, labels: LabelSet) -> dict[str, str]:
        return {signs_to_str(sv): labels[self(sv)] for sv in sign_vectors(self.k)}


@dataclass(frozen=True)
class DomainSpec:
    """``U = {x : (sgn Q_1(x), ..., sgn Q_l(x)) in accept}``."""

    d: int
    polys: tuple = ()
    accept: frozenset = frozenset({()})

    def __post_init__(self):
        object.__setattr__(self, "polys", tuple(self.polys))
        object.__setattr__(self, "accept", frozenset(tuple(v) for v in self.accept))
        for q in self.polys:
            if q.num_vars != self.d:
                raise PreconditionError(f"domain polynomial has {q.num_vars} variables, expected {self.d}")
        for v in self.accept:
            if len(v) != len(self.polys):
                raise PreconditionError("accept vectors must have one sign per domain polynomial")

    def signs(self, p) -> tuple[Sign, ...]:
        return tuple(q.sign_at(p) for q in self.polys)

    def contains(self, p) -> bool:
        if len(p) != self.d:
            raise DomainError(f"point has {len(p)} coordinates, domain lives in dimension {self.d}")
        return self.signs(p) in self.accept

    @classmethod
    def whole_space(cls, d: int) -> "DomainSpec":
        return cls(d)


def membership(domain: DomainSpec, p) -> bool:
    return domain.contains(to_point(p))


@dataclass(frozen=True, eq=False)
class Family:
    name: str
    d: int
    labels: LabelSet
    preds: tuple
    phi: PhiTable
    domain: DomainSpec
    meta: Mapping = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "preds", tuple(self.preds))
        if self.phi.k != len(self.preds):
            raise PreconditionError(f"phi takes {self.phi.k} signs but there are {len(self.preds)} predicates")
        if self.domain.d != self.d:
            raise PreconditionError("domain dimension differs from family dimension")
        for s, p in enumerate(self.preds):
            if p.num_vars != 2 * self.d:
                raise PreconditionError(f"predicate {s} has {p.num_vars} variables, expected {2 * self.d}")
            if p.is_zero:
                raise PreconditionError(f"predicate {s} is the zero polynomial")
        if max(self.phi.table) >= len(self.labels):
            raise PreconditionError("phi refers to a label outside the label set")

    @property
    def k(self) -> int:
        return len(self.preds)

    def max_degree(self) -> int:
        return max(p.degree() for p in self.preds)

    def contains(self, p) -> bool:
        return self.domain.contains(p)

    def require(self, p) -> tuple[Fraction, ...]:
        p = to_point(p)
        if not self.domain.contains(p):
            raise DomainError(f"point {tuple(map(str, p))} is outside the domain of {self.name}")
        return p

    def values(self, a, b) -> tuple[Fraction, ...]:
        pt = tuple(a) + tuple(b)
        return tuple(P.eval(pt) for P in self.preds)

    def signs(self, a, b) -> tuple[Sign, ...]:
        return tuple(sign_of(v) for v in self.values(a, b))

    def label_of_signs(self, signs: Sequence[Sign]) -> int:
        return self.phi(signs)

    def label_name(self, index: int) -> str:
        return self.labels[index]


@dataclass(frozen=True)
class Configuration:
    points: tuple

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(to_point(p) for p in self.points))

    @property
    def n(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)

    def drop(self, i: int) -> "Configuration":
        return Configuration(self.points[:i] + self.points[i + 1:])

    def to_json(self) -> list[list[str]]:
        return [[format_rat(x) for x in p] for p in self.points]


def pair_order(n: int) -> list[tuple[int, int]]:
    """Lexicographic list of pairs ``(i, j)``, ``0 <= i < j < n``."""
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


@dataclass(frozen=True)
class EdgeLabeling:
    """Labels of all pairs ``i<j`` in lexicographic order (0-based vertices)."""

    n: int
    labels: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(self.labels) != self.n * (self.n - 1) // 2:
            raise PreconditionError("labeling must cover every pair exactly once")

    def label(self, i: int, j: int) -> int:
        if i == j:
            raise ValueError("no label on the diagonal")
        if i > j:
            i, j = j, i
        # offset of row i in the lexicographic pair list
        return self.labels[i * (2 * self.n - i - 1) // 2 + (j - i - 1)]

    def as_dict(self) -> dict[tuple[int, int], int]:
        return dict(zip(pair_order(self.n), self.labels))

    def restrict(self, keep: Sequence[int]) -> "EdgeLabeling":
        keep = list(keep)
        return EdgeLabeling(len(keep), [self.label(keep[a], keep[b]) for a, b in pair_order(len(keep))])

    def to_json(self, labels: LabelSet) -> dict:
        return {
            "n": self.n,
            "entries": [[i + 1, j + 1, labels[v]] for (i, j), v in zip(pair_order(self.n), self.labels)],
        }

    @classmethod
    def from_json(cls, data: Mapping, labels: LabelSet) -> "EdgeLabeling":
        n = data["n"]
        got = {(i - 1, j - 1): labels.index(name) for i, j, name in data["entries"]}
        try:
            return cls(n, [got[p] for p in pair_order(n)])
        except KeyError as e:
            raise PreconditionError(f"labeling misses pair {e}") from None


class SignCache:
    """Memo of predicate signs for repeated pairs of identical points."""

    def __init__(self, fam: Family):
        self.fam = fam
        self._memo: dict = {}

    def signs(self, a, b) -> tuple[Sign, ...]:
        key = (a, b)
        got = self._memo.get(key)
        if got is None:
            got = self._memo[key] = self.fam.signs(a, b)
        return got


def _signs(fam: Family, a, b, cache: SignCache | None):
    return cache.signs(a, b) if cache is not None else fam.signs(a, b)


def pair_label(fam: Family, a, b) -> int:
    """``phi`` of the exact sign vector of ``(a, b)``; both points must lie in U."""
    a, b = fam.require(a), fam.require(b)
    return fam.phi(fam.signs(a, b))


def label_configuration(fam: Family, cfg: Configuration, cache: SignCache | None = None) -> EdgeLabeling:
    pts = [fam.require(p) for p in cfg.points]
    return EdgeLabeling(
        len(pts), [fam.phi(_signs(fam, pts[i], pts[j], cache)) for i, j in pair_order(len(pts))]
    )


def strong_check(fam: Family, cfg: Configuration, cache: SignCache | None = None) -> bool:
    """True iff every ``P_s(a_i, a_j)``, ``i<j``, is exactly nonzero."""
    pts = [fam.require(p) for p in cfg.points]
    for i, j in pair_order(len(pts)):
        if Sign.ZERO in _signs(fam, pts[i], pts[j], cache):
            return False
    return True


@dataclass(frozen=True)
class SeparationWitness:
    b: tuple
    signs_a: tuple
    signs_a2: tuple
    label_a: int
    label_a2: int

    def verify(self, fam: Family, a, a2) -> bool:
        b = to_point(self.b)
        if not fam.contains(b):
            return False
        sa, sa2 = fam.signs(a, b), fam.signs(a2, b)
        return (
            Sign.ZERO not in sa
            and Sign.ZERO not in sa2
            and fam.phi(sa) != fam.phi(sa2)
            and sa == self.signs_a
            and sa2 == self.signs_a2
        )


def _probe_points(a, a2, scales=(0, 1, 2, 4, 8)):
    d = len(a)
    yield tuple((x + y) / 2 for x, y in zip(a, a2))
    yield a
    yield a2
    for k in scales[1:]:
        h = Fraction(1, 2 ** k)
        for base in (a, a2):
            for c in range(d):
                for sgn in (1, -1):
                    p = list(base)
                    p[c] += sgn * h
                    yield tuple(p)


def separation_witness(
    fam: Family,
    a,
    a2,
    box=None,
    budget: int = 1000,
    seed: int = 0,
    bits: int = DEFAULT_BITS,
) -> SeparationWitness | None:
    """Search for ``b`` in U separating ``a`` from ``a2``.

    Deterministic probes near the two points come first, then rejection
    sampling from ``box``.  ``None`` after the budget is spent means only
    that nothing was found.
    """
    a, a2 = fam.require(a), fam.require(a2)
    if a == a2:
        raise PreconditionError("separation needs two distinct points")

    def check(b):
        if not fam.contains(b):
            return None
        sa, sa2 = fam.signs(a, b), fam.signs(a2, b)
        if Sign.ZERO in sa or Sign.ZERO in sa2:
            return None
        la, la2 = fam.phi(sa), fam.phi(sa2)
        if la == la2:
            return None
        return SeparationWitness(b, sa, sa2, la, la2)

    for b in _probe_points(a, a2):
        w = check(b)
        if w is not None:
            return w
    if box is None:
        box = fam.meta.get("box")
    if box is None:
        return None
    box = parse_box(box, fam.d)
    for t in range(budget):
        rng = trial_rng(seed, t)
        try:
            b = sample_in(rng, box, fam.contains, bits=bits, retries=50)
        except SearchExhausted:
            continue
        w = check(b)
        if w is not None:
            return w
    return None


# -- family spec files -------------------------------------------------------


def family_to_spec(fam: Family, explicit_phi: bool = True) -> dict:
    """Self-describing JSON-ready record of a family.

    With ``explicit_phi`` every sign vector is listed; otherwise defaulted
    entries are folded back into a ``default`` key.
    """
    mapping = fam.phi.to_mapping(fam.labels)
    phi: dict = {}
    if explicit_phi or not fam.phi.defaulted:
        phi.update(mapping)
    else:
        dflt = {fam.labels[fam.phi(sv)] for sv in fam.phi.defaulted}
        if len(dflt) != 1:
            phi.update(mapping)
        else:
            skip = {signs_to_str(sv) for sv in fam.phi.defaulted}
            phi.update({k: v for k, v in mapping.items() if k not in skip})
            phi["default"] = dflt.pop()
    spec = {
        "name": fam.name,
        "d": fam.d,
        "lambda": list(fam.labels),
        "preds": [p.to_json() for p in fam.preds],
        "phi": phi,
        "domain": {
            "polys": [q.to_json() for q in fam.domain.polys],
            "accept": sorted(signs_to_str(v) for v in fam.domain.accept),
        },
    }
    if fam.phi.defaulted:
        spec["phi_defaulted"] = sorted(signs_to_str(sv) for sv in fam.phi.defaulted)
    return spec


def family_from_spec(spec: Mapping) -> Family:
    try:
        d = int(spec["d"])
        labels = LabelSet(tuple(spec["lambda"]))
        preds = [Polynomial.from_json(2 * d, p) for p in spec["preds"]]
        phi_raw = dict(spec["phi"])
        default = phi_raw.pop("default", None)
        phi = PhiTable.from_mapping(len(preds), labels, phi_raw, default)
        dom = spec.get("domain", {})
        polys = [Polynomial.from_json(d, q) for q in dom.get("polys", [])]
        accept = [str_to_signs(s) for s in dom.get("accept", [""] if not polys else [])]
        domain = DomainSpec(d, polys, accept)
    except KeyError as e:
        raise PreconditionError(f"family spec is missing field {e}") from None
    return Family(spec.get("name", "custom"), d, labels, preds, phi, domain)


def save_family(fam: Family, path, explicit_phi: bool = True) -> None:
    Path(path).write_text(json.dumps(family_to_spec(fam, explicit_phi), indent=1, ensure_ascii=False))


def load_family(path) -> Family:
    path = Path(path)
    if not path.exists():
        raise PreconditionError(f"family spec file {path} does not exist")
    return family_from_spec(json.loads(path.read_text()))
