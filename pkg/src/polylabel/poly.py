"""Exact sparse multivariate polynomials over the rationals.

Every sign decision in the package goes through this module.  Coefficients
and evaluation points are :class:`fractions.Fraction`; floats are accepted
only by :meth:`Polynomial.eval_float`, which exists for search heuristics
whose output is re-verified exactly.
"""

from __future__ import annotations

import math
import re
from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

Rat = Fraction

_RAT_RE = re.compile(r"^(-?\d+)(?:/(\d+))?$")


class Sign(Enum):
    MINUS = -1
    ZERO = 0
    PLUS = 1

    @property
    def char(self) -> str:
        return _SIGN_CHARS[self]

    @classmethod
    def from_char(cls, c: str) -> "Sign":
        try:
            return _CHAR_SIGNS[c]
        except KeyError:
            raise ValueError(f"not a sign character: {c!r}") from None

    def __neg__(self) -> "Sign":
        return Sign(-self.value)

    def __str__(self) -> str:
        return self.char


_SIGN_CHARS = {Sign.PLUS: "+", Sign.MINUS: "-", Sign.ZERO: "0"}
_CHAR_SIGNS = {v: k for k, v in _SIGN_CHARS.items()}


def sign_of(v) -> Sign:
    if v > 0:
        return Sign.PLUS
    if v < 0:
        return Sign.MINUS
    return Sign.ZERO


def signs_to_str(signs: Iterable[Sign]) -> str:
    return "".join(s.char for s in signs)


def str_to_signs(s: str) -> tuple[Sign, ...]:
    return tuple(Sign.from_char(c) for c in s)


def to_rat(x) -> Fraction:
    """Coerce ``x`` to an exact rational.

    Accepts ints, Fractions and ``"num/den"`` strings.  Floats are refused so
    that rounding cannot sneak into a sign decision.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("bool is not a rational")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return parse_rat(x)
    raise TypeError(f"cannot convert {type(x).__name__} to an exact rational")


def to_point(values) -> tuple[Fraction, ...]:
    return tuple(to_rat(v) for v in values)


def format_rat(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


def parse_rat(s: str) -> Fraction:
    m = _RAT_RE.match(s.strip())
    if not m:
        raise ValueError(f"malformed rational {s!r}; expected 'num/den'")
    num = int(m.group(1))
    den = int(m.group(2)) if m.group(2) is not None else 1
    if den == 0:
        raise ValueError(f"zero denominator in {s!r}")
    return Fraction(num, den)


class Polynomial:
    """Sparse polynomial in ``num_vars`` variables with rational coefficients.

    Terms map dense exponent tuples to nonzero :class:`Fraction` coefficients.
    Instances are immutable; arithmetic returns new objects.
    """

    __slots__ = ("num_vars", "_terms", "_compiled", "_hash")

    def __init__(self, num_vars: int, terms: Mapping | Iterable = ()):
        if num_vars < 0:
            raise ValueError("num_vars must be non-negative")
        self.num_vars = num_vars
        acc: dict[tuple[int, ...], Fraction] = {}
        items = terms.items() if isinstance(terms, Mapping) else terms
        for exps, c in items:
            exps = tuple(int(e) for e in exps)
            if len(exps) != num_vars:
                raise ValueError(f"exponent vector {exps} has length {len(exps)}, expected {num_vars}")
            if any(e < 0 for e in exps):
                raise ValueError(f"negative exponent in {exps}")
            c = to_rat(c)
            if c:
                acc[exps] = acc.get(exps, Fraction(0)) + c
        self._terms = {e: c for e, c in acc.items() if c}
        self._compiled = None
        self._hash = None

    # -- constructors -----------------------------------------------------

    @classmethod
    def zero(cls, num_vars: int) -> "Polynomial":
        return cls(num_vars)

    @classmethod
    def constant(cls, num_vars: int, c) -> "Polynomial":
        return cls(num_vars, {(0,) * num_vars: c})

    @classmethod
    def variable(cls, num_vars: int, i: int) -> "Polynomial":
        if not 0 <= i < num_vars:
            raise IndexError(f"variable index {i} out of range for {num_vars} variables")
        e = [0] * num_vars
        e[i] = 1
        return cls(num_vars, {tuple(e): 1})

    @classmethod
    def variables(cls, num_vars: int) -> list["Polynomial"]:
        return [cls.variable(num_vars, i) for i in range(num_vars)]

    @classmethod
    def _raw(cls, num_vars: int, terms: dict) -> "Polynomial":
        # trusted fast path: terms already clean
        p = cls.__new__(cls)
        p.num_vars = num_vars
        p._terms = terms
        p._compiled = None
        p._hash = None
        return p

    # -- inspection -------------------------------------------------------

    @property
    def terms(self) -> dict[tuple[int, ...], Fraction]:
        return dict(self._terms)

    def items(self):
        return sorted(self._terms.items())

    def __len__(self) -> int:
        return len(self._terms)

    @property
    def is_zero(self) -> bool:
        return not self._terms

    def degree(self) -> int:
        """Total degree; constants have degree 0 and the zero polynomial -1."""
        if not self._terms:
            return -1
        return max(sum(e) for e in self._terms)

    def degree_in(self, variables: Iterable[int]) -> int:
        """Largest combined degree in the given subset of variables."""
        idx = list(variables)
        if not self._terms:
            return -1
        return max(sum(e[i] for i in idx) for e in self._terms)

    def is_constant(self) -> bool:
        return all(not any(e) for e in self._terms)

    def __eq__(self, other) -> bool:
        if isinstance(other, Polynomial):
            return self.num_vars == other.num_vars and self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self == Polynomial.constant(self.num_vars, other)
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.num_vars, frozenset(self._terms.items())))
        return self._hash

    def __repr__(self) -> str:
        return f"Polynomial({self.num_vars}, {self.to_str()})"

    def to_str(self, names: Sequence[str] | None = None) -> str:
        if not self._terms:
            return "0"
        names = names or [f"v{i}" for i in range(self.num_vars)]
        parts = []
        for exps, c in sorted(self._terms.items(), reverse=True):
            mono = "*".join(
                names[i] if e == 1 else f"{names[i]}^{e}" for i, e in enumerate(exps) if e
            )
            if not mono:
                parts.append(str(c))
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append(f"-{mono}")
            else:
                parts.append(f"{c}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")

    # -- arithmetic -------------------------------------------------------

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.num_vars != self.num_vars:
                raise ValueError(f"variable count mismatch: {self.num_vars} vs {other.num_vars}")
            return other
        return Polynomial.constant(self.num_vars, other)

    def __add__(self, other) -> "Polynomial":
        other = self._coerce(other)
        out = dict(self._terms)
        for e, c in other._terms.items():
            v = out.get(e, 0) + c
            if v:
                out[e] = v
            else:
                out.pop(e, None)
        return Polynomial._raw(self.num_vars, out)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial._raw(self.num_vars, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other) -> "Polynomial":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Polynomial":
        return self._coerce(other) - self

    def __mul__(self, other) -> "Polynomial":
        if not isinstance(other, Polynomial):
            c = to_rat(other)
            if not c:
                return Polynomial.zero(self.num_vars)
            return Polynomial._raw(self.num_vars, {e: v * c for e, v in self._terms.items()})
        other = self._coerce(other)
        out: dict = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                e = tuple(x + y for x, y in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return Polynomial._raw(self.num_vars, {e: c for e, c in out.items() if c})

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "Polynomial":
        if k < 0:
            raise ValueError("negative powers are not polynomials")
        result = Polynomial.constant(self.num_vars, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    # -- evaluation -------------------------------------------------------

    def _compile(self):
        if self._compiled is None:
            den = 1
            for c in self._terms.values():
                den = math.lcm(den, c.denominator)
            top = self.degree()
            rows = []
            for exps, c in self._terms.items():
                nz = tuple((i, e) for i, e in enumerate(exps) if e)
                rows.append((c.numerator * (den // c.denominator), nz, top - sum(exps)))
            self._compiled = (den, max(top, 0), rows)
        return self._compiled

    def _check_point(self, point) -> tuple:
        if len(point) != self.num_vars:
            raise ValueError(f"point has {len(point)} coordinates, polynomial has {self.num_vars} variables")
        return point

    def eval(self, point: Sequence) -> Fraction:
        """Exact value at a rational point."""
        point = self._check_point(point)
        if not self._terms:
            return Fraction(0)
        den, top, rows = self._compile()
        # clear denominators: x_i = X_i / L, so a term of degree t picks up L^(top-t)
        L = 1
        for x in point:
            L = math.lcm(L, to_rat(x).denominator)
        X = [x.numerator * (L // x.denominator) for x in map(to_rat, point)]
        lpow = [1] * (top + 1)
        for i in range(1, top + 1):
            lpow[i] = lpow[i - 1] * L
        total = 0
        for c, nz, deficit in rows:
            t = c * lpow[deficit]
            for i, e in nz:
                t *= X[i] ** e if e > 1 else X[i]
            total += t
        return Fraction(total, den * lpow[top])

    def eval_float(self, point: Sequence[float]) -> float:
        point = self._check_point(point)
        total = 0.0
        for exps, c in self._terms.items():
            t = float(c)
            for x, e in zip(point, exps):
                if e:
                    t *= x ** e
            total += t
        return total

    def sign_at(self, point: Sequence) -> Sign:
        return sign_of(self.eval(point))

    def diff(self, i: int) -> "Polynomial":
        if not 0 <= i < self.num_vars:
            raise IndexError(f"variable index {i} out of range")
        out = {}
        for exps, c in self._terms.items():
            e = exps[i]
            if e:
                ne = list(exps)
                ne[i] = e - 1
                out[tuple(ne)] = c * e
        return Polynomial._raw(self.num_vars, out)

    def gradient(self, point: Sequence) -> tuple[Fraction, ...]:
        self._check_point(point)
        return tuple(self.diff(i).eval(point) for i in range(self.num_vars))

    def hessian(self) -> list[list["Polynomial"]]:
        firsts = [self.diff(i) for i in range(self.num_vars)]
        return [[f.diff(j) for j in range(self.num_vars)] for f in firsts]

    # -- composition ------------------------------------------------------

    def compose(self, subs: Sequence["Polynomial"]) -> "Polynomial":
        """Substitute ``subs[i]`` for variable ``i``.

        All substitutes must share one variable count, which becomes the
        variable count of the result.
        """
        if len(subs) != self.num_vars:
            raise ValueError(f"need {self.num_vars} substitutes, got {len(subs)}")
        if not subs:
            return self
        nv = subs[0].num_vars
        if any(s.num_vars != nv for s in subs):
            raise ValueError("substitutes must share a variable count")
        powers: dict[tuple[int, int], Polynomial] = {}

        def power(i, e):
            key = (i, e)
            if key not in powers:
                powers[key] = subs[i] if e == 1 else power(i, e - 1) * subs[i]
            return powers[key]

        result = Polynomial.zero(nv)
        for exps, c in self._terms.items():
            t = Polynomial.constant(nv, c)
            for i, e in enumerate(exps):
                if e:
                    t = t * power(i, e)
            result = result + t
        return result

    def fix(self, values: Mapping[int, object]) -> "Polynomial":
        """Plug rational values into some variables, keeping ``num_vars``."""
        vals = {i: to_rat(v) for i, v in values.items()}
        out: dict = {}
        for exps, c in self._terms.items():
            ne = list(exps)
            for i, v in vals.items():
                if ne[i]:
                    c = c * v ** ne[i]
                    ne[i] = 0
            if c:
                k = tuple(ne)
                out[k] = out.get(k, 0) + c
        return Polynomial._raw(self.num_vars, {e: c for e, c in out.items() if c})

    def restrict_line(self, base: Sequence, direction: Sequence) -> list[Fraction]:
        """Coefficients ``[c0, c1, ...]`` of ``t -> P(base + t*direction)``."""
        self._check_point(base)
        self._check_point(direction)
        if not self._terms:
            return []
        deg = self.degree()
        base = to_point(base)
        direction = to_point(direction)
        # interpolate through deg+1 integer nodes; exact Lagrange in the monomial basis
        nodes = list(range(deg + 1))
        vals = [self.eval([b + t * d for b, d in zip(base, direction)]) for t in nodes]
        coeffs = _interpolate(nodes, vals)
        while coeffs and coeffs[-1] == 0:
            coeffs.pop()
        return coeffs

    # -- interval bounds --------------------------------------------------

    def eval_interval(self, box: Sequence[tuple]) -> tuple[Fraction, Fraction]:
        """Rational enclosure of the range of the polynomial over a box."""
        self._check_point(box)
        lo_sum = Fraction(0)
        hi_sum = Fraction(0)
        for exps, c in self._terms.items():
            lo, hi = Fraction(c), Fraction(c)
            for (blo, bhi), e in zip(box, exps):
                if e:
                    plo, phi = _ipow(to_rat(blo), to_rat(bhi), e)
                    cands = (lo * plo, lo * phi, hi * plo, hi * phi)
                    lo, hi = min(cands), max(cands)
            lo_sum += lo
            hi_sum += hi
        return lo_sum, hi_sum

    # -- serialization ----------------------------------------------------

    def to_json(self) -> list[dict]:
        return [{"exponents": list(e), "coeff": format_rat(c)} for e, c in self.items()]

    @classmethod
    def from_json(cls, num_vars: int, data: Iterable[Mapping]) -> "Polynomial":
        return cls(num_vars, [(tuple(t["exponents"]), parse_rat(t["coeff"])) for t in data])


def _ipow(lo: Fraction, hi: Fraction, e: int) -> tuple[Fraction, Fraction]:
    a, b = lo ** e, hi ** e
    if e % 2 == 0 and lo <= 0 <= hi:
        return Fraction(0), max(a, b)
    return min(a, b), max(a, b)


def _interpolate(nodes: list[int], vals: list[Fraction]) -> list[Fraction]:
    # Newton divided differences, then expand to monomial coefficients
    n = len(nodes)
    coef = list(vals)
    for j in range(1, n):
        for i in range(n - 1, j - 1, -1):
            coef[i] = (coef[i] - coef[i - 1]) / (nodes[i] - nodes[i - j])
    poly = [Fraction(0)] * n
    for k in range(n - 1, -1, -1):
        # poly = poly * (t - nodes[k]) + coef[k]
        shifted = [Fraction(0)] + poly[:-1]
        poly = [s - nodes[k] * p for s, p in zip(shifted, poly)]
        poly[0] += coef[k]
    return poly


def evaluate(P: Polynomial, point: Sequence) -> Fraction:
    return P.eval(point)


def gradient_split(P: Polynomial, a: Sequence, b: Sequence) -> tuple[tuple[Fraction, ...], tuple[Fraction, ...]]:
    """Exact partial derivatives at ``(a, b)`` split into the x- and y-blocks."""
    if P.num_vars != len(a) + len(b):
        raise ValueError(f"polynomial has {P.num_vars} variables, point has {len(a)}+{len(b)}")
    g = P.gradient(tuple(a) + tuple(b))
    return g[: len(a)], g[len(a):]


def pair_variables(d: int) -> tuple[list[Polynomial], list[Polynomial]]:
    """Variables ``x_1..x_d`` and ``y_1..y_d`` of a pair predicate."""
    vs = Polynomial.variables(2 * d)
    return vs[:d], vs[d:]


def rational_sqrt_upper(q: Fraction, bits: int = 20) -> Fraction:
    """A rational ``r >= sqrt(q)`` within ``2**-bits`` relative-ish slack."""
    if q < 0:
        raise ValueError("negative argument")
    if q == 0:
        return Fraction(0)
    scale = 4 ** bits
    n = q.numerator * scale
    d = q.denominator
    # sqrt(n/d) = sqrt(n*d)/d
    r = math.isqrt(n * d)
    if r * r < n * d:
        r += 1
    return Fraction(r, d * 2 ** bits)


def rational_sqrt(q: Fraction) -> Fraction | None:
    """Exact square root when ``q`` is the square of a rational, else None."""
    if q < 0:
        return None
    rn, rd = math.isqrt(q.numerator), math.isqrt(q.denominator)
    if rn * rn == q.numerator and rd * rd == q.denominator:
        return Fraction(rn, rd)
    return None


class PolyExpr:
    """A polynomial kept as an unexpanded arithmetic DAG.

    Used where full expansion is prohibitively large (the circle-linking
    kernel expands to ~2e5 terms).  Evaluation, gradients and interval
    bounds work on the DAG directly and stay exact; :meth:`expand` produces
    the equivalent :class:`Polynomial` on demand.
    """

    __slots__ = ("op", "args", "num_vars", "_deg")

    def __init__(self, op: str, args: tuple, num_vars: int):
        self.op = op
        self.args = args
        self.num_vars = num_vars
        self._deg = None

    @classmethod
    def leaf(cls, p: Polynomial) -> "PolyExpr":
        return cls("leaf", (p,), p.num_vars)

    @classmethod
    def variables(cls, num_vars: int) -> list["PolyExpr"]:
        return [cls.leaf(v) for v in Polynomial.variables(num_vars)]

    def _wrap(self, other) -> "PolyExpr":
        if isinstance(other, PolyExpr):
            if other.num_vars != self.num_vars:
                raise ValueError("variable count mismatch")
            return other
        if isinstance(other, Polynomial):
            return PolyExpr.leaf(other)
        return PolyExpr.leaf(Polynomial.constant(self.num_vars, other))

    def __add__(self, other):
        return PolyExpr("add", (self, self._wrap(other)), self.num_vars)

    __radd__ = __add__

    def __neg__(self):
        return PolyExpr("neg", (self,), self.num_vars)

    def __sub__(self, other):
        return self + (-self._wrap(other))

    def __rsub__(self, other):
        return self._wrap(other) - self

    def __mul__(self, other):
        return PolyExpr("mul", (self, self._wrap(other)), self.num_vars)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative powers are not polynomials")
        return PolyExpr("pow", (self, k), self.num_vars)

    def degree(self) -> int:
        """Structural degree: an upper bound that is exact absent cancellation."""
        if self._deg is None:
            op, args = self.op, self.args
            if op == "leaf":
                d = args[0].degree()
            elif op == "add":
                d = max(args[0].degree(), args[1].degree())
            elif op == "neg":
                d = args[0].degree()
            elif op == "mul":
                d1, d2 = args[0].degree(), args[1].degree()
                d = -1 if min(d1, d2) < 0 else d1 + d2
            else:
                d0 = args[0].degree()
                d = 0 if args[1] == 0 else (-1 if d0 < 0 else d0 * args[1])
            self._deg = d
        return self._deg

    def _walk(self, leaf_fn, memo, add, neg, mul, pw):
        key = id(self)
        if key in memo:
            return memo[key]
        op, args = self.op, self.args
        if op == "leaf":
            v = leaf_fn(args[0])
        elif op == "add":
            v = add(args[0]._walk(leaf_fn, memo, add, neg, mul, pw), args[1]._walk(leaf_fn, memo, add, neg, mul, pw))
        elif op == "neg":
            v = neg(args[0]._walk(leaf_fn, memo, add, neg, mul, pw))
        elif op == "mul":
            v = mul(args[0]._walk(leaf_fn, memo, add, neg, mul, pw), args[1]._walk(leaf_fn, memo, add, neg, mul, pw))
        else:
            v = pw(args[0]._walk(leaf_fn, memo, add, neg, mul, pw), args[1])
        memo[key] = v
        return v

    def eval(self, point: Sequence) -> Fraction:
        if len(point) != self.num_vars:
            raise ValueError(f"point has {len(point)} coordinates, polynomial has {self.num_vars} variables")
        point = to_point(point)
        return self._walk(
            lambda p: p.eval(point), {},
            lambda x, y: x + y, lambda x: -x, lambda x, y: x * y, lambda x, k: x ** k,
        )

    def eval_float(self, point: Sequence[float]) -> float:
        return self._walk(
            lambda p: p.eval_float(point), {},
            lambda x, y: x + y, lambda x: -x, lambda x, y: x * y, lambda x, k: x ** k,
        )

    def sign_at(self, point: Sequence) -> Sign:
        return sign_of(self.eval(point))

    def gradient(self, point: Sequence) -> tuple[Fraction, ...]:
        """Forward-mode exact gradient."""
        if len(point) != self.num_vars:
            raise ValueError("dimension mismatch")
        point = to_point(point)

        def leaf(p):
            return p.eval(point), p.gradient(point)

        def add(x, y):
            return x[0] + y[0], tuple(u + v for u, v in zip(x[1], y[1]))

        def neg(x):
            return -x[0], tuple(-u for u in x[1])

        def mul(x, y):
            return x[0] * y[0], tuple(x[0] * v + y[0] * u for u, v in zip(x[1], y[1]))

        def pw(x, k):
            if k == 0:
                return Fraction(1), tuple(Fraction(0) for _ in x[1])
            f = k * x[0] ** (k - 1)
            return x[0] ** k, tuple(f * u for u in x[1])

        return self._walk(leaf, {}, add, neg, mul, pw)[1]

    def eval_interval(self, box: Sequence[tuple]) -> tuple[Fraction, Fraction]:
        def mul(x, y):
            c = (x[0] * y[0], x[0] * y[1], x[1] * y[0], x[1] * y[1])
            return min(c), max(c)

        return self._walk(
            lambda p: p.eval_interval(box), {},
            lambda x, y: (x[0] + y[0], x[1] + y[1]),
            lambda x: (-x[1], -x[0]),
            mul,
            lambda x, k: _ipow(x[0], x[1], k) if k else (Fraction(1), Fraction(1)),
        )

    def expand(self) -> Polynomial:
        return self._walk(
            lambda p: p, {},
            lambda x, y: x + y, lambda x: -x, lambda x, y: x * y, lambda x, k: x ** k,
        )

    @property
    def is_zero(self) -> bool:
        if self.degree() < 0:
            return True
        # a nonzero value anywhere settles it; otherwise fall back to expansion
        for probe in (range(1, self.num_vars + 1), [2 * i + 3 for i in range(self.num_vars)]):
            if self.eval([Fraction(v, 7) for v in probe]):
                return False
        return self.expand().is_zero

    def restrict_line(self, base: Sequence, direction: Sequence) -> list[Fraction]:
        deg = self.degree()
        if deg < 0:
            return []
        base, direction = to_point(base), to_point(direction)
        nodes = list(range(deg + 1))
        vals = [self.eval([b + t * d for b, d in zip(base, direction)]) for t in nodes]
        coeffs = _interpolate(nodes, vals)
        while coeffs and coeffs[-1] == 0:
            coeffs.pop()
        return coeffs

    def degree_in(self, variables: Iterable[int]) -> int:
        idx = set(variables)

        def leaf(p):
            return p.degree_in(idx)

        return self._walk(
            leaf, {}, max, lambda x: x,
            lambda x, y: -1 if min(x, y) < 0 else x + y,
            lambda x, k: 0 if k == 0 else x * k,
        )

    def diff(self, i: int) -> Polynomial:
        return self.expand().diff(i)

    def to_json(self) -> list[dict]:
        return self.expand().to_json()

    def __repr__(self) -> str:
        return f"PolyExpr({self.num_vars} vars, degree<={self.degree()})"
