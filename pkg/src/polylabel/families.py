"""Built-in geometric families and independent reference oracles.

Each builtin is a :class:`~polylabel.framework.Family` whose predicates are
the polynomial encodings of a geometric relation.  The oracles compute the
same relation by direct geometry (never through the predicates) so the two
can be compared.

Conventions: disks and balls are open; intervals, boxes, segments and the
disks of containment orders are closed.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import PreconditionError
from .framework import DomainSpec, Family, LabelSet, PhiTable, family_to_spec
from .poly import Polynomial, PolyExpr, Sign, pair_variables, to_point
from .sampling import DEFAULT_BITS, DEFAULT_RETRIES, parse_box, sample_in

EDGE, NON_EDGE = "edge", "non-edge"
PREC, SUCC, INCOMP = "≺", "≻", "incomparable"
LINK, NO_LINK = "link", "no-link"
INCONCLUSIVE = "inconclusive"

GRAPH_LABELS = LabelSet((EDGE, NON_EDGE))
ORDER_LABELS = LabelSet((PREC, SUCC, INCOMP))
LINK_LABELS = LabelSet((LINK, NO_LINK))

P, M, Z = Sign.PLUS, Sign.MINUS, Sign.ZERO

_PARAMETRIC = {"BALLS", "UNIT_BALLS", "BOXES", "BALL_ORDERS", "POSET_DIM"}
_PLAIN = {"DISKS", "UNIT_DISKS", "INTERVALS", "SEGMENTS", "CIRCLE_LINKS", "UNIT_CIRCLE_LINKS", "CIRCLE_ORDERS"}
BUILTIN_NAMES = tuple(sorted(_PLAIN | _PARAMETRIC))

_ID_RE = re.compile(r"^([A-Z_]+)(?:[:(](\d+)\)?)?$")


def parse_builtin_id(text: str) -> tuple[str, int | None]:
    """``"BALLS:3"`` or ``"BALLS(3)"`` -> ``("BALLS", 3)``."""
    m = _ID_RE.match(text.strip().upper())
    if not m:
        raise PreconditionError(f"malformed family id {text!r}")
    name, param = m.group(1), m.group(2)
    param = int(param) if param is not None else None
    if name not in _PLAIN and name not in _PARAMETRIC:
        raise PreconditionError(f"unknown builtin family {name!r}; known: {', '.join(BUILTIN_NAMES)}")
    if name in _PARAMETRIC and param is None:
        raise PreconditionError(f"{name} needs a parameter, e.g. {name}:2")
    if name in _PLAIN and param is not None:
        raise PreconditionError(f"{name} takes no parameter")
    if param is not None and param < 1:
        raise PreconditionError(f"{name} parameter must be >= 1")
    return name, param


def builtin_id_str(name: str, param: int | None) -> str:
    return name if param is None else f"{name}({param})"


def _positive(d, idx):
    # domain {x_i > 0 for i in idx}
    polys = [Polynomial.variable(d, i) for i in idx]
    return DomainSpec(d, polys, [(P,) * len(polys)])


def _graph_phi(k, edge_if):
    return PhiTable.from_function(k, lambda sv: 0 if edge_if(sv) else 1)


def _finish(name, param, d, labels, preds, phi, domain, box, **meta):
    meta.update(builtin=name, param=param, box=box)
    return Family(builtin_id_str(name, param), d, labels, preds, phi, domain, meta)


def _balls(m):
    d = m + 1
    x, y = pair_variables(d)
    P1 = sum(((x[i] - y[i]) ** 2 for i in range(m)), Polynomial.zero(2 * d)) - (x[m] + y[m]) ** 2
    return d, [P1], _graph_phi(1, lambda sv: sv[0] == M), _positive(d, [m])


def _unit_balls(m):
    x, y = pair_variables(m)
    P1 = sum(((x[i] - y[i]) ** 2 for i in range(m)), Polynomial.zero(2 * m)) - 4
    return m, [P1], _graph_phi(1, lambda sv: sv[0] == M), DomainSpec.whole_space(m)


def _boxes(m):
    # point layout (l_1, h_1, ..., l_m, h_m)
    d = 2 * m
    x, y = pair_variables(d)
    preds = []
    for i in range(m):
        lo, hi, lo2, hi2 = x[2 * i], x[2 * i + 1], y[2 * i], y[2 * i + 1]
        preds += [hi2 - lo, hi - lo2]
    polys = [Polynomial.variable(d, 2 * i + 1) - Polynomial.variable(d, 2 * i) for i in range(m)]
    dom = DomainSpec(d, polys, [(P,) * m])
    return d, preds, _graph_phi(2 * m, lambda sv: M not in sv), dom


def _segment_edge(sv):
    A, F1, F2, F3, F4, G1, G2 = sv
    if A == P:
        return M not in (F1, F2, F3, F4)
    if A == M:
        return P not in (F1, F2, F3, F4)
    # parallel: when A = 0 every F equals B, so F1 = 0 means same line
    return F1 == Z and M not in (G1, G2)


def _segments():
    # (alpha, beta, gamma, delta): y = alpha*x + beta on gamma <= x <= delta
    x, y = pair_variables(4)
    al, be, ga, de = x
    al2, be2, ga2, de2 = y
    A = al - al2
    B = be2 - be
    preds = [A, B - ga * A, B - ga2 * A, de * A - B, de2 * A - B, de2 - ga, de - ga2]
    dom = DomainSpec(4, [Polynomial.variable(4, 3) - Polynomial.variable(4, 2)], [(P,)])
    return 4, preds, PhiTable.from_function(7, lambda sv: 0 if _segment_edge(sv) else 1), dom


def _ball_orders(m):
    d = m + 1
    x, y = pair_variables(d)
    P1 = (x[m] - y[m]) ** 2 - sum(((x[i] - y[i]) ** 2 for i in range(m)), Polynomial.zero(2 * d))
    P2 = x[m] - y[m]
    mapping = {"+-": PREC, "0-": PREC, "++": SUCC, "0+": SUCC, "-+": INCOMP, "-0": INCOMP, "--": INCOMP}
    # (+,0) and (0,0) only occur for coincident disks; they default to incomparable
    phi = PhiTable.from_mapping(2, ORDER_LABELS, mapping, default=INCOMP)
    return d, [P1, P2], phi, _positive(d, [m])


def _poset_phi(sv):
    if all(s != M for s in sv) and any(s == P for s in sv):
        return 0
    if all(s != P for s in sv) and any(s == M for s in sv):
        return 1
    return 2


def _poset_dim(d):
    x, y = pair_variables(d)
    preds = [y[s] - x[s] for s in range(d)]
    return d, preds, PhiTable.from_function(d, _poset_phi), DomainSpec.whole_space(d)


def _intervals():
    x, y = pair_variables(2)
    preds = [y[1] - x[0], x[1] - y[0]]
    dom = DomainSpec(2, [Polynomial.variable(2, 1) - Polynomial.variable(2, 0)], [(P,)])
    return 2, preds, _graph_phi(2, lambda sv: M not in sv), dom


# -- circle linking -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LinkingKernel:
    """Polynomials deciding whether two circles in R^3 are linked.

    A circle is ``(a, b, c, d, e, r)``: center ``(a, b, c)``, plane normal
    ``(d, e, 1)``, radius ``r``.  ``L = (p1, p2, p3)/q`` is the foot of the
    center on the intersection line of the two planes; ``p4 = q^2 h`` where
    ``h`` is the squared half-chord; the circles link iff ``F > 0``.
    """

    unit: bool
    q: Polynomial
    p1: Polynomial
    p2: Polynomial
    p3: Polynomial
    p4: Polynomial
    W: Polynomial
    V: Polynomial
    F: PolyExpr

    @property
    def d(self) -> int:
        return 5 if self.unit else 6

    @property
    def predicates(self) -> list:
        nv = 2 * self.d
        dd = Polynomial.variable(nv, 3) - Polynomial.variable(nv, self.d + 3)
        de = Polynomial.variable(nv, 4) - Polynomial.variable(nv, self.d + 4)
        return [dd, de, self.p4, self.F]


def _build_kernel(unit: bool) -> LinkingKernel:
    d = 5 if unit else 6
    x, y = pair_variables(d)
    one = Polynomial.constant(2 * d, 1)
    a, b, c, dn, en = x[:5]
    a2, b2, c2, dn2, en2 = y[:5]
    r = one if unit else x[5]
    r2 = one if unit else y[5]
    dd, de = dn - dn2, en - en2
    cr = dn * en2 - dn2 * en
    q = dd ** 2 + de ** 2 + cr ** 2
    # direction of the line through the center, inside the plane, orthogonal to the intersection line
    tau = (-dd - en * cr, -de + dn * cr, en * de + dn * dd)
    den = dn2 * tau[0] + en2 * tau[1] + tau[2]
    if den != q:
        raise AssertionError("foot-point denominator does not reduce to q")
    num_t = dn2 * (a2 - a) + en2 * (b2 - b) + (c2 - c)
    center = (a, b, c)
    p = [q * center[i] + num_t * tau[i] for i in range(3)]
    tau_sq = tau[0] ** 2 + tau[1] ** 2 + tau[2] ** 2
    p4 = r ** 2 * q ** 2 - num_t ** 2 * tau_sq
    u = (p[0] - q * a2, p[1] - q * b2, p[2] - q * c2)
    W = u[0] * de - u[1] * dd + u[2] * cr
    V = (
        q * u[0] ** 2 + p4 * de ** 2
        + q * u[1] ** 2 + p4 * dd ** 2
        + q * u[2] ** 2 + p4 * cr ** 2
        - q ** 3 * r2 ** 2
    )
    # F expands to ~2e5 terms; keep it as a DAG
    P4, Q, Wx, Vx = (PolyExpr.leaf(t) for t in (p4, q, W, V))
    F = 4 * P4 * Q * Wx ** 2 - Vx ** 2
    return LinkingKernel(unit, q, p[0], p[1], p[2], p4, W, V, F)


@lru_cache(maxsize=2)
def linking_kernel(unit: bool = False) -> LinkingKernel:
    return _build_kernel(unit)


def _link_phi():
    def fn(sv):
        s1, s2, s3, s4 = sv
        if s1 == Z and s2 == Z:
            return 1
        return 0 if (s3 == P and s4 == P) else 1

    return PhiTable.from_function(4, fn)


def _circle_links(unit):
    kern = linking_kernel(unit)
    d = kern.d
    dom = DomainSpec.whole_space(d) if unit else _positive(d, [5])
    return d, kern.predicates, _link_phi(), dom


@dataclass(frozen=True)
class LinkDecision:
    label: str
    signs: tuple
    boundary: bool


def linking_predicate(c1, c2, unit: bool = False) -> LinkDecision:
    """Exact link/no-link decision for two circles.

    ``boundary`` is set when ``p4`` or ``F`` vanishes or the planes are
    parallel; the label is then the sign table's value but may not
    describe the geometry.
    """
    kern = linking_kernel(unit)
    c1, c2 = to_point(c1), to_point(c2)
    if len(c1) != kern.d or len(c2) != kern.d:
        raise PreconditionError(f"circles need {kern.d} coordinates")
    if not unit and (c1[5] <= 0 or c2[5] <= 0):
        raise PreconditionError("circle radius must be positive")
    pt = c1 + c2
    signs = tuple(p.sign_at(pt) for p in kern.predicates)
    label = LINK_LABELS[_link_phi()(signs)]
    boundary = (signs[0] == Z and signs[1] == Z) or Z in signs[2:]
    return LinkDecision(label, signs, boundary)


# -- registry -----------------------------------------------------------------

_DEFAULT_BOX = {
    "DISKS": [(-4, 4), (-4, 4), (0, 3)],
    "INTERVALS": [(-4, 4)] * 2,
    "SEGMENTS": [(-2, 2), (-2, 2), (-3, 3), (-3, 3)],
    "CIRCLE_LINKS": [(-1, 1), (-1, 1), (-1, 1), (-1, 1), (-1, 1), (0, 2)],
    "UNIT_CIRCLE_LINKS": [(-3 / 2, 3 / 2)] * 3 + [(-1, 1)] * 2,
    "CIRCLE_ORDERS": [(-3, 3), (-3, 3), (0, 4)],
}


def _default_box(name, param, d):
    if name in _DEFAULT_BOX:
        box = _DEFAULT_BOX[name]
    elif name == "BALLS":
        box = [(-4, 4)] * param + [(0, 3)]
    elif name == "UNIT_BALLS" or name == "UNIT_DISKS":
        box = [(-4, 4)] * d
    elif name == "BOXES":
        box = [(-4, 4)] * d
    elif name == "BALL_ORDERS":
        box = [(-3, 3)] * param + [(0, 4)]
    else:
        box = [(-4, 4)] * d
    return tuple((Fraction(lo).limit_denominator(), Fraction(hi).limit_denominator()) for lo, hi in box)


def builtin(spec, param: int | None = None) -> Family:
    """Construct a builtin family from an id like ``"DISKS"`` or ``"BALLS:3"``."""
    if param is None:
        name, param = parse_builtin_id(spec)
    else:
        name, _ = parse_builtin_id(spec.split(":")[0].split("(")[0] + f":{param}")
    return _builtin_cached(name, param)


@lru_cache(maxsize=None)
def _builtin_cached(name, param):
    if name == "DISKS":
        d, preds, phi, dom = _balls(2)
    elif name == "BALLS":
        d, preds, phi, dom = _balls(param)
    elif name == "UNIT_DISKS":
        d, preds, phi, dom = _unit_balls(2)
    elif name == "UNIT_BALLS":
        d, preds, phi, dom = _unit_balls(param)
    elif name == "INTERVALS":
        d, preds, phi, dom = _intervals()
    elif name == "SEGMENTS":
        d, preds, phi, dom = _segments()
    elif name == "BOXES":
        d, preds, phi, dom = _boxes(param)
    elif name == "CIRCLE_LINKS":
        d, preds, phi, dom = _circle_links(False)
    elif name == "UNIT_CIRCLE_LINKS":
        d, preds, phi, dom = _circle_links(True)
    elif name == "BALL_ORDERS":
        d, preds, phi, dom = _ball_orders(param)
    elif name == "CIRCLE_ORDERS":
        d, preds, phi, dom = _ball_orders(2)
    else:
        d, preds, phi, dom = _poset_dim(param)
    if name in ("BALL_ORDERS", "CIRCLE_ORDERS", "POSET_DIM"):
        labels = ORDER_LABELS
    elif name in ("CIRCLE_LINKS", "UNIT_CIRCLE_LINKS"):
        labels = LINK_LABELS
    else:
        labels = GRAPH_LABELS
    ordered = name == "INTERVALS" or (name == "POSET_DIM" and param == 1)
    return _finish(
        name, param, d, labels, preds, phi, dom, _default_box(name, param, d),
        order_type_determined=ordered,
    )


def export_builtin(fam: Family, explicit_phi: bool = True) -> dict:
    """Family spec record.  For the linking families this expands ``F`` (slow)."""
    return family_to_spec(fam, explicit_phi)


# -- sampling ---------------------------------------------------------------------


def random_point(fam: Family, rng, box=None, bits: int = DEFAULT_BITS, retries: int = DEFAULT_RETRIES):
    """Dyadic rational point of ``box`` inside the domain, by rejection."""
    if box is None:
        box = fam.meta.get("box")
        if box is None:
            raise PreconditionError(f"family {fam.name} has no default box; pass one")
    box = parse_box(box, fam.d)
    return sample_in(rng, box, fam.contains, bits=bits, retries=retries)


# -- oracles ------------------------------------------------------------------------


def _orient(p, q, r):
    v = (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
    return (v > 0) - (v < 0)


def _on_segment(p, q, r):
    # r collinear with p, q: is it within their bounding box
    return min(p[0], q[0]) <= r[0] <= max(p[0], q[0]) and min(p[1], q[1]) <= r[1] <= max(p[1], q[1])


def segments_intersect(p1, p2, q1, q2) -> bool:
    """Closed segment intersection by exact orientation tests."""
    o1, o2 = _orient(p1, p2, q1), _orient(p1, p2, q2)
    o3, o4 = _orient(q1, q2, p1), _orient(q1, q2, p2)
    if o1 != o2 and o3 != o4 and 0 not in (o1, o2, o3, o4):
        return True
    if o1 == 0 and _on_segment(p1, p2, q1):
        return True
    if o2 == 0 and _on_segment(p1, p2, q2):
        return True
    if o3 == 0 and _on_segment(q1, q2, p1):
        return True
    if o4 == 0 and _on_segment(q1, q2, p2):
        return True
    return False


def _segment_endpoints(s):
    al, be, ga, de = s
    return (ga, al * ga + be), (de, al * de + be)


def _contained(inner, outer):
    # closed ball containment: |c - c'| <= r' - r
    m = len(inner) - 1
    gap = outer[m] - inner[m]
    if gap < 0:
        return False
    return sum((inner[i] - outer[i]) ** 2 for i in range(m)) <= gap * gap


def _circle_curve(c, nodes):
    a, b, cz, d, e, r = (float(v) for v in c)
    n = np.array([d, e, 1.0])
    n /= np.linalg.norm(n)
    # any vector not parallel to n; n has positive z so the x-axis works
    u = np.cross(n, [1.0, 0.0, 0.0])
    u /= np.linalg.norm(u)
    w = np.cross(n, u)
    th = np.linspace(0.0, 2 * np.pi, nodes, endpoint=False)
    pts = np.array([a, b, cz]) + r * (np.outer(np.cos(th), u) + np.outer(np.sin(th), w))
    tang = r * (np.outer(-np.sin(th), u) + np.outer(np.cos(th), w))
    return pts, tang, 2 * np.pi / nodes


def gauss_linking_number(c1, c2, nodes: int = 512) -> tuple[float, float]:
    """Gauss double integral by the product trapezoid rule.

    Returns ``(value, min_distance)`` where ``min_distance`` is the smallest
    distance between quadrature nodes of the two curves.
    """
    p, dp, h1 = _circle_curve(c1, nodes)
    q, dq, h2 = _circle_curve(c2, nodes)
    diff = p[:, None, :] - q[None, :, :]
    dist = np.linalg.norm(diff, axis=2)
    cross = np.cross(dp[:, None, :], dq[None, :, :])
    integrand = np.einsum("ijk,ijk->ij", diff, cross) / dist ** 3
    value = integrand.sum() * h1 * h2 / (4 * np.pi)
    return float(value), float(dist.min())


def gauss_link_label(c1, c2, nodes: int = 512, threshold: float = 0.2) -> str:
    """``link``/``no-link`` from the Gauss integral, or ``inconclusive``.

    Conclusive only when the integral is within ``threshold`` of an integer
    and the curves stay several node spacings apart (quadrature on nearly
    touching circles is unreliable).
    """
    value, gap = gauss_linking_number(c1, c2, nodes)
    k = round(value)
    if abs(value - k) > threshold:
        return INCONCLUSIVE
    r_max = max(float(c1[5]), float(c2[5]))
    if gap < 4 * 2 * math.pi * r_max / nodes:
        return INCONCLUSIVE
    return LINK if k != 0 else NO_LINK


def _with_unit_radius(c):
    return tuple(c) + (Fraction(1),)


def oracle_relation(fam: Family, a, b, nodes: int = 512) -> str:
    """Label of ``(a, b)`` computed by direct geometry, not via the predicates.

    Returns a label name, or ``"inconclusive"`` for the floating-point
    linking oracle.
    """
    name = fam.meta.get("builtin")
    if name is None:
        raise PreconditionError("oracles exist only for builtin families")
    a, b = fam.require(a), fam.require(b)
    if name in ("DISKS", "BALLS"):
        m = fam.d - 1
        dist2 = sum((a[i] - b[i]) ** 2 for i in range(m))
        return EDGE if dist2 < (a[m] + b[m]) ** 2 else NON_EDGE
    if name in ("UNIT_DISKS", "UNIT_BALLS"):
        dist2 = sum((x - y) ** 2 for x, y in zip(a, b))
        return EDGE if dist2 < 4 else NON_EDGE
    if name == "INTERVALS":
        return EDGE if max(a[0], b[0]) <= min(a[1], b[1]) else NON_EDGE
    if name == "BOXES":
        for i in range(fam.d // 2):
            if max(a[2 * i], b[2 * i]) > min(a[2 * i + 1], b[2 * i + 1]):
                return NON_EDGE
        return EDGE
    if name == "SEGMENTS":
        return EDGE if segments_intersect(*_segment_endpoints(a), *_segment_endpoints(b)) else NON_EDGE
    if name in ("BALL_ORDERS", "CIRCLE_ORDERS"):
        if a == b:
            return INCOMP
        if _contained(a, b):
            return PREC
        if _contained(b, a):
            return SUCC
        return INCOMP
    if name == "POSET_DIM":
        if a == b:
            return INCOMP
        if all(x <= y for x, y in zip(a, b)):
            return PREC
        if all(x >= y for x, y in zip(a, b)):
            return SUCC
        return INCOMP
    if name == "CIRCLE_LINKS":
        return gauss_link_label(a, b, nodes)
    if name == "UNIT_CIRCLE_LINKS":
        return gauss_link_label(_with_unit_radius(a), _with_unit_radius(b), nodes)
    raise PreconditionError(f"no oracle for {name}")
