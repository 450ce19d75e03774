"""Exact arithmetic on the unit circle: lattice directions and arc sets.

Directions are primitive integer vectors (p, q), gcd(|p|, |q|) = 1, standing
for (p, q)/|(p, q)|.  No angle is ever represented as a float: the circular
order comes from half-plane tests and integer cross products, so boundary
ties (directions perpendicular to rule vectors) are decided exactly.

An ArcSet is a normalized list of pairwise disjoint arcs, each with rational
endpoints and per-endpoint open/closed flags, sorted counterclockwise.
Boolean operations sweep the elementary pieces cut out by all endpoints of
the operands and reassemble maximal runs, which keeps every operation closed
over the representation.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cmp_to_key
from math import gcd

from .errors import ParameterError

Dir = tuple  # primitive integer vector


def normalize_dir(v) -> Dir:
    x, y = int(v[0]), int(v[1])
    if x == 0 and y == 0:
        raise ParameterError("zero vector is not a direction")
    g = gcd(abs(x), abs(y))
    return (x // g, y // g)


def neg(d: Dir) -> Dir:
    return (-d[0], -d[1])


def rot90(d: Dir) -> Dir:
    """Rotate counterclockwise by a quarter turn."""
    return (-d[1], d[0])


def cross(a: Dir, b: Dir) -> int:
    return a[0] * b[1] - a[1] * b[0]


def dot(a: Dir, b: Dir) -> int:
    return a[0] * b[0] + a[1] * b[1]


def _half(d: Dir) -> int:
    """0 for angles in [0, pi), 1 for [pi, 2pi)."""
    if d[1] > 0 or (d[1] == 0 and d[0] > 0):
        return 0
    return 1


def dir_cmp(a: Dir, b: Dir) -> int:
    """Total counterclockwise order starting at direction (1, 0)."""
    if a == b:
        return 0
    ha, hb = _half(a), _half(b)
    if ha != hb:
        return -1 if ha < hb else 1
    c = cross(a, b)
    if c == 0:
        return 0  # parallel within one half: same primitive vector
    return -1 if c > 0 else 1


_dir_key = cmp_to_key(dir_cmp)


def ccw_witness(a: Dir, b: Dir) -> Dir:
    """A direction strictly inside the counterclockwise open interval (a, b)."""
    if a == b:
        return neg(a)  # interval is the full circle minus a
    if b == neg(a):
        return rot90(a)  # interval spans exactly half the circle
    mid = (a[0] + b[0], a[1] + b[1])
    if cross(a, b) > 0:
        return normalize_dir(mid)
    return normalize_dir(neg(mid))  # interval goes the long way around


@dataclass(frozen=True)
class Arc:
    """Counterclockwise arc from start to end with open/closed endpoints.

    start == end with both endpoints closed is a single point; with both
    open it is the full circle minus that point.
    """

    start: Dir
    end: Dir
    start_closed: bool
    end_closed: bool

    def __post_init__(self):
        if self.start == self.end and self.start_closed != self.end_closed:
            raise ParameterError("degenerate arc flags must agree")

    @property
    def is_point(self) -> bool:
        return self.start == self.end and self.start_closed

    def contains(self, d: Dir) -> bool:
        if self.start == self.end:
            return d == self.start if self.start_closed else d != self.start
        if d == self.start:
            return self.start_closed
        if d == self.end:
            return self.end_closed
        sd = dir_cmp(self.start, d)
        de = dir_cmp(d, self.end)
        if dir_cmp(self.start, self.end) < 0:
            return sd < 0 and de < 0
        # arc wraps past the reference direction (1, 0)
        return sd < 0 or de < 0

    def __repr__(self):
        if self.is_point:
            return f"{{{self.start}}}"
        lo = "[" if self.start_closed else "("
        hi = "]" if self.end_closed else ")"
        return f"{lo}{self.start},{self.end}{hi}"


class ArcSet:
    """Normalized finite union of disjoint arcs (possibly the full circle)."""

    __slots__ = ("arcs", "full")

    def __init__(self, arcs=(), full: bool = False):
        object.__setattr__(self, "full", bool(full))
        object.__setattr__(self, "arcs", tuple(() if full else arcs))

    def __setattr__(self, *a):
        raise AttributeError("ArcSet is immutable")

    # -- constructors -------------------------------------------------
    @staticmethod
    def empty() -> "ArcSet":
        return ArcSet()

    @staticmethod
    def full_circle() -> "ArcSet":
        return ArcSet(full=True)

    @staticmethod
    def point(d) -> "ArcSet":
        d = normalize_dir(d)
        return ArcSet([Arc(d, d, True, True)])

    @staticmethod
    def span(start, end, start_closed=True, end_closed=True) -> "ArcSet":
        start, end = normalize_dir(start), normalize_dir(end)
        if start == end and start_closed and end_closed:
            return ArcSet.point(start)
        return ArcSet([Arc(start, end, start_closed, end_closed)])

    @staticmethod
    def open_semicircle(normal) -> "ArcSet":
        """Directions with strictly negative scalar product against normal."""
        w = normalize_dir(normal)
        a = rot90(w)
        return ArcSet([Arc(a, neg(a), False, False)])

    # -- queries ------------------------------------------------------
    def is_empty(self) -> bool:
        return not self.full and not self.arcs

    def contains(self, d) -> bool:
        if self.full:
            return True
        d = normalize_dir(d)
        return any(a.contains(d) for a in self.arcs)

    def endpoints(self):
        pts = []
        for a in self.arcs:
            for p in (a.start, a.end):
                if p not in pts:
                    pts.append(p)
        return pts

    def isolated_points(self):
        return [a.start for a in self.arcs if a.is_point]

    def positive_arcs(self):
        return [a for a in self.arcs if not a.is_point]

    def has_interior(self) -> bool:
        """True when the set contains an arc of positive angular length."""
        return self.full or bool(self.positive_arcs())

    def has_two_non_opposite(self) -> bool:
        if self.full:
            return True
        if self.positive_arcs():
            return True
        pts = self.isolated_points()
        if len(pts) >= 3:
            return True
        return len(pts) == 2 and pts[0] != neg(pts[1])

    def has_opposite_pair(self) -> bool:
        return not self.intersection(self.antipodal()).is_empty()

    # -- transforms ---------------------------------------------------
    def antipodal(self) -> "ArcSet":
        if self.full:
            return self
        arcs = [
            Arc(neg(a.start), neg(a.end), a.start_closed, a.end_closed)
            for a in self.arcs
        ]
        arcs.sort(key=lambda a: _dir_key(a.start))
        return ArcSet(arcs)

    def rotate90(self) -> "ArcSet":
        if self.full:
            return self
        arcs = [
            Arc(rot90(a.start), rot90(a.end), a.start_closed, a.end_closed)
            for a in self.arcs
        ]
        arcs.sort(key=lambda a: _dir_key(a.start))
        return ArcSet(arcs)

    # -- boolean algebra ----------------------------------------------
    def complement(self) -> "ArcSet":
        return _combine(self, None, lambda a, b: not a)

    def union(self, other: "ArcSet") -> "ArcSet":
        return _combine(self, other, lambda a, b: a or b)

    def intersection(self, other: "ArcSet") -> "ArcSet":
        return _combine(self, other, lambda a, b: a and b)

    def difference(self, other: "ArcSet") -> "ArcSet":
        return _combine(self, other, lambda a, b: a and not b)

    def __eq__(self, other):
        return (
            isinstance(other, ArcSet)
            and self.full == other.full
            and self.arcs == other.arcs
        )

    def __hash__(self):
        return hash((self.full, self.arcs))

    def __repr__(self):
        if self.full:
            return "ArcSet(full)"
        if not self.arcs:
            return "ArcSet(empty)"
        return "ArcSet(" + ", ".join(repr(a) for a in self.arcs) + ")"


def _combine(first: ArcSet, second: ArcSet | None, op) -> ArcSet:
    """Evaluate a boolean op piecewise on the partition cut by all endpoints."""
    points = first.endpoints()
    if second is not None:
        for p in second.endpoints():
            if p not in points:
                points.append(p)
    points.sort(key=_dir_key)

    def member(d):
        a = first.contains(d)
        b = second.contains(d) if second is not None else False
        return op(a, b)

    if not points:
        # both operands are full or empty: probe any direction
        return ArcSet.full_circle() if member((1, 0)) else ArcSet.empty()

    m = len(points)
    pieces = []  # alternating ("pt", direction) / ("iv", (lo, hi)) with membership
    for i, p in enumerate(points):
        nxt = points[(i + 1) % m]
        pieces.append(("pt", p, member(p)))
        pieces.append(("iv", (p, nxt), member(ccw_witness(p, nxt))))

    flags = [flag for _, _, flag in pieces]
    if all(flags):
        return ArcSet.full_circle()
    if not any(flags):
        return ArcSet.empty()

    n = len(pieces)
    start_idx = flags.index(False)  # scan starts outside the set
    arcs = []
    i = 0
    while i < n:
        if not pieces[(start_idx + i) % n][2]:
            i += 1
            continue
        run = []
        while i < n and pieces[(start_idx + i) % n][2]:
            run.append(pieces[(start_idx + i) % n])
            i += 1
        kind0, payload0, _ = run[0]
        kind1, payload1, _ = run[-1]
        start, start_closed = (payload0, True) if kind0 == "pt" else (payload0[0], False)
        end, end_closed = (payload1, True) if kind1 == "pt" else (payload1[1], False)
        assert start != end or start_closed == end_closed, "inconsistent run"
        arcs.append(Arc(start, end, start_closed, end_closed))
    arcs.sort(key=lambda a: _dir_key(a.start))
    return ArcSet(arcs)
