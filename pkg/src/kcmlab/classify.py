"""Universality classifier: stable directions, difficulties, classes, exponents.

Stable directions are computed with exact integer arithmetic on the circle
(see geometry).  Difficulties of isolated stable directions are bounded
searches: the half-plane with outer normal u is treated as empty by
predicate, a candidate helper set Z is planted near the boundary, and a
sparse closure runs inside a strip; success means some full boundary-parallel
lattice line of the strip empties, which certifies that |Z| extra vacancies
let the automaton advance without bound.  Failures within the budget are
reported as lower bounds, never as values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import comb

from .errors import ParameterError, SizeError
from .family import UpdateFamily
from .geometry import (
    ArcSet,
    ccw_witness,
    dir_cmp,
    dot,
    neg,
    normalize_dir,
    rot90,
)
from functools import cmp_to_key

_dir_key = cmp_to_key(dir_cmp)

_SUBSET_CAP = 2_000_000  # candidate helper sets tried per size step

SUPERCRITICAL_ROOTED = "supercritical-rooted"
SUPERCRITICAL_UNROOTED = "supercritical-unrooted"
CRITICAL = "critical"
SUBCRITICAL_NONTRIVIAL = "subcritical-nontrivial"
SUBCRITICAL_TRIVIAL = "subcritical-trivial"


@dataclass(frozen=True)
class Difficulty:
    """Exact value, certified lower bound, or infinity."""

    kind: str  # "exact" | "at_least" | "infinite"
    value: int | None = None

    @staticmethod
    def exact(n: int) -> "Difficulty":
        return Difficulty("exact", int(n))

    @staticmethod
    def at_least(n: int) -> "Difficulty":
        return Difficulty("at_least", int(n))

    @staticmethod
    def infinite() -> "Difficulty":
        return Difficulty("infinite")

    @property
    def conclusive(self) -> bool:
        return self.kind != "at_least"

    def describe(self) -> str:
        if self.kind == "exact":
            return str(self.value)
        if self.kind == "at_least":
            return f">= {self.value}"
        return "inf"

    def __repr__(self):
        return f"Difficulty({self.describe()})"


def _d_max(values) -> Difficulty:
    values = list(values)
    if any(v.kind == "infinite" for v in values):
        return Difficulty.infinite()
    if not values:
        return Difficulty.exact(0)
    hi = max(v.value for v in values)
    if all(v.kind == "exact" for v in values):
        return Difficulty.exact(hi)
    return Difficulty.at_least(hi)


def _d_min(values) -> Difficulty:
    values = [v for v in values]
    exacts = [v.value for v in values if v.kind == "exact"]
    bounds = [v.value for v in values if v.kind == "at_least"]
    if exacts:
        best = min(exacts)
        if all(b >= best for b in bounds):
            return Difficulty.exact(best)
        return Difficulty.at_least(min(bounds))
    if bounds:
        return Difficulty.at_least(min(bounds))
    return Difficulty.infinite()


def stable_set(fam: UpdateFamily) -> ArcSet:
    """Directions u such that no rule fits inside the open half-plane of u.

    Each rule contributes the open cone of directions on which all its
    offsets have strictly negative scalar product; the stable set is the
    complement of the union of these cones.
    """
    if fam.dim != 2:
        raise ParameterError("stable_set requires a two-dimensional family")
    unstable = ArcSet.empty()
    for rule in fam.rules:
        cone = ArcSet.full_circle()
        for v in rule:
            cone = cone.intersection(ArcSet.open_semicircle(v))
            if cone.is_empty():
                break
        unstable = unstable.union(cone)
    return unstable.complement()


def _candidate_normals(stable: ArcSet):
    """Normals w whose open semicircles realize every possible stable slice.

    The slice stable ∩ {u : <u, w> < 0} changes only when the semicircle
    boundary crosses an endpoint of the stable set, so the perpendiculars
    of all endpoints, plus one witness normal inside each cell between
    consecutive perpendiculars, exhaust all cases.
    """
    events = []
    for f in stable.endpoints():
        for w in (rot90(f), neg(rot90(f))):
            if w not in events:
                events.append(w)
    if not events:
        return [(1, 0)]
    events.sort(key=_dir_key)
    normals = list(events)
    m = len(events)
    for i in range(m):
        mid = ccw_witness(events[i], events[(i + 1) % m])
        if mid not in normals:
            normals.append(mid)
    return normals


def rough_class(stable: ArcSet) -> str:
    """Coarse class from how open semicircles meet the stable set."""
    if stable.is_empty():
        return SUPERCRITICAL_UNROOTED
    if stable.full:
        return SUBCRITICAL_TRIVIAL
    slices = [
        stable.intersection(ArcSet.open_semicircle(w))
        for w in _candidate_normals(stable)
    ]
    if any(s.is_empty() for s in slices):
        if stable.has_two_non_opposite():
            return SUPERCRITICAL_ROOTED
        return SUPERCRITICAL_UNROOTED
    if any(not s.positive_arcs() for s in slices):
        return CRITICAL
    return SUBCRITICAL_NONTRIVIAL


def _egcd(a: int, b: int):
    if b == 0:
        return a, 1, 0
    g, x, y = _egcd(b, a % b)
    return g, y, x - (a // b) * y


class _HalfPlaneFrame:
    """Integer frame for a direction u: level along u, abscissa along rot90(u)."""

    def __init__(self, u):
        self.u = u
        self.t = rot90(u)
        self.n2 = dot(u, u)
        g, x, y = _egcd(u[0], u[1])
        # base point with level exactly 1
        assert g in (1, -1)
        if g == -1:
            x, y = -x, -y
        self.base = (x, y)
        self.base_a = dot(self.base, self.t)

    def level(self, s):
        return dot(s, self.u)

    def abscissa(self, s):
        return dot(s, self.t)

    def site(self, level: int, a: int):
        """Lattice site with the given frame coordinates (a must be reachable)."""
        rem = a - level * self.base_a
        assert rem % self.n2 == 0
        m = rem // self.n2
        return (
            level * self.base[0] + m * self.t[0],
            level * self.base[1] + m * self.t[1],
        )

    def line_abscissas(self, level: int, amax: int):
        """Feasible abscissas on a level line within |a| <= amax."""
        r = (level * self.base_a) % self.n2
        first = -((amax + r) // self.n2)
        last = (amax - r) // self.n2
        return [r + m * self.n2 for m in range(first, last + 1)]


def _search_success(fam: UpdateFamily, frame: _HalfPlaneFrame, Z, lmax, amax, line_counts):
    """Sparse closure with the half-plane empty; True when a full level line empties."""
    emptied = set()
    fill = {}
    rev = sorted({(-o[0], -o[1]) for rule in fam.rules for o in rule})

    def is_empty(s):
        return frame.level(s) < 0 or s in emptied

    def in_strip(s):
        lv = frame.level(s)
        return 0 <= lv <= lmax and abs(frame.abscissa(s)) <= amax

    stack = []

    def try_empty(x):
        if x in emptied or not in_strip(x):
            return False
        for rule in fam.rules:
            for o in rule:
                if not is_empty((x[0] + o[0], x[1] + o[1])):
                    break
            else:
                emptied.add(x)
                lv = frame.level(x)
                fill[lv] = fill.get(lv, 0) + 1
                stack.append(x)
                return fill[lv] == line_counts[lv]
        return False

    for z in Z:
        if frame.level(z) >= 0 and in_strip(z) and z not in emptied:
            emptied.add(z)
            lv = frame.level(z)
            fill[lv] = fill.get(lv, 0) + 1
            if fill[lv] == line_counts[lv]:
                return True
            stack.append(z)
    while stack:
        y = stack.pop()
        for r in rev:
            if try_empty((y[0] + r[0], y[1] + r[1])):
                return True
    return False


def difficulty_bounded(
    fam: UpdateFamily,
    direction,
    window: int | None = None,
    budget: int = 4,
    stable: ArcSet | None = None,
) -> Difficulty:
    """Vacancies needed, besides an empty half-plane, to advance forever.

    Exact geometry decides the unstable (0) and non-isolated (infinite)
    cases.  Otherwise helper sets Z of growing size are planted in a window
    abutting the half-plane boundary (depth capped at range*budget lattice
    levels, one representative per translation along the boundary, cluster
    diameter capped at 4*range*budget) and a sparse closure checks whether
    some full boundary-parallel line of a strip three windows wide empties.
    The first size that succeeds is exact; exhausting the budget yields a
    lower bound, never a value.
    """
    u = normalize_dir(direction)
    if fam.dim != 2:
        raise ParameterError("difficulty is defined for two-dimensional families")
    if budget < 1:
        raise ParameterError("budget must be >= 1")
    R = fam.range
    W = 24 * R if window is None else int(window)
    if W < 4 * R:
        raise ParameterError("window must be at least 4 * range")

    if stable is None:
        stable = stable_set(fam)
    if not stable.contains(u):
        return Difficulty.exact(0)
    if u not in stable.isolated_points():
        return Difficulty.infinite()

    frame = _HalfPlaneFrame(u)
    n2 = frame.n2
    lmax = 3 * W
    amax = (3 * W * n2) // 2
    line_counts = {lv: len(frame.line_abscissas(lv, amax)) for lv in range(lmax + 1)}

    depth = max(1, R * budget)
    spread = W * n2
    window_sites = []
    for lv in range(depth):
        for a in frame.line_abscissas(lv, spread):
            if 0 <= a <= spread:
                window_sites.append(frame.site(lv, a))
    reps = [s for s in window_sites if 0 <= frame.abscissa(s) < n2]
    diam = 4 * R * budget

    def near(z0, z):
        return max(abs(z0[0] - z[0]), abs(z0[1] - z[1])) <= diam

    for k in range(1, budget + 1):
        size_estimate = len(reps) * comb(max(len(window_sites) - 1, 0), k - 1)
        if size_estimate > _SUBSET_CAP * 8:
            raise SizeError(
                "difficulty search too large; reduce budget or window"
            )
        seen = set()
        tried = 0
        for z0 in reps:
            pool = [z for z in window_sites if z != z0 and near(z0, z)]
            for rest in combinations(pool, k - 1):
                Z = (z0,) + rest
                if any(
                    max(abs(a[0] - b[0]), abs(a[1] - b[1])) > diam
                    for a, b in combinations(Z, 2)
                ):
                    continue
                amin = min(frame.abscissa(z) for z in Z)
                if not 0 <= amin < n2:
                    continue
                key = frozenset(Z)
                if key in seen:
                    continue
                seen.add(key)
                tried += 1
                if tried > _SUBSET_CAP:
                    raise SizeError(
                        "difficulty search too large; reduce budget or window"
                    )
                if _search_success(fam, frame, Z, lmax, amax, line_counts):
                    return Difficulty.exact(k)
    return Difficulty.at_least(budget + 1)


@dataclass
class ClassificationReport:
    family: str
    dim: int
    stable: ArcSet | None
    difficulties: dict
    alpha: Difficulty
    rough: str
    refined: dict | None = None
    exponents: tuple | None = None
    inconclusive: bool = False
    budget: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        def arc_dict(a):
            return {
                "start": list(a.start),
                "end": list(a.end),
                "start_closed": a.start_closed,
                "end_closed": a.end_closed,
                "isolated_point": a.is_point,
            }

        stable = None
        if self.stable is not None:
            stable = {
                "full_circle": self.stable.full,
                "arcs": [arc_dict(a) for a in self.stable.arcs],
            }
        return {
            "family": self.family,
            "dim": self.dim,
            "stable": stable,
            "difficulties": {
                f"{u[0]},{u[1]}": d.describe() for u, d in sorted(self.difficulties.items())
            },
            "alpha": self.alpha.describe(),
            "rough": self.rough,
            "refined": self.refined,
            "exponents": list(self.exponents) if self.exponents else None,
            "inconclusive": self.inconclusive,
            "budget": self.budget,
        }


def _exponents(stable_finite: bool, balanced: bool, rooted: bool, directionality):
    if not stable_finite:
        return (2, 4, 0) if not balanced else (2, 0, 0)
    if rooted:
        return (1, 3, 0) if not balanced else (1, 1, 0)
    if not balanced:
        return (1, 2, 0)
    return (1, 0, 1) if directionality == "semi-directed" else (1, 0, 0)


def refine(fam: UpdateFamily, window: int | None = None, budget: int = 4) -> ClassificationReport:
    """Full report: stable set, difficulties, rough and refined class, exponents."""
    if fam.dim != 2:
        raise ParameterError("refine requires a two-dimensional family")
    stable = stable_set(fam)
    rough = rough_class(stable)
    meta = {"window": window if window is not None else 24 * fam.range, "budget": budget}

    difficulties = {
        u: difficulty_bounded(fam, u, window=window, budget=budget, stable=stable)
        for u in stable.isolated_points()
    }
    inconclusive = any(not d.conclusive for d in difficulties.values())

    if rough in (SUPERCRITICAL_ROOTED, SUPERCRITICAL_UNROOTED):
        return ClassificationReport(
            fam.name or "custom", 2, stable, difficulties, Difficulty.exact(0),
            rough, inconclusive=inconclusive, budget=meta,
        )
    if rough in (SUBCRITICAL_NONTRIVIAL, SUBCRITICAL_TRIVIAL):
        return ClassificationReport(
            fam.name or "custom", 2, stable, difficulties, Difficulty.infinite(),
            rough, inconclusive=inconclusive, budget=meta,
        )

    # critical: minimize the worst difficulty over open semicircles
    semiciricle_maxes = []
    for w in _candidate_normals(stable):
        sl = stable.intersection(ArcSet.open_semicircle(w))
        if sl.positive_arcs():
            semiciricle_maxes.append(Difficulty.infinite())
        else:
            semiciricle_maxes.append(_d_max(difficulties[p] for p in sl.isolated_points()))
    alpha = _d_min(semiciricle_maxes)
    inconclusive = inconclusive or not alpha.conclusive

    # hard directions: stable directions strictly more difficult than alpha
    easy = ArcSet.empty()
    if alpha.kind == "exact":
        for u, d in difficulties.items():
            if d.kind == "exact" and d.value <= alpha.value:
                easy = easy.union(ArcSet.point(u))
    hard = stable.difference(easy)

    balanced = not hard.has_opposite_pair()
    rooted = hard.has_two_non_opposite()
    directionality = None
    if balanced and not rooted:
        directionality = "isotropic" if hard.is_empty() else "semi-directed"
    stable_finite = not stable.has_interior()
    refined = {
        "balance": "balanced" if balanced else "unbalanced",
        "root": "rooted" if rooted else "unrooted",
        "stable_directions": "finite" if stable_finite else "infinite",
        "directionality": directionality,
    }
    return ClassificationReport(
        fam.name or "custom", 2, stable, difficulties, alpha, CRITICAL,
        refined=refined,
        exponents=_exponents(stable_finite, balanced, rooted, directionality),
        inconclusive=inconclusive, budget=meta,
    )


def classify_1d(fam: UpdateFamily) -> str:
    """One-dimensional class from the number of unstable directions."""
    if fam.dim != 1:
        raise ParameterError("classify_1d requires a one-dimensional family")
    pos_unstable = any(all(u[0] < 0 for u in rule) for rule in fam.rules)
    neg_unstable = any(all(u[0] > 0 for u in rule) for rule in fam.rules)
    n = int(pos_unstable) + int(neg_unstable)
    return ("zero-unstable", "one-unstable", "two-unstable")[n]


def classify_report(fam: UpdateFamily, window=None, budget: int = 4) -> dict:
    """Dispatch on dimension; JSON-ready dictionary."""
    if fam.dim == 1:
        return {
            "family": fam.name or "custom",
            "dim": 1,
            "class": classify_1d(fam),
        }
    return refine(fam, window=window, budget=budget).to_dict()
