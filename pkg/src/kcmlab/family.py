"""Update families, constraint evaluation, and the named-model catalog.

An update family is a finite set of update rules; a rule is a finite set of
nonzero integer offsets.  The constraint at a site is satisfied when some
rule, translated there, is entirely empty.  Families are canonicalized on
construction: rules that contain another rule of the same family are
dropped (they never change the constraint) and duplicates are merged, so
families inducing the same constraint compare equal.
"""

from __future__ import annotations

import json

from .errors import CatalogError, ParameterError, SizeError

_MONOTONE_SUPPORT_CAP = 22


def _canonical(dim: int, rules) -> tuple:
    cleaned = []
    for rule in rules:
        r = frozenset(tuple(int(c) for c in u) for u in rule)
        if not r:
            raise ParameterError("empty update rule rejected")
        for u in r:
            if len(u) != dim:
                raise ParameterError("offset arity must match dim")
            if all(c == 0 for c in u):
                raise ParameterError("offsets must be nonzero")
        cleaned.append(r)
    if not cleaned:
        raise ParameterError("empty update family rejected")
    # keep only inclusion-minimal rules; supersets are constraint-equivalent
    minimal = [r for r in cleaned if not any(o < r for o in cleaned)]
    uniq = sorted(set(minimal), key=lambda r: sorted(r))
    return tuple(tuple(sorted(r)) for r in uniq)


class UpdateFamily:
    """Immutable canonical update family."""

    __slots__ = ("dim", "rules", "name")

    def __init__(self, dim: int, rules, name: str | None = None):
        if dim not in (1, 2):
            raise ParameterError("dim must be 1 or 2")
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "rules", _canonical(dim, rules))
        object.__setattr__(self, "name", name)

    def __setattr__(self, *a):
        raise AttributeError("UpdateFamily is immutable")

    @property
    def range(self) -> int:
        """Max infinity-norm over all offsets."""
        return max(max(abs(c) for c in u) for rule in self.rules for u in rule)

    @property
    def offsets(self) -> tuple:
        seen = []
        for rule in self.rules:
            for u in rule:
                if u not in seen:
                    seen.append(u)
        return tuple(seen)

    def __eq__(self, other):
        return (
            isinstance(other, UpdateFamily)
            and self.dim == other.dim
            and self.rules == other.rules
        )

    def __hash__(self):
        return hash((self.dim, self.rules))

    def __repr__(self):
        label = self.name or f"{len(self.rules)} rules"
        return f"UpdateFamily(dim={self.dim}, {label})"


def constraint(fam: UpdateFamily, lookup, site) -> int:
    """1 iff some rule translated at site is completely empty under lookup."""
    for rule in fam.rules:
        for u in rule:
            if lookup(tuple(site[i] + u[i] for i in range(fam.dim))) != 0:
                break
        else:
            return 1
    return 0


def monotone_le(f1: UpdateFamily, f2: UpdateFamily) -> bool:
    """Pointwise order on induced constraints, decided exhaustively.

    Enumerates all occupancy patterns on the union of both families'
    offsets (sites outside it influence neither constraint).
    """
    if f1.dim != f2.dim:
        raise ParameterError("families must share a dimension")
    support = sorted(set(f1.offsets) | set(f2.offsets))
    if len(support) > _MONOTONE_SUPPORT_CAP:
        raise SizeError("joint support too large for exhaustive comparison")
    pos = {u: i for i, u in enumerate(support)}
    masks1 = [sum(1 << pos[u] for u in rule) for rule in f1.rules]
    masks2 = [sum(1 << pos[u] for u in rule) for rule in f2.rules]
    for empty_set in range(1 << len(support)):
        c1 = any(m & ~empty_set == 0 for m in masks1)
        if c1 and not any(m & ~empty_set == 0 for m in masks2):
            return False
    return True


def _rot90(u):
    return (-u[1], u[0])


def _spiral_rules():
    base = frozenset({(1, -1), (1, 0), (1, 1), (0, 1)})
    rules, rule = [], base
    for _ in range(4):
        rules.append(rule)
        rule = frozenset(_rot90(u) for u in rule)
    return rules


def _fa_rules(dim: int, j: int):
    units = []
    for axis in range(dim):
        e = tuple(1 if i == axis else 0 for i in range(dim))
        units.append(e)
        units.append(tuple(-c for c in e))
    from itertools import combinations

    return [set(c) for c in combinations(units, j)]


# The log1/log3 entries transcribe four-rule pictures: circles mark the rule
# offsets relative to the cross at the origin of each panel.  Their axis
# difficulty labels (west/south easy, north/east hard) are cross-validated
# against the classifier in the test suite.
_LOG1 = [
    {(0, 2), (-1, 0), (0, 1)},
    {(0, 1), (1, 0)},
    {(-1, 0), (0, -1), (-2, 0), (0, -2)},
    {(1, 0), (0, -1), (2, 0)},
]
_LOG3 = [
    {(0, 2), (-1, 0), (-2, 0), (0, 1)},
    {(0, 1), (1, 0), (2, 0)},
    {(-1, 0), (0, -1), (-2, 0), (0, -2)},
    {(1, 0), (0, -1), (2, 0)},
]

_CATALOG = {
    "east1d": (1, [{(1,)}]),
    "east2d": (2, [{(1, 0)}, {(0, 1)}]),
    "fa1f-1d": (1, [{(-1,)}, {(1,)}]),
    "fa1f-2d": (2, _fa_rules(2, 1)),
    "fa2f-1d": (1, [{(-1,), (1,)}]),
    "fa2f-2d": (2, _fa_rules(2, 2)),
    "duarte": (2, [{(-1, 0), (0, 1)}, {(-1, 0), (0, -1)}, {(0, -1), (0, 1)}]),
    "north-east": (2, [{(1, 0), (0, 1)}]),
    "spiral": (2, _spiral_rules()),
    # two-neighbour family with the two opposite-pair rules removed: a site
    # needs one empty horizontal and one empty vertical neighbour
    "modified-fa2f": (2, [{(1, 0), (0, 1)}, {(1, 0), (0, -1)},
                          {(-1, 0), (0, 1)}, {(-1, 0), (0, -1)}]),
    "log1": (2, _LOG1),
    "log3": (2, _LOG3),
}

CATALOG_NAMES = tuple(sorted(_CATALOG))


def catalog(name: str) -> UpdateFamily:
    try:
        dim, rules = _CATALOG[name]
    except KeyError:
        raise CatalogError(
            f"unknown family {name!r}; known: {', '.join(CATALOG_NAMES)}"
        )
    return UpdateFamily(dim, rules, name=name)


def to_json(fam: UpdateFamily) -> str:
    return json.dumps(
        {"dim": fam.dim, "rules": [[list(u) for u in rule] for rule in fam.rules]},
        separators=(",", ":"),
    )


def from_json(text: str) -> UpdateFamily:
    try:
        doc = json.loads(text)
        return UpdateFamily(int(doc["dim"]), [set(map(tuple, r)) for r in doc["rules"]])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParameterError(f"malformed family file: {exc}")


def resolve(name_or_path: str, is_file: bool = False) -> UpdateFamily:
    """CLI helper: catalog name, or a JSON family file."""
    if is_file:
        with open(name_or_path, "r", encoding="utf8") as fh:
            return from_json(fh.read())
    return catalog(name_or_path)
