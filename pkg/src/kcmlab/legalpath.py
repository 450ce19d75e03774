"""Legal paths between configurations and ergodic-component machinery.

A legal path is a sequence of configurations differing by single flips,
each performed while the flipped site's constraint holds.  Reachability by
legal paths coincides with equality of closures, which lets components be
materialized as closure fibers instead of walking the exponential flip
graph; the flip-graph BFS is kept as a test oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .bootstrap import closure
from .errors import ParameterError, SizeError
from .family import UpdateFamily
from .lattice import BoundaryCondition, Configuration, Region, concatenate, flip

_ENUM_CAP = 20


@dataclass
class LegalPath:
    """Single-flip move list from a start configuration under a boundary."""

    region: Region
    boundary: BoundaryCondition
    start: Configuration
    steps: list = field(default_factory=list)  # (site, new_bit)

    @property
    def length(self) -> int:
        return len(self.steps)

    def reversed(self) -> "LegalPath":
        end = self.replay()
        steps = []
        cur = end
        for site, _ in reversed(self.steps):
            steps.append((site, 1 - cur.get(site)))
            cur = flip(cur, site)
        return LegalPath(self.region, self.boundary, end, steps)

    def replay(self) -> Configuration:
        cur = self.start
        for site, bit in self.steps:
            if cur.get(site) != bit:
                cur = flip(cur, site)
        return cur

    def dump_lines(self):
        for site, bit in self.steps:
            yield " ".join(str(c) for c in site) + f" {bit}"


def _constraint_at(fam: UpdateFamily, cfg: Configuration, bc: BoundaryCondition, site) -> int:
    look = concatenate(cfg, bc)
    for rule in fam.rules:
        if all(look(tuple(site[i] + u[i] for i in range(fam.dim))) == 0 for u in rule):
            return 1
    return 0


def validate(fam: UpdateFamily, path: LegalPath):
    """None when every move is legal, else the index of the first bad step."""
    cur = path.start
    for i, (site, bit) in enumerate(path.steps):
        if site not in cur.region:
            return i
        if cur.get(site) != bit:
            if not _constraint_at(fam, cur, path.boundary, site):
                return i
            cur = flip(cur, site)
    return None


def _greedy_descent(fam, cfg, bc):
    """Empty, in fixed site order, any occupied site whose constraint holds.

    Terminates exactly at the closure of cfg; the fixed order makes emitted
    paths deterministic.
    """
    steps = []
    cur = cfg
    sites = list(cfg.region.sites())
    target = closure(fam, cfg, bc).closure
    while cur != target:
        progressed = False
        for site in sites:
            if cur.get(site) == 1 and target.get(site) == 0 and _constraint_at(fam, cur, bc, site):
                steps.append((site, 0))
                cur = flip(cur, site)
                progressed = True
                break
        if not progressed:  # cannot happen for a correct closure
            raise RuntimeError("greedy descent stalled before the closure")
    return steps, cur


def path_to_flip(fam: UpdateFamily, cfg: Configuration, bc: BoundaryCondition, site):
    """Legal path from cfg to flip(cfg, site), or None when unreachable.

    Exists exactly when the closure of cfg empties the site; the returned
    path descends cfg to its closure, then climbs the reversed descent of
    the flipped configuration, so its length is at most twice the volume.
    """
    if cfg.get(site) != 1:
        raise ParameterError("path_to_flip expects an occupied site")
    res = closure(fam, cfg, bc)
    if res.closure.get(site) != 0:
        return None
    down, bottom = _greedy_descent(fam, cfg, bc)
    flipped = flip(cfg, site)
    down2, bottom2 = _greedy_descent(fam, flipped, bc)
    assert bottom == bottom2, "closure invariance violated"
    steps = list(down)
    cur = bottom
    for s, _ in reversed(down2):
        steps.append((s, 1 - cur.get(s)))
        cur = flip(cur, s)
    path = LegalPath(cfg.region, bc, cfg, steps)
    return path


# ---------------------------------------------------------------------------
# integer-encoded state spaces (bit i set = site i occupied)


def config_from_int(region: Region, mask: int) -> Configuration:
    bits = [(mask >> i) & 1 for i in range(region.count)]
    return Configuration(region, bits)


def int_from_config(cfg: Configuration) -> int:
    mask = 0
    for i, b in enumerate(cfg.bits):
        if b:
            mask |= 1 << i
    return mask


def site_rule_masks(fam: UpdateFamily, region: Region, bc: BoundaryCondition):
    """Per site, the in-region bitmasks of rules still alive under bc.

    A rule translated at a site dies when some of its offsets leaves the
    region onto an occupied boundary site; otherwise the constraint holds
    iff all in-region rule sites are empty.
    """
    masks = []
    for x in region.sites():
        alive = []
        for rule in fam.rules:
            m = 0
            dead = False
            for u in rule:
                y = tuple(x[i] + u[i] for i in range(region.dim))
                if y in region:
                    m |= 1 << region.index(y)
                elif bc.lookup(y) != 0:
                    dead = True
                    break
            if not dead:
                alive.append(m)
        masks.append(alive)
    return masks


def constraint_from_masks(masks_at_site, state: int) -> bool:
    return any((state & m) == 0 for m in masks_at_site)


def components(fam: UpdateFamily, region: Region, bc: BoundaryCondition):
    """Partition of all configurations on the window into closure fibers.

    Legal-path reachability classes coincide with these fibers, so the
    partition is computed in one closure per configuration instead of a
    breadth-first walk of the flip graph.  States are integer encoded.
    """
    n = region.count
    if n > _ENUM_CAP:
        raise SizeError(f"window has {n} sites; components caps at {_ENUM_CAP}")
    fibers = {}
    for mask in range(1 << n):
        cfg = config_from_int(region, mask)
        key = closure(fam, cfg, bc).closure.key()
        fibers.setdefault(key, []).append(mask)
    return sorted(fibers.values(), key=lambda c: (len(c), c[0]))


def components_by_reachability(fam: UpdateFamily, region: Region, bc: BoundaryCondition):
    """Flip-graph BFS partition; exponential, used as an oracle in tests."""
    n = region.count
    if n > 14:
        raise SizeError("reachability enumeration caps at 14 sites")
    masks = site_rule_masks(fam, region, bc)
    seen = {}
    comps = []
    for start in range(1 << n):
        if start in seen:
            continue
        comp = []
        stack = [start]
        seen[start] = len(comps)
        while stack:
            s = stack.pop()
            comp.append(s)
            for i in range(n):
                if constraint_from_masks(masks[i], s):
                    t = s ^ (1 << i)
                    if t not in seen:
                        seen[t] = len(comps)
                        stack.append(t)
        comps.append(sorted(comp))
    return sorted(comps, key=lambda c: (len(c), c[0]))
