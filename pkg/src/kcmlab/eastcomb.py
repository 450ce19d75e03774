"""Exhaustive verification of the East-chain vacancy-budget bottleneck.

With an empty site fixed at the origin and at most n simultaneous vacancies
on the negative half-line, breadth-first search enumerates every reachable
occupancy pattern.  The farthest reachable vacancy sits at distance
2^n - 1, and the number of patterns using the full budget is at most
n! * 2^(n choose 2); both facts are checked against the enumeration, which
doubles as its own oracle.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .errors import SizeError
from .family import catalog
from .lattice import BoundaryCondition, Configuration, Region
from .legalpath import LegalPath, validate

_MAX_BUDGET = 5


@dataclass
class ReachResult:
    n: int
    ell: int
    counts: list  # counts[k] = number of reachable states with k vacancies
    witness: LegalPath  # legal path creating a vacancy at distance ell

    @property
    def bound_full_budget(self) -> int:
        """n! * 2^(n(n-1)/2), the encoding bound on counts[n]."""
        import math

        return math.factorial(self.n) * 2 ** (self.n * (self.n - 1) // 2)


def _moves(state: frozenset, n: int, window: int):
    """Legal single flips from a vacancy-position set (sites -window..-1)."""
    for x in range(-window, 0):
        right_empty = (x + 1 == 0) or (x + 1 in state)
        if not right_empty:
            continue
        if x in state:
            yield x, 1  # occupy
        elif len(state) < n:
            yield x, 0  # empty, staying within budget


def enumerate_reach(n: int) -> ReachResult:
    """BFS of all states reachable from all-occupied with <= n vacancies."""
    if not 1 <= n <= _MAX_BUDGET:
        raise SizeError(f"budget n must be in 1..{_MAX_BUDGET}")
    window = 1 << n
    start = frozenset()
    parent = {start: None}
    queue = deque([start])
    ell = 0
    deepest_state = None
    while queue:
        state = queue.popleft()
        reach = -min(state) if state else 0
        if reach > ell:
            ell = reach
            deepest_state = state
        for x, bit in _moves(state, n, window):
            nxt = state - {x} if bit == 1 else state | {x}
            if nxt not in parent:
                parent[nxt] = (state, x, bit)
                queue.append(nxt)

    counts = [0] * (n + 1)
    for state in parent:
        counts[len(state)] += 1

    steps = []
    cur = deepest_state
    while parent[cur] is not None:
        prev, x, bit = parent[cur]
        steps.append(((x,), bit))
        cur = prev
    steps.reverse()
    region = Region.line(window, -window)
    witness = LegalPath(
        region,
        BoundaryCondition.explicit({(0,): 0}),
        Configuration.all_occupied(region),
        steps,
    )
    assert validate(catalog("east1d"), witness) is None
    return ReachResult(n, ell, counts, witness)


def reach_within_budget(n: int, target_depth: int) -> bool:
    """Can a vacancy appear at distance >= target_depth with budget n?"""
    if target_depth <= 0:
        return True
    return enumerate_reach(n).ell >= target_depth
