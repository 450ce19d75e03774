"""Windows, occupancy configurations, boundary conditions, sampling.

A configuration stores one bit per site of a finite rectangular window
(1 = occupied, 0 = empty).  The infinite lattice is never materialized:
every consumer takes a window plus an explicit boundary condition.  Site
indexing is row-major with origin offset, so serialized configurations are
portable: index = (y - oy) * W + (x - ox) in 2D, index = x - ox in 1D.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MissingBoundaryError, ParameterError
from .rng import RandomStream, site_values_np, u64_to_uniform


@dataclass(frozen=True)
class Region:
    """Finite rectangular window of Z^1 or Z^2."""

    dim: int
    origin: tuple
    extent: tuple

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ParameterError("dim must be 1 or 2")
        if len(self.origin) != self.dim or len(self.extent) != self.dim:
            raise ParameterError("origin/extent arity must match dim")
        if any(e < 1 for e in self.extent):
            raise ParameterError("extent components must be >= 1")

    @staticmethod
    def line(length: int, origin: int = 0) -> "Region":
        return Region(1, (origin,), (length,))

    @staticmethod
    def box(width: int, height: int, origin=(0, 0)) -> "Region":
        return Region(2, tuple(origin), (width, height))

    @property
    def count(self) -> int:
        n = 1
        for e in self.extent:
            n *= e
        return n

    def __contains__(self, site) -> bool:
        return all(
            self.origin[i] <= site[i] < self.origin[i] + self.extent[i]
            for i in range(self.dim)
        )

    def index(self, site) -> int:
        if site not in self:
            raise ParameterError(f"site {site} outside region")
        if self.dim == 1:
            return site[0] - self.origin[0]
        return (site[1] - self.origin[1]) * self.extent[0] + (site[0] - self.origin[0])

    def site(self, index: int) -> tuple:
        if not 0 <= index < self.count:
            raise ParameterError("index out of range")
        if self.dim == 1:
            return (self.origin[0] + index,)
        w = self.extent[0]
        return (self.origin[0] + index % w, self.origin[1] + index // w)

    def sites(self):
        if self.dim == 1:
            ox = self.origin[0]
            for i in range(self.extent[0]):
                yield (ox + i,)
        else:
            ox, oy = self.origin
            for y in range(self.extent[1]):
                for x in range(self.extent[0]):
                    yield (ox + x, oy + y)

    def center(self) -> tuple:
        return tuple(self.origin[i] + self.extent[i] // 2 for i in range(self.dim))


class BoundaryCondition:
    """Frozen configuration outside the window: all-1, all-0, or explicit."""

    ALL_OCCUPIED = "occupied"
    ALL_EMPTY = "empty"

    def __init__(self, kind: str, table: dict | None = None):
        if kind not in (self.ALL_OCCUPIED, self.ALL_EMPTY, "explicit"):
            raise ParameterError(f"unknown boundary kind {kind!r}")
        self.kind = kind
        self.table = dict(table) if table else {}

    @staticmethod
    def occupied() -> "BoundaryCondition":
        return BoundaryCondition(BoundaryCondition.ALL_OCCUPIED)

    @staticmethod
    def empty() -> "BoundaryCondition":
        return BoundaryCondition(BoundaryCondition.ALL_EMPTY)

    @staticmethod
    def explicit(table: dict) -> "BoundaryCondition":
        return BoundaryCondition("explicit", {tuple(k): int(v) for k, v in table.items()})

    def lookup(self, site) -> int:
        if self.kind == self.ALL_OCCUPIED:
            return 1
        if self.kind == self.ALL_EMPTY:
            return 0
        try:
            return self.table[tuple(site)]
        except KeyError:
            raise MissingBoundaryError(f"boundary value for {site} not provided")

    def covers(self, region: Region, offsets) -> bool:
        """True when every out-of-region site reachable by an offset has a value."""
        if self.kind != "explicit":
            return True
        for x in region.sites():
            for u in offsets:
                y = tuple(x[i] + u[i] for i in range(region.dim))
                if y not in region and y not in self.table:
                    return False
        return True

    def __repr__(self):
        if self.kind == "explicit":
            return f"BoundaryCondition.explicit({len(self.table)} sites)"
        return f"BoundaryCondition({self.kind})"


class Configuration:
    """Immutable occupancy field over a Region (1 occupied, 0 empty)."""

    __slots__ = ("region", "bits")

    def __init__(self, region: Region, bits):
        arr = np.asarray(bits, dtype=np.uint8).reshape(region.count)
        if arr.size != region.count:
            raise ParameterError("bit count must equal site count")
        if not np.all((arr == 0) | (arr == 1)):
            raise ParameterError("bits must be 0 or 1")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "region", region)
        object.__setattr__(self, "bits", arr)

    def __setattr__(self, *a):
        raise AttributeError("Configuration is immutable")

    @staticmethod
    def filled(region: Region, bit: int) -> "Configuration":
        return Configuration(region, np.full(region.count, bit, dtype=np.uint8))

    @staticmethod
    def all_occupied(region: Region) -> "Configuration":
        return Configuration.filled(region, 1)

    @staticmethod
    def all_empty(region: Region) -> "Configuration":
        return Configuration.filled(region, 0)

    def get(self, site) -> int:
        return int(self.bits[self.region.index(site)])

    @property
    def vacancy_count(self) -> int:
        """Number of empty sites."""
        return int(self.region.count - int(self.bits.sum()))

    def key(self) -> bytes:
        return self.bits.tobytes()

    def __eq__(self, other):
        return (
            isinstance(other, Configuration)
            and self.region == other.region
            and np.array_equal(self.bits, other.bits)
        )

    def __hash__(self):
        return hash((self.region, self.key()))

    def with_bits(self, bits) -> "Configuration":
        return Configuration(self.region, bits)

    def __repr__(self):
        return f"Configuration({self.region.extent}, vacancies={self.vacancy_count})"


def flip(cfg: Configuration, site) -> Configuration:
    """Configuration differing from cfg exactly at site."""
    i = cfg.region.index(site)
    bits = cfg.bits.copy()
    bits[i] ^= 1
    return cfg.with_bits(bits)


def concatenate(inner: Configuration, outer: BoundaryCondition):
    """Extended lookup: inner bits inside the window, boundary bits outside."""
    region = inner.region

    def lookup(site) -> int:
        if site in region:
            return int(inner.bits[region.index(site)])
        return outer.lookup(site)

    return lookup


def sample_product(region: Region, q: float, stream: RandomStream) -> Configuration:
    """Product measure draw: each site independently empty with probability q.

    Draws are keyed by absolute site coordinates, so enlarging the region
    around the same stream reproduces the bits of all shared sites.
    """
    if not 0.0 <= q <= 1.0:
        raise ParameterError("q must be in [0, 1]")
    if region.dim == 1:
        xs = np.arange(region.origin[0], region.origin[0] + region.extent[0], dtype=np.int64)
        draws = site_values_np(stream.key, xs)
    else:
        w, h = region.extent
        ox, oy = region.origin
        gx, gy = np.meshgrid(
            np.arange(ox, ox + w, dtype=np.int64),
            np.arange(oy, oy + h, dtype=np.int64),
        )
        draws = site_values_np(stream.key, gx.ravel(), gy.ravel())
    bits = (u64_to_uniform(draws) >= q).astype(np.uint8)
    return Configuration(region, bits)


def dump_text(cfg: Configuration) -> str:
    """Serialize as `W H ox oy` header plus H rows of 0/1 characters."""
    r = cfg.region
    if r.dim == 1:
        w, h = r.extent[0], 1
        ox, oy = r.origin[0], 0
        rows = [cfg.bits]
    else:
        w, h = r.extent
        ox, oy = r.origin
        rows = cfg.bits.reshape(h, w)
    lines = [f"{w} {h} {ox} {oy}"]
    for row in rows:
        lines.append("".join("1" if b else "0" for b in row))
    return "\n".join(lines) + "\n"


def load_text(text: str) -> Configuration:
    """Inverse of dump_text; a single-row grid loads as a 1D region."""
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    if not lines:
        raise ParameterError("empty configuration text")
    try:
        w, h, ox, oy = (int(tok) for tok in lines[0].split())
    except ValueError:
        raise ParameterError("malformed configuration header")
    if len(lines) != h + 1:
        raise ParameterError(f"expected {h} data rows, found {len(lines) - 1}")
    bits = []
    for ln in lines[1:]:
        if len(ln) != w or set(ln) - {"0", "1"}:
            raise ParameterError("malformed configuration row")
        bits.extend(1 if c == "1" else 0 for c in ln)
    region = Region.line(w, ox) if h == 1 else Region.box(w, h, (ox, oy))
    return Configuration(region, bits)
