"""Configurations on finite regions and the padded grids the kernels run on."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Union

import numpy as np

from ..family import UpdateFamily
from ..geometry import HalfPlane, Parallelogram, Point


# ---------------------------------------------------------------------------
# Boundary conventions

@dataclass(frozen=True)
class AllHealthy:
    def __str__(self):
        return "all-healthy"


@dataclass(frozen=True)
class InfectedHalfPlane:
    half_plane: HalfPlane

    def __str__(self):
        h = self.half_plane
        return f"half-plane {h.u.x},{h.u.y} {h.offset} {'closed' if h.closed else 'open'}"


@dataclass(frozen=True)
class FrozenSet:
    points: frozenset

    def __init__(self, points: Iterable = ()):
        object.__setattr__(self, "points", frozenset((int(x), int(y)) for x, y in points))

    def __str__(self):
        return "frozen " + " ".join(f"{x},{y}" for x, y in sorted(self.points))


Boundary = Union[AllHealthy, InfectedHalfPlane, FrozenSet]


def boundary_infected(boundary: Boundary, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Vectorized: which of the points (X, Y) does the convention declare infected."""
    if isinstance(boundary, AllHealthy):
        return np.zeros(X.shape, dtype=bool)
    if isinstance(boundary, InfectedHalfPlane):
        h = boundary.half_plane
        val = (h.u.x * X + h.u.y * Y) * h.offset.denominator
        return val <= h.offset.numerator if h.closed else val < h.offset.numerator
    if isinstance(boundary, FrozenSet):
        out = np.zeros(X.shape, dtype=bool)
        for x, y in boundary.points:
            out |= (X == x) & (Y == y)
        return out
    raise TypeError(f"unknown boundary convention {boundary!r}")


# ---------------------------------------------------------------------------
# Configurations

class Configuration:
    """Infection state on ``region ∩ Z^2``.

    ``bits`` follows the 0 = infected, 1 = healthy convention and is stored as
    one uint8 per site of the region's integer bounding box (rows are y,
    columns are x).  Cells of the box outside the region hold 1 and are
    ignored.  Instances are read-only.
    """

    __slots__ = ("region", "bits", "boundary", "x0", "y0", "mask")

    def __init__(self, region: Parallelogram, bits: np.ndarray, boundary: Boundary | None = None):
        x0, y0, mask = _region_mask(region)
        bits = np.asarray(bits, dtype=np.uint8)
        if bits.shape != mask.shape:
            raise ValueError(f"bits shape {bits.shape} does not match region box {mask.shape}")
        if np.any(bits > 1):
            raise ValueError("bits must be 0 or 1")
        bits = np.where(mask, bits, 1).astype(np.uint8)
        bits.setflags(write=False)
        self.region, self.bits, self.boundary = region, bits, boundary or AllHealthy()
        self.x0, self.y0, self.mask = x0, y0, mask

    # constructors -------------------------------------------------------
    @classmethod
    def empty(cls, region: Parallelogram, boundary: Boundary | None = None) -> "Configuration":
        _, _, mask = _region_mask(region)
        return cls(region, np.ones(mask.shape, np.uint8), boundary)

    @classmethod
    def from_infected(cls, region: Parallelogram, points: Iterable, boundary: Boundary | None = None,
                      strict: bool = True) -> "Configuration":
        x0, y0, mask = _region_mask(region)
        bits = np.ones(mask.shape, np.uint8)
        for x, y in points:
            i, j = int(y) - y0, int(x) - x0
            inside = 0 <= i < mask.shape[0] and 0 <= j < mask.shape[1] and mask[i, j]
            if not inside:
                if strict:
                    raise ValueError(f"point {(x, y)} outside the region")
                continue
            bits[i, j] = 0
        return cls(region, bits, boundary)

    @classmethod
    def from_infected_array(cls, region: Parallelogram, infected: np.ndarray,
                            boundary: Boundary | None = None) -> "Configuration":
        return cls(region, (~np.asarray(infected, dtype=bool)).astype(np.uint8), boundary)

    # views ---------------------------------------------------------------
    @property
    def infected(self) -> np.ndarray:
        return self.mask & (self.bits == 0)

    def infected_points(self) -> list[Point]:
        ys, xs = np.nonzero(self.infected)
        return [(int(x) + self.x0, int(y) + self.y0) for y, x in zip(ys, xs)]

    @property
    def n_infected(self) -> int:
        return int(self.infected.sum())

    @property
    def n_sites(self) -> int:
        return int(self.mask.sum())

    def sites(self) -> list[Point]:
        ys, xs = np.nonzero(self.mask)
        return [(int(x) + self.x0, int(y) + self.y0) for y, x in zip(ys, xs)]

    def in_region(self, p) -> bool:
        i, j = int(p[1]) - self.y0, int(p[0]) - self.x0
        return 0 <= i < self.mask.shape[0] and 0 <= j < self.mask.shape[1] and bool(self.mask[i, j])

    def is_infected(self, p) -> bool:
        """Infection state at p, reading outside sites through the boundary convention."""
        if self.in_region(p):
            return self.bits[int(p[1]) - self.y0, int(p[0]) - self.x0] == 0
        X, Y = np.array([p[0]]), np.array([p[1]])
        return bool(boundary_infected(self.boundary, X, Y)[0])

    def with_infected(self, infected: np.ndarray) -> "Configuration":
        return Configuration.from_infected_array(self.region, infected, self.boundary)

    def flipped(self, p) -> "Configuration":
        if not self.in_region(p):
            raise ValueError(f"{p} outside the region")
        bits = self.bits.copy()
        i, j = int(p[1]) - self.y0, int(p[0]) - self.x0
        bits[i, j] ^= 1
        return Configuration(self.region, bits, self.boundary)

    def restricted(self, R: Parallelogram, boundary: Boundary | None = None) -> "Configuration":
        """``η_R`` as a configuration on R (sites of R outside this region count as healthy)."""
        pts = [p for p in self.infected_points() if R.contains(p)]
        return Configuration.from_infected(R, pts, boundary or AllHealthy())

    def packed(self) -> bytes:
        """Bit-packed infected indicator over the region's sites, row-major."""
        return np.packbits(self.infected[self.mask]).tobytes()

    def __eq__(self, other) -> bool:
        return (isinstance(other, Configuration) and self.region == other.region
                and self.boundary == other.boundary and np.array_equal(self.infected, other.infected))

    def __hash__(self):
        return hash((self.region, self.boundary, self.packed()))

    def __repr__(self) -> str:
        return f"Configuration({self.region}, infected={self.n_infected}/{self.n_sites}, {self.boundary})"

    def render(self) -> str:
        rows = []
        for i in range(self.mask.shape[0] - 1, -1, -1):
            rows.append("".join(("#" if self.bits[i, j] == 0 else ".") if self.mask[i, j] else " "
                                for j in range(self.mask.shape[1])))
        return "\n".join(rows)


@lru_cache(maxsize=256)
def _region_mask(region: Parallelogram):
    x0, y0, m = region.lattice_mask()
    m.setflags(write=False)
    return x0, y0, m


# ---------------------------------------------------------------------------
# Padded grids

class Grid:
    """Padded flat grid for a (family, region, boundary) triple.

    ``state`` arrays used by the kernels are uint8 with 1 = infected.  Cells
    outside the region are never updated; those the boundary declares
    infected are preset to 1 in ``bnd``.
    """

    def __init__(self, family: UpdateFamily, region: Parallelogram, boundary: Boundary, extra: int = 0):
        x0, y0, mask = _region_mask(region)
        pad = family.reach + extra
        self.family, self.region, self.boundary = family, region, boundary
        self.pad = pad
        self.ny, self.nx = mask.shape[0] + 2 * pad, mask.shape[1] + 2 * pad
        self.ox, self.oy = x0 - pad, y0 - pad  # coordinates of flat index 0
        full = np.zeros((self.ny, self.nx), dtype=bool)
        full[pad:pad + mask.shape[0], pad:pad + mask.shape[1]] = mask
        self.region_mask2d = full
        self.upd = full.ravel().astype(np.uint8)
        X, Y = np.meshgrid(np.arange(self.nx) + self.ox, np.arange(self.ny) + self.oy)
        self.X, self.Y = X.ravel(), Y.ravel()
        self.bnd = (boundary_infected(boundary, X, Y) & ~full).ravel().astype(np.uint8)
        self.region_flat = np.flatnonzero(self.upd).astype(np.int64)
        rules = family.rules
        L = max(len(U) for U in rules)
        self.rule_off = np.zeros((len(rules), L), dtype=np.int64)
        self.rule_len = np.array([len(U) for U in rules], dtype=np.int64)
        for r, U in enumerate(rules):
            for k, (dx, dy) in enumerate(U):
                self.rule_off[r, k] = dy * self.nx + dx
        self.inv_off = np.array(sorted({-(dy * self.nx + dx) for dx, dy in family.sites}), dtype=np.int64)
        # local copy of the region box (in region-bits coordinates)
        self.bx0, self.by0, self.bmask = x0, y0, mask

    @property
    def size(self) -> int:
        return self.ny * self.nx

    def flat(self, p) -> int:
        return (int(p[1]) - self.oy) * self.nx + (int(p[0]) - self.ox)

    def point(self, f: int) -> Point:
        return (int(f % self.nx) + self.ox, int(f // self.nx) + self.oy)

    def state_from(self, config: "Configuration") -> np.ndarray:
        """Fresh kernel state: boundary cells plus the configuration's infections."""
        st = self.bnd.copy()
        p = self.pad
        st2 = st.reshape(self.ny, self.nx)
        st2[p:p + self.bmask.shape[0], p:p + self.bmask.shape[1]] |= config.infected.astype(np.uint8)
        return st

    def region_infected(self, state: np.ndarray) -> np.ndarray:
        p = self.pad
        st2 = state.reshape(self.ny, self.nx)
        return st2[p:p + self.bmask.shape[0], p:p + self.bmask.shape[1]].astype(bool) & self.bmask


@lru_cache(maxsize=128)
def grid_for(family: UpdateFamily, region: Parallelogram, boundary: Boundary) -> Grid:
    return Grid(family, region, boundary)


def region_box(width: int, height: int, x0: int = 0, y0: int = 0) -> Parallelogram:
    """Axis-aligned region of ``width x height`` sites with lower-left corner (x0, y0)."""
    return Parallelogram.box(x0, y0, x0 + width - 1, y0 + height - 1)


def centered_box(size: int) -> Parallelogram:
    """``size x size`` box containing the origin near its centre."""
    lo = -(size // 2)
    return Parallelogram.box(lo, lo, lo + size - 1, lo + size - 1)


def diameter_of_box(width: int, height: int) -> float:
    return math.hypot(width - 1, height - 1)
