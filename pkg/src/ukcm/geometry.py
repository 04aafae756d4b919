"""Exact lattice geometry: rational directions, half-planes, parallelograms,
droplets, and proximity-graph connectivity.

Directions are primitive integer vectors; every predicate is decided with
integer or :class:`fractions.Fraction` arithmetic.  Parallelogram and droplet
bounds are expressed against the *integer* direction vectors (not unit
vectors), so that the bounding box of a lattice set has integer bounds.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache, total_ordering
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

Point = tuple[int, int]

# Offsets larger than this are refused rather than silently carried around.
MAX_MAGNITUDE = 1 << 62


class GeometryError(ValueError):
    """Rejected geometric input."""


def _check_magnitude(x: Fraction) -> Fraction:
    if abs(x.numerator) > MAX_MAGNITUDE or x.denominator > MAX_MAGNITUDE:
        raise OverflowError(f"rational {x} exceeds the supported magnitude")
    return x


def as_rational(x) -> Fraction:
    """Convert ints, Fractions or floats (exactly) to a checked Fraction."""
    if isinstance(x, Fraction):
        return _check_magnitude(x)
    if isinstance(x, (int, np.integer)):
        return _check_magnitude(Fraction(int(x)))
    if isinstance(x, float):
        if not math.isfinite(x):
            raise GeometryError(f"non-finite offset {x}")
        return _check_magnitude(Fraction(x))
    return _check_magnitude(Fraction(x))


# ---------------------------------------------------------------------------
# Directions

def _half(x: int, y: int) -> int:
    return 0 if (y > 0 or (y == 0 and x > 0)) else 1


@total_ordering
@dataclass(frozen=True)
class Direction:
    """A primitive integer vector, i.e. a rational point of the circle.

    Ordering is by counter-clockwise angle from (1, 0), decided by the
    (half-plane, cross product) rule.
    """

    x: int
    y: int

    def __post_init__(self):
        if (self.x, self.y) == (0, 0):
            raise GeometryError("the zero vector is not a direction")
        if math.gcd(self.x, self.y) != 1:
            raise GeometryError(f"({self.x},{self.y}) is not primitive; use normalize_direction")

    @property
    def v(self) -> Point:
        return (self.x, self.y)

    def __neg__(self) -> "Direction":
        return Direction(-self.x, -self.y)

    def __lt__(self, other: "Direction") -> bool:
        ha, hb = _half(self.x, self.y), _half(other.x, other.y)
        if ha != hb:
            return ha < hb
        return cross(self.v, other.v) > 0

    def rot90(self) -> "Direction":
        """Counter-clockwise rotation by a right angle."""
        return Direction(-self.y, self.x)

    def dot(self, p) -> int:
        return self.x * p[0] + self.y * p[1]

    @property
    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def angle(self) -> float:
        """Angle in [0, 2pi); for display only, never used in predicates."""
        a = math.atan2(self.y, self.x)
        return a if a >= 0 else a + 2 * math.pi

    def __repr__(self) -> str:
        return f"Direction({self.x},{self.y})"

    def __str__(self) -> str:
        return f"({self.x},{self.y})"


def cross(a, b) -> int:
    return a[0] * b[1] - a[1] * b[0]


def normalize_direction(v) -> Direction:
    """Primitive vector positively collinear with ``v``.

    >>> normalize_direction((-4, 6))
    Direction(-2,3)
    """
    x, y = int(v[0]), int(v[1])
    if x == 0 and y == 0:
        raise GeometryError("cannot normalize the zero vector")
    g = math.gcd(x, y)
    return Direction(x // g, y // g)


def ccw_between(a: Direction, u: Direction, b: Direction) -> bool:
    """True if ``u`` lies on the closed counter-clockwise arc from a to b.

    When ``a == b`` the arc is the single point a.
    """
    if a == b:
        return u == a
    return _rel_key(a, u) <= _rel_key(a, b)


def strictly_between(a: Direction, u: Direction, b: Direction) -> bool:
    """Open counter-clockwise arc from a to b (a == b means the full circle minus a)."""
    if u == a or u == b:
        return False
    if a == b:
        return True
    return _rel_key(a, u) < _rel_key(a, b)


def _rel_key(a: Direction, u: Direction):
    # Express u in the frame where a points along +x; compare in that frame.
    rx = a.x * u.x + a.y * u.y
    ry = a.x * u.y - a.y * u.x
    h = _half(rx, ry)
    # within a half the angle is monotone in -rx/ry (ry != 0) with ry == 0 first
    if ry == 0:
        return (h, 0, Fraction(0))
    return (h, 1, Fraction(-rx, ry))


def sort_directions(ds: Iterable[Direction]) -> list[Direction]:
    return sorted(set(ds))


def direction_between(a: Direction, b: Direction) -> Direction:
    """A rational direction strictly inside the open ccw arc from a to b."""
    if a == b or b == -a or _rel_key(a, b) > _rel_key(a, -a):
        return a.rot90()
    return normalize_direction((a.x + b.x, a.y + b.y))


# ---------------------------------------------------------------------------
# Half-planes

@dataclass(frozen=True)
class HalfPlane:
    """``{y : <u, y> < offset}`` (or ``<=`` when closed)."""

    u: Direction
    offset: Fraction = Fraction(0)
    closed: bool = False

    def __post_init__(self):
        object.__setattr__(self, "offset", as_rational(self.offset))

    def contains(self, p) -> bool:
        return half_plane_contains(self, p)


def half_plane_contains(h: HalfPlane, p) -> bool:
    val = h.u.x * int(p[0]) + h.u.y * int(p[1])
    off = h.offset
    # cross-multiplied comparison: val * den  (<, <=)  num
    lhs = val * off.denominator
    return lhs <= off.numerator if h.closed else lhs < off.numerator


# ---------------------------------------------------------------------------
# Parallelograms

def _det(p, q) -> int:
    return p[0] * q[1] - p[1] * q[0]


@dataclass(frozen=True)
class Parallelogram:
    """``R(a,b;c,d) = {x : a <= <x,u3> <= c, b <= <x,u4> <= d}``.

    ``axes`` is the pair ``(u1, u2)``; ``u3 = -u1`` and ``u4 = -u2``.
    """

    axes: tuple[Direction, Direction]
    a: Fraction
    b: Fraction
    c: Fraction
    d: Fraction

    def __post_init__(self):
        u1, u2 = self.axes
        if cross(u1.v, u2.v) == 0:
            raise GeometryError("parallelogram axes must not be collinear")
        for k in "abcd":
            object.__setattr__(self, k, as_rational(getattr(self, k)))
        if self.a > self.c or self.b > self.d:
            raise GeometryError(f"empty parallelogram bounds {self.bounds}")

    @classmethod
    def box(cls, x0: int, y0: int, x1: int, y1: int) -> "Parallelogram":
        """Axis-aligned box ``[x0,x1] x [y0,y1]`` with axes u1=(-1,0), u2=(0,-1)."""
        return cls(AXIS_ALIGNED, x0, y0, x1, y1)

    @property
    def u3(self) -> Direction:
        return -self.axes[0]

    @property
    def u4(self) -> Direction:
        return -self.axes[1]

    @property
    def bounds(self) -> tuple[Fraction, Fraction, Fraction, Fraction]:
        return (self.a, self.b, self.c, self.d)

    def coords(self, p) -> tuple[int, int]:
        """The two projections ``(<p,u3>, <p,u4>)``."""
        return (self.u3.dot(p), self.u4.dot(p))

    def contains(self, p) -> bool:
        s, t = self.coords(p)
        return self.a <= s <= self.c and self.b <= t <= self.d

    def _solve(self, s: Fraction, t: Fraction) -> tuple[Fraction, Fraction]:
        u3, u4 = self.u3, self.u4
        det = u3.x * u4.y - u3.y * u4.x
        x = (s * u4.y - t * u3.y) / det
        y = (u3.x * t - u4.x * s) / det
        return (x, y)

    def corners(self) -> list[tuple[Fraction, Fraction]]:
        return [self._solve(s, t) for s, t in ((self.a, self.b), (self.c, self.b),
                                                 (self.c, self.d), (self.a, self.d))]

    def diameter_sq(self) -> Fraction:
        cs = self.corners()
        return max((p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2 for p, q in itertools.combinations(cs, 2))

    @property
    def diameter(self) -> float:
        return math.sqrt(self.diameter_sq())

    def diameter_at_least(self, t: float) -> bool:
        return t <= 0 or self.diameter_sq() >= Fraction(t) ** 2

    def diameter_at_most(self, t: float) -> bool:
        return t >= 0 and self.diameter_sq() <= Fraction(t) ** 2

    def integer_bbox(self) -> tuple[int, int, int, int]:
        cs = self.corners()
        xs = [p[0] for p in cs]
        ys = [p[1] for p in cs]
        return (math.ceil(min(xs)), math.ceil(min(ys)), math.floor(max(xs)), math.floor(max(ys)))

    def lattice_points(self) -> list[Point]:
        x0, y0, x1, y1 = self.integer_bbox()
        return [(x, y) for y in range(y0, y1 + 1) for x in range(x0, x1 + 1) if self.contains((x, y))]

    def lattice_mask(self) -> tuple[int, int, np.ndarray]:
        """Bounding integer box origin and a boolean mask of shape (ny, nx)."""
        x0, y0, x1, y1 = self.integer_bbox()
        xs = np.arange(x0, x1 + 1)
        ys = np.arange(y0, y1 + 1)
        X, Y = np.meshgrid(xs, ys)
        u3, u4 = self.u3, self.u4
        s = u3.x * X + u3.y * Y
        t = u4.x * X + u4.y * Y
        # bounds may be rational: compare s*den against num
        m = np.ones(X.shape, dtype=bool)
        for arr, lo, hi in ((s, self.a, self.c), (t, self.b, self.d)):
            m &= arr * lo.denominator >= lo.numerator
            m &= arr * hi.denominator <= hi.numerator
        return x0, y0, m

    def size(self) -> int:
        return int(self.lattice_mask()[2].sum())

    def intersects(self, other: "Parallelogram") -> bool:
        if other.axes != self.axes:
            raise GeometryError("intersection is only defined for a shared axis system")
        return not (self.c < other.a or other.c < self.a or self.d < other.b or other.d < self.b)

    def translate_bounds(self, da=0, db=0, dc=0, dd=0) -> "Parallelogram":
        return Parallelogram(self.axes, self.a + da, self.b + db, self.c + dc, self.d + dd)

    def __str__(self) -> str:
        u1, u2 = self.axes
        return f"R({self.a},{self.b};{self.c},{self.d})[u1={u1},u2={u2}]"


AXIS_ALIGNED = (Direction(-1, 0), Direction(0, -1))


def bounding_parallelogram(points: Iterable, axes=AXIS_ALIGNED) -> Parallelogram:
    """Smallest ``R(a,b;c,d)`` in ``axes`` containing ``points``."""
    pts = list(points)
    if not pts:
        raise GeometryError("bounding parallelogram of an empty set")
    u1, u2 = axes
    s = [-(u1.x * p[0] + u1.y * p[1]) for p in pts]
    t = [-(u2.x * p[0] + u2.y * p[1]) for p in pts]
    return Parallelogram(tuple(axes), min(s), min(t), max(s), max(t))


# ---------------------------------------------------------------------------
# Proximity graphs

@lru_cache(maxsize=64)
def disk_offsets(radius: float, half: bool = False) -> tuple[Point, ...]:
    """Nonzero integer vectors of Euclidean length <= radius.

    With ``half=True`` only one of each pair ``{v, -v}`` is returned.
    A relative slack of 1e-9 absorbs rounding in radii such as ``4*sqrt(2)``.
    """
    r2 = radius * radius * (1 + 1e-9)
    R = int(math.floor(radius + 1e-9))
    out = []
    for dy in range(-R, R + 1):
        for dx in range(-R, R + 1):
            if (dx, dy) == (0, 0) or dx * dx + dy * dy > r2:
                continue
            if half and (dy < 0 or (dy == 0 and dx < 0)):
                continue
            out.append((dx, dy))
    return tuple(out)


def within(p, q, radius: float) -> bool:
    dx, dy = p[0] - q[0], p[1] - q[1]
    return dx * dx + dy * dy <= radius * radius * (1 + 1e-9)


def gamma_components(points: Iterable, radius: float) -> list[list[Point]]:
    """Connected classes of ``x ~ y  iff  |x - y| <= radius``.

    Classes are returned with sorted members, ordered by smallest member.
    """
    if radius <= 0:
        raise GeometryError("radius must be positive")
    pts = sorted({(int(p[0]), int(p[1])) for p in points})
    n = len(pts)
    if n == 0:
        return []
    index = {p: i for i, p in enumerate(pts)}
    rows, cols = [], []
    offs = disk_offsets(float(radius), half=True)
    if len(offs) < n:
        for i, (x, y) in enumerate(pts):
            for dx, dy in offs:
                j = index.get((x + dx, y + dy))
                if j is not None:
                    rows.append(i)
                    cols.append(j)
    else:
        for i, j in itertools.combinations(range(n), 2):
            if within(pts[i], pts[j], radius):
                rows.append(i)
                cols.append(j)
    g = coo_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n, n))
    _, labels = connected_components(g, directed=False)
    classes: dict[int, list[Point]] = {}
    for p, lab in zip(pts, labels):
        classes.setdefault(int(lab), []).append(p)
    return sorted(classes.values(), key=lambda c: c[0])


def point_set_diameter(points: Sequence) -> float:
    pts = np.asarray(points, dtype=float)
    if len(pts) < 2:
        return 0.0
    d = pts[:, None, :] - pts[None, :, :]
    return float(np.sqrt((d ** 2).sum(-1).max()))


# ---------------------------------------------------------------------------
# Droplets

@dataclass(frozen=True)
class Droplet:
    """``{x : <x, v> <= offset_v for every face direction v}``.

    Offsets are kept normalized (each equals the support value of the
    droplet in its direction) for the face sets used here: three directions
    with 0 inside their convex hull, or two opposite pairs.
    """

    faces: tuple[Direction, ...]
    offsets: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.faces) != len(self.offsets):
            raise GeometryError("one offset per face required")
        object.__setattr__(self, "offsets", tuple(as_rational(o) for o in self.offsets))

    def contains_point(self, p) -> bool:
        return all(v.x * p[0] + v.y * p[1] <= o for v, o in zip(self.faces, self.offsets))

    def vertices(self) -> list[tuple[Fraction, Fraction]]:
        return _polygon(self.faces, self.offsets)

    def diameter_sq(self) -> Fraction:
        vs = self.vertices()
        if len(vs) < 2:
            return Fraction(0)
        return max((p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2 for p, q in itertools.combinations(vs, 2))

    @property
    def diameter(self) -> float:
        return math.sqrt(self.diameter_sq())

    def intersects(self, other: "Droplet") -> bool:
        if self.faces == other.faces and _is_paired(self.faces):
            # two opposite pairs: interval overlap on each pair
            idx = {v: i for i, v in enumerate(self.faces)}
            for v in self.faces:
                w = -v
                if not (-self.offsets[idx[w]] <= other.offsets[idx[v]]
                        and -other.offsets[idx[w]] <= self.offsets[idx[v]]):
                    return False
            return True
        poly = self.vertices()
        for v, o in zip(other.faces, other.offsets):
            poly = _clip(poly, v, o)
            if not poly:
                return False
        return True

    def contains_droplet(self, other: "Droplet") -> bool:
        return all(self.contains_point(p) for p in other.vertices())

    def join(self, other: "Droplet") -> "Droplet":
        """``D1 v D2``: the smallest droplet with these faces containing both."""
        if self.faces != other.faces:
            raise GeometryError("join requires a common face set")
        return Droplet(self.faces, tuple(max(p, q) for p, q in zip(self.offsets, other.offsets)))


def _is_paired(faces: Sequence[Direction]) -> bool:
    return len(faces) == 4 and all(-v in faces for v in faces)


def check_face_set(faces: Sequence[Direction]) -> tuple[Direction, ...]:
    """Validate a droplet face set: 3 directions positively spanning, or 2 opposite pairs."""
    fs = tuple(sorted(set(faces)))
    if len(fs) == 4 and _is_paired(fs):
        if cross(fs[0].v, fs[1].v) == 0:
            raise GeometryError("face pairs must not be collinear")
        return fs
    if len(fs) == 3:
        # 0 lies in the interior of the hull iff every gap between consecutive directions is < pi
        for i in range(3):
            a, b = fs[i], fs[(i + 1) % 3]
            if cross(a.v, b.v) <= 0:
                raise GeometryError("three face directions must surround the origin")
        return fs
    raise GeometryError("face set must have three directions or two opposite pairs")


def smallest_droplet(points: Iterable, faces: Sequence[Direction], margin: float = 0.0) -> Droplet:
    """Smallest droplet with the given faces containing the ``margin``-neighbourhood of points.

    The margin term ``margin * |v|`` is irrational in general; it is rounded
    up to the nearest multiple of 2^-20 so that the result still contains the
    neighbourhood and stays exactly representable.
    """
    pts = list(points)
    if not pts:
        raise GeometryError("droplet of an empty set")
    offs = []
    for v in faces:
        m = max(v.x * p[0] + v.y * p[1] for p in pts)
        pad = Fraction(math.ceil(margin * v.norm * (1 << 20)), 1 << 20) if margin > 0 else Fraction(0)
        offs.append(Fraction(m) + pad)
    return Droplet(tuple(faces), tuple(offs))


def _polygon(faces, offsets):
    """Vertices of the bounded polygon ∩{<x,v> <= o}, by clipping a large box."""
    big = Fraction(1024 * max(1, max(abs(o) for o in offsets)))
    poly = [(-big, -big), (big, -big), (big, big), (-big, big)]
    for v, o in zip(faces, offsets):
        poly = _clip(poly, v, o)
        if not poly:
            return []
    return poly


def _clip(poly, v: Direction, o: Fraction):
    """Sutherland-Hodgman clip of a convex polygon by ``<x,v> <= o`` (exact)."""
    if not poly:
        return []
    out = []
    n = len(poly)
    for i in range(n):
        p, q = poly[i], poly[(i + 1) % n]
        fp = v.x * p[0] + v.y * p[1] - o
        fq = v.x * q[0] + v.y * q[1] - o
        if fp <= 0:
            out.append(p)
        if (fp < 0 < fq) or (fq < 0 < fp):
            t = fp / (fp - fq)
            out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
    # drop consecutive duplicates (degenerate polygons stay non-empty)
    dedup = []
    for p in out:
        if not dedup or dedup[-1] != p:
            dedup.append(p)
    if len(dedup) > 1 and dedup[0] == dedup[-1]:
        dedup.pop()
    return dedup


# ---------------------------------------------------------------------------
# Constants

def family_range(rules) -> float:
    """Max pairwise distance over ``U ∪ {0}``, maximized over the rules."""
    r2 = 0
    for U in rules:
        pts = list(U) + [(0, 0)]
        for p, q in itertools.combinations(pts, 2):
            r2 = max(r2, (p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2)
    return math.sqrt(r2)


@dataclass(frozen=True)
class ConstantPack:
    """The separated constants ``r < C1 < C2' < C2 < ... < C6`` and the scale K."""

    r: float
    C1: float
    C2p: float
    C2: float
    C3: float
    C4p: float
    C4: float
    C5: float
    C6: float
    K: float
    micro: bool = field(default=False, compare=True)

    def __post_init__(self):
        chain = [self.r, self.C1, self.C2p, self.C2, self.C3, self.C4p, self.C4, self.C5, self.C6]
        if any(not (x > 0 and math.isfinite(x)) for x in chain + [self.K]):
            raise GeometryError("constants must be positive and finite")
        if any(a >= b for a, b in zip(chain, chain[1:])):
            raise GeometryError(f"constants must increase strictly: {chain}")
        if not self.micro and self.K < self.C1 ** 2 * self.C2p * (1 - 1e-12):
            raise GeometryError("K must be at least C1^2 * C2' (use ConstantPack.micro for desk-scale tests)")

    @classmethod
    def default(cls, family, K: float | None = None, **overrides) -> "ConstantPack":
        """Geometric defaults ``C1=4, C2'=4r, C2=4C2', ...``.

        ``family`` may be an UpdateFamily or an iterable of rules.  When the
        range r reaches 4 the first constant is raised to ``2r`` to keep the
        chain strictly increasing.
        """
        rules = getattr(family, "rules", family)
        r = family_range(rules)
        C1 = overrides.pop("C1", 4.0 if r < 4 else 2.0 * r)
        C2p = overrides.pop("C2p", 4.0 * r if 4.0 * r > C1 else 2.0 * C1)
        C2 = overrides.pop("C2", 4.0 * C2p)
        C3 = overrides.pop("C3", 4.0 * C2)
        C4p = overrides.pop("C4p", 4.0 * C3)
        C4 = overrides.pop("C4", 4.0 * C4p)
        C5 = overrides.pop("C5", 4.0 * C4)
        C6 = overrides.pop("C6", 4.0 * C5)
        micro = overrides.pop("micro", False)
        if overrides:
            raise GeometryError(f"unknown constant overrides {sorted(overrides)}")
        if K is None:
            K = C1 * C1 * C2p
        return cls(r, C1, C2p, C2, C3, C4p, C4, C5, C6, float(K), micro)

    @classmethod
    def make_micro(cls, family, K: float, **overrides) -> "ConstantPack":
        """Desk-scale pack that waives ``K >= C1^2 C2'`` (all other checks kept)."""
        return cls.default(family, K=K, micro=True, **overrides)

    @property
    def critical_range(self) -> tuple[float, float]:
        return (self.K / self.C1, self.K)

    def as_dict(self) -> dict[str, float]:
        return {"r": self.r, "C1": self.C1, "C2p": self.C2p, "C2": self.C2, "C3": self.C3,
                "C4p": self.C4p, "C4": self.C4, "C5": self.C5, "C6": self.C6, "K": self.K,
                "micro": self.micro}
