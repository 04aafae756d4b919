"""Legal paths, n-good configurations and the exhaustive bottleneck verifier.

A configuration on a region R is encoded, wherever whole state spaces are
enumerated, as an integer whose bit i is set when site i is infected; site
order is the row-major order of the region's lattice points.
"""
from __future__ import annotations

import math
import time
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from ..bootstrap.config import Configuration
from ..bootstrap.crossing import EXACT_BUDGET, MODES, RegionProblem
from ..bootstrap.span import max_disjoint_spanned, span
from ..family import BudgetError, UpdateFamily
from ..geometry import ConstantPack, Parallelogram

DEFAULT_SITE_BUDGET = 20


# ---------------------------------------------------------------------------
# Legal steps

def constraint_in(infected: set, s, family: UpdateFamily, R: Parallelogram) -> bool:
    """Some rule translate, cut down to R, is fully infected.  Sites outside R impose nothing."""
    sx, sy = s
    for U in family.rules:
        if all((sx + dx, sy + dy) in infected for dx, dy in U if R.contains((sx + dx, sy + dy))):
            return True
    return False


def legal_step_site(before: Configuration, after: Configuration, family: UpdateFamily,
                    R: Parallelogram | None = None):
    """The flipped site if ``before -> after`` is one legal step, else None."""
    if before.region != after.region:
        return None
    diff = np.argwhere(before.bits != after.bits)
    if diff.shape[0] != 1:
        return None
    i, j = diff[0]
    s = (int(j) + before.x0, int(i) + before.y0)
    R = R or before.region
    if not R.contains(s):
        return None
    return s if constraint_in(set(before.infected_points()), s, family, R) else None


def is_legal_path(path: Sequence[Configuration], R: Parallelogram, family: UpdateFamily) -> bool:
    """Each step flips exactly one site of R whose constraint (inside R) held before the flip."""
    if not path:
        return False
    if any(c.region != path[0].region for c in path):
        return False
    return all(legal_step_site(a, b, family, R) is not None for a, b in zip(path, path[1:]))


# ---------------------------------------------------------------------------
# Crossing strips and n-goodness

def _positions(lo: Fraction, hi: Fraction, width: Fraction) -> list[Fraction]:
    """Representative left offsets a in [lo, hi - width] for strips [a, a + width].

    Lattice points have integer projections, so every strip is combinatorially
    equal to one whose a or a + width is an integer, or to a midpoint between
    two consecutive such values.
    """
    top = hi - width
    if top < lo:
        return []
    pts = {lo, top}
    for k in range(math.ceil(lo), math.floor(top) + 1):
        pts.add(Fraction(k))
    for k in range(math.ceil(lo + width), math.floor(hi) + 1):
        pts.add(Fraction(k) - width)
    pts = sorted(pts)
    mids = [(x + y) / 2 for x, y in zip(pts, pts[1:])]
    return sorted(set(pts) | set(mids))


def _lattice_key(S: Parallelogram) -> tuple:
    return tuple(f(v) for v in (S.a, S.b, S.c, S.d) for f in (math.floor, math.ceil))


def crossing_strips(R: Parallelogram, ell, h) -> list[tuple[Parallelogram, object]]:
    """All strips R(a,b;a+ell,d) (direction u1) and R(a,b;c,b+h) (direction u2) of R, up to lattice equivalence."""
    ell, h = Fraction(ell), Fraction(h)
    u1, u2 = R.axes
    out, seen = [], set()
    for a in _positions(R.a, R.c, ell):
        S = Parallelogram(R.axes, a, R.b, a + ell, R.d)
        key = (u1, _lattice_key(S))
        if key not in seen:
            seen.add(key)
            out.append((S, u1))
    for b in _positions(R.b, R.d, h):
        S = Parallelogram(R.axes, R.a, b, R.c, b + h)
        key = (u2, _lattice_key(S))
        if key not in seen:
            seen.add(key)
            out.append((S, u2))
    return out


class GoodnessOracle:
    """Caches everything needed to decide n-goodness of many configurations on one region."""

    def __init__(self, R: Parallelogram, family: UpdateFamily, pack: ConstantPack, ell, h, mode: str = "Exact"):
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        self.R, self.family, self.pack, self.mode = R, family, pack, mode
        self.whole = RegionProblem(R, R.axes[0], family, pack)
        self.points = self.whole.site_points
        self.strips = []
        for S, u in crossing_strips(R, ell, h):
            prob = RegionProblem(S, u, family, pack)
            idx = np.array([self.whole.index[p] for p in prob.site_points], dtype=np.int64)
            self.strips.append((prob, idx, {}))
        self._count: dict = {}

    @property
    def n_sites(self) -> int:
        return len(self.points)

    def config_of(self, state: int) -> Configuration:
        return Configuration.from_infected(self.R, [p for i, p in enumerate(self.points) if state >> i & 1])

    def mask_of_state(self, state: int) -> np.ndarray:
        return np.array([(state >> i) & 1 for i in range(self.n_sites)], dtype=bool)

    def state_of(self, config: Configuration) -> int:
        st = 0
        for p in config.infected_points():
            i = self.whole.index.get(p)
            if i is not None:
                st |= 1 << i
        return st

    def _roots(self, state: int, mask: np.ndarray | None):
        """Root extents split by scale: (any root >= K/C1, in-range roots, any root > K)."""
        mask = self.mask_of_state(state) if mask is None else mask
        lo, hi = self.pack.critical_range
        lo2, hi2 = Fraction(lo) ** 2, Fraction(hi) ** 2
        big, inr, over = False, [], False
        for e in self.whole.root_extents(mask):
            d2 = self.whole.root_diam_sq(e)
            if d2 >= lo2:
                big = True
                if d2 <= hi2:
                    inr.append(e)
                else:
                    over = True
        return big, inr, over

    def critical_count(self, state: int, mask: np.ndarray | None = None) -> int:
        """Maximum number of disjointly spanned critical parallelograms (merge-tree reading)."""
        v = self._count.get(state)
        if v is None:
            big, _, _ = self._roots(state, mask)
            if not big:
                v = 0  # no closure component reaches K/C1, so no node does
            else:
                lo, hi = self.pack.critical_range
                v = max_disjoint_spanned(span(self.config_of(state), self.family, self.pack), lo, hi)
            self._count[state] = v
        return v

    def count_exceeds(self, state: int, n: int, mask: np.ndarray | None = None) -> bool:
        """critical_count(state) > n, building the merge tree only when the roots leave it open."""
        v = self._count.get(state)
        if v is not None:
            return v > n
        big, inr, _ = self._roots(state, mask)
        if not big:
            self._count[state] = 0
            return False
        if len(inr) > n:
            return True  # distinct roots have disjoint seed sets
        return self.critical_count(state, mask) > n

    def has_crossing(self, state: int, mask: np.ndarray | None = None) -> bool:
        mask = self.mask_of_state(state) if mask is None else mask
        for prob, idx, cache in self.strips:
            sub = mask[idx]
            if self.mode == "Exact":
                if prob.event_exact(sub, cache):
                    return True
            elif self.mode == "AsIs":
                if prob.event_asis(sub):
                    return True
            else:
                pts = [prob.site_points[i] for i in np.flatnonzero(sub)]
                if prob.event_greedy(Configuration.from_infected(prob.R, pts)):
                    return True
        return False

    def is_good(self, state: int, n: int) -> bool:
        mask = self.mask_of_state(state)
        return not self.count_exceeds(state, n, mask) and not self.has_crossing(state, mask)

    def critical_in(self, state: int, core: Parallelogram | None) -> bool:
        """Some spanned critical parallelogram (span-tree node) intersects ``core``."""
        if core is None:
            return False
        big, inr, over = self._roots(state, None)
        if not big:
            return False
        if any(self.whole.root_box(e).intersects(core) for e in inr):
            return True
        if not over:
            return False  # in-range nodes lie inside in-range roots
        lo, hi = self.pack.critical_range
        tree = span(self.config_of(state), self.family, self.pack)
        return any(n.box.intersects(core) for n in tree.in_range(lo, hi))


def is_n_good(config: Configuration, R: Parallelogram, n: int, family: UpdateFamily, pack: ConstantPack,
              ell, h, mode: str = "Exact") -> bool:
    """At most n disjointly spanned critical parallelograms and no (ell, h)-crossing of R."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if mode == "Exact":
        too_big = [S for S, _ in crossing_strips(R, ell, h) if len(S.lattice_points()) > EXACT_BUDGET]
        if too_big:
            raise BudgetError(f"Exact crossing needs strips of <= {EXACT_BUDGET} sites; use AsIs or GreedyThin")
    oracle = GoodnessOracle(R, family, pack, ell, h, mode)
    return oracle.is_good(oracle.state_of(config.restricted(R)), n)


# ---------------------------------------------------------------------------
# Bottleneck verification

@dataclass(frozen=True)
class BottleneckInstance:
    family: UpdateFamily
    region: Parallelogram
    pack: ConstantPack
    n: int
    core: Parallelogram | None
    ell: Fraction
    h: Fraction
    site_budget: int = DEFAULT_SITE_BUDGET
    name: str = ""

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("n must be >= 0")
        if self.core is not None and self.core.axes != self.region.axes:
            raise ValueError("core must share the region's axes")


@dataclass
class VerifyStats:
    sites: int
    good_states: int          # n-good states met during the search
    g_size: int
    reachable: int
    frontier_sizes: list[int]
    wall_time: float


@dataclass
class Verified:
    stats: VerifyStats
    reachable_states: frozenset = field(repr=False, default=frozenset())


@dataclass
class Counterexample:
    path: list[Configuration]
    stats: VerifyStats
    reachable_states: frozenset = field(repr=False, default=frozenset())


def _rule_masks(oracle: GoodnessOracle, family: UpdateFamily) -> list[list[int]]:
    """For each site, the bitmasks of its rule translates cut down to R."""
    out = []
    for (sx, sy) in oracle.points:
        ms = []
        for U in family.rules:
            m = 0
            for dx, dy in U:
                j = oracle.whole.index.get((sx + dx, sy + dy))
                if j is not None:
                    m |= 1 << j
            ms.append(m)
        out.append(sorted(set(ms)))
    return out


def legal_moves(state: int, rule_masks: list[list[int]]):
    for i, ms in enumerate(rule_masks):
        if any(m & state == m for m in ms):
            yield state ^ (1 << i)


def verify_bottleneck(inst: BottleneckInstance, mode: str = "Exact", full: bool = False) -> Verified | Counterexample:
    """Breadth-first search over the n-good states reachable from G(R) by legal flips.

    Returns Verified when no reachable state has a spanned critical
    parallelogram meeting the core, otherwise the shortest offending legal
    path.  With ``full`` the search keeps going after a counterexample so
    the whole reachable set is reported.
    """
    t0 = time.perf_counter()
    N = len(inst.region.lattice_points())
    if N > inst.site_budget:
        raise BudgetError(f"region has {N} sites; the verifier needs a site budget of at least {N}"
                          f" (current {inst.site_budget})")
    oracle = GoodnessOracle(inst.region, inst.family, inst.pack, inst.ell, inst.h, mode)
    masks = _rule_masks(oracle, inst.family)
    good = {}

    def ok(s: int) -> bool:
        v = good.get(s)
        if v is None:
            v = good[s] = oracle.is_good(s, inst.n)
        return v

    G = [s for s in range(1 << N) if oracle.is_good(s, 0)]
    parent = {s: None for s in G}
    frontier = [s for s in G if ok(s)]
    sizes = [len(frontier)]
    bad = None
    for s in G:
        if oracle.critical_in(s, inst.core):
            bad = s
            break
    queue = deque(frontier)
    while queue and (bad is None or full):
        layer = list(queue)
        queue.clear()
        nxt = []
        for s in layer:
            for t in legal_moves(s, masks):
                if t in parent or not ok(t):
                    continue
                parent[t] = s
                nxt.append(t)
                if bad is None and oracle.critical_in(t, inst.core):
                    bad = t
        if nxt:
            sizes.append(len(nxt))
        queue.extend(nxt)
        if bad is not None and not full:
            break
    stats = VerifyStats(N, sum(good.values()), len(G), len(parent), sizes, time.perf_counter() - t0)
    reach = frozenset(parent)
    if bad is None:
        return Verified(stats, reach)
    chain = []
    s = bad
    while s is not None:
        chain.append(oracle.config_of(s))
        s = parent[s]
    return Counterexample(chain[::-1], stats, reach)
