"""Span of an infection set: the merge tree of closure components.

Every infected site starts as its own node whose closure is ``[{x}]``.  Two
live nodes whose closures come within distance C2' of each other are merged,
and the merged node's closure is ``[cl(A) ∪ cl(B)]``.  When no two live nodes
are close, the live nodes are the roots; their closures are exactly the
radius-C2' components of ``[η]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..family import UpdateFamily
from ..geometry import ConstantPack, Parallelogram, bounding_parallelogram, disk_offsets
from . import _kernels as K
from .config import Configuration, grid_for


@dataclass
class SpanNode:
    id: int
    seeds: frozenset            # infected sites (points) generating the node
    sites: np.ndarray           # closure, as flat indices of the span grid
    box: Parallelogram          # bounding parallelogram of the closure
    diameter: float
    children: tuple[int, int] | None = None
    parent: int | None = None

    @property
    def is_leaf(self) -> bool:
        return self.children is None


@dataclass
class SpanTree:
    nodes: list[SpanNode]
    roots: list[int]
    radius: float
    points_of: object = field(repr=False, default=None)  # flat index -> point

    def node(self, i: int) -> SpanNode:
        return self.nodes[i]

    def closure_points(self, i: int) -> list:
        return sorted(self.points_of(int(f)) for f in self.nodes[i].sites)

    def root_components(self) -> list[list]:
        comps = [self.closure_points(r) for r in self.roots]
        return sorted(comps, key=lambda c: c[0])

    def in_range(self, dmin: float, dmax: float) -> list[SpanNode]:
        return [n for n in self.nodes if _in_range(n, dmin, dmax)]

    def max_diameter(self) -> float:
        return max((n.diameter for n in self.nodes), default=0.0)


def _in_range(n: SpanNode, dmin: float, dmax: float) -> bool:
    return n.box.diameter_at_least(dmin) and n.box.diameter_at_most(dmax)


class _SpanBuilder:
    def __init__(self, config: Configuration, family: UpdateFamily, radius: float):
        self.config, self.family, self.radius = config, family, radius
        self.g = grid_for(family, config.region, config.boundary)
        self.axes = config.region.axes
        g = self.g
        self.scratch = g.bnd.copy()
        self.owner = np.full(g.size, -1, dtype=np.int64)
        offs = disk_offsets(float(radius))
        self.off_dx = np.array([0] + [v[0] for v in offs], dtype=np.int64)
        self.off_dy = np.array([0] + [v[1] for v in offs], dtype=np.int64)
        self.nodes: list[SpanNode] = []
        self.active: set[int] = set()
        self.overlaps: dict[int, list[int]] = {}

    def _close(self, base_sites: np.ndarray, seed_sites: np.ndarray) -> np.ndarray:
        g = self.g
        st = self.scratch
        st[base_sites] = 1
        cand = (seed_sites[:, None] + g.inv_off[None, :]).ravel()
        new = K.close_flat(st, g.upd, g.rule_off, g.rule_len, g.inv_off, cand)
        sites = np.concatenate([base_sites, new])
        st[sites] = 0
        return sites

    def _box(self, sites: np.ndarray) -> Parallelogram:
        g = self.g
        return bounding_parallelogram(zip(g.X[sites].tolist(), g.Y[sites].tolist()), self.axes)

    def _add(self, seeds, sites, children=None) -> int:
        i = len(self.nodes)
        box = self._box(sites)
        node = SpanNode(i, frozenset(seeds), sites, box, box.diameter, children)
        self.nodes.append(node)
        prev = self.owner[sites]
        others = sorted({int(o) for o in prev if o >= 0 and o in self.active})
        if children:
            others = [o for o in others if o not in children]
        self.overlaps[i] = others
        self.owner[sites] = i
        self.active.add(i)
        return i

    def _partner(self, i: int) -> int | None:
        for o in self.overlaps.get(i, []):
            if o in self.active and o != i:
                return o
        g = self.g
        sites = self.nodes[i].sites
        xs = (sites % g.nx)[:, None] + self.off_dx[None, :]
        ys = (sites // g.nx)[:, None] + self.off_dy[None, :]
        ok = (xs >= 0) & (xs < g.nx) & (ys >= 0) & (ys < g.ny)
        near = self.owner[(ys * g.nx + xs)[ok]]
        cands = {int(o) for o in np.unique(near) if o >= 0 and o != i and o in self.active}
        return min(cands) if cands else None

    def build(self) -> SpanTree:
        g = self.g
        pts = self.config.infected_points()
        for p in pts:
            f = np.array([g.flat(p)], dtype=np.int64)
            self._add([p], self._close(f, f))
        stack = sorted(self.active, reverse=True)
        while stack:
            i = stack.pop()
            if i not in self.active:
                continue
            j = self._partner(i)
            if j is None:
                continue
            A, B = self.nodes[i], self.nodes[j]
            small, big = (A, B) if len(A.sites) <= len(B.sites) else (B, A)
            base = np.unique(np.concatenate([big.sites, small.sites]))
            sites = self._close(base, small.sites)
            self.active.discard(i)
            self.active.discard(j)
            k = self._add(A.seeds | B.seeds, sites, (min(i, j), max(i, j)))
            A.parent = B.parent = k
            stack.append(k)
        roots = sorted(self.active)
        return SpanTree(self.nodes, roots, self.radius, g.point)


def span(config: Configuration, family: UpdateFamily, pack: ConstantPack) -> SpanTree:
    """Merge tree of the infections of ``config`` at connectivity radius C2'."""
    return _SpanBuilder(config, family, pack.C2p).build()


def spanned_scan(config: Configuration, family: UpdateFamily, pack: ConstantPack,
                 dmin: float, dmax: float, tree: SpanTree | None = None) -> list[Parallelogram]:
    """Bounding parallelograms of the span-tree nodes with diameter in [dmin, dmax]."""
    if not (0 < dmin <= dmax):
        raise ValueError("need 0 < dmin <= dmax")
    tree = tree or span(config, family, pack)
    seen, out = set(), []
    for n in tree.in_range(dmin, dmax):
        if n.box not in seen:
            seen.add(n.box)
            out.append(n.box)
    return out


def max_disjoint_spanned(tree: SpanTree, dmin: float, dmax: float) -> int:
    """Largest set of in-range nodes with pairwise disjoint seed sets (tree DP)."""
    best = [0] * len(tree.nodes)
    for n in tree.nodes:  # children always precede parents
        here = 1 if _in_range(n, dmin, dmax) else 0
        below = best[n.children[0]] + best[n.children[1]] if n.children else 0
        best[n.id] = max(here, below)
    return sum(best[r] for r in tree.roots)


def critical_exists(tree: SpanTree, pack: ConstantPack) -> bool:
    """Some node reaches the critical lower scale K/C1 (existence reading)."""
    lo = pack.K / pack.C1
    return any(n.box.diameter_at_least(lo) for n in tree.nodes)


def extract_critical(tree: SpanTree, pack: ConstantPack) -> SpanNode | None:
    """Walk down from a node of diameter >= K/C1 towards one of diameter in [K/C1, K]."""
    lo, hi = pack.critical_range
    start = [n for n in tree.nodes if n.box.diameter_at_least(lo)]
    if not start:
        return None
    node = max(start, key=lambda n: n.diameter)
    while not node.box.diameter_at_most(hi) and node.children:
        a, b = (tree.nodes[c] for c in node.children)
        node = a if a.diameter >= b.diameter else b
    return node if _in_range(node, lo, hi) else None


def al_violations(tree: SpanTree, pack: ConstantPack) -> list[float]:
    """Scales k in [C1*C2', C1*d] without a node of diameter in [k/C1, k].

    The union of the intervals [d_i, C1*d_i] over node diameters must cover
    [C1*C2', C1*d_max]; returns the left ends of uncovered gaps.
    """
    C1, lo = pack.C1, pack.C1 * pack.C2p
    big = [n.diameter for n in tree.nodes if n.diameter >= lo]
    if not big:
        return []
    top = C1 * max(big)
    ds = sorted(n.diameter for n in tree.nodes if n.diameter > 0)
    gaps = []
    reach = lo
    for d in ds:
        if C1 * d < reach:
            continue
        if d > reach * (1 + 1e-12):
            gaps.append(reach)
        reach = max(reach, C1 * d)
        if reach >= top:
            break
    if reach < top * (1 - 1e-12):
        gaps.append(reach)
    return gaps


def connected_component_stable(tree: SpanTree, config: Configuration, family: UpdateFamily) -> bool:
    """Each root closure X satisfies X = [η ∩ X] inside the region."""
    from .closure import closure

    for r in tree.roots:
        X = set(tree.closure_points(r))
        sub = Configuration.from_infected(config.region, [p for p in config.infected_points() if p in X],
                                          config.boundary)
        if set(closure(sub, family).infected_points()) != X:
            return False
    return True


def diameter_sq_points(points) -> int:
    pts = list(points)
    return max(((p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2 for p in pts for q in pts), default=0)
