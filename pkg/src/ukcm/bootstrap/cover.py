"""The covering algorithm: clusters, crumbs and merged droplets.

Infections are grouped into components of the radius-C2 graph (C2' in the
modified variant).  A component generated by the closure of fewer than
alpha points is a crumb and is discarded; the others are cut into clusters
of diameter at most C3.  Each cluster C contributes Q(C), the smallest
droplet containing its C4-neighbourhood (C4' modified), and intersecting
droplets are replaced by their join until the droplets are pairwise
disjoint.  The final set does not depend on the merge order.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from ..family import UpdateFamily, stable_set
from ..geometry import (ConstantPack, Direction, Droplet, Parallelogram, Point, check_face_set,
                        gamma_components, smallest_droplet, within)
from .closure import closure
from .config import Configuration


class UnknownCrumb(RuntimeError):
    """The crumb search exhausted its budget without a verdict."""


@dataclass
class MergeStep:
    left: Droplet
    right: Droplet
    result: Droplet
    provenance: frozenset


@dataclass
class DropletSet:
    droplets: tuple[Droplet, ...]
    provenance: tuple[frozenset, ...]
    clusters: tuple[tuple[Point, ...], ...] = ()
    crumbs: tuple[tuple[Point, ...], ...] = ()
    forced: tuple[int, ...] = ()           # components treated as non-crumbs after budget exhaustion
    history: list[MergeStep] = field(default_factory=list, repr=False)
    leaves: tuple[Droplet, ...] = ()

    def canonical(self):
        return tuple(sorted(zip(self.droplets, self.provenance), key=lambda dp: (dp[0].offsets, sorted(dp[1]))))

    def __eq__(self, other):
        return isinstance(other, DropletSet) and self.canonical() == other.canonical()

    def __len__(self):
        return len(self.droplets)

    def all_droplets(self) -> list[Droplet]:
        """Every droplet produced along the way: the Q(C) and every join."""
        return list(self.leaves) + [s.result for s in self.history]


def default_face_set(family: UpdateFamily) -> tuple[Direction, ...]:
    """Two opposite pairs of stable directions when available, else a surrounding triple."""
    st = stable_set(family)
    cands = set(st.isolated)
    for a in st.fat_arcs:
        cands |= {a.start, a.end}
    cands = sorted(cands)
    for u, v in itertools.combinations(cands, 2):
        if -u in cands and -v in cands and u.x * v.y - u.y * v.x != 0:
            return check_face_set((u, v, -u, -v))
    for tri in itertools.combinations(cands, 3):
        try:
            return check_face_set(tri)
        except ValueError:
            continue
    return check_face_set((Direction(1, 0), Direction(0, 1), Direction(-1, 0), Direction(0, -1)))


def _diam_sq(points: Sequence[Point]) -> int:
    return max(((p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2 for p, q in itertools.combinations(points, 2)),
               default=0)


def clusters_of(component: Sequence[Point], radius: float, c3: float) -> list[tuple[Point, ...]]:
    """Greedy maximal clusters covering a component.

    Starting from each not yet covered point (in sorted order) a cluster grows
    by radius-adjacent points of the component while its diameter stays at
    most C3, until no adjacent point can be added.
    """
    pts = sorted(component)
    c3sq = c3 * c3 * (1 + 1e-12)
    covered: set = set()
    out = []
    for x in pts:
        if x in covered:
            continue
        C = [x]
        Cset = {x}
        grew = True
        while grew:
            grew = False
            for y in pts:
                if y in Cset or not any(within(y, c, radius) for c in C):
                    continue
                if all((y[0] - c[0]) ** 2 + (y[1] - c[1]) ** 2 <= c3sq for c in C):
                    C.append(y)
                    Cset.add(y)
                    grew = True
        covered |= Cset
        out.append(tuple(sorted(C)))
    return out


def is_crumb(component: Sequence[Point], family: UpdateFamily, alpha: int, pack: ConstantPack,
             budget: int = 20000) -> bool:
    """Is there P with |P| = alpha-1 within C3 + r*alpha of the component and [P] ⊇ component?"""
    k = alpha - 1
    if k <= 0:
        return False
    comp = set(component)
    reach = pack.C3 + pack.r * alpha
    xs = [p[0] for p in comp]
    ys = [p[1] for p in comp]
    R = int(math.ceil(reach))
    box = Parallelogram.box(min(xs) - R, min(ys) - R, max(xs) + R, max(ys) + R)
    cand = [p for p in box.lattice_points()
            if any(within(p, c, reach) for c in comp)]
    if math.comb(len(cand), k) > budget:
        raise UnknownCrumb(f"crumb search needs {math.comb(len(cand), k)} candidate sets (budget {budget})")
    for P in itertools.combinations(cand, k):
        cfg = Configuration.from_infected(box, P)
        cl = set(closure(cfg, family).infected_points())
        if comp <= cl:
            return True
    return False


def cover(Z: Iterable, family: UpdateFamily, pack: ConstantPack, faces: Sequence[Direction] | None = None,
          modified: bool = False, alpha: int = 1, crumb_budget: int = 20000, force_clusters: bool = False,
          rng: np.random.Generator | None = None) -> DropletSet:
    """Run the covering algorithm on the infection set Z.

    ``rng`` randomizes the order in which intersecting droplets are merged;
    the output does not depend on it.
    """
    faces = check_face_set(faces if faces is not None else default_face_set(family))
    pts = sorted({(int(p[0]), int(p[1])) for p in Z})
    if not pts:
        return DropletSet((), ())
    radius = pack.C2p if modified else pack.C2
    margin = pack.C4p if modified else pack.C4
    clusters, crumbs, forced = [], [], []
    for ci, comp in enumerate(gamma_components(pts, radius)):
        try:
            crumb = is_crumb(comp, family, alpha, pack, crumb_budget)
        except UnknownCrumb:
            if not force_clusters:
                raise
            crumb = False
            forced.append(ci)
        if crumb:
            crumbs.append(tuple(comp))
        else:
            clusters.extend(clusters_of(comp, radius, pack.C3))
    leaves = [smallest_droplet(C, faces, margin) for C in clusters]
    live = [(d, frozenset([i])) for i, d in enumerate(leaves)]
    history: list[MergeStep] = []
    while True:
        pairs = [(i, j) for i, j in itertools.combinations(range(len(live)), 2)
                 if live[i][0].intersects(live[j][0])]
        if not pairs:
            break
        i, j = pairs[int(rng.integers(len(pairs)))] if rng is not None else pairs[0]
        (d1, p1), (d2, p2) = live[i], live[j]
        joined = (d1.join(d2), p1 | p2)
        history.append(MergeStep(d1, d2, joined[0], joined[1]))
        live = [x for k, x in enumerate(live) if k not in (i, j)] + [joined]
    live.sort(key=lambda dp: (dp[0].offsets, sorted(dp[1])))
    return DropletSet(tuple(d for d, _ in live), tuple(p for _, p in live), tuple(clusters),
                      tuple(crumbs), tuple(forced), history, tuple(leaves))


def covered_check(D: Droplet, Z: Iterable, family: UpdateFamily, pack: ConstantPack,
                  faces: Sequence[Direction] | None = None, **kw) -> bool:
    """D is covered by Z if cover(Z ∩ D) outputs a droplet containing D."""
    inside = [p for p in Z if D.contains_point(p)]
    if not inside:
        return False
    out = cover(inside, family, pack, faces if faces is not None else D.faces, **kw)
    return any(E.contains_droplet(D) for E in out.droplets)


def disjoint_clusters_inside(D: Droplet, clusters: Sequence[Sequence[Point]]) -> int:
    """Greedy count of pairwise disjoint clusters contained in D (a lower bound on the maximum)."""
    used: set = set()
    n = 0
    for C in sorted(clusters, key=len):
        if all(D.contains_point(p) for p in C) and not used.intersection(C):
            used.update(C)
            n += 1
    return n


def covered_scale_gaps(ds: DropletSet, D: Droplet, pack: ConstantPack) -> list[float]:
    """Scales k in [C1*C4, diam D] with no produced droplet of diameter in [k, 2k]."""
    lo, top = pack.C1 * pack.C4, D.diameter
    if top < lo:
        return []
    diams = sorted(d.diameter for d in ds.all_droplets() if D.contains_droplet(d))
    reach, gaps = lo, []
    for d in diams:
        if d < reach:
            continue
        if d / 2 > reach * (1 + 1e-12):
            gaps.append(reach)
        reach = max(reach, d)
        if reach >= top:
            break
    if reach < top * (1 - 1e-12):
        gaps.append(reach)
    return gaps
