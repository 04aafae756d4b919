"""Crossing events and local infectability.

``R = R(a,b;c,d)`` is u1-crossed when, with the half-plane beyond the c-face
infected, the closure of ``η_R`` contains a radius-C2' connected set meeting
both that half-plane and the far face ``<x,u3> = a``.  The crossing event
additionally asks for a sub-configuration (a subset of the infections) that
is crossed while spanning no critical parallelogram.
"""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from ..family import UpdateFamily
from ..geometry import ConstantPack, Direction, HalfPlane, Parallelogram, disk_offsets
from . import _kernels as K
from .config import AllHealthy, Configuration, InfectedHalfPlane, grid_for

EXACT_BUDGET = 24
MODES = ("Exact", "AsIs", "GreedyThin")


class BudgetExceeded(RuntimeError):
    pass


def _diam_sq_from_extent(axes, ds: int, dt: int) -> Fraction:
    """Squared diameter of a parallelogram with extents ds, dt along <.,u3>, <.,u4>."""
    u1, u2 = axes
    det = u1.x * u2.y - u1.y * u2.x
    # rows of adj(M) for M = [u3; u4] = -[u1; u2]
    best = 0
    for sgn in (1, -1):
        x, y = ds, sgn * dt
        px = u2.y * x - u1.y * y
        py = -u2.x * x + u1.x * y
        best = max(best, px * px + py * py)
    return Fraction(best, det * det)


class RegionProblem:
    """Precomputed grids for repeated crossing/criticality tests on one region."""

    def __init__(self, R: Parallelogram, u: Direction, family: UpdateFamily, pack: ConstantPack):
        u1, u2 = R.axes
        if u not in (u1, u2):
            raise ValueError(f"direction {u} is not an axis u1/u2 of {R}")
        self.R, self.u, self.family, self.pack = R, u, family, pack
        first = u == u1
        hi = R.c if first else R.d
        self.lo = R.a if first else R.b
        self.hi = hi
        self.H = HalfPlane(u, -hi, closed=False)
        self.g_half = grid_for(family, R, InfectedHalfPlane(self.H))
        self.g_free = grid_for(family, R, AllHealthy())
        g = self.g_free
        self.proj_dir = R.u3 if first else R.u4
        self.S = (R.u3.x * g.X + R.u3.y * g.Y).astype(np.int64)
        self.T = (R.u4.x * g.X + R.u4.y * g.Y).astype(np.int64)
        self.P = self.S if first else self.T
        offs = disk_offsets(float(pack.C2p), half=True)
        self.cdx = np.array([v[0] for v in offs], dtype=np.int64)
        self.cdy = np.array([v[1] for v in offs], dtype=np.int64)
        full = disk_offsets(float(pack.C2p))
        m = max(self.proj_dir.x * v[0] + self.proj_dir.y * v[1] for v in full)
        # a cell is within C2' of a lattice point of the infected half-plane
        self.near_H = (self.P + m) * hi.denominator > hi.numerator
        # lattice points of R in the closed half-plane beyond the far face
        self.far = self.P * self.lo.denominator <= self.lo.numerator
        self.crit_lo = Fraction(pack.K / pack.C1)
        self.labels = np.empty(g.size, np.int64)
        self.sites = g.region_flat
        self.site_points = [g.point(int(f)) for f in self.sites]
        self.index = {p: i for i, p in enumerate(self.site_points)}

    def mask_of(self, config: Configuration) -> np.ndarray:
        m = np.zeros(len(self.sites), dtype=bool)
        for p in config.infected_points():
            i = self.index.get(p)
            if i is not None:
                m[i] = True
        return m

    def crossed(self, mask: np.ndarray) -> bool:
        g = self.g_half
        st = g.bnd.copy()
        st[self.sites[mask]] = 1
        K.close_flat(st, g.upd, g.rule_off, g.rule_len, g.inv_off, self.sites)
        K.label_components(st, g.upd, g.nx, self.cdx, self.cdy, self.labels)
        lab = self.labels
        touching = np.unique(lab[(lab >= 0) & self.near_H])
        if touching.size == 0:
            return False
        far_labels = lab[(lab >= 0) & self.far]
        return bool(np.isin(far_labels, touching).any())

    def root_extents(self, mask: np.ndarray) -> list[tuple[int, int, int, int]]:
        """(min S, max S, min T, max T) of every radius-C2' component of the closure (AllHealthy outside R)."""
        if not mask.any():
            return []
        g = self.g_free
        st = g.bnd.copy()
        st[self.sites[mask]] = 1
        K.close_flat(st, g.upd, g.rule_off, g.rule_len, g.inv_off, self.sites)
        K.label_components(st, g.upd, g.nx, self.cdx, self.cdy, self.labels)
        lab = self.labels
        sel = lab >= 0
        L, S, T = lab[sel], self.S[sel], self.T[sel]
        order = np.argsort(L, kind="stable")
        L, S, T = L[order], S[order], T[order]
        starts = np.flatnonzero(np.r_[True, L[1:] != L[:-1]])
        return list(zip(np.minimum.reduceat(S, starts).tolist(), np.maximum.reduceat(S, starts).tolist(),
                        np.minimum.reduceat(T, starts).tolist(), np.maximum.reduceat(T, starts).tolist()))

    def root_diam_sq(self, ext) -> Fraction:
        return _diam_sq_from_extent(self.R.axes, ext[1] - ext[0], ext[3] - ext[2])

    def root_box(self, ext) -> Parallelogram:
        return Parallelogram(self.R.axes, ext[0], ext[2], ext[1], ext[3])

    def critical(self, mask: np.ndarray) -> bool:
        """A closure component of η_R reaches diameter K/C1 (AllHealthy outside R)."""
        lo2 = self.crit_lo ** 2
        return any(self.root_diam_sq(e) >= lo2 for e in self.root_extents(mask))

    def good(self, mask: np.ndarray) -> bool:
        return self.crossed(mask) and not self.critical(mask)

    # -- event modes --------------------------------------------------------
    def event_asis(self, mask) -> bool:
        return self.good(mask)

    def event_exact(self, mask, cache: dict | None = None) -> bool:
        """Search subsets of the infections: crossed and not critical.

        Both properties are increasing in the infection set, so a subset
        that is not crossed prunes all of its own subsets.
        """
        if len(self.sites) > EXACT_BUDGET:
            raise BudgetExceeded(f"Exact crossing needs |R| <= {EXACT_BUDGET} sites (got {len(self.sites)});"
                                 " use mode AsIs or GreedyThin")
        cache = {} if cache is None else cache
        start = int(np.dot(mask.astype(np.int64), 1 << np.arange(len(mask), dtype=np.int64)))
        return self._exact_bits(start, cache)

    def _eval_bits(self, bits: int, cache: dict) -> int:
        """0 = not crossed, 1 = crossed and critical, 2 = crossed and not critical."""
        v = cache.get(bits)
        if v is None:
            m = np.array([(bits >> i) & 1 for i in range(len(self.sites))], dtype=bool)
            v = 0 if not self.crossed(m) else (1 if self.critical(m) else 2)
            cache[bits] = v
        return v

    def _exact_bits(self, bits: int, cache: dict) -> bool:
        key = ("E", bits)
        hit = cache.get(key)
        if hit is not None:
            return hit
        v = self._eval_bits(bits, cache)
        if v == 2:
            res = True
        elif v == 0:
            res = False
        else:
            res = False
            b = bits
            while b:
                low = b & -b
                if self._exact_bits(bits ^ low, cache):
                    res = True
                    break
                b ^= low
        cache[key] = res
        return res

    def event_greedy(self, config: Configuration) -> bool:
        from .span import span

        cur = config.restricted(self.R)
        while True:
            tree = span(cur, self.family, self.pack)
            lo = self.pack.K / self.pack.C1
            crit = [n for n in tree.nodes if n.box.diameter_at_least(lo)]
            if not crit:
                return self.crossed(self.mask_of(cur))
            victim = min(crit, key=lambda n: (len(n.seeds), n.id))
            keep = [p for p in cur.infected_points() if p not in victim.seeds]
            cur = Configuration.from_infected(self.R, keep)


def is_u_crossed(config: Configuration, R: Parallelogram, u: Direction, family: UpdateFamily,
                 pack: ConstantPack) -> bool:
    prob = RegionProblem(R, u, family, pack)
    return prob.crossed(prob.mask_of(config))


def crossing_event(config: Configuration, R: Parallelogram, u: Direction, family: UpdateFamily,
                   pack: ConstantPack, mode: str = "AsIs", problem: RegionProblem | None = None,
                   cache: dict | None = None) -> bool:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    prob = problem or RegionProblem(R, u, family, pack)
    if mode == "GreedyThin":
        return prob.event_greedy(config)
    mask = prob.mask_of(config)
    if mode == "AsIs":
        return prob.event_asis(mask)
    return prob.event_exact(mask, cache)


def local_window(s, pack: ConstantPack, axes) -> Parallelogram:
    """``s + R(-2K,-2K;2K,2K)`` in the given axes."""
    u1, u2 = axes
    k2 = Fraction(2 * pack.K)
    cs = -u1.dot(s)
    ct = -u2.dot(s)
    return Parallelogram(tuple(axes), cs - k2 * Fraction(_norm_scale(u1)), ct - k2 * Fraction(_norm_scale(u2)),
                         cs + k2 * Fraction(_norm_scale(u1)), ct + k2 * Fraction(_norm_scale(u2)))


def _norm_scale(u: Direction) -> float:
    # bounds are measured against integer vectors; 2K in unit-vector terms is 2K*|u|
    return math.hypot(u.x, u.y)


def is_locally_infectable(config: Configuration, s, family: UpdateFamily, pack: ConstantPack) -> bool:
    """s ∈ [η ∩ (s + R(-2K,-2K;2K,2K))], computed in the window with healthy outside."""
    from .closure import closure

    W = local_window(s, pack, config.region.axes)
    pts = [p for p in config.infected_points() if W.contains(p)]
    if not isinstance(config.boundary, AllHealthy):
        pts += [p for p in W.lattice_points() if not config.in_region(p) and config.is_infected(p)]
    if tuple(s) in set(pts):
        return True
    cl = closure(Configuration.from_infected(W, pts), family)
    return cl.is_infected(s)
