"""Monte Carlo estimators for spanning and crossing probabilities under the product measure."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from ..bootstrap import _kernels as K
from ..bootstrap.config import AllHealthy, Configuration, grid_for
from ..bootstrap.crossing import MODES, RegionProblem
from ..family import UpdateFamily
from ..geometry import ConstantPack, Direction, Parallelogram, disk_offsets
from .dynamics import stream

BATCH = 4096

# the bias each crossing mode carries relative to the existential event
MODE_BIAS = {
    "Exact": "exact",
    "AsIs": "under-detects (tests eta itself only)",
    "GreedyThin": "under-detects (one greedy thinning)",
}


@dataclass(frozen=True)
class Estimate:
    estimate: float
    ci: tuple[float, float]
    successes: int
    trials: int
    seed: int
    label: str = ""

    @property
    def sigma(self) -> float:
        p = self.estimate
        return float(np.sqrt(p * (1 - p) / self.trials))


def wilson(successes: int, trials: int, level: float = 0.95) -> tuple[float, float]:
    ci = stats.binomtest(int(successes), int(trials)).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


def _bernoulli_rows(rng: np.random.Generator, rows: int, n: int, q: float) -> np.ndarray:
    return rng.random((rows, n)) < q


def _tight_bounds(g, mask_flat: np.ndarray, S: np.ndarray, T: np.ndarray):
    s, t = S[mask_flat], T[mask_flat]
    return int(s.min()), int(t.min()), int(s.max()), int(t.max())


class SpanningSampler:
    """Decides "D is spanned" for many product-measure samples of D.

    D is spanned when a radius-C2' component of the closure of the
    infections inside D reaches all four faces of D's lattice hull.  Every
    node of the span tree is contained in a root, so this is the same as
    some span-tree node having D's lattice hull as its bounding box.
    """

    def __init__(self, D: Parallelogram, family: UpdateFamily, pack: ConstantPack):
        self.D, self.family, self.pack = D, family, pack
        g = grid_for(family, D, AllHealthy())
        self.g = g
        if g.region_flat.size == 0:
            raise ValueError(f"{D} contains no lattice points")
        u3, u4 = D.u3, D.u4
        self.S = (u3.x * g.X + u3.y * g.Y).astype(np.int64)
        self.T = (u4.x * g.X + u4.y * g.Y).astype(np.int64)
        # Faces of the lattice hull, in S = <x,u3> = -<x,u1>: the a-face is the minimum of S.
        self.bounds = _tight_bounds(g, g.upd.astype(bool), self.S, self.T)
        offs = disk_offsets(float(pack.C2p), half=True)
        self.cdx = np.array([v[0] for v in offs], dtype=np.int64)
        self.cdy = np.array([v[1] for v in offs], dtype=np.int64)

    @property
    def n_sites(self) -> int:
        return int(self.g.region_flat.size)

    def spanned(self, rows: np.ndarray) -> np.ndarray:
        g = self.g
        a, b, c, d = self.bounds
        return K.batch_spanning(np.ascontiguousarray(rows, dtype=np.uint8), g.bnd, g.upd, g.region_flat,
                                g.rule_off, g.rule_len, g.inv_off, g.nx, self.cdx, self.cdy,
                                self.S, self.T, a, b, c, d)

    def spanned_config(self, config: Configuration) -> bool:
        g = self.g
        row = g.region_infected(g.state_from(config)).ravel()[g.bmask.ravel()]
        return bool(self.spanned(row[None, :])[0])


def estimate_spanning_probability(D: Parallelogram, family: UpdateFamily, q: float, trials: int, seed: int,
                                  pack: ConstantPack | None = None, level: float = 0.95) -> Estimate:
    """Frequency of "D is spanned" over ``trials`` samples of the product measure on D."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 0.0 <= q <= 1.0:
        raise ValueError("q must lie in [0, 1]")
    pack = pack or ConstantPack.default(family)
    sampler = SpanningSampler(D, family, pack)
    rng = stream(seed)
    hits, left = 0, trials
    while left:
        b = min(BATCH, left)
        hits += int(sampler.spanned(_bernoulli_rows(rng, b, sampler.n_sites, q)).sum())
        left -= b
    return Estimate(hits / trials, wilson(hits, trials, level), hits, trials, int(seed), "spanning")


def estimate_crossing_probability(R: Parallelogram, u: Direction, family: UpdateFamily, q: float, trials: int,
                                  seed: int, mode: str = "AsIs", pack: ConstantPack | None = None,
                                  level: float = 0.95) -> Estimate:
    """Frequency of the crossing event of R in direction u; the label records the mode's bias."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if not 0.0 <= q <= 1.0:
        raise ValueError("q must lie in [0, 1]")
    pack = pack or ConstantPack.default(family)
    prob = RegionProblem(R, u, family, pack)
    if mode == "Exact":
        prob.event_exact(np.zeros(len(prob.sites), dtype=bool), {})  # raises if over budget
    rng = stream(seed)
    n = len(prob.sites)
    hits, left = 0, trials
    cache: dict = {}
    memo: dict = {}
    weights = 1 << np.arange(n, dtype=np.int64)
    while left:
        b = min(BATCH, left)
        rows = _bernoulli_rows(rng, b, n, q)
        for row in rows:
            if mode == "GreedyThin":
                pts = [prob.site_points[i] for i in np.flatnonzero(row)]
                hits += prob.event_greedy(Configuration.from_infected(R, pts))
                continue
            key = int(row @ weights) if n <= 62 else row.tobytes()
            v = memo.get(key)
            if v is None:
                v = prob.event_exact(row, cache) if mode == "Exact" else prob.event_asis(row)
                memo[key] = v
            hits += v
        left -= b
    return Estimate(hits / trials, wilson(hits, trials, level), hits, trials, int(seed),
                    f"crossing[{mode}: {MODE_BIAS[mode]}]")
