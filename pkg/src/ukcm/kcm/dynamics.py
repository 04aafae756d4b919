"""Continuous-time constrained dynamics and infection-time estimation.

Every site carries a rate-1 Poisson clock.  The clocks are realised as one
exponential stream of rate |region| with a uniformly chosen site per ring,
which has the same law.  At a ring at x, if some rule translate x + U is
fully infected, x is resampled: infected with probability q, healthy
otherwise.  Random numbers come from numpy's Philox counter-based generator;
trial streams are keyed by ``SeedSequence([seed, trial])``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from scipy import stats

from ..bootstrap.closure import closure
from ..bootstrap.config import AllHealthy, Boundary, Configuration, grid_for
from ..family import UpdateFamily
from ..geometry import Parallelogram
from . import _dynamics as D

CHUNK = 1 << 16


# ---------------------------------------------------------------------------
# Parameters

@dataclass(frozen=True)
class OriginInfected:
    """Stop when the origin becomes infected (the time is tau_0)."""


@dataclass(frozen=True)
class FixedHorizon:
    """Run until ``max_time``."""


@dataclass(frozen=True)
class EventPredicate:
    """Stop when ``site`` becomes infected and/or after ``rings`` clock rings."""

    site: tuple[int, int] | None = None
    rings: int | None = None


StopPredicate = Union[OriginInfected, FixedHorizon, EventPredicate]


@dataclass(frozen=True)
class SimParams:
    family: UpdateFamily
    q: float
    region: Parallelogram
    boundary: Boundary = AllHealthy()
    max_time: float = 1e3
    seed: int = 0
    trial_count: int = 1
    stop: StopPredicate = OriginInfected()

    def __post_init__(self):
        if not (0.0 < self.q < 1.0):
            raise ValueError("dynamics need 0 < q < 1")
        if not (self.max_time > 0 and math.isfinite(self.max_time)):
            raise ValueError("max_time must be positive and finite")
        if not (0 <= int(self.seed) < 2 ** 64):
            raise ValueError("seed must be a 64-bit unsigned value")
        if self.trial_count < 1:
            raise ValueError("trial_count must be >= 1")


def stream(seed: int, trial: int = 0) -> np.random.Generator:
    """Independent Philox stream for (seed, trial)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(trial)])))


def sample_equilibrium(region: Parallelogram, q: float, seed: int | np.random.Generator,
                       boundary: Boundary | None = None) -> Configuration:
    """Product measure: each site of the region infected independently with probability q."""
    if not (0.0 <= q <= 1.0):
        raise ValueError("q must lie in [0, 1]")
    rng = seed if isinstance(seed, np.random.Generator) else stream(seed)
    empty = Configuration.empty(region, boundary)
    u = rng.random(empty.mask.shape)
    return Configuration.from_infected_array(region, (u < q) & empty.mask, boundary)


# ---------------------------------------------------------------------------
# Trajectories

@dataclass
class Trajectory:
    initial: Configuration
    final: Configuration
    times: np.ndarray               # event times (strictly increasing)
    sites: np.ndarray               # (n, 2) event sites
    new_values: np.ndarray          # new bit, 0 = infected, 1 = healthy
    snapshots: dict = field(default_factory=dict)       # time -> Configuration
    ring_snapshots: dict = field(default_factory=dict)  # ring index -> Configuration
    tau: float | None = None        # stop time if the stop site was hit
    censored: bool = False
    end_time: float = 0.0
    rings: int = 0
    domination_violations: int = 0

    @property
    def n_events(self) -> int:
        return int(self.times.size)


class _Runner:
    def __init__(self, params: SimParams, initial: Configuration):
        if initial.region != params.region or initial.boundary != params.boundary:
            raise ValueError("initial configuration must live on the params region/boundary")
        self.p = params
        self.g = grid_for(params.family, params.region, params.boundary)
        self.N = int(self.g.region_flat.size)

    def stop_site(self, initial) -> int:
        stop = self.p.stop
        site = (0, 0) if isinstance(stop, OriginInfected) else getattr(stop, "site", None)
        if site is None:
            return -1
        if not initial.in_region(site):
            raise ValueError(f"stop site {site} is outside the region")
        return self.g.flat(site)


def simulate(params: SimParams, initial: Configuration, trial: int = 0, record: bool = True,
             snapshot_times: Sequence[float] = (), snapshot_rings: Sequence[int] = (),
             check_domination: bool = True, rng: np.random.Generator | None = None) -> Trajectory:
    """Run the dynamics from ``initial`` until the stop predicate or ``max_time``.

    The trajectory is a pure function of (params, initial, trial) unless an
    explicit generator is passed.
    """
    run = _Runner(params, initial)
    g = run.g
    rng = rng or stream(params.seed, trial)
    state = g.state_from(initial)
    stop_site = run.stop_site(initial)
    stop = params.stop
    ring_limit = stop.rings if isinstance(stop, EventPredicate) and stop.rings else 0
    ring_marks = sorted(set(int(r) for r in snapshot_rings))
    if ring_marks and ring_limit == 0:
        ring_limit_eff = ring_marks[0]
    else:
        ring_limit_eff = min([ring_limit] + ring_marks[:1]) if ring_marks else ring_limit
    if check_domination:
        dom = closure(initial, params.family)
        dom_mask = g.state_from(dom)
    else:
        dom_mask = np.zeros(1, np.uint8)
    snaps = sorted(float(s) for s in snapshot_times if 0 <= s <= params.max_time)
    snapshots, ring_snaps = {}, {}
    for s in snaps:
        if s == 0:
            snapshots[0.0] = initial
    snaps = [s for s in snaps if s > 0]

    cap = 1 << 14 if record else 1
    ev_t, ev_x, ev_v = D.empty_log(cap)
    times, xs, vs = [], [], []
    scal = np.zeros(4)
    t, rings, ev_n = 0.0, 0, 0
    tau, censored = None, False

    def as_config():
        return initial.with_infected(g.region_infected(state))

    if stop_site >= 0 and state[stop_site] == 1:
        tau = 0.0
    while tau is None:
        exps = rng.standard_exponential(CHUNK)
        picks = rng.integers(0, run.N, CHUNK)
        unis = rng.random(CHUNK)
        i = 0
        status = D.CHUNK_DONE
        while i < CHUNK:
            next_snap = snaps[0] if snaps else math.inf
            status, i = D.run_rings(state, g.rule_off, g.rule_len, g.region_flat, params.q, t, i,
                                    exps, picks, unis, params.max_time, stop_site, ring_limit_eff,
                                    rings, next_snap, ev_t, ev_x, ev_v, 0, record, dom_mask,
                                    check_domination, scal)
            t, rings, ev_n = float(scal[0]), int(scal[1]), int(scal[2])
            if record and ev_n:
                times.append(ev_t[:ev_n].copy())
                xs.append(ev_x[:ev_n].copy())
                vs.append(ev_v[:ev_n].copy())
            if status == D.SNAPSHOT:
                snapshots[snaps.pop(0)] = as_config()
                continue
            if status == D.LOG_FULL:
                continue
            if status == D.RING_LIMIT:
                if ring_marks and rings == ring_marks[0]:
                    ring_snaps[ring_marks.pop(0)] = as_config()
                if ring_limit and rings >= ring_limit:
                    tau, censored = t, False
                    break
                nxt = ring_marks[:1]
                ring_limit_eff = min([ring_limit] + nxt) if (ring_limit and nxt) else (nxt[0] if nxt else ring_limit)
                continue
            break
        if status == D.HORIZON:
            for s in snaps:
                snapshots[s] = as_config()
            censored = not isinstance(stop, FixedHorizon)
            t = params.max_time
            break
        if status == D.STOP_SITE:
            tau = t
            break
        if tau is not None:
            break

    if record and times:
        T = np.concatenate(times)
        F = np.concatenate(xs)
        V = np.concatenate(vs)
    else:
        T, F, V = np.empty(0), np.empty(0, np.int64), np.empty(0, np.uint8)
    pts = np.stack([F % g.nx + g.ox, F // g.nx + g.oy], axis=1) if F.size else np.empty((0, 2), np.int64)
    final = as_config()
    if isinstance(stop, FixedHorizon):
        tau = None
    return Trajectory(initial, final, T, pts, (1 - V).astype(np.uint8), snapshots, ring_snaps,
                      tau if not censored else None, censored, t, rings, int(scal[3]))


# ---------------------------------------------------------------------------
# tau_0 estimation

@dataclass
class Tau0Estimate:
    mean: float
    mean_is_lower_bound: bool
    median: float
    censor_fraction: float
    ci: tuple[float, float]          # 95% CI from a normal approximation on log tau_0
    ci_mean: tuple[float, float]     # 95% CI for the mean of uncensored samples
    n_uncensored: int
    zero_fraction: float
    samples: np.ndarray
    censored: np.ndarray
    usable: bool = True

    @property
    def trials(self) -> int:
        return int(self.samples.size)

    @property
    def log_center(self) -> float:
        """Geometric mean of the positive uncensored samples (centre of ``ci``)."""
        pos = self.samples[(~self.censored) & (self.samples > 0)]
        return float(np.exp(np.log(pos).mean())) if pos.size else float("nan")


def first_infection_time(params: SimParams, initial: Configuration, site=(0, 0),
                         rng: np.random.Generator | None = None) -> float | None:
    """Hitting time of ``site`` via the jump chain (flips only); None if censored.

    Same law as ``simulate`` with an EventPredicate on ``site``, but null
    rings are never drawn, so low-q runs are much cheaper.
    """
    g = grid_for(params.family, params.region, params.boundary)
    if not initial.in_region(site):
        raise ValueError(f"stop site {site} is outside the region")
    rng = rng or stream(params.seed)
    state = g.state_from(initial)
    f = g.flat(site)
    if state[f] == 1:
        return 0.0
    scal = np.zeros(2)
    t = 0.0
    while True:
        exps = rng.standard_exponential(CHUNK)
        u1 = rng.random(CHUNK)
        u2 = rng.random(CHUNK)
        status = D.jump_chain(state, g.upd, g.rule_off, g.rule_len, g.inv_off, g.region_flat, params.q, t,
                              params.max_time, f, exps, u1, u2, scal)
        t = float(scal[0])
        if status == D.STOP_SITE:
            return t
        if status in (D.HORIZON, D.FROZEN):
            return None


def tau0_samples(params: SimParams, trials: Sequence[int] | None = None,
                 method: str = "jump") -> tuple[np.ndarray, np.ndarray]:
    """tau_0 for each trial (equilibrium start) and censor flags.

    ``method`` is "jump" (flips only, the default) or "rings" (every clock
    ring through ``simulate``).  Both sample the same law; they consume the
    random stream differently, so individual samples differ.
    """
    if method not in ("jump", "rings"):
        raise ValueError("method must be 'jump' or 'rings'")
    trials = range(params.trial_count) if trials is None else trials
    p = params if isinstance(params.stop, OriginInfected) else _replace_stop(params, OriginInfected())
    out, cens = [], []
    for k in trials:
        rng = stream(p.seed, k)
        eta = sample_equilibrium(p.region, p.q, rng, p.boundary)
        if not closure(eta, p.family).is_infected((0, 0)):
            # domination: the dynamics can never infect a site outside [eta]
            out.append(p.max_time)
            cens.append(True)
            continue
        if method == "jump":
            tau = first_infection_time(p, eta, rng=rng)
        else:
            tau = simulate(p, eta, trial=k, record=False, check_domination=False, rng=rng).tau
        out.append(tau if tau is not None else p.max_time)
        cens.append(tau is None)
    return np.asarray(out, dtype=float), np.asarray(cens, dtype=bool)


def _replace_stop(p: SimParams, stop) -> SimParams:
    return SimParams(p.family, p.q, p.region, p.boundary, p.max_time, p.seed, p.trial_count, stop)


def summarize_tau0(samples: np.ndarray, censored: np.ndarray, level: float = 0.95) -> Tau0Estimate:
    z = stats.norm.ppf(0.5 + level / 2)
    n = samples.size
    unc = samples[~censored]
    cf = float(censored.mean()) if n else 1.0
    if unc.size == 0:
        nan = float("nan")
        return Tau0Estimate(float(samples.mean()), True, float(np.median(samples)), 1.0, (nan, nan),
                            (nan, nan), 0, 0.0, samples, censored, usable=False)
    pos = unc[unc > 0]
    if pos.size >= 2:
        lg = np.log(pos)
        h = z * lg.std(ddof=1) / math.sqrt(pos.size)
        ci = (float(math.exp(lg.mean() - h)), float(math.exp(lg.mean() + h)))
    else:
        ci = (float("nan"), float("nan"))
    if unc.size >= 2:
        h = z * unc.std(ddof=1) / math.sqrt(unc.size)
        ci_mean = (float(unc.mean() - h), float(unc.mean() + h))
    else:
        ci_mean = (float("nan"), float("nan"))
    return Tau0Estimate(float(samples.mean()), bool(censored.any()), float(np.median(samples)), cf, ci,
                        ci_mean, int(unc.size), float((unc == 0).mean()), samples, censored)


def estimate_tau0(params: SimParams, method: str = "jump", min_uncensored: int | None = None,
                  max_trials: int | None = None) -> Tau0Estimate:
    """Mean, median, censor fraction and CI of tau_0 over independent equilibrium trials.

    Censored trials enter the mean and median at ``max_time`` (so those are
    lower bounds, flagged by ``mean_is_lower_bound``).  The CI uses the
    strictly positive uncensored samples on a log scale; trials where the
    origin starts infected (tau_0 = 0) are reported as ``zero_fraction``.

    With ``min_uncensored`` set, trials beyond ``trial_count`` are appended
    (trial indices continue in order) until that many uncensored samples
    exist or ``max_trials`` is reached.
    """
    s, c = tau0_samples(params, method=method)
    if min_uncensored:
        cap = max_trials or 100 * max(params.trial_count, min_uncensored)
        S, C = [s], [c]
        n, unc = s.size, int((~c).sum())
        while unc < min_uncensored and n < cap:
            step = min(cap - n, max(1, min_uncensored - unc))
            s2, c2 = tau0_samples(params, trials=range(n, n + step), method=method)
            S.append(s2)
            C.append(c2)
            n += step
            unc += int((~c2).sum())
        s, c = np.concatenate(S), np.concatenate(C)
    return summarize_tau0(s, c)
