"""Compiled ring loop for the constrained heat-bath dynamics."""
import numpy as np
from numba import njit

# status codes returned by run_rings
CHUNK_DONE = 0
HORIZON = 1
STOP_SITE = 2
RING_LIMIT = 3
LOG_FULL = 4
SNAPSHOT = 5


@njit(cache=True)
def run_rings(state, rule_off, rule_len, region_flat, q, t, i0, exps, picks, unis, max_time,
              stop_site, ring_limit, rings, next_snap, ev_t, ev_x, ev_v, ev_n, record,
              dom_mask, dom_check, scalars):
    """Process pregenerated rings starting at index i0.

    ``scalars`` is a 4-slot float64 output: [time, rings, events, violations].
    Returns (status, next index).  State uses 1 = infected.  The constraint
    at x reads the pre-ring configuration and never involves x itself.
    """
    N = region_flat.size
    nrules = rule_len.size
    viol = 0
    i = i0
    n = exps.size
    cap = ev_t.size
    while i < n:
        tn = t + exps[i] / N
        if tn > max_time:
            scalars[0] = max_time
            scalars[1] = rings
            scalars[2] = ev_n
            scalars[3] += viol
            return HORIZON, i
        if tn >= next_snap:
            scalars[0] = t
            scalars[1] = rings
            scalars[2] = ev_n
            scalars[3] += viol
            return SNAPSHOT, i
        if record and ev_n >= cap:
            scalars[0] = t
            scalars[1] = rings
            scalars[2] = ev_n
            scalars[3] += viol
            return LOG_FULL, i
        t = tn
        x = region_flat[picks[i]]
        rings += 1
        ok_any = False
        for r in range(nrules):
            ok = True
            for k in range(rule_len[r]):
                if state[x + rule_off[r, k]] == 0:
                    ok = False
                    break
            if ok:
                ok_any = True
                break
        if ok_any:
            nv = 1 if unis[i] < q else 0
            if nv != state[x]:
                state[x] = nv
                if record:
                    ev_t[ev_n] = t
                    ev_x[ev_n] = x
                    ev_v[ev_n] = nv
                    ev_n += 1
                if dom_check and nv == 1 and dom_mask[x] == 0:
                    viol += 1
        i += 1
        stop = (stop_site >= 0 and state[stop_site] == 1) or (ring_limit > 0 and rings >= ring_limit)
        if stop:
            scalars[0] = t
            scalars[1] = rings
            scalars[2] = ev_n
            scalars[3] += viol
            if stop_site >= 0 and state[stop_site] == 1:
                return STOP_SITE, i
            return RING_LIMIT, i
    scalars[0] = t
    scalars[1] = rings
    scalars[2] = ev_n
    scalars[3] += viol
    return CHUNK_DONE, i


def empty_log(cap):
    return np.empty(cap, np.float64), np.empty(cap, np.int64), np.empty(cap, np.uint8)


FROZEN = 6


@njit(cache=True)
def _satisfied(state, x, rule_off, rule_len):
    for r in range(rule_len.size):
        ok = True
        for k in range(rule_len[r]):
            if state[x + rule_off[r, k]] == 0:
                ok = False
                break
        if ok:
            return True
    return False


@njit(cache=True)
def _drop(y, cls, pos, lists, counts):
    c = cls[y] - 1
    j = pos[y]
    last = lists[c, counts[c] - 1]
    lists[c, j] = last
    pos[last] = j
    counts[c] -= 1
    cls[y] = 0
    pos[y] = -1


@njit(cache=True)
def _put(y, c, cls, pos, lists, counts):
    lists[c, counts[c]] = y
    pos[y] = counts[c]
    counts[c] += 1
    cls[y] = c + 1


@njit(cache=True)
def jump_chain(state, upd, rule_off, rule_len, inv_off, region_flat, q, t, max_time, stop_site,
               exps, u1, u2, scalars):
    """Rejection-free run of the same dynamics: only flips are simulated.

    A site whose constraint holds flips at rate q (healthy -> infected) or
    1-q (infected -> healthy); rings that do not change the state are
    skipped, which leaves the law of the state path unchanged.  Consumes
    the pregenerated draws; ``scalars`` = [time, flips].  Returns the status
    (CHUNK_DONE, HORIZON, STOP_SITE or FROZEN).
    """
    n = region_flat.size
    size = state.size
    cls = np.zeros(size, np.int64)
    pos = np.full(size, -1, np.int64)
    lists = np.empty((2, n), np.int64)
    counts = np.zeros(2, np.int64)
    for i in range(n):
        x = region_flat[i]
        if _satisfied(state, x, rule_off, rule_len):
            _put(x, 1 if state[x] == 1 else 0, cls, pos, lists, counts)
    flips = 0
    for i in range(exps.size):
        total = q * counts[0] + (1.0 - q) * counts[1]
        if total <= 0.0:
            scalars[0] = max_time
            scalars[1] += flips
            return FROZEN
        t += exps[i] / total
        if t > max_time:
            scalars[0] = max_time
            scalars[1] += flips
            return HORIZON
        if u1[i] * total < q * counts[0]:
            c = 0
        else:
            c = 1
        j = int(u2[i] * counts[c])
        if j >= counts[c]:
            j = counts[c] - 1
        x = lists[c, j]
        _drop(x, cls, pos, lists, counts)
        state[x] = 1 - state[x]
        _put(x, 1 - c, cls, pos, lists, counts)
        flips += 1
        for k in range(inv_off.size):
            y = x + inv_off[k]
            if y < 0 or y >= size or upd[y] == 0:
                continue
            now = _satisfied(state, y, rule_off, rule_len)
            if now and cls[y] == 0:
                _put(y, 1 if state[y] == 1 else 0, cls, pos, lists, counts)
            elif not now and cls[y] != 0:
                _drop(y, cls, pos, lists, counts)
        if stop_site >= 0 and state[stop_site] == 1:
            scalars[0] = t
            scalars[1] += flips
            return STOP_SITE
    scalars[0] = t
    scalars[1] += flips
    return CHUNK_DONE
