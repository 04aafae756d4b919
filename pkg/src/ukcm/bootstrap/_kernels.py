"""Compiled inner loops (numba).  All state arrays use 1 = infected."""
import numpy as np
from numba import njit


@njit(cache=True)
def close_flat(state, upd, rule_off, rule_len, inv_off, seeds):
    """Worklist bootstrap closure, in place.

    A site is examined when first seeded and again whenever a site of one of
    its rule translates becomes infected.  Returns the newly infected flat
    indices in infection order.
    """
    n = state.size
    cap = seeds.size + 16
    stack = np.empty(cap, np.int64)
    top = 0
    for s in seeds:
        stack[top] = s
        top += 1
    new = np.empty(n, np.int64)
    nn = 0
    nrules = rule_len.size
    ninv = inv_off.size
    while top > 0:
        top -= 1
        x = stack[top]
        if state[x] != 0 or upd[x] == 0:
            continue
        fire = False
        for r in range(nrules):
            ok = True
            for k in range(rule_len[r]):
                if state[x + rule_off[r, k]] == 0:
                    ok = False
                    break
            if ok:
                fire = True
                break
        if not fire:
            continue
        state[x] = 1
        new[nn] = x
        nn += 1
        if top + ninv > cap:
            cap2 = 2 * cap + ninv
            s2 = np.empty(cap2, np.int64)
            s2[:top] = stack[:top]
            stack = s2
            cap = cap2
        for v in inv_off:
            y = x + v
            if y >= 0 and y < n and upd[y] != 0 and state[y] == 0:
                stack[top] = y
                top += 1
    return new[:nn]


@njit(cache=True)
def _find(parent, i):
    root = i
    while parent[root] != root:
        root = parent[root]
    while parent[i] != root:
        nxt = parent[i]
        parent[i] = root
        i = nxt
    return root


@njit(cache=True)
def label_components(state, upd, nx, comp_dx, comp_dy, labels):
    """Union-find labels of infected region cells under the given neighbour offsets.

    ``comp_dx/comp_dy`` hold one of each pair {v, -v}.  ``labels`` receives the
    root flat index for infected region cells and -1 elsewhere.
    """
    n = state.size
    ny = n // nx
    for i in range(n):
        labels[i] = i if (state[i] != 0 and upd[i] != 0) else -1
    for i in range(n):
        if labels[i] < 0:
            continue
        yi = i // nx
        xi = i - yi * nx
        for k in range(comp_dx.size):
            xj = xi + comp_dx[k]
            yj = yi + comp_dy[k]
            if xj < 0 or xj >= nx or yj < 0 or yj >= ny:
                continue
            j = yj * nx + xj
            if labels[j] < 0:
                continue
            a = _find(labels, i)
            b = _find(labels, j)
            if a != b:
                if a < b:
                    labels[b] = a
                else:
                    labels[a] = b
    for i in range(n):
        if labels[i] >= 0:
            labels[i] = _find(labels, i)


@njit(cache=True)
def spans_box(state, upd, nx, comp_dx, comp_dy, S, T, a, b, c, d, labels, lo_s, hi_s, lo_t, hi_t):
    """True if some component of infected region cells touches all four faces.

    ``S`` and ``T`` are the integer projections <x,u3>, <x,u4> of every cell;
    faces are the values a, c (for S) and b, d (for T).
    """
    label_components(state, upd, nx, comp_dx, comp_dy, labels)
    n = state.size
    for i in range(n):
        lo_s[i] = 1 << 40
        hi_s[i] = -(1 << 40)
        lo_t[i] = 1 << 40
        hi_t[i] = -(1 << 40)
    for i in range(n):
        r = labels[i]
        if r < 0:
            continue
        if S[i] < lo_s[r]:
            lo_s[r] = S[i]
        if S[i] > hi_s[r]:
            hi_s[r] = S[i]
        if T[i] < lo_t[r]:
            lo_t[r] = T[i]
        if T[i] > hi_t[r]:
            hi_t[r] = T[i]
    for i in range(n):
        if labels[i] == i and lo_s[i] <= a and hi_s[i] >= c and lo_t[i] <= b and hi_t[i] >= d:
            return True
    return False


@njit(cache=True)
def batch_spanning(samples, base, upd, region_flat, rule_off, rule_len, inv_off, nx,
                   comp_dx, comp_dy, S, T, a, b, c, d):
    """For each row of ``samples`` (infected indicator over region_flat) decide spanning."""
    B = samples.shape[0]
    n = base.size
    out = np.zeros(B, np.bool_)
    labels = np.empty(n, np.int64)
    lo_s = np.empty(n, np.int64)
    hi_s = np.empty(n, np.int64)
    lo_t = np.empty(n, np.int64)
    hi_t = np.empty(n, np.int64)
    state = np.empty(n, np.uint8)
    for bi in range(B):
        state[:] = base
        for k in range(region_flat.size):
            if samples[bi, k]:
                state[region_flat[k]] = 1
        close_flat(state, upd, rule_off, rule_len, inv_off, region_flat)
        out[bi] = spans_box(state, upd, nx, comp_dx, comp_dy, S, T, a, b, c, d,
                            labels, lo_s, hi_s, lo_t, hi_t)
    return out


@njit(cache=True)
def batch_closure(samples, base, upd, region_flat, rule_off, rule_len, inv_off):
    """Closure of each sample row; returns infected indicator over region_flat."""
    B = samples.shape[0]
    n = base.size
    out = np.zeros(samples.shape, np.uint8)
    state = np.empty(n, np.uint8)
    for bi in range(B):
        state[:] = base
        for k in range(region_flat.size):
            if samples[bi, k]:
                state[region_flat[k]] = 1
        close_flat(state, upd, rule_off, rule_len, inv_off, region_flat)
        for k in range(region_flat.size):
            out[bi, k] = state[region_flat[k]]
    return out
