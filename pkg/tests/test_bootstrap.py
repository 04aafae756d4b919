import itertools
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles as O
from ukcm.bootstrap import (AllHealthy, Configuration, FrozenSet, InfectedHalfPlane, al_violations, closure,
                            cover, covered_check, covered_scale_gaps, crossing_event, default_face_set,
                            is_closed, is_locally_infectable, is_u_crossed, max_disjoint_spanned, region_box,
                            span, spanned_scan)
from ukcm.bootstrap.cover import is_crumb
from ukcm.geometry import ConstantPack, Direction, HalfPlane, Parallelogram, smallest_droplet

pts_strategy = st.sets(st.tuples(st.integers(0, 9), st.integers(0, 9)), max_size=30)


def _cfg(points, w=10, h=10, boundary=None):
    return Configuration.from_infected(region_box(w, h), points, boundary)


# ---------------------------------------------------------------------------
# closure

def test_closure_trivial_cases(iso):
    R = region_box(6, 6)
    assert closure(Configuration.empty(R), iso).n_infected == 0
    full = Configuration.from_infected(R, R.lattice_points())
    assert closure(full, iso) == full


def test_closure_two_diagonal_sites(iso):
    out = closure(_cfg([(0, 0), (1, 1)], 4, 4), iso)
    assert sorted(out.infected_points()) == [(0, 0), (0, 1), (1, 0), (1, 1)]


@pytest.mark.parametrize("name", ["fig1a", "fig1c", "fig1e", "fig1f", "fig1g"])
def test_closure_matches_set_oracle(families, name):
    fam = families[name]
    rnd = random.Random(hash(name) % 1000)
    R = region_box(9, 7, -2, -3)
    sites = set(R.lattice_points())
    for _ in range(25):
        inf = {p for p in sites if rnd.random() < 0.25}
        got = set(closure(Configuration.from_infected(R, inf), fam).infected_points())
        assert got == O.naive_closure(inf, sites, fam.rules)


@pytest.mark.parametrize("name", ["fig1b", "fig1e"])
def test_closure_with_boundaries_matches_oracle(families, name):
    fam = families[name]
    R = region_box(8, 8)
    sites = set(R.lattice_points())
    rnd = random.Random(3)
    H = HalfPlane(Direction(0, 1), Fraction(-1, 2), False)  # y < -1/2: the row below R
    frozen = [(-1, 2), (8, 5), (3, -1)]
    for b, outside in ((InfectedHalfPlane(H), lambda p: p[1] < 0),
                       (FrozenSet(frozen), lambda p: p in set(frozen))):
        for _ in range(10):
            inf = {p for p in sites if rnd.random() < 0.15}
            got = set(closure(Configuration.from_infected(R, inf, b), fam).infected_points())
            assert got == O.naive_closure(inf, sites, fam.rules, outside)


def test_closure_on_tilted_region(families):
    fam = families["fig1f"]
    R = Parallelogram((Direction(-1, 1), Direction(-1, -1)), -3, -4, 5, 4)
    sites = set(R.lattice_points())
    rnd = random.Random(11)
    for _ in range(10):
        inf = {p for p in sites if rnd.random() < 0.3}
        got = set(closure(Configuration.from_infected(R, inf), fam).infected_points())
        assert got == O.naive_closure(inf, sites, fam.rules)


@settings(max_examples=60, deadline=None)
@given(pts_strategy, pts_strategy)
def test_closure_laws(iso, a, b):
    A, AB = _cfg(a), _cfg(a | b)
    cA, cAB = closure(A, iso), closure(AB, iso)
    assert (cA.infected | ~A.infected).all()                 # containment
    assert closure(cA, iso) == cA and is_closed(cA, iso)     # idempotence
    assert (~cA.infected | cAB.infected).all()                # monotonicity


@settings(max_examples=30, deadline=None)
@given(pts_strategy, st.integers(-5, 5), st.integers(-5, 5))
def test_closure_translation_covariance(iso, a, dx, dy):
    R = region_box(10, 10)
    R2 = region_box(10, 10, dx, dy)
    c1 = closure(Configuration.from_infected(R, a), iso).infected_points()
    c2 = closure(Configuration.from_infected(R2, [(x + dx, y + dy) for x, y in a]), iso).infected_points()
    assert sorted((x + dx, y + dy) for x, y in c1) == sorted(c2)


# ---------------------------------------------------------------------------
# span

def test_span_single_leaf(iso):
    pk = ConstantPack.default(iso)
    t = span(_cfg([(3, 3)]), iso, pk)
    assert len(t.nodes) == 1 and t.nodes[0].is_leaf
    b = t.nodes[0].box
    assert b.a == b.c and b.b == b.d


def test_span_far_apart_never_merge(iso):
    pk = ConstantPack.default(iso)
    t = span(_cfg([(0, 0), (20, 20)], 24, 24), iso, pk)
    assert len(t.roots) == 2 and all(n.is_leaf for n in t.nodes)


@pytest.mark.parametrize("seed", range(6))
def test_span_roots_are_closure_components(families, seed):
    fam = families["fig1e" if seed % 2 else "fig1g"]
    pk = ConstantPack.make_micro(fam, K=6.0, C1=3.0, C2p=3.5)
    rnd = random.Random(seed)
    R = region_box(20, 20)
    inf = [p for p in R.lattice_points() if rnd.random() < 0.05]
    cfg = Configuration.from_infected(R, inf)
    t = span(cfg, fam, pk)
    cl = O.naive_closure(set(inf), set(R.lattice_points()), fam.rules)
    assert t.root_components() == O.components(cl, pk.C2p)
    # each root is generated by the infections it contains
    for comp in t.root_components():
        X = set(comp)
        assert O.naive_closure(X & set(inf), set(R.lattice_points()), fam.rules) == X


def test_span_chain_diameters_subadditive(iso):
    pk = ConstantPack.make_micro(iso, K=10.0, C1=3.0, C2p=3.5)
    chain = [(2 * k, 2 * k) for k in range(6)]
    t = span(_cfg(chain, 20, 14), iso, pk)
    assert len(t.roots) == 1
    for n in t.nodes:
        if n.children:
            a, b = (t.nodes[c] for c in n.children)
            # merged closure is within C2' of both parts, so the diameter grows by at most that gap
            assert n.diameter <= a.diameter + b.diameter + 2 * pk.C2p + 1e-9


def _spanned_oracle(inf: set, D: Parallelogram, fam, radius: float) -> bool:
    """Some radius-component of [D ∩ η] ∩ D has bounding box exactly D (axis-aligned D)."""
    inside = {p for p in inf if D.contains(p)}
    if not inside:
        return False
    x0, y0, x1, y1 = int(D.a), int(D.b), int(D.c), int(D.d)
    window = set(region_box(x1 - x0 + 7, y1 - y0 + 7, x0 - 3, y0 - 3).lattice_points())
    cl = {p for p in O.naive_closure(inside, window, fam.rules) if D.contains(p)}
    return any(O.box_of(c) == (x0, y0, x1, y1) for c in O.components(cl, radius))


def test_spanned_scan_examples(iso):
    pk = ConstantPack.make_micro(iso, K=8.0, C1=3.0, C2p=3.5)
    assert spanned_scan(_cfg([]), iso, pk, 1, 10) == []
    assert spanned_scan(_cfg([(4, 4)]), iso, pk, pk.C2p + 0.1, 10) == []


def test_spanned_scan_diagonal_chain_against_subset_oracle(iso):
    pk = ConstantPack.make_micro(iso, K=8.0, C1=3.0, C2p=3.5)
    chain = [(0, 0), (2, 2), (4, 4), (6, 5)]
    cfg = _cfg(chain, 7, 6)
    lo, hi = pk.critical_range
    boxes = spanned_scan(cfg, iso, pk, lo, hi)
    assert boxes
    for D in boxes:
        assert _spanned_oracle(set(chain), D, iso, pk.C2p)
        assert lo <= D.diameter <= hi
    # a critical box exists in the oracle's sense too
    found = False
    for x0, x1 in itertools.combinations_with_replacement(range(7), 2):
        for y0, y1 in itertools.combinations_with_replacement(range(6), 2):
            D = Parallelogram.box(x0, y0, x1, y1)
            if lo <= D.diameter <= hi and _spanned_oracle(set(chain), D, iso, pk.C2p):
                found = True
    assert found


def _disjoint_oracle(inf: list, fam, pk, w, h) -> int:
    """Max number of pairwise disjoint infection subsets each spanning some critical box on its own."""
    lo, hi = pk.critical_range
    boxes = [Parallelogram.box(x0, y0, x1, y1)
             for x0, x1 in itertools.combinations_with_replacement(range(w), 2)
             for y0, y1 in itertools.combinations_with_replacement(range(h), 2)]
    boxes = [D for D in boxes if lo <= D.diameter <= hi]
    n = len(inf)
    spans = [False] * (1 << n)
    for m in range(1, 1 << n):
        sub = {inf[i] for i in range(n) if m >> i & 1}
        spans[m] = any(_spanned_oracle(sub, D, fam, pk.C2p) for D in boxes)
    best = [0] * (1 << n)
    for m in range(1, 1 << n):
        s = m
        b = best[m & (m - 1)]  # drop the lowest site
        while s:
            if spans[s]:
                b = max(b, 1 + best[m ^ s])
            s = (s - 1) & m
        best[m] = b
    return best[(1 << n) - 1]


@pytest.mark.parametrize("inf,expected", [
    ([], 0),
    ([(0, 0), (2, 1), (4, 2)], 1),
    ([(0, 0), (2, 1), (4, 2), (12, 0), (14, 1), (16, 2)], 2),
])
def test_max_disjoint_spanned_against_witness_oracle(iso, inf, expected):
    pk = ConstantPack.make_micro(iso, K=5.0, C1=3.0, C2p=3.5)
    w, h = 17, 3
    t = span(_cfg(inf, w, h), iso, pk)
    got = max_disjoint_spanned(t, *pk.critical_range)
    assert got == expected == _disjoint_oracle(inf, iso, pk, w, h)


@pytest.mark.parametrize("seed", range(10))
def test_al_extraction_random(iso, seed):
    pk = ConstantPack.make_micro(iso, K=40.0, C1=3.0, C2p=3.5)
    rnd = random.Random(seed)
    R = region_box(40, 40)
    inf = [p for p in R.lattice_points() if rnd.random() < 0.06]
    assert al_violations(span(Configuration.from_infected(R, inf), iso, pk), pk) == []


# ---------------------------------------------------------------------------
# crossing

def test_crossing_trivial(iso):
    pk = ConstantPack.default(iso)
    R = region_box(6, 4)
    u = R.axes[0]
    full = Configuration.from_infected(R, R.lattice_points())
    assert is_u_crossed(full, R, u, iso, pk)
    empty = Configuration.empty(R)
    assert not is_u_crossed(empty, R, u, iso, pk)
    for mode in ("Exact", "AsIs", "GreedyThin"):
        assert not crossing_event(empty, R, u, iso, pk, mode)


def _flood_crossed(inf, w, h, fam, radius):
    """Naive: close with the half-plane x >= w infected, then flood at the radius from sites near it."""
    sites = set(region_box(w, h).lattice_points())
    cl = O.naive_closure(set(inf), sites, fam.rules, lambda p: p[0] >= w)
    near = {p for p in cl if w - p[0] <= radius + 1e-9}
    seen, stack = set(near), list(near)
    while stack:
        p = stack.pop()
        for q in cl:
            if q not in seen and (p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2 <= radius * radius + 1e-9:
                seen.add(q)
                stack.append(q)
    return any(p[0] <= 0 for p in seen)


def test_spaced_chain_crosses_30x8(iso):
    pk = ConstantPack.make_micro(iso, K=100.0, C1=3.0, C2p=3.5)
    R = region_box(30, 8)
    chain = [(x, 4) for x in range(0, 30, 3)]
    cfg = Configuration.from_infected(R, chain)
    assert is_u_crossed(cfg, R, R.axes[0], iso, pk)
    assert _flood_crossed(chain, 30, 8, iso, pk.C2p)
    rnd = random.Random(5)
    for _ in range(20):
        inf = [p for p in R.lattice_points() if rnd.random() < 0.08]
        cfg = Configuration.from_infected(R, inf)
        assert is_u_crossed(cfg, R, R.axes[0], iso, pk) == _flood_crossed(inf, 30, 8, iso, pk.C2p)


@pytest.mark.parametrize("name", ["fig1e", "fig1g"])
def test_exact_crossing_equals_subset_enumeration(families, name):
    fam = families[name]
    pk = ConstantPack.make_micro(fam, K=4.5, C1=3.0, C2p=3.5)
    w, h = 3, 3
    R = region_box(w, h)
    flags = O.crossing_flags(w, h, fam.rules, pk.C2p, pk.K / pk.C1, 0)
    pts = O.box_points(w, h)
    rnd = random.Random(1)
    for m in [0, (1 << 9) - 1] + [rnd.randrange(1 << 9) for _ in range(40)]:
        inf = [pts[i] for i in range(9) if m >> i & 1]
        cfg = Configuration.from_infected(R, inf)
        assert crossing_event(cfg, R, R.axes[0], fam, pk, "Exact") == bool(flags[m])


def test_asis_true_when_crossed_without_critical(iso):
    pk = ConstantPack.make_micro(iso, K=100.0, C1=3.0, C2p=3.5)
    R = region_box(12, 4)
    chain = [(x, 1) for x in range(0, 12, 3)]
    cfg = Configuration.from_infected(R, chain)
    assert is_u_crossed(cfg, R, R.axes[0], iso, pk)
    assert spanned_scan(cfg, iso, pk, *pk.critical_range) == []
    assert crossing_event(cfg, R, R.axes[0], iso, pk, "AsIs")
    assert crossing_event(cfg, R, R.axes[0], iso, pk, "GreedyThin")


def test_modes_are_ordered(iso):
    """AsIs and GreedyThin can only under-detect relative to Exact."""
    pk = ConstantPack.make_micro(iso, K=3.0, C1=2.5, C2p=3.0)
    R = region_box(4, 4)
    rnd = random.Random(9)
    for _ in range(40):
        cfg = Configuration.from_infected(R, [p for p in R.lattice_points() if rnd.random() < 0.4])
        ex = crossing_event(cfg, R, R.axes[0], iso, pk, "Exact")
        assert crossing_event(cfg, R, R.axes[0], iso, pk, "AsIs") <= ex
        assert crossing_event(cfg, R, R.axes[0], iso, pk, "GreedyThin") <= ex


# ---------------------------------------------------------------------------
# local infectability

def test_locally_infectable(iso):
    pk = ConstantPack.make_micro(iso, K=2.0, C1=3.0, C2p=3.5)
    R = region_box(11, 11, -5, -5)
    assert is_locally_infectable(Configuration.from_infected(R, [(0, 0)]), (0, 0), iso, pk)
    assert not is_locally_infectable(Configuration.empty(R), (0, 0), iso, pk)
    pair = [(-1, 0), (0, 1)]
    assert is_locally_infectable(Configuration.from_infected(R, pair), (0, 0), iso, pk)
    for p in pair:
        rest = [x for x in pair if x != p]
        assert not is_locally_infectable(Configuration.from_infected(R, rest), (0, 0), iso, pk)
    # the pair that switches the origin on spans a critical box (diameter sqrt 2 in [2/3, 2])
    assert spanned_scan(Configuration.from_infected(R, pair), iso, pk, *pk.critical_range)


# ---------------------------------------------------------------------------
# covering

def test_cover_empty_and_no_crumbs_at_alpha_one(iso):
    pk = ConstantPack.default(iso)
    assert len(cover([], iso, pk)) == 0
    assert not is_crumb([(0, 0), (1, 1)], iso, 1, pk)
    ds = cover([(0, 0), (100, 0)], iso, pk, alpha=1)
    assert ds.crumbs == () and len(ds.clusters) == 2


def test_cover_merges_overlapping_droplets(iso):
    pk = ConstantPack.default(iso)
    faces = default_face_set(iso)
    a, b = [(0, 0), (1, 0)], [(int(pk.C2) + 1, 0)]
    ds = cover(a + b, iso, pk, faces)
    assert len(ds) == 1
    d1 = smallest_droplet(a, faces, pk.C4)
    d2 = smallest_droplet(b, faces, pk.C4)
    assert d1.intersects(d2)
    assert ds.droplets[0].diameter <= d1.diameter + d2.diameter + 1e-9


@pytest.mark.parametrize("seed", range(5))
def test_cover_order_independent(iso, seed):
    pk = ConstantPack.default(iso)
    rnd = random.Random(seed)
    Z = {(rnd.randint(0, 400), rnd.randint(0, 400)) for _ in range(12)}
    ref = cover(Z, iso, pk)
    for k in range(5):
        assert cover(Z, iso, pk, rng=np.random.default_rng(k)) == ref


def test_covered_check(iso):
    pk = ConstantPack.default(iso)
    faces = default_face_set(iso)
    step = int(pk.C4 // 2)
    Z = [(x, y) for x in range(0, 6 * step, step) for y in range(0, 6 * step, step)]
    ds = cover(Z, iso, pk, faces)
    D = ds.droplets[0]
    assert covered_check(D, Z, iso, pk, faces)
    assert all(D.contains_point(p) for p in Z)
    far = smallest_droplet([(10 ** 5, 10 ** 5)], faces)
    assert not covered_check(far, Z, iso, pk, faces)
    assert covered_scale_gaps(ds, D, pk) == []
