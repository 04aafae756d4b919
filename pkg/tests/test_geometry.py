import itertools
import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from oracles import components
from ukcm.geometry import (AXIS_ALIGNED, ConstantPack, Direction, GeometryError, HalfPlane, Parallelogram,
                           as_rational, bounding_parallelogram, ccw_between, check_face_set, direction_between,
                           gamma_components, half_plane_contains, normalize_direction, smallest_droplet,
                           sort_directions)

vec = st.tuples(st.integers(-30, 30), st.integers(-30, 30)).filter(lambda v: v != (0, 0))


@pytest.mark.parametrize("v,expected", [((2, 2), (1, 1)), ((0, -3), (0, -1)), ((-4, 6), (-2, 3))])
def test_normalize_direction(v, expected):
    assert normalize_direction(v).v == expected


def test_zero_vector_rejected():
    with pytest.raises(GeometryError):
        normalize_direction((0, 0))
    with pytest.raises(GeometryError):
        Direction(2, 4)


@given(vec)
def test_normalize_is_primitive_and_positively_collinear(v):
    d = normalize_direction(v)
    assert math.gcd(d.x, d.y) == 1
    assert d.x * v[1] - d.y * v[0] == 0 and d.x * v[0] + d.y * v[1] > 0


@given(st.lists(vec, min_size=2, max_size=12))
def test_direction_order_matches_atan2(vs):
    ds = sort_directions(normalize_direction(v) for v in vs)
    angles = [d.angle() for d in ds]
    assert angles == sorted(angles)


@given(vec, vec, vec)
def test_ccw_between_agrees_with_angles(a, u, b):
    a, u, b = (normalize_direction(v) for v in (a, u, b))
    if a == b:
        assert ccw_between(a, u, b) == (u == a)
        return
    ta, tu, tb = a.angle(), u.angle(), b.angle()
    rel_u = (tu - ta) % (2 * math.pi)
    rel_b = (tb - ta) % (2 * math.pi)
    if abs(rel_u - rel_b) > 1e-9:
        assert ccw_between(a, u, b) == (rel_u <= rel_b)


@given(vec, vec)
def test_direction_between_is_strictly_inside(a, b):
    a, b = normalize_direction(a), normalize_direction(b)
    m = direction_between(a, b)
    assert m not in (a, b)
    assert ccw_between(a, m, b) or a == b


@pytest.mark.parametrize("h,p,expected", [
    (HalfPlane(Direction(1, 0), 0, False), (-1, 5), True),
    (HalfPlane(Direction(1, 0), 0, False), (0, 7), False),
    (HalfPlane(Direction(1, 0), 0, True), (0, 7), True),
])
def test_half_plane_contains(h, p, expected):
    assert half_plane_contains(h, p) is expected


def test_rational_offsets_exact():
    h = HalfPlane(Direction(1, 2), Fraction(1, 3))
    assert h.contains((-2, 1)) and not h.contains((1, 0))
    assert as_rational(0.5) == Fraction(1, 2)


def test_bounding_parallelogram_single_point_degenerate():
    R = bounding_parallelogram([(0, 0)])
    assert R.a == R.c and R.b == R.d


def test_bounding_parallelogram_axis_aligned():
    R = bounding_parallelogram([(0, 0), (3, 0), (0, 2)])
    assert R.bounds == (0, 0, 3, 2)
    assert set(R.lattice_points()) == {(x, y) for x in range(4) for y in range(3)}


def _brute_min_parallelogram(points, axes, window=5):
    """Among all integer-bounded R(a,b;c,d) in a window containing the points, the one with least area."""
    best = None
    rng = range(-window, window + 1)
    for a, c in itertools.combinations_with_replacement(rng, 2):
        for b, d in itertools.combinations_with_replacement(rng, 2):
            R = Parallelogram(axes, a, b, c, d)
            if all(R.contains(p) for p in points):
                key = ((c - a) * (d - b), c - a, d - b)
                if best is None or key < best[0]:
                    best = (key, R)
    return best[1]


def test_bounding_parallelogram_diagonal_matches_brute_force():
    axes = (Direction(-1, 1), Direction(-1, -1))
    pts = [(0, 0), (2, 2)]
    assert bounding_parallelogram(pts, axes) == _brute_min_parallelogram(pts, axes)
    rnd = random.Random(7)
    for _ in range(5):
        pts = [(rnd.randint(-2, 2), rnd.randint(-2, 2)) for _ in range(3)]
        assert bounding_parallelogram(pts, axes) == _brute_min_parallelogram(pts, axes)


def test_parallelogram_rejects_collinear_axes_and_empty_bounds():
    with pytest.raises(GeometryError):
        Parallelogram((Direction(1, 0), Direction(-1, 0)), 0, 0, 1, 1)
    with pytest.raises(GeometryError):
        Parallelogram(AXIS_ALIGNED, 2, 0, 1, 1)


def test_parallelogram_diameter_from_corners():
    R = Parallelogram.box(0, 0, 3, 4)
    assert R.diameter_sq() == 25 and R.diameter == 5.0
    assert R.diameter_at_least(5) and not R.diameter_at_least(5.0001)


def test_gamma_components_basic():
    assert gamma_components([], 2) == []
    assert gamma_components([(0, 0), (0, 1)], 2) == [[(0, 0), (0, 1)]]


@pytest.mark.parametrize("seed", range(5))
def test_gamma_components_match_union_find(seed):
    rnd = random.Random(seed)
    pts = {(rnd.randint(0, 40), rnd.randint(0, 40)) for _ in range(50)}
    assert gamma_components(pts, 3) == components(pts, 3)


def test_face_sets():
    E, N, W, S = Direction(1, 0), Direction(0, 1), Direction(-1, 0), Direction(0, -1)
    assert len(check_face_set((E, N, W, S))) == 4
    assert len(check_face_set((E, N, Direction(-1, -1)))) == 3
    with pytest.raises(GeometryError):
        check_face_set((E, N, W))


def test_droplet_join_is_subadditive():
    faces = check_face_set((Direction(1, 0), Direction(0, 1), Direction(-1, 0), Direction(0, -1)))
    D1 = smallest_droplet([(0, 0), (3, 1)], faces, 1.0)
    D2 = smallest_droplet([(2, 2), (5, 4)], faces, 1.0)
    assert D1.intersects(D2)
    J = D1.join(D2)
    assert J.diameter <= D1.diameter + D2.diameter + 1e-12
    assert J.contains_droplet(D1) and J.contains_droplet(D2)


@settings(max_examples=50)
@given(st.lists(st.tuples(st.integers(-6, 6), st.integers(-6, 6)), min_size=1, max_size=6),
       st.floats(0, 3))
def test_smallest_droplet_contains_neighbourhood(pts, margin):
    faces = check_face_set((Direction(1, 0), Direction(0, 1), Direction(-1, -1)))
    D = smallest_droplet(pts, faces, margin)
    for p in pts:
        assert D.contains_point(p)
        for v, o in zip(D.faces, D.offsets):
            assert v.x * p[0] + v.y * p[1] + margin * v.norm <= o + 1e-12


def test_constant_pack_defaults_and_micro(families):
    fam = families["fig1g"]
    pk = ConstantPack.default(fam)
    assert pk.C1 == 4 and pk.C2p == 4 * pk.r and pk.C2 == 4 * pk.C2p and pk.C6 == 4 * pk.C5
    assert pk.K == pytest.approx(pk.C1 ** 2 * pk.C2p)
    with pytest.raises(GeometryError):
        ConstantPack.default(fam, K=1.0)
    m = ConstantPack.make_micro(fam, K=1.0, C1=3.0, C2p=3.5)
    assert m.micro and m.critical_range == (1.0 / 3.0, 1.0)
    with pytest.raises(GeometryError):
        ConstantPack.make_micro(fam, K=1.0, C1=1.0)  # C1 must exceed r
