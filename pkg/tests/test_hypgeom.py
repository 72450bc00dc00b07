import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hypgraph import hypgeom as hg
from hypgraph.hypgeom import (
    DiskPoint, Geodesic, Horodisk, IdealPoint, Isometry, EquidistantCurve,
    hyp_distance, make_translation, make_parabolic, tangency_param, truncated_length,
)

from oracles import (
    boundary_gap_along_real_axis, cross_ratio_distance, orthogonal_circle,
    tangency_by_bisection,
)

# frozen from tests/oracles.py
CROSS_RATIO_PAIR = 1.2842718182211075
TANGENCY_0_HALFPI = 0.34657359027997253
TANGENCY_01_05 = 1.616113490632557
TANGENCY_1_4 = 0.002508156191596677

angles = st.floats(0.0, 2 * math.pi, allow_nan=False, exclude_max=True)
radii = st.floats(0.0, 0.97)


@st.composite
def disk_points(draw):
    r = draw(radii)
    a = draw(angles)
    return r * complex(math.cos(a), math.sin(a))


@st.composite
def isometries(draw):
    w = draw(disk_points())
    a = draw(angles)
    return Isometry.rotation(a) @ Isometry.moving_origin_to(w)


@st.composite
def distinct_angle_pairs(draw, min_gap=0.05):
    a = draw(angles)
    gap = draw(st.floats(min_gap, 2 * math.pi - min_gap))
    return a, a + gap


# -- points and distances ---------------------------------------------------

def test_distance_origin_half():
    assert hyp_distance(0, 0.5) == pytest.approx(math.log(3), abs=1e-12)


def test_distance_matches_cross_ratio_oracle():
    d = hyp_distance(0.3 + 0.1j, -0.2 + 0.4j)
    assert d == pytest.approx(CROSS_RATIO_PAIR, abs=1e-12)
    assert d == pytest.approx(cross_ratio_distance(0.3 + 0.1j, -0.2 + 0.4j), abs=1e-12)


def test_disk_point_rejects_boundary():
    with pytest.raises(hg.HypGeomError):
        DiskPoint(1.0)
    with pytest.raises(hg.HypGeomError):
        DiskPoint(1 - 1e-13)
    DiskPoint(0.999)


def test_ideal_point_canonical():
    p = IdealPoint(-math.pi / 2)
    assert p.theta == pytest.approx(3 * math.pi / 2)
    assert IdealPoint(2 * math.pi - 1e-14) == IdealPoint(0.0)


@given(disk_points(), disk_points(), isometries())
def test_isometry_invariance(p, q, g):
    assert abs(hyp_distance(g(p), g(q)) - hyp_distance(p, q)) < 1e-9


@given(disk_points(), disk_points(), disk_points())
def test_triangle_inequality(p, q, r):
    assert hyp_distance(p, r) <= hyp_distance(p, q) + hyp_distance(q, r) + 1e-9


@given(isometries(), isometries())
def test_composition_stays_normalized(g, h):
    m = g @ h @ g.inverse() @ h
    assert abs(abs(m.a) ** 2 - abs(m.b) ** 2 - 1) < 1e-10


# -- geodesics ---------------------------------------------------------------

def test_antipodal_is_diameter():
    g = Geodesic.between(0.0, math.pi)
    assert g.is_diameter
    assert abs(g.point(0.7).imag) < 1e-14


def test_quarter_geodesic_circle():
    g = Geodesic.between(0.0, math.pi / 2)
    c, r = orthogonal_circle(0.0, math.pi / 2)
    assert abs(g.center - c) < 1e-12
    assert g.radius == pytest.approx(r, abs=1e-12)
    assert abs(g.center - (1 + 1j)) < 1e-12 and g.radius == pytest.approx(1.0)


def test_midpoint_is_closest_to_origin():
    g = Geodesic.between(0.0, math.pi / 2)
    s = np.linspace(-3, 3, 6001)
    d = np.abs(g.point(s))
    assert abs(s[np.argmin(d)]) < 2e-3
    assert abs(g.midpoint) == pytest.approx(d.min(), abs=1e-9)


@given(distinct_angle_pairs())
def test_geodesic_circle_orthogonal(pair):
    g = Geodesic.between(*pair)
    if g.is_diameter:
        return
    assert abs(abs(g.center) ** 2 - 1 - g.radius ** 2) < 1e-8 * (1 + g.radius ** 2)
    for s in (-2.0, 0.0, 1.5):
        assert abs(abs(g.point(s) - g.center) - g.radius) < 1e-9 * (1 + g.radius)


@given(distinct_angle_pairs(), st.floats(-4, 4), st.floats(0.01, 3))
def test_arclength_spacing(pair, s, h):
    g = Geodesic.between(*pair)
    assert abs(hyp_distance(g.point(s), g.point(s + h)) - h) < 1e-8 * (1 + h)


@given(distinct_angle_pairs())
def test_geodesic_endpoints(pair):
    g = Geodesic.between(*pair)
    assert abs(g.point(40.0) - g.end.point) < 1e-8
    assert abs(g.point(-40.0) - g.start.point) < 1e-8


def test_coincident_endpoints():
    with pytest.raises(hg.CoincidentEndpoints):
        Geodesic.between(0.3, 0.3 + 2 * math.pi)


@given(distinct_angle_pairs(), st.floats(-3, 3), st.floats(-2, 2))
def test_signed_distance_and_foot(pair, s, d):
    g = Geodesic.between(*pair)
    z = EquidistantCurve(g, d).point(s)
    assert g.signed_distance(z) == pytest.approx(d, abs=1e-8)
    assert g.foot(z) == pytest.approx(s, abs=1e-7)


def test_intersection_predicate():
    a = Geodesic.between(0.0, math.pi)
    assert a.intersects(Geodesic.between(math.pi / 2, 3 * math.pi / 2))
    assert not a.intersects(Geodesic.between(0.3, 1.0))


# -- isometries --------------------------------------------------------------

def test_translation_normal_form():
    t = make_translation(hg.REAL_DIAMETER, 1.3)
    assert abs(t(0) - math.tanh(0.65)) < 1e-14


@given(distinct_angle_pairs(), st.floats(0.1, 5), st.integers(1, 7))
def test_translation_root(pair, length, l):
    axis = Geodesic.between(*pair)
    root = make_translation(axis, length / l)
    assert root.power(l).close_to(make_translation(axis, length), 1e-9)


@given(distinct_angle_pairs(), st.floats(0.1, 5))
def test_translation_inverse_and_fixed_points(pair, length):
    axis = Geodesic.between(*pair)
    t = make_translation(axis, length)
    assert (t @ make_translation(axis, -length)).close_to(Isometry.identity(), 1e-10)
    assert abs(t(axis.start.point) - axis.start.point) < 1e-9
    assert abs(t(axis.end.point) - axis.end.point) < 1e-9
    assert abs(t(axis.point(0.3)) - axis.point(0.3 + length)) < 1e-9


def test_parabolic_fixes_one_point_and_its_horocycles():
    xi = IdealPoint(1.1)
    p = make_parabolic(xi, 0.7)
    assert abs(p(xi.point) - xi.point) < 1e-12
    h = Horodisk(xi, 0.4)
    z = h.horocycle_point(0.2)
    assert hg.busemann(xi.point, p(z)) == pytest.approx(-0.4, abs=1e-10)
    with pytest.raises(hg.DegenerateAxis):
        make_parabolic(xi, 0.0)


def test_degenerate_translation():
    with pytest.raises(hg.DegenerateAxis):
        make_translation(hg.REAL_DIAMETER, 0.0)


# -- horodisks ---------------------------------------------------------------

def test_base_horodisk_through_origin():
    h = Horodisk(IdealPoint(0.0), 0.0)
    assert h.euclidean_radius == pytest.approx(0.5)
    assert abs(h.euclidean_center - 0.5) < 1e-15


@given(st.floats(0.0, 12.0))
def test_shrinking_law(t):
    h = Horodisk(IdealPoint(0.0), t)
    x = 1 - 2 * h.euclidean_radius
    assert hyp_distance(0.0, x) == pytest.approx(t, abs=1e-9)
    assert boundary_gap_along_real_axis(t) == pytest.approx(t, abs=1e-7)


@given(isometries(), angles, st.floats(0, 3), disk_points())
def test_horodisk_transport(g, theta, t, z):
    h = Horodisk(IdealPoint(theta), t)
    gh = g.apply_horodisk(h)
    # membership is preserved pointwise
    b_before = hg.busemann(h.center.point, z) + h.t
    b_after = hg.busemann(gh.center.point, g(z)) + gh.t
    assert b_after == pytest.approx(b_before, abs=1e-8)


def test_tangency_values():
    assert tangency_param(0.0, math.pi) == pytest.approx(0.0, abs=1e-14)
    assert tangency_param(0.0, math.pi / 2) == pytest.approx(TANGENCY_0_HALFPI, abs=1e-12)
    assert tangency_param(0.1, 0.5) == pytest.approx(TANGENCY_01_05, abs=1e-12)
    assert tangency_param(1.0, 4.0) == pytest.approx(TANGENCY_1_4, abs=1e-12)


@given(distinct_angle_pairs(0.2))
def test_tangency_matches_bisection(pair):
    assert tangency_param(*pair) == pytest.approx(tangency_by_bisection(*pair), abs=1e-9)


@given(distinct_angle_pairs(0.2), isometries())
def test_tangency_covariant(pair, g):
    a, b = (IdealPoint(x) for x in pair)
    t = tangency_param(a, b)
    ha, hb = g.apply_horodisk(Horodisk(a, t)), g.apply_horodisk(Horodisk(b, t))
    gap = Geodesic(ha.center, hb.center).busemann_sum() + ha.t + hb.t
    assert abs(gap) < 1e-8


# -- truncated lengths ---------------------------------------------------------

def test_base_horodisks_on_diameter():
    g = hg.REAL_DIAMETER
    hs = [Horodisk(IdealPoint(0.0), 0.0), Horodisk(IdealPoint(math.pi), 0.0)]
    assert truncated_length(g, hs) == pytest.approx(0.0, abs=1e-12)


@given(st.floats(0, 10))
def test_raised_horodisks_on_diameter(t):
    g = hg.REAL_DIAMETER
    hs = [Horodisk(IdealPoint(0.0), t), Horodisk(IdealPoint(math.pi), t)]
    expected = cross_ratio_distance(-(1 - 2 / (1 + math.exp(t))), 1 - 2 / (1 + math.exp(t)))
    assert truncated_length(g, hs) == pytest.approx(2 * t, abs=1e-8)
    assert truncated_length(g, hs) == pytest.approx(expected, abs=1e-7)


def test_plain_segment():
    g = Geodesic.between(0.4, 2.0)
    hs = [Horodisk(IdealPoint(0.4), 3.0), Horodisk(IdealPoint(2.0), 3.0)]
    assert truncated_length(g, hs, segment=(-0.5, 0.7)) == pytest.approx(1.2, abs=1e-12)
    assert truncated_length(g, [], segment=(-0.5, 0.7)) == pytest.approx(1.2, abs=1e-12)


def test_untruncated_end():
    g = Geodesic.between(0.4, 2.0)
    hs = [Horodisk(IdealPoint(0.4), 1.0)]
    assert truncated_length(g, hs) == math.inf
    with pytest.raises(hg.UntruncatedEnd):
        truncated_length(g, hs, strict=True)


def test_overlapping_horodisks():
    g = Geodesic.between(0.0, math.pi / 2)
    hs = [Horodisk(IdealPoint(0.0), 0.0), Horodisk(IdealPoint(math.pi / 2), 0.0)]
    with pytest.raises(hg.OverlappingHorodisks):
        truncated_length(g, hs)


@given(distinct_angle_pairs(0.2), st.floats(0, 4), st.floats(0, 4), st.floats(0.01, 1))
def test_truncated_length_additive(pair, ta, tb, dt):
    a, b = (IdealPoint(x) for x in pair)
    base = tangency_param(a, b)
    g = Geodesic(a, b)
    l0 = truncated_length(g, [Horodisk(a, base + ta), Horodisk(b, base + tb)])
    l1 = truncated_length(g, [Horodisk(a, base + ta + dt), Horodisk(b, base + tb)])
    assert l1 - l0 == pytest.approx(dt, abs=1e-8)
    assert l0 == pytest.approx(ta + tb, abs=1e-8)


def test_foreign_horodisk_cuts_interior():
    g = hg.REAL_DIAMETER.reversed()
    hs = [Horodisk(IdealPoint(0.0), 2.0), Horodisk(IdealPoint(math.pi), 2.0)]
    full = truncated_length(g, hs)
    mid = Horodisk(IdealPoint(math.pi / 2), -0.5)
    cut = truncated_length(g, hs + [mid])
    assert cut < full


# -- equidistant curves and the ray distance constant ----------------------------------

@given(distinct_angle_pairs(0.2), st.floats(0.05, 2.5).flatmap(lambda d: st.sampled_from([d, -d])),
       st.floats(-2, 2))
def test_equidistant_curvature(pair, d, s):
    c = EquidistantCurve(Geodesic.between(*pair), d)
    h = 1e-3
    k = hg.geodesic_curvature_from_samples(*c.point([s - h, s, s + h]))
    assert abs(k) == pytest.approx(math.tanh(abs(d)), abs=1e-6)


def test_horocycle_curvature_one():
    h = Horodisk(IdealPoint(0.8), 0.6)
    k = hg.geodesic_curvature_from_samples(*h.horocycle_point([-0.1, 0.0, 0.2]))
    assert k == pytest.approx(1.0, abs=1e-9)


def test_dk_monotone_and_vanishing():
    ks = [0.02, 0.1, 0.25, 0.5, 0.75, 0.9]
    ds = [hg.dk_constant(k) for k in ks]
    assert all(d > 0 for d in ds)
    assert all(b > a for a, b in zip(ds, ds[1:]))
    assert ds[0] < 0.03


def test_dk_out_of_range():
    for k in (0.0, 1.0, -0.3, 1.5):
        with pytest.raises(hg.KappaOutOfRange):
            hg.dk_constant(k)


def test_dk_inequality_random():
    rng = np.random.default_rng(7)
    dk = hg.dk_constant(0.5)
    for offset in rng.uniform(0.0, 4.0, size=20):
        d_gamma, d_rays = hg.ray_configuration_distances(0.5, offset)
        assert d_gamma == pytest.approx(offset, abs=1e-6)
        assert d_rays - d_gamma - dk >= -1e-6


def test_svg_paths():
    g = Geodesic.between(0.0, math.pi / 2)
    assert g.svg_path().startswith("M ")
    assert "<circle" in Horodisk(IdealPoint(0.0), 1.0).svg_circle()
