import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from shapely.geometry import Polygon
from shapely.ops import unary_union

from kakeya_lab.errors import ConstraintViolation, InvalidArgument, ResolutionTooCoarse
from kakeya_lab.tubes import (TAU_GEOM, TubeFamily, compression_ratio, intersection_area, make_family,
                              make_tube, relaxed_score, translate_tube, tubes_disjoint, union_measure,
                              unit_ball_volume)


def tube(o, v, delta=0.1, window=(2, 3)):
    return make_tube(2, o, v, delta, window)


def poly(t):
    return Polygon(t.corners())


# ---------------------------------------------------------------- make / translate

def test_measure_of_planar_tube():
    assert tube((0, 0), (1, 0)).measure == pytest.approx(0.2, abs=1e-15)


def test_direction_is_normalized():
    assert tube((0, 0), (2, 0)).direction == (1.0, 0.0)


@pytest.mark.parametrize("kw", [dict(delta=1.5), dict(delta=0.0), dict(v=(0, 0)), dict(window=(3, 2))])
def test_make_tube_rejects(kw):
    v = kw.pop("v", (1, 0))
    with pytest.raises(InvalidArgument):
        make_tube(2, (0, 0), v, kw.get("delta", 0.1), kw.get("window", (2, 3)))


def test_measure_in_three_dimensions():
    t = make_tube(3, (0, 0, 0), (0, 0, 1), 0.1)
    assert t.measure == pytest.approx(math.pi * 0.01)
    assert unit_ball_volume(2) == pytest.approx(math.pi)


def test_translate_default_window():
    t = translate_tube(tube((0, 0), (1, 0)))
    np.testing.assert_allclose(t.origin, (2, 0))
    assert t.length == 1.0


def test_translate_custom_window():
    t = translate_tube(tube((0, 0), (0, 1), window=(1.5, 2.5)))
    np.testing.assert_allclose(t.origin, (0, 1.5))
    assert t.length == pytest.approx(1.0)


def test_translate_twice_offsets_by_four():
    t = translate_tube(translate_tube(tube((1, 1), (1, 0))))
    np.testing.assert_allclose(t.origin, (5, 1))


# ---------------------------------------------------------------- disjointness

def test_tube_not_disjoint_from_itself():
    t = tube((0, 0), (1, 0))
    assert not tubes_disjoint(t, t)


def test_parallel_offset_three_delta():
    assert tubes_disjoint(tube((0, 0), (1, 0)), tube((0, 0.3), (1, 0)))


def test_touching_tubes_count_as_disjoint():
    assert tubes_disjoint(tube((0, 0), (1, 0)), tube((0, 0.2), (1, 0)))


def test_crossing_tubes_against_polygon_oracle():
    a, b = tube((0, 0), (1, 0)), tube((0.5, -0.5), (0, 1))
    assert poly(a).intersection(poly(b)).area > 0
    assert not tubes_disjoint(a, b)


def test_mixed_dimensions_rejected():
    with pytest.raises(InvalidArgument):
        tubes_disjoint(tube((0, 0), (1, 0)), make_tube(3, (0, 0, 0), (1, 0, 0), 0.1))


def test_disjointness_in_three_dimensions():
    a = make_tube(3, (0, 0, 0), (1, 0, 0), 0.1)
    assert tubes_disjoint(a, make_tube(3, (0, 0.5, 0), (1, 0, 0), 0.1))
    assert not tubes_disjoint(a, make_tube(3, (0.5, -0.5, 0), (0, 1, 0), 0.1))


angles = st.floats(0, math.pi, allow_nan=False)
coords = st.floats(-1, 1, allow_nan=False)


@given(coords, coords, angles, coords, coords, angles)
def test_sat_matches_shapely(x1, y1, a1, x2, y2, a2):
    t1 = tube((x1, y1), (math.cos(a1), math.sin(a1)), 0.05)
    t2 = tube((x2, y2), (math.cos(a2), math.sin(a2)), 0.05)
    area = poly(t1).intersection(poly(t2)).area
    disjoint = tubes_disjoint(t1, t2)
    assert disjoint == tubes_disjoint(t2, t1)
    if area > 1e-7:
        assert not disjoint
    if area == 0 and poly(t1).distance(poly(t2)) > 1e-7:
        assert disjoint


@given(coords, coords, angles, coords, coords, angles)
def test_clipping_area_matches_shapely(x1, y1, a1, x2, y2, a2):
    t1 = tube((x1, y1), (math.cos(a1), math.sin(a1)), 0.1)
    t2 = tube((x2, y2), (math.cos(a2), math.sin(a2)), 0.1)
    assert intersection_area(t1.corners(), t2.corners()) == pytest.approx(
        poly(t1).intersection(poly(t2)).area, abs=1e-12)


# ---------------------------------------------------------------- union measure

def test_union_two_disjoint():
    fam = make_family([tube((0, 0), (1, 0)), tube((0, 1), (1, 0))])
    v, err = union_measure(fam, 0.005)
    assert abs(v - 0.4) <= err


def test_union_identical_pair():
    t = tube((0, 0), (1, 0))
    v, err = union_measure(make_family([t, t]), 0.005)
    assert abs(v - 0.2) <= err


def test_resolution_too_coarse():
    fam = make_family([tube((0, 0), (1, 0))])
    with pytest.raises(ResolutionTooCoarse):
        union_measure(fam, 0.025)


@given(st.integers(0, 10_000), st.integers(2, 8))
def test_union_matches_polygon_oracle(seed, n):
    rng = np.random.default_rng(seed)
    tubes = [tube(rng.uniform(-0.5, 0.5, 2), (math.cos(a), math.sin(a)), 0.05)
             for a in rng.uniform(0, math.pi, n)]
    fam = make_family(tubes)
    v, err = union_measure(fam, 0.005)
    exact = unary_union([poly(t) for t in tubes]).area
    assert abs(v - exact) <= err
    assert v <= fam.total_measure + err
    assert v >= max(t.measure for t in tubes) - err


def test_union_monte_carlo_in_three_dimensions():
    t = make_tube(3, (0, 0, 0), (1, 0, 0), 0.2)
    v, err = union_measure(make_family([t]), samples=200_000)
    assert abs(v - t.measure) <= err


# ---------------------------------------------------------------- compression ratio

def test_single_tube_ratio_one():
    rep = compression_ratio(make_family([tube((0, 0), (1, 0))]), 0.005)
    assert abs(rep.value - 1) <= rep.error_estimate
    assert rep.data["certificate"]


def test_parallel_family_ratio_one():
    fam = make_family([tube((0, 0.3 * i), (1, 0)) for i in range(5)])
    rep = compression_ratio(fam, 0.005)
    assert abs(rep.value - 1) <= rep.error_estimate


def test_overlapping_translates_raise():
    t = tube((0, 0), (1, 0))
    with pytest.raises(ConstraintViolation) as exc:
        compression_ratio(make_family([t, t]))
    assert exc.value.pairs == [(0, 1)]
    rep = compression_ratio(make_family([t, t]), enforce_disjoint=False)
    assert not rep.data["certificate"]


@given(st.integers(0, 1000), angles, coords, coords)
def test_ratio_invariant_under_rigid_motion(seed, ang, sx, sy):
    rng = np.random.default_rng(seed)
    tubes = [tube(rng.uniform(-0.5, 0.5, 2), (math.cos(a), math.sin(a)), 0.05)
             for a in rng.uniform(0, math.pi, 4)]
    fam = make_family(tubes)
    rot = np.array([[math.cos(ang), -math.sin(ang)], [math.sin(ang), math.cos(ang)]])
    a = compression_ratio(fam, 0.004, enforce_disjoint=False)
    b = compression_ratio(fam.transformed(rot, (sx, sy)), 0.004, enforce_disjoint=False)
    assert 0 < a.value <= 1 + a.error_estimate
    assert abs(a.value - b.value) <= a.error_estimate + b.error_estimate


# ---------------------------------------------------------------- relaxed score

def test_relaxed_equals_ratio_when_disjoint():
    fam = make_family([tube((0, 0.3 * i), (1, 0)) for i in range(3)])
    assert relaxed_score(fam, 0.005).value == pytest.approx(compression_ratio(fam, 0.005).value)


def test_relaxed_identical_pair_factor_two():
    t = tube((0, 0), (1, 0))
    rep = relaxed_score(make_family([t, t]), 0.005)
    assert rep.data["overlap_factor"] == pytest.approx(2.0)
    assert rep.value == pytest.approx(2 * rep.data["union_ratio"])


# ---------------------------------------------------------------- serialization

def test_family_json_round_trip():
    fam = make_family([tube((0.1, 0.2), (0.6, 0.8)), tube((0.3, -0.1), (1, 0))], "pair", 3, {"x": 1})
    back = TubeFamily.from_dict(json.loads(json.dumps(fam.to_dict())))
    assert back == fam
    assert back.meta["seed"] == 3


def test_family_requires_common_delta():
    with pytest.raises(InvalidArgument):
        make_family([tube((0, 0), (1, 0), 0.1), tube((0, 1), (1, 0), 0.2)])


def test_tau_geom_value():
    assert TAU_GEOM == 1e-9
