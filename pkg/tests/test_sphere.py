import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kakeya_lab.errors import InvalidArgument, SingularityError
from kakeya_lab.sphere import (ReflectedPoleConfig, SphereSample, msp_lower_bound,
                               parse_sphere_profile, psi_distortion_check, psi_r,
                               reflection_matrix, schatten_norm, schur_apply,
                               spherical_lp, spherical_sup_norms, symbol_matrix)

one = parse_sphere_profile("one")
linear = parse_sphere_profile("linear")
step = parse_sphere_profile("step")


def naive_angle(a, b):
    # plain arccos oracle, evaluated in long double
    a = np.asarray(a, dtype=np.longdouble)
    b = np.asarray(b, dtype=np.longdouble)
    c = np.sum(a * b) / np.sqrt(np.sum(a * a) * np.sum(b * b))
    return np.arccos(np.clip(c, -1, 1))


# ---------------------------------------------------------------- reflection

@pytest.mark.parametrize("d", [1, 2, 3])
def test_reflection_is_an_involution(d):
    for theta in np.linspace(0.01, math.pi - 0.01, 50):
        V = reflection_matrix(theta, d)
        assert np.allclose(V @ V, np.eye(d + 1), atol=1e-12)
        assert np.allclose(V, V.T)
        assert np.linalg.det(V) == pytest.approx(-1.0, abs=1e-12)


def test_reflection_moves_the_pole_by_theta():
    theta = 0.9
    V = reflection_matrix(theta, 2)
    e = np.array([0.0, 0.0, 1.0])
    assert float(e @ V @ e) == pytest.approx(math.cos(theta), abs=1e-15)


@pytest.mark.parametrize("kw", [dict(theta=0.0, r=1.0), dict(theta=math.pi, r=1.0),
                                dict(theta=1.0, r=0.0), dict(theta=1.0, r=1.0, d=0)])
def test_config_validation(kw):
    with pytest.raises(InvalidArgument):
        ReflectedPoleConfig(**kw)


# ---------------------------------------------------------------- psi

def test_psi_vanishes_at_origin():
    cfg = ReflectedPoleConfig(1.1, 100.0)
    assert psi_r(cfg, np.zeros(2), np.zeros(2)) == pytest.approx(0.0, abs=1e-12)


def test_psi_first_order_term():
    cfg = ReflectedPoleConfig(math.pi / 2, 1e6)
    t = 0.37
    val = psi_r(cfg, np.array([0.0, t]), np.zeros(2))
    assert abs(val - t) <= 2 * t * t / 1e6


def test_psi_against_arccos_oracle(rng):
    cfg = ReflectedPoleConfig(1.3, 50.0)
    for _ in range(20):
        x, y = rng.uniform(-2, 2, 2), rng.uniform(-2, 2, 2)
        a = np.append(x / cfg.r, 1.0)
        b = cfg.V @ np.append(-y / cfg.r, 1.0)
        expected = cfg.r * (float(naive_angle(a, b)) - cfg.theta)
        assert psi_r(cfg, x, y) == pytest.approx(expected, abs=1e-9)


@given(st.floats(0.05, math.pi - 0.05), st.sampled_from([1e3, 1e4, 1e6]),
       st.integers(0, 2 ** 32 - 1))
def test_psi_antisymmetry(theta, r, seed):
    rng = np.random.default_rng(seed)
    cfg = ReflectedPoleConfig(theta, r)
    x, y = rng.uniform(-5, 5, (2, 2))
    assert psi_r(cfg, x, y) == pytest.approx(psi_r(cfg, -y, -x), abs=1e-9)


def test_parallel_vectors_raise():
    cfg = ReflectedPoleConfig(math.pi / 2, 1.0)
    # e + x/r is parallel to V(e - y/r) for this choice
    x = np.array([0.0, -1.0])
    y = np.array([0.0, 1.0])
    X = np.append(x, 1.0)
    Y = cfg.V @ np.append(-y, 1.0)
    assert abs(abs(X @ Y) / (np.linalg.norm(X) * np.linalg.norm(Y)) - 1) < 1e-15
    with pytest.raises(SingularityError):
        psi_r(cfg, x, y)


def test_psi_dimension_mismatch():
    with pytest.raises(InvalidArgument):
        psi_r(ReflectedPoleConfig(1.0, 10.0, d=3), np.zeros(2), np.zeros(2))


# ---------------------------------------------------------------- distortion

def test_distortion_stable_in_r():
    k = [psi_distortion_check(ReflectedPoleConfig(math.pi / 2, r), 2000, r / 100, 3).data
         for r in (1e3, 1e6)]
    assert 0.5 <= k[0]["K1"] / k[1]["K1"] <= 2


def test_distortion_theta_comparable():
    k1 = [psi_distortion_check(ReflectedPoleConfig(th, 1e4), 2000, 100.0, 3).value
          for th in (0.3, 2.8)]
    assert max(k1) / min(k1) < 4


def test_distortion_fixed_radius_large_r():
    rep = psi_distortion_check(ReflectedPoleConfig(math.pi / 2, 1e6), 2000, 10.0, 1)
    assert math.isfinite(rep.data["K1"]) and math.isfinite(rep.data["K2"])
    assert rep.data["fd_step"] == pytest.approx(1e-3)


def test_distortion_radius_limit():
    with pytest.raises(InvalidArgument):
        psi_distortion_check(ReflectedPoleConfig(1.0, 100.0), 10, 20.0, 0)


def test_distortion_is_seeded():
    cfg = ReflectedPoleConfig(0.7, 1e4)
    a = psi_distortion_check(cfg, 500, 50.0, 9)
    b = psi_distortion_check(cfg, 500, 50.0, 9)
    assert a.data == b.data


# ---------------------------------------------------------------- Schatten

def test_schatten_examples():
    assert schatten_norm(np.diag([3.0, 4.0]), 2) == pytest.approx(5.0)
    for p in (1, 1.5, 2, 4):
        assert schatten_norm(np.eye(7), p) == pytest.approx(7 ** (1 / p))
    assert schatten_norm(np.eye(7), math.inf) == pytest.approx(1.0)
    assert schatten_norm(np.zeros((3, 3)), 2) == 0.0


@given(st.integers(0, 2 ** 32 - 1))
def test_schatten_two_is_frobenius(seed):
    M = np.random.default_rng(seed).standard_normal((9, 6))
    assert schatten_norm(M, 2) == pytest.approx(np.linalg.norm(M), rel=1e-9)


@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([1.0, 1.5, 3.0]))
def test_schatten_monotone_in_p(seed, p):
    M = np.random.default_rng(seed).standard_normal((6, 6))
    assert schatten_norm(M, p) >= schatten_norm(M, 2 * p) * (1 - 1e-12)


def test_schatten_rejects_bad_input():
    with pytest.raises(InvalidArgument):
        schatten_norm(np.eye(2), 0.5)
    with pytest.raises(InvalidArgument):
        schatten_norm(np.array([[np.nan]]), 2)


# ---------------------------------------------------------------- samples

def test_fibonacci_sample():
    s = SphereSample.fibonacci(100)
    assert len(s) == 100 and s.d == 2
    assert np.allclose(np.diag(s.gram), 1.0)
    assert np.allclose(s.gram, s.gram.T)


def test_random_sample_is_seeded():
    a = SphereSample.random(30, 3, 5)
    b = SphereSample.random(30, 3, 5)
    assert np.array_equal(a.points, b.points) and a.d == 3


def test_sample_rejects_duplicates_and_antipodes():
    e = np.array([[0.0, 0.0, 1.0]])
    with pytest.raises(InvalidArgument):
        SphereSample(np.vstack([e, e]))
    with pytest.raises(InvalidArgument):
        SphereSample(np.vstack([e, -e]))
    with pytest.raises(InvalidArgument):
        SphereSample(np.array([[0.0, 0.0, 2.0]]))


# ---------------------------------------------------------------- Schur

def test_symbol_matrix_diagonal_convention():
    s = SphereSample.fibonacci(5)
    M = symbol_matrix(step, s)
    assert np.all(np.diag(M) == 1.0)
    M = symbol_matrix(step, s, diagonal=0.25)
    assert np.all(np.diag(M) == 0.25)


def test_schur_unit_symbol_is_identity(rng):
    s = SphereSample.fibonacci(12)
    A = rng.standard_normal((12, 12))
    assert np.array_equal(schur_apply(one, s, A), A)


def test_schur_zero_off_diagonal(rng):
    s = SphereSample.fibonacci(12)
    A = rng.standard_normal((12, 12))
    zero = lambda t: np.zeros_like(np.asarray(t, dtype=float))
    assert np.array_equal(schur_apply(zero, s, A, diagonal=1.0), np.diag(np.diag(A)))


def test_schur_rank_one_against_loop(rng):
    s = SphereSample.random(15, 2, 4)
    v = rng.standard_normal(15)
    A = np.outer(v, v)
    out = schur_apply(linear, s, A, diagonal=1.0)
    P = s.points
    for i in range(15):
        for j in range(15):
            m = 1.0 if i == j else float(P[i] @ P[j])
            assert out[i, j] == pytest.approx(m * v[i] * v[j], abs=1e-12)


def test_schur_size_mismatch():
    with pytest.raises(InvalidArgument):
        schur_apply(one, SphereSample.fibonacci(4), np.eye(3))


# ---------------------------------------------------------------- msp

@pytest.mark.parametrize("p", [1, 1.5, 2, 4, math.inf])
def test_msp_unit_symbol(p):
    rep = msp_lower_bound(one, SphereSample.fibonacci(40), p, 8, 1)
    assert rep.value == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("c", [0.5, -2.0, 3j])
def test_msp_constant_symbol(c):
    m = parse_sphere_profile(f"const:{c}")
    rep = msp_lower_bound(m, SphereSample.fibonacci(30), 3.0, 4, 2)
    assert rep.value == pytest.approx(abs(c), rel=1e-9)


def test_msp_p2_never_exceeds_sup():
    rep = msp_lower_bound(step, SphereSample.fibonacci(60), 2.0, 64, 7)
    bound = rep.data["max_abs_symbol"] + 1e-9
    assert max(rep.data["raw_ratios"]) <= bound and rep.value <= bound


def test_msp_monotone_in_trials():
    s = SphereSample.fibonacci(60)
    vals = [msp_lower_bound(step, s, 4.0, t, 11).value for t in (1, 4, 16, 32)]
    assert all(a <= b + 1e-12 for a, b in zip(vals, vals[1:]))


def test_msp_nested_samples():
    big = SphereSample.fibonacci(200)
    idx = np.random.default_rng(0).choice(200, 50, replace=False)
    small = msp_lower_bound(step, big.subset(idx), 4.0, 16, 3)
    large = msp_lower_bound(step, big, 4.0, 16, 3,
                            warm_start=(idx, small.data["best_matrix"]))
    assert small.value <= large.value + 1e-9


def test_msp_is_deterministic():
    s = SphereSample.fibonacci(40)
    a = msp_lower_bound(step, s, 3.0, 6, 21)
    b = msp_lower_bound(step, s, 3.0, 6, 21)
    assert a.value == b.value and a.data["raw_ratios"] == b.data["raw_ratios"]


def test_msp_trials_must_be_positive():
    with pytest.raises(InvalidArgument):
        msp_lower_bound(one, SphereSample.fibonacci(4), 2.0, 0, 1)


# ---------------------------------------------------------------- LP data

def test_linear_symbol_lives_in_level_zero():
    norms = spherical_sup_norms(linear, 8)
    assert norms[0] > 0.9
    assert np.all(norms[1:] < 1e-12)


def test_step_symbol_bounded_below():
    norms = spherical_sup_norms(step, 12)
    assert np.min(norms[4:]) >= 0.15


def test_spherical_lp_reconstructs_smooth_symbol():
    m = lambda t: np.exp(np.asarray(t, dtype=float))
    pieces = spherical_lp(m, 10, 1 << 14)
    total = np.sum([np.real(p.values) for p in pieces], axis=0)
    t = pieces[0].x
    assert np.max(np.abs(total - m(np.cos(t)))) < 1e-10


def test_sphere_profile_parsing(tmp_path):
    f = tmp_path / "m.csv"
    f.write_text("x,re\n-1,0\n1,2\n")
    m = parse_sphere_profile(f"file:{f}")
    assert m(np.array([0.0]))[0] == pytest.approx(1.0)
    with pytest.raises(InvalidArgument):
        parse_sphere_profile("nope")
