import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar
from scipy.special import eval_legendre

from blab.eigenfields import zonal_sphere_eigenfunction
from blab.errors import ConfigError, DomainError, UnresolvedSupremumError
from blab.fields import GeodesicBall, ScalarField, expansion_field, geodesic_distance
from blab.quadrature import ball_rule, ball_volume, sphere_area, sphere_rule
from blab.sphharm import HarmonicExpansion, ball_mean_square, basis_values
from blab.supnorm import ResolutionPolicy, sup_norm


# quadrature

def test_sphere_rule_degree1_orthonormal():
    q = sphere_rule(3, 3)
    Y = basis_values(3, 1, q.nodes)[:, 1:]
    G = (Y * q.weights[:, None]).T @ Y / q.measure
    assert np.abs(G - np.eye(3)).max() < 1e-12


def test_sphere_rule_plane_cos():
    q = sphere_rule(2, 8)
    theta = np.arctan2(q.nodes[:, 1], q.nodes[:, 0])
    assert q.average(np.cos(4 * theta) ** 2) == pytest.approx(0.5, abs=1e-14)


def test_sphere_rule_d4_coordinate_square():
    q = sphere_rule(4, 10)
    assert q.average(q.nodes[:, 0] ** 2) == pytest.approx(0.25, abs=1e-14)


def test_ball_rule_examples():
    q = ball_rule(3, 6, 6, 1.0)
    assert q.average(np.ones(len(q))) == pytest.approx(1.0, abs=1e-14)
    h = HarmonicExpansion(3, ((1, 0, 1.0),))
    assert q.average(h(q.nodes) ** 2) == pytest.approx(3 / 5, abs=1e-14)
    for r in (0.3, 2.0):
        qr = ball_rule(3, 4, 4, r)
        assert qr.average(np.sum(qr.nodes ** 2, axis=1)) == pytest.approx(3 * r * r / 5, rel=1e-14)


def test_rules_reject_bad_input():
    with pytest.raises(ConfigError):
        sphere_rule(1, 4)
    with pytest.raises(ConfigError):
        ball_rule(3, 0, 4)
    with pytest.raises(ConfigError):
        ball_rule(3, 4, 4, -1.0)


def _monomial_sphere_average(alpha):
    # mean of prod x_i^{a_i} over S^{d-1}: Gamma formula, zero for any odd exponent
    if any(a % 2 for a in alpha):
        return 0.0
    d = len(alpha)
    b = [(a + 1) / 2 for a in alpha]
    logv = sum(math.lgamma(x) for x in b) - math.lgamma(sum(b))
    log_area = d / 2 * math.log(math.pi) - math.lgamma(d / 2)
    return 2 * math.exp(logv) / (2 * math.exp(log_area))


@given(st.integers(2, 5), st.integers(1, 16), st.data())
def test_sphere_rule_exact_for_monomials(d, order, data):
    alpha = data.draw(st.lists(st.integers(0, order), min_size=d, max_size=d).filter(lambda a: sum(a) <= order))
    q = sphere_rule(d, order)
    vals = np.prod(q.nodes ** np.array(alpha), axis=1)
    assert q.average(vals) == pytest.approx(_monomial_sphere_average(alpha), abs=1e-12)


@given(st.integers(2, 5), st.floats(0.1, 3.0))
def test_weights_positive_and_sum_to_measure(d, r):
    q = sphere_rule(d, 7, None, r)
    assert np.all(q.weights > 0) and q.weights.sum() == pytest.approx(sphere_area(d, r), rel=1e-13)
    b = ball_rule(d, 5, 5, r)
    assert np.all(b.weights > 0) and b.weights.sum() == pytest.approx(ball_volume(d, r), rel=1e-13)


@pytest.mark.parametrize("d,K", [(2, 30), (3, 30), (4, 12)])
def test_quadrature_matches_closed_form_ball_norm(d, K, rng):
    h = HarmonicExpansion.random(d, K, rng)
    q = ball_rule(d, 2 * K + 2, 2 * K + 2, 0.9)
    assert q.average(h(q.nodes) ** 2) == pytest.approx(ball_mean_square(h, 0.9), rel=1e-8)


# sup norm

def test_sup_linear_field():
    fld = expansion_field(HarmonicExpansion.linear(3, [1.0, 0, 0]))
    res = sup_norm(fld, GeodesicBall("euclidean", np.zeros(3), 1.0))
    assert res.sup == pytest.approx(1.0, abs=1e-9)
    assert np.allclose(np.abs(res.argmax), [1, 0, 0], atol=1e-3)  # |x1| peaks at +-e1
    assert res.certificate["h_grid"] == pytest.approx(1 / 8)


def test_sup_torus_sine():
    fld = ScalarField(2, lambda p: (np.sin(3 * p[:, 0]), None), "torus", 3.0)
    res = sup_norm(fld, GeodesicBall("torus", np.array([1.0, 2.0]), 3.0))
    assert res.sup == pytest.approx(1.0, abs=1e-6)


def _zonal_profile_max(k, f, rmax):
    best = minimize_scalar(lambda th: -f(th), bounds=(0, rmax), method="bounded", options={"xatol": 1e-12})
    return max(-best.fun, f(0.0), f(rmax))


def test_sup_zonal_cap_against_1d_search():
    ef = zonal_sphere_eigenfunction(2, 6)
    ball = GeodesicBall("sphere", np.array([0, 0, 1.0]), 0.4)
    val = sup_norm(ef.field(), ball).sup
    assert val == pytest.approx(_zonal_profile_max(6, lambda t: abs(eval_legendre(6, math.cos(t))), 0.4), abs=1e-6)
    # gradient of P_6(cos t) is P_6'(cos t) sin t; derivative by the Legendre recurrence
    def dP(t):
        x = math.cos(t)
        return abs(6 * (x * eval_legendre(6, x) - eval_legendre(5, x)) / math.sin(t)) if t > 0 else 0.0

    grad = sup_norm(ef.field().gradient_norm_field(), ball).sup
    assert grad == pytest.approx(_zonal_profile_max(6, dP, 0.4), rel=1e-6)


def test_sup_lower_bounds_root_mean_square(rng):
    for d in (2, 3):
        h = HarmonicExpansion.random(d, 8, rng)
        fld = expansion_field(h)
        for r in (0.3, 1.0):
            s = sup_norm(fld, GeodesicBall("euclidean", np.zeros(d), r)).sup
            assert s >= math.sqrt(ball_mean_square(h, r))


@given(st.integers(0, 2**31))
def test_refinement_monotone_in_resolution(seed):
    rng = np.random.default_rng(seed)
    h = HarmonicExpansion.random(2, 6, rng)
    fld = expansion_field(h)
    ball = GeodesicBall("euclidean", rng.uniform(-0.5, 0.5, 2), 0.7)
    sups = [sup_norm(fld, ball, ResolutionPolicy(grid_factor=g)).sup for g in (0.5, 0.25, 0.125, 0.0625)]
    assert all(b >= a * (1 - 1e-9) for a, b in zip(sups, sups[1:]))


def test_missing_band_limit():
    fld = ScalarField(2, lambda p: (p[:, 0], None), "euclidean")
    ball = GeodesicBall("euclidean", np.zeros(2), 1.0)
    with pytest.raises(UnresolvedSupremumError):
        sup_norm(fld, ball)
    assert sup_norm(fld, ball, ResolutionPolicy(force=True)).sup == pytest.approx(1.0, abs=1e-9)


def test_region_outside_domain():
    fld = zonal_sphere_eigenfunction(2, 3).field()
    with pytest.raises(DomainError):
        sup_norm(fld, GeodesicBall("euclidean", np.zeros(3), 0.5))
    with pytest.raises(DomainError):
        GeodesicBall("sphere", np.array([0, 0, 1.0]), 3.2)
    with pytest.raises(DomainError):
        GeodesicBall("torus", np.zeros(2), 3.2)


def test_policy_validation():
    with pytest.raises(ConfigError):
        ResolutionPolicy(grid_factor=0.0)
    with pytest.raises(ConfigError):
        ResolutionPolicy(refine_tol=2.0)


@given(st.integers(0, 2**31), st.floats(0.05, 2.5))
def test_sphere_ball_points_are_within_radius(seed, r):
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(3)
    ball = GeodesicBall("sphere", c / np.linalg.norm(c), r)
    V = rng.uniform(-1, 1, (50, 2))
    V = V * (r / np.maximum(1.0, np.linalg.norm(V, axis=1)))[:, None]
    P = ball.to_points(V)
    assert np.allclose(np.linalg.norm(P, axis=1), 1.0)
    assert np.allclose(geodesic_distance("sphere", P, ball.center[None, :]), np.linalg.norm(V, axis=1), atol=1e-12)
