import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import eval_legendre

from blab import sphharm
from blab.errors import ConfigError, UndefinedFrequencyError
from blab.fields import GeodesicBall, ScalarField
from blab.quadrature import ball_rule, sphere_rule
from blab.sphharm import (
    HarmonicExpansion,
    ball_mean_square,
    basis_index,
    basis_values,
    dim_harmonics,
    evaluate,
    exact_frequency,
    sphere_mean_square,
    tail_majorant,
    truncate,
    zonal_kernel,
)
from blab.supnorm import ResolutionPolicy, sup_norm

from conftest import fd_gradient_euclid, fd_laplacian_euclid


def _harmonic_dim_by_rank(d, k):
    # nullity of the Laplacian from degree-k to degree-(k-2) monomials
    mons = [m for m in itertools.product(range(k + 1), repeat=d) if sum(m) == k]
    if k < 2:
        return len(mons)
    low = {m: i for i, m in enumerate(m for m in itertools.product(range(k - 1), repeat=d) if sum(m) == k - 2)}
    L = np.zeros((len(low), len(mons)))
    for j, m in enumerate(mons):
        for i in range(d):
            if m[i] >= 2:
                t = list(m)
                t[i] -= 2
                L[low[tuple(t)], j] += m[i] * (m[i] - 1)
    return len(mons) - np.linalg.matrix_rank(L)


def _unit(rng, n, d):
    x = rng.standard_normal((n, d))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


# dim_harmonics

def test_dim_examples():
    assert dim_harmonics(3, 2) == 5
    assert dim_harmonics(2, 4) == 2
    assert dim_harmonics(4, 3) == 16


@given(st.integers(2, 5), st.integers(0, 6))
def test_dim_matches_laplacian_rank(d, k):
    assert dim_harmonics(d, k) == _harmonic_dim_by_rank(d, k)


# zonal kernel

def test_zonal_examples():
    assert zonal_kernel(3, 1, 1.0) == pytest.approx(3.0)
    assert zonal_kernel(3, 0, 0.3) == 1.0
    assert zonal_kernel(3, 2, 0.0) == pytest.approx(-2.5)


def test_zonal_perpendicular_basis_sum():
    Y = basis_values(3, 2, np.array([[1.0, 0, 0], [0, 1.0, 0]]))
    s = slice(basis_index(3, 2, 0), basis_index(3, 2, 4) + 1)
    assert Y[0, s] @ Y[1, s] == pytest.approx(-2.5, abs=1e-12)


@given(st.integers(2, 5), st.integers(0, 8), st.integers(0, 2**31))
def test_zonal_reproduces_basis_sum(d, k, seed):
    x, y = _unit(np.random.default_rng(seed), 2, d)
    Y = basis_values(d, k, np.stack([x, y]))
    lo = basis_index(d, k, 0)
    s = slice(lo, lo + dim_harmonics(d, k))
    assert Y[0, s] @ Y[1, s] == pytest.approx(zonal_kernel(d, k, float(x @ y)), abs=1e-10 * dim_harmonics(d, k))


@given(st.integers(0, 12), st.floats(-1, 1))
def test_zonal_d3_is_legendre(k, t):
    assert zonal_kernel(3, k, t) == pytest.approx((2 * k + 1) * eval_legendre(k, t), abs=1e-9 * (2 * k + 1))


def test_zonal_rejects_bad_cosine():
    with pytest.raises(ConfigError):
        zonal_kernel(3, 2, 1.5)


# basis

@pytest.mark.parametrize("d,K", [(2, 10), (3, 8), (4, 6), (5, 4)])
def test_basis_orthonormal(d, K):
    q = sphere_rule(d, 2 * K + 2)
    Y = basis_values(d, K, q.nodes)
    G = (Y * q.weights[:, None]).T @ Y / q.weights.sum()
    assert np.abs(G - np.eye(G.shape[0])).max() < 1e-12


def test_plane_basis_is_re_im_powers():
    phi = np.linspace(0, 2 * np.pi, 17)
    pts = np.stack([np.cos(phi), np.sin(phi)], axis=1)
    Y = basis_values(2, 4, pts)
    for k in range(1, 5):
        lo = basis_index(2, k, 0)
        assert np.allclose(Y[:, lo], math.sqrt(2) * np.cos(k * phi))
        assert np.allclose(Y[:, lo + 1], math.sqrt(2) * np.sin(k * phi))


# evaluation

def test_eval_constant():
    v, g = evaluate(HarmonicExpansion.constant(3, 2.5), np.array([0.3, -1.0, 4.0]))
    assert v == pytest.approx(2.5, rel=1e-15) and np.all(g == 0)


def test_eval_linear():
    v, g = evaluate(HarmonicExpansion.linear(3, [1.0, 0, 0]), np.array([0.3, 0.4, 0.0]))
    assert v == pytest.approx(0.3, abs=1e-15)
    assert np.allclose(g, [1, 0, 0], atol=1e-15)


@given(st.integers(2, 4), st.integers(1, 10), st.integers(0, 2**31))
def test_gradient_matches_finite_differences(d, K, seed):
    rng = np.random.default_rng(seed)
    h = HarmonicExpansion.random(d, K, rng)
    x = rng.uniform(-0.8, 0.8, (5, d))
    _, g = h.evaluate(x)
    fd = fd_gradient_euclid(h, x, 1e-5)
    assert np.linalg.norm(g - fd) <= 1e-6 * max(1.0, np.linalg.norm(g))


@given(st.integers(2, 4), st.integers(2, 10), st.integers(0, 2**31))
def test_expansions_are_harmonic(d, K, seed):
    rng = np.random.default_rng(seed)
    h = HarmonicExpansion.random(d, K, rng)
    x = rng.uniform(-0.5, 0.5, (5, d))
    lap = fd_laplacian_euclid(h, x, 1e-3)
    scale = np.sqrt(h.degree_norms.sum()) * K ** 2
    assert np.abs(lap).max() < 1e-4 * scale


@given(st.integers(2, 4), st.integers(0, 12), st.floats(0.1, 3.0), st.integers(0, 2**31))
def test_homogeneity(d, k, s, seed):
    rng = np.random.default_rng(seed)
    h = HarmonicExpansion.random(d, k, rng, kmin=k)
    x = _unit(rng, 4, d)
    assert np.allclose(h(s * x), s ** k * h(x), rtol=1e-10, atol=1e-12 * s ** k)


def test_r_ref_does_not_change_values(rng):
    h = HarmonicExpansion.random(3, 6, rng)
    x = rng.uniform(-1, 1, (5, 3))
    v1, g1 = h.evaluate(x)
    v2, g2 = h.with_r_ref(0.37).evaluate(x)
    assert np.allclose(v1, v2, rtol=1e-12) and np.allclose(g1, g2, rtol=1e-11)


def test_json_round_trip(tmp_path, rng):
    h = HarmonicExpansion.random(4, 3, rng)
    h.to_json(tmp_path / "h.json")
    assert HarmonicExpansion.from_json(tmp_path / "h.json") == h


def test_duplicate_and_invalid_terms_rejected():
    with pytest.raises(ConfigError):
        HarmonicExpansion(3, ((1, 0, 1.0), (1, 0, 2.0)))
    with pytest.raises(ConfigError):
        HarmonicExpansion(3, ((1, 3, 1.0),))


# closed-form norms

def test_sphere_mean_square_examples():
    assert sphere_mean_square(HarmonicExpansion(3, ((1, 0, 2.0),)), 0.5) == pytest.approx(1.0)
    assert sphere_mean_square(HarmonicExpansion.constant(3, 1.0), 7.0) == 1.0


def test_ball_mean_square_examples():
    assert ball_mean_square(HarmonicExpansion(3, ((1, 0, 1.0),)), 1.0) == pytest.approx(3 / 5)
    assert ball_mean_square(HarmonicExpansion.constant(3, 1.0), 0.2) == 1.0


@given(st.integers(2, 4), st.integers(0, 10), st.floats(0.2, 2.0), st.integers(0, 2**31))
def test_norms_match_quadrature(d, K, rho, seed):
    h = HarmonicExpansion.random(d, K, np.random.default_rng(seed))
    q = sphere_rule(d, 2 * K + 2, None, rho)
    assert q.average(h(q.nodes) ** 2) == pytest.approx(sphere_mean_square(h, rho), rel=1e-9)
    qb = ball_rule(d, 2 * K + 2, 2 * K + 2, rho)
    assert qb.average(h(qb.nodes) ** 2) == pytest.approx(ball_mean_square(h, rho), rel=1e-8)


# exact frequency

def test_exact_frequency_examples():
    assert exact_frequency(HarmonicExpansion.random(3, 7, np.random.default_rng(0), kmin=7), 0.4) == pytest.approx(7.0)
    assert exact_frequency(HarmonicExpansion.constant(3, 1.0), 1.0) == 0.0
    h = HarmonicExpansion(3, ((0, 0, 1.0), (2, 0, 1.0)))
    assert exact_frequency(h, 1.0) == pytest.approx(1.0)


def test_exact_frequency_zero_field():
    with pytest.raises(UndefinedFrequencyError):
        exact_frequency(HarmonicExpansion(3, ()), 1.0)


@given(st.integers(2, 4), st.integers(1, 30), st.integers(0, 2**31))
def test_exact_frequency_monotone_and_bounded(d, K, seed):
    h = HarmonicExpansion.random(d, K, np.random.default_rng(seed))
    vals = [exact_frequency(h, r) for r in np.geomspace(1e-3, 1e3, 30)]
    assert np.all(np.diff(vals) >= -1e-12)
    assert 0 <= vals[0] and vals[-1] <= K + 1e-12


# truncation

def test_truncate_trivial_cases(rng):
    h = HarmonicExpansion.random(3, 5, rng)
    head, tail = truncate(h, 5)
    assert head == h and tail.is_zero
    head, tail = truncate(h, 0)
    assert head.degrees == [0]
    assert (head + tail) == h


def test_tail_sup_below_majorant(rng):
    h = HarmonicExpansion.random(3, 40, rng)
    _, tail = truncate(h, 25)
    rho = 1.2
    fld = ScalarField(3, tail.evaluate, "euclidean", 41 / rho, True, "tail")
    s = sup_norm(fld, GeodesicBall("euclidean", np.zeros(3), rho), ResolutionPolicy(grid_factor=0.5)).sup
    assert 0 < s <= tail_majorant(h, 25, rho)


def test_public_names_exported():
    for name in sphharm.__all__:
        assert hasattr(sphharm, name)
