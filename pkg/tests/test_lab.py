import csv
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blab.eigenfields import lift, make_torus_eigenfunction, random_torus_eigenfunction, zonal_sphere_eigenfunction
from blab.errors import ConfigError, DomainError
from blab.fields import GeodesicBall, expansion_field
from blab.lab import (
    CSV_COLUMNS,
    SweepConfig,
    approximate_by_truncation,
    bernstein_ratio,
    bound_values,
    classical_baselines,
    fitted_constant,
    growth_check,
    harmonicity_residual,
    lp_growth_check,
    ols,
    polynomial_bernstein_lp,
    regressions,
    sweep,
)
from blab.sphharm import HarmonicExpansion


def re_zN(N):
    # Re z^N = r^N cos(N phi); the degree-N basis is sqrt2 cos, sqrt2 sin
    return HarmonicExpansion.from_blocks(2, {N: [1 / math.sqrt(2), 0.0]})


def test_bound_values_examples():
    b = bound_values(100.0, 0.1, 2)
    L = math.log(100.0) ** 3
    assert b["global"] == 10.0
    assert b["df"] == pytest.approx(100.0 ** 2 / 0.1)
    assert b["dong"] == pytest.approx(max(100.0, 100.0 ** 0.75))
    assert b["main"] == pytest.approx(max(10 * L / 0.1, 100 * L))
    assert b["2d"] == pytest.approx(max(100.0, 10 * math.log(100.0)))
    assert b["conj"] == pytest.approx(100.0)


@given(st.floats(1.0, 1e4), st.floats(1e-3, 3.0), st.integers(2, 4))
def test_bounds_positive_and_ordered(lam, r, d):
    b = bound_values(lam, r, d)
    assert all(v > 0 for v in b.values())
    assert b["conj"] <= b["2d"] <= b["main"] * (1 + 1e-12)


def test_ratio_single_mode():
    ef = make_torus_eigenfunction(2, [((3, 0), 0.0, 1.0)])
    rep = bernstein_ratio(ef, GeodesicBall("torus", np.zeros(2), math.pi / 2))
    assert rep.ratio == pytest.approx(3.0, rel=1e-8)
    assert rep.constants["global"] == pytest.approx(1.0, rel=1e-8)
    assert set(rep.row()) == set(CSV_COLUMNS)


def test_ratio_sphere_zonal_cap():
    ef = zonal_sphere_eigenfunction(2, 1)
    rep = bernstein_ratio(ef, GeodesicBall("sphere", np.array([0, 0, 1.0]), math.pi / 4))
    # cos(theta) on the cap: gradient sup sin(pi/4), value sup 1
    assert rep.ratio == pytest.approx(math.sqrt(0.5), rel=1e-8)


def test_ratio_domain_mismatch():
    with pytest.raises(DomainError):
        bernstein_ratio(zonal_sphere_eigenfunction(2, 1), GeodesicBall("torus", np.zeros(2), 0.3))


@pytest.mark.parametrize("N", [1, 3, 8])
def test_growth_homogeneous(N):
    f = expansion_field(re_zN(N))
    assert growth_check(f, np.zeros(2), 0.7, N) == pytest.approx((1 + 1 / N) ** N, rel=1e-8)


def test_growth_constant_and_errors():
    f = expansion_field(HarmonicExpansion.constant(3, 2.0))
    assert growth_check(f, np.zeros(3), 0.5, 4) == pytest.approx(1.0)
    with pytest.raises(ConfigError):
        growth_check(f, np.zeros(3), 0.5, 0)


@pytest.mark.parametrize("p", [1, 2, math.inf])
def test_lp_linear_ratio_is_one(p):
    lhs, rhs, ratio = polynomial_bernstein_lp(HarmonicExpansion.linear(2, [1.0, 0.0]), 1.0, p)
    assert ratio == pytest.approx(1.0, rel=1e-6) if p == math.inf else ratio > 0
    if p == math.inf:
        assert lhs == pytest.approx(1.0, rel=1e-8)


@pytest.mark.parametrize("p", [2, math.inf])
@pytest.mark.parametrize("N", [2, 5])
def test_lp_re_zN(N, p):
    # |grad Re z^N| = N r^(N-1) exactly
    lhs, rhs, ratio = polynomial_bernstein_lp(re_zN(N), 1.0, p)
    if p == math.inf:
        assert lhs == pytest.approx(N, rel=1e-8)
        assert ratio == pytest.approx(1.0, rel=1e-8)
    else:
        # ||r^(N-1)||_2 = sqrt(2pi/(2N)); ||r^N cos||_2 = sqrt(pi/(2N+2))
        assert lhs == pytest.approx(N * math.sqrt(math.pi / N), rel=1e-10)
        assert rhs == pytest.approx(N * math.sqrt(math.pi / (2 * N + 2)), rel=1e-10)


def test_lp_rejects_bad_p_and_constants():
    with pytest.raises(ConfigError):
        polynomial_bernstein_lp(re_zN(2), 1.0, 3)
    with pytest.raises(ConfigError):
        polynomial_bernstein_lp(HarmonicExpansion.constant(2, 1.0), 1.0)


@pytest.mark.parametrize("p", [1, 2, math.inf])
def test_lp_growth_homogeneous(p):
    N = 4
    g = lp_growth_check(re_zN(N), 0.8, N, p)
    # ||r^N cos||_p over the disc scales like R^(N + 2/p)
    expo = N + (0 if p == math.inf else 2 / p)
    assert g == pytest.approx((1 + 1 / N) ** expo, rel=1e-6)


def test_truncation_of_polynomial_is_exact():
    h = HarmonicExpansion.random(3, 4, np.random.default_rng(0))
    res = approximate_by_truncation(expansion_field(h), np.zeros(3), 0.5, 1)
    assert res.tail_sup < 1e-10
    assert res.head.kmax <= 5


def test_truncation_of_lift():
    ef = random_torus_eigenfunction(2, 25, 2, 3)
    lf = lift(ef)
    res = approximate_by_truncation(lf.field(), np.zeros(3), 0.3, 10)
    assert res.exact_tail
    assert res.relative_tail <= 0.5
    assert harmonicity_residual(res.head, np.random.default_rng(0).uniform(-0.3, 0.3, (10, 3))) < 1e-6


def test_truncation_rejects_non_harmonic():
    ef = random_torus_eigenfunction(2, 25, 2, 3)
    with pytest.raises((ConfigError, DomainError)):
        approximate_by_truncation(ef.field(), np.zeros(2), 0.3, 2)


@pytest.mark.parametrize("n", [1, 5, 12])
def test_classical_baselines(n):
    trig, markov = classical_baselines(n)
    assert trig == pytest.approx(n, rel=1e-8)
    assert markov == pytest.approx(n * n, rel=1e-8)


def test_ols():
    x = np.arange(5.0)
    assert ols(x, 2 * x + 1) == pytest.approx((2.0, 1.0, 1.0))


def test_sweep_config_errors():
    with pytest.raises(ConfigError):
        SweepConfig("plane", (1.0,), (0.1,))
    with pytest.raises(ConfigError):
        SweepConfig("torus", (), (0.1,))
    with pytest.raises(ConfigError):
        SweepConfig("torus", (1.0,), (0.0,))
    with pytest.raises(ConfigError):
        SweepConfig("sphere", (6.0,), (3.14,))


def test_sweep_writes_outputs(tmp_path):
    out = tmp_path / "s.csv"
    cfg = SweepConfig("torus", (25.0, 100.0), (0.05, 0.1, 0.2), n_centers=1, out=str(out))
    res = sweep(cfg)
    assert len(res.rows) + len(res.failures) == 6
    with open(out) as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == CSV_COLUMNS and len(rows) == 1 + len(res.rows)
    regs = json.loads(out.with_suffix(".regression.json").read_text())
    assert {r["regime"] for r in regs} <= {"sub_wavelength", "fixed_scale"}
    assert json.loads(out.with_suffix(".failures.json").read_text()) == res.failures
    assert fitted_constant(res.rows, "global") > 0
    with pytest.raises(ConfigError):
        fitted_constant(res.rows, "nope")


@settings(max_examples=10)
@given(st.floats(0.5, 3.0), st.floats(-2, 2))
def test_regressions_recover_slope(a, b):
    rows = []
    for lam in (25.0, 100.0):
        for r in np.geomspace(0.01, 0.08, 5):
            rows.append({"lambda": lam, "r": r, "center_id": 0, "ratio": math.exp(b) * r ** (-a)})
    sub = [g for g in regressions(rows) if g["regime"] == "sub_wavelength"][0]
    assert sub["slope"] == pytest.approx(a, rel=1e-9)
