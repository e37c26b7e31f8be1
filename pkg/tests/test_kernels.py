import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from blab import kernels
from blab._tables import basis_tables

compiled = pytest.mark.skipif(kernels._compiled is None, reason="compiled kernels not built")


@compiled
@given(st.integers(2, 5), st.integers(0, 12), st.integers(0, 2**31))
def test_backends_agree(d, kmax, seed):
    x = np.random.default_rng(seed).standard_normal((17, d))
    offsets, norms = basis_tables(d, kmax)
    py, cc = kernels.get_backend("python"), kernels.get_backend("compiled")
    a, b = py.solid_basis(x, kmax, offsets, norms), cc.solid_basis(x, kmax, offsets, norms)
    scale = max(np.abs(a).max(), 1.0)
    assert np.abs(a - b).max() <= 1e-12 * scale
    coef = np.random.default_rng(seed + 1).standard_normal(a.shape[1])
    (va, ga), (vb, gb) = py.eval_expansion(x, coef, kmax, offsets, norms), cc.eval_expansion(x, coef, kmax, offsets, norms)
    assert np.allclose(va, vb, rtol=1e-12, atol=1e-12 * scale)
    assert np.allclose(ga, gb, rtol=1e-12, atol=1e-12 * scale)


def test_gradient_matches_basis_differences():
    d, kmax = 3, 6
    offsets, norms = basis_tables(d, kmax)
    x = np.random.default_rng(0).standard_normal((4, d))
    coef = np.random.default_rng(1).standard_normal(int(offsets[d, kmax + 1]))
    _, g = kernels.eval_expansion(x, coef, kmax, offsets, norms)
    h = 1e-6
    for i in range(d):
        e = np.zeros(d)
        e[i] = h
        fd = (kernels.solid_basis(x + e, kmax, offsets, norms) - kernels.solid_basis(x - e, kmax, offsets, norms)) @ coef / (2 * h)
        assert np.allclose(fd, g[:, i], atol=1e-6)


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.get_backend("gpu")


def test_pure_python_switch():
    env = dict(os.environ, BLAB_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from blab import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
