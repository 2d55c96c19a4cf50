"""The numba kernels and the numpy fallback must agree to near machine precision."""

import os
import subprocess
import sys

import numpy as np
import pytest

from gamdvqr import _kernels_numpy as knp

numba_kernels = pytest.importorskip("gamdvqr._kernels_numba")

RNG = np.random.default_rng(77)
N = 500
U = RNG.uniform(1e-6, 1 - 1e-6, N)
V = RNG.uniform(1e-6, 1 - 1e-6, N)
P = RNG.uniform(1e-6, 1 - 1e-6, N)

PARAMS = {
    "gaussian": RNG.uniform(-0.95, 0.95, N),
    "clayton": RNG.uniform(0.05, 15.0, N),
    "gumbel": RNG.uniform(1.0, 12.0, N),
    "frank": RNG.uniform(-30.0, 30.0, N),
}


@pytest.mark.parametrize("name", ["gaussian", "clayton", "gumbel", "frank"])
def test_logpdf_agreement(name):
    th = PARAMS[name]
    a = getattr(knp, f"{name}_logpdf")(U, V, th)
    b = getattr(numba_kernels, f"{name}_logpdf")(U, V, th)
    np.testing.assert_allclose(a, b, atol=1e-10, rtol=1e-10)


@pytest.mark.parametrize("name", ["gaussian", "clayton", "gumbel", "frank"])
def test_hfunc_agreement(name):
    th = PARAMS[name]
    a = getattr(knp, f"{name}_hfunc")(U, V, th)
    b = getattr(numba_kernels, f"{name}_hfunc")(U, V, th)
    np.testing.assert_allclose(a, b, atol=1e-12)


@pytest.mark.parametrize("name", ["gaussian", "clayton", "gumbel", "frank"])
def test_hinv_agreement(name):
    th = PARAMS[name]
    a = getattr(knp, f"{name}_hinv")(P, V, th)
    b = getattr(numba_kernels, f"{name}_hinv")(P, V, th)
    np.testing.assert_allclose(a, b, atol=1e-9)


def test_norm_ppf_matches_scipy():
    p = np.linspace(1e-10, 1 - 1e-10, 10001)
    np.testing.assert_allclose(numba_kernels.norm_ppf(p), knp.norm_ppf(p),
                               atol=1e-12)


def test_norm_cdf_matches_scipy():
    x = np.linspace(-8.0, 8.0, 5001)
    np.testing.assert_allclose(numba_kernels.norm_cdf(x), knp.norm_cdf(x),
                               atol=1e-15)


@pytest.mark.parametrize("flag,expected", [("numpy", "numpy"), ("numba", "numba")])
def test_env_flag_selects_backend(flag, expected):
    env = dict(os.environ, GAMDVQR_BACKEND=flag)
    out = subprocess.run(
        [sys.executable, "-c", "from gamdvqr._backend import BACKEND; print(BACKEND)"],
        capture_output=True, text=True, env=env, check=True)
    assert out.stdout.strip() == expected


def test_invalid_flag_rejected():
    env = dict(os.environ, GAMDVQR_BACKEND="fortran")
    out = subprocess.run(
        [sys.executable, "-c", "import gamdvqr._backend"],
        capture_output=True, text=True, env=env)
    assert out.returncode != 0
