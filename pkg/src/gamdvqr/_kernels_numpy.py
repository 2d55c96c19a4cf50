"""Pure numpy/scipy implementations of the hot copula kernels.

Every kernel is elementwise over equal-length float64 arrays; the copula
parameter is an array too because covariate-dependent models evaluate a
different parameter on every row.  Densities are returned on the log scale
and computed in log space throughout so that extreme parameters stay finite.

The numba backend in ``_kernels_numba`` mirrors this module one to one;
``GAMDVQR_BACKEND=numpy`` forces this implementation.
"""

import numpy as np
from scipy.special import ndtr, ndtri

_BISECT_MAX_ITER = 200
_BISECT_WIDTH = 1e-13
_EPS = 1e-12


def norm_cdf(x):
    return ndtr(x)


def norm_ppf(p):
    return ndtri(p)


# -- Gaussian ----------------------------------------------------------------

def gaussian_logpdf(u, v, rho):
    x = ndtri(u)
    y = ndtri(v)
    r2 = 1.0 - rho * rho
    return -0.5 * np.log(r2) - (rho * rho * (x * x + y * y) - 2.0 * rho * x * y) / (2.0 * r2)


def gaussian_hfunc(w, z, rho):
    return ndtr((ndtri(w) - rho * ndtri(z)) / np.sqrt(1.0 - rho * rho))


def gaussian_hinv(p, z, rho):
    return ndtr(ndtri(p) * np.sqrt(1.0 - rho * rho) + rho * ndtri(z))


# -- Clayton -----------------------------------------------------------------

def _clayton_log_s(u, v, th):
    # log(u^-th + v^-th - 1) without overflow
    a = -th * np.log(u)
    b = -th * np.log(v)
    m = np.maximum(a, b)
    return m + np.log(np.exp(a - m) + np.exp(b - m) - np.exp(-m))


def clayton_logpdf(u, v, th):
    ls = _clayton_log_s(u, v, th)
    return np.log1p(th) - (th + 1.0) * (np.log(u) + np.log(v)) - (2.0 + 1.0 / th) * ls


def clayton_hfunc(w, z, th):
    ls = _clayton_log_s(w, z, th)
    return np.exp(-(th + 1.0) * np.log(z) - (1.0 + 1.0 / th) * ls)


def clayton_hinv(p, z, th):
    lt1 = -th / (th + 1.0) * np.log(p) - th * np.log(z)
    lt2 = -th * np.log(z)
    # t = exp(lt1) - exp(lt2) + 1 with lt1 >= lt2
    lnt = lt1 + np.log1p(-np.exp(lt2 - lt1) + np.exp(-lt1))
    return np.exp(-lnt / th)


# -- Gumbel ------------------------------------------------------------------

def _gumbel_parts(w, z, th):
    x = -np.log(w)
    y = -np.log(z)
    lx = np.log(x)
    ly = np.log(y)
    a = th * lx
    b = th * ly
    m = np.maximum(a, b)
    l_s = m + np.log(np.exp(a - m) + np.exp(b - m))
    l_a = l_s / th
    return x, y, lx, ly, l_a


def gumbel_logpdf(u, v, th):
    x, y, lx, ly, l_a = _gumbel_parts(u, v, th)
    big_a = np.exp(l_a)
    return (-big_a + x + y + (th - 1.0) * (lx + ly)
            + (2.0 - 2.0 * th) * l_a + np.log1p((th - 1.0) / big_a))


def gumbel_hfunc(w, z, th):
    x, y, lx, ly, l_a = _gumbel_parts(w, z, th)
    return np.exp(-np.exp(l_a) + y + (th - 1.0) * (ly - l_a))


def gumbel_hinv(p, z, th):
    lo = np.full_like(p, _EPS)
    hi = np.full_like(p, 1.0 - _EPS)
    for _ in range(_BISECT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        below = gumbel_hfunc(mid, z, th) < p
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.max(hi - lo) < _BISECT_WIDTH:
            break
    return 0.5 * (lo + hi)


# -- Frank -------------------------------------------------------------------

def frank_logpdf(u, v, th):
    q = th * (-np.expm1(-th))
    d = -np.expm1(-th) - np.expm1(-th * u) * np.expm1(-th * v)
    return np.log(q) - th * (u + v) - 2.0 * np.log(np.abs(d))


def frank_hfunc(w, z, th):
    num = np.expm1(-th * w) * np.exp(-th * z)
    den = np.expm1(-th) + np.expm1(-th * w) * np.expm1(-th * z)
    return num / den


def frank_hinv(p, z, th):
    lo = np.full_like(p, _EPS)
    hi = np.full_like(p, 1.0 - _EPS)
    for _ in range(_BISECT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        below = frank_hfunc(mid, z, th) < p
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.max(hi - lo) < _BISECT_WIDTH:
            break
    return 0.5 * (lo + hi)
