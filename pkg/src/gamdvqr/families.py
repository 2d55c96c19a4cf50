"""Parametric bivariate copula families.

Implements Independence, Gaussian, Student-t, Clayton, Gumbel and Frank
copulas with densities, CDFs, h-functions (conditional CDFs), inverse
h-functions, conditional sampling, and the bijections between the family
parameter and Kendall's tau.  Clayton and Gumbel additionally support the
90/180/270 degree counterclockwise rotations, which is how negative
dependence is covered for those families; the rotated parameter is signed
so that tau and the parameter always move together.

All evaluation functions accept scalars or arrays for the parameter and
the (u, v) arguments and broadcast them together; the parameter may vary
per observation, which is what covariate-dependent tau models produce.
Inputs on the unit square are clamped to [1e-10, 1 - 1e-10] before
evaluation, values outside [0, 1] raise :class:`DomainError`.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import gammaln, stdtr, stdtrit

from ._backend import kernels
from .errors import DomainError

KINDS = ("independence", "gaussian", "studentt", "clayton", "gumbel", "frank")
ROTATIONS = (0, 90, 180, 270)

# families whose unrotated form only covers tau >= 0 and therefore rotate
_ROTATABLE = ("clayton", "gumbel")

_CLAMP = 1e-10
_THETA_FLOOR = 1e-8  # Clayton/Frank parameters below this are independence-like
FRANK_PARAM_MAX = 35.0


@dataclass(frozen=True)
class CopulaFamily:
    """A copula family tag: kind, rotation and (Student-t only) df."""

    kind: str
    rotation: int = 0
    df: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown copula kind {self.kind!r}")
        if self.rotation not in ROTATIONS:
            raise DomainError(f"rotation must be one of {ROTATIONS}, got {self.rotation}")
        if self.kind not in _ROTATABLE and self.rotation != 0:
            raise DomainError(f"{self.kind} copula admits rotation 0 only")
        if self.kind == "studentt":
            if self.df is None or not self.df > 2:
                raise DomainError("studentt copula requires df > 2")
        elif self.df is not None:
            raise DomainError(f"{self.kind} copula takes no df")

    @property
    def label(self) -> str:
        s = self.kind if self.rotation == 0 else f"{self.kind}-{self.rotation}"
        return s if self.df is None else f"{s}(df={self.df:g})"


INDEPENDENCE = CopulaFamily("independence")


# -- Kendall's tau <-> parameter ----------------------------------------------

_DEBYE_TAYLOR = (
    2.77777777777777762e-02,   # x^2
    -2.77777777777777778e-04,  # x^4
    4.72411186696900978e-06,   # x^6
    -9.18577307466196408e-08,  # x^8
    1.89788699889710005e-09,   # x^10
    -4.06476164514422560e-11,  # x^12
    8.92169102045645230e-13,   # x^14
    -1.99392958607210744e-14,  # x^16
)


def debye1(x):
    """First Debye function D1(x) = (1/x) * integral_0^x t/(e^t - 1) dt.

    Series evaluation (Taylor below |x|=1, exponential tail sum above),
    accurate to ~1e-14 and valid for negative arguments through
    D1(-x) = D1(x) + x/2.
    """
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    ax = np.abs(x)
    out = np.empty_like(ax)

    small = ax <= 1.0
    if np.any(small):
        s = ax[small]
        s2 = s * s
        acc = 1.0 - s / 4.0
        p = s2
        for c in _DEBYE_TAYLOR:
            acc = acc + c * p
            p = p * s2
        out[small] = acc
    if np.any(~small):
        s = ax[~small]
        total = np.zeros_like(s)
        n_terms = int(np.ceil(37.0 / float(np.min(s)))) + 1
        for k in range(1, n_terms + 1):
            total += np.exp(-k * s) * (s / k + 1.0 / k**2)
        out[~small] = (np.pi**2 / 6.0 - total) / s

    out = np.where(x < 0.0, out + ax / 2.0, out)
    return float(out[0]) if scalar else out


def _frank_tau_of_theta(theta):
    theta = np.asarray(theta, dtype=float)
    small = np.abs(theta) <= 1.0
    # tau = 1 - 4(1 - D1)/theta == 4 * sum_k c_k theta^(2k-1); the direct odd
    # series avoids the 1 - D1 cancellation that ruins tiny parameters
    tau_series = np.zeros_like(theta)
    p = theta.copy()
    for c in _DEBYE_TAYLOR:
        tau_series = tau_series + 4.0 * c * p
        p = p * theta * theta
    t = np.where(small, 2.0, theta)
    tau_large = 1.0 - 4.0 * (1.0 - debye1(t)) / t
    return np.where(small, tau_series, tau_large)


def _frank_theta_of_tau(tau):
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    lo = np.full_like(tau, -FRANK_PARAM_MAX)
    hi = np.full_like(tau, FRANK_PARAM_MAX)
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        below = _frank_tau_of_theta(mid) < tau
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.max(hi - lo) < 1e-13:
            break
    return 0.5 * (lo + hi)


FRANK_TAU_MAX = float(_frank_tau_of_theta(FRANK_PARAM_MAX))


def tau_bounds(family: CopulaFamily) -> tuple[float, float]:
    """Admissible (closed-interior) Kendall's tau range of a family."""
    kind, rot = family.kind, family.rotation
    if kind == "independence":
        return (0.0, 0.0)
    if kind in ("gaussian", "studentt"):
        return (-1.0, 1.0)
    if kind == "frank":
        return (-FRANK_TAU_MAX, FRANK_TAU_MAX)
    if rot in (0, 180):
        return (0.0, 1.0)
    return (-1.0, 0.0)


def _check_tau_admissible(family, tau):
    lo, hi = tau_bounds(family)
    kind, rot = family.kind, family.rotation
    if kind == "independence":
        ok = tau == 0.0
    elif kind == "frank":
        ok = (tau >= lo) & (tau <= hi)
    elif kind == "clayton":
        ok = (tau > lo) & (tau < hi) & (tau != 0.0)
    elif kind == "gumbel":
        ok = ((tau >= 0.0) & (tau < 1.0)) if rot in (0, 180) else ((tau > -1.0) & (tau <= 0.0))
    else:
        ok = (tau > lo) & (tau < hi)
    if not np.all(ok):
        raise DomainError(f"tau outside admissible range {(lo, hi)} for {family.label}")


def tau_to_param(family: CopulaFamily, tau):
    """Map Kendall's tau to the copula parameter (signed for rotations)."""
    tau_arr = np.asarray(tau, dtype=float)
    if not np.all(np.isfinite(tau_arr)):
        raise DomainError("tau must be finite")
    _check_tau_admissible(family, tau_arr)
    kind, rot = family.kind, family.rotation
    if kind == "independence":
        eta = np.zeros_like(tau_arr)
    elif kind in ("gaussian", "studentt"):
        eta = np.sin(0.5 * np.pi * tau_arr)
    elif kind == "gumbel":
        eta = 1.0 / (1.0 - tau_arr) if rot in (0, 180) else -1.0 / (1.0 + tau_arr)
    elif kind == "clayton":
        eta = 2.0 * tau_arr / (1.0 - tau_arr) if rot in (0, 180) else 2.0 * tau_arr / (1.0 + tau_arr)
    else:  # frank
        eta = _frank_theta_of_tau(tau_arr).reshape(tau_arr.shape)
    return float(eta) if np.ndim(tau) == 0 else eta


def _check_eta_admissible(family, eta):
    kind, rot = family.kind, family.rotation
    if kind == "independence":
        ok = eta == 0.0
    elif kind in ("gaussian", "studentt"):
        ok = np.abs(eta) < 1.0
    elif kind == "gumbel":
        ok = eta >= 1.0 if rot in (0, 180) else eta <= -1.0
    elif kind == "clayton":
        ok = eta > 0.0 if rot in (0, 180) else eta < 0.0
    else:
        ok = np.abs(eta) <= FRANK_PARAM_MAX
    if not np.all(ok & np.isfinite(eta)):
        raise DomainError(f"parameter inadmissible for {family.label}")


def param_to_tau(family: CopulaFamily, eta):
    """Inverse of :func:`tau_to_param`."""
    eta_arr = np.asarray(eta, dtype=float)
    _check_eta_admissible(family, eta_arr)
    kind, rot = family.kind, family.rotation
    if kind == "independence":
        tau = np.zeros_like(eta_arr)
    elif kind in ("gaussian", "studentt"):
        tau = 2.0 / np.pi * np.arcsin(eta_arr)
    elif kind == "gumbel":
        tau = 1.0 - 1.0 / eta_arr if rot in (0, 180) else -1.0 - 1.0 / eta_arr
    elif kind == "clayton":
        tau = eta_arr / (eta_arr + 2.0) if rot in (0, 180) else eta_arr / (2.0 - eta_arr)
    else:
        tau = _frank_tau_of_theta(eta_arr)
    return float(tau) if np.ndim(eta) == 0 else tau


# -- evaluation plumbing -------------------------------------------------------

def _prepare(eta, *uv):
    """Validate/clamp unit-square args, broadcast with eta, flatten."""
    arrs = [np.asarray(a, dtype=float) for a in uv]
    for a in arrs:
        if np.any((a < 0.0) | (a > 1.0) | ~np.isfinite(a)):
            raise DomainError("arguments must lie in [0, 1]")
    eta_arr = np.asarray(eta, dtype=float)
    scalar = eta_arr.ndim == 0 and all(a.ndim == 0 for a in arrs)
    b = np.broadcast_arrays(eta_arr, *arrs)
    shape = b[0].shape
    eta_flat = np.ascontiguousarray(b[0], dtype=float).ravel()
    uv_flat = [np.clip(np.ascontiguousarray(x, dtype=float).ravel(), _CLAMP, 1.0 - _CLAMP)
               for x in b[1:]]
    return eta_flat, uv_flat, shape, scalar


def _finish(out, shape, scalar):
    out = out.reshape(shape)
    return float(out[()]) if scalar else out


def _base_theta(family, eta):
    """Unrotated-family parameter: rotations 90/270 carry a negated sign."""
    if family.kind in ("clayton", "gumbel") and family.rotation in (90, 270):
        return -eta
    return eta


def _floor_theta(kind, th):
    if kind in ("clayton", "frank"):
        tiny = np.abs(th) < _THETA_FLOOR
        if np.any(tiny):
            th = np.where(tiny, np.where(th < 0, -_THETA_FLOOR, _THETA_FLOOR), th)
    return th


# Student-t base functions live here (scipy special, shared by both backends).

def _t_logpdf(u, v, rho, df):
    x = stdtrit(df, u)
    y = stdtrit(df, v)
    r2 = 1.0 - rho * rho
    lc = (gammaln((df + 2.0) / 2.0) + gammaln(df / 2.0) - 2.0 * gammaln((df + 1.0) / 2.0)
          - 0.5 * np.log(r2))
    return (lc + (df + 1.0) / 2.0 * (np.log1p(x * x / df) + np.log1p(y * y / df))
            - (df + 2.0) / 2.0 * np.log1p((x * x + y * y - 2.0 * rho * x * y) / (df * r2)))


def _t_hfunc(w, z, rho, df):
    x = stdtrit(df, w)
    y = stdtrit(df, z)
    scale = np.sqrt((df + y * y) * (1.0 - rho * rho) / (df + 1.0))
    return stdtr(df + 1.0, (x - rho * y) / scale)


def _t_hinv(p, z, rho, df):
    y = stdtrit(df, z)
    scale = np.sqrt((df + y * y) * (1.0 - rho * rho) / (df + 1.0))
    return stdtr(df, stdtrit(df + 1.0, p) * scale + rho * y)


def _base_logpdf(family, u, v, th):
    kind = family.kind
    if kind == "gaussian":
        return kernels.gaussian_logpdf(u, v, th)
    if kind == "studentt":
        return _t_logpdf(u, v, th, family.df)
    if kind == "clayton":
        return kernels.clayton_logpdf(u, v, th)
    if kind == "gumbel":
        return kernels.gumbel_logpdf(u, v, th)
    return kernels.frank_logpdf(u, v, th)


def _base_hfunc(family, w, z, th):
    kind = family.kind
    if kind == "gaussian":
        return kernels.gaussian_hfunc(w, z, th)
    if kind == "studentt":
        return _t_hfunc(w, z, th, family.df)
    if kind == "clayton":
        return kernels.clayton_hfunc(w, z, th)
    if kind == "gumbel":
        return kernels.gumbel_hfunc(w, z, th)
    return kernels.frank_hfunc(w, z, th)


def _base_hinv(family, p, z, th):
    kind = family.kind
    if kind == "gaussian":
        return kernels.gaussian_hinv(p, z, th)
    if kind == "studentt":
        return _t_hinv(p, z, th, family.df)
    if kind == "clayton":
        return kernels.clayton_hinv(p, z, th)
    if kind == "gumbel":
        return kernels.gumbel_hinv(p, z, th)
    return kernels.frank_hinv(p, z, th)


# -- public operations ---------------------------------------------------------

def copula_logpdf(family: CopulaFamily, eta, u, v):
    """log c(u, v); rotations re-point the density at the reflected corner."""
    if family.kind == "independence":
        _, (uu, vv), shape, scalar = _prepare(0.0, u, v)
        return _finish(np.zeros_like(uu), shape, scalar)
    eta_f, (uu, vv), shape, scalar = _prepare(eta, u, v)
    _check_eta_admissible(family, eta_f)
    th = _floor_theta(family.kind, _base_theta(family, eta_f))
    rot = family.rotation
    if rot == 0:
        out = _base_logpdf(family, uu, vv, th)
    elif rot == 90:
        out = _base_logpdf(family, 1.0 - uu, vv, th)
    elif rot == 180:
        out = _base_logpdf(family, 1.0 - uu, 1.0 - vv, th)
    else:
        out = _base_logpdf(family, uu, 1.0 - vv, th)
    return _finish(out, shape, scalar)


def copula_pdf(family: CopulaFamily, eta, u, v):
    return np.exp(copula_logpdf(family, eta, u, v))


def _clayton_log_s(u, v, th):
    a, b = -th * np.log(u), -th * np.log(v)
    m = max(a, b)
    return m + np.log(np.exp(a - m) + np.exp(b - m) - np.exp(-m))


def _base_cdf_scalar(family, u, v, th):
    """Unrotated CDF at a single point (positive-parameter form)."""
    kind = family.kind
    if kind == "clayton":
        return float(np.exp(-_clayton_log_s(u, v, th) / th))
    if kind == "gumbel":
        lx, ly = th * np.log(-np.log(u)), th * np.log(-np.log(v))
        m = max(lx, ly)
        return float(np.exp(-np.exp((m + np.log(np.exp(lx - m) + np.exp(ly - m))) / th)))
    if kind == "frank":
        return float(-np.log1p(np.expm1(-th * u) * np.expm1(-th * v) / np.expm1(-th)) / th)
    # gaussian / studentt: integrate the h-function over the first argument
    th_arr = np.asarray([th])
    return quad(lambda w: float(_base_hfunc(family, np.asarray([v]), np.asarray([w]), th_arr)[0]),
                0.0, u, epsabs=1e-11, epsrel=1e-9, limit=200)[0]


def copula_cdf(family: CopulaFamily, eta, u, v):
    """C(u, v) with the counterclockwise rotation convention."""
    if family.kind == "independence":
        _, (uu, vv), shape, scalar = _prepare(0.0, u, v)
        return _finish(uu * vv, shape, scalar)
    eta_f, (uu, vv), shape, scalar = _prepare(eta, u, v)
    _check_eta_admissible(family, eta_f)
    th = _floor_theta(family.kind, _base_theta(family, eta_f))
    rot = family.rotation
    out = np.empty_like(uu)
    for i in range(uu.shape[0]):
        ui, vi, ti = uu[i], vv[i], th[i]
        if rot == 0:
            out[i] = _base_cdf_scalar(family, ui, vi, ti)
        elif rot == 90:
            out[i] = vi - _base_cdf_scalar(family, 1.0 - ui, vi, ti)
        elif rot == 180:
            out[i] = ui + vi - 1.0 + _base_cdf_scalar(family, 1.0 - ui, 1.0 - vi, ti)
        else:
            out[i] = ui - _base_cdf_scalar(family, ui, 1.0 - vi, ti)
    return _finish(out, shape, scalar)


def hfunc(family: CopulaFamily, eta, cond_on: int, u, v):
    """Conditional CDF on the copula scale.

    ``u`` is the free coordinate, ``v`` the conditioning one; ``cond_on``
    names the slot of C(., .) the conditioning variable occupies, so
    ``cond_on=2`` returns h_{1|2}(u | v) = dC(u, v)/dv and ``cond_on=1``
    the mirrored h_{2|1}.
    """
    if cond_on not in (1, 2):
        raise DomainError("cond_on must be 1 or 2")
    if family.kind == "independence":
        _, (uu, vv), shape, scalar = _prepare(0.0, u, v)
        return _finish(uu, shape, scalar)
    eta_f, (uu, vv), shape, scalar = _prepare(eta, u, v)
    _check_eta_admissible(family, eta_f)
    th = _floor_theta(family.kind, _base_theta(family, eta_f))
    rot = family.rotation
    if rot == 0:
        out = _base_hfunc(family, uu, vv, th)
    elif rot == 180:
        out = 1.0 - _base_hfunc(family, 1.0 - uu, 1.0 - vv, th)
    elif (rot == 90 and cond_on == 2) or (rot == 270 and cond_on == 1):
        out = 1.0 - _base_hfunc(family, 1.0 - uu, vv, th)
    else:  # (90, cond_on=1) or (270, cond_on=2)
        out = _base_hfunc(family, uu, 1.0 - vv, th)
    return _finish(out, shape, scalar)


def hfunc_inv(family: CopulaFamily, eta, cond_on: int, p, v):
    """Inverse of :func:`hfunc` in its free argument.

    Returns u with hfunc(family, eta, cond_on, u, v) = p.  Closed form for
    Gaussian, Student-t and Clayton; bisection for Gumbel and Frank.
    """
    if cond_on not in (1, 2):
        raise DomainError("cond_on must be 1 or 2")
    if family.kind == "independence":
        _, (pp, vv), shape, scalar = _prepare(0.0, p, v)
        return _finish(pp, shape, scalar)
    eta_f, (pp, vv), shape, scalar = _prepare(eta, p, v)
    _check_eta_admissible(family, eta_f)
    th = _floor_theta(family.kind, _base_theta(family, eta_f))
    rot = family.rotation
    if rot == 0:
        out = _base_hinv(family, pp, vv, th)
    elif rot == 180:
        out = 1.0 - _base_hinv(family, 1.0 - pp, 1.0 - vv, th)
    elif (rot == 90 and cond_on == 2) or (rot == 270 and cond_on == 1):
        out = 1.0 - _base_hinv(family, 1.0 - pp, vv, th)
    else:
        out = _base_hinv(family, pp, 1.0 - vv, th)
    return _finish(out, shape, scalar)


def copula_sample(family: CopulaFamily, eta, n: int, seed: int):
    """n pairs by conditional-distribution sampling, deterministic per seed."""
    if n < 1:
        raise DomainError("n must be >= 1")
    rng = np.random.default_rng(seed)
    w = rng.random((2, n))
    u = w[0]
    v = hfunc_inv(family, eta, 1, w[1], u)
    return np.column_stack([u, np.asarray(v)])
