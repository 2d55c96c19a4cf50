"""Covariate-dependent Kendall's tau: link, designs, cyclic spline basis.

tau is modeled on the Fisher-z scale, tau = tanh(eta_lin / 2) with linear
predictor eta_lin = design(row) . coefficients.  Three designs are
supported: a constant, the annual sine/cosine pair, and a cyclic cubic
B-spline in day of year for smooth seasonal shapes.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

DESIGN_KINDS = ("constant", "linear_sincos", "cyclic_spline")

YEAR_DAYS = 365.25
DEFAULT_N_BASIS = 8


_TAU_ONE = np.nextafter(1.0, 0.0)


def link_tau(eta_lin):
    """tau = tanh(eta_lin / 2), mapping the real line onto (-1, 1).

    tanh saturates to exactly 1.0 in double precision around |eta| = 38;
    the output is pinned to the largest double strictly inside the interval.
    """
    return np.clip(np.tanh(np.asarray(eta_lin, dtype=float) / 2.0), -_TAU_ONE, _TAU_ONE)


def inverse_link_tau(tau):
    """2 * artanh(tau), the Fisher-z linear predictor of a given tau."""
    return 2.0 * np.arctanh(np.asarray(tau, dtype=float))


@dataclass(frozen=True)
class Covariates:
    """Per-row temporal covariates: day of year plus its annual sin/cos."""

    doy: np.ndarray
    u_sin: np.ndarray = field(default=None)
    u_cos: np.ndarray = field(default=None)

    def __post_init__(self):
        doy = np.atleast_1d(np.asarray(self.doy, dtype=float))
        if np.any((doy < 1.0) | (doy > 366.0)):
            raise DomainError("doy must lie in [1, 366]")
        object.__setattr__(self, "doy", doy)
        ang = 2.0 * np.pi * doy / YEAR_DAYS
        if self.u_sin is None:
            object.__setattr__(self, "u_sin", np.sin(ang))
            object.__setattr__(self, "u_cos", np.cos(ang))
        else:
            u_sin = np.atleast_1d(np.asarray(self.u_sin, dtype=float))
            u_cos = np.atleast_1d(np.asarray(self.u_cos, dtype=float))
            if np.max(np.abs(u_sin**2 + u_cos**2 - 1.0)) > 1e-12:
                raise DomainError("u_sin^2 + u_cos^2 must equal 1")
            object.__setattr__(self, "u_sin", u_sin)
            object.__setattr__(self, "u_cos", u_cos)

    def __len__(self):
        return self.doy.shape[0]

    @classmethod
    def from_doy(cls, doy):
        return cls(doy=doy)


def _cardinal_cubic(s):
    """Cubic cardinal B-spline on [0, 4] in knot units."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    m = (s >= 0) & (s < 1)
    out[m] = s[m] ** 3 / 6.0
    m = (s >= 1) & (s < 2)
    out[m] = (-3.0 * s[m] ** 3 + 12.0 * s[m] ** 2 - 12.0 * s[m] + 4.0) / 6.0
    m = (s >= 2) & (s < 3)
    out[m] = (3.0 * s[m] ** 3 - 24.0 * s[m] ** 2 + 60.0 * s[m] - 44.0) / 6.0
    m = (s >= 3) & (s < 4)
    out[m] = (4.0 - s[m]) ** 3 / 6.0
    return out


def spline_knots(n_basis: int = DEFAULT_N_BASIS, origin: float = 1.0) -> np.ndarray:
    return origin + np.arange(n_basis) * (YEAR_DAYS / n_basis)


def cyclic_spline_basis(doy, knots: np.ndarray) -> np.ndarray:
    """Cyclic cubic B-spline basis over one year.

    One wrapped cardinal cubic per (equally spaced) knot; with at least 5
    knots each basis function appears exactly once per period, the columns
    form a partition of unity, and every column has period 365.25.
    """
    n_basis = len(knots)
    if n_basis < 5:
        raise DomainError("cyclic cubic basis needs at least 5 knots")
    h = YEAR_DAYS / n_basis
    doy = np.atleast_1d(np.asarray(doy, dtype=float))
    d = np.mod(doy[:, None] - knots[None, :], YEAR_DAYS)
    return _cardinal_cubic(d / h)


def build_design(cov: Covariates, kind: str, knots: np.ndarray | None = None) -> np.ndarray:
    """Design matrix of the tau model: (n, 1), (n, 3) or (n, n_basis)."""
    if kind == "constant":
        return np.ones((len(cov), 1))
    if kind == "linear_sincos":
        return np.column_stack([np.ones(len(cov)), cov.u_sin, cov.u_cos])
    if kind == "cyclic_spline":
        if knots is None:
            knots = spline_knots()
        return cyclic_spline_basis(cov.doy, knots)
    raise DomainError(f"unknown design kind {kind!r}")


def cyclic_second_diff_penalty(n_basis: int) -> np.ndarray:
    """P = D'D for the wrapped second-difference operator D."""
    d = np.zeros((n_basis, n_basis))
    for j in range(n_basis):
        d[j, (j - 1) % n_basis] = 1.0
        d[j, j] = -2.0
        d[j, (j + 1) % n_basis] = 1.0
    return d.T @ d


@dataclass(frozen=True)
class TauModel:
    """Fitted tau model: design kind, coefficients, spline knots/penalty."""

    kind: str
    coef: np.ndarray
    knots: np.ndarray | None = None
    penalty: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "coef", np.asarray(self.coef, dtype=float))
        if self.kind not in DESIGN_KINDS:
            raise DomainError(f"unknown design kind {self.kind!r}")
        expected = {"constant": 1, "linear_sincos": 3}.get(self.kind)
        if expected is not None and self.coef.shape != (expected,):
            raise DomainError(f"{self.kind} design takes {expected} coefficients")
        if self.kind == "cyclic_spline":
            if self.knots is None:
                object.__setattr__(self, "knots", spline_knots(len(self.coef)))
            else:
                object.__setattr__(self, "knots", np.asarray(self.knots, dtype=float))
            if len(self.knots) != len(self.coef):
                raise DomainError("spline coefficient count must match knot count")

    @property
    def n_coef(self) -> int:
        return self.coef.shape[0]

    def linear_predictor(self, cov: Covariates) -> np.ndarray:
        return build_design(cov, self.kind, self.knots) @ self.coef

    def predict(self, cov: Covariates) -> np.ndarray:
        return link_tau(self.linear_predictor(cov))


def constant_tau_model(tau: float) -> TauModel:
    return TauModel("constant", np.array([float(inverse_link_tau(tau))]))


def predict_tau(model: TauModel, cov: Covariates) -> np.ndarray:
    """tau_i = tanh((design row_i . coefficients) / 2)."""
    return model.predict(cov)
