"""D-vine copula quantile regression.

The response occupies the leaf position (index 0) of the first tree;
predictors are appended one at a time by greedy forward selection,
minimizing a BIC-corrected conditional log-likelihood on the copula scale.
The conditional CDF walks h-functions forward through the trees; the
conditional quantile walks the response edges backwards through inverse
h-functions and finishes with the response margin quantile.

Under the simplifying assumption the pair-copulas of conditional
distributions depend on exogenous covariates only (through their tau
models), never on the conditioned values themselves, although the
higher-tree arguments do propagate the conditioning.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .margins import MarginModel
from .pairfit import (DEFAULT_FAMILY_KINDS, LAMBDA_GRID, CopulaSpec, fit_pair)
from .taulink import DEFAULT_N_BASIS, Covariates

_PIT_CLIP = 1e-10


@dataclass
class DVineModel:
    """Fitted D-vine regression: margins, predictor order, pair-copula trees.

    ``trees[t-1][i]`` holds the copula of edge (i, i+t); tree t has
    k+1-t edges for k selected predictors.  Only the edges touching
    position 0 enter the conditional log-likelihood ``cll``, which is on
    the copula scale (the response marginal density is excluded: it is
    common to every candidate order, so selection is unaffected).
    """

    response_margin: MarginModel
    predictor_margins: list
    order: list
    names: list
    trees: list
    design_kind: str
    cll: float
    n_params: int
    bic: float
    n_train: int
    meta: dict = field(default_factory=dict)

    @property
    def n_predictors(self) -> int:
        return len(self.order)


def _pit(margin: MarginModel, values, cov: Covariates) -> np.ndarray:
    return np.clip(margin.cdf(np.asarray(values, dtype=float), cov),
                   _PIT_CLIP, 1.0 - _PIT_CLIP)


def fit_dvqr(y, x_mat, cov: Covariates, response_margin: MarginModel,
             predictor_margins, names=None, *, design_kind: str = "constant",
             family_kinds=DEFAULT_FAMILY_KINDS, max_predictors: int = 8,
             n_basis: int = DEFAULT_N_BASIS, lambda_grid=LAMBDA_GRID,
             meta: dict | None = None) -> DVineModel:
    """Greedy forward selection of predictors into a D-vine.

    Margins must already be fitted (inference for margins); ``x_mat`` is
    (n, p) with one column per candidate predictor, aligned with
    ``predictor_margins``.  At each step, appending a candidate requires
    one new pair-copula per tree; the candidate with the lowest model BIC
    is appended while that BIC strictly decreases.
    """
    y = np.asarray(y, dtype=float)
    x_mat = np.atleast_2d(np.asarray(x_mat, dtype=float))
    n, p = x_mat.shape
    if len(y) != n or len(cov) != n:
        raise DomainError("response, predictors and covariates must align")
    if len(predictor_margins) != p:
        raise DomainError("one margin per predictor column required")
    if names is None:
        names = [f"x{j}" for j in range(p)]

    v = _pit(response_margin, y, cov)
    u_cols = [_pit(predictor_margins[j], x_mat[:, j], cov) for j in range(p)]

    order: list[int] = []
    trees: list[list[CopulaSpec]] = []
    fa = [v]                       # fa[i] = F(var_i | vars at positions i+1..k)
    cll = 0.0
    n_params = 0
    bic = 0.0
    diagnostics = []
    remaining = list(range(p))

    while remaining and len(order) < max_predictors:
        best = None
        for j in remaining:
            try:
                cand = _evaluate_append(fa, u_cols[j], cov, design_kind,
                                        family_kinds, n_basis, lambda_grid)
            except (DomainError, FloatingPointError) as exc:
                diagnostics.append(f"candidate {names[j]} skipped: {exc}")
                continue
            new_edges, new_fa, resp_ll, resp_params = cand
            cand_bic = -2.0 * (cll + resp_ll) + (n_params + resp_params) * np.log(n)
            if best is None or cand_bic < best[0]:
                best = (cand_bic, j, new_edges, new_fa, resp_ll, resp_params)
        if best is None or best[0] >= bic:
            break
        bic, j, new_edges, new_fa, resp_ll, resp_params = best
        order.append(j)
        remaining.remove(j)
        cll += resp_ll
        n_params += resp_params
        for t, edge in enumerate(new_edges, start=1):
            if t > len(trees):
                trees.append([])
            trees[t - 1].append(edge)
        fa = new_fa

    model_meta = dict(meta or {})
    if diagnostics:
        model_meta["diagnostics"] = diagnostics
    return DVineModel(
        response_margin=response_margin,
        predictor_margins=[predictor_margins[j] for j in order],
        order=order, names=[names[j] for j in order], trees=trees,
        design_kind=design_kind, cll=float(cll), n_params=int(n_params),
        bic=float(bic), n_train=int(n), meta=model_meta)


def _evaluate_append(fa, u_new, cov, design_kind, family_kinds, n_basis, lambda_grid):
    """Fit the one-new-copula-per-tree column needed to append a variable.

    ``fa`` holds the forward conditionals of the current positions 0..k;
    the new variable lands at position k+1.  Returns the fitted edges
    (tree order 1..k+1), the updated forward conditionals, and the
    response edge's log-likelihood and parameter count.
    """
    m = len(fa)  # new position index
    bb = u_new
    edges = []
    new_fa = [None] * (m + 1)
    for t in range(1, m + 1):
        i = m - t
        spec = fit_pair(fa[i], bb, cov, kind=design_kind,
                        family_kinds=family_kinds, n_basis=n_basis,
                        lambda_grid=lambda_grid)
        edges.append(spec)
        a_next = np.clip(spec.h_of_left(fa[i], bb, cov), _PIT_CLIP, 1.0 - _PIT_CLIP)
        bb_next = np.clip(spec.h_of_right(bb, fa[i], cov), _PIT_CLIP, 1.0 - _PIT_CLIP)
        new_fa[i] = a_next
        bb = bb_next
    new_fa[m] = u_new
    resp_edge = edges[-1]
    return edges, new_fa, resp_edge.loglik, resp_edge.n_params


def _predictor_conditionals(model: DVineModel, u_mat, cov: Covariates):
    """cond[t-1] = F(u_t | u_1, ..., u_{t-1}) for the selected positions t=1..k."""
    k = model.n_predictors
    if k == 0:
        return []
    a_vals = {i: u_mat[:, i - 1] for i in range(1, k + 1)}
    b_vals = {i: u_mat[:, i - 1] for i in range(1, k + 1)}
    cond = [u_mat[:, 0]]
    for t in range(1, k):
        new_a, new_b = {}, {}
        for i in range(1, k - t + 1):
            cs = model.trees[t - 1][i]
            new_a[i] = np.clip(cs.h_of_left(a_vals[i], b_vals[i + t], cov),
                               _PIT_CLIP, 1.0 - _PIT_CLIP)
            new_b[i + t] = np.clip(cs.h_of_right(b_vals[i + t], a_vals[i], cov),
                                   _PIT_CLIP, 1.0 - _PIT_CLIP)
        a_vals.update(new_a)
        b_vals.update(new_b)
        cond.append(b_vals[t + 1])
    return cond


def _pit_matrix(model: DVineModel, x_mat, cov: Covariates) -> np.ndarray:
    x_mat = np.atleast_2d(np.asarray(x_mat, dtype=float))
    cols = [_pit(model.predictor_margins[pos], x_mat[:, j], cov)
            for pos, j in enumerate(model.order)]
    return np.column_stack(cols) if cols else np.empty((x_mat.shape[0], 0))


def conditional_cdf(model: DVineModel, x_mat, cov: Covariates, y):
    """F(y | x) by the forward h-function recursion through the trees."""
    y = np.asarray(y, dtype=float)
    w = _pit(model.response_margin, y, cov)
    if model.n_predictors == 0:
        return w
    u_mat = _pit_matrix(model, x_mat, cov)
    cond = _predictor_conditionals(model, u_mat, cov)
    for t in range(1, model.n_predictors + 1):
        cs = model.trees[t - 1][0]
        w = np.clip(cs.h_of_left(w, cond[t - 1], cov), _PIT_CLIP, 1.0 - _PIT_CLIP)
    return w


def predict_quantile(model: DVineModel, x_mat, cov: Covariates, alpha):
    """Conditional alpha-quantile via nested inverse h-functions.

    ``alpha`` may be a scalar or an array of levels; with an array the
    result has shape (n_rows, n_levels).
    """
    alphas = np.atleast_1d(np.asarray(alpha, dtype=float))
    if np.any((alphas <= 0.0) | (alphas >= 1.0)):
        raise DomainError("alpha must lie in (0, 1)")
    k = model.n_predictors
    if k > 0:
        u_mat = _pit_matrix(model, x_mat, cov)
        cond = _predictor_conditionals(model, u_mat, cov)
        n = u_mat.shape[0]
    else:
        n = len(cov)
    out = np.empty((n, alphas.size))
    for a_idx, a in enumerate(alphas):
        w = np.full(n, a)
        for t in range(k, 0, -1):
            cs = model.trees[t - 1][0]
            w = np.clip(cs.hinv_of_left(w, cond[t - 1], cov), _PIT_CLIP, 1.0 - _PIT_CLIP)
        out[:, a_idx] = model.response_margin.quantile(w, cov)
    return out[:, 0] if np.ndim(alpha) == 0 else out


def model_cll(model: DVineModel, y, x_mat, cov: Covariates) -> float:
    """Copula-scale conditional log-likelihood on (possibly new) data."""
    v = _pit(model.response_margin, np.asarray(y, dtype=float), cov)
    if model.n_predictors == 0:
        return 0.0
    u_mat = _pit_matrix(model, x_mat, cov)
    cond = _predictor_conditionals(model, u_mat, cov)
    total = 0.0
    w = v
    for t in range(1, model.n_predictors + 1):
        cs = model.trees[t - 1][0]
        total += float(np.sum(cs.logpdf(w, cond[t - 1], cov)))
        w = np.clip(cs.h_of_left(w, cond[t - 1], cov), _PIT_CLIP, 1.0 - _PIT_CLIP)
    return total
