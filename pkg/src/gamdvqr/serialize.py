"""JSON persistence for fitted models.

Floats are written with Python's shortest-roundtrip repr, so a model loads
back bit-exactly; arrays become plain lists.  Each file carries an
envelope naming the model kind plus free-form metadata.
"""

import json

import numpy as np

from . import families as fam
from .dvine import DVineModel
from .emos import EmosModel
from .errors import DomainError
from .margins import MarginModel
from .pairfit import CopulaSpec
from .taulink import TauModel


def _arr(x):
    return None if x is None else np.asarray(x, dtype=float).tolist()


def _family_dict(f: fam.CopulaFamily):
    return {"kind": f.kind, "rotation": f.rotation, "df": f.df}


def _family_load(d):
    return fam.CopulaFamily(d["kind"], d["rotation"], d["df"])


def _tau_model_dict(m: TauModel):
    return {"kind": m.kind, "coef": _arr(m.coef), "knots": _arr(m.knots),
            "penalty": m.penalty}


def _tau_model_load(d):
    knots = None if d["knots"] is None else np.asarray(d["knots"])
    return TauModel(d["kind"], np.asarray(d["coef"]), knots=knots, penalty=d["penalty"])


def _spec_dict(s: CopulaSpec):
    return {"family": _family_dict(s.family), "tau_model": _tau_model_dict(s.tau_model),
            "loglik": s.loglik, "n_params": s.n_params, "bic": s.bic, "flag": s.flag}


def _spec_load(d):
    return CopulaSpec(_family_load(d["family"]), _tau_model_load(d["tau_model"]),
                      loglik=d["loglik"], n_params=d["n_params"], bic=d["bic"],
                      flag=d["flag"])


def _margin_dict(m: MarginModel):
    return {
        "kind": m.kind, "family": m.family, "transform": m.transform,
        "a": _arr(m.a), "b": _arr(m.b), "shape": dict(m.shape),
        "samples": _arr(m.samples), "bandwidth": m.bandwidth,
        "loglik": m.loglik, "bic": m.bic, "n_params": m.n_params,
        "n_train": m.n_train,
    }


def _margin_load(d):
    return MarginModel(
        kind=d["kind"], family=d["family"], transform=d["transform"],
        a=None if d["a"] is None else np.asarray(d["a"]),
        b=None if d["b"] is None else np.asarray(d["b"]),
        shape=dict(d["shape"]),
        samples=None if d["samples"] is None else np.asarray(d["samples"]),
        bandwidth=d["bandwidth"], loglik=d["loglik"], bic=d["bic"],
        n_params=d["n_params"], n_train=d["n_train"])


def dvine_to_dict(model: DVineModel) -> dict:
    return {
        "response_margin": _margin_dict(model.response_margin),
        "predictor_margins": [_margin_dict(m) for m in model.predictor_margins],
        "order": list(model.order), "names": list(model.names),
        "trees": [[_spec_dict(s) for s in tree] for tree in model.trees],
        "design_kind": model.design_kind, "cll": model.cll,
        "n_params": model.n_params, "bic": model.bic,
        "n_train": model.n_train, "meta": model.meta,
    }


def dvine_from_dict(d: dict) -> DVineModel:
    return DVineModel(
        response_margin=_margin_load(d["response_margin"]),
        predictor_margins=[_margin_load(m) for m in d["predictor_margins"]],
        order=list(d["order"]), names=list(d["names"]),
        trees=[[_spec_load(s) for s in tree] for tree in d["trees"]],
        design_kind=d["design_kind"], cll=d["cll"], n_params=d["n_params"],
        bic=d["bic"], n_train=d["n_train"], meta=d.get("meta", {}))


def emos_to_dict(model: EmosModel) -> dict:
    return {
        "kind": model.kind, "mu_coef": _arr(model.mu_coef),
        "sigma_coef": _arr(model.sigma_coef), "names": list(model.names),
        "loss": model.loss, "standardization": _arr(model.standardization),
        "converged": model.converged, "n_iter": model.n_iter,
        "update_path": [list(u) for u in model.update_path], "meta": model.meta,
    }


def emos_from_dict(d: dict) -> EmosModel:
    return EmosModel(
        kind=d["kind"], mu_coef=np.asarray(d["mu_coef"]),
        sigma_coef=np.asarray(d["sigma_coef"]), names=list(d["names"]),
        loss=d["loss"], standardization=np.asarray(d["standardization"]),
        converged=d["converged"], n_iter=d["n_iter"],
        update_path=[tuple(u) for u in d["update_path"]], meta=d.get("meta", {}))


def save_model(model, path, meta: dict | None = None):
    if isinstance(model, DVineModel):
        payload = dvine_to_dict(model)
        kind = "dvine"
    elif isinstance(model, EmosModel):
        payload = emos_to_dict(model)
        kind = "emos"
    else:
        raise DomainError(f"cannot serialize {type(model).__name__}")
    doc = {"model_kind": kind, "meta": meta or {}, "payload": payload}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)


def load_model(path):
    with open(path) as fh:
        doc = json.load(fh)
    kind = doc.get("model_kind")
    if kind == "dvine":
        return dvine_from_dict(doc["payload"]), doc.get("meta", {})
    if kind == "emos":
        return emos_from_dict(doc["payload"]), doc.get("meta", {})
    raise DomainError(f"unknown model kind {kind!r} in {path}")
