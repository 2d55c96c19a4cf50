"""Command-line interface: ingest, simulate, train, predict, verify, contour."""

import argparse
import json
import os
import sys

import numpy as np

from .config import load_config
from .data import derive_variables, ingest_csv
from .errors import DomainError, FitError
from .pipeline import METHODS, run_predict, run_simulate, run_train, run_verify
from .scores import contour_grid
from .serialize import load_model
from .simulate import SCENARIOS
from .taulink import Covariates


def _add_config_args(p):
    p.add_argument("--config", default=None, help="key=value config file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config key (repeatable)")


def _parse_overrides(pairs):
    out = {}
    for item in pairs:
        if "=" not in item:
            raise DomainError(f"--set expects KEY=VALUE, got {item!r}")
        key, val = item.split("=", 1)
        out[key.strip()] = val.strip()
    return out


def _config_from(args, extra=None):
    overrides = _parse_overrides(args.set)
    overrides.update(extra or {})
    return load_config(args.config, overrides)


def _alpha_list(raw):
    if raw is None or raw == "auto":
        return None
    return [float(x) for x in raw.split(",") if x.strip()]


def build_parser():
    p = argparse.ArgumentParser(prog="gamdvqr",
                                description="D-vine copula quantile regression for "
                                            "ensemble forecast postprocessing")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("ingest", help="validate a forecast CSV and write it normalized")
    s.add_argument("--input", required=True)
    s.add_argument("--out-dir", required=True)
    s.add_argument("--derive", action="store_true",
                   help="add wind speed / relative humidity / seasonal columns")

    s = sub.add_parser("simulate", help="write a synthetic scenario dataset")
    s.add_argument("--scenario", required=True, choices=SCENARIOS)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out-dir", required=True)
    s.add_argument("--tau-profile", default="linear", choices=("linear", "spline"),
                   help="annual tau shape for the time-varying-tau scenario")

    s = sub.add_parser("train", help="fit per-station models")
    s.add_argument("--data", required=True)
    s.add_argument("--method", action="append", required=True, choices=METHODS,
                   dest="methods")
    s.add_argument("--stations", default=None, help="comma-separated station ids")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--out-dir", required=True)
    _add_config_args(s)

    s = sub.add_parser("predict", help="emit quantile forecasts from saved models")
    s.add_argument("--models", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--train-data", default=None,
                   help="training CSV, needed for rolling DVQR prediction")
    s.add_argument("--alpha-list", default="auto")
    s.add_argument("--method", action="append", default=None, choices=METHODS,
                   dest="methods")
    s.add_argument("--stations", default=None)
    s.add_argument("--out-dir", required=True)
    _add_config_args(s)

    s = sub.add_parser("verify", help="score predictions against observations")
    s.add_argument("--predictions", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--models", default=None,
                   help="model dir; enables closed-form CRPS for Gaussian methods")
    s.add_argument("--reference", default=None, help="method name for CRPSS")
    s.add_argument("--alpha", type=float, default=0.05, help="BH level")
    s.add_argument("--out-dir", required=True)

    s = sub.add_parser("contour", help="normalized contour density of a fitted pair-copula")
    s.add_argument("--model", required=True)
    s.add_argument("--tree", type=int, default=1)
    s.add_argument("--edge", type=int, default=0)
    s.add_argument("--doy", type=float, default=1.0)
    s.add_argument("--grid-n", type=int, default=100)
    s.add_argument("--out", required=True)
    return p


def cmd_ingest(args):
    ds = ingest_csv(args.input)
    if args.derive:
        ds = derive_variables(ds)
    os.makedirs(args.out_dir, exist_ok=True)
    out = ds.frame.copy()
    out["date"] = out["date"].dt.strftime("%Y-%m-%d")
    out.to_csv(os.path.join(args.out_dir, "dataset.csv"), index=False)
    with open(os.path.join(args.out_dir, "ingest_report.json"), "w") as fh:
        json.dump(ds.report, fh, indent=1)
    print(json.dumps(ds.report, indent=1))


def cmd_simulate(args):
    kwargs = {}
    if args.scenario == "time-varying-tau":
        kwargs["profile"] = args.tau_profile
    path = run_simulate(args.scenario, args.seed, args.out_dir, **kwargs)
    print(path)


def cmd_train(args):
    extra = {"workers": str(args.workers)}
    if args.seed is not None:
        extra["seed"] = str(args.seed)
    config = _config_from(args, extra)
    ds = ingest_csv(args.data)
    stations = args.stations.split(",") if args.stations else None
    doc = run_train(ds, config, args.methods, args.out_dir, stations=stations,
                    workers=config.workers)
    print(f"trained {len(doc['models'])} models, skipped {len(doc['skipped'])}")
    for item in doc["skipped"]:
        print(f"  skipped {item['method']}@{item['station']}: {item['reason']}",
              file=sys.stderr)


def cmd_predict(args):
    config = _config_from(args)
    ds = ingest_csv(args.data)
    train_ds = ingest_csv(args.train_data) if args.train_data else None
    stations = args.stations.split(",") if args.stations else None
    raw_alphas = args.alpha_list if args.alpha_list != "auto" else config.alpha_list
    path = run_predict(args.models, ds, args.out_dir,
                       alphas=_alpha_list(raw_alphas), methods=args.methods,
                       stations=stations, config=config, train_dataset=train_ds)
    print(path)


def cmd_verify(args):
    ds = ingest_csv(args.data)
    summary = run_verify(args.predictions, ds, args.out_dir,
                         reference=args.reference, models_dir=args.models,
                         alpha=args.alpha)
    print(json.dumps(summary, indent=1))


def cmd_contour(args):
    model, _ = load_model(args.model)
    if not hasattr(model, "trees"):
        raise DomainError("contour needs a vine model")
    if args.tree < 1 or args.tree > len(model.trees) \
            or args.edge >= len(model.trees[args.tree - 1]):
        raise DomainError("no such tree/edge in this model")
    spec = model.trees[args.tree - 1][args.edge]
    z, mat = contour_grid(spec, Covariates(np.array([args.doy])), grid_n=args.grid_n)
    header = "z," + ",".join(f"{v:.6f}" for v in z)
    lines = [header]
    for i, zi in enumerate(z):
        lines.append(f"{zi:.6f}," + ",".join(f"{x:.10e}" for x in mat[i]))
    with open(args.out, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    print(args.out)


_COMMANDS = {
    "ingest": cmd_ingest, "simulate": cmd_simulate, "train": cmd_train,
    "predict": cmd_predict, "verify": cmd_verify, "contour": cmd_contour,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        _COMMANDS[args.command](args)
    except (DomainError, FitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
