"""Run configuration: flat key=value files with CLI overrides."""

import hashlib
from dataclasses import dataclass, fields

from .errors import DomainError

# first ten weather variables whose ensemble mean/sd form the extended set
EXTENDED_VARIABLES = ("t2m", "d2m", "pr", "sr", "u10m", "v10m", "r2m", "tcc",
                      "ws10m", "wg10m")


@dataclass
class RunConfig:
    variable_set: str = "reduced"          # reduced | extended
    family_set: str = "gaussian,studentt,clayton,gumbel,frank"
    margin_set: str = "auto"               # auto | A | B | C
    max_predictors: int = 8
    n_spline_basis: int = 8
    train_start: str = ""
    train_end: str = ""
    test_start: str = ""
    test_end: str = ""
    window_n: int = 25
    window_years: int = 4
    dvqr_rolling: bool = False
    crps_k: int = 100
    ensemble_members: int = 50
    emos_loss: str = "crps"
    emos_max_iter: int = 5000
    emos_gb_loss: str = "logs"
    emos_gb_max_iter: int = 500
    emos_gb_step: float = 0.05
    emos_gb_stop: str = "aic"
    seed: int = 1
    workers: int = 1
    alpha_list: str = "auto"

    def __post_init__(self):
        if self.variable_set not in ("reduced", "extended"):
            raise DomainError("variable_set must be 'reduced' or 'extended'")
        if self.margin_set not in ("auto", "A", "B", "C"):
            raise DomainError("margin_set must be auto, A, B or C")
        if self.emos_loss not in ("crps", "logs") or self.emos_gb_loss not in ("crps", "logs"):
            raise DomainError("losses must be 'crps' or 'logs'")
        if self.emos_gb_stop not in ("aic", "bic"):
            raise DomainError("emos_gb_stop must be 'aic' or 'bic'")
        if self.max_predictors < 1 or self.crps_k < 2:
            raise DomainError("max_predictors >= 1 and crps_k >= 2 required")

    @property
    def families(self) -> tuple:
        return tuple(s.strip() for s in self.family_set.split(",") if s.strip())

    def canonical(self) -> str:
        return "\n".join(f"{f.name}={getattr(self, f.name)}" for f in fields(self))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]


_BOOL_TRUE = ("1", "true", "yes", "on")
_BOOL_FALSE = ("0", "false", "no", "off")


def _coerce(name: str, raw: str, target_type):
    raw = raw.strip()
    if target_type is bool:
        if raw.lower() in _BOOL_TRUE:
            return True
        if raw.lower() in _BOOL_FALSE:
            return False
        raise DomainError(f"config key {name}: cannot parse boolean {raw!r}")
    try:
        return target_type(raw)
    except ValueError as exc:
        raise DomainError(f"config key {name}: {exc}") from exc


def load_config(path=None, overrides=None) -> RunConfig:
    """Build a RunConfig from a key=value file plus override pairs."""
    values = {}
    known = {f.name: f.type for f in fields(RunConfig)}
    types = {f.name: type(getattr(RunConfig(), f.name)) for f in fields(RunConfig)}
    if path is not None:
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise DomainError(f"{path}:{lineno}: expected key=value")
                key, raw = line.split("=", 1)
                key = key.strip()
                if key not in known:
                    raise DomainError(f"{path}:{lineno}: unknown config key {key!r}")
                values[key] = _coerce(key, raw, types[key])
    for key, raw in (overrides or {}).items():
        if key not in known:
            raise DomainError(f"unknown config key {key!r}")
        values[key] = _coerce(key, str(raw), types[key])
    return RunConfig(**values)
