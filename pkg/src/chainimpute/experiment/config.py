"""JSON experiment configuration.  Validated completely before any compute."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..amputation import MissingKind
from ..baselines import BASELINE_NAMES, parse_baseline
from ..clustering import InfusionMethod
from ..errors import ConfigurationError
from ..evaluation import RATE_GRID
from ..mice import MiceConfig
from ..regressors import RegressorKind
from .registry import REGISTRY

SCHEMA_VERSION = 1

_PREFIX = {"LR": RegressorKind.RIDGE, "DT": RegressorKind.DECISION_TREE, "RF": RegressorKind.RANDOM_FOREST,
           "GB": RegressorKind.GRADIENT_BOOSTING, "DR": RegressorKind.DEEP}
_PREFIX_OF = {v: k for k, v in _PREFIX.items()}


def mice_name(cfg: MiceConfig) -> str:
    name = f"{_PREFIX_OF[cfg.regressor]}-MICE"
    return name if cfg.infusion is None else f"{name}+{cfg.infusion.value.upper()}"


@dataclass(frozen=True)
class ModelSpec:
    name: str
    baseline: object = None
    mice: MiceConfig | None = None

    @property
    def is_mice(self) -> bool:
        return self.mice is not None

    def resolved(self) -> dict:
        if self.is_mice:
            d = self.mice.to_dict()
            d.pop("seed")
            return {"name": self.name, "mice": d}
        return {"name": self.name, "baseline": self.baseline.to_dict()}


def parse_model(spec) -> ModelSpec:
    """Accepts ``"knn"``, ``"GB-MICE+MCMV"`` or a dict with ``baseline`` or ``mice``."""
    if isinstance(spec, str):
        if spec.lower() in BASELINE_NAMES:
            return ModelSpec(spec.lower(), baseline=parse_baseline(spec))
        head, _, infusion = spec.partition("+")
        prefix, _, tail = head.upper().partition("-")
        if tail != "MICE" or prefix not in _PREFIX:
            raise ConfigurationError(f"unknown model {spec!r}")
        cfg = MiceConfig(regressor=_PREFIX[prefix], infusion=InfusionMethod.parse(infusion) if infusion else None)
        return ModelSpec(mice_name(cfg), mice=cfg)
    if not isinstance(spec, dict):
        raise ConfigurationError(f"model entry must be a string or an object, got {spec!r}")
    unknown = set(spec) - {"name", "baseline", "mice"}
    if unknown or ("baseline" in spec) == ("mice" in spec):
        raise ConfigurationError(f"model entry needs exactly one of 'baseline' or 'mice': {spec!r}")
    if "baseline" in spec:
        base = parse_baseline(spec["baseline"])
        return ModelSpec(spec.get("name", base.name), baseline=base)
    body = dict(spec["mice"])
    if "seed" in body:
        raise ConfigurationError("MICE seeds are derived from the master seed; remove 'seed'")
    cfg = MiceConfig.from_dict(body)
    return ModelSpec(spec.get("name", mice_name(cfg)), mice=cfg)


@dataclass(frozen=True)
class DatasetSpec:
    name: str
    path: str | None = None
    target: str | int | None = None
    delimiter: str = ","
    header: bool = True
    drop_columns: tuple = ()
    na_tokens: tuple = ("", "NA")

    def to_dict(self):
        if self.path is None:
            return {"name": self.name}
        return {"name": self.name, "path": self.path, "target": self.target, "delimiter": self.delimiter,
                "header": self.header, "drop_columns": list(self.drop_columns), "na_tokens": list(self.na_tokens)}


def parse_dataset(spec) -> DatasetSpec:
    if isinstance(spec, str):
        if spec not in REGISTRY:
            raise ConfigurationError(f"unknown dataset {spec!r}; known: {sorted(REGISTRY)} (or give a path)")
        return DatasetSpec(spec)
    if not isinstance(spec, dict) or "path" not in spec:
        raise ConfigurationError("dataset must be a registry name or an object with 'path'")
    allowed = {"name", "path", "target", "delimiter", "header", "drop_columns", "na_tokens"}
    unknown = set(spec) - allowed
    if unknown:
        raise ConfigurationError(f"unknown dataset keys {sorted(unknown)}")
    d = dict(spec)
    d.setdefault("name", Path(d["path"]).stem)
    d["drop_columns"] = tuple(d.get("drop_columns", ()))
    d["na_tokens"] = tuple(d.get("na_tokens", ("", "NA")))
    return DatasetSpec(**d)


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: DatasetSpec
    models: tuple
    kinds: tuple = ("mcar", "mar", "mnar")
    rates: tuple = RATE_GRID
    train_fraction: float = 0.7
    seed: int = 0
    out: str = "results"
    data_dir: str | None = None
    classify: bool = False
    cv_grid: dict = field(default_factory=lambda: {"n_trees": [50, 100], "max_depth": [6, 12]})
    cv_outer: int = 10
    cv_inner: int = 2
    max_fits_per_cell: int | None = None
    max_seconds: float | None = None

    def to_dict(self) -> dict:
        """Fully resolved form; embedded in every manifest and report."""
        return {
            "schema_version": SCHEMA_VERSION,
            "dataset": self.dataset.to_dict(),
            "models": [m.resolved() for m in self.models],
            "kinds": list(self.kinds),
            "rates": list(self.rates),
            "split": {"train_fraction": self.train_fraction},
            "seed": self.seed,
            "out": self.out,
            "data_dir": self.data_dir,
            "classify": {"enabled": self.classify, "grid": self.cv_grid,
                         "n_outer": self.cv_outer, "n_inner": self.cv_inner},
            "budget": {"max_fits_per_cell": self.max_fits_per_cell, "max_seconds": self.max_seconds},
        }


_TOP_KEYS = {"schema_version", "dataset", "models", "kinds", "rates", "split", "seed", "out",
             "data_dir", "classify", "budget"}


def _sub(d, key, allowed):
    v = d.get(key, {})
    if not isinstance(v, dict):
        raise ConfigurationError(f"'{key}' must be an object")
    unknown = set(v) - allowed
    if unknown:
        raise ConfigurationError(f"unknown keys in '{key}': {sorted(unknown)}")
    return v


def parse_config(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigurationError("config must be a JSON object")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigurationError(f"unknown config keys {sorted(unknown)}")
    if raw.get("schema_version") != SCHEMA_VERSION:
        raise ConfigurationError(f"schema_version must be {SCHEMA_VERSION}, got {raw.get('schema_version')!r}")
    if "dataset" not in raw or "models" not in raw:
        raise ConfigurationError("config needs 'dataset' and 'models'")
    models = tuple(parse_model(m) for m in raw["models"])
    if not models:
        raise ConfigurationError("'models' is empty")
    names = [m.name for m in models]
    if len(set(names)) != len(names):
        raise ConfigurationError(f"duplicate model names in {names}")
    kinds = tuple(MissingKind.parse(k).value for k in raw.get("kinds", ("mcar", "mar", "mnar")))
    rates = tuple(int(r) for r in raw.get("rates", RATE_GRID))
    bad = [r for r in rates if r not in RATE_GRID]
    if bad or not rates or not kinds:
        raise ConfigurationError(f"rates must be a non-empty subset of {RATE_GRID} (percent), got {list(rates)}")
    split = _sub(raw, "split", {"train_fraction"})
    cls = raw.get("classify", False)
    if isinstance(cls, bool):
        cls = {"enabled": cls}
    elif not isinstance(cls, dict):
        raise ConfigurationError("'classify' must be a boolean or an object")
    unknown = set(cls) - {"enabled", "grid", "n_outer", "n_inner"}
    if unknown:
        raise ConfigurationError(f"unknown keys in 'classify': {sorted(unknown)}")
    budget = _sub(raw, "budget", {"max_fits_per_cell", "max_seconds"})
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or seed < 0 or seed >= 2**64:
        raise ConfigurationError("seed must be an unsigned 64-bit integer")
    tf = float(split.get("train_fraction", 0.7))
    if not 0.0 < tf < 1.0:
        raise ConfigurationError(f"train_fraction must lie in (0, 1), got {tf}")
    return ExperimentConfig(
        dataset=parse_dataset(raw["dataset"]),
        models=models,
        kinds=kinds,
        rates=rates,
        train_fraction=tf,
        seed=seed,
        out=str(raw.get("out", "results")),
        data_dir=raw.get("data_dir"),
        classify=bool(cls.get("enabled", True)),
        cv_grid=cls.get("grid", {"n_trees": [50, 100], "max_depth": [6, 12]}),
        cv_outer=int(cls.get("n_outer", 10)),
        cv_inner=int(cls.get("n_inner", 2)),
        max_fits_per_cell=budget.get("max_fits_per_cell"),
        max_seconds=budget.get("max_seconds"),
    )


def load_config(path) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON ({exc})") from None
    return parse_config(raw)
