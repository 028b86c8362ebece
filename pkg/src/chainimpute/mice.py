"""Multiple imputation by chained equations with pluggable regressors.

Each of the ``M`` chains starts from its own random fill and sweeps the
columns in ascending order ``N`` times.  For a column with missing cells it
fits the configured regressor on a bootstrap resample of the rows where the
column is observed.  The regressor sees every other column plus the optional
cluster features.  The missing cells are then redrawn with
:func:`~chainimpute.regressors.sample_prediction`.  The chains are averaged.

A fitted :class:`ImputationModel` keeps the final per-column models of every
chain.  :func:`transform` replays them on new data without noise or refitting.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .clustering import ClusterModel, InfusionMethod, assign_nearest, infusion_columns, kmeans
from .data import DataMatrix, StandardizationParams, destandardize, standardize_apply, standardize_fit
from .errors import BudgetError, ConfigurationError, ShapeError, VersionMismatchError
from .regressors import (
    ConstantModel,
    HyperParams,
    RegressorKind,
    fit_regressor,
    model_from_dict,
    sample_prediction,
)
from .regressors.base import population_std

FORMAT = "chainimpute-model"
FORMAT_VERSION = 1
INITIAL_FILLS = ("gaussian", "median")


@dataclass(frozen=True)
class MiceConfig:
    regressor: RegressorKind = RegressorKind.RIDGE
    hyper: HyperParams = field(default_factory=HyperParams)
    n_imputations: int = 5
    n_iterations: int = 10
    tol: float = 1e-3
    infusion: InfusionMethod | None = None
    n_clusters: int = 3
    initial_fill: str = "gaussian"
    bootstrap: bool = True
    max_fits: int | None = None
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "regressor", RegressorKind.parse(self.regressor))
        if self.infusion is not None:
            object.__setattr__(self, "infusion", InfusionMethod.parse(self.infusion))
        if isinstance(self.hyper, dict):
            object.__setattr__(self, "hyper", HyperParams.from_dict(self.hyper))
        if self.n_imputations < 1 or self.n_iterations < 1:
            raise ConfigurationError("n_imputations and n_iterations must be >= 1")
        if not self.tol >= 0:
            raise ConfigurationError(f"tol must be >= 0, got {self.tol}")
        if self.infusion is not None and self.n_clusters < 2:
            raise ConfigurationError("cluster infusion needs n_clusters >= 2")
        if self.initial_fill not in INITIAL_FILLS:
            raise ConfigurationError(f"initial_fill must be one of {INITIAL_FILLS}")
        if self.max_fits is not None and self.max_fits < 1:
            raise ConfigurationError("max_fits must be positive when set")

    def to_dict(self):
        return {
            "regressor": self.regressor.value,
            "hyper": self.hyper.to_dict(),
            "n_imputations": self.n_imputations,
            "n_iterations": self.n_iterations,
            "tol": self.tol if math.isfinite(self.tol) else "inf",
            "infusion": None if self.infusion is None else self.infusion.value,
            "n_clusters": self.n_clusters,
            "initial_fill": self.initial_fill,
            "bootstrap": self.bootstrap,
            "max_fits": self.max_fits,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d) -> "MiceConfig":
        d = dict(d)
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigurationError(f"unknown MICE settings {sorted(unknown)}")
        if d.get("tol") == "inf":
            d["tol"] = math.inf
        return cls(**d)


@dataclass(eq=False)
class ImputationModel:
    config: MiceConfig
    params: StandardizationParams
    chains: list                    # chains[c][j] is the model for column j
    visit_order: list
    column_names: tuple
    clusters: ClusterModel | None = None
    medians: np.ndarray | None = None   # standardized training medians, for cluster assignment
    traces: list = field(default_factory=list)

    @property
    def d(self) -> int:
        return self.params.d

    def to_dict(self):
        return {
            "format": FORMAT,
            "version": FORMAT_VERSION,
            "config": self.config.to_dict(),
            "standardization": self.params.to_dict(),
            "column_names": list(self.column_names),
            "visit_order": list(self.visit_order),
            "clusters": None if self.clusters is None else self.clusters.to_dict(),
            "medians": None if self.medians is None else self.medians.tolist(),
            "traces": self.traces,
            "chains": [[m.to_dict() for m in chain] for chain in self.chains],
        }

    @classmethod
    def from_dict(cls, d) -> "ImputationModel":
        if d.get("format") != FORMAT:
            raise VersionMismatchError("not a saved imputation model")
        if d.get("version") != FORMAT_VERSION:
            raise VersionMismatchError(
                f"model format version {d.get('version')} is not supported (expected {FORMAT_VERSION})")
        clusters = None if d["clusters"] is None else ClusterModel.from_dict(d["clusters"])
        return cls(
            config=MiceConfig.from_dict(d["config"]),
            params=StandardizationParams.from_dict(d["standardization"]),
            chains=[[model_from_dict(m) for m in chain] for chain in d["chains"]],
            visit_order=list(d["visit_order"]),
            column_names=tuple(d["column_names"]),
            clusters=clusters,
            medians=None if d["medians"] is None else np.array(d["medians"], dtype=np.float64),
            traces=d["traces"],
        )


def save_model(model: ImputationModel, path) -> None:
    Path(path).write_text(json.dumps(model.to_dict()), encoding="utf-8")


def load_model(path) -> ImputationModel:
    return ImputationModel.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _chain_rng(seed: int, chain: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(chain)]))


def _observed_medians(Z, mask):
    return np.array([np.median(Z[mask[:, j], j]) for j in range(Z.shape[1])])


def _median_filled(Z, mask, medians):
    out = Z.copy()
    r, c = np.nonzero(~mask)
    out[r, c] = medians[c]
    return out


def _predictors(Z, j, extra):
    others = np.delete(Z, j, axis=1)
    return others if extra is None else np.hstack([others, extra])


def _fit_column(cfg, X, y, rng):
    n = y.shape[0]
    if n < 2 or X.shape[1] == 0:
        return ConstantModel(float(y.mean()), X.shape[1], population_std(y))
    if cfg.bootstrap:
        idx = rng.integers(0, n, n)
        X, y = X[idx], y[idx]
    seed = int(rng.integers(2**63))
    if np.ptp(y) == 0.0:
        return ConstantModel(float(y[0]), X.shape[1])
    return fit_regressor(cfg.regressor, X, y, cfg.hyper, seed=seed)


def _initial_fill(Z, mask, cfg, rng, medians):
    if cfg.initial_fill == "median":
        return _median_filled(Z, mask, medians)
    out = Z.copy()
    for j in range(Z.shape[1]):
        miss = ~mask[:, j]
        if miss.any():
            col = Z[mask[:, j], j]
            out[miss, j] = rng.normal(col.mean(), col.std(), size=int(miss.sum()))
    return out


def _run_chain(Z, mask, cfg, extra, medians, chain):
    rng = _chain_rng(cfg.seed, chain)
    d = Z.shape[1]
    cur = _initial_fill(Z, mask, cfg, rng, medians)
    missing_cols = [j for j in range(d) if not mask[:, j].all()]
    models = [None] * d
    trace = []
    if missing_cols:
        miss = ~mask
        for _ in range(cfg.n_iterations):
            before = cur[miss]
            for j in missing_cols:
                obs = mask[:, j]
                X = _predictors(cur, j, extra)
                models[j] = _fit_column(cfg, X[obs], cur[obs, j], rng)
                cur[~obs, j] = sample_prediction(models[j], X[~obs], rng)
            change = float(np.mean(np.abs(cur[miss] - before)))
            trace.append(change)
            if change <= cfg.tol:
                break
    for j in range(d):
        if models[j] is None:
            # fully observed in training; still needed when test rows lack it
            X = _predictors(cur, j, extra)
            y = cur[:, j]
            if X.shape[1] == 0 or np.ptp(y) == 0.0:
                models[j] = ConstantModel(float(y.mean()), X.shape[1])
            else:
                models[j] = fit_regressor(cfg.regressor, X, y, cfg.hyper, seed=int(rng.integers(2**63)))
    return cur, models, trace


def _map(fn, items, jobs):
    if jobs is None or jobs <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _finish(data: DataMatrix, Zbar, params) -> DataMatrix:
    imputed = destandardize(DataMatrix(Zbar, np.ones_like(data.mask), data.column_names), params)
    out = np.where(data.mask, data.values, imputed.values)
    return DataMatrix(out, np.ones_like(data.mask), data.column_names)


def fit_transform(train: DataMatrix, cfg: MiceConfig | None = None, *, jobs: int = 1):
    """Fit the chains on ``train`` and return ``(model, imputed train)``.

    Observed cells of the result are the input cells, unchanged.  ``jobs``
    runs chains on threads and never changes the result.
    """
    cfg = cfg or MiceConfig()
    d = train.d
    fits = cfg.n_imputations * cfg.n_iterations * d
    if cfg.max_fits is not None and fits > cfg.max_fits:
        raise BudgetError(f"{fits} regressor fits requested, cap is {cfg.max_fits}")
    params = standardize_fit(train)
    Z = standardize_apply(train, params).values.copy()
    mask = np.array(train.mask)
    medians = _observed_medians(Z, mask)

    clusters = extra = None
    if cfg.infusion is not None:
        if cfg.n_clusters > train.n:
            raise ConfigurationError(f"n_clusters={cfg.n_clusters} exceeds {train.n} training rows")
        clusters = kmeans(_median_filled(Z, mask, medians), cfg.n_clusters, seed=cfg.seed)
        extra = infusion_columns(clusters.assignments, cfg.infusion, clusters.centroids)

    runs = _map(lambda c: _run_chain(Z, mask, cfg, extra, medians, c), range(cfg.n_imputations), jobs)
    Zbar = np.mean([r[0] for r in runs], axis=0)
    model = ImputationModel(
        config=cfg,
        params=params,
        chains=[r[1] for r in runs],
        visit_order=list(range(d)),
        column_names=train.column_names,
        clusters=clusters,
        medians=medians,
        traces=[r[2] for r in runs],
    )
    if train.is_complete():
        return model, train
    return model, _finish(train, Zbar, params)


def _replay_chain(models, Z, mask, order, tol, n_iterations, extra):
    cur = Z.copy()
    cols = [j for j in order if not mask[:, j].all()]
    miss = ~mask
    for _ in range(n_iterations):
        before = cur[miss]
        for j in cols:
            rows = ~mask[:, j]
            cur[rows, j] = models[j].predict(_predictors(cur[rows], j, None if extra is None else extra[rows]))
        if float(np.mean(np.abs(cur[miss] - before))) <= tol:
            break
    return cur


def transform(model: ImputationModel, test: DataMatrix, *, jobs: int = 1) -> DataMatrix:
    """Impute unseen rows with the frozen chains; deterministic."""
    if test.d != model.d:
        raise ShapeError(f"test data has {test.d} columns, model was trained on {model.d}")
    if test.is_complete():
        return test
    Z = standardize_apply(test, model.params).values
    mask = np.array(test.mask)
    extra = None
    if model.clusters is not None:
        labels = assign_nearest(_median_filled(Z, mask, model.medians), model.clusters.centroids)
        extra = infusion_columns(labels, model.config.infusion, model.clusters.centroids)
    start = np.where(mask, Z, 0.0)   # training means in standardized space
    cfg = model.config
    outs = _map(
        lambda chain: _replay_chain(chain, start, mask, model.visit_order, cfg.tol, cfg.n_iterations, extra),
        model.chains, jobs,
    )
    return _finish(test, np.mean(outs, axis=0), model.params)


def convergence_trace(model: ImputationModel) -> list:
    """Per-chain series of mean absolute change of the imputed cells per sweep."""
    return [list(t) for t in model.traces]
