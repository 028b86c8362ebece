import numpy as np
import pytest
from _helpers import correlated_matrix

from chainimpute.amputation import MissingnessSpec, amputate
from chainimpute.data import DataMatrix, standardize_apply, standardize_fit
from chainimpute.errors import (
    BudgetError,
    ConfigurationError,
    ShapeError,
    UnimputableColumnError,
    VersionMismatchError,
)
from chainimpute.evaluation import score_imputation
from chainimpute.mice import (
    ImputationModel,
    MiceConfig,
    _finish,
    _observed_medians,
    _run_chain,
    convergence_trace,
    fit_transform,
    load_model,
    save_model,
    transform,
)
from chainimpute.regressors import HyperParams

FAST = HyperParams(forest_n_trees=5, gb_n_stages=10, mlp_epochs=3)


def ridge(**kw):
    kw.setdefault("n_imputations", 3)
    kw.setdefault("n_iterations", 4)
    return MiceConfig(regressor="ridge", **kw)


@pytest.fixture(scope="module")
def holey():
    full = correlated_matrix(120, 5, seed=3)
    return full, amputate(full, MissingnessSpec("mcar", 0.2, 1))


def test_complete_input_passes_through():
    data = correlated_matrix(30, 3)
    model, out = fit_transform(data, ridge())
    assert out is data
    assert len(model.chains) == 3 and all(m is not None for m in model.chains[0])
    assert convergence_trace(model) == [[], [], []]


def test_exact_linear_relation():
    g = np.random.default_rng(0)
    x1 = g.normal(size=200)
    X = np.column_stack([x1, 2 * x1])
    mask = np.ones_like(X, bool)
    mask[g.choice(200, 20, replace=False), 1] = False
    # lambda near zero: shrinkage bias would otherwise grow with |x1|
    model, out = fit_transform(DataMatrix(X, mask), ridge(hyper=HyperParams(ridge_lambda=1e-6)))
    miss = ~mask[:, 1]
    # residual scale back on the original scale of x2
    worst = max(m[1].residual_std for m in model.chains) * model.params.stds[1]
    assert np.all(np.abs(out.values[miss, 1] - 2 * x1[miss]) <= 3 * worst + 1e-9)


@pytest.mark.parametrize("kind", ["ridge", "tree", "forest", "gb", "mlp"])
def test_observed_cells_preserved(kind, holey):
    _, data = holey
    cfg = MiceConfig(regressor=kind, hyper=FAST, n_imputations=2, n_iterations=2)
    model, out = fit_transform(data, cfg)
    assert np.array_equal(out.values[data.mask], data.values[data.mask])
    assert out.is_complete() and out.d == data.d
    test_out = transform(model, data)
    assert np.array_equal(test_out.values[data.mask], data.values[data.mask])


def test_single_chain_identity(holey):
    _, data = holey
    cfg = ridge(n_imputations=1)
    _, out = fit_transform(data, cfg)
    p = standardize_fit(data)
    Z = standardize_apply(data, p).values.copy()
    mask = np.array(data.mask)
    cur, _, _ = _run_chain(Z, mask, cfg, None, _observed_medians(Z, mask), 0)
    assert np.array_equal(out.values, _finish(data, cur, p).values)


def test_chain_permutation(holey):
    _, data = holey
    model, _ = fit_transform(data, ridge(n_imputations=4))
    a = transform(model, data)
    model.chains = model.chains[::-1]
    b = transform(model, data)
    assert np.allclose(a.values, b.values, atol=1e-12)


def test_jobs_and_seed_determinism(holey):
    _, data = holey
    a = fit_transform(data, ridge(seed=5))[1]
    b = fit_transform(data, ridge(seed=5), jobs=3)[1]
    c = fit_transform(data, ridge(seed=6))[1]
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)


@pytest.mark.parametrize("method", ["label", "binary", "mcmv"])
def test_infusion_stripped(method, holey):
    _, data = holey
    model, out = fit_transform(data, ridge(infusion=method, n_clusters=3))
    assert out.d == data.d
    assert transform(model, data).d == data.d
    assert model.clusters.centroids.shape == (3, data.d)


def test_large_lambda_pulls_to_means(holey):
    _, data = holey
    miss = ~data.mask
    means = np.nanmean(np.where(data.mask, data.values, np.nan), axis=0)
    devs = []
    for lam in (1.0, 1e2, 1e6):
        cfg = ridge(hyper=HyperParams(ridge_lambda=lam), bootstrap=False)
        model, _ = fit_transform(data, cfg)
        out = transform(model, data).values
        devs.append(np.mean(np.abs(out - means)[miss]))
    assert devs[0] > devs[1] > devs[2]


def test_trace_inf_tol_stops_at_once(holey):
    _, data = holey
    model, _ = fit_transform(data, ridge(tol=float("inf")))
    assert [len(t) for t in convergence_trace(model)] == [1, 1, 1]


def test_trace_length_bounded(holey):
    _, data = holey
    model, _ = fit_transform(data, ridge(n_iterations=6))
    assert all(1 <= len(t) <= 6 for t in convergence_trace(model))


def _ridge_traces():
    for seed in range(20):
        data = amputate(correlated_matrix(150, 5, seed=seed), MissingnessSpec("mcar", 0.2, seed))
        cfg = MiceConfig(regressor="ridge", n_imputations=1, n_iterations=6, tol=0.0, seed=seed)
        yield convergence_trace(fit_transform(data, cfg)[0])[0]


def test_trace_stays_below_second_sweep():
    good = sum(all(x <= t[1] for x in t[2:]) for t in _ridge_traces())
    assert good >= 16


@pytest.mark.xfail(strict=True, reason="draw noise leaves the change metric on a fluctuating floor")
def test_trace_strictly_non_increasing_after_second_sweep():
    good = sum(all(b <= a for a, b in zip(t[1:], t[2:])) for t in _ridge_traces())
    assert good >= 16


def test_save_load_round_trip(tmp_path, holey):
    _, data = holey
    model, _ = fit_transform(data, MiceConfig(regressor="gb", hyper=FAST, n_imputations=2,
                                              n_iterations=2, infusion="mcmv"))
    save_model(model, tmp_path / "m.json")
    back = load_model(tmp_path / "m.json")
    assert np.array_equal(transform(back, data).values, transform(model, data).values)


def test_version_mismatch(holey):
    _, data = holey
    d = fit_transform(data, ridge(n_iterations=1))[0].to_dict()
    with pytest.raises(VersionMismatchError):
        ImputationModel.from_dict({**d, "version": 99})
    with pytest.raises(VersionMismatchError):
        ImputationModel.from_dict({"hello": 1})


def test_budget(holey):
    _, data = holey
    with pytest.raises(BudgetError):
        fit_transform(data, ridge(max_fits=10))


def test_fully_missing_column():
    X = np.array([[1.0, np.nan], [2.0, np.nan], [3.0, np.nan]])
    with pytest.raises(UnimputableColumnError):
        fit_transform(DataMatrix.from_array(X), ridge())


def test_transform_shape_check(holey):
    _, data = holey
    model, _ = fit_transform(data, ridge(n_iterations=1))
    with pytest.raises(ShapeError):
        transform(model, DataMatrix.from_array(np.ones((3, 2))))


def test_transform_determinism_and_passthrough(holey):
    full, data = holey
    model, _ = fit_transform(data, ridge())
    assert transform(model, full) is full
    assert np.array_equal(transform(model, data).values, transform(model, data).values)


def test_config_validation():
    with pytest.raises(ConfigurationError):
        MiceConfig(n_imputations=0)
    with pytest.raises(ConfigurationError):
        MiceConfig(tol=-1)
    with pytest.raises(ConfigurationError):
        MiceConfig(infusion="label", n_clusters=1)
    with pytest.raises(ConfigurationError):
        MiceConfig.from_dict({"iterations": 3})
    cfg = MiceConfig(regressor="gb", tol=float("inf"), infusion="binary")
    assert MiceConfig.from_dict(cfg.to_dict()) == cfg


def test_rank_one_generalizes():
    g = np.random.default_rng(4)
    u = g.normal(size=(400, 1))
    full = DataMatrix.from_array(u @ g.normal(size=(1, 6)) + 0.05 * g.normal(size=(400, 6)) + 10)
    train = DataMatrix.from_array(full.values[:280])
    test = DataMatrix.from_array(full.values[280:])
    tr_m = amputate(train, MissingnessSpec("mcar", 0.2, 0))
    te_m = amputate(test, MissingnessSpec("mcar", 0.2, 1))
    model, tr_out = fit_transform(tr_m, ridge())
    te_out = transform(model, te_m)
    s_tr = score_imputation(train.values, tr_out.values, tr_m.response_indicator)
    s_te = score_imputation(test.values, te_out.values, te_m.response_indicator)
    assert s_te.nrmse <= 2 * s_tr.nrmse
