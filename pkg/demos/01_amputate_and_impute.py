"""Walkthrough: punch holes in a complete matrix, then fill them back in.

Run with ``python demos/01_amputate_and_impute.py``.  Takes a few seconds.
"""
# %% A complete matrix with shared structure between columns
import numpy as np

from chainimpute import DataMatrix, MiceConfig, MissingnessSpec, amputate, fit_transform, transform
from chainimpute.amputation import count_unique_missing_patterns
from chainimpute.baselines import impute_baseline
from chainimpute.data import SplitSpec, split_train_test
from chainimpute.evaluation import score_imputation

rng = np.random.default_rng(7)
latent = rng.normal(size=(600, 2))
X = latent @ rng.normal(size=(2, 8)) + 0.2 * rng.normal(size=(600, 8)) + 6.0
full = DataMatrix.from_array(X, column_names=[f"x{j}" for j in range(8)])
train, test = split_train_test(full, SplitSpec(0.7, seed=1))
print("train", train.shape, "test", test.shape)

# %% Remove 30% of cells. MNAR takes values from each column's tails.
for kind in ("mcar", "mar", "mnar"):
    am = amputate(train, MissingnessSpec(kind, 0.3, seed=2))
    print(f"{kind:5s} masked={am.n_missing:4d}  unique patterns={count_unique_missing_patterns(am)}")

spec = MissingnessSpec("mar", 0.3, seed=2)
train_am, test_am = amputate(train, spec), amputate(test, MissingnessSpec("mar", 0.3, seed=3))

# %% Fit chained ridge regressions on the training split, reuse them on the test split
model, train_filled = fit_transform(train_am, MiceConfig(regressor="ridge", seed=0))
test_filled = transform(model, test_am)


def nrmse(actual, filled, amputated):
    return score_imputation(actual, filled, amputated.response_indicator).nrmse


print(f"LR-MICE  train NRMSE {nrmse(train, train_filled, train_am):.4f}"
      f"  test NRMSE {nrmse(test, test_filled, test_am):.4f}")

# %% The same cells filled by the simpler baselines, for scale
for name in ("median", "knn", "isvd", "mf"):
    filled = impute_baseline(test_am, name, seed=0)
    print(f"{name:7s} test NRMSE {nrmse(test, filled, test_am):.4f}")

# %% Every chain logs how far the imputed cells moved per sweep
for c, trace in enumerate(model.traces):
    print(f"chain {c}:", " ".join(f"{v:.3f}" for v in trace))
