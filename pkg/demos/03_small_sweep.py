"""A miniature version of the benchmark grid, run through the same code path as ``chainimpute sweep``.

Writes into ``demos/out/`` and prints the generated markdown report.
"""
# %%
import json
from pathlib import Path

import numpy as np

from chainimpute.data import DataMatrix, write_csv
from chainimpute.experiment import emit_report, load_config, run_sweep

here = Path(__file__).resolve().parent
work = here / "out"
work.mkdir(exist_ok=True)

rng = np.random.default_rng(3)
z = rng.normal(size=(300, 3))
X = z @ rng.normal(size=(3, 7)) + 0.3 * rng.normal(size=(300, 7)) + 8
labels = np.where(z[:, 0] > 0, "pos", "neg")
write_csv(work / "toy.csv", DataMatrix.from_array(X), labels, "label")

# %% The config file is the whole experiment; the manifest echoes it back resolved
config = {
    "schema_version": 1,
    "dataset": {"path": str(work / "toy.csv"), "target": "label"},
    "models": ["median", "knn", {"mice": {"regressor": "ridge", "n_imputations": 3, "n_iterations": 5}}],
    "kinds": ["mcar", "mnar"],
    "rates": [5, 10, 20, 30, 40, 50, 60, 70, 80],
    "seed": 1,
}
(work / "config.json").write_text(json.dumps(config, indent=1))
cfg = load_config(work / "config.json")

# %% Completed cells are skipped on a rerun, so this is cheap the second time
outcome = run_sweep(cfg, out=work / "sweep", jobs=2)
print(f"ran {len(outcome.ran)}, skipped {len(outcome.skipped)}, failed {len(outcome.failed)}")

# %%
report = emit_report(work / "sweep")
print(report.markdown.split("## Resolved configuration")[0])
print("best per group:", report.best)
