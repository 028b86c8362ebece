"""Known benchmark datasets.  Files are supplied by the user and never downloaded.

The data directory is ``$CHAINIMPUTE_DATA_DIR`` when set, else ``./data``.
Every entry lists the file name, how to parse it, and the shape the parsed
complete-case matrix must have.  A sha256 is checked when one is recorded.
"""
from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..data import DataMatrix, read_csv
from ..errors import DatasetError

DATA_ENV = "CHAINIMPUTE_DATA_DIR"


@dataclass(frozen=True)
class DatasetEntry:
    name: str
    filename: str
    n_rows: int
    n_cols: int
    target: str | int | None
    delimiter: str = ","
    header: bool = True
    drop_columns: tuple = ()
    na_tokens: tuple = ("", "NA")
    complete_cases: bool = False
    sha256: str | None = None
    note: str = ""


REGISTRY = {
    e.name: e
    for e in [
        DatasetEntry("wine", "winequality-white.csv", 4898, 11, "quality", delimiter=";",
                     note="UCI wine quality, white variant"),
        DatasetEntry("dermatology", "dermatology.data", 358, 34, 34, header=False,
                     na_tokens=("?",), complete_cases=True,
                     note="UCI dermatology; 8 rows with unknown age are dropped"),
        DatasetEntry("breast_cancer", "wdbc.data", 569, 30, 1, header=False, drop_columns=("x0",),
                     note="UCI breast cancer Wisconsin (diagnostic); the id column is dropped"),
        DatasetEntry("skillcraft", "SkillCraft1_Dataset.csv", 3338, 19, None, drop_columns=("GameID",),
                     na_tokens=("", "NA", "?"), complete_cases=True,
                     note="UCI SkillCraft1 master table; no class target"),
        DatasetEntry("credit", "default_of_credit_card_clients.csv", 30000, 20,
                     "default payment next month",
                     drop_columns=("ID", "SEX", "EDUCATION", "MARRIAGE"),
                     note="UCI default of credit card clients exported to CSV with one header row"),
        DatasetEntry("mice_protein", "Data_Cortex_Nuclear.csv", 552, 77, "class",
                     drop_columns=("MouseID", "Genotype", "Treatment", "Behavior"),
                     complete_cases=True,
                     note="UCI mice protein expression exported to CSV; complete cases only"),
    ]
}


def data_dir() -> Path:
    return Path(os.environ.get(DATA_ENV, "data"))


def sha256_of(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def complete_rows(data: DataMatrix, labels=None):
    keep = data.mask.all(axis=1)
    out = data.take_rows(keep)
    return out, (None if labels is None else np.asarray(labels)[keep])


def dataset_path(name: str, directory=None) -> Path:
    if name not in REGISTRY:
        raise DatasetError(f"unknown dataset {name!r}; known: {sorted(REGISTRY)}")
    return Path(directory or data_dir()) / REGISTRY[name].filename


def is_available(name: str, directory=None) -> bool:
    return dataset_path(name, directory).is_file()


def load_dataset(name: str, directory=None):
    """Parse a registered dataset and verify its shape (and checksum when recorded).

    Returns ``(data, labels)``; labels is ``None`` for datasets without a target.
    """
    entry = REGISTRY.get(name)
    path = dataset_path(name, directory)
    if not path.is_file():
        raise DatasetError(
            f"dataset {name!r} not supplied: expected {path} ({entry.note}). "
            f"Place the file there or set {DATA_ENV}.")
    if entry.sha256 is not None and sha256_of(path) != entry.sha256:
        raise DatasetError(f"{path}: checksum mismatch")
    data, labels = read_csv(path, entry.target, delimiter=entry.delimiter, header=entry.header,
                            na_tokens=entry.na_tokens, drop_columns=entry.drop_columns)
    if entry.complete_cases:
        data, labels = complete_rows(data, labels)
    if data.shape != (entry.n_rows, entry.n_cols):
        raise DatasetError(f"{path}: parsed shape {data.shape}, expected {(entry.n_rows, entry.n_cols)}")
    return data, labels
