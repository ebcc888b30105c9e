from __future__ import annotations

import csv
import os
from pathlib import Path

import numpy as np
import pytest

from lognnet.data import CTG_SCHEMA, Dataset, Domain, Feature, Schema, load_covid

FIXTURES = Path(__file__).parent / "fixtures"
COVID_FIXTURE = FIXTURES / "covid_snapshot.csv.gz"


def covid_source() -> Path:
    """The real export when LOGNNET_COVID_CSV points at one, else the committed snapshot."""
    env = os.environ.get("LOGNNET_COVID_CSV")
    return Path(env) if env else COVID_FIXTURE


@pytest.fixture(scope="session")
def covid_split():
    return load_covid(covid_source())


def toy_schema(n_features: int, n_classes: int = 2, schema_id: str = "toy") -> Schema:
    return Schema(schema_id, tuple(Feature(f"f{i}", Domain.REAL) for i in range(n_features)),
                  "label", tuple(f"c{k}" for k in range(n_classes)))


def separable_dataset(n: int = 60, n_features: int = 3, seed: int = 0, margin: float = 1.0) -> Dataset:
    """Two clusters on opposite sides of the first feature axis."""
    rng = np.random.default_rng(seed)
    y = np.arange(n) % 2
    X = rng.uniform(0.0, 1.0, size=(n, n_features))
    X[:, 0] = np.where(y == 1, margin + X[:, 0], -margin - X[:, 0])
    return Dataset(X, y, toy_schema(n_features), np.arange(n), "toy")


@pytest.fixture
def toy():
    return separable_dataset()


CTG_HEADER = ["FileName", "Date"] + CTG_SCHEMA.feature_names + ["NSP"]


def write_ctg_csv(path: Path, n: int = 45, seed: int = 0, blank_mstv_rows: int = 1,
                  delimiter: str = ",") -> Path:
    """Small CTG-shaped file: three roughly separable classes in the first features."""
    rng = np.random.default_rng(seed)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, delimiter=delimiter)
        w.writerow(CTG_HEADER)
        for i in range(n):
            label = i % 3
            feats = rng.uniform(0, 10, size=25)
            feats[2] = 120 + 15 * label + rng.uniform(-3, 3)
            feats[7] = 20 + 30 * label + rng.uniform(-5, 5)
            feats[24] = rng.integers(-1, 2)
            cells = [f"{v:.4f}" for v in feats]
            cells[24] = str(int(feats[24]))
            if i < blank_mstv_rows:
                cells[8] = ""
            w.writerow([f"file{i}.txt", "1996-01-01"] + cells + [str(label + 1)])
    return path


@pytest.fixture
def ctg_csv(tmp_path):
    return write_ctg_csv(tmp_path / "ctg.csv")


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
