"""K-fold (unsplit corpora) and holdout (pre-split corpora) evaluation."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence, TextIO

import numpy as np

from .chaos import MapKind, MapSpec
from .data import Dataset
from .head import TrainConfig
from .metrics import MetricsReport, mean_report
from .pipeline import Architecture, Model, test_model, train_model
from .reservoir import ScalingMode
from .search import SearchResult, SwarmConfig, search_map

__all__ = ["stratified_folds", "FoldOutcome", "KFoldResult", "HoldoutResult",
           "fit_with_optional_search", "kfold_evaluate", "holdout_evaluate"]

log = logging.getLogger(__name__)


def stratified_folds(labels: Sequence[int], k: int, seed: int = 0) -> list[np.ndarray]:
    """Partition indices into k folds with per-class counts within one of each other.

    Each class is shuffled with the seeded generator and dealt round-robin;
    the dealing position carries over between classes so fold sizes also
    differ by at most one.
    """
    labels = np.asarray(labels)
    if k < 2:
        raise ValueError("k must be >= 2")
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    pos = 0
    for c in np.unique(labels):
        members = np.flatnonzero(labels == c)
        rng.shuffle(members)
        for idx in members:
            folds[pos % k].append(int(idx))
            pos += 1
    return [np.sort(np.asarray(f, dtype=np.int64)) for f in folds]


def fit_with_optional_search(train: Dataset, arch: Architecture, kind: "MapKind | str",
                             train_cfg: TrainConfig, swarm_cfg: SwarmConfig | None = None,
                             params: Mapping[str, float] | None = None,
                             fitness_epochs: int | None = None, trace: TextIO | None = None,
                             input_mode: "ScalingMode | str" = ScalingMode.MAX_ABS,
                             ) -> tuple[Model, MetricsReport, SearchResult | None]:
    """Search the map parameters (when a swarm config is given) and train at full budget."""
    if (swarm_cfg is None) == (params is None):
        raise ValueError("give exactly one of swarm_cfg (search) or explicit params")
    kind = MapKind.parse(kind)
    found = None
    if swarm_cfg is not None:
        found = search_map(train, arch, kind, train_cfg, swarm_cfg, fitness_epochs, trace, input_mode)
        spec = found.spec
    else:
        spec = MapSpec(kind, dict(params))
    model, validation = train_model(train, arch, spec, train_cfg, input_mode)
    return model, validation, found


@dataclass
class FoldOutcome:
    fold: int
    spec: MapSpec
    test_indices: np.ndarray
    report: MetricsReport
    search: SearchResult | None = None


@dataclass
class KFoldResult:
    report: MetricsReport
    folds: list[FoldOutcome] = field(default_factory=list)


def kfold_evaluate(dataset: Dataset, arch: "Architecture | str", kind: "MapKind | str",
                   k: int = 5, train_cfg: TrainConfig = TrainConfig(),
                   swarm_cfg: SwarmConfig | None = None, params: Mapping[str, float] | None = None,
                   fold_seed: int = 0, fitness_epochs: int | None = None,
                   trace: TextIO | None = None,
                   input_mode: "ScalingMode | str" = ScalingMode.MAX_ABS) -> KFoldResult:
    """Train on k-1 folds (balanced, optionally searched), test on the held-out fold.

    The returned report holds the unweighted mean of every metric across
    folds; the per-fold reports are attached.
    """
    arch = Architecture.parse(arch)
    kind = MapKind.parse(kind)
    folds = stratified_folds(dataset.y, k, fold_seed)
    all_idx = np.arange(len(dataset))
    present = set(np.unique(dataset.y).tolist())
    splits = []
    for i, test_idx in enumerate(folds):
        train_idx = np.setdiff1d(all_idx, test_idx, assume_unique=True)
        missing = present - set(np.unique(dataset.y[train_idx]).tolist())
        if missing:
            raise ValueError(f"fold {i + 1}: classes {sorted(missing)} absent from the training split")
        splits.append((train_idx, test_idx))

    outcomes = []
    for i, (train_idx, test_idx) in enumerate(splits):
        train = dataset.subset(train_idx, f"{dataset.name}-fold{i + 1}-train")
        test = dataset.subset(test_idx, f"{dataset.name}-fold{i + 1}-test")
        model, _, found = fit_with_optional_search(train, arch, kind, train_cfg, swarm_cfg, params,
                                                   fitness_epochs, trace, input_mode)
        report = test_model(model, test)
        log.info("fold %d/%d %s: A=%.4f", i + 1, k, model.name, report.accuracy)
        outcomes.append(FoldOutcome(i + 1, model.spec, test_idx, report, found))
    name = f"{kind.display_name} {arch}"
    return KFoldResult(mean_report([o.report for o in outcomes], name), outcomes)


@dataclass
class HoldoutResult:
    report: MetricsReport
    model: Model
    validation: MetricsReport
    search: SearchResult | None = None


def holdout_evaluate(train: Dataset, test: Dataset, arch: "Architecture | str",
                     kind: "MapKind | str", train_cfg: TrainConfig = TrainConfig(),
                     swarm_cfg: SwarmConfig | None = None,
                     params: Mapping[str, float] | None = None,
                     fitness_epochs: int | None = None, trace: TextIO | None = None,
                     input_mode: "ScalingMode | str" = ScalingMode.MAX_ABS) -> HoldoutResult:
    """One training run on the training split, one test run on the test split."""
    arch = Architecture.parse(arch)
    if train.schema.id != test.schema.id:
        raise ValueError("train and test sets use different schemas")
    overlap = np.intersect1d(train.ids, test.ids)
    model, validation, found = fit_with_optional_search(train, arch, kind, train_cfg, swarm_cfg,
                                                        params, fitness_epochs, trace, input_mode)
    report = test_model(model, test)
    if overlap.size:
        report.warnings.append(f"{overlap.size} record ids appear in both train and test sets")
    return HoldoutResult(report, model, validation, found)
