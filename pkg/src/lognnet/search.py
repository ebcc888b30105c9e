"""Particle swarm search over a chaotic map's parameter box.

Synchronous PSO: every particle is evaluated, personal bests are updated,
and the global best is reduced once at the end of each iteration.  The
first iteration evaluates the initial positions.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Sequence, TextIO

import numpy as np

from .chaos import MapKind, MapSpec, search_box
from .data import Dataset
from .head import TrainConfig, TrainingDivergedError, forward_batch
from .pipeline import Architecture, PreparedFeatures, _fit_on_prepared, prepare_features
from .reservoir import InfeasibleParamsError, ScalingMode

__all__ = ["SwarmConfig", "SearchRecord", "SearchResult", "optimize", "FitnessEvaluator",
           "fitness_of", "search_map"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SwarmConfig:
    particles: int = 20
    iterations: int = 30
    inertia: float = 0.729
    cognitive: float = 1.49445
    social: float = 1.49445
    rng_seed: int = 0
    target_metric: float | None = None

    def __post_init__(self):
        if self.particles < 2:
            raise ValueError("a swarm needs at least 2 particles")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if min(self.inertia, self.cognitive, self.social) <= 0:
            raise ValueError("inertia, cognitive and social weights must be positive")


@dataclass(frozen=True)
class SearchRecord:
    iteration: int
    particle: int
    params: dict[str, float]
    fitness: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


@dataclass
class SearchResult:
    kind: MapKind
    best_params: dict[str, float]
    best_fitness: float
    history: list[SearchRecord] = field(default_factory=list)
    best_per_iteration: list[float] = field(default_factory=list)

    @property
    def spec(self) -> MapSpec:
        return MapSpec(self.kind, self.best_params)


def _reflect(x: np.ndarray, v: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> None:
    """Mirror positions back into the box and negate the offending velocity components."""
    span = hi - lo
    above = x > hi
    below = x < lo
    x[...] = np.where(above, 2 * hi - x, np.where(below, 2 * lo - x, x))
    v[above | below] *= -1.0
    # overshoot larger than the box width
    np.clip(x, lo, hi, out=x)
    np.clip(v, -span, span, out=v)


def optimize(objective: Callable[[dict[str, float]], float], kind: "MapKind | str",
             cfg: SwarmConfig = SwarmConfig(), trace: TextIO | None = None,
             box: tuple[Sequence[str], Sequence[float], Sequence[float]] | None = None) -> SearchResult:
    """Maximize ``objective`` over the kind's parameter box.

    Objective failures (exceptions, NaN) count as the worst possible fitness.
    ``box`` overrides the default limits, e.g. for benchmark functions.
    """
    kind = MapKind.parse(kind)
    names, lo_l, hi_l = box if box is not None else search_box(kind)
    names = tuple(names)
    lo = np.asarray(lo_l, dtype=np.float64)
    hi = np.asarray(hi_l, dtype=np.float64)
    span = hi - lo
    rng = np.random.default_rng(cfg.rng_seed)
    n, dim = cfg.particles, len(names)

    x = lo + rng.random((n, dim)) * span
    v = (lo + rng.random((n, dim)) * span - x) / 2.0
    pbest = x.copy()
    pbest_fit = np.full(n, -np.inf)
    gbest = x[0].copy()
    gbest_fit = -np.inf
    result = SearchResult(kind, dict(zip(names, gbest.tolist())), gbest_fit)

    def evaluate(position) -> float:
        params = dict(zip(names, (float(p) for p in position)))
        try:
            f = float(objective(params))
        except Exception as exc:  # contract: failures are worst fitness
            log.debug("objective failed for %s: %s", params, exc)
            return -math.inf
        return f if not math.isnan(f) else -math.inf

    for it in range(cfg.iterations):
        if it:
            r1 = rng.random((n, dim))
            r2 = rng.random((n, dim))
            v = cfg.inertia * v + cfg.cognitive * r1 * (pbest - x) + cfg.social * r2 * (gbest - x)
            np.clip(v, -span, span, out=v)
            x = x + v
            _reflect(x, v, lo, hi)
        fits = np.array([evaluate(p) for p in x])
        for i, f in enumerate(fits):
            rec = SearchRecord(it, i, dict(zip(names, x[i].tolist())), float(f))
            result.history.append(rec)
            if trace is not None:
                trace.write(rec.to_json() + "\n")
        improved = fits > pbest_fit
        pbest[improved] = x[improved]
        pbest_fit[improved] = fits[improved]
        # strict '>' keeps the earliest discovery on ties
        best = int(np.argmax(pbest_fit))
        if pbest_fit[best] > gbest_fit:
            gbest_fit = float(pbest_fit[best])
            gbest = pbest[best].copy()
        result.best_per_iteration.append(gbest_fit)
        log.info("pso %s iteration %d: best %.5f", kind.value, it, gbest_fit)
        if cfg.target_metric is not None and gbest_fit >= cfg.target_metric:
            break

    result.best_params = dict(zip(names, gbest.tolist()))
    result.best_fitness = gbest_fit
    return result


class FitnessEvaluator:
    """Validation accuracy of a map candidate on a fixed training set.

    Input normalization and the balanced order are computed once; each call
    fills the reservoir, trains a head and scores the unbalanced training set.
    """

    def __init__(self, train: Dataset, arch: "Architecture | str", kind: "MapKind | str",
                 cfg: TrainConfig = TrainConfig(),
                 input_mode: "ScalingMode | str" = ScalingMode.MAX_ABS,
                 prepared: PreparedFeatures | None = None):
        self.arch = Architecture.parse(arch)
        self.kind = MapKind.parse(kind)
        self.cfg = cfg
        self.prep = prepared if prepared is not None else prepare_features(train, self.arch, input_mode)

    def __call__(self, params: "dict[str, float] | Sequence[float]") -> float:
        try:
            spec = MapSpec(self.kind, params)
            spec.validate()
            _, head, S_h = _fit_on_prepared(self.prep, self.arch, spec, self.cfg)
        except (InfeasibleParamsError, TrainingDivergedError, ValueError, ArithmeticError):
            return 0.0
        probs = forward_batch(S_h, head)
        if not np.isfinite(probs).all():
            return 0.0
        return float(np.mean(np.argmax(probs, axis=1) == self.prep.labels))


def fitness_of(dataset: Dataset, arch: "Architecture | str", kind: "MapKind | str",
               params: "dict[str, float] | Sequence[float]", cfg: TrainConfig = TrainConfig()) -> float:
    """Accuracy in [0, 1]; infeasible or divergent parameters score 0."""
    return FitnessEvaluator(dataset, arch, kind, cfg)(params)


def search_map(train: Dataset, arch: "Architecture | str", kind: "MapKind | str",
               train_cfg: TrainConfig = TrainConfig(), swarm_cfg: SwarmConfig = SwarmConfig(),
               fitness_epochs: int | None = None, trace: TextIO | None = None,
               input_mode: "ScalingMode | str" = ScalingMode.MAX_ABS) -> SearchResult:
    """PSO over the map box with validation accuracy as fitness.

    ``fitness_epochs`` shortens the per-candidate training budget; the caller
    retrains the winner at full budget.
    """
    cfg = train_cfg if fitness_epochs is None else train_cfg.with_epochs(fitness_epochs)
    evaluator = FitnessEvaluator(train, arch, kind, cfg, input_mode)
    return optimize(evaluator, kind, swarm_cfg, trace=trace)
