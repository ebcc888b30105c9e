"""``lognnet`` command line: train, search, evaluate, predict, estimate-ram, export, import.

Run settings come from one flat YAML/JSON file whose keys match the long
flag names (``learning_rate`` <-> ``--learning-rate``); flags given on the
command line win.  Every run that produces artifacts writes them to a
scratch directory first and moves them into place only on success.
"""

from __future__ import annotations

import json
import logging
import os
import platform
import shutil
import sys
import tempfile
import traceback
from dataclasses import asdict, dataclass, field, fields
from importlib import metadata
from pathlib import Path
from typing import Any, Callable, Iterator, Sequence

import click
import numpy as np
import yaml

from . import budget, model_io
from ._backend import BACKEND
from .chaos import MapKind, MapSpec
from .data import (DataError, Dataset, LoadReport, get_schema, load_covid, load_csv, load_ctg)
from .evaluation import fit_with_optional_search, holdout_evaluate, kfold_evaluate
from .head import TrainConfig
from .metrics import MetricsReport, format_table
from .pipeline import Architecture, PatientVectorError, predict_patient, test_model
from .reservoir import ScalingMode
from .search import SwarmConfig, search_map

__all__ = ["RunConfig", "main", "ConfigError"]

log = logging.getLogger("lognnet")

LOADERS = ("ctg", "covid", "csv")
PROTOCOLS = ("holdout", "kfold")


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


@dataclass
class RunConfig:
    dataset: str | None = None
    loader: str = "csv"
    schema: str | None = None
    test_dataset: str | None = None
    arch: str = "8:6:4:2"
    map: str = "sine"
    params: dict[str, float] | None = None
    search: bool = False
    epochs: int = 50
    learning_rate: float = 0.05
    shuffle: bool = False
    particles: int = 20
    iterations: int = 30
    fitness_epochs: int | None = None
    protocol: str | None = None
    k: int = 5
    input_mode: str = ScalingMode.MAX_ABS.value
    train_seed: int = 0
    search_seed: int = 0
    output: str | None = None

    @classmethod
    def keys(cls) -> set[str]:
        return {f.name for f in fields(cls)}

    @classmethod
    def from_mapping(cls, doc: dict[str, Any]) -> "RunConfig":
        # a manifest written by an earlier run is accepted as a config
        if isinstance(doc.get("config"), dict) and "versions" in doc:
            doc = doc["config"]
        unknown = set(doc) - cls.keys()
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)

    def resolved(self) -> "RunConfig":
        """Fill defaults that depend on other keys and check consistency."""
        cfg = RunConfig(**asdict(self))
        if cfg.loader not in LOADERS:
            raise ConfigError(f"loader must be one of {LOADERS}, got {cfg.loader!r}")
        if not cfg.dataset:
            raise ConfigError("no dataset given")
        if cfg.protocol is None:
            cfg.protocol = "holdout" if (cfg.loader == "covid" or cfg.test_dataset) else "kfold"
        if cfg.protocol not in PROTOCOLS:
            raise ConfigError(f"protocol must be one of {PROTOCOLS}, got {cfg.protocol!r}")
        if cfg.protocol == "holdout" and cfg.loader != "covid" and not cfg.test_dataset:
            raise ConfigError("holdout protocol needs a pre-split corpus (covid) or test_dataset")
        if cfg.loader == "csv" and not cfg.schema:
            raise ConfigError("the csv loader needs a schema sidecar file")
        if cfg.search == bool(cfg.params):
            raise ConfigError("set exactly one of search: true or explicit params")
        Architecture.parse(cfg.arch)
        kind = MapKind.parse(cfg.map)
        cfg.map = kind.value
        ScalingMode(cfg.input_mode)
        if cfg.params:
            cfg.params = {str(k): float(v) for k, v in cfg.params.items()}
            MapSpec(kind, cfg.params).validate()
        self.train_config()
        if cfg.search:
            cfg.swarm_config()
        return cfg

    def train_config(self) -> TrainConfig:
        return TrainConfig(epochs=self.epochs, learning_rate=self.learning_rate,
                           rng_seed=self.train_seed, shuffle=self.shuffle)

    def swarm_config(self) -> SwarmConfig | None:
        if not self.search:
            return None
        return SwarmConfig(particles=self.particles, iterations=self.iterations,
                           rng_seed=self.search_seed)


def _versions() -> dict[str, str]:
    try:
        own = metadata.version("lognnet")
    except metadata.PackageNotFoundError:
        own = "unknown"
    return {"lognnet": own, "numpy": np.__version__, "python": platform.python_version(),
            "kernels": BACKEND}


# --- data -------------------------------------------------------------------

@dataclass
class LoadedData:
    train: Dataset
    test: Dataset | None
    reports: list[LoadReport] = field(default_factory=list)


def load_data(cfg: RunConfig) -> LoadedData:
    if cfg.loader == "covid":
        split = load_covid(cfg.dataset, cfg.schema)
        return LoadedData(split.train, split.test, [split.report])
    if cfg.loader == "ctg":
        train, report = load_ctg(cfg.dataset)
    else:
        train, report = load_csv(cfg.dataset, cfg.schema)
    reports = [report]
    test = None
    if cfg.test_dataset:
        test, test_report = (load_ctg(cfg.test_dataset) if cfg.loader == "ctg"
                             else load_csv(cfg.test_dataset, cfg.schema))
        reports.append(test_report)
    return LoadedData(train, test, reports)


# --- artifact handling ------------------------------------------------------

class Artifacts:
    """Scratch directory whose contents are moved to ``target`` on commit."""

    def __init__(self, target: Path):
        self.target = target
        target.parent.mkdir(parents=True, exist_ok=True)
        self.tmp = Path(tempfile.mkdtemp(prefix=f".{target.name}.", dir=target.parent))

    def path(self, name: str) -> Path:
        return self.tmp / name

    def write_text(self, name: str, text: str) -> None:
        self.path(name).write_text(text if text.endswith("\n") else text + "\n")

    def write_jsonl(self, name: str, records: Sequence[dict]) -> None:
        self.write_text(name, "".join(json.dumps(r, sort_keys=True) + "\n" for r in records))

    def commit(self) -> None:
        if not self.target.exists():
            os.replace(self.tmp, self.target)
            return
        if not self.target.is_dir():
            raise click.ClickException(f"{self.target} exists and is not a directory")
        for item in self.tmp.iterdir():
            os.replace(item, self.target / item.name)
        self.tmp.rmdir()

    def discard(self) -> None:
        shutil.rmtree(self.tmp, ignore_errors=True)


def _manifest(command: str, cfg: RunConfig, extra: dict[str, Any] | None = None) -> str:
    doc = {
        "command": command,
        "config": asdict(cfg),
        "seeds": {"train": cfg.train_seed, "search": cfg.search_seed},
        "versions": _versions(),
    }
    doc.update(extra or {})
    return json.dumps(doc, indent=2, sort_keys=True)


def _report_record(split: str, report: MetricsReport) -> dict[str, Any]:
    return {"split": split, **report.to_dict()}


# --- error handling ---------------------------------------------------------

EXPECTED_ERRORS = (ConfigError, DataError, model_io.ModelFileError, ValueError, ArithmeticError,
                   OSError, yaml.YAMLError)


def _fail(command: str, exc: BaseException, code: int = 1) -> None:
    record = {"status": "error", "command": command, "error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, PatientVectorError):
        record["violations"] = [{"field": v.field, "reason": v.reason} for v in exc.violations]
    click.echo(json.dumps(record, sort_keys=True), err=True)
    if log.isEnabledFor(logging.DEBUG):
        traceback.print_exception(exc)
    sys.exit(code)


def _guarded(command: str, body: Callable[[], None]) -> None:
    try:
        body()
    except click.exceptions.Exit:
        raise
    except click.ClickException as exc:
        _fail(command, exc, 2)
    except EXPECTED_ERRORS as exc:
        _fail(command, exc, 2 if isinstance(exc, (ConfigError, DataError, FileNotFoundError)) else 1)


# --- shared run options -----------------------------------------------------

def _parse_params(values: Sequence[str]) -> dict[str, float] | None:
    if not values:
        return None
    out = {}
    for item in values:
        name, sep, value = item.partition("=")
        if not sep:
            raise click.BadParameter(f"expected NAME=VALUE, got {item!r}", param_hint="--param")
        try:
            out[name.strip()] = float(value)
        except ValueError:
            raise click.BadParameter(f"{name}: not a number: {value!r}", param_hint="--param") from None
    return out


RUN_OPTIONS = [
    click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
                 help="YAML/JSON run config (or a previous run's manifest.json)."),
    click.option("--dataset", help="Dataset file."),
    click.option("--loader", type=click.Choice(LOADERS), help="Dataset loader."),
    click.option("--schema", help="Schema sidecar (csv) or column/date sidecar (covid)."),
    click.option("--test-dataset", help="Separate test file for holdout with ctg/csv data."),
    click.option("--arch", help="Architecture N:P:H:M."),
    click.option("--map", "map_", help="Chaotic map kind (lognnet, logistic, sine, gauss, "
                 "2sided, plank, henon1, henon2)."),
    click.option("--param", "params", multiple=True, help="Map parameter NAME=VALUE (repeatable)."),
    click.option("--search/--no-search", default=None, help="Search map parameters with PSO."),
    click.option("--epochs", type=int),
    click.option("--learning-rate", type=float),
    click.option("--shuffle/--no-shuffle", default=None),
    click.option("--particles", type=int),
    click.option("--iterations", type=int),
    click.option("--fitness-epochs", type=int, help="Training epochs per PSO candidate."),
    click.option("--protocol", type=click.Choice(PROTOCOLS)),
    click.option("--k", type=int, help="Fold count for kfold."),
    click.option("--input-mode", type=click.Choice([m.value for m in ScalingMode])),
    click.option("--train-seed", type=int),
    click.option("--search-seed", type=int),
    click.option("--output", help="Output directory."),
]


def run_options(fn):
    for opt in reversed(RUN_OPTIONS):
        fn = opt(fn)
    return fn


def build_config(config_path: str | None, **flags: Any) -> RunConfig:
    doc: dict[str, Any] = {}
    if config_path:
        loaded = yaml.safe_load(Path(config_path).read_text())
        if loaded is not None and not isinstance(loaded, dict):
            raise ConfigError(f"{config_path}: config must be a mapping")
        doc = dict(loaded or {})
    cfg = RunConfig.from_mapping(doc)
    flags["map"] = flags.pop("map_", None)
    flags["params"] = _parse_params(flags.get("params") or ())
    for key, value in flags.items():
        if value is not None:
            setattr(cfg, key, value)
    if flags["params"] and flags.get("search") is None:
        cfg.search = False
    elif flags.get("search") and flags["params"] is None:
        cfg.params = None
    return cfg.resolved()


# --- commands ---------------------------------------------------------------

@click.group()
@click.option("-v", "--verbose", count=True, help="Log progress (-vv for debug).")
def main(verbose: int) -> None:
    """LogNNet chaotic-reservoir classifier."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


@main.command()
@run_options
def train(config_path, **flags):
    """Search (optional) and train a model; write it with its reports."""

    def body():
        cfg = build_config(config_path, **flags)
        if not cfg.output:
            raise ConfigError("no output directory given (--output)")
        data = load_data(cfg)
        arts = Artifacts(Path(cfg.output))
        try:
            with open(arts.path("search_trace.jsonl"), "w") as trace:
                model, validation, found = fit_with_optional_search(
                    data.train, Architecture.parse(cfg.arch), cfg.map, cfg.train_config(),
                    cfg.swarm_config(), cfg.params, cfg.fitness_epochs,
                    trace if cfg.search else None, cfg.input_mode)
            model_io.save(model, arts.path("model.lgnn"))
            validation.model_name = f"{model.name} (validation)"
            reports = [validation]
            records = [_report_record("validation", validation)]
            if data.test is not None:
                test_report = test_model(model, data.test)
                test_report.model_name = f"{model.name} (test)"
                reports.append(test_report)
                records.append(_report_record("test", test_report))
            table = format_table(reports, title=f"Training run: {data.train.name}")
            arts.write_text("metrics.txt", table)
            arts.write_jsonl("metrics.jsonl", records)
            ram = budget.estimate(model.arch)
            arts.write_text("ram.txt", budget.format_table([ram]) + "\n\n" + ram.format_items())
            arts.write_text("ram.json", ram.to_json())
            arts.write_jsonl("load_report.jsonl", [r.to_dict() for r in data.reports])
            extra = {"map_params": model.spec.as_dict()}
            if found is not None:
                extra["search_best_fitness"] = found.best_fitness
            arts.write_text("manifest.json", _manifest("train", cfg, extra))
            arts.commit()
        except BaseException:
            arts.discard()
            raise
        click.echo(table)
        click.echo(f"map parameters: {model.spec}")
        click.echo(f"artifacts: {cfg.output}")

    _guarded("train", body)


@main.command()
@run_options
def search(config_path, **flags):
    """Search map parameters with PSO only; write the trace and the best point."""

    def body():
        flags["search"] = True
        flags["params"] = ()
        cfg = build_config(config_path, **flags)
        if not cfg.output:
            raise ConfigError("no output directory given (--output)")
        data = load_data(cfg)
        arts = Artifacts(Path(cfg.output))
        try:
            with open(arts.path("search_trace.jsonl"), "w") as trace:
                found = search_map(data.train, cfg.arch, cfg.map, cfg.train_config(),
                                   cfg.swarm_config(), cfg.fitness_epochs, trace, cfg.input_mode)
            best = {"map": found.kind.value, "params": found.best_params,
                    "fitness": found.best_fitness, "best_per_iteration": found.best_per_iteration}
            arts.write_text("best.json", json.dumps(best, indent=2, sort_keys=True))
            arts.write_jsonl("load_report.jsonl", [r.to_dict() for r in data.reports])
            arts.write_text("manifest.json", _manifest("search", cfg, {"map_params": found.best_params}))
            arts.commit()
        except BaseException:
            arts.discard()
            raise
        click.echo(f"best {found.spec} validation accuracy {found.best_fitness:.5f}")
        click.echo(f"artifacts: {cfg.output}")

    _guarded("search", body)


@main.command()
@click.option("--model", "model_path", type=click.Path(dir_okay=False),
              help="Evaluate a saved model instead of running the configured protocol.")
@click.option("--per-fold/--no-per-fold", default=True, help="Show per-fold rows for kfold.")
@run_options
def evaluate(model_path, per_fold, config_path, **flags):
    """Report accuracy, precision, recall and F1 per class."""

    def body():
        if model_path:
            _evaluate_saved(model_path, config_path, flags)
        else:
            _evaluate_protocol(config_path, flags, per_fold)

    _guarded("evaluate", body)


def _evaluate_saved(model_path: str, config_path: str | None, flags: dict[str, Any]) -> None:
    model = model_io.load(model_path)
    cfg = RunConfig.from_mapping(dict(yaml.safe_load(Path(config_path).read_text()) or {})
                                 if config_path else {})
    for key in ("dataset", "loader", "schema", "test_dataset", "output"):
        if flags.get(key) is not None:
            setattr(cfg, key, flags[key])
    if not cfg.dataset:
        raise ConfigError("no dataset given")
    if cfg.loader not in LOADERS:
        raise ConfigError(f"loader must be one of {LOADERS}")
    data = load_data(cfg)
    target = data.test if data.test is not None else data.train
    report = test_model(model, target)
    table = format_table([report], title=f"Model {Path(model_path).name} on {target.name}")
    if cfg.output:
        arts = Artifacts(Path(cfg.output))
        try:
            arts.write_text("metrics.txt", table)
            arts.write_jsonl("metrics.jsonl", [_report_record("test", report)])
            arts.write_text("manifest.json", _manifest("evaluate", cfg, {"model": str(model_path)}))
            arts.commit()
        except BaseException:
            arts.discard()
            raise
    click.echo(table)


def _evaluate_protocol(config_path: str | None, flags: dict[str, Any], per_fold: bool) -> None:
    cfg = build_config(config_path, **flags)
    data = load_data(cfg)
    arts = Artifacts(Path(cfg.output)) if cfg.output else None
    trace_path = arts.path("search_trace.jsonl") if arts else Path(os.devnull)
    try:
        with open(trace_path, "w") as trace:
            common = dict(train_cfg=cfg.train_config(), swarm_cfg=cfg.swarm_config(),
                          params=cfg.params, fitness_epochs=cfg.fitness_epochs,
                          trace=trace if cfg.search else None, input_mode=cfg.input_mode)
            if cfg.protocol == "kfold":
                result = kfold_evaluate(data.train, cfg.arch, cfg.map, k=cfg.k,
                                        fold_seed=cfg.train_seed, **common)
                report = result.report
                records = [_report_record(f"fold{i}", f) for i, f in enumerate(report.folds, 1)]
                records.append(_report_record("mean", report))
                title = f"{cfg.k}-fold cross-validation on {data.train.name}"
            else:
                if data.test is None:
                    raise ConfigError("holdout needs a test split")
                result = holdout_evaluate(data.train, data.test, cfg.arch, cfg.map, **common)
                report = result.report
                records = [_report_record("validation", result.validation),
                           _report_record("test", report)]
                title = f"Holdout test on {data.test.name}"
        table = format_table([report], title=title, per_fold=per_fold)
        if arts:
            arts.write_text("metrics.txt", table)
            arts.write_jsonl("metrics.jsonl", records)
            arts.write_jsonl("load_report.jsonl", [r.to_dict() for r in data.reports])
            arts.write_text("manifest.json", _manifest("evaluate", cfg))
            arts.commit()
    except BaseException:
        if arts:
            arts.discard()
        raise
    click.echo(table)


def _rows_from_file(path: str) -> Iterator[list[str]]:
    text = Path(path).read_text()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    delim = max((",", ";", "\t"), key=lambda d: lines[0].count(d)) if lines else ","
    for ln in lines:
        yield [c.strip() for c in ln.split(delim)]


def _looks_like_header(row: list[str], names: list[str]) -> bool:
    lowered = {n.lower() for n in names}
    return any(c.lower() in lowered for c in row)


@main.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--values", help="Comma-separated feature values for one patient.")
@click.option("--file", "batch_file", type=click.Path(exists=True, dir_okay=False),
              help="CSV file with one patient per row (header optional).")
@click.option("--json", "as_json", is_flag=True, help="Print JSON lines instead of text.")
def predict(model_path, values, batch_file, as_json):
    """Classify one feature vector (--values) or a batch file (--file)."""

    def body():
        if (values is None) == (batch_file is None):
            raise click.UsageError("give exactly one of --values or --file")
        model = model_io.load(model_path)
        if values is not None:
            rows = [[c.strip() for c in values.split(",")]]
        else:
            rows = list(_rows_from_file(batch_file))
            schema = get_schema(model.schema_id)
            if rows and schema is not None and _looks_like_header(rows[0], schema.feature_names):
                rows = rows[1:]
        failures = []
        for i, row in enumerate(rows, start=1):
            try:
                p = predict_patient(model, row)
            except PatientVectorError as exc:
                failures.append((i, exc))
                rec = {"row": i, "status": "rejected",
                       "violations": [{"field": v.field, "reason": v.reason} for v in exc.violations]}
                click.echo(json.dumps(rec) if as_json else
                           f"row {i}: rejected: {exc}")
                continue
            if as_json:
                click.echo(json.dumps({"row": i, "status": "ok", **p.to_dict()}))
            else:
                scores = " ".join(f"{s:.6f}" for s in p.scores)
                click.echo(f"row {i}: {p.class_label} (class {p.class_index}) scores {scores}")
        if failures:
            raise failures[0][1] if len(rows) == 1 else PatientVectorError(
                [v for _, exc in failures for v in exc.violations])

    _guarded("predict", body)


@main.command("estimate-ram")
@click.argument("arch")
@click.option("--limit", type=int, help="RAM available in bytes; report whether the model fits.")
@click.option("--mode", type=click.Choice(["alg1", "alg2"]), default="alg1", show_default=True,
              help="alg1 regenerates the reservoir on the fly, alg2 stores it.")
@click.option("--json", "as_json", is_flag=True)
def estimate_ram(arch, limit, mode, as_json):
    """RAM needed to run an N:P:H:M network on an 8-bit microcontroller."""

    def body():
        b = budget.estimate(arch)
        result = budget.fits(arch, limit, mode) if limit is not None else None
        if as_json:
            doc = b.to_dict()
            if result is not None:
                doc["fits"] = {"mode": result.mode.value, "limit": result.limit,
                               "total": result.total, "fits": result.fits,
                               "headroom": result.headroom}
            click.echo(json.dumps(doc, sort_keys=True))
            return
        click.echo(budget.format_table([b]))
        click.echo()
        click.echo(b.format_items())
        if result is not None:
            verdict = "yes" if result.fits else "no"
            click.echo(f"\nfits={verdict} under {result.mode.value}: {result.total} B of "
                       f"{result.limit} B (headroom {result.headroom} B)")

    _guarded("estimate-ram", body)


@main.command()
@click.argument("model_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("out", type=click.Path(dir_okay=False))
def export(model_path, out):
    """Write a model file as JSON (weights stay quantized)."""

    def body():
        doc = model_io.export_document(Path(model_path).read_bytes())
        _atomic_write(Path(out), (json.dumps(doc, indent=1) + "\n").encode())

    _guarded("export", body)


@main.command("import")
@click.argument("json_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("out", type=click.Path(dir_okay=False))
def import_(json_path, out):
    """Rebuild a binary model file from its JSON export."""

    def body():
        doc = json.loads(Path(json_path).read_text())
        data = model_io.import_document(doc)
        model_io.from_bytes(data)  # full validation before anything is written
        _atomic_write(Path(out), data)

    _guarded("import", body)


def _atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


if __name__ == "__main__":
    main()
