"""INI run configuration.

Example::

    [run]
    experiment = within
    seed = 7
    output_dir = out
    model = rforest

    [segmentation]
    window_seconds = 20

    [model.rforest]
    n_trees = 100

    [dataset.D1]
    path = data/D1

    [dataset.D4]
    path = data/D4
    holdout = true
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .errors import ConfigError
from .ml.models import ModelSpec
from .pipeline import PipelineConfig
from .preprocess import FilterConfig, SegmentationConfig
from .rpeak import DetectorConfig

EXPERIMENTS = ("within", "cross", "combined", "holdout", "sweep")
SEED_ENV = "ECGSQA_SEED"
DEFAULT_WINDOWS = (5.0, 10.0, 15.0, 20.0, 25.0, 30.0)


@dataclass(frozen=True)
class DatasetSpec:
    dataset_id: str
    path: Path | None = None
    table: Path | None = None
    holdout: bool = False


@dataclass(frozen=True)
class RunConfig:
    datasets: tuple = ()
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    models: tuple = (ModelSpec(),)
    experiment: str = "within"
    seed: int = 0
    output_dir: Path = Path("out")
    folds: int = 5
    pooled: bool = False
    group_by_record: bool = False
    windows: tuple = DEFAULT_WINDOWS
    sweep_dataset: str | None = None
    jobs: int = 1

    @property
    def model(self):
        return self.models[0]

    def dataset(self, dataset_id):
        for d in self.datasets:
            if d.dataset_id == dataset_id:
                return d
        raise ConfigError(f"unknown dataset {dataset_id!r}")

    def training_datasets(self):
        return [d for d in self.datasets if not d.holdout]

    def holdout_datasets(self):
        return [d for d in self.datasets if d.holdout]

    def with_window(self, seconds):
        seg = replace(self.pipeline.segmentation, window_seconds=float(seconds))
        return replace(self, pipeline=replace(self.pipeline, segmentation=seg))


def _coerce(value, target, where):
    try:
        if target is bool:
            low = value.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(value)
        if target is int:
            return int(value)
        if target is float:
            return float(value)
        if target == "int|None":
            return None if value.strip().lower() in ("", "none") else int(value)
    except ValueError:
        raise ConfigError(f"{where}: cannot parse {value!r}") from None
    return value


def _typed_section(cls, section, where):
    kwargs = {}
    known = {f.name: f for f in fields(cls)}
    for key, value in section.items():
        if key not in known:
            raise ConfigError(f"[{where}] unknown key {key!r}")
        ftype = known[key].type
        if "None" in str(ftype):
            target = "int|None"
        else:
            target = {"int": int, "float": float, "bool": bool}.get(str(ftype), str)
        kwargs[key] = _coerce(value, target, f"[{where}] {key}")
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"[{where}] {exc}") from None


def _model_params(kind, section):
    from .ml.models import _CONFIGS

    cfg = _typed_section(_CONFIGS[kind], section, f"model.{kind}")
    explicit = {k: getattr(cfg, k) for k in section}
    explicit.pop("seed", None)
    return explicit


def parse_list(text, conv=str):
    items = [t.strip() for t in str(text).split(",") if t.strip()]
    try:
        return tuple(conv(t) for t in items)
    except ValueError:
        raise ConfigError(f"cannot parse list {text!r}") from None


def load_config(path=None, overrides=(), check_paths=True) -> RunConfig:
    """Read an INI file, apply ``section.key=value`` overrides and the seed env var."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    parser.optionxform = str
    base = Path(".")
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"{path}: config file not found")
        try:
            parser.read(path, encoding="utf-8")
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from None
        base = path.parent
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"override must look like section.key=value, got {item!r}")
        lhs, value = item.split("=", 1)
        section, key = lhs.rsplit(".", 1)
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, key, value)
    return config_from_parser(parser, base, check_paths)


def config_from_parser(parser, base=Path("."), check_paths=True) -> RunConfig:
    run = dict(parser["run"]) if parser.has_section("run") else {}
    known_run = {"experiment", "seed", "output_dir", "model", "folds", "aggregation",
                 "group_by_record", "windows", "sweep_dataset", "jobs"}
    unknown = set(run) - known_run
    if unknown:
        raise ConfigError(f"[run] unknown key(s): {', '.join(sorted(unknown))}")

    experiment = run.get("experiment", "within")
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"[run] experiment must be one of {', '.join(EXPERIMENTS)}")
    seed = _coerce(run.get("seed", "0"), int, "[run] seed")
    if os.environ.get(SEED_ENV, "").strip():
        seed = _coerce(os.environ[SEED_ENV], int, SEED_ENV)
    aggregation = run.get("aggregation", "mean")
    if aggregation not in ("mean", "pooled"):
        raise ConfigError("[run] aggregation must be 'mean' or 'pooled'")

    pipeline = PipelineConfig(
        segmentation=_typed_section(SegmentationConfig, parser["segmentation"], "segmentation")
        if parser.has_section("segmentation") else SegmentationConfig(),
        filtering=_typed_section(FilterConfig, parser["filter"], "filter")
        if parser.has_section("filter") else FilterConfig(),
        detector=_typed_section(DetectorConfig, parser["detector"], "detector")
        if parser.has_section("detector") else DetectorConfig(),
    )

    models = []
    for kind in parse_list(run.get("model", "rforest")):
        section = f"model.{kind}"
        try:
            params = _model_params(kind, parser[section]) if parser.has_section(section) else {}
            models.append(ModelSpec(kind, params))
        except KeyError:
            raise ConfigError(f"unsupported model kind {kind!r}") from None

    datasets = []
    for name in parser.sections():
        if not name.startswith("dataset."):
            continue
        sec = parser[name]
        ds_id = name.split(".", 1)[1]
        extra = set(sec) - {"path", "table", "holdout"}
        if extra:
            raise ConfigError(f"[{name}] unknown key(s): {', '.join(sorted(extra))}")
        ds_path = (base / sec["path"]) if "path" in sec else None
        table = (base / sec["table"]) if "table" in sec else None
        if ds_path is None and table is None:
            raise ConfigError(f"[{name}] needs 'path' or 'table'")
        if check_paths:
            for p in (ds_path, table):
                if p is not None and not p.exists():
                    raise ConfigError(f"[{name}] path does not exist: {p}")
        datasets.append(DatasetSpec(ds_id, ds_path, table,
                                    _coerce(sec.get("holdout", "false"), bool, f"[{name}] holdout")))

    windows = parse_list(run["windows"], float) if "windows" in run else DEFAULT_WINDOWS
    output_dir = Path(run.get("output_dir", "out"))
    if not output_dir.is_absolute():
        output_dir = base / output_dir
    return RunConfig(
        datasets=tuple(datasets),
        pipeline=pipeline,
        models=tuple(models),
        experiment=experiment,
        seed=seed,
        output_dir=output_dir,
        folds=_coerce(run.get("folds", "5"), int, "[run] folds"),
        pooled=aggregation == "pooled",
        group_by_record=_coerce(run.get("group_by_record", "false"), bool, "[run] group_by_record"),
        windows=windows,
        sweep_dataset=run.get("sweep_dataset"),
        jobs=max(1, _coerce(run.get("jobs", "1"), int, "[run] jobs")),
    )
