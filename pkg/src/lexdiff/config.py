"""Run configuration: one TOML file, overridable by CLI flags.

A run is fully reproducible from its config: resource paths, vocabulary-item
paths per L1/split, output directory, seeds, and model hyperparameters
(defaulting to the published values).
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .corpus import LANGUAGES
from .errors import ConfigError
from .evaluation import EVAL_SEEDS
from .model import GbdtConfig

RESOURCE_KINDS = ("frequency", "aoa", "cefr", "efllex", "embedding_norms", "senses")
SPLITS = ("train", "dev", "test")


@dataclass(frozen=True)
class RunConfig:
    resources: dict  # kind -> path (str), absent kinds omitted
    optional_resources: tuple
    kvl: dict  # (l1, split) -> path
    out_dir: str
    seeds: tuple = EVAL_SEEDS
    model: GbdtConfig = field(default_factory=GbdtConfig)
    ridge_l2: float = 1.0
    column_map: dict = field(default_factory=dict)
    pos_map_path: str = ""
    languages: tuple = LANGUAGES
    bootstrap_resamples: int = 1000
    analysis_seed: int = 0
    service_host: str = "127.0.0.1"
    service_port: int = 8000
    service_ui_origin: str = "*"
    inflections_path: str = ""
    extension_paths: dict = field(default_factory=dict)  # l1 -> path
    annotate_size_limit: int = 20000

    def resource_config(self) -> dict:
        """Paths for the bundle loader, dropping optional files that are absent."""
        cfg = {}
        for kind, path in self.resources.items():
            if not Path(path).exists():
                if kind in self.optional_resources:
                    continue
                raise ConfigError(f"resource file for {kind!r} not found: {path}")
            cfg[kind] = path
        return cfg

    def kvl_path(self, l1: str, split: str) -> Path:
        key = (l1, split)
        if key not in self.kvl:
            raise ConfigError(f"no vocabulary file configured for l1={l1!r} split={split!r}")
        path = Path(self.kvl[key])
        if not path.exists():
            raise ConfigError(f"vocabulary file not found: {path}")
        return path

    def validate(self) -> None:
        for l1 in self.languages:
            if l1 not in LANGUAGES:
                raise ConfigError(f"unknown language {l1!r}; expected subset of {LANGUAGES}")
        for kind in self.resources:
            if kind not in RESOURCE_KINDS:
                raise ConfigError(f"unknown resource kind {kind!r}")
        for (l1, split) in self.kvl:
            if l1 not in LANGUAGES or split not in SPLITS:
                raise ConfigError(f"bad vocabulary key ({l1!r}, {split!r})")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if self.annotate_size_limit < 1:
            raise ConfigError("annotate_size_limit must be positive")


def _model_config(section: dict) -> GbdtConfig:
    known = {
        "tree_depth", "learning_rate", "n_iterations", "l2_leaf_reg",
        "seed", "max_bins", "cat_smoothing",
    }
    extra = set(section) - known
    if extra:
        raise ConfigError(f"unknown model options: {sorted(extra)}")
    try:
        return GbdtConfig(**section)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad model configuration: {exc}") from exc


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    with path.open("rb") as fh:
        try:
            doc = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc

    base = path.parent

    def resolve(p):
        p = Path(p)
        return str(p if p.is_absolute() else base / p)

    resources = {k: resolve(v) for k, v in doc.get("resources", {}).items() if k != "optional"}
    optional = tuple(doc.get("resources", {}).get("optional", ()))

    kvl = {}
    data = doc.get("data", {})
    for l1, splits in data.get("kvl", {}).items():
        for split, p in splits.items():
            kvl[(l1, split)] = resolve(p)

    out = doc.get("output", {}).get("dir", "out")
    service = doc.get("service", {})
    extension = {l1: resolve(p) for l1, p in service.get("extension", {}).items()}

    cfg = RunConfig(
        resources=resources,
        optional_resources=optional,
        kvl=kvl,
        out_dir=resolve(out),
        seeds=tuple(doc.get("eval", {}).get("seeds", EVAL_SEEDS)),
        model=_model_config(doc.get("model", {})),
        ridge_l2=float(doc.get("eval", {}).get("ridge_l2", 1.0)),
        column_map=dict(data.get("column_map", {})),
        pos_map_path=resolve(data["pos_map"]) if "pos_map" in data else "",
        languages=tuple(data.get("languages", LANGUAGES)),
        bootstrap_resamples=int(doc.get("analysis", {}).get("bootstrap_resamples", 1000)),
        analysis_seed=int(doc.get("analysis", {}).get("seed", 0)),
        service_host=service.get("host", "127.0.0.1"),
        service_port=int(service.get("port", 8000)),
        service_ui_origin=service.get("ui_origin", "*"),
        inflections_path=resolve(service["inflections"]) if "inflections" in service else "",
        extension_paths=extension,
        annotate_size_limit=int(service.get("annotate_size_limit", 20000)),
    )
    cfg.validate()
    return cfg


def override(cfg: RunConfig, **changes) -> RunConfig:
    """Flag-level overrides take precedence over the config file."""
    changes = {k: v for k, v in changes.items() if v is not None}
    if not changes:
        return cfg
    out = replace(cfg, **changes)
    out.validate()
    return out
