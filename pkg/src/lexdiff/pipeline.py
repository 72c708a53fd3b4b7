"""Shared orchestration: load data once, build feature tables, train and load
per-seed models, and assemble the cross-L1 prediction grid.

Feature tables are always built with the *model* L1's vectorizer, so a model
evaluated on another L1's test set sees exactly the features it was trained
on (its own frozen n-gram vocabulary applied to the target L1's word pairs).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis, corpus, features, model as model_mod
from .config import RunConfig
from .errors import DataError
from .explain import group_importance
from .resources import ResourceBundle, load_resource_bundle
from .similarity import CharVectorizer

logger = logging.getLogger(__name__)


@dataclass
class DataContext:
    cfg: RunConfig
    bundle: ResourceBundle
    pos_map: dict
    _splits: dict = field(default_factory=dict)
    _vectorizers: dict = field(default_factory=dict)

    def split(self, l1: str, split: str) -> corpus.KvlSplit:
        key = (l1, split)
        if key not in self._splits:
            path = self.cfg.kvl_path(l1, split)
            self._splits[key] = corpus.parse_kvl(path, l1, split, self.cfg.column_map)
        return self._splits[key]

    def vectorizer(self, l1: str) -> CharVectorizer:
        if l1 not in self._vectorizers:
            self._vectorizers[l1] = features.fit_vectorizer(self.split(l1, "train"))
        return self._vectorizers[l1]


def load_context(cfg: RunConfig) -> DataContext:
    bundle = load_resource_bundle(cfg.resource_config())
    pos_map = corpus.load_pos_map(cfg.pos_map_path) if cfg.pos_map_path else dict(corpus.DEFAULT_POS_MAP)
    return DataContext(cfg=cfg, bundle=bundle, pos_map=pos_map)


def extract(ctx: DataContext, model_l1: str, data_l1: str, split: str):
    """Feature rows and table for one split, using the model L1's vectorizer."""
    sp = ctx.split(data_l1, split)
    vec = ctx.vectorizer(model_l1)
    rows = features.extract_split(sp, ctx.bundle, vec, ctx.pos_map)
    return rows, features.rows_to_table(rows), sp


def gold_vector(sp: corpus.KvlSplit) -> np.ndarray:
    return features.targets_array(sp)


# ---------------------------------------------------------------------------
# Model artifacts on disk


def model_dir(out_dir, l1: str) -> Path:
    return Path(out_dir) / "models" / l1


def model_path(out_dir, l1: str, seed: int) -> Path:
    return model_dir(out_dir, l1) / f"seed_{seed}.json"


def vectorizer_path(out_dir, l1: str) -> Path:
    return Path(out_dir) / "vectorizers" / f"{l1}.json"


def train_l1(ctx: DataContext, l1: str, out_dir, seeds=None) -> list:
    """Train one ensemble per seed and persist them with the L1's vectorizer."""
    seeds = tuple(seeds if seeds is not None else ctx.cfg.seeds)
    _, table, sp = extract(ctx, l1, l1, "train")
    y = gold_vector(sp)
    vec_path = vectorizer_path(out_dir, l1)
    vec_path.parent.mkdir(parents=True, exist_ok=True)
    model_mod.save_vectorizer(ctx.vectorizer(l1), vec_path)
    paths = []
    for seed in seeds:
        cfg = model_mod.GbdtConfig(
            tree_depth=ctx.cfg.model.tree_depth,
            learning_rate=ctx.cfg.model.learning_rate,
            n_iterations=ctx.cfg.model.n_iterations,
            l2_leaf_reg=ctx.cfg.model.l2_leaf_reg,
            seed=seed,
            max_bins=ctx.cfg.model.max_bins,
            cat_smoothing=ctx.cfg.model.cat_smoothing,
        )
        ensemble = model_mod.train_gbdt(table, y, cfg)
        path = model_path(out_dir, l1, seed)
        path.parent.mkdir(parents=True, exist_ok=True)
        model_mod.save_model(ensemble, path)
        logger.info("trained %s seed %d: %d trees -> %s", l1, seed, len(ensemble.trees), path)
        paths.append(path)
    return paths


def load_models(out_dir, l1: str, seeds=None) -> dict:
    """seed -> ensemble for every trained model of one L1 (or the given seeds)."""
    directory = model_dir(out_dir, l1)
    if seeds is not None:
        paths = [model_path(out_dir, l1, s) for s in seeds]
        missing = [p for p in paths if not p.exists()]
        if missing:
            raise DataError(f"missing trained models: {[str(p) for p in missing]}; run `train` first")
    else:
        paths = sorted(directory.glob("seed_*.json")) if directory.exists() else []
        if not paths:
            raise DataError(f"no trained models under {directory}; run `train` first")
    out = {}
    for p in paths:
        ensemble = model_mod.load_model(p)
        out[ensemble.config.seed] = ensemble
    return out


def load_saved_vectorizer(out_dir, l1: str) -> CharVectorizer:
    path = vectorizer_path(out_dir, l1)
    if not path.exists():
        raise DataError(f"missing vectorizer {path}; run `train` first")
    return model_mod.load_vectorizer(path)


# ---------------------------------------------------------------------------
# Cross-L1 prediction grid


def prediction_grid(ctx: DataContext, out_dir, split: str = "test") -> tuple:
    """predictions[(l1_train, l1_test)][seed] plus gold[l1_test] for `split`."""
    predictions = {}
    gold = {}
    for l1_test in ctx.cfg.languages:
        gold[l1_test] = gold_vector(ctx.split(l1_test, split))
    for l1_train in ctx.cfg.languages:
        models = load_models(out_dir, l1_train)
        for l1_test in ctx.cfg.languages:
            _, table, _ = extract(ctx, l1_train, l1_test, split)
            per_seed = {
                seed: model_mod.predict(ensemble, table) for seed, ensemble in models.items()
            }
            predictions[(l1_train, l1_test)] = per_seed
    return predictions, gold


# ---------------------------------------------------------------------------
# Seed aggregation of attributions


@dataclass(frozen=True)
class MedianShares:
    """Per-item shares/attributions aggregated as medians across seeds."""

    item_id: str
    group_shares: dict
    phi: dict
    base_value: float
    degenerate: bool = False


def median_attributions(attrs_by_seed) -> list:
    """Componentwise median across seeds; shares recomputed from median phi."""
    if not attrs_by_seed:
        return []
    n_items = len(attrs_by_seed[0])
    out = []
    for i in range(n_items):
        per_seed = [attrs[i] for attrs in attrs_by_seed]
        item_id = per_seed[0].item_id
        if any(a.item_id != item_id for a in per_seed):
            raise ValueError("attribution lists are not aligned across seeds")
        phi = {
            name: float(np.median([a.phi[name] for a in per_seed]))
            for name in per_seed[0].phi
        }
        shares, degenerate = group_importance(phi)
        out.append(
            MedianShares(
                item_id=item_id,
                group_shares=shares,
                phi=phi,
                base_value=float(np.median([a.base_value for a in per_seed])),
                degenerate=degenerate,
            )
        )
    return out


def dispersion_inputs(ctx: DataContext, l1: str, per_seed_predictions: dict, split: str = "test"):
    """Median-across-seeds prediction errors and POS-competition flags."""
    sp = ctx.split(l1, split)
    gold = gold_vector(sp)
    stacked = np.vstack([per_seed_predictions[s] for s in sorted(per_seed_predictions)])
    pred = np.median(stacked, axis=0)
    if ctx.bundle.frequency is None:
        raise DataError("POS-competition flags need the frequency resource")
    flags = np.asarray(
        [corpus.pos_competition_flag(it, ctx.bundle.frequency, ctx.pos_map) for it in sp.items],
        dtype=bool,
    )
    return gold - pred, flags


def simplex_for_l1(attrs, sp: corpus.KvlSplit) -> list:
    golds = [it.difficulty for it in sp.items]
    return analysis.simplex_points(attrs, golds)
