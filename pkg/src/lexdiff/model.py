"""Boosted regression trees and the linear baseline.

The booster grows level-wise binary trees of depth 7 on 255 quantile
histogram bins, minimizing squared loss: each split maximizes
``GL^2/(nL+lam) + GR^2/(nR+lam) - G^2/(n+lam)`` over residual sums G and leaf
values are ``sum(residuals) / (n_leaf + lam)``.  Categorical features enter
through smoothed target-mean encoding fitted on the training fold; the two
seed-dependent ingredients are a row permutation (floating-point accumulation
order, which breaks split ties) and a tiny jitter on bin boundaries.

Trained ensembles are immutable, safe for concurrent prediction, and
serialize to a documented JSON layout (see ``save_model``).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import SchemaMismatch
from .features import CATEGORICAL_FEATURES, FEATURE_NAMES, NUMERIC_FEATURES, FeatureTable
from .similarity import CharVectorizer

MODEL_FORMAT = "lexdiff-gbdt"
MODEL_VERSION = 1
_MIN_GAIN = 1e-12


@dataclass(frozen=True)
class GbdtConfig:
    tree_depth: int = 7
    learning_rate: float = 0.017
    n_iterations: int = 2400
    l2_leaf_reg: float = 0.8
    seed: int = 1
    max_bins: int = 255
    cat_smoothing: float = 10.0

    def __post_init__(self):
        if self.tree_depth < 1:
            raise ValueError("tree_depth must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.l2_leaf_reg < 0:
            raise ValueError("l2_leaf_reg must be >= 0")
        if self.max_bins < 2:
            raise ValueError("max_bins must be >= 2")


@dataclass(frozen=True)
class Tree:
    """One regression tree in flat-array form.

    ``feature[i] == -1`` marks a leaf.  Internal nodes route ``x < threshold``
    to ``left``, NaN to the default branch.  ``value`` holds the leaf value at
    leaves and the cover-weighted subtree expectation at internal nodes;
    ``cover`` is the number of training rows that reached the node.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    default_left: np.ndarray
    value: np.ndarray
    cover: np.ndarray


@dataclass(frozen=True)
class TargetEncoder:
    """Smoothed target-mean encoding: (sum_y(c) + a*mean_y) / (n_c + a)."""

    categories: dict  # category -> encoded value
    default: float  # global target mean, used for unseen categories

    def transform(self, values) -> np.ndarray:
        return np.asarray([self.categories.get(v, self.default) for v in values], dtype=np.float64)


def fit_target_encoder(values, y: np.ndarray, smoothing: float) -> TargetEncoder:
    mean = float(np.mean(y))
    sums, counts = {}, {}
    for v, t in zip(values, y):
        sums[v] = sums.get(v, 0.0) + float(t)
        counts[v] = counts.get(v, 0) + 1
    categories = {v: (sums[v] + smoothing * mean) / (counts[v] + smoothing) for v in sums}
    return TargetEncoder(categories=categories, default=mean)


@dataclass(frozen=True)
class TreeEnsemble:
    config: GbdtConfig
    feature_names: tuple
    schema_hash: str
    base_score: float
    trees: tuple  # of Tree
    encoders: dict  # categorical feature name -> TargetEncoder
    medians: dict  # numeric feature name -> training median

    @property
    def n_features(self) -> int:
        return len(self.feature_names)


# ---------------------------------------------------------------------------
# Design-matrix assembly (shared by booster and ridge)


def _check_schema(table: FeatureTable, schema_hash: str) -> None:
    if table.schema_hash != schema_hash:
        raise SchemaMismatch(
            f"feature table schema {table.schema_hash} does not match model schema {schema_hash}"
        )


def _design_matrix(table: FeatureTable, encoders: dict, medians: dict) -> np.ndarray:
    """(n, 24) float64 in canonical feature order: imputed numerics plus
    target-encoded categoricals."""
    n = len(table)
    X = np.empty((n, len(FEATURE_NAMES)), dtype=np.float64)
    for j, name in enumerate(FEATURE_NAMES):
        if name in CATEGORICAL_FEATURES:
            X[:, j] = encoders[name].transform(table.categorical[name])
        else:
            col = table.numeric[:, NUMERIC_FEATURES.index(name)].copy()
            nan = np.isnan(col)
            if nan.any():
                col[nan] = medians[name]
            X[:, j] = col
    return X


def _fit_medians(table: FeatureTable) -> dict:
    medians = {}
    for i, name in enumerate(NUMERIC_FEATURES):
        col = table.numeric[:, i]
        finite = col[~np.isnan(col)]
        medians[name] = float(np.median(finite)) if finite.size else 0.0
    return medians


# ---------------------------------------------------------------------------
# Histogram binning


def _bin_column(x: np.ndarray, max_bins: int, rng: np.random.Generator):
    """Quantile bin edges (jittered per seed) and per-row bin codes."""
    qs = np.linspace(0.0, 1.0, max_bins + 1)[1:-1]
    edges = np.unique(np.quantile(x, qs))
    if edges.size:
        span = float(x.max() - x.min())
        scale = 1e-9 * (span if span > 0 else 1.0)
        edges = np.sort(edges + rng.normal(0.0, scale, size=edges.size))
    codes = np.searchsorted(edges, x, side="right")
    return edges, codes.astype(np.int32)


# ---------------------------------------------------------------------------
# Tree growth.  The kernel runs depth-first over contiguous row segments with
# per-node (feature x bin) histograms; numba compiles it into tight loops.


def _fill_internal_expectations(tree: Tree) -> None:
    # Children always have larger ids than their parent, so one reverse sweep
    # suffices to propagate cover-weighted expectations upward.
    for i in range(len(tree.feature) - 1, -1, -1):
        if tree.feature[i] >= 0:
            l, r = tree.left[i], tree.right[i]
            cl, cr = tree.cover[l], tree.cover[r]
            tree.value[i] = (cl * tree.value[l] + cr * tree.value[r]) / (cl + cr)


def _grow_tree_kernel(codes, res, edges_flat, edges_offset, n_bins, max_depth, lam, min_gain):
    n, n_feat = codes.shape
    max_nodes = 2 ** (max_depth + 1) - 1
    feature = np.full(max_nodes, -1, dtype=np.int64)
    threshold = np.zeros(max_nodes)
    left = np.full(max_nodes, -1, dtype=np.int64)
    right = np.full(max_nodes, -1, dtype=np.int64)
    default_left = np.zeros(max_nodes, dtype=np.bool_)
    value = np.zeros(max_nodes)
    cover = np.zeros(max_nodes)
    leaf_of_row = np.zeros(n, dtype=np.int64)

    row_idx = np.arange(n)
    scratch = np.empty(n, dtype=np.int64)
    hs = np.zeros((n_feat, n_bins))
    hc = np.zeros((n_feat, n_bins), dtype=np.int64)

    total = 0.0
    for i in range(n):
        total += res[i]
    value[0] = total / (n + lam)
    cover[0] = n
    n_nodes = 1

    stack_node = np.empty(max_nodes, dtype=np.int64)
    stack_start = np.empty(max_nodes, dtype=np.int64)
    stack_end = np.empty(max_nodes, dtype=np.int64)
    stack_depth = np.empty(max_nodes, dtype=np.int64)
    stack_g = np.empty(max_nodes)
    sp = 0
    stack_node[0], stack_start[0], stack_end[0], stack_depth[0], stack_g[0] = 0, 0, n, 0, total
    sp = 1

    while sp > 0:
        sp -= 1
        node = stack_node[sp]
        start = stack_start[sp]
        end = stack_end[sp]
        depth = stack_depth[sp]
        g = stack_g[sp]
        cnt = end - start

        split_f = -1
        split_b = -1
        if depth < max_depth and cnt >= 2:
            for f in range(n_feat):
                nb = edges_offset[f + 1] - edges_offset[f]
                for b in range(nb + 1):
                    hs[f, b] = 0.0
                    hc[f, b] = 0
            for i in range(start, end):
                r = row_idx[i]
                for f in range(n_feat):
                    b = codes[r, f]
                    hs[f, b] += res[r]
                    hc[f, b] += 1

            base = g * g / (cnt + lam)
            best_gain = min_gain
            best_gl = 0.0
            best_nl = 0
            for f in range(n_feat):
                nb = edges_offset[f + 1] - edges_offset[f]
                cg = 0.0
                cn = 0
                for b in range(nb):
                    cg += hs[f, b]
                    cn += hc[f, b]
                    if cn == 0:
                        continue
                    if cn == cnt:
                        break
                    gain = cg * cg / (cn + lam) + (g - cg) * (g - cg) / (cnt - cn + lam) - base
                    if gain > best_gain:
                        best_gain = gain
                        split_f = f
                        split_b = b
                        best_gl = cg
                        best_nl = cn

        if split_f < 0:
            for i in range(start, end):
                leaf_of_row[row_idx[i]] = node
            continue

        # stable partition of the segment on the chosen bin
        nl = 0
        nr = 0
        for i in range(start, end):
            r = row_idx[i]
            if codes[r, split_f] <= split_b:
                row_idx[start + nl] = r
                nl += 1
            else:
                scratch[nr] = r
                nr += 1
        for j in range(nr):
            row_idx[start + nl + j] = scratch[j]

        lid = n_nodes
        rid = n_nodes + 1
        n_nodes += 2
        gl = best_gl
        gr = g - gl
        feature[node] = split_f
        threshold[node] = edges_flat[edges_offset[split_f] + split_b]
        left[node] = lid
        right[node] = rid
        default_left[node] = nl >= nr
        value[lid] = gl / (nl + lam)
        cover[lid] = nl
        value[rid] = gr / (nr + lam)
        cover[rid] = nr
        stack_node[sp], stack_start[sp], stack_end[sp], stack_depth[sp], stack_g[sp] = (
            rid, start + nl, end, depth + 1, gr)
        sp += 1
        stack_node[sp], stack_start[sp], stack_end[sp], stack_depth[sp], stack_g[sp] = (
            lid, start, start + nl, depth + 1, gl)
        sp += 1

    # cover-weighted subtree expectations for internal nodes
    for i in range(n_nodes - 1, -1, -1):
        if feature[i] >= 0:
            l = left[i]
            r = right[i]
            value[i] = (cover[l] * value[l] + cover[r] * value[r]) / (cover[l] + cover[r])

    return (
        feature[:n_nodes], threshold[:n_nodes], left[:n_nodes], right[:n_nodes],
        default_left[:n_nodes], value[:n_nodes], cover[:n_nodes], leaf_of_row,
    )


try:
    import numba

    _grow_tree_kernel = numba.njit(cache=True)(_grow_tree_kernel)
except ImportError:  # pragma: no cover
    pass


def _grow_tree(codes, edges_flat, edges_offset, n_bins, residuals, cfg: GbdtConfig) -> tuple:
    """Grow one tree; returns (Tree, leaf value per row)."""
    feature, threshold, left, right, default_left, value, cover, leaf_of_row = _grow_tree_kernel(
        codes, residuals, edges_flat, edges_offset, n_bins,
        cfg.tree_depth, cfg.l2_leaf_reg, _MIN_GAIN,
    )
    tree = Tree(
        feature=feature.astype(np.int32),
        threshold=threshold.copy(),
        left=left.astype(np.int32),
        right=right.astype(np.int32),
        default_left=default_left.copy(),
        value=value.copy(),
        cover=cover.copy(),
    )
    return tree, value[leaf_of_row]


def train_gbdt(table: FeatureTable, targets: np.ndarray, cfg: GbdtConfig) -> TreeEnsemble:
    """Fit the boosted ensemble; deterministic for fixed (data, config, seed)."""
    y = np.asarray(targets, dtype=np.float64)
    if len(table) != y.size:
        raise ValueError(f"{len(table)} feature rows but {y.size} targets")
    if y.size < 2:
        raise ValueError("need at least 2 training rows")
    if not np.all(np.isfinite(y)):
        raise ValueError("targets must be finite")

    encoders = {
        name: fit_target_encoder(table.categorical[name], y, cfg.cat_smoothing)
        for name in CATEGORICAL_FEATURES
    }
    medians = _fit_medians(table)
    X = _design_matrix(table, encoders, medians)

    rng = np.random.default_rng(cfg.seed)
    perm = rng.permutation(y.size)
    X = X[perm]
    y = y[perm]

    base = float(np.mean(y))
    ensemble = TreeEnsemble(
        config=cfg,
        feature_names=FEATURE_NAMES,
        schema_hash=table.schema_hash,
        base_score=base,
        trees=(),
        encoders=encoders,
        medians=medians,
    )
    if np.all(y == y[0]):
        return ensemble  # DegenerateTarget case: base score only

    n_feat = X.shape[1]
    edges = []
    codes = np.empty_like(X, dtype=np.int64)
    for j in range(n_feat):
        e, c = _bin_column(X[:, j], cfg.max_bins, rng)
        edges.append(e)
        codes[:, j] = c
    n_bins = max(int(codes.max()) + 2, 2)
    edges_flat = np.concatenate(edges) if edges else np.zeros(0)
    edges_offset = np.zeros(n_feat + 1, dtype=np.int64)
    np.cumsum([e.size for e in edges], out=edges_offset[1:])

    pred = np.full(y.size, base)
    trees = []
    for _ in range(cfg.n_iterations):
        residuals = y - pred
        if np.all(residuals == 0.0):
            break
        tree, leaf_of_row = _grow_tree(codes, edges_flat, edges_offset, n_bins, residuals, cfg)
        trees.append(tree)
        pred += cfg.learning_rate * leaf_of_row

    return replace(ensemble, trees=tuple(trees))


# ---------------------------------------------------------------------------
# Prediction


def predict_matrix(ensemble: TreeEnsemble, X: np.ndarray) -> np.ndarray:
    """base_score + lr * sum of leaf values, traversed on raw feature values."""
    n = X.shape[0]
    out = np.zeros(n, dtype=np.float64)
    rows = np.arange(n)
    for tree in ensemble.trees:
        node = np.zeros(n, dtype=np.int32)
        for _ in range(ensemble.config.tree_depth + 1):
            internal = tree.feature[node] >= 0
            if not internal.any():
                break
            idx = node[internal]
            xv = X[rows[internal], tree.feature[idx]]
            nan = np.isnan(xv)
            go_left = np.where(nan, tree.default_left[idx], xv < tree.threshold[idx])
            node[internal] = np.where(go_left, tree.left[idx], tree.right[idx])
        out += tree.value[node]
    return ensemble.base_score + ensemble.config.learning_rate * out


def predict(ensemble: TreeEnsemble, table: FeatureTable) -> np.ndarray:
    _check_schema(table, ensemble.schema_hash)
    X = _design_matrix(table, ensemble.encoders, ensemble.medians)
    return predict_matrix(ensemble, X)


# ---------------------------------------------------------------------------
# Serialization


def save_model(ensemble: TreeEnsemble, path) -> None:
    """Versioned JSON dump: config, encoders, medians, flat tree arrays."""
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "config": {
            "tree_depth": ensemble.config.tree_depth,
            "learning_rate": ensemble.config.learning_rate,
            "n_iterations": ensemble.config.n_iterations,
            "l2_leaf_reg": ensemble.config.l2_leaf_reg,
            "seed": ensemble.config.seed,
            "max_bins": ensemble.config.max_bins,
            "cat_smoothing": ensemble.config.cat_smoothing,
        },
        "feature_names": list(ensemble.feature_names),
        "schema_hash": ensemble.schema_hash,
        "base_score": ensemble.base_score,
        "encoders": {
            name: {"categories": enc.categories, "default": enc.default}
            for name, enc in sorted(ensemble.encoders.items())
        },
        "medians": ensemble.medians,
        "trees": [
            {
                "feature": t.feature.tolist(),
                "threshold": t.threshold.tolist(),
                "left": t.left.tolist(),
                "right": t.right.tolist(),
                "default_left": t.default_left.astype(int).tolist(),
                "value": t.value.tolist(),
                "cover": t.cover.tolist(),
            }
            for t in ensemble.trees
        ],
    }
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump(doc, fh, separators=(",", ":"), sort_keys=True)


def load_model(path) -> TreeEnsemble:
    with Path(path).open("r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != MODEL_FORMAT or doc.get("version") != MODEL_VERSION:
        raise SchemaMismatch(f"{path}: not a {MODEL_FORMAT} v{MODEL_VERSION} file")
    trees = tuple(
        Tree(
            feature=np.asarray(t["feature"], dtype=np.int32),
            threshold=np.asarray(t["threshold"], dtype=np.float64),
            left=np.asarray(t["left"], dtype=np.int32),
            right=np.asarray(t["right"], dtype=np.int32),
            default_left=np.asarray(t["default_left"], dtype=bool),
            value=np.asarray(t["value"], dtype=np.float64),
            cover=np.asarray(t["cover"], dtype=np.float64),
        )
        for t in doc["trees"]
    )
    return TreeEnsemble(
        config=GbdtConfig(**doc["config"]),
        feature_names=tuple(doc["feature_names"]),
        schema_hash=doc["schema_hash"],
        base_score=doc["base_score"],
        trees=trees,
        encoders={
            name: TargetEncoder(categories=spec["categories"], default=spec["default"])
            for name, spec in doc["encoders"].items()
        },
        medians=doc["medians"],
    )


def save_vectorizer(vec: CharVectorizer, path) -> None:
    doc = {"n_docs": vec.n_docs, "df": {g: vec.df[i] for g, i in vec.vocabulary.items()}}
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump(doc, fh, separators=(",", ":"), sort_keys=True, ensure_ascii=False)


def load_vectorizer(path) -> CharVectorizer:
    with Path(path).open("r", encoding="utf-8") as fh:
        doc = json.load(fh)
    grams = sorted(doc["df"])
    return CharVectorizer(
        vocabulary={g: i for i, g in enumerate(grams)},
        df=tuple(doc["df"][g] for g in grams),
        n_docs=doc["n_docs"],
    )


# ---------------------------------------------------------------------------
# Ridge baseline


@dataclass(frozen=True)
class RidgeModel:
    l2: float
    intercept: float
    weights: np.ndarray
    column_means: np.ndarray
    numeric_means: np.ndarray
    numeric_stds: np.ndarray
    categories: dict  # categorical feature name -> tuple of known categories
    medians: dict
    schema_hash: str = ""


def _ridge_design(table: FeatureTable, model: RidgeModel) -> np.ndarray:
    n = len(table)
    numeric = np.empty((n, len(NUMERIC_FEATURES)))
    for i, name in enumerate(NUMERIC_FEATURES):
        col = table.numeric[:, i].copy()
        nan = np.isnan(col)
        if nan.any():
            col[nan] = model.medians[name]
        numeric[:, i] = col
    numeric = (numeric - model.numeric_means) / model.numeric_stds

    blocks = [numeric]
    for name in CATEGORICAL_FEATURES:
        cats = model.categories[name]
        index = {c: i for i, c in enumerate(cats)}
        onehot = np.zeros((n, len(cats)))
        for r, v in enumerate(table.categorical[name]):
            c = index.get(v)
            if c is not None:
                onehot[r, c] = 1.0
        blocks.append(onehot)
    return np.hstack(blocks)


def train_ridge(table: FeatureTable, targets: np.ndarray, l2: float = 1.0) -> RidgeModel:
    """Closed-form ridge on standardized numerics plus one-hot categoricals."""
    y = np.asarray(targets, dtype=np.float64)
    medians = _fit_medians(table)
    numeric = np.empty((len(table), len(NUMERIC_FEATURES)))
    for i, name in enumerate(NUMERIC_FEATURES):
        col = table.numeric[:, i].copy()
        nan = np.isnan(col)
        if nan.any():
            col[nan] = medians[name]
        numeric[:, i] = col
    means = numeric.mean(axis=0)
    stds = numeric.std(axis=0)
    stds[stds == 0] = 1.0

    categories = {name: tuple(sorted(set(table.categorical[name]))) for name in CATEGORICAL_FEATURES}
    stub = RidgeModel(
        l2=l2,
        intercept=0.0,
        weights=np.zeros(0),
        column_means=np.zeros(0),
        numeric_means=means,
        numeric_stds=stds,
        categories=categories,
        medians=medians,
        schema_hash=table.schema_hash,
    )
    X = _ridge_design(table, stub)
    col_means = X.mean(axis=0)
    Xc = X - col_means
    yc = y - y.mean()
    A = Xc.T @ Xc + l2 * np.eye(X.shape[1])
    w = np.linalg.solve(A, Xc.T @ yc)
    return replace(stub, intercept=float(y.mean()), weights=w, column_means=col_means)


def predict_ridge(model: RidgeModel, table: FeatureTable) -> np.ndarray:
    _check_schema(table, model.schema_hash)
    X = _ridge_design(table, model)
    return (X - model.column_means) @ model.weights + model.intercept
