"""Exact per-feature Shapley attribution for tree ensembles.

Uses the path-dependent polynomial-time algorithm: conditional expectations
are weighted by training cover counts stored on every node, so no background
dataset is needed.  Attributions satisfy local accuracy (base value plus the
sum of per-feature values equals the prediction) and are additive across
trees; a feature never split on receives exactly zero.

Per-item group shares divide the sum of absolute Shapley values within each
feature group by the total over all features; an all-zero attribution is
reported as uniform shares with a degenerate flag.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .features import FEATURE_GROUPS, FEATURE_NAMES, GROUP_NAMES, FeatureRow, FeatureTable, rows_to_table
from .model import TreeEnsemble, _check_schema, _design_matrix


@dataclass(frozen=True)
class Attribution:
    item_id: str
    base_value: float
    phi: dict  # feature name -> signed Shapley value
    group_shares: dict  # group name -> share in [0, 1], summing to 1
    degenerate: bool = False

    @property
    def prediction(self) -> float:
        return self.base_value + sum(self.phi.values())


# ---------------------------------------------------------------------------
# Path-dependent kernel.  The unique path is kept in flat buffers sliced per
# recursion level; numba compiles the hot functions when available
# (set LEXDIFF_NO_NUMBA=1 to force the pure-Python fallback).


def _extend_path(feat_idx, zero_frac, one_frac, pweight, depth, pz, po, pi):
    feat_idx[depth] = pi
    zero_frac[depth] = pz
    one_frac[depth] = po
    pweight[depth] = 1.0 if depth == 0 else 0.0
    for i in range(depth - 1, -1, -1):
        pweight[i + 1] += po * pweight[i] * (i + 1.0) / (depth + 1.0)
        pweight[i] = pz * pweight[i] * (depth - i) / (depth + 1.0)


def _unwind_path(feat_idx, zero_frac, one_frac, pweight, depth, index):
    po = one_frac[index]
    pz = zero_frac[index]
    carry = pweight[depth]
    for i in range(depth - 1, -1, -1):
        if po != 0.0:
            tmp = pweight[i]
            pweight[i] = carry * (depth + 1.0) / ((i + 1.0) * po)
            carry = tmp - pweight[i] * pz * (depth - i) / (depth + 1.0)
        else:
            pweight[i] = pweight[i] * (depth + 1.0) / (pz * (depth - i))
    for i in range(index, depth):
        feat_idx[i] = feat_idx[i + 1]
        zero_frac[i] = zero_frac[i + 1]
        one_frac[i] = one_frac[i + 1]


def _unwound_sum(zero_frac, one_frac, pweight, depth, index):
    po = one_frac[index]
    pz = zero_frac[index]
    carry = pweight[depth]
    total = 0.0
    for i in range(depth - 1, -1, -1):
        if po != 0.0:
            tmp = carry * (depth + 1.0) / ((i + 1.0) * po)
            total += tmp
            carry = pweight[i] - tmp * pz * (depth - i) / (depth + 1.0)
        else:
            total += pweight[i] * (depth + 1.0) / (pz * (depth - i))
    return total


def _shap_recurse(
    feature, threshold, left, right, default_left, value, cover,
    x, phi,
    node, depth,
    p_feat, p_zero, p_one, p_weight,
    parent_zero, parent_one, parent_feat,
):
    feat_idx = p_feat[depth:]
    zero_frac = p_zero[depth:]
    one_frac = p_one[depth:]
    pweight = p_weight[depth:]
    for i in range(depth):
        feat_idx[i] = p_feat[i]
        zero_frac[i] = p_zero[i]
        one_frac[i] = p_one[i]
        pweight[i] = p_weight[i]
    _extend_path(feat_idx, zero_frac, one_frac, pweight, depth, parent_zero, parent_one, parent_feat)

    f = feature[node]
    if f < 0:  # leaf
        for i in range(1, depth + 1):
            w = _unwound_sum(zero_frac, one_frac, pweight, depth, i)
            phi[feat_idx[i]] += w * (one_frac[i] - zero_frac[i]) * value[node]
        return

    xv = x[f]
    if math.isnan(xv):
        hot = left[node] if default_left[node] else right[node]
    elif xv < threshold[node]:
        hot = left[node]
    else:
        hot = right[node]
    cold = right[node] if hot == left[node] else left[node]
    hot_zero = cover[hot] / cover[node]
    cold_zero = cover[cold] / cover[node]
    in_zero = 1.0
    in_one = 1.0

    # A repeated split on the same feature is undone and redone at this node.
    path_index = 0
    while path_index <= depth:
        if feat_idx[path_index] == f:
            break
        path_index += 1
    if path_index != depth + 1:
        in_zero = zero_frac[path_index]
        in_one = one_frac[path_index]
        _unwind_path(feat_idx, zero_frac, one_frac, pweight, depth, path_index)
        depth -= 1

    _shap_recurse(
        feature, threshold, left, right, default_left, value, cover,
        x, phi,
        hot, depth + 1,
        feat_idx, zero_frac, one_frac, pweight,
        hot_zero * in_zero, in_one, f,
    )
    _shap_recurse(
        feature, threshold, left, right, default_left, value, cover,
        x, phi,
        cold, depth + 1,
        feat_idx, zero_frac, one_frac, pweight,
        cold_zero * in_zero, 0.0, f,
    )


def _tree_phi_rows(
    feature, threshold, left, right, default_left, value, cover,
    X, phi_out, path_size,
):
    """Accumulate one tree's raw attribution for every row of ``X``."""
    n = X.shape[0]
    p_feat = np.zeros(path_size, dtype=np.int64)
    p_zero = np.zeros(path_size)
    p_one = np.zeros(path_size)
    p_weight = np.zeros(path_size)
    for r in range(n):
        _shap_recurse(
            feature, threshold, left, right, default_left, value, cover,
            X[r], phi_out[r],
            0, 0,
            p_feat, p_zero, p_one, p_weight,
            1.0, 1.0, -1,
        )


if not os.environ.get("LEXDIFF_NO_NUMBA"):
    try:
        import numba

        _extend_path = numba.njit(_extend_path)
        _unwind_path = numba.njit(_unwind_path)
        _unwound_sum = numba.njit(_unwound_sum)
        _shap_recurse = numba.njit(_shap_recurse)
        _tree_phi_rows = numba.njit(_tree_phi_rows)
    except ImportError:  # pragma: no cover
        pass


def _max_depth(tree) -> int:
    depth = np.zeros(len(tree.feature), dtype=np.int64)
    best = 0
    for i in range(len(tree.feature)):
        if tree.feature[i] >= 0:
            depth[tree.left[i]] = depth[i] + 1
            depth[tree.right[i]] = depth[i] + 1
            best = max(best, depth[i] + 1)
    return int(best)


# ---------------------------------------------------------------------------
# Public attribution API


def shap_matrix(ensemble: TreeEnsemble, X: np.ndarray):
    """Per-feature Shapley values for each row of a design matrix.

    Returns ``(phi, base)`` with ``phi`` of shape (n, n_features); rows satisfy
    ``base + phi.sum(1) == prediction`` up to floating-point error.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    n, n_feat = X.shape
    phi = np.zeros((n, n_feat))
    base = ensemble.base_score
    lr = ensemble.config.learning_rate
    tree_phi = np.zeros((n, n_feat))
    for tree in ensemble.trees:
        base += lr * tree.value[0]
        maxd = _max_depth(tree) + 2
        tree_phi[:] = 0.0
        _tree_phi_rows(
            tree.feature.astype(np.int64),
            tree.threshold,
            tree.left.astype(np.int64),
            tree.right.astype(np.int64),
            tree.default_left,
            tree.value,
            tree.cover,
            X,
            tree_phi,
            (maxd * (maxd + 1)) // 2,
        )
        phi += lr * tree_phi
    return phi, base


def group_importance(phi: dict, grouping: Optional[dict] = None):
    """Normalized per-group share of absolute attribution mass.

    Returns ``(shares, degenerate)``; an all-zero attribution yields uniform
    shares over the groups with the degenerate flag set.
    """
    grouping = grouping or FEATURE_GROUPS
    groups = tuple(dict.fromkeys(grouping.values()))
    extra = set(phi) - set(grouping)
    if extra:
        raise ValueError(f"features without a group: {sorted(extra)}")
    mass = {g: 0.0 for g in groups}
    for name, value in phi.items():
        mass[grouping[name]] += abs(value)
    total = sum(mass.values())
    if total == 0.0:
        return {g: 1.0 / len(groups) for g in groups}, True
    return {g: mass[g] / total for g in groups}, False


def tree_shap(ensemble: TreeEnsemble, row: FeatureRow) -> Attribution:
    """Exact attribution for a single item."""
    return explain_table(ensemble, rows_to_table([row]))[0]


def explain_table(ensemble: TreeEnsemble, table: FeatureTable) -> list:
    _check_schema(table, ensemble.schema_hash)
    X = _design_matrix(table, ensemble.encoders, ensemble.medians)
    phi, base = shap_matrix(ensemble, X)
    out = []
    for r, item_id in enumerate(table.item_ids):
        phi_map = {name: float(phi[r, j]) for j, name in enumerate(FEATURE_NAMES)}
        shares, degenerate = group_importance(phi_map)
        out.append(
            Attribution(
                item_id=item_id,
                base_value=float(base),
                phi=phi_map,
                group_shares=shares,
                degenerate=degenerate,
            )
        )
    return out


def mean_abs_shap(attrs) -> dict:
    """Mean absolute Shapley value per feature over one set of attributions."""
    if not attrs:
        return {name: float("nan") for name in FEATURE_NAMES}
    out = {}
    for name in FEATURE_NAMES:
        out[name] = float(np.mean([abs(a.phi[name]) for a in attrs]))
    return out


def mean_abs_shap_table(attrs_by_seed) -> dict:
    """Per-feature mean |phi| over items, median across seeds."""
    per_seed = [mean_abs_shap(attrs) for attrs in attrs_by_seed]
    return {
        name: float(np.median([seed[name] for seed in per_seed]))
        for name in FEATURE_NAMES
    }


def write_attributions_csv(attrs, path) -> None:
    header = (
        ["item_id", "base_value"]
        + [f"phi_{name}" for name in FEATURE_NAMES]
        + [f"share_{g}" for g in GROUP_NAMES]
        + ["degenerate"]
    )
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for a in attrs:
            writer.writerow(
                [a.item_id, repr(a.base_value)]
                + [repr(a.phi[name]) for name in FEATURE_NAMES]
                + [repr(a.group_shares[g]) for g in GROUP_NAMES]
                + [int(a.degenerate)]
            )
