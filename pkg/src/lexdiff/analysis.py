"""Derived analyses over attributions, predictions, and gold difficulties.

Covers the compositional view of feature-group importance (triangle
projection, kernel-smoothed difficulty surface, Aitchison total variance),
importance profiles, correlation matrices, the POS-competition dispersion
study, and the long-format export relating frequency and orthographic
similarity to their attributions.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import AllMasked
from .evaluation import pearson, spearman
from .features import GROUP_NAMES, NUMERIC_FEATURES
from .resources import normalize_word
from .stats import brown_forsythe, fligner_killeen, mann_whitney, welch_t

SQRT3_2 = math.sqrt(3.0) / 2.0

# Bandwidths are in triangle units (unit edge length).
DEFAULT_BANDWIDTH_GRID = tuple(np.geomspace(0.02, 1.0, 20))
# Mask threshold: weight mass equivalent to five points at distance zero.
DEFAULT_MIN_WEIGHT = 5.0


# ---------------------------------------------------------------------------
# Simplex projection


@dataclass(frozen=True)
class SimplexPoint:
    item_id: str
    familiarity: float
    meaning: float
    form: float  # surface + transfer
    x: float
    y: float
    gold: Optional[float]


def to_simplex(attr, gold: Optional[float] = None) -> SimplexPoint:
    """Collapse the four group shares to (familiarity, meaning, form) and embed
    in the unit equilateral triangle: x = meaning + form/2, y = form * sqrt(3)/2.

    Corners: familiarity (0,0), meaning (1,0), form (1/2, sqrt(3)/2).
    """
    shares = attr.group_shares
    fam = shares["familiarity"]
    mea = shares["meaning"]
    form = shares["surface"] + shares["transfer"]
    return SimplexPoint(
        item_id=attr.item_id,
        familiarity=fam,
        meaning=mea,
        form=form,
        x=mea + form / 2.0,
        y=form * SQRT3_2,
        gold=gold,
    )


def simplex_points(attrs, golds) -> list:
    return [to_simplex(a, g) for a, g in zip(attrs, golds)]


# ---------------------------------------------------------------------------
# Nadaraya-Watson difficulty surface


@dataclass(frozen=True)
class KernelSurface:
    grid_x: np.ndarray  # (nx,)
    grid_y: np.ndarray  # (ny,)
    fitted: np.ndarray  # (ny, nx), NaN where masked
    weight: np.ndarray  # (ny, nx) kernel mass per cell
    bandwidth: float
    bandwidth_grid: tuple
    loo_errors: tuple
    min_weight: float


def _gauss(d2: np.ndarray, h: float) -> np.ndarray:
    return np.exp(-d2 / (2.0 * h * h))


def loo_bandwidth(xy: np.ndarray, y: np.ndarray, bandwidth_grid) -> tuple:
    """Leave-one-out bandwidth selection for the NW estimator.

    Returns ``(bandwidth, errors)`` where errors holds the mean squared LOO
    error per candidate (inf when any point loses all kernel mass); ties and
    the all-inf case resolve to the first / largest candidate respectively.
    """
    n = xy.shape[0]
    if n < 3:
        raise ValueError("need at least 3 points for bandwidth selection")
    diff = xy[:, None, :] - xy[None, :, :]
    d2 = (diff**2).sum(axis=2)
    errors = []
    for h in bandwidth_grid:
        w = _gauss(d2, h)
        np.fill_diagonal(w, 0.0)
        denom = w.sum(axis=1)
        if np.any(denom == 0.0):
            errors.append(float("inf"))
            continue
        fit = (w @ y) / denom
        errors.append(float(np.mean((fit - y) ** 2)))
    errors = tuple(errors)
    if all(math.isinf(e) for e in errors):
        return float(bandwidth_grid[-1]), errors
    return float(bandwidth_grid[int(np.argmin(errors))]), errors


def nw_surface(
    points,
    grid_size: int = 60,
    bandwidth_grid=DEFAULT_BANDWIDTH_GRID,
    min_weight: float = DEFAULT_MIN_WEIGHT,
) -> KernelSurface:
    """Gaussian NW regression of gold difficulty over the triangle.

    Cells outside the triangle or with kernel mass below ``min_weight`` are
    masked; fitted values are convex combinations of the observed golds.
    """
    pts = [p for p in points if p.gold is not None]
    if not pts:
        raise ValueError("no points with gold difficulty")
    xy = np.asarray([(p.x, p.y) for p in pts], dtype=np.float64)
    y = np.asarray([p.gold for p in pts], dtype=np.float64)
    if len(pts) >= 3:
        bandwidth, errors = loo_bandwidth(xy, y, bandwidth_grid)
    else:
        # too few points for leave-one-out selection: smooth maximally
        bandwidth, errors = float(bandwidth_grid[-1]), ()

    grid_x = np.linspace(0.0, 1.0, grid_size)
    grid_y = np.linspace(0.0, SQRT3_2, grid_size)
    gx, gy = np.meshgrid(grid_x, grid_y)
    cells = np.stack([gx.ravel(), gy.ravel()], axis=1)

    d2 = ((cells[:, None, :] - xy[None, :, :]) ** 2).sum(axis=2)
    w = _gauss(d2, bandwidth)
    mass = w.sum(axis=1)
    fitted = np.full(cells.shape[0], np.nan)
    ok = mass >= min_weight

    # Inside test for the unit triangle with corners (0,0), (1,0), (.5, sqrt3/2).
    inside = (
        (cells[:, 1] >= -1e-9)
        & (cells[:, 1] <= math.sqrt(3.0) * cells[:, 0] + 1e-9)
        & (cells[:, 1] <= math.sqrt(3.0) * (1.0 - cells[:, 0]) + 1e-9)
    )
    ok &= inside
    if not ok.any():
        raise AllMasked("no grid cell reaches the minimum kernel mass")
    fitted[ok] = (w[ok] @ y) / mass[ok]
    return KernelSurface(
        grid_x=grid_x,
        grid_y=grid_y,
        fitted=fitted.reshape(grid_size, grid_size),
        weight=mass.reshape(grid_size, grid_size),
        bandwidth=bandwidth,
        bandwidth_grid=tuple(float(h) for h in bandwidth_grid),
        loo_errors=errors,
        min_weight=min_weight,
    )


# ---------------------------------------------------------------------------
# Aitchison total variance


def multiplicative_zero_replacement(comps: np.ndarray, delta: float) -> np.ndarray:
    """Replace zeros by delta and shrink the positive parts multiplicatively."""
    comps = np.asarray(comps, dtype=np.float64)
    zeros = comps == 0.0
    z = zeros.sum(axis=1, keepdims=True)
    out = np.where(zeros, delta, comps * (1.0 - delta * z))
    return out / out.sum(axis=1, keepdims=True)


def clr(comps: np.ndarray) -> np.ndarray:
    logs = np.log(comps)
    return logs - logs.mean(axis=1, keepdims=True)


def aitchison_total_variance(
    comps: np.ndarray,
    delta: float = 1e-4,
    n_boot: int = 1000,
    seed: int = 0,
) -> tuple:
    """Total variance of the clr-transformed compositions with a percentile
    bootstrap 90% CI.  Sample covariance uses ddof=1.
    """
    comps = np.asarray(comps, dtype=np.float64)
    if comps.ndim != 2 or comps.shape[0] < 2:
        raise ValueError("need at least 2 compositions")
    if np.any(comps < 0):
        raise ValueError("compositions must be non-negative")
    closed = comps / comps.sum(axis=1, keepdims=True)
    transformed = clr(multiplicative_zero_replacement(closed, delta))

    def totvar(t):
        return float(t.var(axis=0, ddof=1).sum())

    point = totvar(transformed)
    rng = np.random.default_rng(seed)
    n = transformed.shape[0]
    boots = np.empty(n_boot)
    for b in range(n_boot):
        idx = rng.integers(0, n, size=n)
        boots[b] = totvar(transformed[idx])
    lo, hi = np.percentile(boots, [5.0, 95.0])
    return point, (float(lo), float(hi))


# ---------------------------------------------------------------------------
# Importance profiles


@dataclass(frozen=True)
class GroupProfile:
    item_ids: tuple  # sorted by descending familiarity share
    shares: np.ndarray  # (n, 4) in GROUP_NAMES order
    rolling: np.ndarray  # centered rolling mean, window size as configured
    mean_shares: dict  # group -> mean share over items
    window: int


def importance_profiles(attrs, window: int = 10) -> GroupProfile:
    """Items sorted by decreasing familiarity share with a centered rolling
    mean per group; degenerate attributions are excluded."""
    kept = [a for a in attrs if not a.degenerate]
    if not kept:
        raise ValueError("no non-degenerate attributions to profile")
    shares = np.asarray([[a.group_shares[g] for g in GROUP_NAMES] for a in kept])
    order = np.argsort(-shares[:, GROUP_NAMES.index("familiarity")], kind="stable")
    shares = shares[order]
    ids = tuple(kept[i].item_id for i in order)

    n = shares.shape[0]
    rolling = np.empty_like(shares)
    half_lo = (window - 1) // 2
    half_hi = window // 2
    for i in range(n):
        lo = max(0, i - half_lo)
        hi = min(n, i + half_hi + 1)
        rolling[i] = shares[lo:hi].mean(axis=0)
    means = {g: float(shares[:, j].mean()) for j, g in enumerate(GROUP_NAMES)}
    return GroupProfile(item_ids=ids, shares=shares, rolling=rolling, mean_shares=means, window=window)


def median_mean_shares(profiles) -> dict:
    """Median across seeds of each group's mean importance share."""
    return {
        g: float(np.median([p.mean_shares[g] for p in profiles]))
        for g in GROUP_NAMES
    }


def write_profile_csv(profile: GroupProfile, path) -> None:
    header = (
        ["rank", "item_id"]
        + [f"share_{g}" for g in GROUP_NAMES]
        + [f"rolling_{g}" for g in GROUP_NAMES]
    )
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i, item_id in enumerate(profile.item_ids):
            writer.writerow(
                [i, item_id]
                + [repr(v) for v in profile.shares[i]]
                + [repr(v) for v in profile.rolling[i]]
            )


# ---------------------------------------------------------------------------
# Correlation matrices


def difficulty_correlations(splits: dict) -> dict:
    """Pairwise Pearson r of gold difficulty across L1s over shared targets.

    ``splits`` maps l1 -> KvlSplit (with gold).  Returns (l1_a, l1_b) ->
    (r, n_shared) for each unordered pair, NaN when fewer than 2 shared words.
    """
    by_l1 = {}
    for l1, split in splits.items():
        table = {}
        for it in split.items:
            if it.difficulty is not None:
                table.setdefault(normalize_word(it.target_word), it.difficulty)
        by_l1[l1] = table
    out = {}
    l1s = sorted(by_l1)
    for i, a in enumerate(l1s):
        for b in l1s[i + 1 :]:
            shared = sorted(set(by_l1[a]) & set(by_l1[b]))
            if len(shared) < 2:
                out[(a, b)] = (float("nan"), len(shared))
                continue
            va = [by_l1[a][w] for w in shared]
            vb = [by_l1[b][w] for w in shared]
            out[(a, b)] = (pearson(va, vb), len(shared))
    return out


def feature_correlation_matrix(table) -> np.ndarray:
    """Pairwise Spearman rho between numeric features, computed over rows
    where both features are present; NaN with fewer than 2 such rows."""
    X = table.numeric
    k = len(NUMERIC_FEATURES)
    rho = np.full((k, k), np.nan)
    for i in range(k):
        for j in range(i, k):
            both = ~np.isnan(X[:, i]) & ~np.isnan(X[:, j])
            if both.sum() < 2:
                continue
            r = 1.0 if i == j else spearman(X[both, i], X[both, j])
            rho[i, j] = rho[j, i] = r
    return rho


def write_matrix_csv(matrix: np.ndarray, labels, path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([""] + list(labels))
        for label, row in zip(labels, matrix):
            writer.writerow([label] + ["" if math.isnan(v) else repr(float(v)) for v in row])


# ---------------------------------------------------------------------------
# POS-competition dispersion study


@dataclass(frozen=True)
class DispersionReport:
    l1: str
    n_no: int
    n_yes: int
    std_no: float
    std_yes: float
    ratio: float
    p_welch: float
    p_wmw: float
    p_brown_forsythe: float
    p_fligner_killeen: float

    def as_row(self):
        return [
            self.l1, self.n_no, self.n_yes,
            repr(self.std_no), repr(self.std_yes), repr(self.ratio),
            repr(self.p_welch), repr(self.p_wmw),
            repr(self.p_brown_forsythe), repr(self.p_fligner_killeen),
        ]


def pos_dispersion_study(errors, flags, l1: str = "") -> DispersionReport:
    """Compare prediction-error dispersion between POS-competition groups.

    ``errors`` are gold minus predicted; ``flags`` mark items whose tested POS
    differs from the corpus-dominant POS.  Location tests (Welch, WMW) are
    expected non-significant, scale tests (BF, FK) significant when the effect
    is present.
    """
    errors = np.asarray(errors, dtype=np.float64)
    flags = np.asarray(flags, dtype=bool)
    if errors.shape != flags.shape:
        raise ValueError("errors and flags must align")
    yes = errors[flags]
    no = errors[~flags]
    if yes.size < 2 or no.size < 2:
        raise ValueError("each group needs at least 2 items")
    std_no = float(no.std(ddof=1))
    std_yes = float(yes.std(ddof=1))
    return DispersionReport(
        l1=l1,
        n_no=int(no.size),
        n_yes=int(yes.size),
        std_no=std_no,
        std_yes=std_yes,
        ratio=std_yes / std_no if std_no > 0 else float("inf"),
        p_welch=welch_t(no, yes).p_value,
        p_wmw=mann_whitney(no, yes).p_value,
        p_brown_forsythe=brown_forsythe(no, yes).p_value,
        p_fligner_killeen=fligner_killeen(no, yes).p_value,
    )


def write_dispersion_csv(reports, path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["l1", "n_no", "n_yes", "std_no", "std_yes", "ratio",
             "p_welch", "p_wmw", "p_brown_forsythe", "p_fligner_killeen"]
        )
        for r in reports:
            writer.writerow(r.as_row())


# ---------------------------------------------------------------------------
# Frequency / similarity attribution export


def frequency_similarity_export(attrs, feature_rows, golds, ablation_rows=None) -> list:
    """Long-format records relating the transfer and frequency features to
    their attributions (and, when available, the normalized edit distance)."""
    records = []
    ablation_by_id = {}
    if ablation_rows:
        ablation_by_id = {r.item_id: r for r in ablation_rows}
    rows_by_id = {r.item_id: r for r in feature_rows}
    for attr, gold in zip(attrs, golds):
        row = rows_by_id[attr.item_id]
        ab = ablation_by_id.get(attr.item_id)
        records.append(
            {
                "item_id": attr.item_id,
                "char_similarity": row.numeric["char_similarity"],
                "log_frequency": row.numeric["log_frequency"],
                "gold": float("nan") if gold is None else gold,
                "phi_char_similarity": attr.phi["char_similarity"],
                "phi_log_frequency": attr.phi["log_frequency"],
                "edit_distance_norm": ab.values["edit_distance_norm"] if ab else float("nan"),
            }
        )
    return records


EXPORT_COLUMNS = (
    "item_id",
    "char_similarity",
    "log_frequency",
    "gold",
    "phi_char_similarity",
    "phi_log_frequency",
    "edit_distance_norm",
)


def write_export_csv(records, path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(EXPORT_COLUMNS)
        for rec in records:
            writer.writerow(
                [rec["item_id"]]
                + [
                    "" if isinstance(rec[c], float) and math.isnan(rec[c]) else repr(float(rec[c]))
                    for c in EXPORT_COLUMNS[1:]
                ]
            )


def write_surface_csv(surface: KernelSurface, path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x", "y", "fitted", "weight"])
        for iy, yv in enumerate(surface.grid_y):
            for ix, xv in enumerate(surface.grid_x):
                fit = surface.fitted[iy, ix]
                writer.writerow(
                    [repr(float(xv)), repr(float(yv)),
                     "" if math.isnan(fit) else repr(float(fit)),
                     repr(float(surface.weight[iy, ix]))]
                )


def write_simplex_csv(points, path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["item_id", "familiarity", "meaning", "form", "x", "y", "gold"])
        for p in points:
            writer.writerow(
                [p.item_id, repr(p.familiarity), repr(p.meaning), repr(p.form),
                 repr(p.x), repr(p.y),
                 "" if p.gold is None else repr(float(p.gold))]
            )
