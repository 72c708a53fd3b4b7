import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lexdiff.evaluation import (
    EVAL_SEEDS,
    aggregate_report,
    average_ranks,
    cross_l1_matrix,
    pearson,
    rmse,
    spearman,
    write_cross_l1_csv,
)


# --- direct-definition reference implementations (oracles) -------------------


def ref_rmse(pred, gold):
    return math.sqrt(sum((p - g) ** 2 for p, g in zip(pred, gold)) / len(pred))


def ref_pearson(a, b):
    n = len(a)
    ma = sum(a) / n
    mb = sum(b) / n
    num = sum((x - ma) * (y - mb) for x, y in zip(a, b))
    da = math.sqrt(sum((x - ma) ** 2 for x in a))
    db = math.sqrt(sum((y - mb) ** 2 for y in b))
    if da == 0 or db == 0:
        return float("nan")
    return num / (da * db)


def ref_ranks(x):
    """Brute-force average ranks: for each element, count smaller and equal."""
    out = []
    for xi in x:
        smaller = sum(1 for xj in x if xj < xi)
        equal = sum(1 for xj in x if xj == xi)
        out.append(smaller + (equal + 1) / 2.0)
    return out


def ref_spearman(a, b):
    return ref_pearson(ref_ranks(a), ref_ranks(b))


# --- frozen examples ----------------------------------------------------------


def test_rmse_examples():
    assert rmse([1, 2, 3], [1, 2, 3]) == 0.0
    assert rmse([2, 3, 4], [1, 2, 3]) == pytest.approx(1.0)
    # two items with errors 0 and 5: sqrt((0 + 25)/2)
    assert rmse([0, 5], [0, 0]) == pytest.approx(3.5355339059327378)


def test_pearson_examples():
    x = np.arange(10.0)
    assert pearson(x, 2 * x) == pytest.approx(1.0)
    assert pearson(x, -x) == pytest.approx(-1.0)
    assert math.isnan(pearson(x, np.zeros(10)))


def test_spearman_examples():
    x = np.array([1.0, 2.0, 5.0, 9.0])
    assert spearman(x, np.exp(x)) == pytest.approx(1.0)  # monotone transform
    assert spearman(x, -x) == pytest.approx(-1.0)
    tied = np.array([1.0, 1.0, 2.0, 2.0, 3.0])
    other = np.array([2.0, 1.0, 1.0, 3.0, 3.0])
    assert spearman(tied, other) == pytest.approx(ref_spearman(tied.tolist(), other.tolist()), abs=1e-12)


def test_average_ranks_match_bruteforce():
    rng = np.random.default_rng(0)
    for _ in range(50):
        x = rng.integers(0, 5, size=rng.integers(2, 30)).astype(float)
        np.testing.assert_allclose(average_ranks(x), ref_ranks(x.tolist()), atol=1e-12)


def test_metrics_match_reference_on_random_vectors():
    rng = np.random.default_rng(1)
    for _ in range(120):
        n = int(rng.integers(2, 40))
        a = rng.normal(size=n)
        b = rng.normal(size=n)
        if rng.random() < 0.5:
            a = np.round(a)  # heavy ties
            b = np.round(b)
        assert rmse(a, b) == pytest.approx(ref_rmse(a, b), abs=1e-12)
        r = pearson(a, b)
        ref = ref_pearson(a.tolist(), b.tolist())
        if math.isnan(ref):
            assert math.isnan(r)
        else:
            assert r == pytest.approx(ref, abs=1e-12)
        s = spearman(a, b)
        refs = ref_spearman(a.tolist(), b.tolist())
        if math.isnan(refs):
            assert math.isnan(s)
        else:
            assert s == pytest.approx(refs, abs=1e-12)


# --- invariances ----------------------------------------------------------------


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.floats(min_value=-100, max_value=100), min_size=2, max_size=20),
    st.floats(min_value=-50, max_value=50),
)
def test_rmse_symmetry_and_shift(a, c):
    b = [x + 1.5 for x in a]
    assert rmse(a, b) == pytest.approx(rmse(b, a))
    assert rmse([x + c for x in a], [x + c for x in b]) == pytest.approx(rmse(a, b), abs=1e-9)


def test_pearson_affine_invariance():
    rng = np.random.default_rng(2)
    a = rng.normal(size=30)
    b = rng.normal(size=30)
    r = pearson(a, b)
    assert pearson(3.0 * a + 7.0, b) == pytest.approx(r, abs=1e-12)
    assert pearson(a, 0.5 * b - 2.0) == pytest.approx(r, abs=1e-12)


# --- aggregation -----------------------------------------------------------------


def test_eval_seeds_are_the_published_twenty():
    assert len(EVAL_SEEDS) == 20
    assert EVAL_SEEDS[:3] == (1, 8, 15)
    assert EVAL_SEEDS[-1] == 134


def test_aggregate_report_and_matrix(tmp_path):
    gold = np.array([0.0, 1.0, 2.0, 3.0])
    per_seed = {
        1: gold + 0.1,
        8: gold - 0.2,
        15: gold + 0.3,
    }
    report = aggregate_report("es", "de", per_seed, gold)
    assert report.rmse_median == pytest.approx(0.2)
    assert report.n_items == 4
    assert report.seeds == (1, 8, 15)
    matrix = cross_l1_matrix({("es", "de"): per_seed}, {"de": gold})
    path = tmp_path / "cross.csv"
    write_cross_l1_csv(matrix, path)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0].split(",")[:2] == ["l1_train", "l1_test"]
    assert lines[1].startswith("es,de,")
