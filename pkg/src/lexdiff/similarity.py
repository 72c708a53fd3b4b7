"""Orthographic similarity between word forms.

The transfer feature is the cosine similarity of character n-gram tf-idf
vectors (n in {2, 3, 4}, sublinear term frequency, idf = ln(N/df) without
smoothing).  Words act as documents; the vectorizer is fitted on the union of
English targets and L1 source forms of the training split only, and unseen
n-grams are dropped when transforming held-out words.

Levenshtein distance and longest-common-subsequence length back the ablation
features.
"""

from __future__ import annotations

import math
import unicodedata
from dataclasses import dataclass

from .errors import EmptyCorpus

NGRAM_SIZES = (2, 3, 4)


def normalize_form(word: str) -> str:
    """NFC-normalize, lowercase, and strip all whitespace."""
    return "".join(unicodedata.normalize("NFC", word).lower().split())


def ngram_counts(form: str) -> dict:
    """Counts of all character n-grams of the configured sizes."""
    counts = {}
    for n in NGRAM_SIZES:
        for i in range(len(form) - n + 1):
            gram = form[i : i + n]
            counts[gram] = counts.get(gram, 0) + 1
    return counts


@dataclass(frozen=True)
class CharVectorizer:
    """Frozen character n-gram vocabulary with document frequencies."""

    vocabulary: dict  # n-gram -> column index
    df: tuple  # document frequency per column
    n_docs: int

    def idf(self, gram: str) -> float:
        col = self.vocabulary.get(gram)
        if col is None:
            return 0.0
        return math.log(self.n_docs / self.df[col])

    def transform(self, word: str) -> dict:
        """l2-normalized tf-idf weights over known n-grams; {} for all-zero."""
        weights = {}
        for gram, tf in ngram_counts(normalize_form(word)).items():
            col = self.vocabulary.get(gram)
            if col is None:
                continue
            w = (1.0 + math.log(tf)) * math.log(self.n_docs / self.df[col])
            if w != 0.0:
                weights[col] = w
        norm = math.sqrt(sum(w * w for w in weights.values()))
        if norm == 0.0:
            return {}
        return {col: w / norm for col, w in weights.items()}


def fit_char_vectorizer(word_forms) -> CharVectorizer:
    """Fit the n-gram vocabulary and document frequencies on ``word_forms``.

    Duplicate forms (after normalization) count as one document, matching the
    set semantics of a word-form corpus.
    """
    forms = {normalize_form(w) for w in word_forms}
    forms.discard("")
    if not forms:
        raise EmptyCorpus("cannot fit a character vectorizer on an empty corpus")
    df_map = {}
    for form in forms:
        for gram in set(ngram_counts(form)):
            df_map[gram] = df_map.get(gram, 0) + 1
    vocabulary = {gram: i for i, gram in enumerate(sorted(df_map))}
    df = tuple(df_map[gram] for gram in sorted(df_map))
    return CharVectorizer(vocabulary=vocabulary, df=df, n_docs=len(forms))


def char_similarity(en_word: str, l1_word: str, vec: CharVectorizer) -> float:
    """Cosine similarity of the two words' tf-idf vectors; 0.0 when either
    vector is all-zero (e.g. across scripts with no shared n-grams)."""
    a = vec.transform(en_word)
    b = vec.transform(l1_word)
    if not a or not b:
        return 0.0
    if len(b) < len(a):
        a, b = b, a
    sim = sum(w * b.get(col, 0.0) for col, w in a.items())
    # Clip the tiny float overshoot above 1.0 for identical vectors.
    return min(max(sim, 0.0), 1.0)


def levenshtein(a: str, b: str) -> int:
    """Edit distance with unit insert/delete/substitute costs."""
    if not a:
        return len(b)
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def lcs_length(a: str, b: str) -> int:
    """Length of the longest common subsequence."""
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for ca in a:
        cur = [0]
        for j, cb in enumerate(b, start=1):
            if ca == cb:
                cur.append(prev[j - 1] + 1)
            else:
                cur.append(max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]
