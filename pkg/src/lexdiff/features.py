"""The 24 model features plus the ablation features.

Features are grouped into familiarity (11), meaning (5), surface (7, two of
them categorical), and transfer (1).  Numeric features that cannot be looked
up carry a missing flag; word frequency follows its own floor rule (minimum
observed Zipf value minus 0.5) instead of a flag-only miss.  Extraction is a
pure function of (item, bundle, vectorizer), so items can be processed in
parallel with deterministic output.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import corpus as corpus_mod
from .corpus import KvlItem, KvlSplit
from .errors import DomainError
from .resources import ResourceBundle
from .similarity import (
    CharVectorizer,
    char_similarity,
    fit_char_vectorizer,
    lcs_length,
    levenshtein,
    normalize_form,
)

GROUP_NAMES = ("familiarity", "meaning", "surface", "transfer")

# (name, group, kind) in canonical export order.
FEATURE_SCHEMA = (
    ("log_frequency", "familiarity", "numeric"),
    ("contextual_diversity", "familiarity", "numeric"),
    ("age_of_acquisition", "familiarity", "numeric"),
    ("percent_known", "familiarity", "numeric"),
    ("cefrj_level", "familiarity", "numeric"),
    ("efllex_span", "familiarity", "numeric"),
    ("efllex_a1", "familiarity", "numeric"),
    ("efllex_a2", "familiarity", "numeric"),
    ("efllex_b1", "familiarity", "numeric"),
    ("efllex_b2", "familiarity", "numeric"),
    ("efllex_c1", "familiarity", "numeric"),
    ("embedding_norm", "meaning", "numeric"),
    ("hypernym_depth", "meaning", "numeric"),
    ("sense_count", "meaning", "numeric"),
    ("pos_dominance_ratio", "meaning", "numeric"),
    ("confusor_flag", "meaning", "numeric"),
    ("target_word_length", "surface", "numeric"),
    ("source_word_length", "surface", "numeric"),
    ("syllable_count", "surface", "numeric"),
    ("letters_per_phoneme", "surface", "numeric"),
    ("context_sentence_length", "surface", "numeric"),
    ("clue_letter", "surface", "categorical"),
    ("l1_initial_letter", "surface", "categorical"),
    ("char_similarity", "transfer", "numeric"),
)

FEATURE_NAMES = tuple(name for name, _, _ in FEATURE_SCHEMA)
NUMERIC_FEATURES = tuple(n for n, _, k in FEATURE_SCHEMA if k == "numeric")
CATEGORICAL_FEATURES = tuple(n for n, _, k in FEATURE_SCHEMA if k == "categorical")
FEATURE_GROUPS = {name: group for name, group, _ in FEATURE_SCHEMA}

# Numeric features imputed at the training-split median when missing.  The
# frequency floor rule and the zero-valued learner-corpus shares are applied
# at extraction time instead.
MEDIAN_IMPUTED = (
    "age_of_acquisition",
    "percent_known",
    "cefrj_level",
    "embedding_norm",
    "hypernym_depth",
    "sense_count",
    "pos_dominance_ratio",
    "letters_per_phoneme",
)


def schema_hash() -> str:
    payload = json.dumps([list(f) for f in FEATURE_SCHEMA]).encode()
    return hashlib.sha256(payload).hexdigest()[:16]


@dataclass(frozen=True)
class FeatureRow:
    item_id: str
    numeric: dict  # name -> float (NaN when missing)
    categorical: dict  # name -> str
    missing: frozenset = field(default_factory=frozenset)

    def __getitem__(self, name: str):
        if name in self.numeric:
            return self.numeric[name]
        return self.categorical[name]


@dataclass(frozen=True)
class AblationRow:
    item_id: str
    values: dict  # name -> float (NaN when missing)
    missing: frozenset = field(default_factory=frozenset)


ABLATION_NAMES = (
    "char_surprisal",
    "edit_distance_norm",
    "lcs_ratio_en",
    "lcs_ratio_l1",
    "efllex_entropy",
    "efllex_mean_level",
    "wn_synonym_count",
    "exact_match",
)


# ---------------------------------------------------------------------------
# Individual feature transforms


def zipf_frequency(fpmw: Optional[float], f_min: float) -> float:
    """Zipf-scale frequency: log10(fpmw) + 3, or f_min - 0.5 for missing words."""
    if fpmw is None:
        return f_min - 0.5
    if fpmw == 0:
        raise DomainError("fpmw of 0 has no Zipf value; treat the word as missing")
    if fpmw < 0:
        raise DomainError(f"fpmw must be non-negative, got {fpmw}")
    return math.log10(fpmw) + 3.0


def efllex_span(bands) -> int:
    """Number of proficiency bands with strictly positive learner-corpus frequency."""
    bands = tuple(bands)
    if len(bands) != 5:
        raise ValueError(f"expected 5 bands, got {len(bands)}")
    if any(b < 0 for b in bands):
        raise ValueError("band frequencies must be non-negative")
    return sum(1 for b in bands if b > 0)


_VOWEL_GROUPS = re.compile(r"[aeiouy]+")
_NON_ALPHA = re.compile(r"[^a-z]+")


def syllable_count(word: str) -> int:
    """Estimated syllables: maximal vowel groups, dropping a silent final e
    except in consonant+'le' endings; at least 1."""
    w = _NON_ALPHA.sub("", word.lower())
    if not w:
        return 1
    count = len(_VOWEL_GROUPS.findall(w))
    if w.endswith("e"):
        syllabic_le = len(w) >= 3 and w[-2] == "l" and w[-3] not in "aeiouy"
        if not syllabic_le:
            count -= 1
    return max(count, 1)


def letters_per_phoneme(word: str, n_phonemes: int) -> float:
    """Orthographic transparency proxy: character length over phoneme count."""
    if n_phonemes < 1:
        raise ValueError(f"n_phonemes must be >= 1, got {n_phonemes}")
    return len(word) / n_phonemes


def pos_dominance_ratio(pos_counts: dict) -> float:
    """Share of tokens carried by the word's most frequent POS tag."""
    total = sum(pos_counts.values())
    if total <= 0:
        raise ValueError("pos_counts must contain at least one positive count")
    return max(pos_counts.values()) / total


# ---------------------------------------------------------------------------
# Vectorizer corpus and training-character distribution


def vectorizer_corpus(split: KvlSplit) -> set:
    """Union of English targets and L1 source forms of one training split."""
    forms = set()
    for it in split.items:
        forms.add(normalize_form(it.target_word))
        forms.add(normalize_form(it.source_word))
    forms.discard("")
    return forms


def fit_vectorizer(split: KvlSplit) -> CharVectorizer:
    return fit_char_vectorizer(vectorizer_corpus(split))


@dataclass(frozen=True)
class CharDistribution:
    """Add-one-smoothed character unigram distribution over training targets.

    Unseen characters share a single reserved probability slot.
    """

    probs: dict  # char -> probability
    unseen: float

    def surprisal(self, word: str) -> float:
        chars = normalize_form(word)
        if not chars:
            return float("nan")
        return -sum(math.log(self.probs.get(c, self.unseen)) for c in chars) / len(chars)


def fit_char_distribution(targets) -> CharDistribution:
    counts = {}
    total = 0
    for word in targets:
        for c in normalize_form(word):
            counts[c] = counts.get(c, 0) + 1
            total += 1
    denom = total + len(counts) + 1
    probs = {c: (n + 1) / denom for c, n in counts.items()}
    return CharDistribution(probs=probs, unseen=1.0 / denom)


# ---------------------------------------------------------------------------
# Extraction


def extract_features(
    item: KvlItem,
    bundle: ResourceBundle,
    vec: CharVectorizer,
    pos_map: Optional[dict] = None,
    confusor_patterns: Optional[dict] = None,
) -> FeatureRow:
    """Compute all 24 features for one item.  Resource misses become missing
    flags, never exceptions; lengths count Unicode scalar values."""
    numeric = {}
    missing = set()

    def miss(name, value=float("nan")):
        numeric[name] = value
        missing.add(name)

    freq_entry = bundle.lookup("frequency", item.target_word)
    if freq_entry is not None and freq_entry.fpmw > 0:
        numeric["log_frequency"] = zipf_frequency(freq_entry.fpmw, 0.0)
    elif bundle.frequency is not None:
        miss("log_frequency", zipf_frequency(None, bundle.frequency.min_zipf))
    else:
        miss("log_frequency")
    if freq_entry is not None:
        numeric["contextual_diversity"] = freq_entry.cd_proportion
    else:
        miss("contextual_diversity")

    aoa_entry = bundle.lookup("aoa", item.target_word)
    if aoa_entry is not None:
        numeric["age_of_acquisition"] = aoa_entry.aoa_mean
        numeric["percent_known"] = aoa_entry.percent_known
        numeric["letters_per_phoneme"] = letters_per_phoneme(item.target_word, aoa_entry.n_phonemes)
    else:
        miss("age_of_acquisition")
        miss("percent_known")
        miss("letters_per_phoneme")

    cefr = bundle.lookup("cefr", item.target_word)
    if cefr is not None:
        numeric["cefrj_level"] = float(cefr)
    else:
        miss("cefrj_level")

    efllex = bundle.lookup("efllex", item.target_word)
    if efllex is not None:
        bands = efllex.bands
        span = efllex_span(bands)
        if span == 0:
            miss("efllex_span", 0.0)
        else:
            numeric["efllex_span"] = float(span)
        for name, value in zip(("efllex_a1", "efllex_a2", "efllex_b1", "efllex_b2", "efllex_c1"), bands):
            numeric[name] = value
    else:
        miss("efllex_span", 0.0)
        for name in ("efllex_a1", "efllex_a2", "efllex_b1", "efllex_b2", "efllex_c1"):
            miss(name, 0.0)

    emb = bundle.lookup("embedding_norms", item.target_word)
    if emb is not None:
        numeric["embedding_norm"] = emb
    else:
        miss("embedding_norm")

    mapping = pos_map or corpus_mod.DEFAULT_POS_MAP
    mapped_pos = mapping.get(item.source_pos, item.source_pos)
    sense = bundle.lookup("senses", item.target_word, mapped_pos)
    if sense is None:
        sense = bundle.lookup("senses", item.target_word)  # any-POS aggregate
    if sense is not None:
        numeric["hypernym_depth"] = sense.mean_hypernym_depth
        numeric["sense_count"] = float(sense.sense_count)
    else:
        miss("hypernym_depth")
        miss("sense_count")

    if freq_entry is not None and freq_entry.pos_counts and sum(freq_entry.pos_counts.values()) > 0:
        numeric["pos_dominance_ratio"] = pos_dominance_ratio(freq_entry.pos_counts)
    else:
        miss("pos_dominance_ratio")

    numeric["confusor_flag"] = float(corpus_mod.confusor_flag(item, confusor_patterns))
    numeric["target_word_length"] = float(len(item.target_word))
    numeric["source_word_length"] = float(len(item.source_word))
    numeric["syllable_count"] = float(syllable_count(item.target_word))
    numeric["context_sentence_length"] = float(len(item.context_sentence))
    numeric["char_similarity"] = char_similarity(item.target_word, item.source_word, vec)

    categorical = {
        "clue_letter": item.clue_letter.lower(),
        "l1_initial_letter": item.source_word[0].lower(),
    }
    return FeatureRow(
        item_id=item.item_id,
        numeric=numeric,
        categorical=categorical,
        missing=frozenset(missing),
    )


def extract_ablation(
    item: KvlItem,
    bundle: ResourceBundle,
    char_dist: CharDistribution,
) -> AblationRow:
    """Features evaluated during development but excluded from the final model."""
    values = {}
    missing = set()

    def miss(name):
        values[name] = float("nan")
        missing.add(name)

    en = normalize_form(item.target_word)
    l1 = normalize_form(item.source_word)

    surprisal = char_dist.surprisal(item.target_word)
    if math.isnan(surprisal):
        miss("char_surprisal")
    else:
        values["char_surprisal"] = surprisal

    if en and l1:
        values["edit_distance_norm"] = levenshtein(en, l1) / (math.sqrt(len(en)) * math.sqrt(len(l1)))
        lcs = lcs_length(en, l1)
        values["lcs_ratio_en"] = lcs / len(en)
        values["lcs_ratio_l1"] = lcs / len(l1)
    else:
        miss("edit_distance_norm")
        miss("lcs_ratio_en")
        miss("lcs_ratio_l1")

    efllex = bundle.lookup("efllex", item.target_word)
    if efllex is not None and sum(efllex.bands) > 0:
        values["efllex_entropy"] = band_entropy(efllex.bands)
        values["efllex_mean_level"] = band_mean_level(efllex.bands)
    else:
        miss("efllex_entropy")
        miss("efllex_mean_level")

    sense = bundle.lookup("senses", item.target_word)
    if sense is not None and sense.synonym_count is not None:
        values["wn_synonym_count"] = float(sense.synonym_count)
    else:
        miss("wn_synonym_count")

    values["exact_match"] = float(en != "" and en == l1)
    return AblationRow(item_id=item.item_id, values=values, missing=frozenset(missing))


def band_entropy(bands) -> float:
    """Shannon entropy of the band distribution, normalized to [0, 1] by ln 5."""
    total = sum(bands)
    if total <= 0:
        raise ValueError("cannot compute entropy of an all-zero distribution")
    probs = [b / total for b in bands if b > 0]
    return -sum(p * math.log(p) for p in probs) / math.log(5)


def band_mean_level(bands) -> float:
    """Frequency-weighted mean proficiency level (A1=1 .. C1=5)."""
    total = sum(bands)
    if total <= 0:
        raise ValueError("cannot average an all-zero distribution")
    return sum(level * b for level, b in enumerate(bands, start=1)) / total


# ---------------------------------------------------------------------------
# Batch extraction and CSV export


@dataclass(frozen=True)
class FeatureTable:
    """Column-major view of extracted rows, ready for model training."""

    item_ids: tuple
    numeric: np.ndarray  # (n, len(NUMERIC_FEATURES)) float64, NaN = missing
    categorical: dict  # name -> tuple of str
    schema_hash: str = field(default_factory=schema_hash)

    def __len__(self):
        return len(self.item_ids)

    def column(self, name: str) -> np.ndarray:
        return self.numeric[:, NUMERIC_FEATURES.index(name)]


def extract_split(
    split: KvlSplit,
    bundle: ResourceBundle,
    vec: CharVectorizer,
    pos_map: Optional[dict] = None,
    confusor_patterns: Optional[dict] = None,
) -> list:
    return [extract_features(it, bundle, vec, pos_map, confusor_patterns) for it in split.items]


def rows_to_table(rows) -> FeatureTable:
    numeric = np.full((len(rows), len(NUMERIC_FEATURES)), np.nan)
    categorical = {name: [] for name in CATEGORICAL_FEATURES}
    for i, row in enumerate(rows):
        for j, name in enumerate(NUMERIC_FEATURES):
            numeric[i, j] = row.numeric[name]
        for name in CATEGORICAL_FEATURES:
            categorical[name].append(row.categorical[name])
    return FeatureTable(
        item_ids=tuple(r.item_id for r in rows),
        numeric=numeric,
        categorical={k: tuple(v) for k, v in categorical.items()},
    )


def write_features_csv(rows, path) -> None:
    """item_id + the 24 features in canonical order + one missing flag per numeric."""
    header = ["item_id"] + list(FEATURE_NAMES) + [f"{n}_missing" for n in NUMERIC_FEATURES]
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            record = [row.item_id]
            for name in FEATURE_NAMES:
                value = row[name]
                if isinstance(value, float):
                    record.append("" if math.isnan(value) else repr(value))
                else:
                    record.append(value)
            record.extend(int(n in row.missing) for n in NUMERIC_FEATURES)
            writer.writerow(record)


def targets_array(split: KvlSplit) -> np.ndarray:
    gold = [it.difficulty for it in split.items]
    if any(g is None for g in gold):
        raise ValueError(f"split {split.l1}/{split.split} has items without gold difficulty")
    return np.asarray(gold, dtype=np.float64)
