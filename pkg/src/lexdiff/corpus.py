"""Vocabulary-test items: parsing, validation, and item-level flags.

Items follow the KVL test format: a learner sees an L1 word with a context
sentence and must produce the English target given its first letter and
length.  The canonical CSV columns are::

    item_id,l1,source_word,source_pos,context_sentence,clue_letter,
    target_length,target_word,difficulty

Shared-task files with different column names are adapted through a
user-supplied header mapping (``column_map``).  Gold difficulty is optional
(test splits may ship without it); higher scores mean easier words.
"""

from __future__ import annotations

import csv
import logging
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

from .errors import DataError, EmptySplit, MissingColumn, RowParseError
from .resources import FrequencyNorms, normalize_word

logger = logging.getLogger(__name__)

LANGUAGES = ("es", "de", "zh")

CANONICAL_COLUMNS = (
    "item_id",
    "l1",
    "source_word",
    "source_pos",
    "context_sentence",
    "clue_letter",
    "target_length",
    "target_word",
    "difficulty",
)

# A disambiguator is a bracketed negation ("nicht:"/"no:"/非/不是) or an
# explicit bracketed exclusion; configurable per L1.
DEFAULT_CONFUSOR_PATTERNS = {
    "de": [r"\((?:[^)]*\b)?nicht\s*:"],
    "es": [r"\((?:[^)]*\b)?no\s*:"],
    "zh": [r"[（(【\[][^)）\]】]*(?:非|不是)"],
}
_EXPLICIT_EXCLUSION = re.compile(r"[（(【\[]\s*(?:not|kein|ningún|无)\b", re.IGNORECASE)

# KVL POS tags -> frequency-norms tags.  Shipped as an editable TSV so other
# tagsets can be mapped without touching code.
DEFAULT_POS_MAP = {
    "noun": "noun",
    "verb": "verb",
    "adjective": "adjective",
    "adj": "adjective",
    "adverb": "adverb",
    "adv": "adverb",
    "pronoun": "pronoun",
    "preposition": "preposition",
    "conjunction": "conjunction",
    "determiner": "determiner",
    "interjection": "interjection",
    "number": "number",
    "name": "name",
}


@dataclass(frozen=True)
class KvlItem:
    item_id: str
    l1: str
    source_word: str
    source_pos: str
    context_sentence: str
    clue_letter: str
    target_word: str
    target_length: int
    difficulty: Optional[float]

    def __post_init__(self):
        if self.l1 not in LANGUAGES:
            raise ValueError(f"l1 must be one of {LANGUAGES}, got {self.l1!r}")


@dataclass(frozen=True)
class KvlSplit:
    l1: str
    split: str  # train / dev / test
    items: tuple


def load_pos_map(path) -> dict:
    mapping = {}
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter="\t")
        header = next(reader)
        if [h.strip() for h in header[:2]] != ["kvl_tag", "norms_tag"]:
            raise MissingColumn(path, "kvl_tag/norms_tag")
        for row in reader:
            if len(row) >= 2 and row[0].strip():
                mapping[normalize_word(row[0])] = normalize_word(row[1])
    return mapping


def write_default_pos_map(path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
        writer.writerow(["kvl_tag", "norms_tag"])
        for kvl_tag, norms_tag in sorted(DEFAULT_POS_MAP.items()):
            writer.writerow([kvl_tag, norms_tag])


def parse_kvl(path, l1: str, split: str = "train", column_map: Optional[dict] = None) -> KvlSplit:
    """Parse one split of vocabulary items.

    ``column_map`` maps canonical column names to the names used in the file
    (for shared-task exports); canonical names are used directly when absent
    from the map.  Rows violating the clue/length invariants are repaired from
    the gold target word with a logged warning; rows that cannot be parsed
    raise :class:`RowParseError` with file/line context.
    """
    path = Path(path)
    if l1 not in LANGUAGES:
        raise DataError(f"unknown l1 {l1!r}; expected one of {LANGUAGES}")
    column_map = column_map or {}

    def col(name):
        return column_map.get(name, name)

    with path.open("r", encoding="utf-8-sig", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise EmptySplit(path)
        fields = set(reader.fieldnames)
        required = ("item_id", "source_word", "source_pos", "clue_letter", "target_word")
        for name in required:
            if col(name) not in fields:
                raise MissingColumn(path, col(name))
        has_difficulty = col("difficulty") in fields
        has_length = col("target_length") in fields
        has_context = col("context_sentence") in fields
        has_l1 = col("l1") in fields

        items = []
        seen_ids = set()
        repaired = 0
        for line_no, row in enumerate(reader, start=2):
            item_id = (row.get(col("item_id")) or "").strip()
            if not item_id:
                raise RowParseError(path, line_no, "empty item_id")
            if item_id in seen_ids:
                raise RowParseError(path, line_no, f"duplicate item_id {item_id!r}")
            seen_ids.add(item_id)

            if has_l1:
                row_l1 = (row.get(col("l1")) or "").strip().lower()
                if row_l1 and row_l1 != l1:
                    raise RowParseError(path, line_no, f"row l1 {row_l1!r} != split l1 {l1!r}")

            target = (row.get(col("target_word")) or "").strip()
            if not target:
                raise RowParseError(path, line_no, "empty target_word")
            source = (row.get(col("source_word")) or "").strip()
            if not source:
                raise RowParseError(path, line_no, "empty source_word")

            clue = (row.get(col("clue_letter")) or "").strip()
            expected_clue = target[0].lower()
            if clue.lower() != expected_clue:
                logger.warning("%s:%d: clue %r does not match target %r; repaired",
                               path, line_no, clue, target)
                clue = expected_clue
                repaired += 1
            else:
                clue = clue.lower()

            length = len(target)
            if has_length and (row.get(col("target_length")) or "").strip():
                raw_len = (row.get(col("target_length")) or "").strip()
                try:
                    stated = int(raw_len)
                except ValueError:
                    raise RowParseError(path, line_no, f"bad target_length {raw_len!r}") from None
                if stated != length:
                    logger.warning("%s:%d: target_length %d != |%s|; repaired",
                                   path, line_no, stated, target)
                    repaired += 1

            difficulty = None
            if has_difficulty:
                raw = (row.get(col("difficulty")) or "").strip()
                if raw:
                    try:
                        difficulty = float(raw)
                    except ValueError:
                        raise RowParseError(path, line_no, f"bad difficulty {raw!r}") from None

            items.append(
                KvlItem(
                    item_id=item_id,
                    l1=l1,
                    source_word=source,
                    source_pos=normalize_word(row.get(col("source_pos")) or ""),
                    context_sentence=(row.get(col("context_sentence")) or "").strip() if has_context else "",
                    clue_letter=clue,
                    target_word=target,
                    target_length=length,
                    difficulty=difficulty,
                )
            )

    if not items:
        raise EmptySplit(path)
    if repaired:
        logger.warning("%s: repaired %d invariant violations", path, repaired)
    return KvlSplit(l1=l1, split=split, items=tuple(items))


def write_kvl(split: KvlSplit, path) -> None:
    """Serialize a split back to the canonical CSV layout."""
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CANONICAL_COLUMNS)
        for it in split.items:
            writer.writerow([
                it.item_id,
                it.l1,
                it.source_word,
                it.source_pos,
                it.context_sentence,
                it.clue_letter,
                it.target_length,
                it.target_word,
                "" if it.difficulty is None else repr(it.difficulty),
            ])


def ensure_disjoint_targets(*splits: KvlSplit) -> None:
    """Train/dev/test must not share target words within one L1."""
    seen = {}
    for sp in splits:
        words = {normalize_word(it.target_word) for it in sp.items}
        for other, other_words in seen.items():
            overlap = words & other_words
            if overlap:
                example = sorted(overlap)[:3]
                raise DataError(
                    f"splits {sp.split!r} and {other!r} for l1={sp.l1!r} share "
                    f"{len(overlap)} target words (e.g. {example})"
                )
        seen[sp.split] = words


def confusor_flag(item: KvlItem, patterns: Optional[dict] = None) -> bool:
    """True iff the source word or context carries a disambiguation annotation."""
    pats = (patterns or DEFAULT_CONFUSOR_PATTERNS).get(item.l1, [])
    text = f"{item.source_word} {item.context_sentence}"
    for pat in pats:
        if re.search(pat, text):
            return True
    return bool(_EXPLICIT_EXCLUSION.search(text))


def dominant_pos(freq: FrequencyNorms, word: str) -> Optional[str]:
    """Most frequent POS tag of ``word`` in the norms; ties break to the
    lexicographically smallest tag.  ``None`` when the word is absent or
    carries no POS counts."""
    entry = freq.entries.get(normalize_word(word))
    if entry is None or not entry.pos_counts:
        return None
    return max(sorted(entry.pos_counts), key=lambda t: entry.pos_counts[t])


def pos_competition_flag(item: KvlItem, freq: FrequencyNorms, pos_map: Optional[dict] = None) -> bool:
    """True iff the tested POS differs from the word's corpus-dominant POS.

    False when the target is absent from the norms or the tested POS cannot
    be mapped onto the norms' tagset.
    """
    mapping = pos_map or DEFAULT_POS_MAP
    mapped = mapping.get(item.source_pos)
    if mapped is None:
        return False
    dom = dominant_pos(freq, item.target_word)
    if dom is None:
        return False
    return mapped != dom


def copy_with(item: KvlItem, **changes) -> KvlItem:
    return replace(item, **changes)
