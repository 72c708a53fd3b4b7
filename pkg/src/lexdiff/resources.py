"""Loading and indexing of the lexical resources behind the feature lookups.

Every resource is a UTF-8 TSV with a header row (schemas below).  A loaded
:class:`ResourceBundle` is immutable and safe for concurrent reads; lookups
return ``None`` for absent words so that "missing" is an ordinary value,
never an exception.

Canonical schemas
-----------------
frequency.tsv        word, fpmw, cd_proportion, pos_counts   (``tag:count;tag:count``)
aoa.tsv              word, aoa_mean, percent_known, n_phonemes
cefr.tsv             word, level                             (A1..C2)
efllex.tsv           word, freq_a1, freq_a2, freq_b1, freq_b2, freq_c1
embedding_norms.tsv  word, l2_norm
embeddings.txt       word followed by 300 whitespace-separated floats
senses.tsv           word, pos, sense_count, mean_hypernym_depth
"""

from __future__ import annotations

import csv
import hashlib
import logging
import math
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import EmptyResource, MalformedRow, MissingRequiredColumn

logger = logging.getLogger(__name__)

CEFR_ORDINALS = {"A1": 1, "A2": 2, "B1": 3, "B2": 4, "C1": 5, "C2": 6}


def normalize_word(word: str) -> str:
    """Canonical lookup form: Unicode NFC, lowercased, surrounding space stripped."""
    return unicodedata.normalize("NFC", word).strip().lower()


@dataclass(frozen=True)
class FrequencyEntry:
    fpmw: float
    cd_proportion: float
    pos_counts: dict


@dataclass(frozen=True)
class AoaEntry:
    aoa_mean: float
    percent_known: float
    n_phonemes: int


@dataclass(frozen=True)
class EfllexEntry:
    bands: tuple  # five relative frequencies, A1..C1


@dataclass(frozen=True)
class SenseEntry:
    sense_count: int
    mean_hypernym_depth: float
    synonym_count: Optional[int] = None  # optional extra column in senses.tsv


@dataclass(frozen=True)
class FrequencyNorms:
    entries: dict

    @property
    def min_zipf(self) -> float:
        """Smallest Zipf value among loaded words; floor for the missing-word rule."""
        return min(math.log10(e.fpmw) + 3.0 for e in self.entries.values() if e.fpmw > 0)


@dataclass(frozen=True)
class AoaNorms:
    entries: dict


@dataclass(frozen=True)
class CefrLevels:
    entries: dict  # word -> ordinal 1..6


@dataclass(frozen=True)
class LearnerLevelFrequencies:
    entries: dict  # word -> EfllexEntry


@dataclass(frozen=True)
class EmbeddingNorms:
    entries: dict  # word -> l2 norm


@dataclass(frozen=True)
class SenseStats:
    entries: dict  # (word, pos) -> SenseEntry

    def word_aggregate(self, word: str) -> Optional[SenseEntry]:
        """Pool sense statistics over all POS recorded for ``word``."""
        matches = [e for (w, _), e in self.entries.items() if w == word]
        if not matches:
            return None
        total = sum(e.sense_count for e in matches)
        depth = sum(e.mean_hypernym_depth * max(e.sense_count, 1) for e in matches)
        weight = sum(max(e.sense_count, 1) for e in matches)
        return SenseEntry(sense_count=total, mean_hypernym_depth=depth / weight)


@dataclass(frozen=True)
class ResourceBundle:
    """All loaded resources plus provenance.  Absent optional resources are None."""

    frequency: Optional[FrequencyNorms]
    aoa: Optional[AoaNorms]
    cefr: Optional[CefrLevels]
    efllex: Optional[LearnerLevelFrequencies]
    embedding_norms: Optional[EmbeddingNorms]
    senses: Optional[SenseStats]
    provenance: dict = field(default_factory=dict)

    _KINDS = ("frequency", "aoa", "cefr", "efllex", "embedding_norms", "senses")

    def lookup(self, kind: str, word: str, pos: Optional[str] = None):
        """Case-insensitive exact-match lookup; ``None`` when the word (or the
        whole resource) is absent."""
        if kind not in self._KINDS:
            raise KeyError(f"unknown resource kind {kind!r}")
        resource = getattr(self, kind)
        if resource is None:
            return None
        key = normalize_word(word)
        if kind == "senses":
            if pos is None:
                return resource.word_aggregate(key)
            return resource.entries.get((key, normalize_word(pos)))
        return resource.entries.get(key)


def lookup(bundle: ResourceBundle, kind: str, word: str, pos: Optional[str] = None):
    return bundle.lookup(kind, word, pos)


# ---------------------------------------------------------------------------
# TSV parsing


def _read_tsv(path, required):
    """Yield (line_no, row dict) for each data row; validates the header."""
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter="\t")
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyResource(path) from None
        header = [h.strip() for h in header]
        for col in required:
            if col not in header:
                raise MissingRequiredColumn(path, col)
        index = {col: header.index(col) for col in header}
        n_rows = 0
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            n_rows += 1
            yield line_no, {col: row[i] if i < len(row) else "" for col, i in index.items()}
        if n_rows == 0:
            raise EmptyResource(path)


def _parse_float(path, line_no, raw, name, minimum=None, maximum=None):
    try:
        value = float(raw)
    except ValueError:
        raise MalformedRow(path, line_no, f"{name} is not a number: {raw!r}") from None
    if not math.isfinite(value):
        raise MalformedRow(path, line_no, f"{name} is not finite: {raw!r}")
    if minimum is not None and value < minimum:
        raise MalformedRow(path, line_no, f"{name} must be >= {minimum}, got {value}")
    if maximum is not None and value > maximum:
        raise MalformedRow(path, line_no, f"{name} must be <= {maximum}, got {value}")
    return value


def _insert(entries, path, line_no, word, value, dupes):
    key = normalize_word(word)
    if not key:
        raise MalformedRow(path, line_no, "empty word")
    if key in entries:
        dupes[0] += 1  # first occurrence wins
        return
    entries[key] = value


def load_frequency(path) -> FrequencyNorms:
    entries, dupes = {}, [0]
    for line_no, row in _read_tsv(path, ("word", "fpmw", "cd_proportion", "pos_counts")):
        fpmw = _parse_float(path, line_no, row["fpmw"], "fpmw", minimum=0.0)
        cd = _parse_float(path, line_no, row["cd_proportion"], "cd_proportion", 0.0, 1.0)
        pos_counts = {}
        raw = row["pos_counts"].strip()
        if raw:
            for pair in raw.split(";"):
                if not pair.strip():
                    continue
                tag, _, count = pair.partition(":")
                if not count:
                    raise MalformedRow(path, line_no, f"bad pos_counts entry {pair!r}")
                n = _parse_float(path, line_no, count, f"pos_counts[{tag}]", minimum=0.0)
                pos_counts[normalize_word(tag)] = n
        entry = FrequencyEntry(fpmw=fpmw, cd_proportion=cd, pos_counts=pos_counts)
        _insert(entries, path, line_no, row["word"], entry, dupes)
    if dupes[0]:
        logger.warning("%s: %d duplicate words ignored (first occurrence wins)", path, dupes[0])
    return FrequencyNorms(entries=entries)


def load_aoa(path) -> AoaNorms:
    entries, dupes = {}, [0]
    for line_no, row in _read_tsv(path, ("word", "aoa_mean", "percent_known", "n_phonemes")):
        aoa = _parse_float(path, line_no, row["aoa_mean"], "aoa_mean", minimum=0.0)
        if aoa <= 0:
            raise MalformedRow(path, line_no, f"aoa_mean must be > 0, got {aoa}")
        pk = _parse_float(path, line_no, row["percent_known"], "percent_known", 0.0, 1.0)
        nph = _parse_float(path, line_no, row["n_phonemes"], "n_phonemes", minimum=1.0)
        entry = AoaEntry(aoa_mean=aoa, percent_known=pk, n_phonemes=int(nph))
        _insert(entries, path, line_no, row["word"], entry, dupes)
    if dupes[0]:
        logger.warning("%s: %d duplicate words ignored (first occurrence wins)", path, dupes[0])
    return AoaNorms(entries=entries)


def load_cefr(path) -> CefrLevels:
    entries, dupes = {}, [0]
    for line_no, row in _read_tsv(path, ("word", "level")):
        level = row["level"].strip().upper()
        if level not in CEFR_ORDINALS:
            raise MalformedRow(path, line_no, f"unknown CEFR level {row['level']!r}")
        _insert(entries, path, line_no, row["word"], CEFR_ORDINALS[level], dupes)
    if dupes[0]:
        logger.warning("%s: %d duplicate words ignored (first occurrence wins)", path, dupes[0])
    return CefrLevels(entries=entries)


def load_efllex(path) -> LearnerLevelFrequencies:
    cols = ("freq_a1", "freq_a2", "freq_b1", "freq_b2", "freq_c1")
    entries, dupes = {}, [0]
    for line_no, row in _read_tsv(path, ("word",) + cols):
        bands = tuple(_parse_float(path, line_no, row[c], c, minimum=0.0) for c in cols)
        _insert(entries, path, line_no, row["word"], EfllexEntry(bands=bands), dupes)
    if dupes[0]:
        logger.warning("%s: %d duplicate words ignored (first occurrence wins)", path, dupes[0])
    return LearnerLevelFrequencies(entries=entries)


def load_embedding_norms(path) -> EmbeddingNorms:
    entries, dupes = {}, [0]
    for line_no, row in _read_tsv(path, ("word", "l2_norm")):
        norm = _parse_float(path, line_no, row["l2_norm"], "l2_norm", minimum=0.0)
        _insert(entries, path, line_no, row["word"], norm, dupes)
    if dupes[0]:
        logger.warning("%s: %d duplicate words ignored (first occurrence wins)", path, dupes[0])
    return EmbeddingNorms(entries=entries)


def load_embeddings_txt(path) -> EmbeddingNorms:
    """Word + whitespace-separated float vector per line; stores only the l2 norm."""
    path = Path(path)
    entries, dupes = {}, [0]
    n_rows = 0
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) == 2 and line_no == 1:
                continue  # fastText-style "count dim" header
            n_rows += 1
            word, values = parts[0], parts[1:]
            if not values:
                raise MalformedRow(path, line_no, "no vector components")
            try:
                norm = math.sqrt(sum(float(v) ** 2 for v in values))
            except ValueError:
                raise MalformedRow(path, line_no, "non-numeric vector component") from None
            _insert(entries, path, line_no, word, norm, dupes)
    if n_rows == 0:
        raise EmptyResource(path)
    if dupes[0]:
        logger.warning("%s: %d duplicate words ignored (first occurrence wins)", path, dupes[0])
    return EmbeddingNorms(entries=entries)


def load_senses(path) -> SenseStats:
    entries, dupes = {}, [0]
    for line_no, row in _read_tsv(path, ("word", "pos", "sense_count", "mean_hypernym_depth")):
        count = _parse_float(path, line_no, row["sense_count"], "sense_count", minimum=0.0)
        depth = _parse_float(path, line_no, row["mean_hypernym_depth"], "mean_hypernym_depth", minimum=0.0)
        synonyms = None
        if row.get("synonym_count", "").strip():
            synonyms = int(_parse_float(path, line_no, row["synonym_count"], "synonym_count", minimum=0.0))
        key = (normalize_word(row["word"]), normalize_word(row["pos"]))
        if not key[0]:
            raise MalformedRow(path, line_no, "empty word")
        if key in entries:
            dupes[0] += 1
            continue
        entries[key] = SenseEntry(sense_count=int(count), mean_hypernym_depth=depth, synonym_count=synonyms)
    if dupes[0]:
        logger.warning("%s: %d duplicate (word, pos) pairs ignored", path, dupes[0])
    return SenseStats(entries=entries)


_LOADERS = {
    "frequency": load_frequency,
    "aoa": load_aoa,
    "cefr": load_cefr,
    "efllex": load_efllex,
    "embedding_norms": load_embedding_norms,
    "senses": load_senses,
}


def _checksum(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def load_resource_bundle(config: dict) -> ResourceBundle:
    """Load every resource named in ``config`` (kind -> file path).

    Unknown keys are rejected; kinds missing from the config are marked absent
    and their lookups return ``None``.  As a convenience ``embedding_norms``
    may point at a raw embedding text file (``*.txt``), from which norms are
    computed on load.
    """
    loaded = {}
    provenance = {}
    for kind, path in config.items():
        if kind not in _LOADERS:
            raise KeyError(f"unknown resource kind {kind!r}")
        if path is None:
            continue
        path = Path(path)
        if kind == "embedding_norms" and path.suffix == ".txt":
            resource = load_embeddings_txt(path)
        else:
            resource = _LOADERS[kind](path)
        loaded[kind] = resource
        provenance[kind] = {
            "path": str(path),
            "rows": len(resource.entries),
            "sha256": _checksum(path),
        }
        logger.info("loaded %s: %d entries from %s", kind, len(resource.entries), path)
    return ResourceBundle(
        frequency=loaded.get("frequency"),
        aoa=loaded.get("aoa"),
        cefr=loaded.get("cefr"),
        efllex=loaded.get("efllex"),
        embedding_norms=loaded.get("embedding_norms"),
        senses=loaded.get("senses"),
        provenance=provenance,
    )


# ---------------------------------------------------------------------------
# Canonical re-serialization (round-trip support)

_CEFR_NAMES = {v: k for k, v in CEFR_ORDINALS.items()}


def write_resource_tsvs(bundle: ResourceBundle, out_dir) -> dict:
    """Write every loaded resource back to its canonical TSV; returns kind -> path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = {}

    def _write(kind, header, rows):
        path = out_dir / f"{kind}.tsv"
        with path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
        written[kind] = path

    if bundle.frequency is not None:
        _write(
            "frequency",
            ["word", "fpmw", "cd_proportion", "pos_counts"],
            [
                [w, repr(e.fpmw), repr(e.cd_proportion),
                 ";".join(f"{t}:{repr(c)}" for t, c in sorted(e.pos_counts.items()))]
                for w, e in sorted(bundle.frequency.entries.items())
            ],
        )
    if bundle.aoa is not None:
        _write(
            "aoa",
            ["word", "aoa_mean", "percent_known", "n_phonemes"],
            [[w, repr(e.aoa_mean), repr(e.percent_known), e.n_phonemes]
             for w, e in sorted(bundle.aoa.entries.items())],
        )
    if bundle.cefr is not None:
        _write(
            "cefr",
            ["word", "level"],
            [[w, _CEFR_NAMES[v]] for w, v in sorted(bundle.cefr.entries.items())],
        )
    if bundle.efllex is not None:
        _write(
            "efllex",
            ["word", "freq_a1", "freq_a2", "freq_b1", "freq_b2", "freq_c1"],
            [[w] + [repr(b) for b in e.bands] for w, e in sorted(bundle.efllex.entries.items())],
        )
    if bundle.embedding_norms is not None:
        _write(
            "embedding_norms",
            ["word", "l2_norm"],
            [[w, repr(n)] for w, n in sorted(bundle.embedding_norms.entries.items())],
        )
    if bundle.senses is not None:
        _write(
            "senses",
            ["word", "pos", "sense_count", "mean_hypernym_depth"],
            [[w, p, e.sense_count, repr(e.mean_hypernym_depth)]
             for (w, p), e in sorted(bundle.senses.entries.items())],
        )
    return written
