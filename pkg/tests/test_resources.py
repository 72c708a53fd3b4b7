import logging
import math

import pytest

from lexdiff.errors import EmptyResource, MalformedRow, MissingRequiredColumn
from lexdiff.resources import (
    load_embeddings_txt,
    load_frequency,
    load_resource_bundle,
    write_resource_tsvs,
)

from conftest import write_resource_files, write_tsv


def test_full_bundle_loads_with_counts(bundle):
    assert len(bundle.frequency.entries) == 17
    assert len(bundle.aoa.entries) == 14
    assert len(bundle.cefr.entries) == 15
    assert len(bundle.efllex.entries) == 12
    assert len(bundle.embedding_norms.entries) == 13
    assert len(bundle.senses.entries) == 18
    assert set(bundle.provenance) == {
        "frequency", "aoa", "cefr", "efllex", "embedding_norms", "senses",
    }
    assert all(p["rows"] > 0 for p in bundle.provenance.values())


def test_absent_resource_yields_missing_lookups(resource_config):
    cfg = dict(resource_config)
    del cfg["aoa"]
    partial = load_resource_bundle(cfg)
    assert partial.aoa is None
    assert partial.lookup("aoa", "cable") is None
    assert partial.lookup("frequency", "cable") is not None


def test_negative_fpmw_is_malformed(tmp_path):
    path = tmp_path / "frequency.tsv"
    write_tsv(path, ["word", "fpmw", "cd_proportion", "pos_counts"],
              [("thought", -1, 0.5, "")])
    with pytest.raises(MalformedRow):
        load_frequency(path)


def test_cd_proportion_out_of_range(tmp_path):
    path = tmp_path / "frequency.tsv"
    write_tsv(path, ["word", "fpmw", "cd_proportion", "pos_counts"],
              [("thought", 10, 1.5, "")])
    with pytest.raises(MalformedRow):
        load_frequency(path)


def test_missing_column(tmp_path):
    path = tmp_path / "frequency.tsv"
    write_tsv(path, ["word", "fpmw"], [("thought", 10)])
    with pytest.raises(MissingRequiredColumn):
        load_frequency(path)


def test_empty_resource(tmp_path):
    path = tmp_path / "frequency.tsv"
    write_tsv(path, ["word", "fpmw", "cd_proportion", "pos_counts"], [])
    with pytest.raises(EmptyResource):
        load_frequency(path)


def test_duplicate_words_first_wins(tmp_path, caplog):
    path = tmp_path / "frequency.tsv"
    write_tsv(path, ["word", "fpmw", "cd_proportion", "pos_counts"],
              [("cable", 20, 0.3, ""), ("Cable", 99, 0.9, "")])
    with caplog.at_level(logging.WARNING):
        norms = load_frequency(path)
    assert norms.entries["cable"].fpmw == 20
    assert any("duplicate" in rec.message for rec in caplog.records)


def test_lookup_is_case_insensitive_and_total(bundle):
    assert bundle.lookup("frequency", "The").fpmw > 0
    assert bundle.lookup("frequency", "  CABLE ").fpmw == 20.0
    assert bundle.lookup("aoa", "zzzzq") is None
    assert bundle.lookup("cefr", "cable") == 4  # B2


def test_sense_lookup_word_and_pos(bundle):
    entry = bundle.lookup("senses", "cable", "noun")
    assert entry.sense_count == 6
    # any-POS aggregate pools counts across entries
    pooled = bundle.lookup("senses", "cable")
    assert pooled.sense_count == 8


def test_min_zipf_over_loaded_norms(bundle):
    # rarest fixture word has 0.04 occurrences per million
    assert bundle.frequency.min_zipf == pytest.approx(math.log10(0.04) + 3.0)


def test_roundtrip_serialization(bundle, tmp_path):
    written = write_resource_tsvs(bundle, tmp_path)
    reloaded = load_resource_bundle({k: str(p) for k, p in written.items()})
    for word in bundle.frequency.entries:
        assert reloaded.lookup("frequency", word) == bundle.lookup("frequency", word)
    for word in bundle.aoa.entries:
        assert reloaded.lookup("aoa", word) == bundle.lookup("aoa", word)
    for word in bundle.cefr.entries:
        assert reloaded.lookup("cefr", word) == bundle.lookup("cefr", word)
    for word in bundle.efllex.entries:
        assert reloaded.lookup("efllex", word) == bundle.lookup("efllex", word)
    for word in bundle.embedding_norms.entries:
        assert reloaded.lookup("embedding_norms", word) == bundle.lookup("embedding_norms", word)
    for (word, pos) in bundle.senses.entries:
        assert reloaded.lookup("senses", word, pos) == bundle.lookup("senses", word, pos)


def test_row_order_does_not_matter(tmp_path):
    header = ["word", "fpmw", "cd_proportion", "pos_counts"]
    rows = [("alpha", 10, 0.1, "noun:5"), ("beta", 20, 0.2, "verb:3")]
    write_tsv(tmp_path / "a.tsv", header, rows)
    write_tsv(tmp_path / "b.tsv", header, rows[::-1])
    a = load_frequency(tmp_path / "a.tsv")
    b = load_frequency(tmp_path / "b.tsv")
    assert a.entries == b.entries


def test_embeddings_txt_computes_norms(tmp_path):
    path = tmp_path / "embeddings.txt"
    path.write_text("cable 3.0 4.0\nthe 1.0 0.0\n", encoding="utf-8")
    norms = load_embeddings_txt(path)
    assert norms.entries["cable"] == pytest.approx(5.0)
    assert norms.entries["the"] == pytest.approx(1.0)


def test_bundle_via_embeddings_txt(tmp_path):
    cfg_dir = tmp_path / "res"
    paths = write_resource_files(cfg_dir)
    emb = cfg_dir / "embeddings.txt"
    emb.write_text("cable 3.0 4.0\n", encoding="utf-8")
    paths["embedding_norms"] = str(emb)
    bundle = load_resource_bundle(paths)
    assert bundle.lookup("embedding_norms", "cable") == pytest.approx(5.0)


def test_unknown_resource_kind_rejected(resource_config):
    with pytest.raises(KeyError):
        load_resource_bundle({**resource_config, "bogus": "x.tsv"})
