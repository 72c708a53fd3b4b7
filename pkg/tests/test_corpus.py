import logging

import pytest

from lexdiff.corpus import (
    KvlItem,
    confusor_flag,
    dominant_pos,
    ensure_disjoint_targets,
    load_pos_map,
    parse_kvl,
    pos_competition_flag,
    write_default_pos_map,
    write_kvl,
)
from lexdiff.errors import DataError, EmptySplit, MissingColumn, RowParseError

from conftest import KVL_DE_TRAIN, KVL_HEADER, write_kvl_csv


def make_item(**kwargs):
    defaults = dict(
        item_id="x1",
        l1="de",
        source_word="Kabel",
        source_pos="noun",
        context_sentence="",
        clue_letter="c",
        target_word="cable",
        target_length=5,
        difficulty=0.9,
    )
    defaults.update(kwargs)
    return KvlItem(**defaults)


def test_parse_happy_path(kvl_dir):
    split = parse_kvl(kvl_dir / "de_train.csv", "de", "train")
    assert len(split.items) == len(KVL_DE_TRAIN)
    first = split.items[0]
    assert first.target_word == "cable"
    assert first.clue_letter == "c"
    assert first.target_length == 5
    assert first.difficulty == pytest.approx(0.9)


def test_clue_repair(tmp_path, caplog):
    rows = [("r1", "de", "Kabel", "noun", "", "x", 5, "cable", 1.0)]
    path = tmp_path / "bad.csv"
    write_kvl_csv(path, rows)
    with caplog.at_level(logging.WARNING):
        split = parse_kvl(path, "de")
    assert split.items[0].clue_letter == "c"
    assert any("repaired" in rec.message for rec in caplog.records)


def test_length_repair(tmp_path, caplog):
    rows = [("r1", "de", "Kabel", "noun", "", "c", 99, "cable", 1.0)]
    path = tmp_path / "bad.csv"
    write_kvl_csv(path, rows)
    with caplog.at_level(logging.WARNING):
        split = parse_kvl(path, "de")
    assert split.items[0].target_length == 5


def test_missing_column(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("item_id,l1\nr1,de\n", encoding="utf-8")
    with pytest.raises(MissingColumn):
        parse_kvl(path, "de")


def test_empty_split(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text(",".join(KVL_HEADER) + "\n", encoding="utf-8")
    with pytest.raises(EmptySplit):
        parse_kvl(path, "de")


def test_duplicate_item_id(tmp_path):
    rows = [
        ("r1", "de", "Kabel", "noun", "", "c", 5, "cable", 1.0),
        ("r1", "de", "Licht", "noun", "", "l", 5, "light", 1.0),
    ]
    path = tmp_path / "dup.csv"
    write_kvl_csv(path, rows)
    with pytest.raises(RowParseError):
        parse_kvl(path, "de")


def test_difficulty_optional(tmp_path):
    rows = [("r1", "de", "Kabel", "noun", "", "c", 5, "cable", "")]
    path = tmp_path / "nogold.csv"
    write_kvl_csv(path, rows)
    split = parse_kvl(path, "de")
    assert split.items[0].difficulty is None


def test_column_map_adapter(tmp_path):
    path = tmp_path / "shared_task.csv"
    path.write_text(
        "id,word_l1,pos,hint,answer\n"
        "s1,Kabel,noun,c,cable\n",
        encoding="utf-8",
    )
    split = parse_kvl(
        path,
        "de",
        column_map={
            "item_id": "id",
            "source_word": "word_l1",
            "source_pos": "pos",
            "clue_letter": "hint",
            "target_word": "answer",
        },
    )
    assert split.items[0].target_word == "cable"
    assert split.items[0].context_sentence == ""


def test_serialization_roundtrip_byte_identical(kvl_dir, tmp_path):
    split = parse_kvl(kvl_dir / "de_train.csv", "de", "train")
    out1 = tmp_path / "one.csv"
    write_kvl(split, out1)
    reparsed = parse_kvl(out1, "de", "train")
    out2 = tmp_path / "two.csv"
    write_kvl(reparsed, out2)
    assert out1.read_bytes() == out2.read_bytes()


def test_ensure_disjoint_targets(kvl_dir):
    train = parse_kvl(kvl_dir / "de_train.csv", "de", "train")
    with pytest.raises(DataError):
        ensure_disjoint_targets(train, type(train)(l1="de", split="dev", items=train.items[:1]))


# --- item-level flags -------------------------------------------------------


def test_confusor_flag_german_negation():
    item = make_item(source_word="etw entschlüsseln (nicht: decipher)", target_word="decode",
                     clue_letter="d", target_length=6)
    assert confusor_flag(item) is True


def test_confusor_flag_plain_word():
    assert confusor_flag(make_item(source_word="Kabel")) is False


def test_confusor_flag_spanish_negation():
    item = make_item(l1="es", source_word="banco (no: bench)", target_word="bank",
                     clue_letter="b", target_length=4)
    assert confusor_flag(item) is True


def test_confusor_flag_chinese_negation():
    item = make_item(l1="zh", source_word="幻想 (非: 现实)", target_word="fantasy",
                     clue_letter="f", target_length=7)
    assert confusor_flag(item) is True


def test_confusor_flag_in_context_sentence():
    item = make_item(source_word="entschlüsseln",
                     context_sentence="etw entschlüsseln (nicht: decipher)",
                     target_word="decode", clue_letter="d", target_length=6)
    assert confusor_flag(item) is True


def test_confusor_flag_explicit_exclusion():
    item = make_item(source_word="Bank (not the furniture)", target_word="bank",
                     clue_letter="b", target_length=4)
    assert confusor_flag(item) is True


def test_pos_competition_rare_sense(bundle):
    # tested as adjective while the norms are verb-dominant
    item = make_item(source_word="empfangen", source_pos="adjective",
                     target_word="received", clue_letter="r", target_length=8)
    assert pos_competition_flag(item, bundle.frequency) is True


def test_pos_competition_dominant_pos(bundle):
    item = make_item(source_pos="noun", target_word="cable")
    assert dominant_pos(bundle.frequency, "cable") == "noun"
    assert pos_competition_flag(item, bundle.frequency) is False


def test_pos_competition_absent_word(bundle):
    item = make_item(source_pos="noun", target_word="zzzzq", clue_letter="z", target_length=5)
    assert pos_competition_flag(item, bundle.frequency) is False


def test_pos_map_roundtrip(tmp_path):
    path = tmp_path / "pos_map.tsv"
    write_default_pos_map(path)
    mapping = load_pos_map(path)
    assert mapping["adj"] == "adjective"
    assert mapping["noun"] == "noun"


def test_item_invariant_l1():
    with pytest.raises(ValueError):
        make_item(l1="fr")
