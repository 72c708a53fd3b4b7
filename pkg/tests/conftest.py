"""Shared synthetic fixtures: a small but feature-complete resource set and
vocabulary splits that exercise every lookup path."""

from __future__ import annotations

import csv
from pathlib import Path

import pytest

from lexdiff.resources import load_resource_bundle

FREQUENCY_ROWS = [
    # word, fpmw, cd_proportion, pos_counts
    ("the", 60000.0, 1.0, "determiner:59000;adverb:1000"),
    ("cable", 20.0, 0.30, "noun:5124;verb:310"),
    ("thought", 180.0, 0.60, "verb:9000;noun:6000"),
    ("light", 300.0, 0.70, "noun:5000;adjective:3000;verb:2000"),
    ("question", 400.0, 0.80, "noun:9500;verb:500"),
    ("handbook", 5.0, 0.08, "noun:200"),
    ("received", 90.0, 0.45, "verb:8000;adjective:150"),
    ("picture", 150.0, 0.60, "noun:7000;verb:800"),
    ("fantasy", 25.0, 0.30, "noun:900"),
    ("sheep", 45.0, 0.40, "noun:2000"),
    ("rare", 0.04, 0.01, "adjective:30;noun:5"),
    # held-out words used by the dev/test fixtures
    ("window", 120.0, 0.55, "noun:3000;verb:50"),
    ("garden", 80.0, 0.50, "noun:2500"),
    ("bar", 95.0, 0.48, "noun:4000;verb:900"),
    ("record", 150.0, 0.58, "noun:5000;verb:3000"),
    ("water", 900.0, 0.90, "noun:12000;verb:1000"),
    ("bridge", 70.0, 0.42, "noun:1800;verb:200"),
]

AOA_ROWS = [
    # word, aoa_mean, percent_known, n_phonemes
    ("the", 2.8, 1.0, 2),
    ("window", 3.9, 1.0, 5),
    ("garden", 4.4, 1.0, 5),
    ("water", 3.0, 1.0, 4),
    ("a", 2.5, 1.0, 1),
    ("cable", 7.2, 0.98, 4),
    ("thought", 5.0, 1.0, 3),
    ("light", 4.1, 1.0, 3),
    ("question", 5.5, 0.99, 7),
    ("handbook", 9.8, 0.85, 7),
    ("received", 6.9, 0.97, 6),
    ("picture", 4.2, 1.0, 5),
    ("fantasy", 7.4, 0.95, 7),
    ("sheep", 4.0, 1.0, 3),
]

CEFR_ROWS = [
    ("the", "A1"),
    ("window", "A1"),
    ("garden", "A1"),
    ("bar", "A2"),
    ("water", "A1"),
    ("cable", "B2"),
    ("thought", "A2"),
    ("light", "A1"),
    ("question", "A1"),
    ("handbook", "C1"),
    ("received", "B1"),
    ("picture", "A1"),
    ("fantasy", "B2"),
    ("sheep", "A2"),
    ("rare", "B2"),
]

EFLLEX_ROWS = [
    # word, a1, a2, b1, b2, c1
    ("the", 12000.0, 11000.0, 10000.0, 9000.0, 8000.0),
    ("window", 20.0, 18.0, 15.0, 10.0, 7.0),
    ("water", 50.0, 45.0, 40.0, 30.0, 20.0),
    ("cable", 0.0, 0.0, 1.2, 0.8, 0.4),
    ("thought", 5.0, 9.0, 14.0, 13.0, 10.0),
    ("light", 30.0, 28.0, 25.0, 20.0, 15.0),
    ("question", 40.0, 55.0, 60.0, 38.0, 22.0),
    ("handbook", 0.0, 0.0, 0.0, 0.6, 0.0),
    ("received", 2.0, 4.0, 9.0, 9.0, 7.0),
    ("picture", 25.0, 22.0, 18.0, 12.0, 8.0),
    ("fantasy", 0.0, 1.5, 2.0, 2.5, 1.0),
    ("sheep", 6.0, 4.0, 2.0, 0.0, 0.0),
]

EMBEDDING_ROWS = [
    ("the", 1.2),
    ("window", 2.6),
    ("garden", 2.8),
    ("cable", 2.9),
    ("thought", 2.1),
    ("light", 2.4),
    ("question", 2.6),
    ("handbook", 3.1),
    ("received", 2.2),
    ("picture", 2.5),
    ("fantasy", 3.0),
    ("sheep", 2.7),
    ("rare", 2.8),
]

SENSE_ROWS = [
    # word, pos, sense_count, mean_hypernym_depth
    ("cable", "noun", 6, 5.33),
    ("window", "noun", 4, 6.8),
    ("bar", "noun", 9, 5.9),
    ("record", "verb", 6, 7.7),
    ("water", "noun", 6, 6.1),
    ("cable", "verb", 2, 7.0),
    ("thought", "noun", 5, 6.0),
    ("light", "noun", 10, 6.2),
    ("light", "verb", 5, 8.1),
    ("light", "adjective", 6, 5.0),
    ("question", "noun", 6, 5.1),
    ("question", "verb", 4, 8.2),
    ("handbook", "noun", 1, 7.0),
    ("received", "adjective", 1, 4.0),
    ("picture", "noun", 5, 5.5),
    ("picture", "verb", 3, 7.9),
    ("fantasy", "noun", 4, 6.3),
    ("sheep", "noun", 2, 8.5),
]


def write_tsv(path, header, rows):
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_resource_files(directory: Path) -> dict:
    directory.mkdir(parents=True, exist_ok=True)
    write_tsv(directory / "frequency.tsv", ["word", "fpmw", "cd_proportion", "pos_counts"], FREQUENCY_ROWS)
    write_tsv(directory / "aoa.tsv", ["word", "aoa_mean", "percent_known", "n_phonemes"], AOA_ROWS)
    write_tsv(directory / "cefr.tsv", ["word", "level"], CEFR_ROWS)
    write_tsv(
        directory / "efllex.tsv",
        ["word", "freq_a1", "freq_a2", "freq_b1", "freq_b2", "freq_c1"],
        EFLLEX_ROWS,
    )
    write_tsv(directory / "embedding_norms.tsv", ["word", "l2_norm"], EMBEDDING_ROWS)
    write_tsv(
        directory / "senses.tsv",
        ["word", "pos", "sense_count", "mean_hypernym_depth"],
        SENSE_ROWS,
    )
    return {
        "frequency": str(directory / "frequency.tsv"),
        "aoa": str(directory / "aoa.tsv"),
        "cefr": str(directory / "cefr.tsv"),
        "efllex": str(directory / "efllex.tsv"),
        "embedding_norms": str(directory / "embedding_norms.tsv"),
        "senses": str(directory / "senses.tsv"),
    }


KVL_HEADER = [
    "item_id", "l1", "source_word", "source_pos", "context_sentence",
    "clue_letter", "target_length", "target_word", "difficulty",
]

KVL_DE_TRAIN = [
    ("d1", "de", "Kabel", "noun", "Achtung, stolpere nicht über das Kabel am Boden.", "c", 5, "cable", 0.9),
    ("d2", "de", "etw entschlüsseln (nicht: decipher)", "verb", "Kannst du die Nachricht entschlüsseln?", "d", 6, "decode", -0.3),
    ("d3", "de", "Handbuch", "noun", "Lies zuerst das Handbuch.", "h", 8, "handbook", -0.5),
    ("d4", "de", "Licht", "noun", "Mach bitte das Licht an.", "l", 5, "light", 1.4),
    ("d5", "de", "Frage", "noun", "Das ist eine gute Frage.", "q", 8, "question", 2.0),
    ("d6", "de", "Schaf", "noun", "Das Schaf steht auf der Weide.", "s", 5, "sheep", 0.8),
    ("d7", "de", "Gedanke", "noun", "Ein interessanter Gedanke.", "t", 7, "thought", 0.2),
    ("d8", "de", "Fantasie", "noun", "Sie hat viel Fantasie.", "f", 7, "fantasy", 1.1),
    ("d9", "de", "empfangen", "adjective", "", "r", 8, "received", -1.2),
    ("d10", "de", "Bild", "noun", "Das Bild hängt schief.", "p", 7, "picture", 0.6),
]

KVL_ES_TRAIN = [
    ("e1", "es", "cable", "noun", "No tropieces con el cable.", "c", 5, "cable", 2.3),
    ("e2", "es", "banco (no: bench)", "noun", "Voy al banco a sacar dinero.", "b", 4, "bank", 0.4),
    ("e3", "es", "fantasía", "noun", "Tiene mucha fantasía.", "f", 7, "fantasy", 1.2),
    ("e4", "es", "pregunta", "noun", "Es una buena pregunta.", "q", 8, "question", 2.1),
    ("e5", "es", "manual", "noun", "Lee el manual primero.", "h", 8, "handbook", -0.4),
    ("e6", "es", "luz", "noun", "Enciende la luz.", "l", 5, "light", 1.0),
    ("e7", "es", "oveja", "noun", "La oveja está en el prado.", "s", 5, "sheep", -0.6),
    ("e8", "es", "pensamiento", "noun", "Un pensamiento interesante.", "t", 7, "thought", 0.1),
    ("e9", "es", "recibido", "adjective", "", "r", 8, "received", -1.0),
    ("e10", "es", "imagen", "noun", "La imagen está torcida.", "p", 7, "picture", 0.7),
]

KVL_ZH_TRAIN = [
    ("z1", "zh", "电缆", "noun", "小心别绊到地上的电缆。", "c", 5, "cable", 0.0),
    ("z2", "zh", "问题", "noun", "这是一个好问题。", "q", 8, "question", 1.6),
    ("z3", "zh", "手册", "noun", "请先阅读手册。", "h", 8, "handbook", -0.2),
    ("z4", "zh", "灯光", "noun", "请打开灯光。", "l", 5, "light", 0.9),
    ("z5", "zh", "绵羊", "noun", "绵羊在草地上。", "s", 5, "sheep", 0.3),
    ("z6", "zh", "想法", "noun", "一个有趣的想法。", "t", 7, "thought", -0.1),
    ("z7", "zh", "幻想 (非: 现实)", "noun", "她充满幻想。", "f", 7, "fantasy", 0.5),
    ("z8", "zh", "图片", "noun", "图片挂歪了。", "p", 7, "picture", 0.8),
]


def write_kvl_csv(path, rows):
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(KVL_HEADER)
        writer.writerows(rows)


@pytest.fixture(scope="session")
def resource_dir(tmp_path_factory):
    directory = tmp_path_factory.mktemp("resources")
    write_resource_files(directory)
    return directory


@pytest.fixture(scope="session")
def resource_config(resource_dir):
    return {
        "frequency": str(resource_dir / "frequency.tsv"),
        "aoa": str(resource_dir / "aoa.tsv"),
        "cefr": str(resource_dir / "cefr.tsv"),
        "efllex": str(resource_dir / "efllex.tsv"),
        "embedding_norms": str(resource_dir / "embedding_norms.tsv"),
        "senses": str(resource_dir / "senses.tsv"),
    }


@pytest.fixture(scope="session")
def bundle(resource_config):
    return load_resource_bundle(resource_config)


@pytest.fixture(scope="session")
def kvl_dir(tmp_path_factory):
    directory = tmp_path_factory.mktemp("kvl")
    write_kvl_csv(directory / "de_train.csv", KVL_DE_TRAIN)
    write_kvl_csv(directory / "es_train.csv", KVL_ES_TRAIN)
    write_kvl_csv(directory / "zh_train.csv", KVL_ZH_TRAIN)
    return directory


# --- full project fixture (CLI / service round-trips) -----------------------

KVL_DEV = {
    "de": [
        ("dd1", "de", "Apfel", "noun", "Der Apfel ist rot.", "a", 5, "apple", 1.5),
        ("dd2", "de", "Geschichte", "noun", "Erzähl mir eine Geschichte.", "s", 5, "story", 0.4),
    ],
    "es": [
        ("ed1", "es", "manzana", "noun", "La manzana es roja.", "a", 5, "apple", 1.3),
        ("ed2", "es", "historia", "noun", "Cuéntame una historia.", "s", 5, "story", 0.6),
    ],
    "zh": [
        ("zd1", "zh", "苹果", "noun", "苹果是红色的。", "a", 5, "apple", 0.9),
        ("zd2", "zh", "故事", "noun", "给我讲个故事。", "s", 5, "story", 0.2),
    ],
}

# bar and record are tested against their non-dominant POS (competition = yes)
KVL_TEST = {
    "de": [
        ("dt1", "de", "Fenster", "noun", "Mach das Fenster zu.", "w", 6, "window", 1.2),
        ("dt2", "de", "Garten", "noun", "Der Garten blüht.", "g", 6, "garden", 0.8),
        ("dt3", "de", "versperren", "verb", "", "b", 3, "bar", -0.7),
        ("dt4", "de", "aufnehmen", "verb", "", "r", 6, "record", -0.9),
        ("dt5", "de", "Wasser", "noun", "Das Wasser ist kalt.", "w", 5, "water", 1.9),
        ("dt6", "de", "Brücke", "noun", "Die Brücke ist alt.", "b", 6, "bridge", 0.5),
    ],
    "es": [
        ("et1", "es", "ventana", "noun", "Cierra la ventana.", "w", 6, "window", 1.0),
        ("et2", "es", "jardín", "noun", "El jardín florece.", "g", 6, "garden", 0.9),
        ("et3", "es", "obstruir", "verb", "", "b", 3, "bar", -1.0),
        ("et4", "es", "grabar", "verb", "", "r", 6, "record", -0.6),
        ("et5", "es", "agua", "noun", "El agua está fría.", "w", 5, "water", 1.7),
        ("et6", "es", "puente", "noun", "El puente es viejo.", "b", 6, "bridge", 0.3),
    ],
    "zh": [
        ("zt1", "zh", "窗户", "noun", "把窗户关上。", "w", 6, "window", 0.7),
        ("zt2", "zh", "花园", "noun", "花园里开满花。", "g", 6, "garden", 0.5),
        ("zt3", "zh", "阻挡", "verb", "", "b", 3, "bar", -1.2),
        ("zt4", "zh", "记录", "verb", "", "r", 6, "record", -0.4),
        ("zt5", "zh", "水", "noun", "水很凉。", "w", 5, "water", 1.4),
        ("zt6", "zh", "桥", "noun", "这座桥很老。", "b", 6, "bridge", 0.1),
    ],
}

KVL_EXTENSION_DE = [
    ("dx1", "de", "fantastisch", "adjective", "", "f", 9, "fantastic", ""),
    ("dx2", "de", "Mauer", "noun", "", "w", 4, "wall", ""),
]

INFLECTIONS = [
    ("cables", "cable", "noun", 1),
    ("lights", "light", "noun", 1),
    ("windows", "window", "noun", 1),
    ("recorded", "record", "verb", 1),
    ("bars", "bar", "noun", 1),
    ("bars", "bar", "verb", 0),
]

TRAIN_ROWS = {"de": KVL_DE_TRAIN, "es": KVL_ES_TRAIN, "zh": KVL_ZH_TRAIN}

CONFIG_TEMPLATE = """\
[resources]
frequency = "resources/frequency.tsv"
aoa = "resources/aoa.tsv"
cefr = "resources/cefr.tsv"
efllex = "resources/efllex.tsv"
embedding_norms = "resources/embedding_norms.tsv"
senses = "resources/senses.tsv"

[data.kvl.de]
train = "kvl/de_train.csv"
dev = "kvl/de_dev.csv"
test = "kvl/de_test.csv"

[data.kvl.es]
train = "kvl/es_train.csv"
dev = "kvl/es_dev.csv"
test = "kvl/es_test.csv"

[data.kvl.zh]
train = "kvl/zh_train.csv"
dev = "kvl/zh_dev.csv"
test = "kvl/zh_test.csv"

[output]
dir = "out"

[model]
tree_depth = 3
learning_rate = 0.3
n_iterations = 25

[eval]
seeds = [1, 8]

[analysis]
bootstrap_resamples = 50

[service]
inflections = "inflections.tsv"
annotate_size_limit = 5000

[service.extension]
de = "kvl/de_extension.csv"
"""


def write_project(root: Path) -> Path:
    """A complete miniature project: resources, splits, config, inflections."""
    write_resource_files(root / "resources")
    kvl = root / "kvl"
    kvl.mkdir(exist_ok=True)
    for l1, rows in TRAIN_ROWS.items():
        write_kvl_csv(kvl / f"{l1}_train.csv", rows)
    for l1, rows in KVL_DEV.items():
        write_kvl_csv(kvl / f"{l1}_dev.csv", rows)
    for l1, rows in KVL_TEST.items():
        write_kvl_csv(kvl / f"{l1}_test.csv", rows)
    write_kvl_csv(kvl / "de_extension.csv", KVL_EXTENSION_DE)
    write_tsv(root / "inflections.tsv", ["form", "lemma", "pos", "is_default"], INFLECTIONS)
    config = root / "config.toml"
    config.write_text(CONFIG_TEMPLATE, encoding="utf-8")
    return config


@pytest.fixture(scope="session")
def project(tmp_path_factory):
    root = tmp_path_factory.mktemp("project")
    return write_project(root)


@pytest.fixture(scope="session")
def trained_project(project):
    """Project with models already trained for both seeds and all three L1s."""
    from lexdiff.config import load_config
    from lexdiff.pipeline import load_context, train_l1

    cfg = load_config(project)
    ctx = load_context(cfg)
    for l1 in cfg.languages:
        train_l1(ctx, l1, cfg.out_dir)
    return project
