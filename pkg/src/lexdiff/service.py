"""Read-only HTTP JSON API over trained models.

Endpoints (all under /v1, CORS enabled for the configured UI origin):

- ``GET /v1/languages`` — L1 codes with a loaded model.
- ``POST /v1/annotate`` — ``{text, l1, include_extension}`` -> tokenized text
  where every alphabetic token is resolved through the inflection table and
  scored; unknown tokens are flagged, never dropped.
- ``GET /v1/word/{l1}/{lemma}?pos=&include_extension=`` — full report for one
  lemma, listing all POS alternatives (the most frequent POS is the default).

Reports carry the predicted difficulty, gold difficulty when the item is part
of the test inventory, normalized group shares, the top features by absolute
attribution, and a difficulty color bin quantized against quintiles of the
training difficulty distribution, so clients never recompute model outputs.
"""

from __future__ import annotations

import csv
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from fastapi import FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from . import corpus, explain, features, model as model_mod, pipeline
from .config import RunConfig
from .errors import MissingColumn
from .resources import normalize_word

logger = logging.getLogger(__name__)

TOP_K_FEATURES = 5
_TOKEN_RE = re.compile(r"[^\W\d_]+|[\W\d_]+", re.UNICODE)


@dataclass(frozen=True)
class InflectionEntry:
    lemma: str
    pos: str
    is_default: bool


def load_inflections(path) -> dict:
    """form -> list of (lemma, pos) candidates; the default POS flagged."""
    table = {}
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter="\t")
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:4]] != ["form", "lemma", "pos", "is_default"]:
            raise MissingColumn(path, "form/lemma/pos/is_default")
        for row in reader:
            if len(row) < 4 or not row[0].strip():
                continue
            form = normalize_word(row[0])
            entry = InflectionEntry(
                lemma=normalize_word(row[1]),
                pos=normalize_word(row[2]),
                is_default=row[3].strip() in ("1", "true", "True"),
            )
            table.setdefault(form, []).append(entry)
    return table


@dataclass
class L1State:
    ensemble: model_mod.TreeEnsemble
    vectorizer: object
    items: dict  # (lemma, pos) -> KvlItem (KVL + extension)
    extension_keys: set  # keys only available with include_extension
    gold: dict  # (lemma, pos) -> gold difficulty (KVL only)
    bin_edges: tuple  # training-difficulty quintile edges
    report_cache: dict = field(default_factory=dict)

    def pos_alternatives(self, lemma: str, include_extension: bool) -> list:
        out = []
        for (lem, pos), _ in self.items.items():
            if lem != lemma:
                continue
            if not include_extension and (lem, pos) in self.extension_keys:
                continue
            out.append(pos)
        return sorted(set(out))


class AnnotateRequest(BaseModel):
    text: str
    l1: str
    include_extension: bool = False


def difficulty_bin(value: float, edges) -> int:
    """0 (hardest) .. len(edges) (easiest); gold scores are higher-is-easier."""
    return int(sum(value >= e for e in edges))


def _build_l1_state(ctx, cfg: RunConfig, l1: str) -> L1State:
    out = Path(cfg.out_dir)
    models = pipeline.load_models(out, l1)
    ensemble = models[sorted(models)[0]]
    vectorizer = pipeline.load_saved_vectorizer(out, l1)

    items = {}
    gold = {}
    extension_keys = set()
    train_gold = []
    for split in ("train", "dev", "test"):
        if (l1, split) not in cfg.kvl:
            continue
        sp = ctx.split(l1, split)
        for it in sp.items:
            key = (normalize_word(it.target_word), it.source_pos)
            items.setdefault(key, it)
            if it.difficulty is not None:
                gold.setdefault(key, it.difficulty)
                if split == "train":
                    train_gold.append(it.difficulty)
    if cfg.extension_paths.get(l1):
        ext = corpus.parse_kvl(cfg.extension_paths[l1], l1, "extension", cfg.column_map)
        for it in ext.items:
            key = (normalize_word(it.target_word), it.source_pos)
            if key not in items:
                items[key] = it
                extension_keys.add(key)
    edges = tuple(float(e) for e in np.quantile(train_gold, [0.2, 0.4, 0.6, 0.8])) if train_gold else ()
    return L1State(
        ensemble=ensemble,
        vectorizer=vectorizer,
        items=items,
        extension_keys=extension_keys,
        gold=gold,
        bin_edges=edges,
    )


@dataclass
class ServiceState:
    ctx: object
    cfg: RunConfig
    l1_states: dict
    inflections: dict
    load_errors: list

    def languages(self) -> list:
        return sorted(self.l1_states)


def load_service_state(cfg: RunConfig) -> ServiceState:
    ctx = pipeline.load_context(cfg)
    l1_states = {}
    errors = []
    for l1 in cfg.languages:
        try:
            l1_states[l1] = _build_l1_state(ctx, cfg, l1)
        except Exception as exc:  # surfaced as 500 by the languages endpoint
            logger.error("failed to load %s: %s", l1, exc)
            errors.append(f"{l1}: {exc}")
    inflections = load_inflections(cfg.inflections_path) if cfg.inflections_path else {}
    return ServiceState(ctx=ctx, cfg=cfg, l1_states=l1_states, inflections=inflections, load_errors=errors)


def _word_report(state: ServiceState, l1: str, key: tuple) -> dict:
    l1_state = state.l1_states[l1]
    if key in l1_state.report_cache:
        return l1_state.report_cache[key]
    item = l1_state.items[key]
    row = features.extract_features(item, state.ctx.bundle, l1_state.vectorizer, state.ctx.pos_map)
    table = features.rows_to_table([row])
    prediction = float(model_mod.predict(l1_state.ensemble, table)[0])
    attr = explain.explain_table(l1_state.ensemble, table)[0]
    top = sorted(attr.phi.items(), key=lambda kv: (-abs(kv[1]), kv[0]))[:TOP_K_FEATURES]
    gold = l1_state.gold.get(key)
    shown = gold if gold is not None else prediction
    report = {
        "lemma": key[0],
        "pos": key[1],
        "l1": l1,
        "predicted": prediction,
        "gold": gold,
        "group_shares": attr.group_shares,
        "top_features": [
            {"name": name, "phi": value, "value": _display_value(row, name)}
            for name, value in top
        ],
        "clue_letter": item.clue_letter,
        "source_word": item.source_word,
        "bin": difficulty_bin(shown, l1_state.bin_edges),
        "is_extension": key in l1_state.extension_keys,
    }
    l1_state.report_cache[key] = report
    return report


def _display_value(row: features.FeatureRow, name: str):
    value = row[name]
    if isinstance(value, str):
        return value
    if np.isnan(value):
        return None
    return float(value)


def _default_pos(state: ServiceState, l1: str, form: str, alternatives: list) -> str:
    """Most frequent POS when the norms know the word, else the first option."""
    freq = state.ctx.bundle.frequency
    if freq is not None:
        dominant = corpus.dominant_pos(freq, form)
        if dominant is not None:
            for pos in alternatives:
                if state.ctx.pos_map.get(pos, pos) == dominant:
                    return pos
    return alternatives[0]


def _resolve_token(state: ServiceState, l1: str, token: str, include_extension: bool):
    """Inflection lookup first, then the bare form as a lemma; returns a key
    (lemma, pos) or None."""
    l1_state = state.l1_states[l1]
    form = normalize_word(token)

    def usable(key):
        if key not in l1_state.items:
            return False
        return include_extension or key not in l1_state.extension_keys

    candidates = []
    for entry in state.inflections.get(form, []):
        key = (entry.lemma, entry.pos)
        if usable(key):
            candidates.append((entry.is_default, key))
    if candidates:
        for is_default, key in candidates:
            if is_default:
                return key
        return candidates[0][1]
    alternatives = l1_state.pos_alternatives(form, include_extension)
    if alternatives:
        return (form, _default_pos(state, l1, form, alternatives))
    return None


def build_app(cfg: RunConfig, state: Optional[ServiceState] = None) -> FastAPI:
    app = FastAPI(
        title="lexdiff service",
        version="1.0",
        description="Read-only lexical-difficulty predictions with per-word attributions.",
    )
    app.add_middleware(
        CORSMiddleware,
        allow_origins=[cfg.service_ui_origin],
        allow_methods=["GET", "POST"],
        allow_headers=["*"],
    )
    if state is None:
        state = load_service_state(cfg)
    app.state.lexdiff = state

    @app.get("/v1/languages")
    def languages():
        if state.load_errors:
            raise HTTPException(status_code=500, detail={"errors": state.load_errors})
        return state.languages()

    @app.post("/v1/annotate")
    def annotate(req: AnnotateRequest):
        if req.l1 not in state.l1_states:
            raise HTTPException(status_code=400, detail=f"unknown or unloaded l1 {req.l1!r}")
        if len(req.text) > cfg.annotate_size_limit:
            raise HTTPException(status_code=413, detail="text exceeds the configured size limit")
        if not req.text.strip():
            raise HTTPException(status_code=422, detail="text is empty")
        tokens = []
        for chunk in _TOKEN_RE.findall(req.text):
            alphabetic = bool(chunk) and chunk[0].isalpha()
            if not alphabetic:
                tokens.append({"text": chunk, "alphabetic": False})
                continue
            key = _resolve_token(state, req.l1, chunk, req.include_extension)
            if key is None:
                tokens.append({"text": chunk, "alphabetic": True, "known": False})
            else:
                report = _word_report(state, req.l1, key)
                tokens.append(
                    {"text": chunk, "alphabetic": True, "known": True, "report": report}
                )
        return {"l1": req.l1, "tokens": tokens}

    @app.get("/v1/word/{l1}/{lemma}")
    def word(l1: str, lemma: str, pos: Optional[str] = Query(default=None),
             include_extension: bool = Query(default=False)):
        if l1 not in state.l1_states:
            raise HTTPException(status_code=400, detail=f"unknown or unloaded l1 {l1!r}")
        l1_state = state.l1_states[l1]
        form = normalize_word(lemma)
        alternatives = l1_state.pos_alternatives(form, include_extension)
        if not alternatives:
            raise HTTPException(status_code=404, detail=f"unknown lemma {lemma!r} for {l1}")
        if pos is None:
            key = _resolve_token(state, l1, form, include_extension)
            if key is None or key[0] != form:
                key = (form, _default_pos(state, l1, form, alternatives))
        else:
            pos = normalize_word(pos)
            if pos not in alternatives:
                raise HTTPException(status_code=404, detail=f"no {pos!r} entry for {lemma!r}")
            key = (form, pos)
        report = dict(_word_report(state, l1, key))
        report["pos_alternatives"] = alternatives
        return report

    return app
