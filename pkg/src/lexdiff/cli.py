"""Command-line interface.

One executable, one subcommand per pipeline stage::

    lexdiff extract   write features.csv per L1/split
    lexdiff train     fit per-seed ensembles and persist them
    lexdiff evaluate  in-L1 report (boosted + ridge) and the cross-L1 matrix
    lexdiff explain   attributions.csv and the mean-|SHAP| table
    lexdiff analyze   all derived-analysis CSVs (and optional PNG plots)
    lexdiff predict   one-shot difficulty + shares for a wordlist CSV (JSON on stdout)
    lexdiff serve     start the HTTP service

Logs go to stderr and artifacts to files; stdout is reserved for `predict`.
Exit codes: 0 ok, 2 config error, 3 data error, 4 internal invariant violation.
"""

from __future__ import annotations

import contextlib
import csv
import json
import logging
import os
import sys
from pathlib import Path

import click
import numpy as np

from . import analysis, evaluation, explain, features, model as model_mod, pipeline
from .config import RunConfig, load_config, override
from .errors import ConfigError, DataError, LexdiffError

logger = logging.getLogger("lexdiff")


@contextlib.contextmanager
def output_lock(out_dir):
    """A single process owns the output directory."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    lock = out_dir / ".lock"
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise ConfigError(
            f"output directory {out_dir} is locked by another run; remove {lock} if stale"
        ) from None
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield out_dir
    finally:
        lock.unlink(missing_ok=True)


def _fail(exc: Exception, code: int):
    doc = {"error": type(exc).__name__, "message": str(exc)}
    print(json.dumps(doc), file=sys.stderr)
    sys.exit(code)


def _run(fn, *args, **kwargs):
    try:
        fn(*args, **kwargs)
    except ConfigError as exc:
        _fail(exc, 2)
    except DataError as exc:
        _fail(exc, 3)
    except LexdiffError as exc:
        _fail(exc, 4)


@click.group()
@click.option("--config", "config_path", required=True, type=click.Path(), help="TOML run config.")
@click.option("--out", "out_dir", default=None, type=click.Path(), help="Override output directory.")
@click.option("-v", "--verbose", is_flag=True, help="Debug logging.")
@click.pass_context
def main(ctx, config_path, out_dir, verbose):
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = load_config(config_path)
        cfg = override(cfg, out_dir=str(Path(out_dir)) if out_dir else None)
    except ConfigError as exc:
        _fail(exc, 2)
    ctx.obj = cfg


def _seed_list(seeds, cfg: RunConfig):
    return tuple(int(s) for s in seeds) if seeds else cfg.seeds


@main.command()
@click.option("--l1", "languages", multiple=True, help="Restrict to these L1s.")
@click.option("--split", "splits", multiple=True, help="Restrict to these splits.")
@click.pass_obj
def extract(cfg: RunConfig, languages, splits):
    """Write feature and ablation CSVs for every configured L1/split."""

    def go():
        ctx = pipeline.load_context(cfg)
        with output_lock(cfg.out_dir) as out:
            feat_dir = out / "features"
            feat_dir.mkdir(exist_ok=True)
            wanted_l1 = languages or cfg.languages
            wanted_splits = splits or ("train", "dev", "test")
            for l1 in wanted_l1:
                char_dist = features.fit_char_distribution(
                    it.target_word for it in ctx.split(l1, "train").items
                )
                for split in wanted_splits:
                    if (l1, split) not in cfg.kvl:
                        continue
                    rows, _, sp = pipeline.extract(ctx, l1, l1, split)
                    path = feat_dir / f"{l1}_{split}.csv"
                    features.write_features_csv(rows, path)
                    ablation = [
                        features.extract_ablation(it, ctx.bundle, char_dist) for it in sp.items
                    ]
                    _write_ablation_csv(ablation, feat_dir / f"ablation_{l1}_{split}.csv")
                    logger.info("wrote %s (%d rows)", path, len(rows))

    _run(go)


def _write_ablation_csv(rows, path):
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["item_id"] + list(features.ABLATION_NAMES))
        for row in rows:
            writer.writerow(
                [row.item_id]
                + ["" if np.isnan(row.values[n]) else repr(row.values[n]) for n in features.ABLATION_NAMES]
            )


@main.command()
@click.option("--l1", "languages", multiple=True)
@click.option("--seeds", multiple=True, type=int)
@click.pass_obj
def train(cfg: RunConfig, languages, seeds):
    """Train one boosted ensemble per L1 and seed; persist model + vectorizer."""

    def go():
        ctx = pipeline.load_context(cfg)
        with output_lock(cfg.out_dir) as out:
            for l1 in languages or cfg.languages:
                pipeline.train_l1(ctx, l1, out, _seed_list(seeds, cfg))

    _run(go)


@main.command()
@click.pass_obj
def evaluate(cfg: RunConfig):
    """In-L1 metrics for boosted and ridge models plus the cross-L1 matrix."""

    def go():
        ctx = pipeline.load_context(cfg)
        with output_lock(cfg.out_dir) as out:
            eval_dir = out / "eval"
            eval_dir.mkdir(exist_ok=True)
            predictions, gold = pipeline.prediction_grid(ctx, out, "test")
            matrix = evaluation.cross_l1_matrix(predictions, gold)
            evaluation.write_cross_l1_csv(matrix, eval_dir / "cross_l1.csv")

            reports = [matrix[(l1, l1)] for l1 in cfg.languages if (l1, l1) in matrix]
            ridge_rows = []
            for l1 in cfg.languages:
                _, train_table, train_sp = pipeline.extract(ctx, l1, l1, "train")
                ridge = model_mod.train_ridge(train_table, pipeline.gold_vector(train_sp), cfg.ridge_l2)
                _, test_table, test_sp = pipeline.extract(ctx, l1, l1, "test")
                pred = model_mod.predict_ridge(ridge, test_table)
                gold_t = pipeline.gold_vector(test_sp)
                ridge_rows.append(
                    {
                        "l1": l1,
                        "rmse": evaluation.rmse(pred, gold_t),
                        "pearson": evaluation.pearson(pred, gold_t),
                        "n_items": int(gold_t.size),
                    }
                )
            evaluation.write_eval_report_json(reports, eval_dir / "eval_report.json")
            with (eval_dir / "ridge_report.json").open("w", encoding="utf-8") as fh:
                json.dump(ridge_rows, fh, indent=2, sort_keys=True)
                fh.write("\n")
            logger.info("wrote %s", eval_dir / "cross_l1.csv")

    _run(go)


def _attributions_by_seed(ctx, out, l1):
    models = pipeline.load_models(out, l1)
    _, table, sp = pipeline.extract(ctx, l1, l1, "test")
    by_seed = {}
    for seed in sorted(models):
        by_seed[seed] = explain.explain_table(models[seed], table)
    return by_seed, table, sp


@main.command("explain")
@click.option("--l1", "languages", multiple=True)
@click.pass_obj
def explain_cmd(cfg: RunConfig, languages):
    """Per-item attributions per seed and the mean-|SHAP| table."""

    def go():
        ctx = pipeline.load_context(cfg)
        with output_lock(cfg.out_dir) as out:
            exp_dir = out / "explain"
            exp_dir.mkdir(exist_ok=True)
            mean_table = {}
            for l1 in languages or cfg.languages:
                by_seed, _, _ = _attributions_by_seed(ctx, out, l1)
                for seed, attrs in by_seed.items():
                    explain.write_attributions_csv(attrs, exp_dir / f"attributions_{l1}_seed{seed}.csv")
                mean_table[l1] = explain.mean_abs_shap_table(list(by_seed.values()))
            _write_mean_abs_csv(mean_table, exp_dir / "mean_abs_shap.csv")
            logger.info("wrote %s", exp_dir / "mean_abs_shap.csv")

    _run(go)


def _write_mean_abs_csv(mean_table: dict, path):
    l1s = sorted(mean_table)
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["feature", "group"] + l1s)
        for name in features.FEATURE_NAMES:
            writer.writerow(
                [name, features.FEATURE_GROUPS[name]]
                + [repr(mean_table[l1][name]) for l1 in l1s]
            )


@main.command()
@click.option("--plots", is_flag=True, help="Also render static PNG plots.")
@click.pass_obj
def analyze(cfg: RunConfig, plots):
    """All derived analyses: profiles, simplex + surface, correlations,
    dispersion study, frequency/similarity export, Aitchison variances."""

    def go():
        ctx = pipeline.load_context(cfg)
        with output_lock(cfg.out_dir) as out:
            ana_dir = out / "analysis"
            ana_dir.mkdir(exist_ok=True)
            aitchison_rows = []
            dispersion_reports = []
            for l1 in cfg.languages:
                by_seed, table, sp = _attributions_by_seed(ctx, out, l1)
                attrs = pipeline.median_attributions(list(by_seed.values()))

                profile = analysis.importance_profiles(attrs)
                analysis.write_profile_csv(profile, ana_dir / f"fig3_profiles_{l1}.csv")

                points = pipeline.simplex_for_l1(attrs, sp)
                analysis.write_simplex_csv(points, ana_dir / f"fig4_simplex_{l1}.csv")
                try:
                    surface = analysis.nw_surface(points)
                    analysis.write_surface_csv(surface, ana_dir / f"fig4_surface_{l1}.csv")
                except LexdiffError as exc:
                    logger.warning("surface for %s skipped: %s", l1, exc)
                    surface = None

                comps = np.asarray([[p.familiarity, p.meaning, p.form] for p in points])
                totvar, (lo, hi) = analysis.aitchison_total_variance(
                    comps, n_boot=cfg.bootstrap_resamples, seed=cfg.analysis_seed
                )
                aitchison_rows.append([l1, repr(totvar), repr(lo), repr(hi)])

                rho = analysis.feature_correlation_matrix(table)
                analysis.write_matrix_csv(
                    rho, features.NUMERIC_FEATURES, ana_dir / f"fig6_feature_corr_{l1}.csv"
                )

                models = pipeline.load_models(out, l1)
                _, test_table, _ = pipeline.extract(ctx, l1, l1, "test")
                per_seed_pred = {s: model_mod.predict(m, test_table) for s, m in models.items()}
                errors, flags = pipeline.dispersion_inputs(ctx, l1, per_seed_pred)
                dispersion_reports.append(analysis.pos_dispersion_study(errors, flags, l1))

                rows, _, _ = pipeline.extract(ctx, l1, l1, "test")
                char_dist = features.fit_char_distribution(
                    it.target_word for it in ctx.split(l1, "train").items
                )
                ablation = [features.extract_ablation(it, ctx.bundle, char_dist) for it in sp.items]
                golds = [it.difficulty for it in sp.items]
                records = analysis.frequency_similarity_export(attrs, rows, golds, ablation)
                analysis.write_export_csv(records, ana_dir / f"fig11_freq_similarity_{l1}.csv")

                if plots:
                    from . import plots as plots_mod

                    plots_mod.render_l1(ana_dir, l1, profile, points, surface, records)

            with (ana_dir / "aitchison.csv").open("w", encoding="utf-8", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(["l1", "total_variance", "ci_low", "ci_high"])
                writer.writerows(aitchison_rows)
            analysis.write_dispersion_csv(dispersion_reports, ana_dir / "fig8_dispersion.csv")

            splits = {l1: ctx.split(l1, "test") for l1 in cfg.languages}
            corr = analysis.difficulty_correlations(splits)
            with (ana_dir / "fig10_gold_correlations.csv").open("w", encoding="utf-8", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(["l1_a", "l1_b", "pearson_r", "n_shared"])
                for (a, b), (r, n) in sorted(corr.items()):
                    writer.writerow([a, b, repr(r), n])
            logger.info("analysis artifacts in %s", ana_dir)

    _run(go)


@main.command()
@click.argument("wordlist", type=click.Path(exists=True))
@click.option("--l1", required=True)
@click.option("--seed", type=int, default=None, help="Model seed (default: first trained).")
@click.pass_obj
def predict(cfg: RunConfig, wordlist, l1, seed):
    """Score arbitrary items from a KVL-schema CSV; JSON on stdout."""

    def go():
        ctx = pipeline.load_context(cfg)
        out = Path(cfg.out_dir)
        models = pipeline.load_models(out, l1, [seed] if seed is not None else None)
        ensemble = models[sorted(models)[0]]
        vec = pipeline.load_saved_vectorizer(out, l1)
        sp = pipeline.corpus.parse_kvl(wordlist, l1, "predict", cfg.column_map)
        rows = features.extract_split(sp, ctx.bundle, vec, ctx.pos_map)
        table = features.rows_to_table(rows)
        attrs = explain.explain_table(ensemble, table)
        preds = model_mod.predict(ensemble, table)
        doc = [
            {
                "item_id": it.item_id,
                "target_word": it.target_word,
                "l1": l1,
                "prediction": float(p),
                "group_shares": a.group_shares,
                "gold": it.difficulty,
            }
            for it, p, a in zip(sp.items, preds, attrs)
        ]
        print(json.dumps(doc, indent=2, sort_keys=True))

    _run(go)


@main.command()
@click.pass_obj
def serve(cfg: RunConfig):
    """Run the read-only HTTP JSON API over the trained models."""

    def go():
        import uvicorn

        from .service import build_app

        app = build_app(cfg)
        uvicorn.run(app, host=cfg.service_host, port=cfg.service_port, log_level="info")

    _run(go)


if __name__ == "__main__":
    main()
