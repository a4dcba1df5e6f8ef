"""Command-line surface: every pipeline stage is independently invocable.

Exit codes: 0 success, 1 unexpected error, 2 validation/config/bad
input, 3 missing file, 4 insufficient data (pool/items/minority/vocab),
5 annotation conflict, 6 balance gate failure, 7 degenerate labels.
"""

from __future__ import annotations

import json
import sys
from importlib import resources
from pathlib import Path

import click

from .annotation import (
    annotation_summary,
    blind_export,
    build_training_set,
    default_schema,
    read_labeled_dataset,
    read_records_jsonl,
    write_labeled_dataset,
    write_records_jsonl,
)
from .corpus import PostStore, iter_jsonl_records, iter_sqlite_records, load_store, write_posts_jsonl
from .errors import PgdetectError, StageError
from .evaluation import EvaluationReport, error_analysis, render_report_table
from .experiment import ExperimentConfig, log_event, run_experiment, run_from_manifest
from .sampling import select_annotation_pool

EXIT_CODES = {
    "error": 1,
    "validation": 2,
    "bad_input": 2,
    "not_found": 3,
    "insufficient_pool": 4,
    "insufficient_items": 4,
    "too_few_minority": 4,
    "empty_vocabulary": 4,
    "unresolved_conflict": 5,
    "balance_gate_failed": 6,
    "degenerate_labels": 7,
}


def _fail(stage: str, exc: Exception) -> None:
    code = getattr(exc, "code", None)
    if isinstance(exc, FileNotFoundError):
        code = "not_found"
    elif code is None and isinstance(exc, (ValueError, TypeError, LookupError)):
        code = "validation"
    if code is None:
        code = "error"
    click.echo(f"{stage}:{code}: {exc}", err=True)
    sys.exit(EXIT_CODES.get(code, 1))


def _guard(stage: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError as exc:
        _fail(exc.stage, exc.cause)
    except (PgdetectError, FileNotFoundError, LookupError, ValueError) as exc:
        _fail(stage, exc)


@click.group()
def main():
    """Problem-gambling sign detection pipeline."""


@main.command()
@click.argument("source", type=click.Path())
@click.option("--out", required=True, type=click.Path(), help="Normalized corpus JSONL.")
@click.option("--sqlite", "is_sqlite", is_flag=True, help="Treat SOURCE as a relational file.")
def ingest(source, out, is_sqlite):
    """Normalize raw posts (JSONL or sqlite) into the canonical corpus file."""
    if not Path(source).exists():
        _fail("ingest", FileNotFoundError(source))
    store = PostStore()
    records = iter_sqlite_records(source) if is_sqlite else iter_jsonl_records(source)
    report = _guard("ingest", store.ingest, records)
    write_posts_jsonl(store.query_posts(), out)
    click.echo(
        json.dumps(
            {
                "n_posts": report.n_posts,
                "n_authors": report.n_authors,
                "n_rejected": report.n_rejected,
                "reasons": report.reasons,
            },
            sort_keys=True,
        )
    )


@main.command()
@click.argument("corpus", type=click.Path())
def stats(corpus):
    """Descriptive corpus statistics as JSON."""
    store = _guard("stats", load_store, corpus)
    click.echo(json.dumps(store.stats().to_dict(), sort_keys=True, indent=2))


@main.command("select-pool")
@click.argument("corpus", type=click.Path())
@click.option("--seed", default=0, type=int)
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--max-tokens", default=512, type=int, show_default=True)
def select_pool(corpus, seed, out_dir, max_tokens):
    """Export the target pool and the length-matched control pool."""
    store = _guard("select-pool", load_store, corpus)
    selection = _guard("select-pool", select_annotation_pool, store, seed, max_tokens)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_posts_jsonl(selection.target_pool, out / "target_pool.jsonl")
    write_posts_jsonl(selection.control_pool, out / "control_pool.jsonl")
    balance = selection.balance_check.to_dict() if selection.balance_check else None
    (out / "balance.json").write_text(json.dumps(balance, sort_keys=True, indent=2) + "\n")
    click.echo(
        json.dumps(
            {
                "target_pool": len(selection.target_pool),
                "control_pool": len(selection.control_pool),
                "balance": balance,
            },
            sort_keys=True,
        )
    )


@main.command("export-blind")
@click.argument("pools", nargs=-1, required=True, type=click.Path())
@click.option("--seed", default=0, type=int)
@click.option("--out", required=True, type=click.Path())
def export_blind(pools, seed, out):
    """Merge pools and export a shuffled blind queue (id and text only)."""
    store = PostStore()
    for pool in pools:
        if not Path(pool).exists():
            _fail("export-blind", FileNotFoundError(pool))
        _guard("export-blind", store.ingest, iter_jsonl_records(pool))
    items = blind_export(store.query_posts(), seed=seed)
    with open(out, "w", encoding="utf-8") as fh:
        for item in items:
            fh.write(json.dumps(item, ensure_ascii=False) + "\n")
    click.echo(json.dumps({"exported": len(items)}))


@main.command()
@click.option("--queue", required=True, type=click.Path(), help="Blind items JSONL.")
@click.option("--tokens", required=True, type=click.Path(), help="JSON map token -> annotator id.")
@click.option("--records", required=True, type=click.Path(), help="Append-only submissions JSONL.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, type=int, show_default=True)
@click.option("--lease-seconds", default=1800, type=int, show_default=True)
@click.option("--static-dir", default=None, type=click.Path(), help="UI bundle to serve at /.")
def serve(queue, tokens, records, host, port, lease_seconds, static_dir):
    """Run the blind annotation service."""
    import uvicorn

    from .service import create_app

    if not Path(queue).exists():
        _fail("serve", FileNotFoundError(queue))
    if not Path(tokens).exists():
        _fail("serve", FileNotFoundError(tokens))
    queue_items = list(iter_jsonl_records(queue))
    token_map = json.loads(Path(tokens).read_text(encoding="utf-8"))
    app = create_app(
        queue_items,
        tokens=token_map,
        records_path=records,
        lease_seconds=lease_seconds,
        static_dir=static_dir,
    )
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command("import-annotations")
@click.argument("records", type=click.Path())
@click.option("--out", default=None, type=click.Path(), help="Rewrite normalized records here.")
def import_annotations(records, out):
    """Validate annotation records against the schema; print a summary."""
    recs = _guard("import-annotations", read_records_jsonl, records)
    schema = default_schema()
    summary = _guard("import-annotations", annotation_summary, recs, schema)
    if out:
        write_records_jsonl(recs, out)
    click.echo(json.dumps(summary.to_dict(), sort_keys=True, indent=2))


@main.command("build-dataset")
@click.option("--corpus", required=True, type=click.Path())
@click.option("--annotations", required=True, type=click.Path())
@click.option("--out", required=True, type=click.Path())
def build_dataset(corpus, annotations, out):
    """Assemble the labeled training dataset from corpus + annotations."""
    store = _guard("build-dataset", load_store, corpus)
    recs = _guard("build-dataset", read_records_jsonl, annotations)
    ds = _guard("build-dataset", build_training_set, recs, store)
    write_labeled_dataset(ds, out)
    click.echo(json.dumps(ds.provenance["source_counts"], sort_keys=True))


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--out", default=None, type=click.Path(), help="Checkpoint path (.npz).")
def train(config_path, out):
    """Train one model on the full dataset and save a checkpoint."""
    from .annotation import Label
    from .balance import build_balanced_dataset
    from .classifiers import LinearConfig, TrainingHyperparams, TransformerConfig
    from .classifiers import train_linear, train_transformer
    from .experiment import _balance_spec, load_dataset_for
    from .features import fit_tfidf, transform_many
    from .seeding import derive_seed
    from .textprep import Pipeline, Vocab, encode, preprocess

    if not Path(config_path).exists():
        _fail("train", FileNotFoundError(config_path))
    config = _guard("train", ExperimentConfig.from_file, config_path)

    def _run():
        dataset = load_dataset_for(config)
        variant = Pipeline(config.preprocessing)
        spec = _balance_spec(config)
        if config.backend == "linear":
            texts = [preprocess(it.text, variant) for it in dataset.items]
            model = fit_tfidf(texts)
            vectors = transform_many(model, texts)
            balanced = build_balanced_dataset(dataset, vectors, spec)
            clf = train_linear(
                balanced.vectors,
                [it.label for it in balanced.items],
                LinearConfig(**{"seed": derive_seed(config.seed, "train"), **config.backend_config}),
            )
        else:
            balanced = build_balanced_dataset(dataset, None, spec)
            texts = [preprocess(it.text, variant) for it in balanced.items]
            vocab = Vocab.build(texts)
            backend_config = dict(config.backend_config)
            backend_config.pop("vocab", None)
            tconfig = TransformerConfig(vocab_size=len(vocab), **backend_config)
            sequences = [encode(t, vocab, max_len=tconfig.max_len) for t in texts]
            hp = TrainingHyperparams(
                **{"seed": derive_seed(config.seed, "train"), **config.hyperparams}
            )
            clf = train_transformer(sequences, [it.label for it in balanced.items], tconfig, hp)
        n_items = len(balanced.items)
        n_target = sum(1 for it in balanced.items if it.label is Label.TARGET)
        return clf, n_items, n_target

    clf, n_items, n_target = _guard("train", _run)
    checkpoint = out or "model.npz"
    clf.save(checkpoint)
    log_event("train", status="done", checkpoint=str(checkpoint))
    click.echo(json.dumps({"items": n_items, "targets": n_target, "checkpoint": str(checkpoint)}))


@main.command()
@click.option("--config", "config_path", default=None, type=click.Path())
@click.option("--manifest", "manifest_path", default=None, type=click.Path())
@click.option("--out", default=None, type=click.Path())
@click.option("--seed", default=None, type=int, help="Override the config seed.")
@click.option("--folds", default=None, type=int)
@click.option("--stratified", is_flag=True, default=False)
def evaluate(config_path, manifest_path, out, seed, folds, stratified):
    """Run a cross-validated experiment (from config or from a manifest)."""
    if manifest_path:
        report = _guard("evaluate", run_from_manifest, manifest_path, out)
    else:
        if config_path is None:
            _fail("evaluate", ValueError("provide --config or --manifest"))
        if not Path(config_path).exists():
            _fail("evaluate", FileNotFoundError(config_path))
        config = _guard("evaluate", ExperimentConfig.from_file, config_path)
        if seed is not None:
            config.seed = seed
        if folds is not None:
            config.folds = folds
        if stratified:
            config.stratified = True
        report = _guard("evaluate", run_experiment, config, out)
    click.echo(render_report_table([report]), nl=False)


@main.command("error-analysis")
@click.option("--predictions", required=True, type=click.Path())
@click.option("--dataset", "dataset_path", required=True, type=click.Path())
@click.option("--lexicon", "lexicon_path", default=None, type=click.Path())
@click.option("--out", default=None, type=click.Path())
def error_analysis_cmd(predictions, dataset_path, lexicon_path, out):
    """Term-group occurrence rates among false positives and negatives."""
    if not Path(predictions).exists():
        _fail("error-analysis", FileNotFoundError(predictions))
    ds = _guard("error-analysis", read_labeled_dataset, dataset_path)
    texts = {it.post_id: it.text for it in ds.items}
    fps, fns = [], []
    for row in iter_jsonl_records(predictions):
        if row["predicted"] == "target" and row["label"] == "non_target":
            fps.append(texts.get(row["post_id"], ""))
        elif row["predicted"] == "non_target" and row["label"] == "target":
            fns.append(texts.get(row["post_id"], ""))
    if lexicon_path:
        lexicon = json.loads(Path(lexicon_path).read_text(encoding="utf-8"))
    else:
        lexicon = json.loads(
            resources.files("pgdetect").joinpath("data/error_lexicon_de.json").read_text("utf-8")
        )
    result = _guard("error-analysis", error_analysis,
                    {"false_positives": fps, "false_negatives": fns}, lexicon)
    payload = json.dumps(result, sort_keys=True, indent=2) + "\n"
    if out:
        Path(out).write_text(payload, encoding="utf-8")
    click.echo(payload, nl=False)


@main.command()
@click.argument("reports", nargs=-1, required=True, type=click.Path())
@click.option("--out", default=None, type=click.Path())
def report(reports, out):
    """Render report JSON files as an aligned comparison table."""
    parsed = []
    for path in reports:
        if not Path(path).exists():
            _fail("report", FileNotFoundError(path))
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        parsed.append(EvaluationReport.from_dict(raw))
    table = render_report_table(parsed)
    if out:
        Path(out).write_text(table, encoding="utf-8")
    click.echo(table, nl=False)


if __name__ == "__main__":
    main()
