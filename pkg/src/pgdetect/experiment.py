"""Experiment orchestration: config, trainer factories, artifacts, manifest.

An experiment runs ingest -> dataset assembly -> per-fold preprocessing,
balancing, and training -> cross-validation, then writes ``report.json``,
``predictions.jsonl``, and ``manifest.json`` into the output directory.
The manifest alone re-runs the experiment bit-for-bit: the report
contains no timestamps and all randomness derives from the master seed
via :func:`pgdetect.seeding.derive_seed`. Stage progress is logged as
line-delimited JSON events on stderr.
"""

from __future__ import annotations

import json
import platform
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .annotation import (
    LabeledDataset,
    LabeledItem,
    build_training_set,
    read_labeled_dataset,
    read_records_jsonl,
)
from .balance import BalanceSpec, Strategy, build_balanced_dataset
from .classifiers import (
    LinearConfig,
    TrainingHyperparams,
    TransformerConfig,
    train_linear,
    train_transformer,
)
from .corpus import load_store
from .errors import PgdetectError, StageError
from .evaluation import EvaluationReport, cross_validate
from .features import fit_tfidf, transform_many
from .seeding import derive_seed
from .textprep import Pipeline, Vocab, encode, preprocess


def log_event(stage: str, **fields) -> None:
    print(json.dumps({"event": stage, **fields}, sort_keys=True), file=sys.stderr)


@dataclass
class ExperimentConfig:
    preprocessing: str = Pipeline.LOWERCASE_ONLY.value
    balance: dict = field(default_factory=lambda: {"strategy": "imbalanced_348_138"})
    backend: str = "linear"
    backend_config: dict = field(default_factory=dict)
    hyperparams: dict = field(default_factory=dict)
    folds: int = 5
    stratified: bool = False
    seed: int = 0
    corpus: str | None = None
    annotations: str | None = None
    dataset: str | None = None
    out: str | None = None

    def __post_init__(self):
        Pipeline(self.preprocessing)
        Strategy(self.balance.get("strategy", "imbalanced_348_138"))
        if self.backend not in ("linear", "transformer"):
            raise ValueError(f"unknown backend: {self.backend}")
        if self.dataset is None and (self.corpus is None or self.annotations is None):
            raise ValueError("config needs either dataset or corpus + annotations")

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(**raw)

    def resolved(self, base: Path) -> "ExperimentConfig":
        """Resolve input paths against a base directory."""
        updates = {}
        for name in ("corpus", "annotations", "dataset", "out"):
            value = getattr(self, name)
            if value is not None and not Path(value).is_absolute():
                updates[name] = str((base / value).resolve())
        if not updates:
            return self
        data = asdict(self)
        data.update(updates)
        return ExperimentConfig(**data)


def _balance_spec(config: ExperimentConfig) -> BalanceSpec:
    return BalanceSpec(
        strategy=Strategy(config.balance.get("strategy", "imbalanced_348_138")),
        seed=derive_seed(config.seed, "balance"),
        smote_k=int(config.balance.get("smote_k", 5)),
    )


def make_linear_trainer(config: ExperimentConfig):
    variant = Pipeline(config.preprocessing)
    spec = _balance_spec(config)
    lc_kwargs = dict(config.backend_config)
    lc_kwargs.setdefault("seed", derive_seed(config.seed, "train"))
    linear_config = LinearConfig(**lc_kwargs)

    def trainer(train_items):
        ds = LabeledDataset(items=list(train_items), provenance={})
        if spec.strategy is Strategy.SMOTE_348_348:
            texts = [preprocess(it.text, variant) for it in ds.items]
            model = fit_tfidf(texts)
            vectors = transform_many(model, texts)
            balanced = build_balanced_dataset(ds, vectors, spec)
            train_vectors = balanced.vectors
            train_labels = [it.label for it in balanced.items]
        else:
            balanced = build_balanced_dataset(ds, None, spec)
            texts = [preprocess(it.text, variant) for it in balanced.items]
            model = fit_tfidf(texts)
            train_vectors = transform_many(model, texts)
            train_labels = [it.label for it in balanced.items]
        clf = train_linear(train_vectors, train_labels, linear_config)

        def predict(items):
            vecs = transform_many(model, [preprocess(it.text, variant) for it in items])
            return clf.predict(vecs)

        return predict

    return trainer


def make_transformer_trainer(config: ExperimentConfig):
    variant = Pipeline(config.preprocessing)
    spec = _balance_spec(config)
    hp_kwargs = dict(config.hyperparams)
    hp_kwargs.setdefault("seed", derive_seed(config.seed, "train"))
    hp = TrainingHyperparams(**hp_kwargs)
    backend_config = dict(config.backend_config)
    vocab_path = backend_config.pop("vocab", None)
    max_words = backend_config.pop("vocab_max_words", 2000)

    def trainer(train_items):
        ds = LabeledDataset(items=list(train_items), provenance={})
        balanced = build_balanced_dataset(ds, None, spec)
        texts = [preprocess(it.text, variant) for it in balanced.items]
        if vocab_path:
            vocab = Vocab.load(vocab_path)
        else:
            vocab = Vocab.build(texts, max_words=max_words)
        tconfig = TransformerConfig(vocab_size=len(vocab), **backend_config)
        sequences = [encode(t, vocab, max_len=tconfig.max_len) for t in texts]
        model = train_transformer(sequences, [it.label for it in balanced.items], tconfig, hp)

        def predict(items):
            seqs = [
                encode(preprocess(it.text, variant), vocab, max_len=tconfig.max_len)
                for it in items
            ]
            return model.predict(seqs)

        return predict

    return trainer


def _set_size_label(config: ExperimentConfig, dataset: LabeledDataset) -> str:
    from .annotation import Label

    strategy = Strategy(config.balance.get("strategy", "imbalanced_348_138"))
    fixed = {
        Strategy.SUBSAMPLE_69: "69/69",
        Strategy.SUBSAMPLE_92: "92/92",
        Strategy.FULL_138: "138/138",
    }
    if strategy in fixed:
        return fixed[strategy]
    n_target = dataset.count(Label.TARGET)
    n_non = dataset.count(Label.NON_TARGET)
    if strategy is Strategy.SMOTE_348_348:
        top = max(n_target, n_non)
        return f"{top}/{top}"
    return f"{n_non}/{n_target}"


def load_dataset_for(config: ExperimentConfig) -> LabeledDataset:
    if config.dataset is not None:
        if not Path(config.dataset).exists():
            raise StageError("ingest", FileNotFoundError(config.dataset))
        return read_labeled_dataset(config.dataset)
    if not Path(config.corpus).exists():
        raise StageError("ingest", FileNotFoundError(config.corpus))
    if not Path(config.annotations).exists():
        raise StageError("ingest", FileNotFoundError(config.annotations))
    store = load_store(config.corpus)
    records = read_records_jsonl(config.annotations)
    return build_training_set(records, store)


_UPFRONT_STRATEGIES = (Strategy.SUBSAMPLE_69, Strategy.SUBSAMPLE_92, Strategy.FULL_138)


def apply_size_variant(config: ExperimentConfig, dataset: LabeledDataset):
    """Set-size construction happens before cross-validation (the folds
    then partition the constructed set, as in the original protocol);
    SMOTE upsampling instead stays inside each training fold so
    synthetic items can never reach a held-out fold.

    Returns (cv_dataset, trainer_config).
    """
    spec = _balance_spec(config)
    if spec.strategy not in _UPFRONT_STRATEGIES:
        return dataset, config
    balanced = build_balanced_dataset(dataset, None, spec)
    items = [LabeledItem(it.post_id, it.text, it.label) for it in balanced.items]
    cv_dataset = LabeledDataset(
        items=items,
        provenance={**dataset.provenance, **balanced.provenance},
    )
    raw = asdict(config)
    raw["balance"] = {"strategy": Strategy.IMBALANCED_348_138.value}
    return cv_dataset, ExperimentConfig(**raw)


def run_experiment(config: ExperimentConfig, out_dir=None) -> EvaluationReport:
    out = Path(out_dir or config.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    incomplete = out / "INCOMPLETE"
    incomplete.write_text("experiment in progress or aborted\n")

    log_event("ingest", status="start")
    dataset = load_dataset_for(config)
    log_event("ingest", status="done", items=len(dataset.items))

    log_event("balance", status="start", strategy=config.balance.get("strategy"))
    try:
        cv_dataset, trainer_config = apply_size_variant(config, dataset)
    except PgdetectError as exc:
        raise StageError("balance", exc) from exc
    log_event(
        "balance",
        status="done",
        items=len(cv_dataset.items),
        welch=cv_dataset.provenance.get("welch"),
    )

    trainer_factory = (
        make_linear_trainer if config.backend == "linear" else make_transformer_trainer
    )
    try:
        trainer = trainer_factory(trainer_config)
    except (PgdetectError, ValueError, TypeError) as exc:
        raise StageError("configure", exc) from exc

    log_event("evaluate", status="start", backend=config.backend, folds=config.folds)
    try:
        report = cross_validate(
            cv_dataset,
            trainer,
            k=config.folds,
            seed=derive_seed(config.seed, "cv"),
            stratified=config.stratified,
            preprocessing=config.preprocessing,
            set_size=_set_size_label(config, dataset),
        )
    except StageError:
        raise
    except PgdetectError as exc:
        raise StageError("evaluate", exc) from exc
    log_event("evaluate", status="done", mean_f1=report.mean["f1"])

    (out / "report.json").write_text(report.to_json(), encoding="utf-8")
    with open(out / "predictions.jsonl", "w", encoding="utf-8") as fh:
        for row in report.predictions:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    (out / "manifest.json").write_text(build_manifest(config), encoding="utf-8")
    incomplete.unlink()
    log_event("artifacts", status="done", out=str(out))
    return report


def build_manifest(config: ExperimentConfig) -> str:
    from .kernels import backend_name

    manifest = {
        "format_version": 1,
        "config": asdict(config.resolved(Path.cwd())),
        "derived_seeds": {
            stage: derive_seed(config.seed, stage) for stage in ("balance", "train", "cv")
        },
        "kernel_backend": backend_name(),
        "versions": {
            "pgdetect": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
        },
    }
    return json.dumps(manifest, sort_keys=True, indent=2) + "\n"


def run_from_manifest(path, out_dir=None) -> EvaluationReport:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    config = ExperimentConfig(**raw["config"])
    return run_experiment(config, out_dir=out_dir)
