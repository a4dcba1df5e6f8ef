"""k-fold cross-validation, metrics, and term-lexicon error analysis.

Positive class is the target (problem-gambling) label. Metric edge
conventions, all unit-locked:

* no actual positives and some predicted positives -> precision,
  recall, and F1 are all zero (the zero rule);
* no actual positives and no predicted positives -> all three are 1;
* tp = 0 with any fp or fn -> all three are zero.

Splits are plain random by default (stratified behind a flag); reported
standard deviations are population standard deviations since the folds
exhaust the dataset.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

import numpy as np

from .annotation import Label, LabeledDataset
from .errors import StageError

METRIC_NAMES = ("accuracy", "precision", "recall", "f1")


def _is_positive(value) -> bool:
    """Accepts Label, Prediction-like objects, label strings, or bools."""
    if hasattr(value, "label"):
        value = value.label
    if isinstance(value, Label):
        return value is Label.TARGET
    if isinstance(value, str):
        return value == Label.TARGET.value
    return bool(value)


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be nonnegative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @classmethod
    def from_pairs(cls, predicted, actual) -> "ConfusionMatrix":
        tp = fp = fn = tn = 0
        for pred, act in zip(predicted, actual):
            p = _is_positive(pred)
            a = _is_positive(act)
            if p and a:
                tp += 1
            elif p and not a:
                fp += 1
            elif not p and a:
                fn += 1
            else:
                tn += 1
        return cls(tp, fp, fn, tn)

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn}


def metrics(cm: ConfusionMatrix) -> dict:
    if cm.total == 0:
        raise ValueError("empty confusion matrix")
    accuracy = (cm.tp + cm.tn) / cm.total
    if cm.tp + cm.fn == 0:
        value = 0.0 if cm.fp > 0 else 1.0
        return {"accuracy": accuracy, "precision": value, "recall": value, "f1": value}
    if cm.tp == 0:
        return {"accuracy": accuracy, "precision": 0.0, "recall": 0.0, "f1": 0.0}
    precision = cm.tp / (cm.tp + cm.fp)
    recall = cm.tp / (cm.tp + cm.fn)
    f1 = 2.0 * precision * recall / (precision + recall)
    return {"accuracy": accuracy, "precision": precision, "recall": recall, "f1": f1}


def kfold_split(n: int, k: int = 5, seed: int = 0) -> list:
    """k disjoint index arrays covering 0..n-1, sizes differing by <= 1."""
    if n < k:
        raise ValueError(f"cannot split {n} items into {k} folds")
    if k < 2:
        raise ValueError("k must be at least 2")
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(chunk) for chunk in np.array_split(perm, k)]


def stratified_kfold_split(labels, k: int = 5, seed: int = 0) -> list:
    """Like kfold_split but with per-class round-robin assignment."""
    n = len(labels)
    if n < k:
        raise ValueError(f"cannot split {n} items into {k} folds")
    rng = np.random.default_rng(seed)
    buckets: dict = {}
    for i, label in enumerate(labels):
        buckets.setdefault(label, []).append(i)
    folds = [[] for _ in range(k)]
    cursor = 0
    for label in sorted(buckets, key=str):
        idx = np.array(buckets[label])
        idx = idx[rng.permutation(len(idx))]
        for i in idx:
            folds[cursor % k].append(int(i))
            cursor += 1
    return [np.sort(np.array(f, dtype=np.int64)) for f in folds]


@dataclass(frozen=True)
class FoldResult:
    fold_index: int
    confusion: ConfusionMatrix
    accuracy: float
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_confusion(cls, fold_index: int, cm: ConfusionMatrix) -> "FoldResult":
        return cls(fold_index=fold_index, confusion=cm, **metrics(cm))

    def to_dict(self) -> dict:
        return {
            "fold_index": self.fold_index,
            "confusion": self.confusion.to_dict(),
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
        }


@dataclass
class EvaluationReport:
    preprocessing: str
    set_size: str
    folds: list
    mean: dict = field(default_factory=dict)
    std: dict = field(default_factory=dict)
    predictions: list = field(default_factory=list)  # not serialized with the report

    @classmethod
    def from_folds(cls, preprocessing, set_size, folds, predictions=None) -> "EvaluationReport":
        mean = {}
        std = {}
        for name in METRIC_NAMES:
            values = np.array([getattr(f, name) for f in folds], dtype=np.float64)
            mean[name] = float(values.mean())
            std[name] = float(values.std())  # population: folds exhaust the data
        return cls(
            preprocessing=preprocessing,
            set_size=set_size,
            folds=list(folds),
            mean=mean,
            std=std,
            predictions=list(predictions or []),
        )

    def to_dict(self) -> dict:
        return {
            "preprocessing": self.preprocessing,
            "set_size": self.set_size,
            "std_kind": "population",
            "folds": [f.to_dict() for f in self.folds],
            "mean": self.mean,
            "std": self.std,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_dict(cls, raw: dict) -> "EvaluationReport":
        folds = [
            FoldResult(
                fold_index=f["fold_index"],
                confusion=ConfusionMatrix(**f["confusion"]),
                accuracy=f["accuracy"],
                precision=f["precision"],
                recall=f["recall"],
                f1=f["f1"],
            )
            for f in raw["folds"]
        ]
        return cls(
            preprocessing=raw["preprocessing"],
            set_size=raw["set_size"],
            folds=folds,
            mean=raw["mean"],
            std=raw["std"],
        )


def render_report_table(reports) -> str:
    """Aligned plain-text table: one row per (preprocessing, set size),
    metric cells as mean (std)."""
    header = ("Preprocessing", "G/PG items", "Accuracy", "Precision", "Recall", "F1")
    rows = [header]
    for rep in reports:
        cells = [rep.preprocessing, rep.set_size]
        for name in METRIC_NAMES:
            cells.append(f"{rep.mean[name]:.2f} ({rep.std[name]:.2f})")
        rows.append(tuple(cells))
    widths = [max(len(r[c]) for r in rows) for c in range(len(header))]
    lines = []
    for i, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(widths[c]) for c, cell in enumerate(row)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * widths[c] for c in range(len(header))))
    return "\n".join(lines) + "\n"


def cross_validate(
    dataset: LabeledDataset,
    trainer,
    k: int = 5,
    seed: int = 0,
    stratified: bool = False,
    preprocessing: str = "lowercase_only",
    set_size: str = "",
) -> EvaluationReport:
    """Train on k-1 folds, score the held-out fold, aggregate.

    ``trainer(train_items) -> predict_fn(items) -> list[Label]``; any
    balancing or upsampling happens inside the trainer, so synthetic
    items never reach a held-out fold. Trainer errors surface annotated
    with the fold index.
    """
    items = dataset.items
    labels = [it.label for it in items]
    if len({l for l in labels}) < 2:
        raise ValueError("cross-validation needs both classes present")
    if stratified:
        folds = stratified_kfold_split(labels, k=k, seed=seed)
    else:
        folds = kfold_split(len(items), k=k, seed=seed)
    fold_results = []
    predictions = []
    for fold_index, test_idx in enumerate(folds):
        test_set = set(test_idx.tolist())
        train_items = [it for i, it in enumerate(items) if i not in test_set]
        test_items = [items[i] for i in test_idx]
        try:
            predict_fn = trainer(train_items)
            predicted = predict_fn(test_items)
        except Exception as exc:
            raise StageError(f"fold-{fold_index}", exc) from exc
        cm = ConfusionMatrix.from_pairs(predicted, [it.label for it in test_items])
        fold_results.append(FoldResult.from_confusion(fold_index, cm))
        for it, pred in zip(test_items, predicted):
            label, score = (pred.label, pred.score) if hasattr(pred, "label") else (pred, None)
            predictions.append(
                {
                    "fold": fold_index,
                    "post_id": it.post_id,
                    "label": it.label.value,
                    "predicted": label.value,
                    "score": score,
                }
            )
    return EvaluationReport.from_folds(preprocessing, set_size, fold_results, predictions)


def _term_pattern(term: str) -> re.Pattern:
    # word-boundary match; multiword terms tolerate any whitespace run.
    # German compounds ("spielsuchtberatung") do not match "spielsucht":
    # documented limitation.
    parts = [re.escape(p) for p in term.split()]
    body = r"\s+".join(parts)
    return re.compile(rf"(?<!\w){body}(?!\w)", re.IGNORECASE | re.UNICODE)


def term_occurrence(texts, terms) -> dict:
    """Count and rate of texts containing at least one of the terms."""
    patterns = [_term_pattern(t) for t in terms]
    matched = sum(1 for text in texts if any(p.search(text) for p in patterns))
    total = len(texts)
    return {
        "matched": matched,
        "total": total,
        "rate": (matched / total) if total else None,
    }


def error_analysis(misclassified: dict, lexicon: dict) -> dict:
    """Per (error kind, term group): fraction of texts in that error
    class containing at least one group term, with counts. An empty
    error class reports rate None with count 0."""
    for group, terms in lexicon.items():
        if not terms:
            raise ValueError(f"lexicon group {group!r} is empty")
    out = {}
    for kind in ("false_positives", "false_negatives"):
        texts = misclassified.get(kind, [])
        out[kind] = {group: term_occurrence(texts, terms) for group, terms in lexicon.items()}
    return out
