"""SMOTE upsampling and the five training-set size variants.

Subsample variants draw the majority class length-matched against the
minority class (Welch gate p >= 0.05, bounded reseeding); the SMOTE
variant interpolates synthetic minority vectors between nearest
neighbors. Synthetic points are vectors; for text-consuming models each
synthetic contributes a duplicate of its base text (recorded in the
provenance as the bridge).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .annotation import Label, LabeledDataset
from .errors import BalanceGateFailedError, InsufficientItemsError, TooFewMinorityError
from .features import SparseVector, fit_tfidf, transform_many
from .kernels import pairwise_sq_dists
from .sampling import SampleSpec, length_weighted_sample, word_token_count
from .seeding import derive_seed
from .stats import welch_t_test

BALANCE_GATE_P = 0.05
MAX_GATE_RETRIES = 25


class Strategy(str, Enum):
    SUBSAMPLE_69 = "subsample_69"
    SUBSAMPLE_92 = "subsample_92"
    FULL_138 = "full_138"
    IMBALANCED_348_138 = "imbalanced_348_138"
    SMOTE_348_348 = "smote_348_348"


# (non_target, target) counts; None = take everything
STRATEGY_COUNTS = {
    Strategy.SUBSAMPLE_69: (69, 69),
    Strategy.SUBSAMPLE_92: (92, 92),
    Strategy.FULL_138: (138, 138),
    Strategy.IMBALANCED_348_138: None,
    Strategy.SMOTE_348_348: None,
}


@dataclass(frozen=True)
class BalanceSpec:
    strategy: Strategy
    seed: int = 0
    smote_k: int = 5

    def __post_init__(self):
        object.__setattr__(self, "strategy", Strategy(self.strategy))


@dataclass(frozen=True)
class BalancedItem:
    post_id: str
    text: str
    label: Label
    synthetic: bool = False
    base_post_id: str | None = None


@dataclass
class BalancedDataset:
    items: list
    vectors: list | None
    provenance: dict = field(default_factory=dict)

    def count(self, label: Label) -> int:
        return sum(1 for it in self.items if it.label is label)


def smote_upsample(minority, target_count: int, k: int = 5, seed: int = 0) -> list:
    """Synthetic-only output: target_count - len(minority) vectors, each
    on the segment between a seeded random minority point and one of its
    k Euclidean nearest minority neighbors (ties: lowest index).

    Draw order per synthetic is (base index, neighbor slot, u), so a
    replay of the seeded generator can verify every point.
    """
    minority = list(minority)
    m = len(minority)
    if m < 2:
        raise TooFewMinorityError(f"need at least 2 minority points, got {m}")
    if k < 1 or k > m - 1:
        raise TooFewMinorityError(f"k={k} must be in [1, {m - 1}]")
    if target_count < m:
        raise ValueError("target_count must be >= len(minority)")
    n_synthetic = target_count - m
    if n_synthetic == 0:
        return []
    points = np.stack([v.to_dense() for v in minority])
    dists = pairwise_sq_dists(points)
    np.fill_diagonal(dists, np.inf)
    neighbors = np.argsort(dists, axis=1, kind="stable")[:, :k]
    rng = np.random.default_rng(seed)
    dim = minority[0].dim
    out = []
    for _ in range(n_synthetic):
        i = int(rng.integers(0, m))
        j = int(neighbors[i, int(rng.integers(0, k))])
        u = float(rng.random())
        synthetic = points[i] + u * (points[j] - points[i])
        vec = SparseVector.from_dense(synthetic)
        out.append(SparseVector(indices=vec.indices, values=vec.values, dim=dim))
    return out


class _Measurable:
    """Adapter giving labeled items the id/length face sampling expects."""

    def __init__(self, item):
        self.item = item
        self.id = item.post_id
        self.word_token_count = word_token_count(item.text)


def _split_by_label(dataset: LabeledDataset):
    targets = [it for it in dataset.items if it.label is Label.TARGET]
    non_targets = [it for it in dataset.items if it.label is Label.NON_TARGET]
    return targets, non_targets


def _subsample(dataset: LabeledDataset, n_target: int, n_non_target: int, seed: int):
    """Seeded target subset plus length-matched non-target draw, retried
    with derived seeds until the Welch gate passes."""
    targets, non_targets = _split_by_label(dataset)
    if len(targets) < n_target or len(non_targets) < n_non_target:
        raise InsufficientItemsError(
            f"need {n_target} targets / {n_non_target} non-targets, have "
            f"{len(targets)} / {len(non_targets)}"
        )
    targets = sorted(targets, key=lambda it: it.post_id)
    candidates = [_Measurable(it) for it in non_targets]
    last_p = None
    for attempt in range(MAX_GATE_RETRIES):
        attempt_seed = derive_seed(seed, f"balance-attempt-{attempt}")
        rng = np.random.default_rng(attempt_seed)
        if n_target < len(targets):
            picked_idx = sorted(rng.choice(len(targets), size=n_target, replace=False).tolist())
            chosen_targets = [targets[i] for i in picked_idx]
        else:
            chosen_targets = list(targets)
        reference = [word_token_count(it.text) for it in chosen_targets]
        sample = length_weighted_sample(
            candidates,
            SampleSpec(n=n_non_target, seed=attempt_seed, reference_lengths=reference),
        )
        lengths = [c.word_token_count for c in sample]
        welch = welch_t_test(reference, lengths) if len(reference) >= 2 else None
        last_p = welch.p if welch else None
        if welch is None or welch.p >= BALANCE_GATE_P:
            return chosen_targets, [c.item for c in sample], welch
    raise BalanceGateFailedError(
        f"length balance gate failed after {MAX_GATE_RETRIES} reseeds (last p={last_p})",
        p_value=last_p,
    )


def build_balanced_dataset(
    dataset: LabeledDataset, vectors=None, spec: BalanceSpec | None = None
) -> BalancedDataset:
    """Apply a size-variant strategy to a labeled dataset.

    ``vectors`` must align with ``dataset.items`` when given; the SMOTE
    strategy fits an internal TF-IDF model when they are absent.
    """
    spec = spec or BalanceSpec(Strategy.IMBALANCED_348_138)
    if vectors is not None and len(vectors) != len(dataset.items):
        raise ValueError("vectors must align with dataset items")
    provenance = {
        "strategy": spec.strategy.value,
        "seed": spec.seed,
        "welch": None,
        "smote_k": None,
        "bridge": None,
        "vector_source": "provided" if vectors is not None else None,
    }

    if spec.strategy in (Strategy.SUBSAMPLE_69, Strategy.SUBSAMPLE_92, Strategy.FULL_138):
        n_non_target, n_target = STRATEGY_COUNTS[spec.strategy]
        chosen_t, chosen_nt, welch = _subsample(dataset, n_target, n_non_target, spec.seed)
        keep = {it.post_id for it in chosen_t} | {it.post_id for it in chosen_nt}
        items = [
            BalancedItem(it.post_id, it.text, it.label)
            for it in dataset.items
            if it.post_id in keep
        ]
        kept_vectors = None
        if vectors is not None:
            kept_vectors = [
                v for it, v in zip(dataset.items, vectors) if it.post_id in keep
            ]
        provenance["welch"] = welch.to_dict() if welch else None
        out = BalancedDataset(items=items, vectors=kept_vectors, provenance=provenance)

    elif spec.strategy is Strategy.IMBALANCED_348_138:
        items = [BalancedItem(it.post_id, it.text, it.label) for it in dataset.items]
        out = BalancedDataset(
            items=items,
            vectors=list(vectors) if vectors is not None else None,
            provenance=provenance,
        )

    else:  # SMOTE: upsample the minority class to the majority count
        targets, non_targets = _split_by_label(dataset)
        if not targets or not non_targets:
            raise InsufficientItemsError("both classes must be present for upsampling")
        minority_label = Label.TARGET if len(targets) <= len(non_targets) else Label.NON_TARGET
        majority_count = max(len(targets), len(non_targets))
        if vectors is None:
            model = fit_tfidf([it.text for it in dataset.items])
            vectors = transform_many(model, [it.text for it in dataset.items])
            provenance["vector_source"] = "fitted_internal"
        minority = [
            (it, v) for it, v in zip(dataset.items, vectors) if it.label is minority_label
        ]
        minority_vectors = [v for _, v in minority]
        synthetic = smote_upsample(
            minority_vectors, majority_count, k=spec.smote_k, seed=spec.seed
        )
        # replay the generator to recover each synthetic's base point
        rng = np.random.default_rng(spec.seed)
        items = [BalancedItem(it.post_id, it.text, it.label) for it in dataset.items]
        all_vectors = list(vectors)
        for n, vec in enumerate(synthetic):
            i = int(rng.integers(0, len(minority)))
            rng.integers(0, spec.smote_k)
            rng.random()
            base_item = minority[i][0]
            items.append(
                BalancedItem(
                    post_id=f"syn-{n:05d}",
                    text=base_item.text,
                    label=minority_label,
                    synthetic=True,
                    base_post_id=base_item.post_id,
                )
            )
            all_vectors.append(vec)
        provenance["smote_k"] = spec.smote_k
        provenance["bridge"] = "duplicate_text"
        out = BalancedDataset(items=items, vectors=all_vectors, provenance=provenance)

    return out


def write_balanced_dataset(dataset: BalancedDataset, path) -> None:
    """JSONL: provenance header line, then one item per line with its
    vector as {"i": [...], "v": [...], "d": dim} when vectors exist."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"provenance": dataset.provenance}, ensure_ascii=False) + "\n")
        for n, item in enumerate(dataset.items):
            row = {
                "post_id": item.post_id,
                "text": item.text,
                "label": item.label.value,
                "synthetic": item.synthetic,
                "base_post_id": item.base_post_id,
            }
            if dataset.vectors is not None:
                row["vector"] = dataset.vectors[n].to_dict()
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")


def read_balanced_dataset(path) -> BalancedDataset:
    from .corpus import iter_jsonl_records

    rows = list(iter_jsonl_records(path))
    if not rows or "provenance" not in rows[0]:
        raise ValueError("balanced dataset must start with a provenance header line")
    items = []
    vectors = []
    has_vectors = False
    for row in rows[1:]:
        items.append(
            BalancedItem(
                post_id=row["post_id"],
                text=row["text"],
                label=Label(row["label"]),
                synthetic=row.get("synthetic", False),
                base_post_id=row.get("base_post_id"),
            )
        )
        if "vector" in row:
            has_vectors = True
            vectors.append(SparseVector.from_dict(row["vector"]))
    return BalancedDataset(
        items=items,
        vectors=vectors if has_vectors else None,
        provenance=rows[0]["provenance"],
    )
