"""TF-IDF vectorization over whitespace-delimited terms.

Smoothed formula, idf(t) = ln((1+N)/(1+df(t))) + 1, with L2-normalized
document vectors; documents with no in-vocabulary terms stay zero.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import EmptyVocabularyError


@dataclass(frozen=True)
class SparseVector:
    indices: tuple
    values: tuple
    dim: int

    def __post_init__(self):
        if len(self.indices) != len(self.values):
            raise ValueError("indices and values must align")
        if any(i >= self.dim or i < 0 for i in self.indices):
            raise ValueError("index out of range")
        if list(self.indices) != sorted(set(self.indices)):
            raise ValueError("indices must be sorted and unique")

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.dim, dtype=np.float64)
        if self.indices:
            dense[list(self.indices)] = self.values
        return dense

    @classmethod
    def from_dense(cls, dense) -> "SparseVector":
        dense = np.asarray(dense, dtype=np.float64)
        nz = np.flatnonzero(dense)
        return cls(
            indices=tuple(int(i) for i in nz),
            values=tuple(float(dense[i]) for i in nz),
            dim=int(dense.shape[0]),
        )

    def norm(self) -> float:
        return math.sqrt(sum(v * v for v in self.values))

    def to_dict(self) -> dict:
        return {"i": list(self.indices), "v": list(self.values), "d": self.dim}

    @classmethod
    def from_dict(cls, raw: dict) -> "SparseVector":
        return cls(indices=tuple(raw["i"]), values=tuple(raw["v"]), dim=raw["d"])


@dataclass(frozen=True)
class TfidfModel:
    vocabulary: dict
    idf: tuple
    l2_normalize: bool = True

    @property
    def dim(self) -> int:
        return len(self.vocabulary)


def fit_tfidf(corpus) -> TfidfModel:
    """Vocabulary = every term seen anywhere, indices dense and sorted."""
    corpus = list(corpus)
    if not corpus:
        raise EmptyVocabularyError("cannot fit on an empty corpus")
    df = Counter()
    for text in corpus:
        df.update(set(text.split()))
    if not df:
        raise EmptyVocabularyError("corpus contains no terms")
    vocabulary = {term: i for i, term in enumerate(sorted(df))}
    n_docs = len(corpus)
    idf = [0.0] * len(vocabulary)
    for term, col in vocabulary.items():
        idf[col] = math.log((1.0 + n_docs) / (1.0 + df[term])) + 1.0
    return TfidfModel(vocabulary=vocabulary, idf=tuple(idf))


def transform(model: TfidfModel, text: str) -> SparseVector:
    """count(t) * idf(t), L2-normalized; out-of-vocabulary terms ignored."""
    counts = Counter(text.split())
    pairs = sorted(
        (model.vocabulary[t], c * model.idf[model.vocabulary[t]])
        for t, c in counts.items()
        if t in model.vocabulary
    )
    if not pairs:
        return SparseVector(indices=(), values=(), dim=model.dim)
    indices = tuple(i for i, _ in pairs)
    values = np.array([v for _, v in pairs], dtype=np.float64)
    if model.l2_normalize:
        values = values / np.linalg.norm(values)
    return SparseVector(indices=indices, values=tuple(float(v) for v in values), dim=model.dim)


def transform_many(model: TfidfModel, texts) -> list:
    return [transform(model, t) for t in texts]
