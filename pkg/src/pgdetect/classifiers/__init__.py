"""Classifier backends behind one training/prediction contract."""

from dataclasses import dataclass

from ..annotation import Label

DECISION_THRESHOLD = 0.5


@dataclass(frozen=True)
class Prediction:
    label: Label
    score: float  # probability of the target class

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError("score must be a probability")


def prediction_from_score(score: float) -> Prediction:
    label = Label.TARGET if score >= DECISION_THRESHOLD else Label.NON_TARGET
    return Prediction(label=label, score=float(score))


from .linear import LinearClassifier, LinearConfig, train_linear  # noqa: E402
from .transformer import (  # noqa: E402
    TrainingHyperparams,
    TransformerClassifier,
    TransformerConfig,
    train_transformer,
)

__all__ = [
    "DECISION_THRESHOLD",
    "Prediction",
    "prediction_from_score",
    "LinearClassifier",
    "LinearConfig",
    "train_linear",
    "TrainingHyperparams",
    "TransformerClassifier",
    "TransformerConfig",
    "train_transformer",
]
