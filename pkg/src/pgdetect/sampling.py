"""Token counting and length-matched weighted sampling.

The word tokenizer is the rule set used for all length statistics and
eligibility cutoffs; its rule table is documented in
``docs/tokenization.md``. Sampling reweights candidates by the ratio of
reference to candidate histogram mass at their length bin, so a drawn
sample approaches the reference length distribution.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InsufficientPoolError
from .stats import WelchResult, welch_t_test

MAX_ELIGIBLE_TOKENS = 512


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def tokenize_words(text: str) -> list[str]:
    """Split on whitespace, peeling leading/trailing punctuation into
    their own tokens; word and digit interiors stay intact."""
    tokens: list[str] = []
    for chunk in text.split():
        i, j = 0, len(chunk)
        lead = []
        while i < j and _is_punct(chunk[i]):
            lead.append(chunk[i])
            i += 1
        trail = []
        while j > i and _is_punct(chunk[j - 1]):
            trail.append(chunk[j - 1])
            j -= 1
        trail.reverse()
        tokens.extend(lead)
        if i < j:
            tokens.append(chunk[i:j])
        tokens.extend(trail)
    return tokens


def word_token_count(text: str) -> int:
    return len(tokenize_words(text))


@dataclass(frozen=True)
class SampleSpec:
    n: int
    seed: int
    reference_lengths: Sequence[int]
    bin_width: int = 32

    def __post_init__(self):
        if self.bin_width < 1:
            raise ValueError("bin_width must be >= 1")
        if not self.reference_lengths:
            raise ValueError("reference_lengths must be nonempty")


def _length_weights(lengths: np.ndarray, reference: np.ndarray, bin_width: int) -> np.ndarray:
    """Per-candidate weight ~ reference histogram mass / candidate mass."""
    n_bins = int(max(lengths.max(), reference.max())) // bin_width + 1
    ref_counts = np.bincount(reference // bin_width, minlength=n_bins)
    cand_counts = np.bincount(lengths // bin_width, minlength=n_bins)
    bins = lengths // bin_width
    # every candidate sits in a bin it contributes to, so the divisor is > 0
    return ref_counts[bins].astype(np.float64) / cand_counts[bins].astype(np.float64)


def length_weighted_sample(candidates, spec: SampleSpec):
    """Draw spec.n distinct items without replacement, reweighted so the
    sampled length distribution tracks spec.reference_lengths.

    Candidates need `id` and `word_token_count` attributes. Reference
    bins that no candidate falls into contribute nothing; if no bin
    overlaps at all, the draw degrades to uniform over the pool.
    Deterministic in (candidates, spec).
    """
    pool = sorted(candidates, key=lambda p: p.id)
    if spec.n > len(pool):
        raise InsufficientPoolError(
            f"requested {spec.n} items from a pool of {len(pool)}"
        )
    if spec.n == 0:
        return []
    lengths = np.array([p.word_token_count for p in pool], dtype=np.int64)
    reference = np.asarray(list(spec.reference_lengths), dtype=np.int64)
    weights = _length_weights(lengths, reference, spec.bin_width)
    rng = np.random.default_rng(spec.seed)
    positive = np.flatnonzero(weights > 0)
    if positive.size == 0:
        weights = np.ones(len(pool))
        positive = np.arange(len(pool))
    if positive.size >= spec.n:
        probs = weights[positive] / weights[positive].sum()
        picked = rng.choice(positive, size=spec.n, replace=False, p=probs)
    else:
        rest = np.setdiff1d(np.arange(len(pool)), positive)
        fill = rng.choice(rest, size=spec.n - positive.size, replace=False)
        picked = np.concatenate([positive, fill])
    return [pool[i] for i in sorted(picked.tolist())]


@dataclass(frozen=True)
class PoolSelection:
    target_pool: list = field(default_factory=list)
    control_pool: list = field(default_factory=list)
    balance_check: WelchResult | None = None


def select_annotation_pool(store, seed: int, max_tokens: int = MAX_ELIGIBLE_TOKENS) -> PoolSelection:
    """Export pool: every eligible initial post of the addiction board as
    targets, plus twice as many length-matched initial posts from all
    other boards; the Welch result over the two pools' lengths reports
    how well the match worked."""
    from .corpus import Subforum  # local import to keep module load acyclic

    target_pool = store.query_posts(
        subforum={Subforum.GAMBLING_ADDICTION}, initial_only=True, max_tokens=max_tokens
    )
    if not target_pool:
        return PoolSelection([], [], None)
    others = {s for s in Subforum if s is not Subforum.GAMBLING_ADDICTION}
    control_candidates = store.query_posts(
        subforum=others, initial_only=True, max_tokens=max_tokens
    )
    n_control = 2 * len(target_pool)
    if len(control_candidates) < n_control:
        raise InsufficientPoolError(
            f"need {n_control} control posts, only {len(control_candidates)} eligible"
        )
    reference = [p.word_token_count for p in target_pool]
    control_pool = length_weighted_sample(
        control_candidates, SampleSpec(n=n_control, seed=seed, reference_lengths=reference)
    )
    balance = None
    if len(target_pool) >= 2 and len(control_pool) >= 2:
        balance = welch_t_test(reference, [p.word_token_count for p in control_pool])
    return PoolSelection(list(target_pool), control_pool, balance)
