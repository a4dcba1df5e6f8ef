"""Synthetic German-flavored forum fixtures.

The real corpus cannot be redistributed, so tests and demos run on
generated posts: problem-gambling texts, plain gambling chatter, and
payout complaints. Complaints share finance and help/problem vocabulary
with the problem-gambling class, reproducing the confound that drives
false positives in practice.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .annotation import AnnotationRecord, Label, LabeledDataset, LabeledItem

FILLER = [
    "ich", "und", "das", "ist", "mit", "im", "es", "bei", "auch", "aber",
    "wie", "was", "noch", "dann", "hier", "mal", "schon", "wirklich", "seit", "heute",
]

TARGET_CORE = [
    "spielsucht", "süchtig", "aufhören", "verspielt", "schulden", "therapie",
    "beratung", "verzweifelt", "rückfall", "kontrollverlust", "spielhalle",
    "scham", "lügen", "familie", "zocken",
]

PLAIN_CORE = [
    "bonus", "freispiele", "jackpot", "drehungen", "gewinn", "strategie",
    "roulette", "blackjack", "automat", "quote", "turnier", "einzahlung",
    "spiele", "anbieter", "lizenz", "tisch", "karten",
]

COMPLAINT_CORE = [
    "auszahlung", "casino", "wartezeit", "verifizierung", "dokumente",
    "beschwerde", "antwort", "email", "anbieter", "gesperrt", "storniert",
]

FINANCE_TERMS = ["geld", "verlust", "konto", "bank", "bankkonto", "kontoauszug"]

HELP_TERMS = ["problem", "probleme", "hilfe", "support", "warnung"]


@dataclass(frozen=True)
class SyntheticPost:
    id: str
    subforum: str
    text: str
    is_initial: bool
    label: Label
    kind: str  # target | plain | complaint


def _compose(rng, pools, n_words):
    """Draw words from (pool, weight) pairs; the weights get per-post
    jitter so posts of one kind vary in how typical they read."""
    names = list(range(len(pools)))
    weights = np.array([w for _, w in pools], dtype=np.float64)
    weights *= rng.uniform(0.4, 1.6, size=len(pools))
    weights /= weights.sum()
    words = []
    for _ in range(n_words):
        pool = pools[int(rng.choice(names, p=weights))][0]
        words.append(pool[int(rng.integers(len(pool)))])
    return " ".join(words)


def generate_posts(
    n: int = 500,
    seed: int = 0,
    target_fraction: float = 0.3,
    complaint_fraction: float = 0.25,
) -> list:
    """Synthetic posts with ground-truth labels.

    ``complaint_fraction`` is the share of non-targets written as payout
    complaints (the finance-heavy hard negatives).
    """
    rng = np.random.default_rng(seed)
    posts = []
    n_target = int(round(n * target_fraction))
    for i in range(n):
        if i < n_target:
            kind = "target"
            n_words = int(np.clip(rng.normal(40, 18), 8, 480))
            text = _compose(
                rng,
                [
                    (FILLER, 0.34),
                    (TARGET_CORE, 0.28),
                    (FINANCE_TERMS, 0.18),
                    (HELP_TERMS, 0.13),
                    (COMPLAINT_CORE, 0.07),
                ],
                n_words,
            )
            subforum = "gambling_addiction" if rng.random() < 0.8 else "miscellaneous"
            label = Label.TARGET
        elif rng.random() < complaint_fraction:
            kind = "complaint"
            n_words = int(np.clip(rng.normal(35, 15), 8, 480))
            text = _compose(
                rng,
                [
                    (FILLER, 0.30),
                    (COMPLAINT_CORE, 0.27),
                    (FINANCE_TERMS, 0.20),
                    (HELP_TERMS, 0.14),
                    (TARGET_CORE, 0.09),
                ],
                n_words,
            )
            subforum = "casino_complaints"
            label = Label.NON_TARGET
        else:
            kind = "plain"
            n_words = int(np.clip(rng.normal(35, 15), 8, 480))
            text = _compose(rng, [(FILLER, 0.37), (PLAIN_CORE, 0.60), (FINANCE_TERMS, 0.03)], n_words)
            subforum = str(
                rng.choice(["online_casinos", "slot_machines", "poker", "roulette"])
            )
            label = Label.NON_TARGET
        posts.append(
            SyntheticPost(
                id=f"syn{i:05d}",
                subforum=subforum,
                text=text,
                is_initial=True,
                label=label,
                kind=kind,
            )
        )
    return posts


def to_post_dicts(posts) -> list:
    """JSONL-schema dicts for ingestion."""
    return [
        {
            "id": p.id,
            "subforum": p.subforum,
            "url": f"https://forum.example/{p.subforum}/{p.id}",
            "published_at": "2021-06-01T12:00:00+00:00",
            "is_initial": p.is_initial,
            "text": p.text,
        }
        for p in posts
    ]


def to_labeled_dataset(posts) -> LabeledDataset:
    items = [LabeledItem(post_id=p.id, text=p.text, label=p.label) for p in posts]
    return LabeledDataset(
        items=items,
        provenance={
            "source_counts": {
                Label.TARGET.value: sum(1 for p in posts if p.label is Label.TARGET),
                Label.NON_TARGET.value: sum(1 for p in posts if p.label is Label.NON_TARGET),
                Label.INCONCLUSIVE.value: 0,
                Label.EXCLUDED.value: 0,
            },
            "balancing": "none",
            "seed": None,
        },
    )


def to_annotation_records(posts, annotator_id: str = "synthetic") -> list:
    """Ground truth rendered as annotation records (targets carry one
    pathological-gambling criterion)."""
    records = []
    for p in posts:
        checked = frozenset({"pg_failed_stop_attempts"}) if p.label is Label.TARGET else frozenset()
        records.append(
            AnnotationRecord(post_id=p.id, annotator_id=annotator_id, checked_criteria=checked)
        )
    return records
