"""Shared builders for annotation-shaped fixtures."""

from pgdetect.annotation import AnnotationRecord, Label, default_schema
from pgdetect.corpus import PostStore

SCHEMA = default_schema()

PG_CODE = "pg_chasing_losses"
GRP_CODE = "grp_financial_bailouts"
CD_CODE = "cd_illusion_of_control"


def annotation_fixture(
    n_target=138,
    n_non_target=348,
    n_inconclusive=11,
    n_excluded=7,
    subdomain_counts=(114, 70, 23),
):
    """Records shaped like a full annotation campaign.

    Targets 0..113 carry a pathological-gambling criterion, 68..137 a
    gambling-related-problems criterion, 0..22 a cognitive-distortion
    criterion; the three groups overlap but cover every target.
    """
    n_pg, n_grp, n_cd = subdomain_counts
    records = []
    for i in range(n_target):
        codes = set()
        if i < n_pg:
            codes.add(PG_CODE)
        if i >= n_target - n_grp:
            codes.add(GRP_CODE)
        if i < n_cd:
            codes.add(CD_CODE)
        records.append(
            AnnotationRecord(
                post_id=f"t{i:04d}", annotator_id="ann1", checked_criteria=frozenset(codes)
            )
        )
    for i in range(n_non_target):
        records.append(AnnotationRecord(post_id=f"n{i:04d}", annotator_id="ann1"))
    for i in range(n_inconclusive):
        records.append(
            AnnotationRecord(
                post_id=f"i{i:04d}",
                annotator_id="ann1",
                manual_label_override=Label.INCONCLUSIVE,
                override_reason="too vague",
            )
        )
    for i in range(n_excluded):
        records.append(
            AnnotationRecord(
                post_id=f"x{i:04d}",
                annotator_id="ann1",
                manual_label_override=Label.EXCLUDED,
                override_reason="advertisement",
            )
        )
    return records


def store_for(records):
    """A store holding one small post per referenced id."""
    store = PostStore()
    store.ingest(
        [
            {
                "id": rec.post_id,
                "subforum": "gambling_addiction" if rec.post_id.startswith("t") else "poker",
                "text": f"beitrag {rec.post_id}",
                "is_initial": True,
            }
            for rec in records
        ]
    )
    return store
