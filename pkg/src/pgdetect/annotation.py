"""Annotation schema, label resolution, blind export, and training-set assembly.

The criteria catalog ships as versioned JSON (``data/criteria_v1.json``)
and renders to the human-readable annotation guide in
``docs/annotation_guide.md``. A post is a target as soon as one
criterion or one standalone flag applies; a manual override
(inconclusive / excluded) wins over everything.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from importlib import resources
from typing import Iterable

import numpy as np

from .errors import UnknownCriterionError, UnresolvedConflictError

SUBDOMAIN_PATHOLOGICAL = "pathological_gambling"
SUBDOMAIN_PROBLEMS = "gambling_related_problems"
SUBDOMAIN_DISTORTIONS = "cognitive_distortions"
SUBDOMAINS = (SUBDOMAIN_PATHOLOGICAL, SUBDOMAIN_PROBLEMS, SUBDOMAIN_DISTORTIONS)

FLAG_SELF_IDENTIFIED = "self_identified_addicted"
FLAG_TREATMENT = "seeking_or_in_treatment"


class Label(str, Enum):
    TARGET = "target"
    NON_TARGET = "non_target"
    INCONCLUSIVE = "inconclusive"
    EXCLUDED = "excluded_non_user_content"


TRAINING_LABELS = (Label.TARGET, Label.NON_TARGET)


@dataclass(frozen=True)
class Criterion:
    code: str
    description: str


@dataclass(frozen=True)
class CriteriaSchema:
    version: str
    subdomains: dict
    flags: tuple

    def __post_init__(self):
        if tuple(self.subdomains) != SUBDOMAINS:
            raise ValueError(f"schema must have exactly the subdomains {SUBDOMAINS}")
        codes = [c.code for group in self.subdomains.values() for c in group]
        if len(codes) != len(set(codes)):
            raise ValueError("criterion codes must be unique across the schema")

    @property
    def codes(self) -> frozenset:
        return frozenset(c.code for group in self.subdomains.values() for c in group)

    @property
    def flag_codes(self) -> frozenset:
        return frozenset(f.code for f in self.flags)

    def subdomain_of(self, code: str) -> str:
        for name, group in self.subdomains.items():
            if any(c.code == code for c in group):
                return name
        raise UnknownCriterionError(f"unknown criterion code: {code}")

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "subdomains": {
                name: [{"code": c.code, "description": c.description} for c in group]
                for name, group in self.subdomains.items()
            },
            "flags": [{"code": f.code, "description": f.description} for f in self.flags],
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "CriteriaSchema":
        return cls(
            version=str(raw["version"]),
            subdomains={
                name: tuple(Criterion(c["code"], c["description"]) for c in group)
                for name, group in raw["subdomains"].items()
            },
            flags=tuple(Criterion(f["code"], f["description"]) for f in raw["flags"]),
        )


def default_schema() -> CriteriaSchema:
    raw = json.loads(
        resources.files("pgdetect").joinpath("data/criteria_v1.json").read_text("utf-8")
    )
    return CriteriaSchema.from_dict(raw)


def render_guide(schema: CriteriaSchema) -> str:
    """Markdown annotation guide generated from the catalog."""
    lines = [
        "# Annotation guide",
        "",
        f"Catalog version: {schema.version}",
        "",
        "Read the whole post, then tick every criterion it expresses. A post is a",
        "**target** (problem-gambling content) as soon as at least one criterion or",
        "one standalone flag applies, no matter whether the description concerns the",
        "author or a related person, or past or present behaviour. A post about",
        "gambling without any such sign is a **non-target**. Use *inconclusive* when",
        "the description is too vague to decide, and *excluded* for content that does",
        "not come from a regular user (empty posts, administrator-deleted text,",
        "advertisements). Inconclusive and excluded posts never enter the training set.",
        "",
        "A symptom-duration window is deliberately not part of the catalog: it cannot",
        "be judged from a single post.",
        "",
        "The grouping of the diagnostic criteria and the cognition-scale items into",
        "the three subdomains below is a working arrangement chosen for annotation",
        "ergonomics; neither source instrument prescribes it, and items covering",
        "similar characteristics were merged.",
        "",
    ]
    titles = {
        SUBDOMAIN_PATHOLOGICAL: "1. Pathological gambling",
        SUBDOMAIN_PROBLEMS: "2. Gambling-related problems",
        SUBDOMAIN_DISTORTIONS: "3. Gambling-related cognitive distortions",
    }
    for name, group in schema.subdomains.items():
        lines.append(f"## {titles[name]}")
        lines.append("")
        for c in group:
            lines.append(f"- `{c.code}`: {c.description}")
        lines.append("")
    lines.append("## Standalone flags")
    lines.append("")
    for f in schema.flags:
        lines.append(f"- `{f.code}`: {f.description}")
    lines.append("")
    return "\n".join(lines)


@dataclass(frozen=True)
class AnnotationRecord:
    post_id: str
    annotator_id: str
    checked_criteria: frozenset = frozenset()
    flags: frozenset = frozenset()
    manual_label_override: Label | None = None
    override_reason: str | None = None
    created_at: datetime | None = None

    def to_dict(self) -> dict:
        return {
            "post_id": self.post_id,
            "annotator_id": self.annotator_id,
            "checked_criteria": sorted(self.checked_criteria),
            "flags": sorted(self.flags),
            "manual_label_override": (
                self.manual_label_override.value if self.manual_label_override else None
            ),
            "override_reason": self.override_reason,
            "created_at": self.created_at.isoformat() if self.created_at else None,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "AnnotationRecord":
        from .corpus import parse_timestamp

        override = raw.get("manual_label_override")
        return cls(
            post_id=str(raw["post_id"]),
            annotator_id=str(raw["annotator_id"]),
            checked_criteria=frozenset(raw.get("checked_criteria", ())),
            flags=frozenset(raw.get("flags", ())),
            manual_label_override=Label(override) if override else None,
            override_reason=raw.get("override_reason"),
            created_at=parse_timestamp(raw.get("created_at")),
        )


def validate_record(record: AnnotationRecord, schema: CriteriaSchema) -> None:
    unknown = record.checked_criteria - schema.codes
    if unknown:
        raise UnknownCriterionError(f"unknown criterion codes: {sorted(unknown)}")
    bad_flags = record.flags - schema.flag_codes
    if bad_flags:
        raise UnknownCriterionError(f"unknown flags: {sorted(bad_flags)}")


def resolve_label(record: AnnotationRecord, schema: CriteriaSchema | None = None) -> Label:
    """Override wins; otherwise target iff any criterion or flag applies."""
    schema = schema or default_schema()
    validate_record(record, schema)
    if record.manual_label_override is not None:
        return record.manual_label_override
    if record.checked_criteria or record.flags:
        return Label.TARGET
    return Label.NON_TARGET


def blind_export(posts, seed: int = 0) -> list[dict]:
    """Strip everything but id and text; order shuffled deterministically."""
    items = [{"id": p.id, "text": p.text} for p in sorted(posts, key=lambda p: p.id)]
    rng = np.random.default_rng(seed)
    rng.shuffle(items)
    return items


@dataclass(frozen=True)
class LabeledItem:
    post_id: str
    text: str
    label: Label


@dataclass
class LabeledDataset:
    items: list
    provenance: dict = field(default_factory=dict)

    def texts(self) -> list[str]:
        return [it.text for it in self.items]

    def labels(self) -> list[Label]:
        return [it.label for it in self.items]

    def count(self, label: Label) -> int:
        return sum(1 for it in self.items if it.label is label)


def build_training_set(records, store, schema: CriteriaSchema | None = None) -> LabeledDataset:
    """One target/non-target item per post; inconclusive and excluded
    posts are dropped and counted in the provenance. Disagreeing
    annotators are an error: adjudication is not this tool's call.
    """
    schema = schema or default_schema()
    by_post: dict[str, set] = {}
    for rec in records:
        label = resolve_label(rec, schema)
        by_post.setdefault(rec.post_id, set()).add(label)
    conflicts = [pid for pid, labels in by_post.items() if len(labels) > 1]
    if conflicts:
        raise UnresolvedConflictError(conflicts)
    items = []
    dropped = {Label.INCONCLUSIVE.value: 0, Label.EXCLUDED.value: 0}
    for pid in sorted(by_post):
        label = next(iter(by_post[pid]))
        if label in (Label.INCONCLUSIVE, Label.EXCLUDED):
            dropped[label.value] += 1
            continue
        post = store.get_post(pid)
        if post is None:
            raise LookupError(f"annotation references unknown post id: {pid}")
        items.append(LabeledItem(post_id=pid, text=post.text, label=label))
    provenance = {
        "source_counts": {
            Label.TARGET.value: sum(1 for it in items if it.label is Label.TARGET),
            Label.NON_TARGET.value: sum(1 for it in items if it.label is Label.NON_TARGET),
            Label.INCONCLUSIVE.value: dropped[Label.INCONCLUSIVE.value],
            Label.EXCLUDED.value: dropped[Label.EXCLUDED.value],
        },
        "balancing": "none",
        "seed": None,
    }
    return LabeledDataset(items=items, provenance=provenance)


@dataclass(frozen=True)
class AnnotationSummary:
    per_label: dict
    per_subdomain: dict

    def to_dict(self) -> dict:
        return {"per_label": dict(self.per_label), "per_subdomain": dict(self.per_subdomain)}


def annotation_summary(records, schema: CriteriaSchema | None = None) -> AnnotationSummary:
    """Label counts plus per-subdomain counts among targets. Subdomains
    overlap, so they do not sum to the target count."""
    schema = schema or default_schema()
    per_label = {label.value: 0 for label in Label}
    per_subdomain = {name: 0 for name in SUBDOMAINS}
    for rec in records:
        label = resolve_label(rec, schema)
        per_label[label.value] += 1
        if label is Label.TARGET:
            touched = {schema.subdomain_of(code) for code in rec.checked_criteria}
            for name in touched:
                per_subdomain[name] += 1
    return AnnotationSummary(per_label, per_subdomain)


def write_records_jsonl(records: Iterable[AnnotationRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_dict(), ensure_ascii=False) + "\n")


def read_records_jsonl(path) -> list[AnnotationRecord]:
    from .corpus import iter_jsonl_records

    return [AnnotationRecord.from_dict(raw) for raw in iter_jsonl_records(path)]


def write_labeled_dataset(dataset: LabeledDataset, path) -> None:
    """JSONL with a provenance header line followed by one item per line."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"provenance": dataset.provenance}, ensure_ascii=False) + "\n")
        for it in dataset.items:
            fh.write(
                json.dumps(
                    {"post_id": it.post_id, "text": it.text, "label": it.label.value},
                    ensure_ascii=False,
                )
                + "\n"
            )


def read_labeled_dataset(path) -> LabeledDataset:
    from .corpus import iter_jsonl_records

    rows = list(iter_jsonl_records(path))
    if not rows or "provenance" not in rows[0]:
        raise ValueError("labeled dataset must start with a provenance header line")
    items = [
        LabeledItem(post_id=r["post_id"], text=r["text"], label=Label(r["label"]))
        for r in rows[1:]
    ]
    return LabeledDataset(items=items, provenance=rows[0]["provenance"])
