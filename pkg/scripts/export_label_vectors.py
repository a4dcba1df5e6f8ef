"""Regenerate shared/resolve_label_vectors.json.

The browser workstation duplicates the server's label-resolution rule
for its live preview; these vectors pin both sides to the same answers.
A test in tests/test_annotation.py fails when this file drifts.
"""

import json
from pathlib import Path

from pgdetect.annotation import AnnotationRecord, default_schema, resolve_label

SCHEMA = default_schema()


def build_vectors():
    cases = []

    def add(checked=(), flags=(), override=None):
        record = AnnotationRecord(
            post_id="vector",
            annotator_id="vector",
            checked_criteria=frozenset(checked),
            flags=frozenset(flags),
            manual_label_override=override,
        )
        cases.append(
            {
                "checked_criteria": sorted(checked),
                "flags": sorted(flags),
                "manual_label_override": override.value if override else None,
                "expected": resolve_label(record, SCHEMA).value,
            }
        )

    from pgdetect.annotation import Label

    add()
    for code in sorted(SCHEMA.codes):
        add(checked=[code])
    for flag in sorted(SCHEMA.flag_codes):
        add(flags=[flag])
    add(checked=["pg_chasing_losses", "cd_illusion_of_control"])
    add(checked=["grp_financial_bailouts"], flags=["seeking_or_in_treatment"])
    add(override=Label.INCONCLUSIVE)
    add(override=Label.EXCLUDED)
    add(checked=["pg_preoccupation"], override=Label.INCONCLUSIVE)
    add(flags=["self_identified_addicted"], override=Label.EXCLUDED)
    return cases


def main():
    out = Path(__file__).resolve().parent.parent / "shared" / "resolve_label_vectors.json"
    out.parent.mkdir(exist_ok=True)
    out.write_text(json.dumps(build_vectors(), indent=2) + "\n", encoding="utf-8")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
