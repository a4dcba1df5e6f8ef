"""Exception types shared across the pipeline.

Every error carries a stable ``code`` string so the CLI can map failures
to exit codes and the HTTP service can echo them in JSON error bodies.
"""


class PgdetectError(Exception):
    code = "error"


class InsufficientPoolError(PgdetectError):
    code = "insufficient_pool"


class EmptyVocabularyError(PgdetectError):
    code = "empty_vocabulary"


class TooFewMinorityError(PgdetectError):
    code = "too_few_minority"


class InsufficientItemsError(PgdetectError):
    code = "insufficient_items"


class BalanceGateFailedError(PgdetectError):
    code = "balance_gate_failed"

    def __init__(self, message, p_value):
        super().__init__(message)
        self.p_value = p_value


class DegenerateLabelsError(PgdetectError):
    code = "degenerate_labels"


class BadInputError(PgdetectError):
    code = "bad_input"


class UnknownCriterionError(PgdetectError):
    code = "validation"


class UnresolvedConflictError(PgdetectError):
    code = "unresolved_conflict"

    def __init__(self, post_ids):
        super().__init__(f"conflicting annotations for posts: {sorted(post_ids)}")
        self.post_ids = sorted(post_ids)


class StageError(PgdetectError):
    """Wraps a failure with the pipeline stage it occurred in."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        self.code = getattr(cause, "code", "error")
        super().__init__(f"{stage}:{self.code}: {cause}")
