"""Forum corpus store: posts, authors, board topics, and descriptive stats.

Canonical interchange is line-delimited JSON, one post per line:

    {"id": str, "subforum": str, "url": str, "published_at": str,
     "is_initial": bool, "text": str}

A single-file relational database with ``post`` and ``author`` tables can
be imported through :func:`iter_sqlite_records`. Query results are
immutable snapshots ordered by id, safe to share across threads; the
store itself is single-writer.
"""

from __future__ import annotations

import json
import re
import sqlite3
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator

from .sampling import word_token_count


class Subforum(str, Enum):
    RULES_AND_GUIDELINES = "rules_and_guidelines"
    BLACKJACK = "blackjack"
    POKER = "poker"
    ROULETTE = "roulette"
    OTHER_GAMES_OF_CHANCE = "other_games_of_chance"
    SLOT_MACHINES = "slot_machines"
    GAMBLING_ARCADES_AND_CASINOS = "gambling_arcades_and_casinos"
    CASINO_COMPLAINTS = "casino_complaints"
    GAMBLING_ADDICTION = "gambling_addiction"
    ONLINE_CASINOS = "online_casinos"
    MISCELLANEOUS = "miscellaneous"
    OTHER = "other"


def _normalize_board_name(name: str) -> str:
    return re.sub(r"[^a-z0-9]+", "_", name.strip().lower()).strip("_")


_BOARD_ALIASES = {
    "rules_and_guidelines": Subforum.RULES_AND_GUIDELINES,
    "regeln_und_richtlinien": Subforum.RULES_AND_GUIDELINES,
    "blackjack": Subforum.BLACKJACK,
    "poker": Subforum.POKER,
    "roulette": Subforum.ROULETTE,
    "other_games_of_chance": Subforum.OTHER_GAMES_OF_CHANCE,
    "andere_gluecksspiele": Subforum.OTHER_GAMES_OF_CHANCE,
    "slot_machines": Subforum.SLOT_MACHINES,
    "slot_machines_and_slot_games": Subforum.SLOT_MACHINES,
    "spielautomaten": Subforum.SLOT_MACHINES,
    "gambling_arcades_and_casinos": Subforum.GAMBLING_ARCADES_AND_CASINOS,
    "spielhallen_und_casinos": Subforum.GAMBLING_ARCADES_AND_CASINOS,
    "casino_complaints": Subforum.CASINO_COMPLAINTS,
    "casino_beschwerden": Subforum.CASINO_COMPLAINTS,
    "gambling_addiction": Subforum.GAMBLING_ADDICTION,
    "spielsucht": Subforum.GAMBLING_ADDICTION,
    "online_casinos": Subforum.ONLINE_CASINOS,
    "miscellaneous": Subforum.MISCELLANEOUS,
    "sonstiges": Subforum.MISCELLANEOUS,
    "other": Subforum.OTHER,
}


def resolve_subforum(name: str) -> tuple[Subforum, bool]:
    """Map a raw board name to the enum; unknown names fall to OTHER.

    Returns (subforum, known).
    """
    key = _normalize_board_name(str(name))
    if key in _BOARD_ALIASES:
        return _BOARD_ALIASES[key], True
    return Subforum.OTHER, False


@dataclass(frozen=True)
class Post:
    id: str
    subforum: Subforum
    url: str
    published_at: datetime | None
    is_initial: bool
    text: str
    word_token_count: int
    author_ref: str | None = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "subforum": self.subforum.value,
            "url": self.url,
            "published_at": self.published_at.isoformat() if self.published_at else None,
            "is_initial": self.is_initial,
            "text": self.text,
        }


@dataclass(frozen=True)
class Author:
    username: str
    activated_at: datetime | None
    post_count: int


@dataclass(frozen=True)
class IngestReport:
    n_posts: int
    n_authors: int
    n_rejected: int
    reasons: dict = field(default_factory=dict)


@dataclass(frozen=True)
class CorpusStats:
    per_subforum_counts: dict
    mean_tokens_addiction: float | None
    mean_tokens_other: float | None
    n_initial_addiction: int
    n_initial_other: int

    def to_dict(self) -> dict:
        return {
            "per_subforum_counts": {s.value: c for s, c in self.per_subforum_counts.items()},
            "mean_tokens_addiction": self.mean_tokens_addiction,
            "mean_tokens_other": self.mean_tokens_other,
            "n_initial_addiction": self.n_initial_addiction,
            "n_initial_other": self.n_initial_other,
        }


def parse_timestamp(value) -> datetime | None:
    """ISO-8601 in, aware UTC out; naive values are assumed UTC."""
    if value in (None, ""):
        return None
    if isinstance(value, datetime):
        ts = value
    else:
        ts = datetime.fromisoformat(str(value).replace("Z", "+00:00"))
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def _build_post(raw: dict) -> Post:
    text = str(raw.get("text", "") or "")
    sub, _known = resolve_subforum(raw["subforum"])
    return Post(
        id=str(raw["id"]),
        subforum=sub,
        url=str(raw.get("url", "") or ""),
        published_at=parse_timestamp(raw.get("published_at")),
        is_initial=bool(raw.get("is_initial", False)),
        text=text,
        word_token_count=word_token_count(text),
        author_ref=raw.get("author_ref"),
    )


class PostStore:
    """In-memory corpus with single-writer, many-reader semantics."""

    def __init__(self):
        self._posts: dict[str, Post] = {}
        self._authors: dict[str, Author] = {}
        self._lock = threading.RLock()

    def __len__(self) -> int:
        return len(self._posts)

    def ingest(self, records: Iterable) -> IngestReport:
        """Accept a stream of raw records.

        A record is either a plain post dict (the JSONL schema) or a
        ("post"|"author", dict) tuple. Re-ingesting identical content
        changes nothing; the same id with different content is rejected
        with reason ``duplicate_conflict``; unknown board names map to
        OTHER and are tallied under ``unknown_subforum``.
        """
        n_posts = n_authors = n_rejected = 0
        reasons: dict[str, int] = {}

        def bump(reason):
            reasons[reason] = reasons.get(reason, 0) + 1

        with self._lock:
            for record in records:
                kind, raw = ("post", record) if isinstance(record, dict) else record
                if kind == "author":
                    username = raw.get("username")
                    if not username:
                        n_rejected += 1
                        bump("missing_field")
                        continue
                    self._authors[str(username)] = Author(
                        username=str(username),
                        activated_at=parse_timestamp(raw.get("activated_at")),
                        post_count=int(raw.get("post_count", 0)),
                    )
                    n_authors += 1
                    continue
                if not raw.get("id") or "subforum" not in raw or raw["subforum"] in (None, ""):
                    n_rejected += 1
                    bump("missing_field")
                    continue
                _sub, known = resolve_subforum(raw["subforum"])
                post = _build_post(raw)
                existing = self._posts.get(post.id)
                if existing is not None and existing != post:
                    n_rejected += 1
                    bump("duplicate_conflict")
                    continue
                if not known:
                    bump("unknown_subforum")
                self._posts[post.id] = post
                n_posts += 1
        return IngestReport(n_posts, n_authors, n_rejected, reasons)

    def query_posts(self, subforum=None, initial_only: bool = False, max_tokens: int | None = None) -> list[Post]:
        """Posts satisfying every provided predicate, ordered by id."""
        if subforum is not None:
            wanted = {Subforum(s) for s in subforum}
        with self._lock:
            posts = list(self._posts.values())
        out = []
        for p in posts:
            if subforum is not None and p.subforum not in wanted:
                continue
            if initial_only and not p.is_initial:
                continue
            if max_tokens is not None and p.word_token_count > max_tokens:
                continue
            out.append(p)
        out.sort(key=lambda p: p.id)
        return out

    def get_post(self, post_id: str) -> Post | None:
        with self._lock:
            return self._posts.get(post_id)

    def stats(self) -> CorpusStats:
        counts = {s: 0 for s in Subforum}
        addiction_tokens: list[int] = []
        other_tokens: list[int] = []
        n_initial_addiction = n_initial_other = 0
        with self._lock:
            posts = list(self._posts.values())
        for p in posts:
            counts[p.subforum] += 1
            if p.subforum is Subforum.GAMBLING_ADDICTION:
                addiction_tokens.append(p.word_token_count)
                n_initial_addiction += int(p.is_initial)
            else:
                other_tokens.append(p.word_token_count)
                n_initial_other += int(p.is_initial)
        mean_addiction = sum(addiction_tokens) / len(addiction_tokens) if addiction_tokens else None
        mean_other = sum(other_tokens) / len(other_tokens) if other_tokens else None
        return CorpusStats(counts, mean_addiction, mean_other, n_initial_addiction, n_initial_other)


def iter_jsonl_records(path) -> Iterator[dict]:
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield json.loads(line)


def write_posts_jsonl(posts: Iterable[Post], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for post in posts:
            fh.write(json.dumps(post.to_dict(), ensure_ascii=False) + "\n")


def load_store(path) -> PostStore:
    store = PostStore()
    store.ingest(iter_jsonl_records(path))
    return store


def iter_sqlite_records(path) -> Iterator[tuple]:
    """Yield tagged records from a relational file with ``post`` and
    (optionally) ``author`` tables.

    Expected ``post`` columns: id, text, url, plus either a subforum
    column or a URL whose path names the board; optional published_at
    (or date) and is_initial. ``author``: username, activated_at,
    post_count.
    """
    con = sqlite3.connect(str(Path(path)))
    con.row_factory = sqlite3.Row
    try:
        for row in con.execute("SELECT * FROM post"):
            raw = {k.lower(): row[k] for k in row.keys()}
            if "subforum" not in raw or raw["subforum"] in (None, ""):
                raw["subforum"] = _subforum_from_url(raw.get("url", ""))
            if "published_at" not in raw and "date" in raw:
                raw["published_at"] = raw["date"]
            if "author_ref" not in raw and "author" in raw:
                raw["author_ref"] = raw["author"]
            yield ("post", raw)
        tables = {
            r[0] for r in con.execute("SELECT name FROM sqlite_master WHERE type='table'")
        }
        if "author" in tables:
            for row in con.execute("SELECT * FROM author"):
                yield ("author", {k.lower(): row[k] for k in row.keys()})
    finally:
        con.close()


def _subforum_from_url(url: str) -> str:
    segments = [s for s in str(url).split("/") if s]
    for segment in segments:
        sub, known = resolve_subforum(segment)
        if known:
            return sub.value
    # no recognizable board in the path: keep something to map to OTHER
    return segments[-1] if segments else "unknown"
