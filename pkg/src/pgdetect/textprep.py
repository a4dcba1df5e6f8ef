"""Preprocessing variants and fixed-length model-input encoding.

Two pipelines only, because that is the comparison axis of the
experiments: plain Unicode lowercasing, and lowercasing plus removal of
punctuation (Unicode categories P*). Encoding is greedy longest-match
subword tokenization over a plain-text vocabulary (one token per line,
line index = id) whose special symbols live in a JSON sidecar.
"""

from __future__ import annotations

import json
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

START_TOKEN = "[START]"
SEP_TOKEN = "[SEP]"
PAD_TOKEN = "[PAD]"
UNK_TOKEN = "[UNK]"
CONTINUATION_PREFIX = "##"

MAX_LEN_DEFAULT = 512


class Pipeline(str, Enum):
    LOWERCASE_ONLY = "lowercase_only"
    LOWERCASE_AND_STRIP_PUNCT = "lowercase_and_strip_punct"


def _strip_punct(text: str) -> str:
    kept = "".join(ch for ch in text if not unicodedata.category(ch).startswith("P"))
    return re.sub(r"\s+", " ", kept).strip()


def preprocess(text: str, pipeline: Pipeline) -> str:
    pipeline = Pipeline(pipeline)
    lowered = text.lower()
    if pipeline is Pipeline.LOWERCASE_ONLY:
        return lowered
    return _strip_punct(lowered)


@dataclass(frozen=True)
class TokenSequence:
    ids: tuple
    attention_mask: tuple
    max_len: int

    def __post_init__(self):
        if len(self.ids) != self.max_len or len(self.attention_mask) != self.max_len:
            raise ValueError("ids and attention_mask must both have length max_len")


class Vocab:
    """Subword vocabulary with [START]/[SEP]/[PAD]/[UNK] specials."""

    def __init__(self, tokens):
        self.tokens = list(tokens)
        self.index = {tok: i for i, tok in enumerate(self.tokens)}
        if len(self.index) != len(self.tokens):
            raise ValueError("vocabulary contains duplicate tokens")
        for special in (START_TOKEN, SEP_TOKEN, PAD_TOKEN, UNK_TOKEN):
            if special not in self.index:
                raise ValueError(f"vocabulary is missing the special token {special}")
        self.start_id = self.index[START_TOKEN]
        self.sep_id = self.index[SEP_TOKEN]
        self.pad_id = self.index[PAD_TOKEN]
        self.unk_id = self.index[UNK_TOKEN]

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, token):
        return token in self.index

    @classmethod
    def build(cls, corpus, max_words: int | None = 2000) -> "Vocab":
        """Synthetic vocabulary from a corpus: whole words by frequency
        plus a character-level fallback so any corpus text encodes."""
        words = Counter()
        chars = set()
        for text in corpus:
            for w in text.split():
                words[w] += 1
                chars.update(w)
        ranked = [w for w, _ in sorted(words.items(), key=lambda kv: (-kv[1], kv[0]))]
        if max_words is not None:
            ranked = ranked[:max_words]
        char_tokens = sorted(chars)
        continuations = [CONTINUATION_PREFIX + c for c in char_tokens]
        tokens = [PAD_TOKEN, START_TOKEN, SEP_TOKEN, UNK_TOKEN]
        for tok in char_tokens + continuations + ranked:
            if tok not in tokens:
                tokens.append(tok)
        seen = set()
        deduped = [t for t in tokens if not (t in seen or seen.add(t))]
        return cls(deduped)

    def save(self, path) -> None:
        path = Path(path)
        path.write_text("\n".join(self.tokens) + "\n", encoding="utf-8")
        sidecar = {
            "start": START_TOKEN,
            "sep": SEP_TOKEN,
            "pad": PAD_TOKEN,
            "unk": UNK_TOKEN,
            "continuation_prefix": CONTINUATION_PREFIX,
        }
        Path(str(path) + ".specials.json").write_text(
            json.dumps(sidecar, indent=2) + "\n", encoding="utf-8"
        )

    @classmethod
    def load(cls, path) -> "Vocab":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        return cls([ln for ln in lines if ln])


def wordpiece(word: str, vocab: Vocab) -> list:
    """Greedy longest-match split of one whitespace-delimited word.

    A word with any unencodable stretch maps to a single [UNK]."""
    pieces = []
    pos = 0
    while pos < len(word):
        prefix = CONTINUATION_PREFIX if pos > 0 else ""
        end = len(word)
        found = None
        while end > pos:
            candidate = prefix + word[pos:end]
            if candidate in vocab:
                found = candidate
                break
            end -= 1
        if found is None:
            return [vocab.unk_id]
        pieces.append(vocab.index[found])
        pos = end
    return pieces


def encode(text: str, vocab: Vocab, max_len: int = MAX_LEN_DEFAULT) -> TokenSequence:
    """[START] pieces [SEP], truncated to max_len (specials kept), then
    padded to exactly max_len with mask 0 on the padding tail."""
    if max_len < 2:
        raise ValueError("max_len must leave room for [START] and [SEP]")
    piece_ids = []
    budget = max_len - 2
    for word in text.split():
        if len(piece_ids) >= budget:
            break
        piece_ids.extend(wordpiece(word, vocab))
    piece_ids = piece_ids[:budget]
    ids = [vocab.start_id] + piece_ids + [vocab.sep_id]
    n_real = len(ids)
    ids.extend([vocab.pad_id] * (max_len - n_real))
    mask = [1] * n_real + [0] * (max_len - n_real)
    return TokenSequence(ids=tuple(ids), attention_mask=tuple(mask), max_len=max_len)
