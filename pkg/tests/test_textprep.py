"""Preprocessing pipelines and fixed-length encoding."""

import random
import string

import pytest

from pgdetect.textprep import (
    PAD_TOKEN,
    SEP_TOKEN,
    START_TOKEN,
    UNK_TOKEN,
    Pipeline,
    TokenSequence,
    Vocab,
    encode,
    preprocess,
    wordpiece,
)


def test_lowercase_only():
    assert preprocess("Hallo, Welt!!!", Pipeline.LOWERCASE_ONLY) == "hallo, welt!!!"


def test_lowercase_and_strip_punct():
    assert preprocess("Hallo, Welt!!!", Pipeline.LOWERCASE_AND_STRIP_PUNCT) == "hallo welt"


def test_empty_text():
    for p in Pipeline:
        assert preprocess("", p) == ""


def test_umlauts_survive():
    got = preprocess("Glücksspiel: SÜCHTIG?!", Pipeline.LOWERCASE_AND_STRIP_PUNCT)
    assert got == "glücksspiel süchtig"


def test_idempotence():
    rng = random.Random(5)
    alphabet = string.ascii_letters + string.punctuation + " äöüß"
    for _ in range(100):
        text = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 60)))
        for p in Pipeline:
            once = preprocess(text, p)
            assert preprocess(once, p) == once


@pytest.fixture(scope="module")
def vocab():
    corpus = [
        "das spiel macht probleme",
        "hilfe bei spielsucht gesucht",
        "bonus und auszahlung im casino",
    ]
    return Vocab.build(corpus)


def test_vocab_has_specials(vocab):
    for tok in (START_TOKEN, SEP_TOKEN, PAD_TOKEN, UNK_TOKEN):
        assert tok in vocab
    assert vocab.tokens[vocab.pad_id] == PAD_TOKEN


def test_vocab_round_trip(tmp_path, vocab):
    path = tmp_path / "vocab.txt"
    vocab.save(path)
    again = Vocab.load(path)
    assert again.tokens == vocab.tokens
    assert (tmp_path / "vocab.txt.specials.json").exists()


def test_wordpiece_whole_word(vocab):
    assert wordpiece("spielsucht", vocab) == [vocab.index["spielsucht"]]


def test_wordpiece_char_fallback(vocab):
    ids = wordpiece("spielcasino", vocab)  # unseen word, known characters
    assert len(ids) > 1
    assert vocab.unk_id not in ids
    assert ids[0] == vocab.index["spiel"]


def test_wordpiece_unknown_chars(vocab):
    assert wordpiece("试试", vocab) == [vocab.unk_id]


def test_encode_empty(vocab):
    seq = encode("", vocab, max_len=512)
    assert seq.ids[0] == vocab.start_id
    assert seq.ids[1] == vocab.sep_id
    assert all(i == vocab.pad_id for i in seq.ids[2:])
    assert sum(seq.attention_mask) == 2


def test_encode_truncates_long_text(vocab):
    text = " ".join(["spielsucht"] * 600)
    seq = encode(text, vocab, max_len=512)
    assert len(seq.ids) == 512
    assert all(m == 1 for m in seq.attention_mask)
    assert seq.ids[-1] == vocab.sep_id


def test_encode_shape_and_mask_property(vocab):
    rng = random.Random(11)
    alphabet = "abcdefghij äöü.,!"
    for _ in range(200):
        text = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 400)))
        seq = encode(text, vocab, max_len=128)
        assert len(seq.ids) == 128
        assert len(seq.attention_mask) == 128
        n_real = sum(seq.attention_mask)
        assert all(m == 1 for m in seq.attention_mask[:n_real])
        assert all(m == 0 for m in seq.attention_mask[n_real:])
        assert all(i == vocab.pad_id for i in seq.ids[n_real:])
        assert encode(text, vocab, max_len=128) == seq


def test_token_sequence_shape_contract():
    with pytest.raises(ValueError):
        TokenSequence(ids=(1, 2), attention_mask=(1,), max_len=2)
