"""Tokenizer and vocabulary: round-trips, reserved ids, persistence."""

from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from editrec.tokens import EDIT_TOKEN, IMAGE_TOKEN
from editrec.vocab import (
    BOS_ID,
    EDIT_ID,
    EOS_ID,
    IMAGE_ID,
    PAD_ID,
    RESERVED,
    UNK,
    UNK_ID,
    Vocabulary,
    detokenize,
    tokenize,
)

CORPUS = [
    "add a gold necklace",
    "replace the background with a marble hall",
    "add a gold crown, then polish it.",
    f"For local editing suggestion: a corgi.{EDIT_TOKEN}",
]

words = st.sampled_from(["add", "a", "gold", "necklace", "replace", "the", "corgi", "hall"])
canonical_texts = st.lists(words, min_size=1, max_size=12).map(" ".join)


class TestTokenize:
    def test_punctuation_splits(self):
        assert tokenize("add a hat, then a scarf.") == ["add", "a", "hat", ",", "then", "a", "scarf", "."]

    def test_special_literals_stay_whole(self):
        assert tokenize(f"suggestion.{EDIT_TOKEN}") == ["suggestion", ".", EDIT_TOKEN]
        assert tokenize(f"HUMAN: {IMAGE_TOKEN} hi") == ["HUMAN", ":", IMAGE_TOKEN, "hi"]

    def test_detokenize_inverts_template_text(self):
        text = f"HUMAN: {IMAGE_TOKEN} please, edit: now. ASSISTANT: For local editing suggestion: a corgi.{EDIT_TOKEN}"
        assert detokenize(tokenize(text)) == text

    @given(canonical_texts)
    def test_round_trip_canonical(self, text):
        assert detokenize(tokenize(text)) == text


class TestVocabulary:
    def test_reserved_ids_fixed(self):
        v = Vocabulary.build(CORPUS)
        assert v.piece(PAD_ID) == RESERVED[0]
        assert v.piece(UNK_ID) == UNK
        assert v.piece(IMAGE_ID) == IMAGE_TOKEN
        assert v.piece(EDIT_ID) == EDIT_TOKEN

    def test_build_deterministic(self):
        a, b = Vocabulary.build(CORPUS), Vocabulary.build(CORPUS)
        assert [a.piece(i) for i in range(len(a))] == [b.piece(i) for i in range(len(b))]

    def test_encode_decode_round_trip(self):
        v = Vocabulary.build(CORPUS)
        text = "add a gold necklace"
        ids = v.encode(text)
        assert v.decode(ids) == text
        assert all(i >= len(RESERVED) for i in ids)

    def test_edit_literal_encodes_to_reserved_id(self):
        v = Vocabulary.build(CORPUS)
        assert v.encode(EDIT_TOKEN) == [EDIT_ID]
        assert v.encode(f"a corgi.{EDIT_TOKEN}")[-1] == EDIT_ID

    def test_unknown_maps_to_unk_and_is_visible(self):
        v = Vocabulary.build(CORPUS)
        ids = v.encode("add a zeppelin")
        assert ids[-1] == UNK_ID
        assert UNK in v.decode(ids)

    def test_frequency_order_with_tie_break(self):
        v = Vocabulary.build(["b b a a c"])
        # a and b tie at 2, alphabetical breaks; c trails.
        assert v.piece(len(RESERVED)) == "a"
        assert v.piece(len(RESERVED) + 1) == "b"
        assert v.piece(len(RESERVED) + 2) == "c"

    def test_save_load(self, tmp_path):
        v = Vocabulary.build(CORPUS)
        path = tmp_path / "vocab.txt"
        v.save(path)
        loaded = Vocabulary.load(path)
        assert [loaded.piece(i) for i in range(len(loaded))] == [v.piece(i) for i in range(len(v))]
        first_lines = path.read_text(encoding="utf-8").splitlines()[: len(RESERVED)]
        assert tuple(first_lines) == RESERVED

    def test_load_rejects_missing_reserved(self, tmp_path):
        path = tmp_path / "vocab.txt"
        path.write_text("foo\nbar\n", encoding="utf-8")
        with pytest.raises(ValueError):
            Vocabulary.load(path)
