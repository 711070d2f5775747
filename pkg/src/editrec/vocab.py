"""Word-level tokenizer and vocabulary with reserved special tokens.

The tokenizer is deliberately tiny: whitespace and sentence punctuation
split into word pieces, special-token literals stay whole, and unknown
pieces fall back to a visible ⟨UNK⟩. Detokenization re-attaches punctuation
so encode/decode round-trips are lossless for template-shaped text.
"""

from __future__ import annotations

import re
from pathlib import Path
from typing import Iterable

from .tokens import EDIT_TOKEN, IMAGE_TOKEN

PAD, UNK, BOS, EOS = "⟨PAD⟩", "⟨UNK⟩", "⟨BOS⟩", "⟨EOS⟩"

# Reserved pieces occupy the first lines of every vocabulary file, in this order.
RESERVED = (PAD, UNK, BOS, EOS, IMAGE_TOKEN, EDIT_TOKEN)
PAD_ID, UNK_ID, BOS_ID, EOS_ID, IMAGE_ID, EDIT_ID = range(6)

_PUNCT = ".,:;!?"
_TOKEN_RE = re.compile(
    "|".join(
        [re.escape(IMAGE_TOKEN), re.escape(EDIT_TOKEN), f"[{re.escape(_PUNCT)}]", f"[^\\s{re.escape(_PUNCT)}]+"]
    )
)


def tokenize(text: str) -> list[str]:
    """Split text into word pieces, punctuation marks, and special literals."""
    return _TOKEN_RE.findall(text)


def detokenize(pieces: Iterable[str]) -> str:
    """Inverse of :func:`tokenize` for canonically spaced text.

    Punctuation attaches to the preceding piece; the EDIT literal attaches
    directly as well, matching the template's ``.⟨EDIT⟩`` adjacency.
    """
    out: list[str] = []
    for piece in pieces:
        if out and (piece in _PUNCT or piece == EDIT_TOKEN):
            out.append(piece)
        elif out:
            out.append(" " + piece)
        else:
            out.append(piece)
    return "".join(out)


class Vocabulary:
    """Frequency-ordered word vocabulary; immutable once built."""

    def __init__(self, pieces: list[str]):
        if tuple(pieces[: len(RESERVED)]) != RESERVED:
            raise ValueError("vocabulary must start with the reserved pieces")
        if len(set(pieces)) != len(pieces):
            raise ValueError("vocabulary contains duplicate pieces")
        self._id_to_piece = list(pieces)
        self._piece_to_id = {p: i for i, p in enumerate(pieces)}

    @classmethod
    def build(cls, corpus: Iterable[str]) -> "Vocabulary":
        """Build from raw texts: reserved pieces first, then words ordered
        by descending frequency with alphabetical tie-break (deterministic).
        """
        counts: dict[str, int] = {}
        for text in corpus:
            for piece in tokenize(text):
                if piece not in RESERVED:
                    counts[piece] = counts.get(piece, 0) + 1
        ordered = sorted(counts, key=lambda p: (-counts[p], p))
        return cls(list(RESERVED) + ordered)

    def __len__(self) -> int:
        return len(self._id_to_piece)

    def __contains__(self, piece: str) -> bool:
        return piece in self._piece_to_id

    def encode(self, text: str) -> list[int]:
        """Token ids for text; out-of-vocabulary pieces map to the UNK id."""
        return [self._piece_to_id.get(p, UNK_ID) for p in tokenize(text)]

    def decode(self, ids: Iterable[int]) -> str:
        """Text for token ids; unknown ids render as the visible UNK literal."""
        pieces = []
        for i in ids:
            if 0 <= i < len(self._id_to_piece):
                pieces.append(self._id_to_piece[i])
            else:
                pieces.append(UNK)
        return detokenize(pieces)

    def piece(self, token_id: int) -> str:
        return self._id_to_piece[token_id]

    def save(self, path: str | Path) -> None:
        """One piece per line; the line number is the id."""
        with open(path, "w", encoding="utf-8") as f:
            for piece in self._id_to_piece:
                f.write(piece + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        with open(path, "r", encoding="utf-8") as f:
            pieces = [line.rstrip("\n") for line in f if line.rstrip("\n")]
        return cls(pieces)
