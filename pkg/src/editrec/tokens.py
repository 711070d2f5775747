"""Reserved special tokens used by the prompt template and the vocabulary."""

from __future__ import annotations

from enum import Enum


class SpecialToken(Enum):
    """Tokens with reserved vocabulary ids that never collide with words."""

    IMAGE = "⟨IMAGE⟩"
    EDIT = "⟨EDIT⟩"

    @property
    def literal(self) -> str:
        return self.value


IMAGE_TOKEN = SpecialToken.IMAGE.literal
EDIT_TOKEN = SpecialToken.EDIT.literal

RESERVED_LITERALS = (IMAGE_TOKEN, EDIT_TOKEN)
