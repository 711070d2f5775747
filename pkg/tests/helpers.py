"""Shared test utilities: randomized valid samples and small vocabularies."""

from __future__ import annotations

import numpy as np

from editrec.boxes import BoundingBox
from editrec.samples import EditingSample

HINT_WORDS = ["luxury", "halloween", "winter", "retro", "minimal", "festive", "sunset", "vintage"]
SUGGESTION_WORDS = [
    "add", "a", "gold", "necklace", "replace", "the", "background", "with",
    "marble", "hall", "two", "bats", "above", "pendant", "corgi", "snow",
    "remove", "lamp", "crown", "sparkling", "warm", "light",
]


def random_valid_sample(rng: np.random.Generator, index: int = 0) -> EditingSample:
    """A spec-valid sample with template-safe hint and suggestion text."""
    scope = "local" if rng.random() < 0.5 else "global"
    hint = " ".join(rng.choice(HINT_WORDS, size=rng.integers(1, 3), replace=False))
    n_words = int(rng.integers(1, 7))
    suggestion = " ".join(rng.choice(SUGGESTION_WORDS, size=n_words, replace=True))
    box = None
    if scope == "local":
        x1, y1 = rng.uniform(0, 0.5, size=2)
        x2, y2 = x1 + rng.uniform(0.05, 0.5), y1 + rng.uniform(0.05, 0.5)
        box = BoundingBox(x1, y1, min(x2, 1.0), min(y2, 1.0))
    return EditingSample(
        image_ref=f"img_{index:04d}",
        hint=hint,
        scope=scope,
        suggestion=suggestion,
        target_box=box,
        edited_object="object",
        provenance={"origin": "test"},
    )
