"""Synthetic grounding task: colored markers on noise backgrounds.

Each image is uniform noise with one solid-color rectangle. The hint is the
marker's color word; the color determines the scope so the conditional task
is well-posed: warm-palette colors ask for a global restyle, cool-palette
colors ask for a local edit whose target box is the marker itself. Scopes
alternate sample-by-sample, so global and local counts differ by at most 1.
"""

from __future__ import annotations

import numpy as np

from .boxes import BoundingBox
from .samples import EditingSample
from .seeding import rng_for

LOCAL_COLORS = {
    "red": (1.0, 0.0, 0.0),
    "green": (0.0, 1.0, 0.0),
    "blue": (0.0, 0.0, 1.0),
}
GLOBAL_COLORS = {
    "yellow": (1.0, 1.0, 0.0),
    "purple": (1.0, 0.0, 1.0),
    "cyan": (0.0, 1.0, 1.0),
}

LOCAL_SUGGESTION = "highlight the {color} marker"
GLOBAL_SUGGESTION = "tint the whole scene {color}"

# Marker side lengths as fractions of the image, before pixel snapping.
MIN_SIDE_FRAC = 0.25
MAX_SIDE_FRAC = 0.625

Dataset = list[tuple[EditingSample, np.ndarray]]


def synthesize_dataset(seed: int, n: int, image_size: int = 32) -> Dataset:
    """Deterministic (sample, image) pairs; n >= 2."""
    if n < 2:
        raise ValueError("need at least 2 samples")
    rng = rng_for(seed, "synthetic")
    local_names = sorted(LOCAL_COLORS)
    global_names = sorted(GLOBAL_COLORS)
    min_px = max(2, int(round(MIN_SIDE_FRAC * image_size)))
    max_px = int(round(MAX_SIDE_FRAC * image_size))

    out: Dataset = []
    for i in range(n):
        scope = "local" if i % 2 == 0 else "global"
        names = local_names if scope == "local" else global_names
        color = names[int(rng.integers(len(names)))]
        rgb = (LOCAL_COLORS | GLOBAL_COLORS)[color]

        w_px = int(rng.integers(min_px, max_px + 1))
        h_px = int(rng.integers(min_px, max_px + 1))
        x_px = int(rng.integers(0, image_size - w_px + 1))
        y_px = int(rng.integers(0, image_size - h_px + 1))

        image = rng.uniform(0.0, 1.0, size=(image_size, image_size, 3))
        image[y_px : y_px + h_px, x_px : x_px + w_px] = rgb

        box = BoundingBox(
            x_px / image_size,
            y_px / image_size,
            (x_px + w_px) / image_size,
            (y_px + h_px) / image_size,
        )
        if scope == "local":
            suggestion = LOCAL_SUGGESTION.format(color=color)
            target_box: BoundingBox | None = box
            edited_object = f"{color} marker"
        else:
            suggestion = GLOBAL_SUGGESTION.format(color=color)
            target_box = None
            edited_object = "whole scene"

        sample = EditingSample(
            image_ref=f"synthetic://{seed}/{i:05d}",
            hint=color,
            scope=scope,
            suggestion=suggestion,
            target_box=target_box,
            edited_object=edited_object,
            provenance={"generator": "synthetic", "seed": seed, "index": i},
        )
        out.append((sample, image))
    return out


def marker_box(sample: EditingSample, image: np.ndarray) -> BoundingBox:
    """Recover the painted marker's box from the raster (test oracle)."""
    rgb = (LOCAL_COLORS | GLOBAL_COLORS)[sample.hint]
    mask = np.all(image == np.array(rgb), axis=-1)
    ys, xs = np.nonzero(mask)
    size = image.shape[0]
    return BoundingBox(
        xs.min() / size, ys.min() / size, (xs.max() + 1) / size, (ys.max() + 1) / size
    )
