"""Model hyperparameters, with toy defaults small enough for gradient checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

# Structured vision features: 3 mean-color channels + 8 positional channels,
# the remainder a random projection of raw patch pixels.
N_COLOR_FEATURES = 3
N_POS_FEATURES = 8
N_FIXED_FEATURES = N_COLOR_FEATURES + N_POS_FEATURES


@dataclass(frozen=True)
class ModelConfig:
    """Shapes and seeds for the grounded suggestion model.

    Defaults are the toy scale used for double-precision gradient checking;
    production-scale values (e.g. [1024, 1024] projection channels and a
    3-layer localization decoder at a 4096-wide LM) are expressible too.
    """

    vocab_size: int
    image_size: int = 32
    patch_size: int = 8
    d_vision: int = 32
    d_model: int = 64
    n_layers: int = 2
    n_heads: int = 4
    loc_proj_channels: tuple[int, ...] = (64, 64)
    loc_decoder_layers: int = 3
    max_sequence_length: int = 128
    seed: int = 0

    def __post_init__(self) -> None:
        if self.image_size % self.patch_size != 0:
            raise ValueError("image_size must be divisible by patch_size")
        if self.d_model % self.n_heads != 0:
            raise ValueError("d_model must be divisible by n_heads")
        if self.loc_decoder_layers < 1:
            raise ValueError("loc_decoder_layers must be >= 1")
        if not self.loc_proj_channels:
            raise ValueError("loc_proj_channels must be non-empty")
        if self.loc_width % self.n_heads != 0:
            raise ValueError("last loc projection channel must be divisible by n_heads")
        if self.d_vision <= N_FIXED_FEATURES:
            raise ValueError(f"d_vision must exceed {N_FIXED_FEATURES}")
        if self.vocab_size < 6:
            raise ValueError("vocab_size must cover the reserved tokens")

    @property
    def grid_size(self) -> int:
        return self.image_size // self.patch_size

    @property
    def n_patches(self) -> int:
        return self.grid_size * self.grid_size

    @property
    def patch_dim(self) -> int:
        return self.patch_size * self.patch_size * 3

    @property
    def loc_width(self) -> int:
        return self.loc_proj_channels[-1]

    @property
    def max_internal_length(self) -> int:
        # One IMAGE slot expands into n_patches feature positions.
        return self.max_sequence_length - 1 + self.n_patches

    def to_dict(self) -> dict[str, Any]:
        return {
            "vocab_size": self.vocab_size,
            "image_size": self.image_size,
            "patch_size": self.patch_size,
            "d_vision": self.d_vision,
            "d_model": self.d_model,
            "n_layers": self.n_layers,
            "n_heads": self.n_heads,
            "loc_proj_channels": list(self.loc_proj_channels),
            "loc_decoder_layers": self.loc_decoder_layers,
            "max_sequence_length": self.max_sequence_length,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ModelConfig":
        d = dict(d)
        d["loc_proj_channels"] = tuple(d["loc_proj_channels"])
        return cls(**d)
