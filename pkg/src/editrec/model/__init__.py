"""Grounded suggestion model: config, numpy network, and checkpoints."""

from .checkpoint import CheckpointError, load_bundle, save_bundle
from .config import ModelConfig
from .network import (
    EditEmbedding,
    FeatureGrid,
    ForwardPass,
    GenerationResult,
    ModelBundle,
    encode_image,
    forward_teacher_forced,
    generate,
    localize,
)

__all__ = [
    "CheckpointError",
    "EditEmbedding",
    "FeatureGrid",
    "ForwardPass",
    "GenerationResult",
    "ModelBundle",
    "ModelConfig",
    "encode_image",
    "forward_teacher_forced",
    "generate",
    "load_bundle",
    "localize",
    "save_bundle",
]
