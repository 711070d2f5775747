"""Desk-scale image editing recommendation stack.

A grounded suggestion model (vision features + decoder-only LM + box
decoder driven by a reserved EDIT token), its composite training objective
with gradient checking, a four-step synthetic-data pipeline over pluggable
clients, and the evaluation harness for alignment scores and rank
aggregation.
"""

from .boxes import BoundingBox, CenterBox, box_area, box_convert, box_giou, box_iou, box_to_center, giou_loss
from .samples import (
    ConceptAssociation,
    EditingSample,
    LossWeights,
    PerceivedObject,
    PerceptionReport,
    read_samples_jsonl,
    validate_sample,
    write_samples_jsonl,
)
from .template import RenderedExample, ReplyParse, ReplyParseError, parse_reply, render, render_prompt
from .tokens import EDIT_TOKEN, IMAGE_TOKEN, SpecialToken
from .vocab import Vocabulary, detokenize, tokenize

__all__ = [
    "BoundingBox",
    "CenterBox",
    "ConceptAssociation",
    "EDIT_TOKEN",
    "EditingSample",
    "IMAGE_TOKEN",
    "LossWeights",
    "PerceivedObject",
    "PerceptionReport",
    "RenderedExample",
    "ReplyParse",
    "ReplyParseError",
    "SpecialToken",
    "Vocabulary",
    "box_area",
    "box_convert",
    "box_giou",
    "box_iou",
    "box_to_center",
    "detokenize",
    "giou_loss",
    "parse_reply",
    "read_samples_jsonl",
    "render",
    "render_prompt",
    "tokenize",
    "validate_sample",
    "write_samples_jsonl",
]

__version__ = "0.1.0"
