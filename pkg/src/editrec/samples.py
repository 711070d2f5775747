"""Shared dataset records: editing samples, perception reports, loss weights.

An :class:`EditingSample` is the dataset atom: one image reference, the
user's vague hint, and one concrete editing suggestion, optionally grounded
to a target box when the edit is local. Samples serialize one-per-line as
JSON (JSONL) with a fixed key order so builds are byte-reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Iterator

from .boxes import BoundingBox
from .tokens import RESERVED_LITERALS

SCOPES = ("global", "local")

# Fixed JSONL key order for EditingSample records.
_SAMPLE_KEYS = ("image", "hint", "scope", "suggestion", "box", "object", "provenance")


@dataclass(frozen=True)
class EditingSample:
    """One {image, hint, suggestion} record, grounded to a box when local."""

    image_ref: str
    hint: str
    scope: str
    suggestion: str
    target_box: BoundingBox | None = None
    edited_object: str = ""
    provenance: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class PerceivedObject:
    """One detected object: open-vocabulary tag, box, short caption."""

    tag: str
    box: BoundingBox
    caption: str = ""

    def __post_init__(self) -> None:
        if not self.tag:
            raise ValueError("perceived object tag must be non-empty")


@dataclass(frozen=True)
class PerceptionReport:
    """Dense description of one image: global caption plus object list."""

    global_caption: str
    objects: tuple[PerceivedObject, ...] = ()


@dataclass(frozen=True)
class ConceptAssociation:
    """A hint-related concept together with the reason it was proposed."""

    concept: str
    rationale: str

    def __post_init__(self) -> None:
        if not self.concept:
            raise ValueError("concept must be non-empty")
        if not self.rationale:
            raise ValueError("rationale must be non-empty")


@dataclass(frozen=True)
class LossWeights:
    """Weights of the text and localization terms in the composite loss."""

    lambda_txt: float = 1.0
    lambda_loc: float = 2.0

    def __post_init__(self) -> None:
        if self.lambda_txt < 0 or self.lambda_loc < 0:
            raise ValueError("loss weights must be nonnegative")


def validate_sample(s: EditingSample) -> list[str]:
    """Return the list of violated invariants; empty means valid.

    Never raises: malformed samples are reported, not rejected, so callers
    can quarantine them with a reason.
    """
    violations: list[str] = []
    if s.scope not in SCOPES:
        violations.append(f"scope must be one of {SCOPES}, got {s.scope!r}")
    if s.scope == "local" and s.target_box is None:
        violations.append("local sample requires a target_box")
    if s.scope == "global" and s.target_box is not None:
        violations.append("global sample must not carry a target_box")
    if not s.suggestion:
        violations.append("suggestion must be non-empty")
    for literal in RESERVED_LITERALS:
        if literal in s.suggestion:
            violations.append(f"suggestion contains reserved token literal {literal}")
        if literal in s.hint:
            violations.append(f"hint contains reserved token literal {literal}")
    return violations


def sample_to_dict(s: EditingSample) -> dict[str, Any]:
    """JSON-ready dict with the canonical key order; box omitted for global."""
    out: dict[str, Any] = {
        "image": s.image_ref,
        "hint": s.hint,
        "scope": s.scope,
        "suggestion": s.suggestion,
    }
    if s.target_box is not None:
        out["box"] = [round(v, 6) for v in s.target_box.as_list()]
    out["object"] = s.edited_object
    out["provenance"] = s.provenance
    return out


def sample_from_dict(d: dict[str, Any]) -> EditingSample:
    """Parse one JSONL record; raises ValueError on malformed input."""
    unknown = set(d) - set(_SAMPLE_KEYS)
    if unknown:
        raise ValueError(f"unknown sample keys: {sorted(unknown)}")
    box = BoundingBox.from_list(d["box"]) if "box" in d else None
    sample = EditingSample(
        image_ref=d["image"],
        hint=d["hint"],
        scope=d["scope"],
        suggestion=d["suggestion"],
        target_box=box,
        edited_object=d.get("object", ""),
        provenance=d.get("provenance", {}),
    )
    violations = validate_sample(sample)
    if violations:
        raise ValueError("; ".join(violations))
    return sample


def write_samples_jsonl(samples: Iterable[EditingSample], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for s in samples:
            f.write(json.dumps(sample_to_dict(s), ensure_ascii=False))
            f.write("\n")


def read_samples_jsonl(path: str | Path) -> list[EditingSample]:
    out = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(sample_from_dict(json.loads(line)))
            except (json.JSONDecodeError, ValueError, KeyError) as e:
                raise ValueError(f"{path}:{lineno}: {e}") from e
    return out


def perception_report_from_dict(d: dict[str, Any]) -> PerceptionReport:
    """Validate raw client output into a PerceptionReport.

    Raises ValueError naming the first violated field, so client wrappers
    can surface contract breaches precisely.
    """
    if "global_caption" not in d:
        raise ValueError("perception report missing 'global_caption'")
    objects = []
    for i, obj in enumerate(d.get("objects", [])):
        if not obj.get("tag"):
            raise ValueError(f"object {i}: tag must be non-empty")
        try:
            box = BoundingBox.from_list(obj["box"])
        except (KeyError, ValueError) as e:
            raise ValueError(f"object {i}: invalid box: {e}") from e
        objects.append(PerceivedObject(tag=obj["tag"], box=box, caption=obj.get("caption", "")))
    return PerceptionReport(global_caption=d["global_caption"], objects=tuple(objects))


def iter_jsonl(path: str | Path) -> Iterator[dict[str, Any]]:
    """Yield raw JSON objects from a JSONL file, skipping blank lines."""
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                yield json.loads(line)
