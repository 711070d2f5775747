"""Normalized bounding-box geometry: areas, IoU, GIoU, and the GIoU loss.

All boxes live in unit-square coordinates (fractions of image width and
height). Corner form is the canonical representation; center form exists
only to parameterize the regression head, where a sigmoid keeps every
field in range by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

# Enclosing-box area floor; guards the GIoU division when two valid
# boxes degenerate to near-zero joint extent.
_ENCLOSURE_FLOOR = 1e-12


@dataclass(frozen=True)
class BoundingBox:
    """Corner-form box with 0 <= x1 < x2 <= 1 and 0 <= y1 < y2 <= 1."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.x1 < self.x2 <= 1.0):
            raise ValueError(f"invalid x extent: x1={self.x1}, x2={self.x2}")
        if not (0.0 <= self.y1 < self.y2 <= 1.0):
            raise ValueError(f"invalid y extent: y1={self.y1}, y2={self.y2}")

    @classmethod
    def from_list(cls, values: list[float] | tuple[float, ...]) -> BoundingBox:
        if len(values) != 4:
            raise ValueError(f"expected 4 box coordinates, got {len(values)}")
        return cls(float(values[0]), float(values[1]), float(values[2]), float(values[3]))

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x1, self.y1, self.x2, self.y2)

    def as_list(self) -> list[float]:
        return [self.x1, self.y1, self.x2, self.y2]

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1


@dataclass(frozen=True)
class CenterBox:
    """Center-form box: cx, cy in [0, 1], w, h in (0, 1]."""

    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.cx <= 1.0 and 0.0 <= self.cy <= 1.0):
            raise ValueError(f"center out of range: cx={self.cx}, cy={self.cy}")
        if not (0.0 < self.w <= 1.0 and 0.0 < self.h <= 1.0):
            raise ValueError(f"size out of range: w={self.w}, h={self.h}")


def box_area(b: BoundingBox) -> float:
    """Area of a valid box; always in (0, 1]."""
    return b.width * b.height


def box_convert(c: CenterBox) -> BoundingBox:
    """Center form to corner form, clipped to the unit square."""
    x1 = max(0.0, c.cx - c.w / 2.0)
    y1 = max(0.0, c.cy - c.h / 2.0)
    x2 = min(1.0, c.cx + c.w / 2.0)
    y2 = min(1.0, c.cy + c.h / 2.0)
    if x2 <= x1 or y2 <= y1:
        raise ValueError(f"degenerate box after clipping: {(x1, y1, x2, y2)}")
    return BoundingBox(x1, y1, x2, y2)


def box_to_center(b: BoundingBox) -> CenterBox:
    """Corner form back to center form (inverse of ``box_convert``)."""
    return CenterBox(
        cx=(b.x1 + b.x2) / 2.0,
        cy=(b.y1 + b.y2) / 2.0,
        w=b.x2 - b.x1,
        h=b.y2 - b.y1,
    )


def _intersection_area(a: BoundingBox, b: BoundingBox) -> float:
    iw = max(0.0, min(a.x2, b.x2) - max(a.x1, b.x1))
    ih = max(0.0, min(a.y2, b.y2) - max(a.y1, b.y1))
    return iw * ih


def _enclosure_area(a: BoundingBox, b: BoundingBox) -> float:
    cw = max(0.0, max(a.x2, b.x2) - min(a.x1, b.x1))
    ch = max(0.0, max(a.y2, b.y2) - min(a.y1, b.y1))
    return max(cw * ch, _ENCLOSURE_FLOOR)


def box_iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union; in [0, 1]."""
    inter = _intersection_area(a, b)
    union = box_area(a) + box_area(b) - inter
    return inter / union


def box_giou(a: BoundingBox, b: BoundingBox) -> float:
    """Generalized IoU: IoU minus the enclosing-box penalty; in (-1, 1]."""
    inter = _intersection_area(a, b)
    union = box_area(a) + box_area(b) - inter
    enclosure = _enclosure_area(a, b)
    return inter / union - (enclosure - union) / enclosure


def giou_loss(pred: BoundingBox, gt: BoundingBox) -> float:
    """1 - GIoU; in [0, 2)."""
    return 1.0 - box_giou(pred, gt)
