"""Box geometry against an independent counting oracle plus properties."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from editrec.boxes import (
    BoundingBox,
    CenterBox,
    box_area,
    box_convert,
    box_giou,
    box_iou,
    box_to_center,
    giou_loss,
)

GRID = 1000


def raster_masks(box: BoundingBox, n: int = GRID) -> np.ndarray:
    """Boolean coverage mask: cell (i, j) covered iff its center is inside."""
    centers = (np.arange(n) + 0.5) / n
    in_x = (centers > box.x1) & (centers < box.x2)
    in_y = (centers > box.y1) & (centers < box.y2)
    return in_x[:, None] & in_y[None, :]


def raster_area(box: BoundingBox, n: int = GRID) -> float:
    return raster_masks(box, n).sum() / (n * n)


def raster_iou_giou(a: BoundingBox, b: BoundingBox, n: int = GRID) -> tuple[float, float]:
    """IoU and GIoU by counting covered cells on an n x n grid."""
    ma, mb = raster_masks(a, n), raster_masks(b, n)
    inter = int((ma & mb).sum())
    union = int((ma | mb).sum())
    enclosing = BoundingBox(
        min(a.x1, b.x1), min(a.y1, b.y1), max(a.x2, b.x2), max(a.y2, b.y2)
    )
    c = int(raster_masks(enclosing, n).sum())
    iou = inter / union
    return iou, iou - (c - union) / c


def random_box_pairs(seed: int, n_pairs: int) -> list[tuple[BoundingBox, BoundingBox]]:
    """Seeded random pairs with corners aligned to the oracle grid."""
    rng = np.random.default_rng(seed)
    pairs = []
    while len(pairs) < n_pairs:
        e = rng.integers(0, GRID + 1, size=8)
        x1a, x2a = sorted((e[0], e[1]))
        y1a, y2a = sorted((e[2], e[3]))
        x1b, x2b = sorted((e[4], e[5]))
        y1b, y2b = sorted((e[6], e[7]))
        if x1a == x2a or y1a == y2a or x1b == x2b or y1b == y2b:
            continue
        pairs.append(
            (
                BoundingBox(x1a / GRID, y1a / GRID, x2a / GRID, y2a / GRID),
                BoundingBox(x1b / GRID, y1b / GRID, x2b / GRID, y2b / GRID),
            )
        )
    return pairs


grid_boxes = st.builds(
    lambda xs, ys: BoundingBox(xs[0] / 64, ys[0] / 64, xs[1] / 64, ys[1] / 64),
    st.lists(st.integers(0, 64), min_size=2, max_size=2, unique=True).map(sorted),
    st.lists(st.integers(0, 64), min_size=2, max_size=2, unique=True).map(sorted),
)


class TestValidation:
    def test_valid_box(self):
        b = BoundingBox(0.1, 0.2, 0.4, 0.9)
        assert b.as_list() == [0.1, 0.2, 0.4, 0.9]

    @pytest.mark.parametrize(
        "coords",
        [
            (0.5, 0.0, 0.5, 1.0),  # zero width
            (0.6, 0.0, 0.5, 1.0),  # inverted x
            (-0.1, 0.0, 0.5, 1.0),  # out of range
            (0.0, 0.0, 0.5, 1.1),
        ],
    )
    def test_invalid_box_rejected(self, coords):
        with pytest.raises(ValueError):
            BoundingBox(*coords)

    def test_center_box_rejects_bad_size(self):
        with pytest.raises(ValueError):
            CenterBox(0.5, 0.5, 0.0, 0.5)
        with pytest.raises(ValueError):
            CenterBox(1.2, 0.5, 0.5, 0.5)


class TestArea:
    def test_full_frame(self):
        assert box_area(BoundingBox(0, 0, 1, 1)) == 1.0

    def test_quarter_frame(self):
        assert box_area(BoundingBox(0, 0, 0.5, 0.5)) == 0.25

    def test_against_raster_oracle(self):
        b = BoundingBox(0.1, 0.2, 0.4, 0.9)
        assert box_area(b) == pytest.approx(0.21, abs=1e-12)
        assert raster_area(b) == pytest.approx(box_area(b), abs=1e-3)


class TestConvert:
    def test_full_frame(self):
        assert box_convert(CenterBox(0.5, 0.5, 1, 1)) == BoundingBox(0, 0, 1, 1)

    def test_quarter(self):
        assert box_convert(CenterBox(0.25, 0.25, 0.5, 0.5)) == BoundingBox(0, 0, 0.5, 0.5)

    def test_round_trip_example(self):
        b = BoundingBox(0.1, 0.2, 0.4, 0.9)
        rt = box_convert(box_to_center(b))
        for got, want in zip(rt.as_list(), b.as_list()):
            assert got == pytest.approx(want, abs=1e-15)

    def test_clipping(self):
        b = box_convert(CenterBox(0.0, 0.5, 0.4, 0.4))
        assert b.x1 == 0.0 and b.x2 == pytest.approx(0.2)

    @given(grid_boxes)
    def test_round_trip_exact_on_dyadic_grid(self, b):
        # Corners on a power-of-two grid make the float arithmetic exact.
        assert box_convert(box_to_center(b)) == b


class TestIoUGIoU:
    def test_identical(self):
        b = BoundingBox(0.2, 0.3, 0.7, 0.8)
        assert box_iou(b, b) == 1.0
        assert box_giou(b, b) == 1.0
        assert giou_loss(b, b) == 0.0

    def test_disjoint(self):
        a, b = BoundingBox(0, 0, 0.1, 0.1), BoundingBox(0.9, 0.9, 1, 1)
        assert box_iou(a, b) == 0.0
        assert box_giou(a, b) == pytest.approx(-0.98, abs=1e-12)
        assert giou_loss(a, b) == pytest.approx(1.98, abs=1e-12)

    def test_overlapping_pair(self):
        a, b = BoundingBox(0, 0, 0.5, 0.5), BoundingBox(0.25, 0.25, 0.75, 0.75)
        assert box_iou(a, b) == pytest.approx(0.0625 / 0.4375, abs=1e-12)
        assert box_giou(a, b) == pytest.approx(1 / 7 - 0.125 / 0.5625, abs=1e-12)
        assert giou_loss(a, b) == pytest.approx(1.0793650793650793, abs=1e-12)

    def test_matches_raster_oracle_smoke(self):
        for a, b in random_box_pairs(seed=7, n_pairs=60):
            iou_o, giou_o = raster_iou_giou(a, b)
            assert box_iou(a, b) == pytest.approx(iou_o, abs=1e-3)
            assert box_giou(a, b) == pytest.approx(giou_o, abs=1e-3)

    @given(grid_boxes, grid_boxes)
    @settings(max_examples=200)
    def test_properties(self, a, b):
        iou, giou = box_iou(a, b), box_giou(a, b)
        assert iou == pytest.approx(box_iou(b, a), abs=1e-12)
        assert giou == pytest.approx(box_giou(b, a), abs=1e-12)
        assert giou <= iou + 1e-12
        assert -1.0 < giou <= 1.0
        assert 0.0 <= iou <= 1.0
        assert 0.0 <= giou_loss(a, b) < 2.0
