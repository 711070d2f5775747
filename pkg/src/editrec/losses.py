"""Composite training objective: masked cross-entropy plus box regression.

The text term is a mean of -log p(target) over supervised positions pooled
across the batch; the localization term averages (L1 + GIoU loss) over the
box-supervised samples only, so global samples contribute nothing to it.
Gradient-carrying variants back every term used by the trainer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .boxes import BoundingBox, giou_loss as _giou_loss_scalar
from .samples import LossWeights

_C_FLOOR = 1e-12


@dataclass(frozen=True)
class LossBreakdown:
    """One batch's loss terms; l_total = lambda_txt*l_txt + lambda_loc*l_loc."""

    l_txt: float
    l_loc: float
    l_total: float
    n_text_positions: int
    n_box_samples: int


def text_loss(logits: np.ndarray, target_ids: np.ndarray, text_loss_mask: np.ndarray) -> float:
    """Mean -log p(target) over masked positions; logits row i scores position i."""
    loss, _ = text_loss_and_grad(logits, target_ids, text_loss_mask)
    return loss


def text_loss_and_grad(
    logits: np.ndarray, target_ids: np.ndarray, text_loss_mask: np.ndarray
) -> tuple[float, np.ndarray]:
    logits = np.asarray(logits, dtype=np.float64)
    target_ids = np.asarray(target_ids)
    mask = np.asarray(text_loss_mask, dtype=bool)
    if logits.shape[0] != target_ids.shape[0] or logits.shape[0] != mask.shape[0]:
        raise ValueError("logits, target_ids, and mask must agree in length")
    if not mask.any():
        raise ValueError("text loss requires at least one supervised position")

    z = logits[mask]
    t = target_ids[mask]
    zmax = z.max(axis=1, keepdims=True)
    logsumexp = zmax[:, 0] + np.log(np.exp(z - zmax).sum(axis=1))
    nll = logsumexp - z[np.arange(len(t)), t]
    loss = float(nll.mean())

    probs = np.exp(z - zmax)
    probs /= probs.sum(axis=1, keepdims=True)
    probs[np.arange(len(t)), t] -= 1.0
    dlogits = np.zeros_like(logits)
    dlogits[mask] = probs / len(t)
    return loss, dlogits


def giou_loss_and_grad(pred: np.ndarray, gt: np.ndarray) -> tuple[float, np.ndarray]:
    """1 - GIoU on corner-form arrays, with the gradient w.r.t. pred.

    Max/min kinks use the standard subgradient (ties give measure-zero
    events for the finite-difference oracle).
    """
    p1, q1, p2, q2 = (float(v) for v in pred)
    g1, h1, g2, h2 = (float(v) for v in gt)

    ix1, ix2 = max(p1, g1), min(p2, g2)
    iy1, iy2 = max(q1, h1), min(q2, h2)
    iw, ih = max(0.0, ix2 - ix1), max(0.0, iy2 - iy1)
    inter = iw * ih
    area_p = (p2 - p1) * (q2 - q1)
    area_g = (g2 - g1) * (h2 - h1)
    union = area_p + area_g - inter
    cw = max(p2, g2) - min(p1, g1)
    ch = max(q2, h2) - min(q1, h1)
    c = max(cw * ch, _C_FLOOR)
    loss = 2.0 - inter / union - union / c

    # dI/d(pred coords), gated on a positive intersection.
    live = iw > 0 and ih > 0
    di = np.array(
        [
            -ih * (p1 >= g1) * live,
            -iw * (q1 >= h1) * live,
            ih * (p2 <= g2) * live,
            iw * (q2 <= h2) * live,
        ]
    )
    da = np.array([-(q2 - q1), -(p2 - p1), q2 - q1, p2 - p1])
    du = da - di
    if c > _C_FLOOR:
        dc = np.array(
            [
                -ch * (p1 <= g1),
                -cw * (q1 <= h1),
                ch * (p2 >= g2),
                cw * (q2 >= h2),
            ]
        )
    else:
        dc = np.zeros(4)
    dloss = -(di * union - inter * du) / union**2 - (du * c - union * dc) / c**2
    return loss, dloss


def loc_loss(pred: BoundingBox, gt: BoundingBox) -> float:
    """Mean corner L1 plus GIoU loss, summed with equal weight."""
    l1 = float(np.abs(np.array(pred.as_list()) - np.array(gt.as_list())).mean())
    return l1 + _giou_loss_scalar(pred, gt)


def loc_loss_and_grad(pred_corners: np.ndarray, gt_corners: np.ndarray) -> tuple[float, np.ndarray]:
    pred = np.asarray(pred_corners, dtype=np.float64)
    gt = np.asarray(gt_corners, dtype=np.float64)
    diff = pred - gt
    l1 = float(np.abs(diff).mean())
    dl1 = np.sign(diff) / 4.0
    g, dg = giou_loss_and_grad(pred, gt)
    return l1 + g, dl1 + dg


def loc_loss_batch(pairs: list[tuple[BoundingBox, BoundingBox]]) -> float:
    """Mean of per-pair localization losses."""
    if not pairs:
        return 0.0
    return float(np.mean([loc_loss(p, g) for p, g in pairs]))


@dataclass(frozen=True)
class SampleOutputs:
    """Per-sample forward outputs aligned with their supervision targets."""

    target_logits: np.ndarray  # (n_supervised, vocab)
    target_ids: np.ndarray  # (n_supervised,)
    box_supervised: bool
    pred_box: BoundingBox | None = None


def composite_loss(
    outputs: list[SampleOutputs],
    gt_boxes: list[BoundingBox | None],
    weights: LossWeights,
) -> LossBreakdown:
    """Combine batch forward outputs against ground truth into one breakdown."""
    if len(outputs) != len(gt_boxes):
        raise ValueError("outputs and gt_boxes must align")
    total_nll = 0.0
    n_positions = 0
    loc_terms: list[float] = []
    for out, gt in zip(outputs, gt_boxes):
        n = out.target_ids.shape[0]
        if n:
            mask = np.ones(n, dtype=bool)
            total_nll += text_loss(out.target_logits, out.target_ids, mask) * n
            n_positions += n
        if out.box_supervised:
            if out.pred_box is None or gt is None:
                raise ValueError("box-supervised sample lacks a predicted or ground-truth box")
            loc_terms.append(loc_loss(out.pred_box, gt))
        elif gt is not None:
            raise ValueError("sample carries a ground-truth box but is not box-supervised")
    if n_positions == 0:
        raise ValueError("batch has no supervised text positions")
    l_txt = total_nll / n_positions
    l_loc = float(np.mean(loc_terms)) if loc_terms else 0.0
    l_total = weights.lambda_txt * l_txt + weights.lambda_loc * l_loc
    return LossBreakdown(
        l_txt=l_txt,
        l_loc=l_loc,
        l_total=l_total,
        n_text_positions=n_positions,
        n_box_samples=len(loc_terms),
    )
