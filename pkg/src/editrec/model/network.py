"""The grounded suggestion model.

Three parameter groups around a frozen vision featurizer:

* ``enc``   — frozen patch featurizer (mean color + positional code + a
              random pixel projection); stands in for a big pretrained
              visual backbone.
* ``proj``  — cross-modal projector mapping vision features to LM width.
* ``lm``    — decoder-only transformer over the token sequence, with the
              image slot expanded into one projected embedding per patch.
* ``loc``   — localization decoder: an MLP over the EDIT token's hidden
              state followed by cross-attention layers over the vision
              features and a sigmoid box head.

The text channel never carries coordinates and the box channel never
carries text; the EDIT token's hidden state is the only bridge.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..boxes import BoundingBox, CenterBox, box_convert
from ..samples import EditingSample
from ..template import RenderedExample, ReplyParseError, parse_reply, render_prompt
from ..vocab import BOS_ID, EDIT_ID, EOS_ID, IMAGE_ID, Vocabulary
from . import layers as L
from .config import N_COLOR_FEATURES, N_FIXED_FEATURES, N_POS_FEATURES, ModelConfig

logger = logging.getLogger(__name__)

# Smooth floor keeping predicted box sides strictly positive.
MIN_BOX_SIDE = 1e-3

DEFAULT_FREEZE = {"enc": True, "proj": False, "lm": False, "loc": False}


@dataclass(frozen=True)
class FeatureGrid:
    """Per-patch vision features, shape (n_patches, d_vision)."""

    h_img: np.ndarray

    def __post_init__(self) -> None:
        if not np.all(np.isfinite(self.h_img)):
            raise ValueError("vision features must be finite")


@dataclass(frozen=True)
class EditEmbedding:
    """The EDIT token's final hidden state, shape (d_model,)."""

    h_edit: np.ndarray

    def __post_init__(self) -> None:
        if not np.all(np.isfinite(self.h_edit)):
            raise ValueError("edit embedding must be finite")


@dataclass
class ModelBundle:
    """Named parameter arrays plus per-group freeze flags."""

    config: ModelConfig
    params: dict[str, np.ndarray]
    freeze: dict[str, bool] = field(default_factory=lambda: dict(DEFAULT_FREEZE))

    @staticmethod
    def group_of(name: str) -> str:
        return name.split(".", 1)[0]

    def is_trainable(self, name: str) -> bool:
        return not self.freeze[self.group_of(name)]

    def trainable_names(self) -> list[str]:
        return [n for n in self.params if self.is_trainable(n)]

    def trainable_groups(self) -> list[str]:
        return sorted({g for g, frozen in self.freeze.items() if not frozen})

    @classmethod
    def initialize(cls, config: ModelConfig) -> "ModelBundle":
        return cls(config=config, params=init_params(config))


def param_shapes(config: ModelConfig) -> dict[str, tuple[int, ...]]:
    """Expected parameter shapes, in deterministic creation order."""
    c = config
    shapes: dict[str, tuple[int, ...]] = {}
    shapes["enc.w"] = (c.patch_dim, c.d_vision - N_FIXED_FEATURES)
    shapes["enc.b"] = (c.d_vision - N_FIXED_FEATURES,)
    shapes["proj.w"] = (c.d_vision, c.d_model)
    shapes["proj.b"] = (c.d_model,)
    shapes["lm.tok_emb"] = (c.vocab_size, c.d_model)
    shapes["lm.pos_emb"] = (c.max_internal_length, c.d_model)
    for i in range(c.n_layers):
        prefix = f"lm.l{i}"
        _block_shapes(shapes, prefix, c.d_model, c.d_model)
    shapes["lm.lnf.g"] = (c.d_model,)
    shapes["lm.lnf.b"] = (c.d_model,)
    shapes["lm.head.w"] = (c.d_model, c.vocab_size)
    shapes["lm.head.b"] = (c.vocab_size,)

    widths = [c.d_model, *c.loc_proj_channels]
    for i, (din, dout) in enumerate(zip(widths[:-1], widths[1:])):
        shapes[f"loc.proj{i}.w"] = (din, dout)
        shapes[f"loc.proj{i}.b"] = (dout,)
    w = c.loc_width
    for i in range(c.loc_decoder_layers):
        _block_shapes(shapes, f"loc.l{i}", w, c.d_vision)
    shapes["loc.lnf.g"] = (w,)
    shapes["loc.lnf.b"] = (w,)
    shapes["loc.head.w"] = (w, 4)
    shapes["loc.head.b"] = (4,)
    return shapes


def _block_shapes(shapes: dict, prefix: str, width: int, kv_width: int) -> None:
    shapes[f"{prefix}.ln1.g"] = (width,)
    shapes[f"{prefix}.ln1.b"] = (width,)
    shapes[f"{prefix}.attn.wq"] = (width, width)
    shapes[f"{prefix}.attn.bq"] = (width,)
    shapes[f"{prefix}.attn.wk"] = (kv_width, width)
    shapes[f"{prefix}.attn.bk"] = (width,)
    shapes[f"{prefix}.attn.wv"] = (kv_width, width)
    shapes[f"{prefix}.attn.bv"] = (width,)
    shapes[f"{prefix}.attn.wo"] = (width, width)
    shapes[f"{prefix}.attn.bo"] = (width,)
    shapes[f"{prefix}.ln2.g"] = (width,)
    shapes[f"{prefix}.ln2.b"] = (width,)
    shapes[f"{prefix}.mlp.w1"] = (width, 4 * width)
    shapes[f"{prefix}.mlp.b1"] = (4 * width,)
    shapes[f"{prefix}.mlp.w2"] = (4 * width, width)
    shapes[f"{prefix}.mlp.b2"] = (width,)


def init_params(config: ModelConfig) -> dict[str, np.ndarray]:
    """Seeded initialization; deterministic given the config."""
    rng = np.random.default_rng(config.seed)
    params: dict[str, np.ndarray] = {}
    for name, shape in param_shapes(config).items():
        leaf = name.rsplit(".", 1)[-1]
        if leaf in ("b", "bq", "bk", "bv", "bo", "b1", "b2"):
            arr = np.zeros(shape)
        elif leaf == "g":
            arr = np.ones(shape)
        elif name in ("lm.tok_emb", "lm.pos_emb"):
            arr = rng.normal(0.0, 0.02, size=shape)
        elif name == "loc.head.w":
            # Small head keeps initial boxes near the frame center.
            arr = rng.normal(0.0, 0.01, size=shape)
        else:
            arr = rng.normal(0.0, 1.0 / np.sqrt(shape[0]), size=shape)
        params[name] = np.ascontiguousarray(arr, dtype=np.float64)
    return params


def _patch_grid(image: np.ndarray, config: ModelConfig) -> np.ndarray:
    g, ps = config.grid_size, config.patch_size
    patches = image.reshape(g, ps, g, ps, 3).transpose(0, 2, 1, 3, 4)
    return patches.reshape(config.n_patches, config.patch_dim)


def _positional_code(config: ModelConfig) -> np.ndarray:
    g = config.grid_size
    rows, cols = np.divmod(np.arange(config.n_patches), g)
    u = (cols + 0.5) / g
    v = (rows + 0.5) / g
    return np.stack(
        [u, v, np.sin(np.pi * u), np.cos(np.pi * u), np.sin(np.pi * v), np.cos(np.pi * v),
         np.sin(2 * np.pi * u), np.sin(2 * np.pi * v)],
        axis=1,
    )


def encode_image(image: np.ndarray, bundle: ModelBundle) -> FeatureGrid:
    """Frozen featurizer: mean color, positional code, random projection."""
    c = bundle.config
    if image.shape != (c.image_size, c.image_size, 3):
        raise ValueError(
            f"expected image of shape {(c.image_size, c.image_size, 3)}, got {image.shape}"
        )
    patches = _patch_grid(np.asarray(image, dtype=np.float64), c)
    mean_rgb = patches.reshape(c.n_patches, -1, 3).mean(axis=1)
    pos = _positional_code(c)
    projected = patches @ bundle.params["enc.w"] + bundle.params["enc.b"]
    return FeatureGrid(h_img=np.concatenate([mean_rgb, pos, projected], axis=1))


def _expanded_index(pos: int, slot: int, n_patches: int) -> int:
    if pos < slot:
        return pos
    if pos == slot:
        raise ValueError("the IMAGE slot itself has no single expanded index")
    return pos + n_patches - 1


@dataclass
class ForwardPass:
    """Teacher-forced forward outputs plus the caches needed for backward."""

    logits: np.ndarray  # (internal_length, vocab)
    hidden: np.ndarray  # (internal_length, d_model) after the final norm
    h_edit: np.ndarray | None
    h_img: np.ndarray  # (n_patches, d_vision)
    rendered: RenderedExample
    internal_length: int
    _caches: dict[str, Any]

    def expanded_index(self, pos: int) -> int:
        r = self.rendered
        return _expanded_index(pos, r.image_slot_position, self.h_img.shape[0])


def forward_teacher_forced(
    image: np.ndarray, rendered: RenderedExample, bundle: ModelBundle
) -> ForwardPass:
    """Run the LM over a rendered sequence with the image slot expanded."""
    c, p = bundle.config, bundle.params
    ids = rendered.token_ids
    if len(ids) > c.max_sequence_length:
        raise ValueError(f"sequence length {len(ids)} exceeds max {c.max_sequence_length}")
    if ids.count(IMAGE_ID) != 1:
        raise ValueError("sequence must contain exactly one IMAGE token")

    grid = encode_image(image, bundle)
    h_img = grid.h_img
    patches_cache = _patch_grid(np.asarray(image, dtype=np.float64), c)
    v_img, proj_cache = L.linear_fwd(h_img, p["proj.w"], p["proj.b"])

    slot = rendered.image_slot_position
    ids_arr = np.asarray(ids)
    before, after = ids_arr[:slot], ids_arr[slot + 1 :]
    x = np.concatenate([p["lm.tok_emb"][before], v_img, p["lm.tok_emb"][after]], axis=0)
    n = x.shape[0]
    x = x + p["lm.pos_emb"][:n]

    block_caches = []
    for i in range(c.n_layers):
        x, cache = L.block_fwd(x, None, p, f"lm.l{i}", c.n_heads, causal=True)
        block_caches.append(cache)
    hidden, lnf_cache = L.layernorm_fwd(x, p["lm.lnf.g"], p["lm.lnf.b"])
    logits, head_cache = L.linear_fwd(hidden, p["lm.head.w"], p["lm.head.b"])

    h_edit = None
    if rendered.edit_token_position is not None:
        h_edit = hidden[_expanded_index(rendered.edit_token_position, slot, c.n_patches)]

    caches = {
        "proj": proj_cache,
        "blocks": block_caches,
        "lnf": lnf_cache,
        "head": head_cache,
        "before": before,
        "after": after,
        "slot": slot,
        "patches": patches_cache,
        "n": n,
    }
    return ForwardPass(
        logits=logits,
        hidden=hidden,
        h_edit=h_edit,
        h_img=h_img,
        rendered=rendered,
        internal_length=n,
        _caches=caches,
    )


def backward_teacher_forced(
    fp: ForwardPass,
    dlogits: np.ndarray,
    dhidden_extra: np.ndarray | None,
    bundle: ModelBundle,
    grads: dict[str, np.ndarray],
) -> np.ndarray:
    """Backprop through the LM; returns the gradient w.r.t. h_img.

    ``dhidden_extra`` lets callers inject gradient directly into the final
    hidden states (e.g. the localization decoder's pull on h_EDIT).
    """
    c, p = bundle.config, bundle.params
    caches = fp._caches
    dhidden = L.linear_bwd(dlogits, caches["head"], grads, "lm.head.w", "lm.head.b")
    if dhidden_extra is not None:
        dhidden = dhidden + dhidden_extra
    dx = L.layernorm_bwd(dhidden, caches["lnf"], grads, "lm.lnf")
    for cache in reversed(caches["blocks"]):
        dx, _ = L.block_bwd(dx, cache, grads)

    n, slot = caches["n"], caches["slot"]
    L.accumulate(grads, "lm.pos_emb", _scatter_rows(dx, 0, c.max_internal_length))
    before, after = caches["before"], caches["after"]
    dtok = np.zeros_like(p["lm.tok_emb"])
    np.add.at(dtok, before, dx[:slot])
    np.add.at(dtok, after, dx[slot + c.n_patches :])
    L.accumulate(grads, "lm.tok_emb", dtok)

    dv_img = dx[slot : slot + c.n_patches]
    dh_img = L.linear_bwd(dv_img, caches["proj"], grads, "proj.w", "proj.b")
    return dh_img


def _scatter_rows(dx: np.ndarray, start: int, total: int) -> np.ndarray:
    out = np.zeros((total, dx.shape[1]))
    out[start : start + dx.shape[0]] = dx
    return out


def encoder_backward(
    fp: ForwardPass, dh_img: np.ndarray, grads: dict[str, np.ndarray]
) -> None:
    """Gradient of the frozen featurizer's projection (kept for completeness)."""
    patches = fp._caches["patches"]
    dproj = dh_img[:, N_FIXED_FEATURES:]
    L.accumulate(grads, "enc.w", patches.T @ dproj)
    L.accumulate(grads, "enc.b", dproj.sum(axis=0))


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


@dataclass
class LocForward:
    """Localization decoder outputs with caches for backward."""

    raw: np.ndarray  # pre-sigmoid head outputs, shape (4,)
    center: np.ndarray  # (cx, cy, w, h) after sigmoid and size floor
    corners: np.ndarray  # (x1, y1, x2, y2) after clipping
    box: BoundingBox
    _caches: dict[str, Any]


def loc_forward(h_edit: np.ndarray, h_img: np.ndarray, bundle: ModelBundle) -> LocForward:
    """Decode the EDIT embedding into a box via cross-attention over h_img."""
    c, p = bundle.config, bundle.params
    q = h_edit.reshape(1, -1)
    proj_caches = []
    n_proj = len(c.loc_proj_channels)
    for i in range(n_proj):
        q, lin_cache = L.linear_fwd(q, p[f"loc.proj{i}.w"], p[f"loc.proj{i}.b"])
        if i < n_proj - 1:
            q, gelu_cache = L.gelu_fwd(q)
        else:
            gelu_cache = None
        proj_caches.append((lin_cache, gelu_cache))

    block_caches = []
    for i in range(c.loc_decoder_layers):
        q, cache = L.block_fwd(q, h_img, p, f"loc.l{i}", c.n_heads, causal=False)
        block_caches.append(cache)
    qf, lnf_cache = L.layernorm_fwd(q, p["loc.lnf.g"], p["loc.lnf.b"])
    raw, head_cache = L.linear_fwd(qf, p["loc.head.w"], p["loc.head.b"])
    raw = raw[0]

    s = _sigmoid(raw)
    center = np.array(
        [s[0], s[1], MIN_BOX_SIDE + (1 - MIN_BOX_SIDE) * s[2], MIN_BOX_SIDE + (1 - MIN_BOX_SIDE) * s[3]]
    )
    cx, cy, w, h = center
    corners = np.array(
        [max(0.0, cx - w / 2), max(0.0, cy - h / 2), min(1.0, cx + w / 2), min(1.0, cy + h / 2)]
    )
    box = BoundingBox(*corners)
    caches = {
        "proj": proj_caches,
        "blocks": block_caches,
        "lnf": lnf_cache,
        "head": head_cache,
        "sig": s,
        "center": center,
        "clip_active": (cx - w / 2 < 0, cy - h / 2 < 0, cx + w / 2 > 1, cy + h / 2 > 1),
    }
    return LocForward(raw=raw, center=center, corners=corners, box=box, _caches=caches)


def loc_backward(
    lf: LocForward, dcorners: np.ndarray, bundle: ModelBundle, grads: dict[str, np.ndarray]
) -> tuple[np.ndarray, np.ndarray]:
    """Backprop the box gradient; returns (dh_edit, dh_img)."""
    c = bundle.config
    caches = lf._caches
    x1_clip, y1_clip, x2_clip, y2_clip = caches["clip_active"]
    d1 = np.where([x1_clip, y1_clip, x2_clip, y2_clip], 0.0, dcorners)
    dcx = d1[0] + d1[2]
    dcy = d1[1] + d1[3]
    dw = 0.5 * (d1[2] - d1[0])
    dh = 0.5 * (d1[3] - d1[1])
    s = caches["sig"]
    dsig = s * (1.0 - s)
    draw = np.array(
        [
            dcx * dsig[0],
            dcy * dsig[1],
            dw * (1 - MIN_BOX_SIDE) * dsig[2],
            dh * (1 - MIN_BOX_SIDE) * dsig[3],
        ]
    ).reshape(1, 4)

    dqf = L.linear_bwd(draw, caches["head"], grads, "loc.head.w", "loc.head.b")
    dq = L.layernorm_bwd(dqf, caches["lnf"], grads, "loc.lnf")
    dh_img = None
    for i, cache in reversed(list(enumerate(caches["blocks"]))):
        dq, dkv = L.block_bwd(dq, cache, grads)
        dh_img = dkv if dh_img is None else dh_img + dkv

    n_proj = len(c.loc_proj_channels)
    for i in reversed(range(n_proj)):
        lin_cache, gelu_cache = caches["proj"][i]
        if gelu_cache is not None:
            dq = L.gelu_bwd(dq, gelu_cache)
        dq = L.linear_bwd(dq, lin_cache, grads, f"loc.proj{i}.w", f"loc.proj{i}.b")
    return dq.reshape(-1), dh_img


def localize(
    h_edit: EditEmbedding | np.ndarray, h_img: FeatureGrid | np.ndarray, bundle: ModelBundle
) -> BoundingBox:
    """Decode the EDIT embedding into a bounding box (always valid)."""
    he = h_edit.h_edit if isinstance(h_edit, EditEmbedding) else h_edit
    hi = h_img.h_img if isinstance(h_img, FeatureGrid) else h_img
    return loc_forward(he, hi, bundle).box


@dataclass(frozen=True)
class GenerationResult:
    """Structured decoding outcome; flags mark recoverable defects."""

    text: str
    scope: str | None
    suggestion: str | None
    box: BoundingBox | None
    has_edit_token: bool
    incomplete: bool = False
    parse_failed: bool = False
    box_missing: bool = False


def generate(
    image: np.ndarray,
    hint: str,
    bundle: ModelBundle,
    vocab: Vocabulary,
    mode: str = "greedy",
    temperature: float = 1.0,
    seed: int = 0,
    max_new_tokens: int = 32,
) -> GenerationResult:
    """Decode a suggestion for (image, hint); localize if EDIT was emitted."""
    if mode not in ("greedy", "sample"):
        raise ValueError(f"unknown mode {mode!r}")
    rng = np.random.default_rng(seed) if mode == "sample" else None

    prompt_ids = [BOS_ID] + vocab.encode(render_prompt(hint))
    slot = prompt_ids.index(IMAGE_ID)
    ids = list(prompt_ids)
    incomplete = True
    for _ in range(max_new_tokens):
        fp = _forward_ids(image, ids, slot, bundle)
        logits = fp.logits[-1]
        if mode == "greedy":
            next_id = int(np.argmax(logits))
        else:
            probs = L.softmax(logits / max(temperature, 1e-6))
            next_id = int(rng.choice(len(probs), p=probs))
        ids.append(next_id)
        if next_id in (EOS_ID, EDIT_ID):
            incomplete = False
            break

    generated = ids[len(prompt_ids) :]
    n_edit = generated.count(EDIT_ID)
    if n_edit > 1:
        logger.warning("decoder emitted %d EDIT tokens; localizing the first", n_edit)

    box = None
    if EDIT_ID in generated:
        edit_abs = len(prompt_ids) + generated.index(EDIT_ID)
        fp = _forward_ids(image, ids[: edit_abs + 1], slot, bundle)
        h_edit = fp.hidden[-1]
        box = loc_forward(h_edit, fp.h_img, bundle).box

    text = vocab.decode([t for t in generated if t != EOS_ID])
    scope = suggestion = None
    parse_failed = False
    has_edit = EDIT_ID in generated
    try:
        parsed = parse_reply(text)
        scope, suggestion = parsed.scope, parsed.suggestion
    except ReplyParseError:
        parse_failed = True
    box_missing = scope == "local" and box is None
    return GenerationResult(
        text=text,
        scope=scope,
        suggestion=suggestion,
        box=box,
        has_edit_token=has_edit,
        incomplete=incomplete,
        parse_failed=parse_failed,
        box_missing=box_missing,
    )


def _forward_ids(image: np.ndarray, ids: list[int], slot: int, bundle: ModelBundle) -> ForwardPass:
    """Forward over a raw id list (generation-time; no loss masks needed)."""
    rendered = RenderedExample(
        prompt_text="",
        target_text="",
        token_ids=list(ids),
        image_slot_position=slot,
        edit_token_position=None,
        text_loss_mask=[False] * len(ids),
        box_supervised=False,
    )
    return forward_teacher_forced(image, rendered, bundle)
