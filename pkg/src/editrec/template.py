"""Rendering editing samples into the training template, and parsing replies.

The full conversation template lives in ``resources/chat_template_v1.txt``
so the exact prompt wording is auditable and versioned. Rendering splits it
at the assistant marker: everything through ``ASSISTANT: `` is prompt, the
rest is the supervised target, which always terminates in the EDIT token.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .samples import EditingSample, validate_sample
from .tokens import EDIT_TOKEN
from .vocab import BOS_ID, EDIT_ID, EOS_ID, IMAGE_ID, Vocabulary

TEMPLATE_VERSION = "chat_template_v1"

_ASSISTANT_MARKER = "ASSISTANT: "
_TARGET_LEAD = "For "
_TARGET_MID = " editing suggestion: "


def load_template(version: str = TEMPLATE_VERSION) -> str:
    path = Path(__file__).parent / "resources" / f"{version}.txt"
    return path.read_text(encoding="utf-8").rstrip("\n")


_TEMPLATE = load_template()
_PROMPT_TEMPLATE = _TEMPLATE[: _TEMPLATE.index(_ASSISTANT_MARKER) + len(_ASSISTANT_MARKER)]


class ReplyParseError(Exception):
    """A model reply did not match the template; names the failing segment."""

    def __init__(self, segment: str, detail: str):
        super().__init__(f"parse error at {segment} segment: {detail}")
        self.segment = segment
        self.detail = detail


@dataclass(frozen=True)
class ReplyParse:
    scope: str
    suggestion: str
    has_edit_token: bool


@dataclass(frozen=True)
class RenderedExample:
    """A tokenized training example with loss masks and token positions."""

    prompt_text: str
    target_text: str
    token_ids: list[int]
    image_slot_position: int
    edit_token_position: int | None
    text_loss_mask: list[bool]
    box_supervised: bool


def render_prompt(hint: str) -> str:
    """The human turn for a hint, ending with the assistant marker."""
    return _PROMPT_TEMPLATE.format(editing_hint=hint)


def render(s: EditingSample, vocab: Vocabulary) -> RenderedExample:
    """Render a valid sample into the template and tokenize it.

    The target's final period belongs to the template, so suggestions may
    not contain a period of their own; that keeps parse_reply unambiguous.
    """
    violations = validate_sample(s)
    if violations:
        raise ValueError("cannot render invalid sample: " + "; ".join(violations))
    if "." in s.suggestion:
        raise ValueError(f"suggestion may not contain a period: {s.suggestion!r}")
    if "." in s.hint:
        raise ValueError(f"hint may not contain a period: {s.hint!r}")

    prompt_text = render_prompt(s.hint)
    target_text = f"{_TARGET_LEAD}{s.scope}{_TARGET_MID}{s.suggestion}.{EDIT_TOKEN}"

    prompt_ids = vocab.encode(prompt_text)
    target_ids = vocab.encode(target_text)
    token_ids = [BOS_ID] + prompt_ids + target_ids + [EOS_ID]

    if token_ids.count(IMAGE_ID) != 1:
        raise ValueError("rendered sequence must contain exactly one IMAGE token")
    if token_ids.count(EDIT_ID) != 1:
        raise ValueError("rendered sequence must contain exactly one EDIT token")

    n_prompt = 1 + len(prompt_ids)
    mask = [False] * n_prompt + [True] * (len(target_ids) + 1)
    return RenderedExample(
        prompt_text=prompt_text,
        target_text=target_text,
        token_ids=token_ids,
        image_slot_position=token_ids.index(IMAGE_ID),
        edit_token_position=token_ids.index(EDIT_ID),
        text_loss_mask=mask,
        box_supervised=s.scope == "local",
    )


def parse_reply(text: str) -> ReplyParse:
    """Structure an assistant reply back into (scope, suggestion, edit flag).

    Raises :class:`ReplyParseError` naming the first mismatching segment:
    ``scope`` for the "For global/local" head, ``lead-in`` for the
    " editing suggestion: " connective, ``terminator`` for the final period.
    """
    if not text.startswith(_TARGET_LEAD):
        raise ReplyParseError("scope", f"reply must start with {_TARGET_LEAD!r}")
    rest = text[len(_TARGET_LEAD) :]
    scope = rest.split(" ", 1)[0]
    if scope not in ("global", "local"):
        raise ReplyParseError("scope", f"expected 'global' or 'local', got {scope!r}")
    rest = rest[len(scope) :]
    if not rest.startswith(_TARGET_MID):
        raise ReplyParseError("lead-in", f"expected {_TARGET_MID!r} after scope")
    body = rest[len(_TARGET_MID) :]

    has_edit = body.endswith(EDIT_TOKEN)
    if has_edit:
        body = body[: -len(EDIT_TOKEN)]
    if not body.endswith("."):
        raise ReplyParseError("terminator", "suggestion must end with a period")
    suggestion = body[:-1]
    if not suggestion:
        raise ReplyParseError("terminator", "empty suggestion")
    return ReplyParse(scope=scope, suggestion=suggestion, has_edit_token=has_edit)
