"""Structured reply envelope: the JSON shape providers are asked to return.

A reply carries the order draft in wire form plus the ordered list of fields
the provider wants to ask about.  Free-text replies that skip the envelope
degrade to plain draft extraction plus question classification.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .extract import ExtractionPolicy, SchemaViolation, extract_json_block, parse_draft
from .orders import FieldName, OrderDraft, draft_to_wire


@dataclass(frozen=True)
class ReplyEnvelope:
    """order draft + intended follow-up fields (+ optional question texts)."""

    order: OrderDraft
    follow_up: tuple[FieldName, ...] = ()
    question_texts: tuple[str, ...] | None = None
    non_trade: bool = False

    def __post_init__(self) -> None:
        if len(set(self.follow_up)) != len(self.follow_up):
            raise ValueError("follow_up must not contain duplicates")
        if self.question_texts is not None and len(self.question_texts) != len(self.follow_up):
            raise ValueError("question_texts must parallel follow_up")

    def to_reply_text(self) -> str:
        body: dict = {
            "order": draft_to_wire(self.order),
            "follow_up": [f.value for f in self.follow_up],
            "non_trade": self.non_trade,
        }
        if self.question_texts is not None:
            body["question_texts"] = list(self.question_texts)
        return json.dumps(body, indent=2, ensure_ascii=False)


def is_envelope_reply(reply_text: str) -> bool:
    """Cheap probe: does the first JSON object look like an envelope?"""
    try:
        obj = json.loads(extract_json_block(reply_text))
    except Exception:
        return False
    return isinstance(obj, dict) and isinstance(obj.get("order"), dict)


def parse_reply_envelope(
    reply_text: str,
    policy: ExtractionPolicy = ExtractionPolicy.STRICT,
    warnings: list[str] | None = None,
) -> ReplyEnvelope:
    """Decode an envelope reply.  Raises NoJsonFound / SchemaViolation."""
    obj = json.loads(extract_json_block(reply_text))
    if not isinstance(obj.get("order"), dict):
        raise SchemaViolation('envelope reply must carry an "order" object')
    order = parse_draft(json.dumps(obj["order"]), policy, warnings=warnings)

    raw_followups = obj.get("follow_up", [])
    if not isinstance(raw_followups, list):
        raise SchemaViolation("follow_up must be a list of field names")
    follow_up: list[FieldName] = []
    for item in raw_followups:
        try:
            follow_up.append(FieldName(item))
        except ValueError:
            raise SchemaViolation(f"follow_up names an unknown field: {item!r}") from None
    if len(set(follow_up)) != len(follow_up):
        raise SchemaViolation("follow_up contains duplicates")

    texts = obj.get("question_texts")
    if texts is not None:
        if not isinstance(texts, list) or not all(isinstance(t, str) for t in texts):
            raise SchemaViolation("question_texts must be a list of strings")
        if len(texts) != len(follow_up):
            raise SchemaViolation("question_texts must parallel follow_up")
        texts = tuple(texts)

    return ReplyEnvelope(
        order=order,
        follow_up=tuple(follow_up),
        question_texts=texts,
        non_trade=bool(obj.get("non_trade", False)),
    )
