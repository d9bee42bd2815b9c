"""User gestures a reproduction step can describe."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import ValidationError


class ActionKind(str, Enum):
    CLICK = "click"
    LONG_CLICK = "long_click"
    TYPE = "type"
    SWIPE = "swipe"

    @property
    def label(self) -> str:
        return _LABELS[self]


_LABELS = {
    ActionKind.CLICK: "Click (Tap)",
    ActionKind.LONG_CLICK: "Long Click (Long Touch)",
    ActionKind.TYPE: "Type",
    ActionKind.SWIPE: "Swipe",
}

# Presentation order for action dropdowns.
ACTION_ORDER = (ActionKind.CLICK, ActionKind.LONG_CLICK, ActionKind.TYPE, ActionKind.SWIPE)


def parse_action_kind(value: str) -> ActionKind:
    try:
        return ActionKind(value)
    except ValueError:
        raise ValidationError(f"unknown action kind {value!r}") from None


@dataclass(frozen=True)
class Action:
    """A gesture; type actions additionally carry the text entered."""

    kind: ActionKind
    typed_text: str | None = None

    def __post_init__(self):
        if self.kind is ActionKind.TYPE and self.typed_text is None:
            raise ValidationError("type actions require typed_text")
        if self.kind is not ActionKind.TYPE and self.typed_text is not None:
            raise ValidationError(f"typed_text is not valid for {self.kind.value} actions")

    def to_dict(self) -> dict:
        data = {"kind": self.kind.value}
        if self.typed_text is not None:
            data["typed_text"] = self.typed_text
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "Action":
        if not isinstance(data, dict) or "kind" not in data:
            raise ValidationError("action must be an object with a 'kind' field")
        return cls(kind=parse_action_kind(data["kind"]), typed_text=data.get("typed_text"))


CLICK = Action(ActionKind.CLICK)
