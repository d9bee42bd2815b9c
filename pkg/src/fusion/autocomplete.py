"""Interactive auto-completion of reproduction steps over the event-flow graph.

A session tracks the reporter's inferred position as a set of candidate
screens, starting from the entry screen of a cold app launch. Suggestions
follow a three-branch decision rule:

(a) empty history: candidates are exactly the entry screen;
(b) last step resolved against the model: candidates are that step's screen
    plus every recorded edge target of the committed (screen, action,
    instance);
(c) last step entered manually (model gap): candidates are all screens.

Click suggestions require a dynamically witnessed edge; long-click, type and
swipe suggestions come from statically declared actions because exploration
is click-only. Component lists end with the distinguished "Not in this
list..." marker that opens the manual-entry path.
"""

from __future__ import annotations

import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Union

from .actions import ACTION_ORDER, Action, ActionKind
from .errors import SessionClosedError, StaleSuggestionError, ValidationError
from .explorer import EventFlowGraph
from .geometry import RelativeLocation, parse_relative_location
from .primer import ComponentUniverse

ORIENTATIONS = ("portrait", "landscape")
METADATA_FIELDS = ("reporter_name", "device", "orientation", "title", "description")
NOT_IN_LIST_LABEL = "Not in this list..."


class _NotInList:
    """Terminal dropdown row that opens the manual-entry form."""

    def __repr__(self):
        return "NOT_IN_LIST"


NOT_IN_LIST = _NotInList()


@dataclass(frozen=True)
class AutoResolution:
    """Step resolved against the model: a confirmed (screen, instance) pair."""

    screen_key: str
    component_id: str
    object_index: int
    confirmed_screenshot: str

    def to_dict(self) -> dict:
        return {
            "kind": "auto",
            "screen_key": self.screen_key,
            "component_id": self.component_id,
            "object_index": self.object_index,
            "confirmed_screenshot": self.confirmed_screenshot,
        }


@dataclass(frozen=True)
class ManualResolution:
    """Step the model could not complete; reporter-supplied description."""

    component_type: str
    text: str
    relative_location: RelativeLocation

    def to_dict(self) -> dict:
        return {
            "kind": "manual",
            "component_type": self.component_type,
            "text": self.text,
            "relative_location": self.relative_location.value,
        }


Resolution = Union[AutoResolution, ManualResolution]


def resolution_from_dict(data: dict) -> Resolution:
    if not isinstance(data, dict):
        raise ValidationError("resolution must be an object")
    kind = data.get("kind")
    if kind == "auto":
        return AutoResolution(
            screen_key=data["screen_key"],
            component_id=data["component_id"],
            object_index=int(data["object_index"]),
            confirmed_screenshot=data["confirmed_screenshot"],
        )
    if kind == "manual":
        return ManualResolution(
            component_type=data["component_type"],
            text=data.get("text", ""),
            relative_location=parse_relative_location(data["relative_location"]),
        )
    raise ValidationError(f"resolution kind must be 'auto' or 'manual', got {kind!r}")


@dataclass(frozen=True)
class ReportStep:
    step_num: int
    action: Action
    resolution: Resolution
    user_note: str | None = None

    @property
    def is_auto(self) -> bool:
        return isinstance(self.resolution, AutoResolution)

    def to_dict(self) -> dict:
        data = {
            "step_num": self.step_num,
            "action": self.action.to_dict(),
            "resolution": self.resolution.to_dict(),
        }
        if self.user_note is not None:
            data["user_note"] = self.user_note
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "ReportStep":
        return cls(
            step_num=data["step_num"],
            action=Action.from_dict(data["action"]),
            resolution=resolution_from_dict(data["resolution"]),
            user_note=data.get("user_note"),
        )


@dataclass
class Session:
    """A reporter's in-progress report plus the inferred candidate GUI states."""

    session_id: str
    app_id: str
    metadata: dict
    history: list[ReportStep] = field(default_factory=list)
    candidate_screens: set[str] = field(default_factory=set)
    closed: bool = False
    created_at: str = ""

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "session_id": self.session_id,
            "app_id": self.app_id,
            "metadata": dict(self.metadata),
            "history": [s.to_dict() for s in self.history],
            "candidate_screens": sorted(self.candidate_screens),
            "closed": self.closed,
            "created_at": self.created_at,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Session":
        return cls(
            session_id=data["session_id"],
            app_id=data["app_id"],
            metadata=dict(data["metadata"]),
            history=[ReportStep.from_dict(s) for s in data["history"]],
            candidate_screens=set(data["candidate_screens"]),
            closed=bool(data.get("closed", False)),
            created_at=data.get("created_at", ""),
        )

    def blob_hashes(self) -> set[str]:
        return {s.resolution.confirmed_screenshot for s in self.history if s.is_auto}


@dataclass(frozen=True)
class Suggestion:
    """One component dropdown row."""

    screen_key: str
    component_id: str
    object_index: int
    component_type: str
    text: str
    relative_location: RelativeLocation
    component_image: str
    option_ordinal: int | None = None


@dataclass(frozen=True)
class ConfirmationShot:
    """A highlighted full-screen screenshot the reporter can pick to confirm."""

    screen_key: str
    screenshot: str


def validate_metadata(metadata: dict) -> dict:
    if not isinstance(metadata, dict):
        raise ValidationError("metadata must be an object")
    clean = {}
    for name in METADATA_FIELDS:
        value = metadata.get(name)
        if not isinstance(value, str) or not value.strip():
            raise ValidationError(f"metadata field {name!r} is required")
        clean[name] = value
    if clean["orientation"] not in ORIENTATIONS:
        raise ValidationError(
            f"orientation must be one of {', '.join(ORIENTATIONS)}"
        )
    return clean


class AutocompleteEngine:
    """Suggestion and session logic for one analyzed app.

    The engine only reads the universe and graph; persistence is the
    caller's concern. ``lookback_window`` controls how many trailing steps
    feed the candidate fold; the default of 1 is sufficient because the
    per-step rule already carries reachable screens forward.
    """

    def __init__(self, universe: ComponentUniverse, graph: EventFlowGraph,
                 lookback_window: int = 1):
        if lookback_window < 1:
            raise ValidationError("lookback_window must be >= 1")
        self.universe = universe
        self.graph = graph
        self.lookback_window = lookback_window
        self._click_witnessed: set[tuple[str, str, int]] = set()
        self._edge_targets: dict[tuple[str, ActionKind, str, int], set[str]] = {}
        self._screen_targets: dict[str, set[str]] = {}
        for edge in graph.edges:
            if edge.action_kind is ActionKind.CLICK:
                self._click_witnessed.add((edge.source, edge.component_id, edge.object_index))
            key = (edge.source, edge.action_kind, edge.component_id, edge.object_index)
            self._edge_targets.setdefault(key, set()).add(edge.target)
            if edge.target in graph.screens:
                self._screen_targets.setdefault(edge.source, set()).add(edge.target)

    # -- sessions --

    def open_session(self, metadata: dict) -> Session:
        clean = validate_metadata(metadata)
        return Session(
            session_id=str(uuid.uuid4()),
            app_id=self.universe.app_id,
            metadata=clean,
            history=[],
            candidate_screens={self.graph.entry},
            created_at=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        )

    # -- candidate fold --

    def _candidates_after(self, step: ReportStep) -> set[str]:
        if not step.is_auto:
            return set(self.graph.screens)
        resolution = step.resolution
        if step.action.kind is ActionKind.CLICK:
            key = (resolution.screen_key, ActionKind.CLICK,
                   resolution.component_id, resolution.object_index)
            targets = {t for t in self._edge_targets.get(key, set()) if t in self.graph.screens}
            return {resolution.screen_key} | targets
        # exploration never performed this gesture, so fall back to every
        # screen recorded as reachable from the resolved one
        reachable = self._screen_targets.get(resolution.screen_key, set())
        if reachable:
            return {resolution.screen_key} | reachable
        return set(self.graph.screens)

    def candidates_for_history(self, history: list[ReportStep]) -> set[str]:
        if not history:
            return {self.graph.entry}
        window = history[-self.lookback_window:]
        candidates: set[str] = set()
        for step in window:
            candidates |= self._candidates_after(step)
        return candidates

    def _ordered_candidates(self, session: Session) -> list[str]:
        return [key for key in self.graph.screens if key in session.candidate_screens]

    # -- suggestion queries --

    def _instance_action_kinds(self, screen_key, instance) -> set[ActionKind]:
        kinds = set()
        if (screen_key, instance.component_id, instance.object_index) in self._click_witnessed:
            kinds.add(ActionKind.CLICK)
        descriptor = self.universe.descriptor(instance.component_id)
        if descriptor:
            kinds.update(k for k in descriptor.declared_actions if k is not ActionKind.CLICK)
        return kinds

    def suggest_actions(self, session: Session) -> list[ActionKind]:
        self._check_open(session)
        available: set[ActionKind] = set()
        for key in self._ordered_candidates(session):
            for instance in self.graph.screens[key].instances:
                available |= self._instance_action_kinds(key, instance)
        return [k for k in ACTION_ORDER if k in available]

    def suggest_components(self, session: Session, kind: ActionKind):
        """Dropdown rows for ``kind``, suffixed with the NOT_IN_LIST marker."""
        self._check_open(session)
        rows: list = []
        for key in self._ordered_candidates(session):
            screen = self.graph.screens[key]
            counts: dict[str, int] = {}
            for instance in screen.instances:
                counts[instance.component_id] = counts.get(instance.component_id, 0) + 1
            for instance in screen.instances:
                if kind not in self._instance_action_kinds(key, instance):
                    continue
                ordinal = instance.object_index + 1 if counts[instance.component_id] >= 2 else None
                rows.append(
                    Suggestion(
                        screen_key=key,
                        component_id=instance.component_id,
                        object_index=instance.object_index,
                        component_type=instance.component_type,
                        text=instance.text,
                        relative_location=instance.relative_location,
                        component_image=instance.component_screenshot,
                        option_ordinal=ordinal,
                    )
                )
        rows.append(NOT_IN_LIST)
        return rows

    def confirmation_screenshots(self, session: Session, suggestion) -> list[ConfirmationShot]:
        """Highlighted screenshots of the suggested instance, one per candidate screen."""
        self._check_open(session)
        if isinstance(suggestion, Suggestion):
            component_id, object_index = suggestion.component_id, suggestion.object_index
        else:
            component_id, object_index = suggestion
        shots = []
        for key in self._ordered_candidates(session):
            instance = self.graph.screens[key].instance(component_id, object_index)
            if instance is not None:
                shots.append(ConfirmationShot(key, instance.highlighted_screenshot))
        if not shots:
            raise StaleSuggestionError(
                f"({component_id!r}, {object_index}) is not on any candidate screen"
            )
        return shots

    # -- step entry --

    def _check_open(self, session: Session) -> None:
        if session.closed:
            raise SessionClosedError(f"session {session.session_id} is finalized")

    def _validate_auto(self, session: Session, resolution: AutoResolution) -> None:
        if resolution.screen_key not in session.candidate_screens:
            raise ValidationError(
                f"screen {resolution.screen_key!r} is not a candidate at this step"
            )
        instance = self.graph.instance(
            resolution.screen_key, resolution.component_id, resolution.object_index
        )
        if instance is None:
            raise ValidationError(
                f"({resolution.component_id!r}, {resolution.object_index}) is not on "
                f"screen {resolution.screen_key!r}"
            )
        if resolution.confirmed_screenshot != instance.highlighted_screenshot:
            raise ValidationError("confirmed screenshot does not match the selected instance")

    def _validate_manual(self, resolution: ManualResolution) -> None:
        if resolution.component_type not in self.universe.type_set:
            raise ValidationError(
                f"component type {resolution.component_type!r} does not exist in this app"
            )

    def commit_step(self, session: Session, action: Action, resolution: Resolution,
                    user_note: str | None = None) -> Session:
        self._check_open(session)
        if isinstance(resolution, AutoResolution):
            self._validate_auto(session, resolution)
        elif isinstance(resolution, ManualResolution):
            self._validate_manual(resolution)
        else:
            raise ValidationError("resolution must be Auto or Manual")
        step = ReportStep(
            step_num=len(session.history) + 1,
            action=action,
            resolution=resolution,
            user_note=user_note,
        )
        session.history.append(step)
        session.candidate_screens = self.candidates_for_history(session.history)
        return session

    def undo_last_step(self, session: Session) -> Session:
        self._check_open(session)
        if not session.history:
            raise ValidationError("session has no steps to undo")
        session.history.pop()
        session.candidate_screens = self.candidates_for_history(session.history)
        return session
