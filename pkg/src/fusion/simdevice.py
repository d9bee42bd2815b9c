"""Device-driver abstraction plus a deterministic simulated device.

The simulated device executes a declarative app model: screens with
positioned components and a transition table keyed by
(screen, action, component, object index). It stands in for driving real
hardware so exploration and replay stay reproducible at desk scale; a real
device driver would implement the same operations.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, runtime_checkable

from . import render
from .actions import Action, ActionKind
from .errors import (
    ActionNotSupportedError,
    ComponentNotPresentError,
    DriverStateError,
    ModelFormatError,
)
from .geometry import DEFAULT_VIEWPORT, Rect, Viewport

# Distinguished transition targets for leaving the app.
EXTERNAL = "EXTERNAL"
HOME = "HOME"


@dataclass(frozen=True)
class ScreenComponent:
    component_id: str
    object_index: int
    text: str
    bounds: Rect
    supported_actions: frozenset[ActionKind]
    editable: bool


@dataclass
class ScreenSpec:
    screen_id: str
    activity: str
    window: str
    components: list[ScreenComponent]

    def component(self, component_id: str, object_index: int) -> ScreenComponent | None:
        for comp in self.components:
            if comp.component_id == component_id and comp.object_index == object_index:
                return comp
        return None


@dataclass(frozen=True)
class TransitionSpec:
    target: str  # screen id, EXTERNAL, or HOME
    new_activity: bool = False


TransitionKey = tuple[str, ActionKind, str, int]


@dataclass
class AppModel:
    app_id: str
    viewport: Viewport
    entry_screen: str
    screens: dict[str, ScreenSpec]
    transitions: dict[TransitionKey, TransitionSpec]
    back_edges: dict[str, str] = field(default_factory=dict)


def load_app_model(path: str | Path) -> AppModel:
    """Load and validate a model.json document."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"cannot read app model: {exc}") from exc
    return app_model_from_dict(data)


def app_model_from_dict(data: dict) -> AppModel:
    if not isinstance(data, dict):
        raise ModelFormatError("app model must be a JSON object")
    for key in ("app_id", "entry_screen", "screens"):
        if key not in data:
            raise ModelFormatError("required field is missing", field_path=key)

    viewport_data = data.get("viewport", {})
    viewport = Viewport(
        width=int(viewport_data.get("width", DEFAULT_VIEWPORT.width)),
        height=int(viewport_data.get("height", DEFAULT_VIEWPORT.height)),
    )
    if viewport.width <= 0 or viewport.height <= 0:
        raise ModelFormatError("viewport must be positive", field_path="viewport")

    screens: dict[str, ScreenSpec] = {}
    if not isinstance(data["screens"], dict) or not data["screens"]:
        raise ModelFormatError("screens must be a non-empty object", field_path="screens")
    for screen_id, raw in data["screens"].items():
        screens[screen_id] = _parse_screen(screen_id, raw, viewport)

    entry = data["entry_screen"]
    if entry not in screens:
        raise ModelFormatError(f"entry screen {entry!r} is not defined", field_path="entry_screen")

    transitions: dict[TransitionKey, TransitionSpec] = {}
    for i, raw in enumerate(data.get("transitions", [])):
        key, spec = _parse_transition(i, raw, screens)
        if key in transitions:
            raise ModelFormatError("duplicate transition", field_path=f"transitions[{i}]")
        transitions[key] = spec

    back_edges: dict[str, str] = {}
    for screen_id, target in data.get("back_edges", {}).items():
        if screen_id not in screens:
            raise ModelFormatError(f"unknown screen {screen_id!r}", field_path="back_edges")
        if target not in screens:
            raise ModelFormatError(f"unknown target {target!r}", field_path=f"back_edges.{screen_id}")
        back_edges[screen_id] = target

    return AppModel(
        app_id=str(data["app_id"]),
        viewport=viewport,
        entry_screen=entry,
        screens=screens,
        transitions=transitions,
        back_edges=back_edges,
    )


def _parse_screen(screen_id: str, raw: dict, viewport: Viewport) -> ScreenSpec:
    path = f"screens.{screen_id}"
    if not isinstance(raw, dict):
        raise ModelFormatError("screen must be an object", field_path=path)
    for key in ("activity", "components"):
        if key not in raw:
            raise ModelFormatError(f"missing {key!r}", field_path=path)
    components: list[ScreenComponent] = []
    seen: set[tuple[str, int]] = set()
    for i, comp in enumerate(raw["components"]):
        cpath = f"{path}.components[{i}]"
        if not isinstance(comp, dict) or "component_id" not in comp:
            raise ModelFormatError("component must be an object with component_id", field_path=cpath)
        try:
            bounds = Rect.from_list(comp.get("bounds"))
        except Exception as exc:
            raise ModelFormatError(str(exc), field_path=f"{cpath}.bounds") from exc
        if bounds.area == 0 or not viewport.contains(bounds):
            raise ModelFormatError(
                f"bounds {bounds.to_list()} must be non-empty and inside the viewport",
                field_path=f"{cpath}.bounds",
            )
        try:
            supported = frozenset(ActionKind(a) for a in comp.get("supported_actions", []))
        except ValueError as exc:
            raise ModelFormatError(str(exc), field_path=f"{cpath}.supported_actions") from exc
        editable = comp.get("editable")
        if editable is None:
            editable = ActionKind.TYPE in supported
        elif bool(editable) != (ActionKind.TYPE in supported):
            raise ModelFormatError(
                "editable flag must match type support", field_path=f"{cpath}.editable"
            )
        object_index = int(comp.get("object_index", 0))
        if object_index < 0:
            raise ModelFormatError("object_index must be >= 0", field_path=f"{cpath}.object_index")
        key = (str(comp["component_id"]), object_index)
        if key in seen:
            raise ModelFormatError(f"duplicate component {key}", field_path=cpath)
        seen.add(key)
        components.append(
            ScreenComponent(
                component_id=key[0],
                object_index=object_index,
                text=str(comp.get("text", "")),
                bounds=bounds,
                supported_actions=supported,
                editable=bool(editable),
            )
        )
    _check_consecutive_indexes(screen_id, components)
    return ScreenSpec(
        screen_id=screen_id,
        activity=str(raw["activity"]),
        window=str(raw.get("window", "main")),
        components=components,
    )


def _check_consecutive_indexes(screen_id: str, components: list[ScreenComponent]) -> None:
    by_id: dict[str, list[int]] = {}
    for comp in components:
        by_id.setdefault(comp.component_id, []).append(comp.object_index)
    for component_id, indexes in by_id.items():
        if sorted(indexes) != list(range(len(indexes))):
            raise ModelFormatError(
                f"object_index values for {component_id!r} must be consecutive from 0",
                field_path=f"screens.{screen_id}",
            )


def _parse_transition(i: int, raw: dict, screens: dict[str, ScreenSpec]):
    path = f"transitions[{i}]"
    if not isinstance(raw, dict):
        raise ModelFormatError("transition must be an object", field_path=path)
    for key in ("screen", "action", "component_id", "target"):
        if key not in raw:
            raise ModelFormatError(f"missing {key!r}", field_path=path)
    screen_id = raw["screen"]
    if screen_id not in screens:
        raise ModelFormatError(f"unknown source screen {screen_id!r}", field_path=path)
    try:
        kind = ActionKind(raw["action"])
    except ValueError as exc:
        raise ModelFormatError(str(exc), field_path=f"{path}.action") from exc
    component_id = str(raw["component_id"])
    object_index = int(raw.get("object_index", 0))
    component = screens[screen_id].component(component_id, object_index)
    if component is None:
        raise ModelFormatError(
            f"component ({component_id!r}, {object_index}) is not on screen {screen_id!r}",
            field_path=path,
        )
    target = raw["target"]
    if target not in (EXTERNAL, HOME) and target not in screens:
        raise ModelFormatError(f"unknown target screen {target!r}", field_path=f"{path}.target")
    new_activity = bool(raw.get("new_activity", False))
    if new_activity and target in screens and screens[target].activity == screens[screen_id].activity:
        raise ModelFormatError(
            "new_activity is set but source and target share an activity",
            field_path=f"{path}.new_activity",
        )
    return (screen_id, kind, component_id, object_index), TransitionSpec(target, new_activity)


# --- driver contract ---------------------------------------------------------

STATE_APP = "app"
STATE_EXTERNAL = "external"
STATE_HOME = "home"


@dataclass(frozen=True)
class Observation:
    """What the device currently shows: an app screen, or a marker state."""

    state: str  # STATE_APP, STATE_EXTERNAL, or STATE_HOME
    screen: ScreenSpec | None = None

    @property
    def foreground(self) -> bool:
        return self.state == STATE_APP


@dataclass(frozen=True)
class Outcome:
    """Result of performing an action."""

    kind: str  # "stayed", "moved", "external", or "home"
    screen_id: str | None = None


@runtime_checkable
class DeviceDriver(Protocol):
    """Operations any device driver must expose."""

    app_id: str
    viewport: Viewport

    def observe(self) -> Observation: ...

    def perform(self, action: Action, component_id: str, object_index: int) -> Outcome: ...

    def press_back(self) -> Observation: ...

    def relaunch_app(self) -> ScreenSpec: ...

    def screenshot(self, kind: str = "full", component_id: str | None = None,
                   object_index: int = 0) -> bytes: ...


class SimulatedDevice:
    """Deterministic DeviceDriver over an AppModel.

    One instance mirrors one physical device: single-threaded by contract.
    Screenshot renders are cached per (screen, kind, component) so identical
    state always returns byte-identical blobs.
    """

    def __init__(self, model: AppModel):
        self.model = model
        self.app_id = model.app_id
        self.viewport = model.viewport
        self._location: tuple | None = None  # (STATE_APP, screen_id) | (STATE_EXTERNAL, from) | (STATE_HOME,)
        self._base_images: dict[str, object] = {}
        self._shot_cache: dict[tuple, bytes] = {}

    # -- state helpers --

    def _current_screen(self) -> ScreenSpec:
        if self._location is None:
            raise DriverStateError("driver not launched; call relaunch_app first")
        if self._location[0] != STATE_APP:
            raise DriverStateError(f"app is not in the foreground (state={self._location[0]})")
        return self.model.screens[self._location[1]]

    # -- DeviceDriver operations --

    def observe(self) -> Observation:
        if self._location is None:
            raise DriverStateError("driver not launched; call relaunch_app first")
        if self._location[0] == STATE_APP:
            return Observation(STATE_APP, self.model.screens[self._location[1]])
        return Observation(self._location[0])

    def perform(self, action: Action, component_id: str, object_index: int = 0) -> Outcome:
        screen = self._current_screen()
        component = screen.component(component_id, object_index)
        if component is None:
            raise ComponentNotPresentError(
                f"({component_id!r}, {object_index}) is not on screen {screen.screen_id!r}"
            )
        if action.kind not in component.supported_actions:
            raise ActionNotSupportedError(
                f"{component_id!r} does not support {action.kind.value}"
            )
        key = (screen.screen_id, action.kind, component_id, object_index)
        transition = self.model.transitions.get(key)
        if transition is None:
            return Outcome("stayed", screen.screen_id)
        if transition.target == EXTERNAL:
            self._location = (STATE_EXTERNAL, screen.screen_id)
            return Outcome("external")
        if transition.target == HOME:
            self._location = (STATE_HOME,)
            return Outcome("home")
        self._location = (STATE_APP, transition.target)
        if transition.target == screen.screen_id:
            return Outcome("stayed", screen.screen_id)
        return Outcome("moved", transition.target)

    def press_back(self) -> Observation:
        if self._location is None:
            raise DriverStateError("driver not launched; call relaunch_app first")
        state = self._location[0]
        if state == STATE_HOME:
            raise DriverStateError("cannot press back from the home screen")
        if state == STATE_EXTERNAL:
            self._location = (STATE_APP, self._location[1])
            return self.observe()
        current = self._location[1]
        target = self.model.back_edges.get(current)
        if target is not None:
            self._location = (STATE_APP, target)
        return self.observe()

    def relaunch_app(self) -> ScreenSpec:
        self._location = (STATE_APP, self.model.entry_screen)
        return self.model.screens[self.model.entry_screen]

    def screenshot(self, kind: str = "full", component_id: str | None = None,
                   object_index: int = 0) -> bytes:
        screen = self._current_screen()
        cache_key = (screen.screen_id, kind, component_id, object_index)
        cached = self._shot_cache.get(cache_key)
        if cached is not None:
            return cached
        base = self._base_image(screen)
        if kind == "full":
            blob = render.encode_png(base)
        elif kind in ("component", "highlighted"):
            component = screen.component(component_id or "", object_index)
            if component is None:
                raise ComponentNotPresentError(
                    f"({component_id!r}, {object_index}) is not on screen {screen.screen_id!r}"
                )
            if kind == "component":
                blob = render.encode_png(render.crop(base, component.bounds))
            else:
                blob = render.encode_png(render.highlight(base, component.bounds))
        else:
            raise ValueError(f"unknown screenshot kind {kind!r}")
        self._shot_cache[cache_key] = blob
        return blob

    def _base_image(self, screen: ScreenSpec):
        image = self._base_images.get(screen.screen_id)
        if image is None:
            parts = [(c.component_id, c.text, c.bounds) for c in screen.components]
            image = render.render_screen(parts, self.viewport, title=f"{screen.activity} / {screen.window}")
            self._base_images[screen.screen_id] = image
        return image
