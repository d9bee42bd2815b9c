"""Systematic app exploration: rip screens depth-first and build the event-flow graph.

The explorer drives a DeviceDriver, issuing only click actions. Every newly
fingerprinted screen is captured in full (all component instances plus their
crop and highlighted screenshots); its clickable components are then exercised
in on-screen order, descending into new screens as they appear. Leaving the
app through an external view triggers a back press; landing on the home
screen triggers a relaunch. To resume a screen that still has unexplored
components after the walk moved elsewhere, the explorer relaunches and
replays the recorded discovery path, which is deterministic from a cold
start. Replayed navigation clicks are recorded as ordinary trace steps, so
the trace splits into launch segments that are each contiguous from the
entry screen.
"""

from __future__ import annotations

import hashlib
import json
from collections import deque
from dataclasses import dataclass, field

from . import render
from .actions import Action, ActionKind
from .errors import ExplorationError, NotFoundError, ReplayDivergenceError, ValidationError
from .geometry import Rect, RelativeLocation, region_of
from .primer import ComponentDescriptor, ComponentUniverse
from .simdevice import EXTERNAL, HOME, DeviceDriver, ScreenSpec

DYNAMIC_COMPONENT_TYPE = "View"


def fingerprint_screen(activity: str, window: str, triples) -> str:
    """Stable identity of a GUI state.

    Two observations merge exactly when activity, window, and the multiset of
    (component_id, object_index, component_type) agree; text is excluded so
    dynamic labels do not explode the state space.
    """
    payload = {
        "activity": activity,
        "window": window,
        "components": sorted([cid, int(idx), ctype] for cid, idx, ctype in triples),
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]


def spec_fingerprint(spec: ScreenSpec, type_of) -> str:
    triples = [(c.component_id, c.object_index, type_of(c.component_id)) for c in spec.components]
    return fingerprint_screen(spec.activity, spec.window, triples)


@dataclass(frozen=True)
class ComponentInstance:
    """One observed occurrence of a component on a fingerprinted screen."""

    component_id: str
    object_index: int
    component_type: str
    text: str
    bounds: Rect
    relative_location: RelativeLocation
    component_screenshot: str
    highlighted_screenshot: str
    screen_key: str

    def to_dict(self) -> dict:
        return {
            "component_id": self.component_id,
            "object_index": self.object_index,
            "component_type": self.component_type,
            "text": self.text,
            "bounds": self.bounds.to_list(),
            "relative_location": self.relative_location.value,
            "component_screenshot": self.component_screenshot,
            "highlighted_screenshot": self.highlighted_screenshot,
            "screen_key": self.screen_key,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ComponentInstance":
        return cls(
            component_id=data["component_id"],
            object_index=data["object_index"],
            component_type=data["component_type"],
            text=data["text"],
            bounds=Rect.from_list(data["bounds"]),
            relative_location=RelativeLocation(data["relative_location"]),
            component_screenshot=data["component_screenshot"],
            highlighted_screenshot=data["highlighted_screenshot"],
            screen_key=data["screen_key"],
        )


@dataclass
class Screen:
    screen_key: str
    activity: str
    window: str
    instances: list[ComponentInstance]

    def instance(self, component_id: str, object_index: int) -> ComponentInstance | None:
        for inst in self.instances:
            if inst.component_id == component_id and inst.object_index == object_index:
                return inst
        return None

    def to_dict(self) -> dict:
        return {
            "screen_key": self.screen_key,
            "activity": self.activity,
            "window": self.window,
            "instances": [i.to_dict() for i in self.instances],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Screen":
        return cls(
            screen_key=data["screen_key"],
            activity=data["activity"],
            window=data["window"],
            instances=[ComponentInstance.from_dict(i) for i in data["instances"]],
        )


@dataclass(frozen=True)
class TraceStep:
    index: int
    launch_ordinal: int
    pre_screen: str
    action: Action
    component_id: str
    object_index: int
    outcome: str  # "stayed" | "moved" | "external" | "home"
    target: str  # screen_key, EXTERNAL, or HOME
    new_activity: bool
    pre_screenshot: str
    post_screenshot: str
    highlighted_screenshot: str

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "launch_ordinal": self.launch_ordinal,
            "pre_screen": self.pre_screen,
            "action": self.action.to_dict(),
            "component_id": self.component_id,
            "object_index": self.object_index,
            "outcome": self.outcome,
            "target": self.target,
            "new_activity": self.new_activity,
            "pre_screenshot": self.pre_screenshot,
            "post_screenshot": self.post_screenshot,
            "highlighted_screenshot": self.highlighted_screenshot,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TraceStep":
        return cls(
            index=data["index"],
            launch_ordinal=data["launch_ordinal"],
            pre_screen=data["pre_screen"],
            action=Action.from_dict(data["action"]),
            component_id=data["component_id"],
            object_index=data["object_index"],
            outcome=data["outcome"],
            target=data["target"],
            new_activity=data["new_activity"],
            pre_screenshot=data["pre_screenshot"],
            post_screenshot=data["post_screenshot"],
            highlighted_screenshot=data["highlighted_screenshot"],
        )


@dataclass(frozen=True)
class Edge:
    source: str
    action_kind: ActionKind
    component_id: str
    object_index: int
    target: str  # screen_key, EXTERNAL, or HOME
    new_activity: bool

    def to_dict(self) -> dict:
        return {
            "source": self.source,
            "action": self.action_kind.value,
            "component_id": self.component_id,
            "object_index": self.object_index,
            "target": self.target,
            "new_activity": self.new_activity,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Edge":
        return cls(
            source=data["source"],
            action_kind=ActionKind(data["action"]),
            component_id=data["component_id"],
            object_index=data["object_index"],
            target=data["target"],
            new_activity=data["new_activity"],
        )


@dataclass(frozen=True)
class PathStep:
    screen_key: str
    component_id: str
    object_index: int

    def to_dict(self) -> dict:
        return {
            "screen_key": self.screen_key,
            "component_id": self.component_id,
            "object_index": self.object_index,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PathStep":
        return cls(data["screen_key"], data["component_id"], data["object_index"])


@dataclass
class EventFlowGraph:
    """Fingerprinted GUI states plus the action-labeled transitions between them."""

    app_id: str
    entry: str
    screens: dict[str, Screen]
    edges: list[Edge]
    trace: list[TraceStep]
    discovery_paths: dict[str, list[PathStep]]
    truncated: bool = False

    def screen(self, screen_key: str) -> Screen:
        try:
            return self.screens[screen_key]
        except KeyError:
            raise NotFoundError(f"unknown screen {screen_key!r}") from None

    def instance(self, screen_key: str, component_id: str, object_index: int) -> ComponentInstance | None:
        return self.screen(screen_key).instance(component_id, object_index)

    def edges_from(self, screen_key: str, kind: ActionKind | None = None,
                   component_id: str | None = None, object_index: int | None = None) -> list[Edge]:
        found = []
        for edge in self.edges:
            if edge.source != screen_key:
                continue
            if kind is not None and edge.action_kind is not kind:
                continue
            if component_id is not None and edge.component_id != component_id:
                continue
            if object_index is not None and edge.object_index != object_index:
                continue
            found.append(edge)
        return found

    def blob_hashes(self) -> set[str]:
        hashes: set[str] = set()
        for screen in self.screens.values():
            for inst in screen.instances:
                hashes.add(inst.component_screenshot)
                hashes.add(inst.highlighted_screenshot)
        for step in self.trace:
            hashes.update((step.pre_screenshot, step.post_screenshot, step.highlighted_screenshot))
        return hashes

    def to_docs(self) -> tuple[dict, dict]:
        """Serialize as the (graph, trace) document pair."""
        graph_doc = {
            "schema_version": 1,
            "app_id": self.app_id,
            "entry": self.entry,
            "truncated": self.truncated,
            "screens": [s.to_dict() for s in self.screens.values()],
            "edges": [e.to_dict() for e in self.edges],
            "discovery_paths": {
                key: [p.to_dict() for p in path] for key, path in self.discovery_paths.items()
            },
        }
        trace_doc = {
            "schema_version": 1,
            "app_id": self.app_id,
            "steps": [t.to_dict() for t in self.trace],
        }
        return graph_doc, trace_doc

    @classmethod
    def from_docs(cls, graph_doc: dict, trace_doc: dict | None) -> "EventFlowGraph":
        screens = {s["screen_key"]: Screen.from_dict(s) for s in graph_doc["screens"]}
        steps = [TraceStep.from_dict(t) for t in (trace_doc or {}).get("steps", [])]
        return cls(
            app_id=graph_doc["app_id"],
            entry=graph_doc["entry"],
            screens=screens,
            edges=[Edge.from_dict(e) for e in graph_doc["edges"]],
            trace=steps,
            discovery_paths={
                key: [PathStep.from_dict(p) for p in path]
                for key, path in graph_doc["discovery_paths"].items()
            },
            truncated=bool(graph_doc.get("truncated", False)),
        )


@dataclass(frozen=True)
class ExploreConfig:
    max_steps: int = 10000
    max_relaunches: int = 100

    def __post_init__(self):
        if self.max_steps <= 0:
            raise ValidationError("max_steps must be > 0")
        if self.max_relaunches <= 0:
            raise ValidationError("max_relaunches must be > 0")


def explore(driver: DeviceDriver, universe: ComponentUniverse, blobs,
            config: ExploreConfig | None = None) -> EventFlowGraph:
    """Depth-first click exploration of the app behind ``driver``.

    ``blobs`` is any content-addressed sink exposing ``put_blob(bytes)``;
    screenshots land there and the graph references them by hash.
    """
    if universe.app_id != driver.app_id:
        raise ValidationError(
            f"universe is for {universe.app_id!r} but driver runs {driver.app_id!r}"
        )
    walk = _Exploration(driver, universe, blobs, config or ExploreConfig())
    try:
        return walk.run()
    except ExplorationError:
        raise
    except Exception as exc:  # driver misbehavior; keep what we have
        raise ExplorationError(f"exploration failed: {exc}",
                               partial_graph=walk.build_graph()) from exc


class _Exploration:
    def __init__(self, driver, universe, blobs, config):
        self.driver = driver
        self.universe = universe
        self.blobs = blobs
        self.config = config
        self.screens: dict[str, Screen] = {}
        self.screen_order: list[str] = []
        self.pending: dict[str, deque] = {}
        self.discovery: dict[str, list[PathStep]] = {}
        self.edge_index: dict[tuple, Edge] = {}
        self.edges: list[Edge] = []
        self.trace: list[TraceStep] = []
        self.full_shots: dict[str, str] = {}
        self.marker_shots: dict[str, str] = {}
        self.entry_key: str | None = None
        self.relaunches = 0
        self.launch_ordinal = -1
        self.truncated = False

    # -- helpers --

    def _type_of(self, component_id: str) -> str:
        descriptor = self.universe.descriptor(component_id)
        return descriptor.component_type if descriptor else DYNAMIC_COMPONENT_TYPE

    def _put(self, content: bytes) -> str:
        return self.blobs.put_blob(content).hash

    def _marker(self, label: str) -> str:
        if label not in self.marker_shots:
            image = render.render_marker(label, self.driver.viewport)
            self.marker_shots[label] = self._put(render.encode_png(image))
        return self.marker_shots[label]

    def _register(self, spec: ScreenSpec) -> str:
        """Fingerprint an observed screen, capturing it fully if new."""
        key = spec_fingerprint(spec, self._type_of)
        if key in self.screens:
            return key
        full_hash = self._put(self.driver.screenshot("full"))
        self.full_shots[key] = full_hash
        instances = []
        for comp in spec.components:
            crop_hash = self._put(self.driver.screenshot("component", comp.component_id, comp.object_index))
            high_hash = self._put(self.driver.screenshot("highlighted", comp.component_id, comp.object_index))
            instances.append(
                ComponentInstance(
                    component_id=comp.component_id,
                    object_index=comp.object_index,
                    component_type=self._type_of(comp.component_id),
                    text=comp.text,
                    bounds=comp.bounds,
                    relative_location=region_of(comp.bounds, self.driver.viewport),
                    component_screenshot=crop_hash,
                    highlighted_screenshot=high_hash,
                    screen_key=key,
                )
            )
        self.screens[key] = Screen(key, spec.activity, spec.window, instances)
        self.screen_order.append(key)
        self.pending[key] = deque(
            (c.component_id, c.object_index)
            for c in spec.components
            if ActionKind.CLICK in c.supported_actions
        )
        return key

    def _relaunch_to_entry(self) -> str | None:
        if self.relaunches >= self.config.max_relaunches:
            return None
        self.relaunches += 1
        self.launch_ordinal += 1
        spec = self.driver.relaunch_app()
        key = self._register(spec)
        self.discovery.setdefault(key, [])
        return key

    def _next_pending_screen(self) -> str | None:
        for key in reversed(self.screen_order):
            if self.pending.get(key):
                return key
        return None

    def _navigate_to(self, target: str) -> str | None:
        key = self._relaunch_to_entry()
        if key is None:
            return None
        for step in self.discovery[target]:
            if len(self.trace) >= self.config.max_steps:
                return None
            if key != step.screen_key:
                raise ExplorationError(
                    f"discovery path to {target} diverged at {key}",
                    partial_graph=self.build_graph(),
                )
            key = self._execute_click(key, step.component_id, step.object_index)
            if key is None:
                return None
        if key != target:
            raise ExplorationError(
                f"discovery path replay ended on {key}, expected {target}",
                partial_graph=self.build_graph(),
            )
        return key

    def _execute_click(self, current: str, component_id: str, object_index: int) -> str | None:
        """Click one instance, record the trace step and edge, return the new screen."""
        pre_hash = self.full_shots[current]
        instance = self.screens[current].instance(component_id, object_index)
        ordinal = self.launch_ordinal
        outcome = self.driver.perform(Action(ActionKind.CLICK), component_id, object_index)

        if outcome.kind == "external":
            post_hash = self._marker(EXTERNAL)
            target, step_outcome, new_activity = EXTERNAL, "external", False
            back = self.driver.press_back()
            if not back.foreground:
                raise ExplorationError("back press did not return to the app",
                                       partial_graph=self.build_graph())
            new_current = self._register(back.screen)
            if new_current not in self.discovery:
                raise ExplorationError(
                    f"back press landed on unknown screen {new_current}",
                    partial_graph=self.build_graph(),
                )
        elif outcome.kind == "home":
            post_hash = self._marker(HOME)
            target, step_outcome, new_activity = HOME, "home", False
            new_current = self._relaunch_to_entry()
        else:
            observed = self.driver.observe()
            key2 = self._register(observed.screen)
            self.discovery.setdefault(
                key2, self.discovery[current] + [PathStep(current, component_id, object_index)]
            )
            post_hash = self.full_shots[key2]
            target = key2
            step_outcome = "stayed" if key2 == current else "moved"
            new_activity = self.screens[key2].activity != self.screens[current].activity
            new_current = key2

        self.trace.append(
            TraceStep(
                index=len(self.trace),
                launch_ordinal=ordinal,
                pre_screen=current,
                action=Action(ActionKind.CLICK),
                component_id=component_id,
                object_index=object_index,
                outcome=step_outcome,
                target=target,
                new_activity=new_activity,
                pre_screenshot=pre_hash,
                post_screenshot=post_hash,
                highlighted_screenshot=instance.highlighted_screenshot,
            )
        )
        edge_key = (current, ActionKind.CLICK, component_id, object_index)
        known = self.edge_index.get(edge_key)
        if known is None:
            edge = Edge(current, ActionKind.CLICK, component_id, object_index, target, new_activity)
            self.edge_index[edge_key] = edge
            self.edges.append(edge)
        elif known.target != target:
            raise ExplorationError(
                f"nondeterministic transition from {current} on {component_id}",
                partial_graph=self.build_graph(),
            )
        return new_current

    # -- main loop --

    def run(self) -> EventFlowGraph:
        current = self._relaunch_to_entry()
        if current is None:
            raise ExplorationError("relaunch budget exhausted before exploration began")
        self.entry_key = current
        while True:
            if not self.pending.get(current):
                nxt = self._next_pending_screen()
                if nxt is None:
                    break
                current = self._navigate_to(nxt)
                if current is None:
                    self.truncated = True
                    break
                continue
            if len(self.trace) >= self.config.max_steps:
                self.truncated = True
                break
            component_id, object_index = self.pending[current].popleft()
            current = self._execute_click(current, component_id, object_index)
            if current is None:
                self.truncated = True
                break
        return self.build_graph()

    def build_graph(self) -> EventFlowGraph:
        return EventFlowGraph(
            app_id=self.universe.app_id,
            entry=self.entry_key or "",
            screens=dict(self.screens),
            edges=list(self.edges),
            trace=list(self.trace),
            discovery_paths={k: list(v) for k, v in self.discovery.items()},
            truncated=self.truncated,
        )


def graph_type_map(graph: EventFlowGraph) -> dict[str, str]:
    """Component-type lookup rebuilt from a graph, for fingerprinting observations."""
    types: dict[str, str] = {}
    for screen in graph.screens.values():
        for inst in screen.instances:
            types.setdefault(inst.component_id, inst.component_type)
    return types


def replay_path(driver: DeviceDriver, graph: EventFlowGraph, target: str) -> bool:
    """Relaunch and replay the recorded discovery path to ``target``.

    Returns True when the final fingerprint matches the target screen. A
    mismatch at an intermediate step raises ReplayDivergenceError.
    """
    if target not in graph.screens:
        raise NotFoundError(f"unknown screen {target!r}")
    path = graph.discovery_paths.get(target)
    if path is None:
        raise NotFoundError(f"graph records no discovery path to {target!r}")
    types = graph_type_map(graph)
    type_of = lambda cid: types.get(cid, DYNAMIC_COMPONENT_TYPE)
    driver.relaunch_app()
    for i, step in enumerate(path):
        observed = driver.observe()
        key = spec_fingerprint(observed.screen, type_of) if observed.foreground else observed.state
        if key != step.screen_key:
            raise ReplayDivergenceError(i, step.screen_key, key)
        driver.perform(Action(ActionKind.CLICK), step.component_id, step.object_index)
    observed = driver.observe()
    final = spec_fingerprint(observed.screen, type_of) if observed.foreground else observed.state
    return final == target


def augment_universe(universe: ComponentUniverse, graph: EventFlowGraph) -> ComponentUniverse:
    """Add synthetic descriptors for components seen at runtime but absent statically.

    Synthetic descriptors are flagged dynamic; their only declared action is
    click when the exploration witnessed one, since the trace proves nothing
    about other gestures.
    """
    clicked_ids = {e.component_id for e in graph.edges if e.action_kind is ActionKind.CLICK}
    extra: dict[str, dict] = {}
    for screen in graph.screens.values():
        for inst in screen.instances:
            if inst.component_id in universe.descriptors:
                continue
            entry = extra.setdefault(
                inst.component_id, {"type": inst.component_type, "activities": set()}
            )
            entry["activities"].add(screen.activity)
    if not extra:
        return universe
    descriptors = dict(universe.descriptors)
    for component_id, entry in extra.items():
        actions = {ActionKind.CLICK} if component_id in clicked_ids else set()
        descriptors[component_id] = ComponentDescriptor(
            component_id=component_id,
            component_type=entry["type"],
            declared_actions=frozenset(actions),
            activities=frozenset(entry["activities"]),
            source_classes=frozenset(),
            dynamic=True,
        )
    return ComponentUniverse(
        app_id=universe.app_id,
        descriptors=descriptors,
        type_set=frozenset(d.component_type for d in descriptors.values()),
    )
