import json
import random

import pytest

from fusion.actions import Action, ActionKind
from fusion.errors import NotFoundError, ReplayDivergenceError
from fusion.explorer import (
    EventFlowGraph,
    ExploreConfig,
    augment_universe,
    explore,
    fingerprint_screen,
    replay_path,
)
from fusion.geometry import RelativeLocation, region_of
from fusion.primer import ComponentUniverse, extract_components
from fusion.simdevice import EXTERNAL, HOME, SimulatedDevice, app_model_from_dict
from fusion.store import MemoryBlobStore

from .randmodels import bfs_oracle, graph_edges_in_model_space, random_app_model, screen_key_map


def empty_universe(app_id: str) -> ComponentUniverse:
    return ComponentUniverse(app_id=app_id, descriptors={}, type_set=frozenset())


class RecordingDriver:
    """Driver wrapper that records every action kind handed to perform."""

    def __init__(self, inner):
        self.inner = inner
        self.performed = []

    def __getattr__(self, name):
        return getattr(self.inner, name)

    def perform(self, action, component_id, object_index=0):
        self.performed.append(action.kind)
        return self.inner.perform(action, component_id, object_index)


class TestFixtureExploration:
    def test_graph_shape(self, doc_analysis):
        _, graph, _ = doc_analysis
        assert len(graph.screens) == 4
        assert len(graph.edges) == 9
        assert not graph.truncated
        assert graph.entry in graph.screens

    def test_ok_edge_new_activity(self, doc_analysis):
        _, graph, _ = doc_analysis
        edges = graph.edges_from(graph.entry, ActionKind.CLICK, "ok", 0)
        assert len(edges) == 1
        target = edges[0].target
        assert graph.screens[target].activity == "DocumentListActivity"
        assert edges[0].new_activity is True

    def test_external_recovery_continues_exploration(self, doc_analysis):
        _, graph, _ = doc_analysis
        external_steps = [s for s in graph.trace if s.outcome == "external"]
        assert external_steps, "fixture has a web-link component"
        step = external_steps[0]
        later = [s for s in graph.trace if s.index > step.index]
        assert later, "exploration continued after pressing back"
        same_launch = [s for s in later if s.launch_ordinal == step.launch_ordinal]
        assert same_launch and same_launch[0].pre_screen == step.pre_screen

    def test_home_recovery(self, doc_analysis):
        _, graph, _ = doc_analysis
        home_steps = [s for s in graph.trace if s.outcome == "home"]
        assert home_steps
        for step in home_steps:
            peers = [s for s in graph.trace if s.launch_ordinal == step.launch_ordinal]
            assert peers[-1] is step, "home always ends its launch segment"

    def test_every_edge_witnessed_with_blobs(self, doc_analysis):
        _, graph, blobs = doc_analysis
        witnessed = {
            (s.pre_screen, s.component_id, s.object_index, s.target) for s in graph.trace
        }
        for edge in graph.edges:
            assert (edge.source, edge.component_id, edge.object_index, edge.target) in witnessed
        for digest in graph.blob_hashes():
            assert blobs.has_blob(digest)

    def test_instance_locations_consistent(self, doc_analysis, doc_model):
        _, graph, _ = doc_analysis
        for screen in graph.screens.values():
            for inst in screen.instances:
                assert inst.relative_location is region_of(inst.bounds, doc_model.viewport)

    def test_ok_button_is_center(self, doc_analysis):
        _, graph, _ = doc_analysis
        ok = graph.screens[graph.entry].instance("ok", 0)
        assert ok.relative_location is RelativeLocation.CENTER
        assert ok.relative_location.label == "Center"

    def test_click_only_invariant(self, doc_bundle, doc_model):
        driver = RecordingDriver(SimulatedDevice(doc_model))
        explore(driver, extract_components(doc_bundle), MemoryBlobStore())
        assert driver.performed and set(driver.performed) == {ActionKind.CLICK}

    def test_deterministic_graph(self, doc_bundle, doc_model):
        universe = extract_components(doc_bundle)
        docs = []
        for _ in range(2):
            graph = explore(SimulatedDevice(doc_model), universe, MemoryBlobStore())
            graph_doc, trace_doc = graph.to_docs()
            docs.append(json.dumps([graph_doc, trace_doc], sort_keys=True))
        assert docs[0] == docs[1]

    def test_launch_segments_contiguous(self, doc_analysis):
        _, graph, _ = doc_analysis
        by_launch: dict[int, list] = {}
        for step in graph.trace:
            by_launch.setdefault(step.launch_ordinal, []).append(step)
        for steps in by_launch.values():
            assert steps[0].pre_screen == graph.entry
            for before, after in zip(steps, steps[1:]):
                if before.outcome in ("stayed", "moved"):
                    assert after.pre_screen == before.target
                elif before.outcome == "external":
                    assert after.pre_screen == before.pre_screen
                else:
                    pytest.fail("home outcome must end the segment")

    def test_serialization_round_trip(self, doc_analysis):
        _, graph, _ = doc_analysis
        graph_doc, trace_doc = graph.to_docs()
        again = EventFlowGraph.from_docs(
            json.loads(json.dumps(graph_doc)), json.loads(json.dumps(trace_doc))
        )
        assert again.to_docs() == (graph_doc, trace_doc)


def test_single_screen_no_clickables():
    model = app_model_from_dict({
        "app_id": "solo",
        "viewport": {"width": 300, "height": 300},
        "entry_screen": "only",
        "screens": {
            "only": {
                "activity": "Solo", "window": "main",
                "components": [
                    {"component_id": "label", "object_index": 0, "text": "hi",
                     "bounds": [10, 10, 100, 50], "supported_actions": []},
                ],
            },
        },
        "transitions": [],
    })
    graph = explore(SimulatedDevice(model), empty_universe("solo"), MemoryBlobStore())
    assert len(graph.screens) == 1
    assert graph.edges == []
    assert graph.trace == []


def test_fingerprint_text_invariance():
    base = [("a", 0, "Button"), ("b", 0, "TextView")]
    assert fingerprint_screen("Act", "main", base) == fingerprint_screen("Act", "main", list(reversed(base)))
    assert fingerprint_screen("Act", "main", base) != fingerprint_screen("Act", "main", base + [("a", 1, "Button")])
    assert fingerprint_screen("Act", "main", base) != fingerprint_screen("Act", "other", base)


def test_truncation_flag(doc_bundle, doc_model):
    universe = extract_components(doc_bundle)
    graph = explore(SimulatedDevice(doc_model), universe, MemoryBlobStore(),
                    ExploreConfig(max_steps=3))
    assert graph.truncated
    assert len(graph.trace) == 3
    assert graph.entry in graph.screens


def test_dynamic_components_get_synthetic_descriptors(doc_model):
    universe = empty_universe("document_viewer")
    graph = explore(SimulatedDevice(doc_model), universe, MemoryBlobStore())
    augmented = augment_universe(universe, graph)
    assert augmented.descriptors, "runtime components were registered"
    ok = augmented.descriptors["ok"]
    assert ok.dynamic is True
    assert ok.component_type == "View"
    assert ok.declared_actions == frozenset({ActionKind.CLICK})
    label = augmented.descriptors["title_text"]
    assert label.declared_actions == frozenset()


class TestReplayPath:
    def test_entry_needs_only_relaunch(self, doc_analysis, doc_driver):
        _, graph, _ = doc_analysis
        assert replay_path(doc_driver, graph, graph.entry) is True

    def test_two_hop_screen(self, doc_analysis, doc_driver):
        _, graph, _ = doc_analysis
        two_hops = [key for key, path in graph.discovery_paths.items() if len(path) == 2]
        assert two_hops
        assert replay_path(doc_driver, graph, two_hops[0]) is True

    def test_unknown_target(self, doc_analysis, doc_driver):
        _, graph, _ = doc_analysis
        with pytest.raises(NotFoundError):
            replay_path(doc_driver, graph, "doesnotexist")

    def test_mutated_model_diverges(self, doc_analysis, doc_model):
        _, graph, _ = doc_analysis
        mutated = json.loads(json.dumps({
            "app_id": "document_viewer",
            "viewport": {"width": 1200, "height": 1920},
            "entry_screen": "main",
            "screens": {
                "main": {
                    "activity": "SomewhereElse", "window": "main",
                    "components": [
                        {"component_id": "ok", "object_index": 0, "text": "OK",
                         "bounds": [500, 880, 700, 1000], "supported_actions": ["click"]},
                    ],
                },
            },
            "transitions": [],
        }))
        driver = SimulatedDevice(app_model_from_dict(mutated))
        deep = max(graph.discovery_paths.values(), key=len)
        target = [k for k, v in graph.discovery_paths.items() if v == deep][0]
        with pytest.raises(ReplayDivergenceError):
            replay_path(driver, graph, target)


def test_random_models_match_bfs_oracle_small():
    # fuller sweep lives in the acceptance suite
    for seed in range(10):
        rng = random.Random(1000 + seed)
        model, universe = random_app_model(rng, max_screens=8, max_components=24)
        graph = explore(SimulatedDevice(model), universe, MemoryBlobStore(),
                        ExploreConfig(max_steps=5000, max_relaunches=1000))
        assert not graph.truncated
        reach, edges = bfs_oracle(model)
        assert set(screen_key_map(model, graph).values()) == reach
        assert graph_edges_in_model_space(model, graph) == edges
