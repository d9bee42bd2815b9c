"""Shared step-building helpers for session-level tests."""

from __future__ import annotations

from fusion.actions import Action, ActionKind
from fusion.autocomplete import NOT_IN_LIST, AutocompleteEngine, AutoResolution, Session
from fusion.explorer import EventFlowGraph
from fusion.geometry import RelativeLocation


def screen_by(graph: EventFlowGraph, activity: str, window: str = "main") -> str:
    for key, screen in graph.screens.items():
        if screen.activity == activity and screen.window == window:
            return key
    raise AssertionError(f"no screen for {activity}/{window}")


def auto_resolution(graph: EventFlowGraph, screen_key: str, component_id: str,
                    object_index: int = 0) -> AutoResolution:
    instance = graph.instance(screen_key, component_id, object_index)
    assert instance is not None
    return AutoResolution(screen_key, component_id, object_index,
                          instance.highlighted_screenshot)


def commit_click(engine: AutocompleteEngine, session: Session, screen_key: str,
                 component_id: str, object_index: int = 0,
                 user_note: str | None = None) -> Session:
    return engine.commit_step(
        session,
        Action(ActionKind.CLICK),
        auto_resolution(engine.graph, screen_key, component_id, object_index),
        user_note,
    )


def suggestion_rows(rows):
    """Strip the trailing NOT_IN_LIST marker."""
    assert rows and rows[-1] is NOT_IN_LIST
    return rows[:-1]


def commit_document_viewer_repro(engine: AutocompleteEngine, session: Session) -> Session:
    """The running example: OK -> first document -> Go To Page -> dialog OK."""
    graph = engine.graph
    main = screen_by(graph, "MainActivity")
    doc_list = screen_by(graph, "DocumentListActivity")
    doc_view = screen_by(graph, "DocumentViewActivity")
    dialog = screen_by(graph, "DocumentViewActivity", "dialog:goto_page")
    commit_click(engine, session, main, "ok")
    commit_click(engine, session, doc_list, "doc_row", 0)
    commit_click(engine, session, doc_view, "goto_page",
                 user_note="Dialog was slow to appear.")
    commit_click(engine, session, dialog, "dialog_ok")
    return session


MANUAL_EXAMPLE = dict(
    component_type="Button",
    text="Open Document",
    relative_location=RelativeLocation.TOP_CENTER,
)


def launch_segments(trace):
    """Split a trace into per-launch runs, each contiguous from the entry screen."""
    segments: list[list] = []
    for step in trace:
        if not segments or segments[-1][-1].launch_ordinal != step.launch_ordinal:
            segments.append([step])
        else:
            segments[-1].append(step)
    return segments


def expected_screen_after(graph: EventFlowGraph, step) -> str:
    """Where a replay ends up after executing a recorded step, recovery included."""
    if step.outcome in ("stayed", "moved"):
        return step.target
    if step.outcome == "external":
        return step.pre_screen  # back press returns to the launcher screen
    return graph.entry  # home exits trigger a relaunch


class CrashError(RuntimeError):
    """Injected failure standing in for a process kill mid-save."""


def run_interrupted_save_fuzz(base_dir, universe, graph, blobs, engine, metadata,
                              trials: int, seed: int = 99) -> None:
    """Crash the store's write path at random points; no trial may dangle a blob ref.

    Half of the injected crashes leave the temp file on disk, modelling a kill
    between the write and the rename.
    """
    import random

    from fusion.report import finalize
    from fusion.store import Store

    app_id = universe.app_id
    rng = random.Random(seed)
    for trial in range(trials):
        root = base_dir / f"trial{trial}"
        store = Store(root)
        crash_after = rng.randint(0, 60)
        calls = {"n": 0}
        original = Store._atomic_write

        def crashing(self, path, data, _after=crash_after, _calls=calls, _rng=rng):
            _calls["n"] += 1
            if _calls["n"] > _after:
                if _rng.random() < 0.5:
                    tmp = path.with_name(path.name + ".tmp")
                    tmp.parent.mkdir(parents=True, exist_ok=True)
                    tmp.write_bytes(data)
                raise CrashError()
            return original(self, path, data)

        store._atomic_write = crashing.__get__(store, Store)
        try:
            store.register_app(app_id, "App", "1")
            for digest in sorted(blobs.hashes()):
                store.put_blob(blobs.get_blob(digest))
            store.save_analysis(app_id, universe, graph)
            session = engine.open_session(dict(metadata))
            rows = suggestion_rows(engine.suggest_components(session, ActionKind.CLICK))
            suggestion = rows[0]
            shot = engine.confirmation_screenshots(session, suggestion)[0]
            engine.commit_step(
                session,
                Action(ActionKind.CLICK),
                AutoResolution(shot.screen_key, suggestion.component_id,
                               suggestion.object_index, shot.screenshot),
            )
            store.save_session(session)
            finalize(session, store)
        except CrashError:
            pass
        problems = Store(root).verify_integrity(app_id)
        assert problems == [], f"trial {trial}: {problems}"
