"""Finalized bug reports: persistence, rendering, and replay scripts.

A finished report has three sections; preliminary information, the numbered
reproduction steps with per-step component detail and screenshots, and the
ordered full screenshots the developer can follow screen by screen. Reports
whose steps all resolved against the app model are gap-free and can be
compiled into a replay script that re-drives the app.
"""

from __future__ import annotations

import base64
import html
from dataclasses import dataclass
from datetime import datetime, timezone

from .actions import Action, ActionKind
from .autocomplete import AutoResolution, ManualResolution, ReportStep, Session
from .errors import GapError, IntegrityError, NotFoundError, SessionClosedError, ValidationError
from .explorer import DYNAMIC_COMPONENT_TYPE, EventFlowGraph, graph_type_map, spec_fingerprint
from .primer import ComponentUniverse
from .simdevice import STATE_EXTERNAL, STATE_HOME

PLACEHOLDER = None  # full-screenshot slot for manual steps
UNKNOWN_SOURCE = "unknown"
MANUAL_BADGE = "not verified against app model"


@dataclass
class BugReport:
    report_id: int
    app_id: str
    metadata: dict
    steps: list[ReportStep]
    full_screenshots: list[str | None]
    gap_free: bool
    created_at: str

    def blob_hashes(self) -> set[str]:
        hashes = {h for h in self.full_screenshots if h}
        hashes |= {s.resolution.confirmed_screenshot for s in self.steps if s.is_auto}
        return hashes

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "report_id": self.report_id,
            "app_id": self.app_id,
            "metadata": dict(self.metadata),
            "steps": [s.to_dict() for s in self.steps],
            "full_screenshots": list(self.full_screenshots),
            "gap_free": self.gap_free,
            "created_at": self.created_at,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BugReport":
        return cls(
            report_id=data["report_id"],
            app_id=data["app_id"],
            metadata=dict(data["metadata"]),
            steps=[ReportStep.from_dict(s) for s in data["steps"]],
            full_screenshots=list(data["full_screenshots"]),
            gap_free=data["gap_free"],
            created_at=data["created_at"],
        )


def finalize(session: Session, store) -> BugReport:
    """Close a session into a persisted report with the next report id."""
    if session.closed:
        raise SessionClosedError(f"session {session.session_id} is already finalized")
    if not session.history:
        raise ValidationError("cannot finalize a session with no steps")
    report = BugReport(
        report_id=store.next_report_id(session.app_id),
        app_id=session.app_id,
        metadata=dict(session.metadata),
        steps=list(session.history),
        full_screenshots=[
            step.resolution.confirmed_screenshot if step.is_auto else PLACEHOLDER
            for step in session.history
        ],
        gap_free=all(step.is_auto for step in session.history),
        created_at=datetime.now(timezone.utc).isoformat(timespec="seconds"),
    )
    store.save_report(report)
    session.closed = True
    store.save_session(session)
    return report


# --- rendering -----------------------------------------------------------------

def _step_facts(step: ReportStep, universe: ComponentUniverse, graph: EventFlowGraph) -> dict:
    """Everything a renderer needs for one step row."""
    action_text = step.action.kind.label
    if step.action.kind is ActionKind.TYPE:
        action_text += f' "{step.action.typed_text}"'
    if isinstance(step.resolution, AutoResolution):
        instance = graph.instance(step.resolution.screen_key, step.resolution.component_id,
                                  step.resolution.object_index)
        screen = graph.screen(step.resolution.screen_key)
        descriptor = universe.descriptor(step.resolution.component_id)
        classes = sorted(descriptor.source_classes) if descriptor else []
        return {
            "manual": False,
            "action": action_text,
            "component_type": instance.component_type,
            "text": instance.text,
            "relative_location": instance.relative_location.label,
            "activity": screen.activity,
            "source_classes": ", ".join(classes) if classes else UNKNOWN_SOURCE,
            "component_image": instance.component_screenshot,
            "note": step.user_note,
        }
    return {
        "manual": True,
        "action": action_text,
        "component_type": step.resolution.component_type,
        "text": step.resolution.text,
        "relative_location": step.resolution.relative_location.label,
        "activity": None,
        "source_classes": UNKNOWN_SOURCE,
        "component_image": None,
        "note": step.user_note,
    }


_STYLE = """
body { font-family: sans-serif; margin: 2em; color: #1c1c22; }
section { margin-bottom: 2.5em; }
h1 { margin-bottom: 0.2em; }
table.overview td { padding: 2px 12px 2px 0; vertical-align: top; }
ol.steps li { margin-bottom: 1.2em; }
.badge { background: #b33; color: #fff; padding: 1px 6px; border-radius: 3px; font-size: 0.8em; }
.component-image { display: block; margin-top: 4px; border: 1px solid #999; max-width: 480px; }
.full-shot { border: 1px solid #999; max-width: 320px; margin-right: 8px; vertical-align: top; }
.placeholder { display: inline-block; width: 320px; height: 120px; border: 1px dashed #999;
               color: #666; text-align: center; line-height: 120px; }
.note { font-style: italic; color: #444; }
"""


def render_html(report: BugReport, universe: ComponentUniverse, graph: EventFlowGraph,
                blob_src=None) -> str:
    """Render a persisted report as a standalone HTML page.

    ``blob_src`` maps a blob hash to an image URL; the default points at the
    service blob endpoint.
    """
    if blob_src is None:
        blob_src = lambda digest: f"/api/blobs/{digest}"
    esc = html.escape
    meta = report.metadata
    out = []
    out.append("<!DOCTYPE html>")
    out.append("<html><head><meta charset=\"utf-8\">")
    out.append(f"<title>Bug Report #{report.report_id}: {esc(meta['title'])}</title>")
    out.append(f"<style>{_STYLE}</style></head><body>")

    out.append('<section id="overview">')
    out.append(f"<h1>Bug Report #{report.report_id}</h1>")
    out.append('<table class="overview">')
    out.append(f"<tr><td>Title</td><td>{esc(meta['title'])}</td></tr>")
    out.append(f"<tr><td>Reporter</td><td>{esc(meta['reporter_name'])}</td></tr>")
    out.append(f"<tr><td>Device</td><td>{esc(meta['device'])}</td></tr>")
    out.append(f"<tr><td>Orientation</td><td>{esc(meta['orientation'])}</td></tr>")
    out.append(f"<tr><td>Description</td><td>{esc(meta['description'])}</td></tr>")
    out.append("</table></section>")

    out.append('<section id="steps"><h2>Steps to Reproduce</h2><ol class="steps">')
    for step in report.steps:
        facts = _step_facts(step, universe, graph)
        css = "manual" if facts["manual"] else "auto"
        out.append(f'<li class="step {css}">')
        label = f'{esc(facts["action"])} the {esc(facts["component_type"])}'
        if facts["text"]:
            label += f' &quot;{esc(facts["text"])}&quot;'
        out.append(f"<div><strong>{label}</strong> ({esc(facts['relative_location'])})</div>")
        if facts["manual"]:
            out.append(f'<div><span class="badge">{MANUAL_BADGE}</span></div>')
        out.append(f"<div>Source class: {esc(facts['source_classes'])}</div>")
        if facts["activity"]:
            out.append(f"<div>Activity: {esc(facts['activity'])}</div>")
        if facts["component_image"]:
            out.append(
                f'<img class="component-image" alt="component for step {step.step_num}" '
                f'src="{blob_src(facts["component_image"])}">'
            )
        if facts["note"]:
            out.append(f'<div class="note">{esc(facts["note"])}</div>')
        out.append("</li>")
    out.append("</ol></section>")

    out.append('<section id="screenshots"><h2>Full Screenshots</h2>')
    for i, digest in enumerate(report.full_screenshots, start=1):
        if digest:
            out.append(
                f'<figure style="display:inline-block"><img class="full-shot" '
                f'alt="screen for step {i}" src="{blob_src(digest)}">'
                f"<figcaption>Step {i}</figcaption></figure>"
            )
        else:
            out.append(
                f'<figure style="display:inline-block"><span class="placeholder">no model '
                f"screenshot</span><figcaption>Step {i}</figcaption></figure>"
            )
    out.append("</section></body></html>")
    return "\n".join(out)


def data_uri_blob_src(store):
    """blob_src that inlines images, for self-contained CLI renders."""

    def src(digest: str) -> str:
        try:
            content = store.get_blob(digest)
        except NotFoundError as exc:
            raise IntegrityError(f"report references missing blob {digest}") from exc
        return "data:image/png;base64," + base64.b64encode(content).decode("ascii")

    return src


def render_text(report: BugReport, universe: ComponentUniverse, graph: EventFlowGraph) -> str:
    """Plain-text rendering for terminal viewing and golden-file diffs."""
    meta = report.metadata
    lines = [
        f"BUG REPORT #{report.report_id}",
        "=" * 40,
        "",
        "[1] Overview",
        f"  Title:       {meta['title']}",
        f"  Reporter:    {meta['reporter_name']}",
        f"  Device:      {meta['device']}",
        f"  Orientation: {meta['orientation']}",
        f"  Description: {meta['description']}",
        "",
        "[2] Steps to Reproduce",
    ]
    for step in report.steps:
        facts = _step_facts(step, universe, graph)
        text = f' "{facts["text"]}"' if facts["text"] else ""
        lines.append(f"  {step.step_num}. {facts['action']} the {facts['component_type']}{text}"
                     f" ({facts['relative_location']})")
        if facts["manual"]:
            lines.append(f"     [{MANUAL_BADGE}]")
        lines.append(f"     source class: {facts['source_classes']}")
        if facts["activity"]:
            lines.append(f"     activity: {facts['activity']}")
        if facts["component_image"]:
            lines.append(f"     component image: {facts['component_image']}")
        if facts["note"]:
            lines.append(f"     note: {facts['note']}")
    lines.append("")
    lines.append("[3] Full Screenshots")
    for i, digest in enumerate(report.full_screenshots, start=1):
        lines.append(f"  step {i}: {digest if digest else '(no model screenshot)'}")
    lines.append("")
    return "\n".join(lines)


# --- replay ----------------------------------------------------------------------

@dataclass(frozen=True)
class ReplayEntry:
    action: Action
    screen_key: str
    component_id: str
    object_index: int

    def to_dict(self) -> dict:
        return {
            "action": self.action.to_dict(),
            "screen_key": self.screen_key,
            "component_id": self.component_id,
            "object_index": self.object_index,
        }


@dataclass
class ReplayScript:
    app_id: str
    entries: list[ReplayEntry]

    def to_dict(self) -> dict:
        return {"app_id": self.app_id, "entries": [e.to_dict() for e in self.entries]}


@dataclass(frozen=True)
class ReplayResult:
    status: str  # "success" | "divergence"
    step_num: int | None = None
    expected: str | None = None
    observed: str | None = None
    final_screen: str | None = None

    @property
    def success(self) -> bool:
        return self.status == "success"


def to_replay_script(report: BugReport) -> ReplayScript:
    """Compile a gap-free report into an executable action sequence."""
    manual = [s.step_num for s in report.steps if not s.is_auto]
    if manual:
        raise GapError(manual)
    entries = [
        ReplayEntry(
            action=step.action,
            screen_key=step.resolution.screen_key,
            component_id=step.resolution.component_id,
            object_index=step.resolution.object_index,
        )
        for step in report.steps
    ]
    return ReplayScript(app_id=report.app_id, entries=entries)


def replay(script: ReplayScript, driver, graph: EventFlowGraph) -> ReplayResult:
    """Re-drive the app from a cold start, checking each step's screen.

    Mirrors exploration-time recovery: landing outside the app presses back,
    landing on the home screen relaunches, so scripts that describe those
    excursions stay executable.
    """
    if not script.entries:
        raise ValidationError("replay script has no entries")
    if driver.app_id != script.app_id:
        raise ValidationError(
            f"script is for {script.app_id!r} but driver runs {driver.app_id!r}"
        )
    types = graph_type_map(graph)

    def current_key() -> str:
        observed = driver.observe()
        if not observed.foreground:
            return observed.state
        return spec_fingerprint(observed.screen,
                                lambda cid: types.get(cid, DYNAMIC_COMPONENT_TYPE))

    driver.relaunch_app()
    for step_num, entry in enumerate(script.entries, start=1):
        observed = current_key()
        if observed != entry.screen_key:
            return ReplayResult("divergence", step_num=step_num,
                                expected=entry.screen_key, observed=observed)
        driver.perform(entry.action, entry.component_id, entry.object_index)
        after = driver.observe()
        if after.state == STATE_EXTERNAL:
            driver.press_back()
        elif after.state == STATE_HOME:
            driver.relaunch_app()
    return ReplayResult("success", final_screen=current_key())
