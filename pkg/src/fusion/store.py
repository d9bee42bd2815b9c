"""File-backed store for analysis data, screenshots, sessions, and reports.

Layout per app::

    <root>/<app_id>/
        app.json                     registration metadata
        universe.json                component universe
        graph.json / trace.json      event-flow graph and exploration trace
        blobs/<hh>/<hash>            content-addressed screenshot blobs
        reports/<id>.json            finalized bug reports
        sessions/<uuid>.json         reporter sessions
        report_counter.txt           monotonic report id counter

Blobs are written before the documents that reference them and every
document write is an atomic rename, so an interrupted save can leave garbage
blobs but never a referenced-but-missing one. Writers serialize per app via
an advisory file lock; blob puts are idempotent and lock-free.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path

from filelock import FileLock

from .errors import IntegrityError, NotFoundError, ValidationError
from .explorer import EventFlowGraph
from .primer import ComponentUniverse

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"

# File locks serialize writers across processes but are not reliable between
# threads of one process, so each lock path also gets an in-process mutex.
_thread_locks: dict[str, threading.Lock] = {}
_thread_locks_guard = threading.Lock()


def _thread_lock_for(path: str) -> threading.Lock:
    with _thread_locks_guard:
        lock = _thread_locks.get(path)
        if lock is None:
            lock = threading.Lock()
            _thread_locks[path] = lock
        return lock


def sniff_media_type(content: bytes) -> str:
    return "image/png" if content.startswith(PNG_MAGIC) else "application/octet-stream"


@dataclass(frozen=True)
class BlobRef:
    hash: str
    media_type: str

    def to_dict(self) -> dict:
        return {"hash": self.hash, "media_type": self.media_type}


class MemoryBlobStore:
    """In-memory blob sink with the same put/get surface as Store."""

    def __init__(self):
        self._blobs: dict[str, bytes] = {}

    def put_blob(self, content: bytes) -> BlobRef:
        digest = hashlib.sha256(content).hexdigest()
        self._blobs[digest] = content
        return BlobRef(digest, sniff_media_type(content))

    def get_blob(self, ref: BlobRef | str) -> bytes:
        digest = ref.hash if isinstance(ref, BlobRef) else ref
        try:
            return self._blobs[digest]
        except KeyError:
            raise NotFoundError(f"unknown blob {digest}") from None

    def has_blob(self, digest: str) -> bool:
        return digest in self._blobs

    def hashes(self) -> set[str]:
        return set(self._blobs)


class Store:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    # -- paths ----------------------------------------------------------------

    def app_dir(self, app_id: str) -> Path:
        return self.root / app_id

    def _require_app(self, app_id: str) -> Path:
        directory = self.app_dir(app_id)
        if not directory.is_dir():
            raise NotFoundError(f"unknown app {app_id!r}")
        return directory

    @contextmanager
    def _lock(self, app_id: str):
        lock_path = str((self.app_dir(app_id) / ".lock").resolve())
        with _thread_lock_for(lock_path):
            with FileLock(lock_path):
                yield

    def _blob_path(self, digest: str) -> Path:
        return self.root / "blobs" / digest[:2] / digest

    # -- low-level writes -------------------------------------------------------

    def _atomic_write(self, path: Path, data: bytes) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_bytes(data)
        os.replace(tmp, path)

    def _write_doc(self, path: Path, doc: dict) -> None:
        payload = json.dumps(doc, indent=2, sort_keys=False).encode("utf-8") + b"\n"
        self._atomic_write(path, payload)

    def _read_doc(self, path: Path, what: str) -> dict:
        if not path.is_file():
            raise NotFoundError(f"no {what} found")
        return json.loads(path.read_text(encoding="utf-8"))

    # -- blobs ------------------------------------------------------------------

    def put_blob(self, content: bytes) -> BlobRef:
        digest = hashlib.sha256(content).hexdigest()
        path = self._blob_path(digest)
        if not path.exists():
            self._atomic_write(path, content)
        return BlobRef(digest, sniff_media_type(content))

    def get_blob(self, ref: BlobRef | str) -> bytes:
        digest = ref.hash if isinstance(ref, BlobRef) else ref
        path = self._blob_path(digest)
        if not path.is_file():
            raise NotFoundError(f"unknown blob {digest}")
        return path.read_bytes()

    def has_blob(self, digest: str) -> bool:
        return self._blob_path(digest).is_file()

    def _check_refs(self, hashes, what: str) -> None:
        missing = sorted(h for h in hashes if h and not self.has_blob(h))
        if missing:
            raise IntegrityError(f"{what} references missing blobs: {', '.join(missing)}")

    # -- apps and analysis --------------------------------------------------------

    def register_app(self, app_id: str, name: str, version: str) -> None:
        directory = self.app_dir(app_id)
        directory.mkdir(parents=True, exist_ok=True)
        with self._lock(app_id):
            self._write_doc(directory / "app.json", {
                "schema_version": 1,
                "app_id": app_id,
                "name": name,
                "version": version,
            })

    def list_apps(self) -> list[dict]:
        apps = []
        if not self.root.is_dir():
            return apps
        for directory in sorted(self.root.iterdir()):
            if not directory.is_dir() or directory.name == "blobs":
                continue
            meta_path = directory / "app.json"
            if not meta_path.is_file():
                continue
            meta = json.loads(meta_path.read_text(encoding="utf-8"))
            analyzed = (directory / "universe.json").is_file() and (directory / "graph.json").is_file()
            apps.append({
                "app_id": meta.get("app_id", directory.name),
                "name": meta.get("name", directory.name),
                "version": meta.get("version", ""),
                "analyzed": analyzed,
            })
        return apps

    def save_universe(self, app_id: str, universe: ComponentUniverse) -> None:
        if universe.app_id != app_id:
            raise ValidationError(f"universe belongs to {universe.app_id!r}, not {app_id!r}")
        directory = self.app_dir(app_id)
        directory.mkdir(parents=True, exist_ok=True)
        with self._lock(app_id):
            self._write_doc(directory / "universe.json", universe.to_dict())

    def save_analysis(self, app_id: str, universe: ComponentUniverse, graph: EventFlowGraph) -> None:
        if universe.app_id != app_id or graph.app_id != app_id:
            raise ValidationError("universe/graph app ids do not match the target app")
        directory = self.app_dir(app_id)
        directory.mkdir(parents=True, exist_ok=True)
        self._check_refs(graph.blob_hashes(), "graph")
        graph_doc, trace_doc = graph.to_docs()
        with self._lock(app_id):
            self._write_doc(directory / "universe.json", universe.to_dict())
            self._write_doc(directory / "graph.json", graph_doc)
            self._write_doc(directory / "trace.json", trace_doc)

    def load_universe(self, app_id: str) -> ComponentUniverse:
        directory = self._require_app(app_id)
        doc = self._read_doc(directory / "universe.json", f"universe for {app_id!r}")
        return ComponentUniverse.from_dict(doc)

    def load_analysis(self, app_id: str) -> tuple[ComponentUniverse, EventFlowGraph]:
        directory = self._require_app(app_id)
        universe = self.load_universe(app_id)
        graph_doc = self._read_doc(directory / "graph.json", f"graph for {app_id!r}")
        trace_doc = self._read_doc(directory / "trace.json", f"trace for {app_id!r}")
        return universe, EventFlowGraph.from_docs(graph_doc, trace_doc)

    # -- report ids ---------------------------------------------------------------

    def next_report_id(self, app_id: str) -> int:
        directory = self._require_app(app_id)
        counter = directory / "report_counter.txt"
        with self._lock(app_id):
            current = int(counter.read_text()) if counter.is_file() else 0
            value = current + 1
            self._atomic_write(counter, str(value).encode("ascii"))
        return value

    # -- reports --------------------------------------------------------------------

    def save_report(self, report) -> None:
        directory = self._require_app(report.app_id)
        self._check_refs(report.blob_hashes(), f"report {report.report_id}")
        with self._lock(report.app_id):
            self._write_doc(directory / "reports" / f"{report.report_id}.json", report.to_dict())

    def load_report(self, app_id: str, report_id: int) -> dict:
        directory = self._require_app(app_id)
        return self._read_doc(directory / "reports" / f"{report_id}.json",
                              f"report {report_id} for {app_id!r}")

    def list_report_ids(self, app_id: str) -> list[int]:
        directory = self._require_app(app_id)
        reports = directory / "reports"
        if not reports.is_dir():
            return []
        return sorted(int(p.stem) for p in reports.glob("*.json"))

    # -- sessions ----------------------------------------------------------------------

    def save_session(self, session) -> None:
        directory = self._require_app(session.app_id)
        doc = session.to_dict()
        self._check_refs(session.blob_hashes(), f"session {session.session_id}")
        with self._lock(session.app_id):
            self._write_doc(directory / "sessions" / f"{session.session_id}.json", doc)

    def load_session_doc(self, session_id: str) -> dict:
        for directory in sorted(self.root.iterdir()):
            path = directory / "sessions" / f"{session_id}.json"
            if path.is_file():
                return json.loads(path.read_text(encoding="utf-8"))
        raise NotFoundError(f"unknown session {session_id!r}")

    # -- integrity -----------------------------------------------------------------------

    def verify_integrity(self, app_id: str) -> list[str]:
        """Return every dangling blob reference among the app's readable documents."""
        directory = self.app_dir(app_id)
        problems: list[str] = []

        def check(hashes, what):
            for digest in hashes:
                if digest and not self.has_blob(digest):
                    problems.append(f"{what} references missing blob {digest}")

        graph_path = directory / "graph.json"
        if graph_path.is_file():
            graph_doc = json.loads(graph_path.read_text(encoding="utf-8"))
            trace_path = directory / "trace.json"
            trace_doc = json.loads(trace_path.read_text(encoding="utf-8")) if trace_path.is_file() else None
            graph = EventFlowGraph.from_docs(graph_doc, trace_doc)
            check(graph.blob_hashes(), "graph")
        reports = directory / "reports"
        if reports.is_dir():
            for path in sorted(reports.glob("*.json")):
                doc = json.loads(path.read_text(encoding="utf-8"))
                check([h for h in doc.get("full_screenshots", []) if h], f"report {path.stem}")
                for step in doc.get("steps", []):
                    resolution = step.get("resolution", {})
                    check([resolution.get("confirmed_screenshot")], f"report {path.stem}")
        sessions = directory / "sessions"
        if sessions.is_dir():
            for path in sorted(sessions.glob("*.json")):
                doc = json.loads(path.read_text(encoding="utf-8"))
                for step in doc.get("history", []):
                    resolution = step.get("resolution", {})
                    check([resolution.get("confirmed_screenshot")], f"session {path.stem}")
        return problems
