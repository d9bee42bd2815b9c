"""Static analysis: parse an app bundle into the universe of GUI components.

An app bundle is a directory with a ``bundle.json`` manifest plus layout and
menu XML documents under ``layout/`` and ``menu/``. The XML dialect is a small
documented subset of Android layout XML: the element name is the component
type and the attributes ``id``, ``clickable``, ``longClickable``, ``editable``,
``scrollable`` and ``text`` are recognized. ``item`` elements inside menu
documents become ``MenuItem`` components and are implicitly clickable.
"""

from __future__ import annotations

import json
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path

from .actions import ActionKind
from .errors import BundleFormatError, ParseError, ValidationError

MANIFEST_NAME = "bundle.json"
MENU_ITEM_TYPE = "MenuItem"

# attribute -> action it justifies
_ACTION_ATTRIBUTES = (
    ("clickable", ActionKind.CLICK),
    ("longClickable", ActionKind.LONG_CLICK),
    ("editable", ActionKind.TYPE),
    ("scrollable", ActionKind.SWIPE),
)


@dataclass
class LayoutDocument:
    """One parsed layout or menu file, keyed by its bundle-relative path."""

    path: str
    root: ET.Element

    @property
    def is_menu(self) -> bool:
        return self.path.startswith("menu/")


@dataclass
class AppBundle:
    app_id: str
    name: str
    version: str
    main_activity: str
    activity_layouts: dict[str, list[str]]
    source_index: dict[str, list[str]]
    layout_files: list[LayoutDocument]
    menu_files: list[LayoutDocument]

    def documents(self) -> list[LayoutDocument]:
        return self.layout_files + self.menu_files

    def document(self, path: str) -> LayoutDocument:
        for doc in self.documents():
            if doc.path == path:
                return doc
        raise ValidationError(f"bundle has no document {path!r}")


@dataclass(frozen=True)
class ComponentDescriptor:
    component_id: str
    component_type: str
    declared_actions: frozenset[ActionKind]
    activities: frozenset[str]
    source_classes: frozenset[str]
    dynamic: bool = False

    def to_dict(self) -> dict:
        return {
            "component_id": self.component_id,
            "component_type": self.component_type,
            "declared_actions": sorted(a.value for a in self.declared_actions),
            "activities": sorted(self.activities),
            "source_classes": sorted(self.source_classes),
            "dynamic": self.dynamic,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ComponentDescriptor":
        return cls(
            component_id=data["component_id"],
            component_type=data["component_type"],
            declared_actions=frozenset(ActionKind(a) for a in data["declared_actions"]),
            activities=frozenset(data["activities"]),
            source_classes=frozenset(data["source_classes"]),
            dynamic=bool(data.get("dynamic", False)),
        )


@dataclass
class ComponentUniverse:
    """Every component the app can present, keyed by component id."""

    app_id: str
    descriptors: dict[str, ComponentDescriptor]
    type_set: frozenset[str]

    def descriptor(self, component_id: str) -> ComponentDescriptor | None:
        return self.descriptors.get(component_id)

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "app_id": self.app_id,
            "descriptors": [self.descriptors[k].to_dict() for k in sorted(self.descriptors)],
            "type_set": sorted(self.type_set),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ComponentUniverse":
        descriptors = {d["component_id"]: ComponentDescriptor.from_dict(d) for d in data["descriptors"]}
        return cls(
            app_id=data["app_id"],
            descriptors=descriptors,
            type_set=frozenset(data["type_set"]),
        )


@dataclass
class ParseReport:
    """Bookkeeping for what extraction skipped or could not match."""

    files_parsed: int = 0
    skipped_without_id: int = 0
    unmatched_source_ids: list[str] = field(default_factory=list)


def parse_app_bundle(path: str | Path) -> AppBundle:
    """Read and validate an app bundle directory."""
    root = Path(path)
    if not root.is_dir():
        raise BundleFormatError(f"bundle path {root} is not a directory")
    manifest_path = root / MANIFEST_NAME
    if not manifest_path.is_file():
        raise BundleFormatError(f"bundle at {root} has no {MANIFEST_NAME}")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise BundleFormatError(f"{MANIFEST_NAME} is not valid JSON: {exc}") from exc

    for key in ("app_id", "name", "version", "main_activity", "activity_layouts"):
        if key not in manifest:
            raise BundleFormatError(f"{MANIFEST_NAME} is missing required field {key!r}")
    app_id = manifest["app_id"]
    if not isinstance(app_id, str) or not app_id:
        raise BundleFormatError("app_id must be a non-empty string")
    activity_layouts = manifest["activity_layouts"]
    if not isinstance(activity_layouts, dict) or not activity_layouts:
        raise BundleFormatError("activity_layouts must map activity names to file lists")
    source_index = manifest.get("source_index", {})
    if not isinstance(source_index, dict):
        raise BundleFormatError("source_index must be a map of component ids to class lists")

    layout_files = _parse_xml_dir(root, "layout")
    menu_files = _parse_xml_dir(root, "menu")
    bundle = AppBundle(
        app_id=app_id,
        name=str(manifest["name"]),
        version=str(manifest["version"]),
        main_activity=str(manifest["main_activity"]),
        activity_layouts={str(k): [str(p) for p in v] for k, v in activity_layouts.items()},
        source_index={str(k): [str(c) for c in v] for k, v in source_index.items()},
        layout_files=layout_files,
        menu_files=menu_files,
    )
    _validate_bundle(bundle)
    return bundle


def _parse_xml_dir(root: Path, subdir: str) -> list[LayoutDocument]:
    directory = root / subdir
    if not directory.is_dir():
        return []
    documents = []
    for file in sorted(directory.glob("*.xml")):
        rel = f"{subdir}/{file.name}"
        try:
            tree = ET.parse(file)
        except ET.ParseError as exc:
            line = exc.position[0] if exc.position else None
            raise ParseError(str(exc), file=rel, line=line) from exc
        documents.append(LayoutDocument(path=rel, root=tree.getroot()))
    return documents


def _validate_bundle(bundle: AppBundle) -> None:
    known = {doc.path for doc in bundle.documents()}
    if bundle.main_activity not in bundle.activity_layouts:
        raise ValidationError(
            f"main_activity {bundle.main_activity!r} is not listed in activity_layouts"
        )
    referenced: set[str] = set()
    for activity, paths in bundle.activity_layouts.items():
        if not paths:
            raise ValidationError(f"activity {activity!r} references no layout files")
        for p in paths:
            if not (p.startswith("layout/") or p.startswith("menu/")):
                raise ValidationError(
                    f"activity {activity!r} references {p!r}; paths must live under layout/ or menu/"
                )
            if p not in known:
                raise ValidationError(f"activity {activity!r} references missing file {p!r}")
            referenced.add(p)
    unreferenced = known - referenced
    if unreferenced:
        names = ", ".join(sorted(unreferenced))
        raise ValidationError(f"files not referenced by any activity: {names}")


def extract_components(bundle: AppBundle) -> ComponentUniverse:
    """Build the component universe; see extract_components_with_report."""
    universe, _ = extract_components_with_report(bundle)
    return universe


def extract_components_with_report(bundle: AppBundle) -> tuple[ComponentUniverse, ParseReport]:
    """Walk every layout/menu file and collect one descriptor per component id.

    A component id that appears under several activities merges into a single
    descriptor carrying all of them; the same id with conflicting element
    types is an error. Elements without an id are skipped and counted.
    """
    report = ParseReport(files_parsed=len(bundle.documents()))
    collected: dict[str, dict] = {}
    for activity, paths in bundle.activity_layouts.items():
        for path in paths:
            doc = bundle.document(path)
            for element in doc.root.iter():
                component_id = element.get("id")
                if not component_id:
                    report.skipped_without_id += 1
                    continue
                component_type = MENU_ITEM_TYPE if doc.is_menu and element.tag == "item" else element.tag
                actions = _element_actions(element, doc)
                entry = collected.get(component_id)
                if entry is None:
                    entry = {"type": component_type, "actions": set(), "activities": set()}
                    collected[component_id] = entry
                elif entry["type"] != component_type:
                    raise ValidationError(
                        f"component {component_id!r} declared as both "
                        f"{entry['type']!r} and {component_type!r}"
                    )
                entry["actions"] |= actions
                entry["activities"].add(activity)

    descriptors = {}
    for component_id, entry in collected.items():
        descriptors[component_id] = ComponentDescriptor(
            component_id=component_id,
            component_type=entry["type"],
            declared_actions=frozenset(entry["actions"]),
            activities=frozenset(entry["activities"]),
            source_classes=frozenset(bundle.source_index.get(component_id, [])),
        )
    report.unmatched_source_ids = sorted(set(bundle.source_index) - set(descriptors))
    universe = ComponentUniverse(
        app_id=bundle.app_id,
        descriptors=descriptors,
        type_set=frozenset(d.component_type for d in descriptors.values()),
    )
    return universe, report


def _element_actions(element: ET.Element, doc: LayoutDocument) -> set[ActionKind]:
    actions = {kind for attr, kind in _ACTION_ATTRIBUTES if element.get(attr) == "true"}
    if doc.is_menu and element.tag == "item":
        actions.add(ActionKind.CLICK)
    return actions
