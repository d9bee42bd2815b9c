"""Device-independent GUI event-flow mining and auto-completed bug reports."""

from .actions import Action, ActionKind
from .autocomplete import AutocompleteEngine, Session
from .explorer import EventFlowGraph, ExploreConfig, explore
from .geometry import Rect, RelativeLocation, Viewport, region_of
from .primer import AppBundle, ComponentUniverse, extract_components, parse_app_bundle
from .report import BugReport, finalize, render_html, render_text, replay, to_replay_script
from .simdevice import AppModel, DeviceDriver, SimulatedDevice, load_app_model
from .store import BlobRef, MemoryBlobStore, Store

__version__ = "0.1.0"

__all__ = [
    "Action",
    "ActionKind",
    "AppBundle",
    "AppModel",
    "AutocompleteEngine",
    "BlobRef",
    "BugReport",
    "ComponentUniverse",
    "DeviceDriver",
    "EventFlowGraph",
    "ExploreConfig",
    "MemoryBlobStore",
    "Rect",
    "RelativeLocation",
    "Session",
    "SimulatedDevice",
    "Store",
    "Viewport",
    "explore",
    "extract_components",
    "finalize",
    "load_app_model",
    "parse_app_bundle",
    "region_of",
    "render_html",
    "render_text",
    "replay",
    "to_replay_script",
]
