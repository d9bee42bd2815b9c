import shutil
from pathlib import Path

import pytest

from fusion.autocomplete import AutocompleteEngine
from fusion.explorer import ExploreConfig, augment_universe, explore
from fusion.primer import extract_components, parse_app_bundle
from fusion.simdevice import SimulatedDevice, load_app_model
from fusion.store import MemoryBlobStore, Store

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
DOC_BUNDLE = FIXTURES / "document_viewer" / "bundle"
DOC_MODEL = FIXTURES / "document_viewer" / "model.json"

SESSION_METADATA = {
    "reporter_name": "Jamie Reporter",
    "device": "Nexus 7",
    "orientation": "portrait",
    "title": "Go To Page requires two entries",
    "description": "Entering a page number only works the second time.",
}


@pytest.fixture(scope="session")
def doc_bundle():
    return parse_app_bundle(DOC_BUNDLE)


@pytest.fixture(scope="session")
def doc_model():
    return load_app_model(DOC_MODEL)


@pytest.fixture()
def doc_driver(doc_model):
    return SimulatedDevice(doc_model)


@pytest.fixture(scope="session")
def doc_analysis(doc_bundle, doc_model):
    """(augmented universe, graph, blob store) for the fixture app, explored once."""
    universe = extract_components(doc_bundle)
    blobs = MemoryBlobStore()
    graph = explore(SimulatedDevice(doc_model), universe, blobs, ExploreConfig())
    return augment_universe(universe, graph), graph, blobs


@pytest.fixture(scope="session")
def _store_template(tmp_path_factory, doc_bundle, doc_analysis):
    universe, graph, blobs = doc_analysis
    root = tmp_path_factory.mktemp("store-template")
    store = Store(root)
    store.register_app(doc_bundle.app_id, doc_bundle.name, doc_bundle.version)
    for digest in blobs.hashes():
        store.put_blob(blobs.get_blob(digest))
    store.save_analysis(doc_bundle.app_id, universe, graph)
    return root


@pytest.fixture()
def doc_store(tmp_path, _store_template):
    """A fresh store per test, preloaded with the fixture app's analysis."""
    root = tmp_path / "store"
    shutil.copytree(_store_template, root)
    return Store(root)


@pytest.fixture()
def doc_engine(doc_analysis):
    universe, graph, _ = doc_analysis
    return AutocompleteEngine(universe, graph)


@pytest.fixture()
def metadata():
    return dict(SESSION_METADATA)
