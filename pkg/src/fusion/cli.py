"""Batch command line for the analysis pipeline and the report service.

Exit codes: 0 ok, 2 validation problem, 3 replay divergence, 4 not found.
"""

from __future__ import annotations

import functools
import sys
from pathlib import Path

import click

from .autocomplete import AutocompleteEngine
from .errors import (
    BundleFormatError,
    FusionError,
    GapError,
    ModelFormatError,
    NotFoundError,
    ParseError,
    ReplayDivergenceError,
    ValidationError,
)
from .explorer import ExploreConfig, augment_universe, explore
from .primer import extract_components_with_report, parse_app_bundle
from .report import BugReport, data_uri_blob_src, render_html, render_text, replay, to_replay_script
from .simdevice import SimulatedDevice, load_app_model
from .store import Store

EXIT_VALIDATION = 2
EXIT_DIVERGENCE = 3
EXIT_NOT_FOUND = 4

_VALIDATION_ERRORS = (ValidationError, BundleFormatError, ParseError, ModelFormatError, GapError)


def _cli_errors(func):
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except _VALIDATION_ERRORS as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_VALIDATION)
        except ReplayDivergenceError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_DIVERGENCE)
        except NotFoundError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_NOT_FOUND)
        except FusionError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)

    return wrapper


@click.group()
def main():
    """Mine a GUI event-flow model and auto-complete bug reproduction steps."""


store_option = click.option(
    "--store", "store_dir", required=True, type=click.Path(file_okay=False),
    help="Store directory."
)


@main.command()
@click.option("--bundle", "bundle_dir", required=True, type=click.Path(exists=True, file_okay=False))
@store_option
@_cli_errors
def prime(bundle_dir, store_dir):
    """Statically analyze an app bundle into its component universe."""
    bundle = parse_app_bundle(bundle_dir)
    universe, parse_report = extract_components_with_report(bundle)
    store = Store(store_dir)
    store.register_app(bundle.app_id, bundle.name, bundle.version)
    store.save_universe(bundle.app_id, universe)
    click.echo(
        f"{bundle.app_id}: {len(universe.descriptors)} components across "
        f"{len(bundle.activity_layouts)} activities "
        f"({parse_report.skipped_without_id} elements without ids skipped)"
    )
    if parse_report.unmatched_source_ids:
        click.echo(
            "source_index entries with no layout element: "
            + ", ".join(parse_report.unmatched_source_ids)
        )


@main.command("explore")
@click.option("--bundle", "bundle_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--model", "model_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--store", "--out", "store_dir", required=True, type=click.Path(file_okay=False))
@click.option("--max-steps", type=int, default=10000, show_default=True)
@click.option("--max-relaunches", type=int, default=100, show_default=True)
@_cli_errors
def explore_cmd(bundle_dir, model_file, store_dir, max_steps, max_relaunches):
    """Dynamically explore the app model and store the event-flow graph."""
    bundle = parse_app_bundle(bundle_dir)
    universe = extract_components_with_report(bundle)[0]
    model = load_app_model(model_file)
    if model.app_id != bundle.app_id:
        raise ValidationError(
            f"model is for {model.app_id!r} but bundle is {bundle.app_id!r}"
        )
    store = Store(store_dir)
    store.register_app(bundle.app_id, bundle.name, bundle.version)
    driver = SimulatedDevice(model)
    config = ExploreConfig(max_steps=max_steps, max_relaunches=max_relaunches)
    graph = explore(driver, universe, store, config)
    universe = augment_universe(universe, graph)
    store.save_analysis(bundle.app_id, universe, graph)
    flag = " (truncated)" if graph.truncated else ""
    click.echo(
        f"{bundle.app_id}: {len(graph.screens)} screens, {len(graph.edges)} edges, "
        f"{len(graph.trace)} trace steps{flag}"
    )


@main.command()
@store_option
@_cli_errors
def apps(store_dir):
    """List registered apps and their analysis status."""
    for info in Store(store_dir).list_apps():
        status = "analyzed" if info["analyzed"] else "primed"
        click.echo(f"{info['app_id']}\t{info['name']}\t{info['version']}\t{status}")


@main.command()
@click.option("--app", "app_id", required=True)
@click.option("--report", "report_id", required=True, type=int)
@store_option
@click.option("--out", "out_file", required=True, type=click.Path(dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["html", "text"]), default="html",
              show_default=True)
@_cli_errors
def render(app_id, report_id, store_dir, out_file, fmt):
    """Render a stored report to a self-contained HTML page or plain text."""
    store = Store(store_dir)
    report = BugReport.from_dict(store.load_report(app_id, report_id))
    universe, graph = store.load_analysis(app_id)
    if fmt == "html":
        page = render_html(report, universe, graph, blob_src=data_uri_blob_src(store))
    else:
        page = render_text(report, universe, graph)
    Path(out_file).write_text(page, encoding="utf-8")
    click.echo(f"wrote {out_file}")


@main.command("replay")
@click.option("--app", "app_id", required=True)
@click.option("--report", "report_id", required=True, type=int)
@click.option("--model", "model_file", required=True, type=click.Path(exists=True, dir_okay=False))
@store_option
@_cli_errors
def replay_cmd(app_id, report_id, model_file, store_dir):
    """Replay a gap-free report's script against an app model."""
    store = Store(store_dir)
    report = BugReport.from_dict(store.load_report(app_id, report_id))
    _, graph = store.load_analysis(app_id)
    script = to_replay_script(report)
    driver = SimulatedDevice(load_app_model(model_file))
    result = replay(script, driver, graph)
    if result.success:
        click.echo(f"report {report_id}: replayed {len(script.entries)} steps successfully")
    else:
        click.echo(
            f"report {report_id}: diverged at step {result.step_num} "
            f"(expected {result.expected}, observed {result.observed})",
            err=True,
        )
        sys.exit(EXIT_DIVERGENCE)


@main.command()
@store_option
@click.option("--addr", default="127.0.0.1:8000", show_default=True,
              help="host:port to bind.")
@click.option("--ui", "ui_dir", type=click.Path(file_okay=False), default=None,
              help="Static frontend bundle to serve at /.")
@_cli_errors
def serve(store_dir, addr, ui_dir):
    """Run the report-generator HTTP service."""
    import uvicorn

    from .service import create_app

    host, _, port = addr.partition(":")
    app = create_app(Store(store_dir), ui_dir=ui_dir)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or "8000"), log_level="info")


# referenced by tests that build sessions against a store without the service
def engine_for(store: Store, app_id: str) -> AutocompleteEngine:
    universe, graph = store.load_analysis(app_id)
    return AutocompleteEngine(universe, graph)


if __name__ == "__main__":
    main()
