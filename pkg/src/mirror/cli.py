"""Command line entry points.

    mirror ingest --platform auto --tz Asia/Tokyo exports/*.json
    mirror layout --store ./data --dataset <id> --kind axes --x gaming --y music
    mirror serve --store ./data --port 8400
    mirror delete <id> --store ./data
    mirror gc --store ./data
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .config import DatasetConfig
from .ingestion import ExportBundle, detect_platform, parse_bundle
from .model import Platform
from .pipeline import PipelineContext, ingest_and_run
from .store import DatasetStore


@click.group()
def main():
    """Turn watch-history exports into an explorable semantic map."""


@main.command()
@click.argument("paths", nargs=-1, required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--platform", default="auto",
              type=click.Choice(["auto", "youtube", "netflix", "tiktok"]))
@click.option("--tz", "timezone_name", default="UTC", help="IANA timezone for date-only rows")
@click.option("--day-first/--month-first", default=True, help="Netflix date order")
@click.option("--include-ads/--no-ads", default=True)
@click.option("--store", "store_dir", type=click.Path(path_type=Path), default=None,
              help="Run the full offline pipeline into this dataset store")
@click.option("--out", type=click.Path(path_type=Path), default=None,
              help="Write normalized events JSON here (default: stdout)")
def ingest(paths, platform, timezone_name, day_first, include_ads, store_dir, out):
    """Parse export files into normalized events (optionally run the pipeline)."""
    config = DatasetConfig(timezone=timezone_name, day_first_dates=day_first,
                           include_ads=include_ads)
    files = [(p.name, p.read_bytes()) for p in paths]

    if store_dir is not None:
        ctx = PipelineContext(store=DatasetStore(store_dir), config=config)
        dataset_id = ingest_and_run(ctx, files)
        click.echo(f"dataset {dataset_id} ready in {store_dir}")
        return

    if platform == "auto":
        detected = detect_platform(files)
    else:
        detected = Platform(platform)
    bundle = ExportBundle(platform=detected, files=files)
    events, report = parse_bundle(bundle, config)
    payload = json.dumps([e.to_dict() for e in events], indent=2)
    if out:
        out.write_text(payload)
    else:
        click.echo(payload)
    click.echo(f"parsed {report.events_parsed} events, skipped {report.rows_skipped} "
               f"({dict(report.skip_reasons)})", err=True)


@main.command()
@click.option("--store", "store_dir", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--dataset", "dataset_id", required=True)
@click.option("--kind", type=click.Choice(["semantic_map", "grid", "axes"]), required=True)
@click.option("--x", "x_concept", default="", help="x-axis concept (axes layout)")
@click.option("--y", "y_concept", default="", help="y-axis concept (axes layout)")
@click.option("--time-x", is_flag=True, help="map the x axis to watch time")
@click.option("--seed", type=int, default=None, help="layout seed override")
def layout(store_dir, dataset_id, kind, x_concept, y_concept, time_x, seed):
    """Compute an additional layout for a finished dataset."""
    from .server import _compute_alt_layout

    store = DatasetStore(store_dir)
    config = DatasetConfig.from_dict(store.get(dataset_id).config)
    if seed is not None:
        config = DatasetConfig.from_dict({**config.to_dict(), "layout_seed": seed})
    ctx = PipelineContext(store=store, config=config)
    kind_full = "semantic_axes" if kind == "axes" else kind
    if kind_full == "semantic_axes" and not ((x_concept or time_x) and y_concept):
        raise click.UsageError("axes layout needs --x (or --time-x) and --y")
    if kind == "axes":
        import hashlib

        digest = json.dumps([x_concept, y_concept, time_x], sort_keys=True)
        layout_id = "axes-" + hashlib.sha256(digest.encode()).hexdigest()[:8]
    else:
        layout_id = kind
    result = _compute_alt_layout(ctx, dataset_id, kind_full, layout_id,
                                 x_concept, y_concept, time_x)
    store.put_artifact(dataset_id, f"layouts/{layout_id}.json",
                       json.dumps(result.to_dict()).encode())
    click.echo(f"layout {layout_id} written ({len(result.points)} points)")


@main.command()
@click.option("--store", "store_dir", type=click.Path(path_type=Path), required=True)
@click.option("--host", default=None, help="bind address (env: MIRROR_HOST)")
@click.option("--port", default=None, type=int, help="port (env: MIRROR_PORT)")
@click.option("--config", "config_path", type=click.Path(exists=True, path_type=Path),
              default=None, help="JSON file of dataset config overrides")
def serve(store_dir, host, port, config_path):
    """Run the HTTP API (providers and limits configured via env/config)."""
    import os

    import uvicorn

    from .embed import embedder_from_env
    from .enrichment import providers_from_env
    from .server import create_app

    overrides = json.loads(config_path.read_text()) if config_path else {}
    if "MIRROR_MAX_UPLOAD_BYTES" in os.environ:
        overrides.setdefault("max_upload_bytes", int(os.environ["MIRROR_MAX_UPLOAD_BYTES"]))
    config = DatasetConfig.from_dict({**DatasetConfig().to_dict(), **overrides})
    ctx = PipelineContext(store=DatasetStore(store_dir), config=config,
                          providers=providers_from_env(),
                          embedder=embedder_from_env(default_dim=config.embedding_dim,
                                                     default_seed=config.embedding_seed))
    host = host or os.environ.get("MIRROR_HOST", "127.0.0.1")
    port = port or int(os.environ.get("MIRROR_PORT", "8400"))
    uvicorn.run(create_app(store_dir, ctx=ctx), host=host, port=port)


@main.command()
@click.argument("dataset_id")
@click.option("--store", "store_dir", type=click.Path(exists=True, path_type=Path), required=True)
def delete(dataset_id, store_dir):
    """Remove every artifact of a dataset."""
    DatasetStore(store_dir).delete_dataset(dataset_id)
    click.echo(f"deleted {dataset_id}")


@main.command()
@click.option("--store", "store_dir", type=click.Path(exists=True, path_type=Path), required=True)
def gc(store_dir):
    """Clean temp files and stale locks in the store."""
    removed = DatasetStore(store_dir).gc()
    click.echo(f"removed {len(removed)} stale files")


if __name__ == "__main__":
    sys.exit(main())
