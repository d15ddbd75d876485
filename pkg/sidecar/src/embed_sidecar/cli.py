"""Command-line entry points for the embedding sidecar."""

from __future__ import annotations

import sys

import click

from .app import DEFAULT_BATCH_CAP, create_app
from .cache import CacheBuildError, build_cache
from .encoder import make_encoder


@click.group()
def main():
    """HTTP sidecar serving sentence embeddings."""


@main.command("serve")
@click.option("--model", required=True,
              help="sentence-transformers model name, or hash[:dim] for the "
                   "deterministic stub")
@click.option("--port", default=8100, type=int)
@click.option("--host", default="127.0.0.1")
@click.option("--batch-cap", default=DEFAULT_BATCH_CAP, type=int)
def serve_cmd(model, port, host, batch_cap):
    """Run the embedding service."""
    import uvicorn

    app = create_app(make_encoder(model), batch_cap=batch_cap)
    uvicorn.run(app, host=host, port=port, log_level="info")


@main.command("cache")
@click.option("--dataset", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--endpoint", required=True)
@click.option("--max-length", default=256, type=int)
@click.option("--batch", default=DEFAULT_BATCH_CAP, type=int)
def cache_cmd(dataset, out_path, endpoint, max_length, batch):
    """Build a ZGEMB1 embedding cache for one dataset directory."""
    try:
        path = build_cache(dataset, out_path, endpoint,
                           max_length=max_length, batch=batch)
    except (CacheBuildError, OSError, KeyError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(f"cache written to {path}")


if __name__ == "__main__":
    main()
