"""Command-line entry points: run experiments, serve sessions, capacities.

Configuration failures exit with status 2 and a machine-readable JSON
error document on stderr.
"""

from __future__ import annotations

import json
import os
import sys

import click
import numpy as np

from . import experiments
from .channels import DmcKernel, channel_from_config
from .errors import BadParam, PmLabError


def _fail(exc: PmLabError):
    doc = {"error": {"type": type(exc).__name__, "message": str(exc)}}
    click.echo(json.dumps(doc), err=True)
    sys.exit(2)


@click.group()
def main():
    """Feedback-communication laboratory: experiments and live sessions."""


@main.command()
@click.argument("config_path", type=click.Path())
@click.option("--out", "-o", default=None,
              help="Output directory (default: runs/<name>).")
def run(config_path, out):
    """Run the experiment described by a JSON config file."""
    try:
        config = experiments.load_config(config_path)
        cfg = experiments.validate_config(config)
        out_dir = out if out is not None else os.path.join("runs", cfg["name"])
        summary = experiments.run_experiment(config, out_dir)
    except PmLabError as exc:
        _fail(exc)
    click.echo(json.dumps(summary, indent=2, sort_keys=True))


@main.command()
@click.option("--port", default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--channel", "channel_spec", default=None,
              help="Default channel for new sessions (JSON or type:param).")
@click.option("--flavor", default=None,
              help="Default transport flavor for new sessions.")
def serve(port, host, channel_spec, flavor):
    """Serve interactive sessions over HTTP."""
    import uvicorn

    from .service import create_app

    default_channel = None
    try:
        if channel_spec is not None:
            default_channel = _parse_channel_spec(channel_spec)
            channel_from_config(default_channel)
    except PmLabError as exc:
        _fail(exc)
    app = create_app(default_channel=default_channel, default_flavor=flavor)
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command()
@click.argument("spec")
def capacity(spec):
    """Channel capacity in bits per use.

    SPEC is a channel description: a JSON object (e.g.
    '{"type": "bsc", "p": 0.2}') or shorthand type:param
    (bsc:0.2, qsc:0.3, awgn:1.0).
    """
    try:
        cfg = _parse_channel_spec(spec)
        channel = channel_from_config(cfg)
        report = experiments.channel_capacity(channel)
    except PmLabError as exc:
        _fail(exc)
    doc = {"channel": cfg, "capacity_bits": float(report.capacity_bits)}
    px = report.input_distribution
    if isinstance(channel, DmcKernel):
        doc["input_distribution"] = [float(p) for p in np.asarray(px)]
    click.echo(json.dumps(doc, indent=2))


def _parse_channel_spec(spec: str) -> dict:
    spec = spec.strip()
    if spec.startswith("{"):
        try:
            return json.loads(spec)
        except json.JSONDecodeError as exc:
            raise BadParam(f"channel spec is not valid JSON: {exc}") from exc
    kind, sep, arg = spec.partition(":")
    if not sep:
        raise BadParam("channel spec must be JSON or type:param shorthand")
    try:
        value = float(arg)
    except ValueError as exc:
        raise BadParam(f"channel parameter {arg!r} is not a number") from exc
    key = {"bsc": "p", "qsc": "p", "awgn": "snr"}.get(kind)
    if key is None:
        raise BadParam(f"shorthand supports bsc/qsc/awgn, not {kind!r}")
    return {"type": kind, key: value}


if __name__ == "__main__":
    main()
