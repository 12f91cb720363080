"""Thin command-line client for the vidshield service.

Every subcommand builds a request, sends it to the service and prints the
JSON response. By default the service runs in-process (no server needed);
pass --server URL (or set VIDSHIELD_SERVER) to talk to a remote instance.
"""

from __future__ import annotations

import json
import os
import sys

import click
import httpx

SERVER_ENV = "VIDSHIELD_SERVER"

CONFIG_KEYS = (
    "gamma1",
    "gamma2",
    "motion_block",
    "search_range",
    "dct_block",
    "quant_step",
    "residual_mode",
    "denoiser",
    "oracle_tau",
    "oracle_seed",
)


def _client(server: str | None) -> httpx.Client:
    server = server or os.environ.get(SERVER_ENV)
    if server:
        return httpx.Client(base_url=server, timeout=600.0)
    # Deferred so remote use pays no fastapi import cost. TestClient is an
    # httpx.Client subclass that drives the ASGI app synchronously in-process.
    from fastapi.testclient import TestClient

    from .service import app

    return TestClient(app)


def _post(ctx: click.Context, endpoint: str, payload: dict) -> None:
    with _client(ctx.obj.get("server")) as client:
        resp = client.post(endpoint, json=payload)
    if resp.status_code != 200:
        try:
            detail = resp.json().get("detail", resp.text)
        except ValueError:
            detail = resp.text
        click.echo(f"error: {detail}", err=True)
        sys.exit(1)
    click.echo(json.dumps(resp.json(), indent=2))


def _config_payload(config_path: str | None, overrides: dict) -> dict:
    payload = {k: v for k, v in overrides.items() if v is not None}
    if config_path:
        payload["config_path"] = config_path
    return payload


def _config_options(fn):
    fn = click.option("--config", "config_path", type=click.Path(), default=None,
                      help="Flat key=value config file.")(fn)
    for key in reversed(CONFIG_KEYS):
        fn = click.option(f"--{key.replace('_', '-')}", key, default=None,
                          help=f"Override config key {key}.")(fn)
    return fn


@click.group()
@click.option("--server", default=None,
              help="Base URL of a running vidshield service; default in-process.")
@click.pass_context
def main(ctx: click.Context, server: str | None) -> None:
    """Adversarial video detection and purification toolkit."""
    ctx.ensure_object(dict)
    ctx.obj["server"] = server


@main.command()
@click.argument("clip_dir", type=click.Path())
@click.option("--labels", required=True, type=click.Path(),
              help="JSONL per-frame label stream.")
@_config_options
@click.pass_context
def detect(ctx, clip_dir, labels, config_path, **overrides):
    """Compute the exception index and verdict for a clip."""
    _post(ctx, "/detect", {
        "clip_dir": clip_dir,
        "labels_path": labels,
        "config": _config_payload(config_path, overrides),
    })


@main.command()
@click.argument("clip_dir", type=click.Path())
@click.option("--labels", required=True, type=click.Path())
@click.option("--out", "out_dir", required=True, type=click.Path(),
              help="Directory for the purified clip.")
@click.option("--clean", "clean_dir", default=None, type=click.Path(),
              help="Clean reference clip for MSE/accuracy columns.")
@click.option("--true-label", default=None, type=int,
              help="True class label, enables oracle accuracy columns.")
@_config_options
@click.pass_context
def defend(ctx, clip_dir, labels, out_dir, clean_dir, true_label,
           config_path, **overrides):
    """Detect and purify a clip, writing the defended frames to --out."""
    _post(ctx, "/defend", {
        "clip_dir": clip_dir,
        "labels_path": labels,
        "out_dir": out_dir,
        "clean_dir": clean_dir,
        "true_label": true_label,
        "config": _config_payload(config_path, overrides),
    })


@main.command()
@click.option("--manifest", required=True, type=click.Path(),
              help="JSONL corpus manifest.")
@click.option("--candidates", default=None,
              help="Comma-separated candidate thresholds.")
@_config_options
@click.pass_context
def calibrate(ctx, manifest, candidates, config_path, **overrides):
    """Calibrate (gamma1, gamma2) by F1 sweeps over a corpus."""
    payload = {
        "manifest_path": manifest,
        "config": _config_payload(config_path, overrides),
    }
    if candidates:
        payload["candidates"] = [float(c) for c in candidates.split(",")]
    _post(ctx, "/calibrate", payload)


@main.command()
@click.option("--kind", required=True, type=click.Choice(["sparse", "dense"]))
@click.option("--epsilon", default=8, type=int,
              help="Max per-pixel perturbation magnitude.")
@click.option("--frames", default=1, type=int,
              help="Attacked frame count (sparse only).")
@click.option("--seed", default=0, type=int)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--clean-out", "clean_dir", default=None, type=click.Path(),
              help="Where to write the clean twin (default <out>_clean).")
@click.option("--frame-count", default=16, type=int)
@click.option("--width", default=64, type=int)
@click.option("--height", default=64, type=int)
@click.option("--label", default=None, type=int)
@click.pass_context
def simulate(ctx, kind, epsilon, frames, seed, out_dir, clean_dir,
             frame_count, width, height, label):
    """Generate a seeded synthetic attacked clip; prints its manifest row."""
    _post(ctx, "/simulate", {
        "kind": kind,
        "epsilon": epsilon,
        "frames": frames,
        "seed": seed,
        "out_dir": out_dir,
        "clean_dir": clean_dir,
        "frame_count": frame_count,
        "width": width,
        "height": height,
        "label": label,
    })


@main.command()
@click.option("--manifest", required=True, type=click.Path())
@click.option("--report", "report_path", default=None, type=click.Path(),
              help="Also write the JSON report to this file.")
@_config_options
@click.pass_context
def evaluate(ctx, manifest, report_path, config_path, **overrides):
    """Run all ablation arms over a corpus and report accuracies."""
    _post(ctx, "/evaluate", {
        "manifest_path": manifest,
        "report_path": report_path,
        "config": _config_payload(config_path, overrides),
    })


@main.command()
@click.option("--samples", required=True, type=click.Path(),
              help='JSONL of {"score": <float>, "positive": <bool>}.')
@click.pass_context
def roc(ctx, samples):
    """ROC curve and AUC for a scored sample file."""
    _post(ctx, "/roc", {"samples_path": samples})


if __name__ == "__main__":
    main()
