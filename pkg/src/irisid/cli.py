"""Operator CLI.

Exit codes: 0 success/accepted, 1 rejected or no match, 2 usage error,
3 internal error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import pipeline
from .dispatcher import Dispatcher
from .errors import IrisIdError, NotFoundError, PeriodError, PinFormatError
from .gateway import Gateway, VerifyRequest
from .imaging import read_ppm
from .matching import GaConfig
from .pipeline import WeightsBundle
from .store import Store


def _load_gateway(store_path, weights_path) -> Gateway:
    store = Store(store_path)
    bundle = WeightsBundle.load(weights_path)
    log_path = Path(store_path).with_suffix(".events.ndjson")
    return Gateway(store, Dispatcher(log_path), bundle)


store_opt = click.option("--store", "store_path", envvar="IRIS_STORE_PATH",
                         default="iris.store", show_default=True)
weights_opt = click.option("--weights", "weights_path", envvar="IRIS_WEIGHTS_PATH",
                           default="iris.weights.json", show_default=True)


@click.group()
def main():
    """Iris identification system: enrollment, verification, reporting."""


@main.command()
@store_opt
@weights_opt
@click.argument("subject_id")
@click.argument("display_name")
@click.argument("pin")
@click.argument("images", nargs=-1, required=True, type=click.Path(exists=True))
def enroll(store_path, weights_path, subject_id, display_name, pin, images):
    """Register SUBJECT_ID with a five-digit PIN and >= 3 eye images."""
    try:
        gw = _load_gateway(store_path, weights_path)
        rec = gw.run_enroll(subject_id, display_name, pin, [read_ppm(p) for p in images])
    except PinFormatError as e:
        click.echo(f"PinFormatError: {e}", err=True)
        sys.exit(2)
    except IrisIdError as e:
        click.echo(f"{type(e).__name__}: {e}", err=True)
        sys.exit(1)
    click.echo(json.dumps({"subject_id": rec.subject_id, "templates": len(rec.templates)}))


@main.command()
@store_opt
@weights_opt
@click.argument("subject_id")
@click.argument("pin")
@click.argument("image", type=click.Path(exists=True))
@click.option("--door", default="main")
def verify(store_path, weights_path, subject_id, pin, image, door):
    """Two-factor check: PIN first, then the iris."""
    try:
        from .store import validate_pin
        validate_pin(pin)
    except PinFormatError as e:
        click.echo(f"PinFormatError: {e}", err=True)
        sys.exit(2)
    try:
        gw = _load_gateway(store_path, weights_path)
        decision = gw.run_verify(VerifyRequest(subject_id, pin, read_ppm(image)), door)
    except NotFoundError as e:
        click.echo(f"NotFoundError: {e}", err=True)
        sys.exit(1)
    except IrisIdError as e:
        click.echo(f"{type(e).__name__}: {e}", err=True)
        sys.exit(3)
    click.echo(json.dumps(decision.to_dict()))
    sys.exit(0 if decision.accepted else 1)


@main.command()
@store_opt
@weights_opt
@click.argument("image", type=click.Path(exists=True))
@click.option("--door", default="main")
def identify(store_path, weights_path, image, door):
    """Search the whole store for the probe image."""
    try:
        gw = _load_gateway(store_path, weights_path)
        result = gw.run_identify(read_ppm(image), door)
    except IrisIdError as e:
        click.echo(f"{type(e).__name__}: {e}", err=True)
        sys.exit(3)
    click.echo(json.dumps(result.to_dict()))
    sys.exit(0 if result.subject_id else 1)


@main.command()
@store_opt
@click.option("--from", "t_from", type=float, required=True)
@click.option("--to", "t_to", type=float, required=True)
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json")
def report(store_path, t_from, t_to, fmt):
    """Status report over [from, to)."""
    log_path = Path(store_path).with_suffix(".events.ndjson")
    try:
        rep = Dispatcher(log_path).build_report(t_from, t_to)
    except PeriodError as e:
        click.echo(f"PeriodError: {e}", err=True)
        sys.exit(2)
    click.echo(rep.to_csv() if fmt == "csv" else json.dumps(rep.to_dict()))


@main.command()
@click.argument("out_dir", type=click.Path())
@click.option("-n", "--subjects", default=50, show_default=True)
@click.option("-m", "--images-per-subject", default=10, show_default=True)
@click.option("--seed", default=7, show_default=True)
@click.option("--noise-sigma", default=4.0, show_default=True)
def simulate(out_dir, subjects, images_per_subject, seed, noise_sigma):
    """Generate a synthetic eye corpus (PPM files + manifest)."""
    path = pipeline.simulate_corpus(out_dir, subjects, images_per_subject, seed, noise_sigma)
    click.echo(json.dumps({"corpus": str(path),
                           "images": subjects * images_per_subject}))


@main.command()
@weights_opt
@click.argument("corpus_dir", type=click.Path(exists=True))
@click.option("--ga-config", type=click.Path(exists=True),
              help="GaConfig JSON; defaults are used when omitted.")
@click.option("--roc-csv", type=click.Path(), help="Write the GA trace CSV here.")
def tune(weights_path, corpus_dir, ga_config, roc_csv):
    """Train the selector and GA-tune match weights on a corpus."""
    cfg = GaConfig.from_json(Path(ga_config).read_text()) if ga_config else GaConfig()
    try:
        result = pipeline.tune(pipeline.load_corpus(corpus_dir), cfg)
    except IrisIdError as e:
        click.echo(f"{type(e).__name__}: {e}", err=True)
        sys.exit(3)
    result.bundle.save(weights_path)
    if roc_csv:
        Path(roc_csv).write_text(result.trace.to_csv())
    click.echo(json.dumps({"weights": str(weights_path),
                           "train_far": result.far, "train_frr": result.frr}))


@main.command()
@store_opt
@weights_opt
@click.option("--port", envvar="IRIS_PORT", default=8400, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
def serve(store_path, weights_path, port, host):
    """Start the HTTP gateway service."""
    import uvicorn

    from .service import create_app

    app = create_app(_load_gateway(store_path, weights_path))
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
