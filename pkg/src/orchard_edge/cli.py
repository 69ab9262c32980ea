"""Command-line entry points: serve, simulate-device, evaluate."""

import json
import logging
import sys

import click

from .errors import PipelineError


@click.group()
def main():
    """Edge orchard-monitoring pipeline."""
    logging.basicConfig(level=logging.INFO,
                        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--bind", default=None, help="host:port (default 127.0.0.1:8080)")
@click.option("--db-path", default=None)
@click.option("--data-dir", default=None)
@click.option("--stub", is_flag=True, help="force stub backends for every slot")
@click.option("--altitude-threshold", type=float, default=None)
@click.option("--default-task", default=None,
              type=click.Choice(["leaf_disease", "freshness", "apple_detection"]))
def serve(config_path, bind, db_path, data_dir, stub, altitude_threshold, default_task):
    """Run the ingestion + inference service."""
    from .config import load_config
    from .service import serve as run_service

    cfg = load_config(config_path, bind=bind, db_path=db_path, data_dir=data_dir,
                      stub=stub, altitude_threshold=altitude_threshold,
                      default_task=default_task)
    run_service(cfg)


@main.command("simulate-device")
@click.option("--dir", "directory", required=True, type=click.Path(exists=True))
@click.option("--rate", type=float, default=10.0, help="uploads per second")
@click.option("--url", default="http://127.0.0.1:8080/api/v1/ingest")
@click.option("--meta", "meta_kv", multiple=True,
              help="template override, e.g. --meta frame_kind=leaf_closeup")
@click.option("--device-id", default="sim-01")
def simulate_device_cmd(directory, rate, url, meta_kv, device_id):
    """Upload a directory of images as an emulated camera device."""
    from .simulate import simulate_device

    template = {}
    for kv in meta_kv:
        key, _, value = kv.partition("=")
        try:
            template[key] = json.loads(value)
        except json.JSONDecodeError:
            template[key] = value
    failures = simulate_device(directory, rate, url, meta_template=template,
                               device_id=device_id)
    sys.exit(1 if failures else 0)


@main.command()
@click.option("--task", required=True,
              type=click.Choice(["leaf_disease", "freshness", "apple_detection"]))
@click.option("--gt", "gt_path", required=True, type=click.Path(exists=True))
@click.option("--pred", "pred_path", required=True, type=click.Path(exists=True))
def evaluate(task, gt_path, pred_path):
    """Compute the performance-table metrics for one task's dump."""
    from .evaluate import evaluate as run_eval

    try:
        report = run_eval(gt_path, pred_path, task)
    except PipelineError as e:
        click.echo(f"error: {e.code}: {e.detail}", err=True)
        sys.exit(1)
    click.echo(json.dumps(report, indent=2))


if __name__ == "__main__":
    main()
