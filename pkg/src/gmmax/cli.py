"""Thin command-line client for the gmmax service.

Commands talk HTTP to either an in-process app instance (default) or a
running server (--server http://host:port). Exit codes: 0 success, 1
config/argument errors, 2 solver non-convergence in theory solves.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

EXIT_CONFIG = 1
EXIT_SOLVER = 2


def _client(server: str | None):
    if server:
        import httpx

        return httpx.Client(base_url=server, timeout=None)
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DeprecationWarning)
        from fastapi.testclient import TestClient

    from .service import create_app

    return TestClient(create_app())


def _post(client, path: str, payload) -> dict:
    resp = client.post(path, json=payload)
    if resp.status_code == 409:
        click.echo(f"solver error: {resp.json().get('detail')}", err=True)
        sys.exit(EXIT_SOLVER)
    if resp.status_code >= 400:
        try:
            detail = resp.json().get("detail")
        except Exception:
            detail = resp.text
        click.echo(f"request rejected: {detail}", err=True)
        sys.exit(EXIT_CONFIG)
    return resp.json()


@click.group()
def main():
    """Asymptotic predictions and experiments for generalized margin maximizers."""


@main.group()
def theory():
    """Theory-side computations (phase transition, fixed-point solves)."""


@theory.command("delta-star")
@click.option("--kappa", type=float, required=True)
@click.option("--link", type=click.Choice(["std", "fig1"]), default="std")
@click.option("--server", default=None, help="Remote service URL (default: in-process).")
def theory_delta_star(kappa, link, server):
    """Separability threshold delta_star(kappa)."""
    if kappa < 0:
        click.echo("kappa must be >= 0", err=True)
        sys.exit(EXIT_CONFIG)
    with _client(server) as client:
        out = _post(client, "/theory/delta-star", {"kappa": kappa, "link": link})
    click.echo(json.dumps(out, indent=2))


@theory.command("solve")
@click.option("--potential", type=click.Choice(["l1", "l2", "linf"]), required=True)
@click.option("--kappa", type=float, required=True)
@click.option("--delta", type=float, required=True)
@click.option("--sparsity", type=float, default=1.0)
@click.option("--prior", type=click.Choice(["gaussian", "sparse", "binary"]), default="gaussian")
@click.option("--link", type=click.Choice(["std", "fig1"]), default="std")
@click.option("--server", default=None)
def theory_solve(potential, kappa, delta, sparsity, prior, link, server):
    """Solve the nonlinear system and report predicted performance."""
    payload = {
        "potential": potential, "kappa": kappa, "delta": delta,
        "sparsity": sparsity, "prior": prior, "link": link,
    }
    with _client(server) as client:
        out = _post(client, "/theory/solve", payload)
    click.echo(json.dumps(out, indent=2))


@main.group()
def experiment():
    """Monte Carlo experiment runner."""


@experiment.command("run")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="JSON experiment config.")
@click.option("--preset", type=click.Choice(["fig1", "fig2", "fig3", "fig4"]), default=None)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
@click.option("--workers", type=int, default=None, help="Trial concurrency override.")
@click.option("--trials", type=int, default=None, help="Trial count override.")
@click.option("--p", "p_dim", type=int, default=None, help="Dimension override.")
@click.option("--server", default=None)
def experiment_run(config_path, preset, out_dir, workers, trials, p_dim, server):
    """Run an experiment and write <out>/<experiment>.csv + .meta.json."""
    from .experiments import PRESETS, ExperimentConfig

    if (config_path is None) == (preset is None):
        click.echo("exactly one of --config or --preset is required", err=True)
        sys.exit(EXIT_CONFIG)
    if config_path:
        try:
            payload = json.loads(Path(config_path).read_text())
        except json.JSONDecodeError as exc:
            click.echo(f"config is not valid JSON: {exc}", err=True)
            sys.exit(EXIT_CONFIG)
    else:
        payload = dict(PRESETS[preset])
    for key, value in (("workers", workers), ("trials", trials), ("p", p_dim)):
        if value is not None:
            payload[key] = value
    try:
        config = ExperimentConfig(**payload)
    except Exception as exc:
        click.echo(f"invalid config: {exc}", err=True)
        sys.exit(EXIT_CONFIG)

    with _client(server) as client:
        out = _post(client, "/experiment/run", config.model_dump())

    from .experiments import ResultRow, write_outputs

    rows = [ResultRow(**row) for row in out["rows"]]
    try:
        csv_path, meta_path = write_outputs(rows, out["meta"], out_dir,
                                            config.experiment)
    except OSError as exc:
        click.echo(f"cannot write outputs: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    click.echo(f"wrote {csv_path} and {meta_path}")


@main.command("check")
@click.argument("suite", type=click.Choice(["prox", "moreau", "c-functional"]))
@click.option("--server", default=None)
def check(suite, server):
    """Run a property suite; nonzero exit on any failure."""
    with _client(server) as client:
        out = _post(client, f"/check/{suite}", None)
    click.echo(json.dumps(out, indent=2))
    if out["failed"]:
        sys.exit(EXIT_CONFIG)


@main.command("serve")
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
def serve(host, port):
    """Start the HTTP service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
