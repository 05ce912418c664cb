"""Command-line front end.

Every command is a thin client of the HTTP service: it loads and validates
the scenario config locally, sends one request, and writes the returned text
artifact. By default the service app is driven in-process (no socket, no
server to start); ``--server URL`` switches to a remote instance. Exit codes:
0 ok, 2 config error, 3 enumeration/search budget exceeded, 1 anything else.
"""

from __future__ import annotations

import asyncio
import pathlib
import sys

import click
import httpx

from .scenario import ConfigError, preset_scenario, scenario_from_yaml
from .service.app import app as service_app

_EXIT_CONFIG = 2
_EXIT_BUDGET = 3


def _post(server: str | None, route: str, payload: dict):
    if server:
        with httpx.Client(base_url=server, timeout=None) as client:
            resp = client.post(route, json=payload)
            return resp.status_code, resp.json()

    async def call():
        transport = httpx.ASGITransport(app=service_app)
        async with httpx.AsyncClient(transport=transport,
                                     base_url="http://mobicache") as client:
            resp = await client.post(route, json=payload)
            return resp.status_code, resp.json()

    return asyncio.run(call())


def _request(server: str | None, route: str, payload: dict) -> dict:
    """POST and return the response body, exiting on service errors."""
    status, body = _post(server, route, payload)
    if status == 200:
        return body
    if isinstance(body, dict) and "error" in body:
        err = body["error"]
        click.echo(f"error: {err['message']}", err=True)
        code = _EXIT_BUDGET if err.get("code") == "budget" else _EXIT_CONFIG
        sys.exit(code)
    if status == 422:
        # FastAPI's own request-validation envelope.
        for item in body.get("detail", []):
            loc = ".".join(str(p) for p in item.get("loc", []))
            click.echo(f"error: {loc}: {item.get('msg')}", err=True)
        sys.exit(_EXIT_CONFIG)
    click.echo(f"error: service returned status {status}", err=True)
    sys.exit(1)


def _load_scenario(config_path: str) -> dict:
    try:
        scenario = scenario_from_yaml(config_path)
    except ConfigError as err:
        click.echo(f"error: {err}", err=True)
        sys.exit(_EXIT_CONFIG)
    return scenario.model_dump(mode="json")


def _emit(text: str, out: str | None) -> None:
    if out is None:
        click.echo(text, nl=False)
    else:
        pathlib.Path(out).write_text(text)


server_option = click.option(
    "--server", default=None, metavar="URL",
    help="Remote service URL (default: run the service in-process).")
seed_option = click.option(
    "--seed", type=int, default=None,
    help="Override the mobility sampling seed (ignored for exact ensembles).")
out_option = click.option(
    "--out", default=None, metavar="PATH",
    help="Write the result here instead of stdout.")


@click.group()
def main():
    """Coded cache placement experiments for mobile users under deadlines."""


@main.command()
@click.option("--config", required=True, metavar="PATH",
              help="Scenario config file.")
@server_option
@seed_option
@out_option
def paths(config, server, seed, out):
    """Enumerate or sample mobility paths; emit the ensemble CSV."""
    body = _request(server, "/paths",
                    {"scenario": _load_scenario(config), "seed": seed})
    _emit(body["csv"], out)


@main.command()
@click.option("--config", required=True, metavar="PATH",
              help="Scenario config file.")
@click.option("--policy", required=True,
              type=click.Choice(["gamma", "gamma_at_tmin", "greedy",
                                 "popular"]),
              help="Placement policy to construct.")
@server_option
@seed_option
@out_option
def solve(config, policy, server, seed, out):
    """Construct a placement policy; emit its matrix CSV."""
    body = _request(server, "/solve",
                    {"scenario": _load_scenario(config), "policy": policy,
                     "seed": seed})
    _emit(body["csv"], out)


@main.command()
@click.option("--config", required=True, metavar="PATH",
              help="Scenario config file.")
@click.option("--policy-file", required=True, metavar="PATH",
              help="Policy matrix CSV to score.")
@server_option
@seed_option
@out_option
def evaluate(config, policy_file, server, seed, out):
    """Score a stored policy; emit one scenario,policy,d_av_norm CSV row."""
    policy_path = pathlib.Path(policy_file)
    if not policy_path.exists():
        click.echo(f"error: policy file {policy_file} not found", err=True)
        sys.exit(_EXIT_CONFIG)
    body = _request(server, "/evaluate", {
        "scenario": _load_scenario(config),
        "policy_csv": policy_path.read_text(),
        "policy_name": policy_path.stem,
        "scenario_id": pathlib.Path(config).stem,
        "seed": seed,
    })
    text = ("scenario,policy,d_av_norm\n"
            f"{body['scenario_id']},{body['policy_name']},"
            f"{body['d_av_norm']!r}\n")
    _emit(text, out)


@main.command()
@click.option("--config", default=None, metavar="PATH",
              help="Sweep config file (or use --scale/--axis presets).")
@click.option("--scale", type=click.Choice(["small", "full"]), default=None,
              help="Preset scenario size.")
@click.option("--axis",
              type=click.Choice(["cache_fraction", "deadline", "rate"]),
              default="cache_fraction", show_default=True,
              help="Preset sweep axis (with --scale).")
@click.option("--timings", is_flag=True, default=False,
              help="Fill the wall_ms column (off by default: timing values "
                   "vary run to run).")
@server_option
@seed_option
@out_option
def sweep(config, scale, axis, timings, server, seed, out):
    """Run a policy sweep; emit the experiment CSV."""
    if (config is None) == (scale is None):
        click.echo("error: pass exactly one of --config or --scale", err=True)
        sys.exit(_EXIT_CONFIG)
    if config is not None:
        scenario = _load_scenario(config)
    else:
        scenario = preset_scenario(scale, axis).model_dump(mode="json")
    body = _request(server, "/sweep",
                    {"scenario": scenario, "seed": seed,
                     "timings": timings or None})
    _emit(body["csv"], out)


@main.command("export-lp")
@click.option("--config", required=True, metavar="PATH",
              help="Scenario config file.")
@server_option
@out_option
def export_lp(config, server, out):
    """Materialize the placement linear program; emit LP-format text."""
    body = _request(server, "/export-lp",
                    {"scenario": _load_scenario(config)})
    _emit(body["lp"], out)


@main.command()
@click.option("--config", required=True, metavar="PATH",
              help="Scenario config file (small instances only).")
@click.option("--chunk", type=float, default=None,
              help="Allocation grid step in bits (default: smallest rate).")
@server_option
@out_option
def oracle(config, server, chunk, out):
    """Brute-force the optimal placement; emit its matrix CSV.

    The normalized objective is printed to stderr so stdout stays a clean
    CSV stream.
    """
    body = _request(server, "/oracle",
                    {"scenario": _load_scenario(config), "chunk": chunk})
    click.echo(f"d_av_norm={body['d_av_norm']!r}", err=True)
    _emit(body["csv"], out)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    uvicorn.run(service_app, host=host, port=port)


if __name__ == "__main__":
    main()
