"""Command-line front end: a thin client of the scenario service.

Subcommands mirror the service endpoints (fig1, fig2, born, interrupt,
dephasing) plus ``replay`` and ``serve``.  By default requests run
against an in-process instance of the app over an ASGI transport, so no
server needs to be running; pass ``--server URL`` to target a remote
instance.  Responses are written as CSV/JSON data files with a sibling
manifest in ``--out-dir``.

Configuration precedence: built-in defaults < [common] section of the
config file < per-scenario section < command-line flags.  The env var
COLLAPSE_LAB_WORKERS is the fallback for --workers (resolved where the
run executes).
"""

from __future__ import annotations

import asyncio
import configparser
import sys
from pathlib import Path

import click
import httpx

from . import __version__
from .artifacts import load_manifest, output_role, tables_from_payload, write_run

_INT_KEYS = {"n_traj", "seed", "workers", "n_blocks", "k_traj"}
_FLOAT_KEYS = {"alpha0_sq", "J", "G", "dt", "t_max", "record_every",
               "collapse_rate", "tau", "g0", "gamma", "t_interrupt"}
_BOOL_KEYS = {"stratified"}
_STR_KEYS = {"noise"}
_ALL_KEYS = _INT_KEYS | _FLOAT_KEYS | _BOOL_KEYS | _STR_KEYS


def _load_config_file(path: str | None, scenario: str) -> dict:
    if path is None:
        return {}
    parser = configparser.ConfigParser()
    parser.optionxform = str  # keep key case (J, G)
    read = parser.read(path)
    if not read:
        raise click.UsageError(f"config file not found: {path}")
    merged: dict = {}
    for section in ("common", scenario):
        if not parser.has_section(section):
            continue
        for key, raw in parser.items(section):
            if key not in _ALL_KEYS:
                raise click.UsageError(
                    f"unknown config key {key!r} in section [{section}] of {path}"
                )
            try:
                if key in _INT_KEYS:
                    merged[key] = int(raw)
                elif key in _FLOAT_KEYS:
                    merged[key] = float(raw)
                elif key in _BOOL_KEYS:
                    merged[key] = parser.getboolean(section, key)
                else:
                    merged[key] = raw
            except ValueError as exc:
                raise click.UsageError(
                    f"invalid value for {key!r} in section [{section}]: {raw!r} ({exc})"
                )
    return merged


async def _post_async(scenario: str, body: dict, server: str | None) -> httpx.Response:
    if server is None:
        from .service import create_app

        transport = httpx.ASGITransport(app=create_app())
        async with httpx.AsyncClient(transport=transport,
                                     base_url="http://collapse-lab.internal",
                                     timeout=None) as client:
            return await client.post(f"/v1/scenarios/{scenario}", json=body)
    async with httpx.AsyncClient(base_url=server, timeout=None) as client:
        return await client.post(f"/v1/scenarios/{scenario}", json=body)


def _post(scenario: str, body: dict, server: str | None) -> dict:
    try:
        response = asyncio.run(_post_async(scenario, body, server))
    except httpx.HTTPError as exc:
        click.echo(f"error: transport failure: {exc}", err=True)
        sys.exit(2)
    if response.status_code == 422:
        click.echo(f"error: invalid configuration: {response.json()['detail']}", err=True)
        sys.exit(2)
    if response.status_code != 200:
        click.echo(f"error: service returned HTTP {response.status_code}: {response.text}",
                   err=True)
        sys.exit(2)
    return response.json()


def _emit(payload: dict, out_dir: str) -> int:
    manifest_path = _write_payload(payload, out_dir)
    for check in payload["checks"]:
        click.echo(f"[{check['status'].upper():4s}] {check['name']}: {check['detail']}")
    click.echo(f"manifest: {manifest_path}")
    click.echo(f"status: {payload['status']} "
               f"({payload['duration_seconds']:.1f}s, seed {payload['master_seed']})")
    return 0 if payload["status"] in ("pass", "warn") else 1


def _write_payload(payload: dict, out_dir: str) -> Path:
    from .scenarios import Check

    return write_run(
        Path(out_dir),
        scenario=payload["scenario"],
        config=payload["config"],
        tables=tables_from_payload(payload["tables"]),
        summary=payload["summary"],
        checks=[Check(c["name"], c["status"], c["detail"]) for c in payload["checks"]],
        status=payload["status"],
        duration_seconds=payload["duration_seconds"],
        master_seed=payload["master_seed"],
        workers=payload.get("workers_used"),
        code_version=payload["code_version"],
    )


def _run_scenario(scenario: str, cli_values: dict, config_path: str | None,
                  server: str | None, out_dir: str) -> None:
    body = _load_config_file(config_path, scenario)
    body.update({k: v for k, v in cli_values.items() if v is not None})
    payload = _post(scenario, body, server)
    sys.exit(_emit(payload, out_dir))


def _common_options(f):
    options = [
        click.option("--n-traj", type=int, default=None, help="Number of trajectories."),
        click.option("--alpha0-sq", type=float, default=None,
                     help="Initial weight |alpha(0)|^2."),
        click.option("--dt", type=float, default=None, help="Integration step."),
        click.option("--t-max", type=float, default=None, help="Integration horizon."),
        click.option("--record-every", type=float, default=None,
                     help="Recording interval."),
        click.option("--lambda", "collapse_rate", type=float, default=None,
                     help="White-noise collapse rate (defaults to J)."),
        click.option("--tau", type=float, default=None, help="OU correlation time."),
        click.option("--g0", type=float, default=None, help="OU diffusion amplitude."),
        click.option("--seed", type=int, default=None, help="Master RNG seed."),
        click.option("--workers", type=int, default=None,
                     help="Worker processes (env COLLAPSE_LAB_WORKERS as fallback)."),
        click.option("--n-blocks", type=int, default=None,
                     help="Accumulation/jackknife blocks."),
        click.option("--stratified", is_flag=True, default=None,
                     help="Stratify the frozen-noise draws."),
        click.option("--config", "config_path", type=click.Path(), default=None,
                     help="INI config file ([common] plus per-scenario sections)."),
        click.option("--server", default=None,
                     help="Run against this service URL instead of in-process."),
        click.option("--out-dir", default=".", show_default=True,
                     help="Directory for data files and manifests."),
    ]
    for opt in reversed(options):
        f = opt(f)
    return f


_NOISE_CHOICE = click.Choice(["frozen", "ou", "white"])


@click.group()
@click.version_option(version=__version__, prog_name="collapse-lab")
def main() -> None:
    """Monte Carlo scenarios for quantum state reduction of a qubit pair."""


@main.command()
@_common_options
@click.option("--k-traj", type=int, default=None, help="Sample trajectories per regime.")
def fig1(config_path, server, out_dir, **values):
    """Sample trajectories and ensemble averages (frozen + white noise)."""
    _run_scenario("fig1", values, config_path, server, out_dir)


@main.command()
@_common_options
def fig2(config_path, server, out_dir, **values):
    """Entropy and entanglement evolution (frozen + white noise)."""
    _run_scenario("fig2", values, config_path, server, out_dir)


@main.command()
@_common_options
@click.option("--noise", type=_NOISE_CHOICE, default=None, help="Driving noise regime.")
def born(config_path, server, out_dir, **values):
    """Terminal outcome statistics against the squared initial weight."""
    _run_scenario("born", values, config_path, server, out_dir)


@main.command()
@_common_options
@click.option("--noise", type=_NOISE_CHOICE, default=None, help="Driving noise regime.")
@click.option("--t-interrupt", type=float, default=None,
              help="Time of the instantaneous projective measurement.")
def interrupt(config_path, server, out_dir, **values):
    """Projective interruption: pre- vs post-projection entropies."""
    _run_scenario("interrupt", values, config_path, server, out_dir)


@main.command()
@_common_options
@click.option("--gamma", type=float, default=None, help="Coherence decay rate.")
def dephasing(config_path, server, out_dir, **values):
    """Pure-dephasing reference vs a matched white-noise reduction run."""
    _run_scenario("dephasing", values, config_path, server, out_dir)


@main.command()
@click.argument("manifest", type=click.Path(exists=True))
@click.option("--server", default=None, help="Service URL (in-process if omitted).")
@click.option("--out-dir", default=".", show_default=True)
@click.option("--verify/--no-verify", default=True, show_default=True,
              help="Compare new data hashes against the manifest.")
def replay(manifest, server, out_dir, verify):
    """Re-run a scenario from its manifest; data files must reproduce exactly."""
    recorded = load_manifest(Path(manifest))
    payload = _post(recorded["scenario"], recorded["config"], server)
    manifest_path = _write_payload(payload, out_dir)
    click.echo(f"manifest: {manifest_path}")
    if not verify:
        sys.exit(0)

    from .artifacts import data_payloads
    import hashlib

    fresh = data_payloads(payload["scenario"], tables_from_payload(payload["tables"]),
                          payload["summary"], payload["status"])
    failures = 0
    for entry in recorded["outputs"]:
        role = output_role(entry["file"])
        new_hash = hashlib.sha256(fresh[role]).hexdigest() if role in fresh else None
        ok = new_hash == entry["sha256"]
        failures += 0 if ok else 1
        click.echo(f"[{'PASS' if ok else 'FAIL'}] {entry['file']}: "
                   f"{'byte-identical' if ok else 'hash mismatch'}")
    sys.exit(1 if failures else 0)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
def serve(host, port):
    """Run the scenario service under uvicorn."""
    import uvicorn

    uvicorn.run("collapse_lab.service:app", host=host, port=port)


if __name__ == "__main__":
    main()
