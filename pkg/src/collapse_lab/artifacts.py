"""Data files and run manifests.

Every scenario invocation writes its tables as CSV (12 significant
digits, '.' decimal separator, Unix newlines, schema comment lines
before the header) plus a JSON manifest recording the fully resolved
configuration, seed, code version, wall-clock duration, and the
sha256 of every data file.  Re-running the scenario from the manifest
reproduces the data files byte for byte, which ``replay`` verifies.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .scenarios import Check, Column, ScenarioResult, Table

CSV_SCHEMA = "collapse-lab-csv v1"
MANIFEST_SCHEMA = "collapse-lab-manifest v1"


def format_value(x: float) -> str:
    return f"{x:.12g}"


def table_to_csv_bytes(table: Table) -> bytes:
    lines = [f"# {CSV_SCHEMA}", f"# table: {table.name}"]
    lines.append(",".join(c.name for c in table.columns))
    n = len(table.columns[0].values)
    cols = [np.asarray(c.values, dtype=float) for c in table.columns]
    for i in range(n):
        lines.append(",".join(format_value(col[i]) for col in cols))
    return ("\n".join(lines) + "\n").encode()


def summary_to_json_bytes(summary: dict) -> bytes:
    return (json.dumps(summary, indent=2, sort_keys=True) + "\n").encode()


def timestamp() -> str:
    now = datetime.now(timezone.utc)
    return f"{now:%Y%m%dT%H%M%S}{now.microsecond:06d}"


@dataclass
class OutputFile:
    path: Path
    sha256: str
    n_bytes: int


def _write(path: Path, payload: bytes) -> OutputFile:
    path.write_bytes(payload)
    return OutputFile(path=path, sha256=hashlib.sha256(payload).hexdigest(),
                      n_bytes=len(payload))


def data_payloads(scenario: str, tables: list[Table], summary: dict,
                  status: str) -> dict[str, bytes]:
    """Data file payloads keyed by role (table name, or 'born' for the summary)."""
    payloads = {t.name: table_to_csv_bytes(t) for t in tables}
    if scenario == "born":
        payloads["born"] = summary_to_json_bytes(dict(summary, status=status))
    return payloads


def write_run(
    out_dir: Path,
    *,
    scenario: str,
    config: dict,
    tables: list[Table],
    summary: dict,
    checks: list[Check],
    status: str,
    duration_seconds: float,
    master_seed: int,
    workers: int | None = None,
    code_version: str = __version__,
    stamp: str | None = None,
) -> Path:
    """Write all data files plus the sibling manifest; returns the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stamp = stamp or timestamp()

    outputs = []
    for role, payload in data_payloads(scenario, tables, summary, status).items():
        ext = "json" if scenario == "born" and role == "born" else "csv"
        outputs.append(_write(out_dir / f"{role}_{stamp}.{ext}", payload))

    manifest = {
        "schema": MANIFEST_SCHEMA,
        "scenario": scenario,
        "code_version": code_version,
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "duration_seconds": duration_seconds,
        "master_seed": master_seed,
        "workers": workers,
        "config": config,
        "summary": summary,
        "status": status,
        "checks": [{"name": c.name, "status": c.status, "detail": c.detail}
                   for c in checks],
        "outputs": [{"file": o.path.name, "sha256": o.sha256, "bytes": o.n_bytes}
                    for o in outputs],
    }
    manifest_path = out_dir / f"{scenario}_{stamp}.manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest_path


def write_result(result: ScenarioResult, out_dir: Path, stamp: str | None = None,
                 workers_used: int | None = None) -> Path:
    return write_run(
        out_dir,
        scenario=result.scenario,
        config=result.params.model_dump(mode="json"),
        tables=result.tables,
        summary=result.summary,
        checks=result.checks,
        status=result.status,
        duration_seconds=result.duration_seconds,
        master_seed=result.params.seed,
        workers=workers_used,
        stamp=stamp,
    )


def tables_from_payload(tables_payload: list[dict]) -> list[Table]:
    """Rebuild Table objects from the service's columnar JSON."""
    return [
        Table(
            name=t["name"],
            columns=[Column(name=c["name"], values=np.asarray(c["values"], dtype=float))
                     for c in t["columns"]],
        )
        for t in tables_payload
    ]


def load_manifest(path: Path) -> dict:
    manifest = json.loads(Path(path).read_text())
    if manifest.get("schema") != MANIFEST_SCHEMA:
        raise ValueError(
            f"unknown manifest schema {manifest.get('schema')!r}; expected {MANIFEST_SCHEMA!r}"
        )
    return manifest


def output_role(filename: str) -> str:
    """Strip the trailing timestamp from a data file name: its table role."""
    stem = filename.rsplit(".", 1)[0]
    return stem.rsplit("_", 1)[0]
