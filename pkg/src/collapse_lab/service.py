"""HTTP service wrapping the scenario runners.

One POST endpoint per scenario under /v1/scenarios/; request bodies are
the scenario parameter models, responses carry the resolved config, the
result tables as columnar JSON, the summary, and the internal checks.
The CLI is a thin client of this API (in-process by default).
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from . import __version__, scenarios
from .ensemble import resolve_workers
from .scenarios import (
    BornParams,
    DephasingScenarioParams,
    Fig1Params,
    Fig2Params,
    InterruptParams,
    ScenarioResult,
)


class ColumnPayload(BaseModel):
    name: str
    values: list[float]


class TablePayload(BaseModel):
    name: str
    columns: list[ColumnPayload]


class CheckPayload(BaseModel):
    name: str
    status: str
    detail: str


class ScenarioResponse(BaseModel):
    scenario: str
    code_version: str
    status: str
    duration_seconds: float
    master_seed: int
    workers_used: int
    config: dict
    tables: list[TablePayload]
    summary: dict
    checks: list[CheckPayload]


class HealthResponse(BaseModel):
    status: str
    version: str


def _response(result: ScenarioResult, workers_used: int) -> ScenarioResponse:
    return ScenarioResponse(
        scenario=result.scenario,
        code_version=__version__,
        status=result.status,
        duration_seconds=result.duration_seconds,
        master_seed=result.params.seed,
        workers_used=workers_used,
        config=result.params.model_dump(mode="json"),
        tables=[
            TablePayload(
                name=t.name,
                columns=[ColumnPayload(name=c.name, values=[float(v) for v in c.values])
                         for c in t.columns],
            )
            for t in result.tables
        ],
        summary=result.summary,
        checks=[CheckPayload(name=c.name, status=c.status, detail=c.detail)
                for c in result.checks],
    )


def _run(func, params) -> ScenarioResponse:
    try:
        result = func(params)
    except (ValueError, KeyError) as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    return _response(result, resolve_workers(params.workers))


def create_app() -> FastAPI:
    app = FastAPI(title="collapse-lab", version=__version__)

    @app.get("/v1/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post("/v1/scenarios/fig1", response_model=ScenarioResponse)
    def fig1(params: Fig1Params) -> ScenarioResponse:
        return _run(scenarios.scenario_fig1, params)

    @app.post("/v1/scenarios/fig2", response_model=ScenarioResponse)
    def fig2(params: Fig2Params) -> ScenarioResponse:
        return _run(scenarios.scenario_fig2, params)

    @app.post("/v1/scenarios/born", response_model=ScenarioResponse)
    def born(params: BornParams) -> ScenarioResponse:
        return _run(scenarios.scenario_born, params)

    @app.post("/v1/scenarios/interrupt", response_model=ScenarioResponse)
    def interrupt(params: InterruptParams) -> ScenarioResponse:
        return _run(scenarios.scenario_interrupt, params)

    @app.post("/v1/scenarios/dephasing", response_model=ScenarioResponse)
    def dephasing(params: DephasingScenarioParams) -> ScenarioResponse:
        return _run(scenarios.scenario_dephasing, params)

    return app


app = create_app()
