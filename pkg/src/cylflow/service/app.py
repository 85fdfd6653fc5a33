"""FastAPI service wrapping the scenario runner and a few direct computations.

The CLI is a thin client of this layer: it builds the same request models and
either calls the handlers in-process or posts them to a running server.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from ..config import ConfigError, RunConfig, apply_overrides
from ..cylinder import make_cylinder
from ..diagnostics import surgery_euler_delta
from ..flow import cusp_profile
from ..scenarios import SCENARIOS, _DEFAULTS, resolve_scenario, run_scenario
from ..spectral import enumerate_spectrum
from .models import (
    CuspRequest,
    CuspResponse,
    HealthResponse,
    RunManifestModel,
    RunRequest,
    ScenarioInfo,
    SpectrumRequest,
    SpectrumResponse,
    SpectrumMode,
    SurgeryResponse,
)


def config_from_request(request: RunRequest) -> RunConfig:
    name = resolve_scenario(request.scenario)
    cfg = RunConfig(scenario=name)
    apply_overrides(cfg, _DEFAULTS.get(name, {}))
    overrides = request.model_dump(exclude={"scenario"}, exclude_none=True)
    apply_overrides(cfg, overrides)
    return cfg.validate()


def execute_run(request: RunRequest) -> RunManifestModel:
    cfg = config_from_request(request)
    manifest = run_scenario(cfg)
    return RunManifestModel(**manifest)


def create_app() -> FastAPI:
    app = FastAPI(title="cylflow", description="cylindrical-singularity flow lab")

    @app.get("/health", response_model=HealthResponse)
    def health():
        from ..scenarios import _package_version

        return HealthResponse(status="ok", version=_package_version())

    @app.get("/scenarios", response_model=list[ScenarioInfo])
    def scenarios():
        return [ScenarioInfo(name=n, description=d) for n, (_, d) in sorted(SCENARIOS.items())]

    @app.post("/runs", response_model=RunManifestModel)
    def runs(request: RunRequest):
        try:
            return execute_run(request)
        except ConfigError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))

    @app.post("/spectrum", response_model=SpectrumResponse)
    def spectrum(request: SpectrumRequest):
        try:
            params = make_cylinder(request.n, request.k)
            modes = enumerate_spectrum(params, request.cutoff, request.symmetry)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return SpectrumResponse(
            n=request.n,
            k=request.k,
            rho=params.rho,
            modes=[
                SpectrumMode(i=m.i, j=m.j, eigenvalue=m.eigenvalue, multiplicity=mult)
                for m, mult in modes
            ],
        )

    @app.post("/cusp-profile", response_model=CuspResponse)
    def cusp(request: CuspRequest):
        try:
            params = make_cylinder(request.n, request.k)
            vals = [float(cusp_profile(y, params)) for y in request.y]
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return CuspResponse(y=request.y, v=vals)

    @app.get("/surgery/{n}/{k}", response_model=SurgeryResponse)
    def surgery(n: int, k: int):
        try:
            delta = surgery_euler_delta(n, k)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return SurgeryResponse(n=n, k=k, delta_chi=delta)

    return app


app = create_app()
