"""FastAPI application wrapping the simulator.

Error mapping: configuration problems come back as 400 with the individual
messages, solver failures as 500; both carry a structured detail payload the
CLI translates to its exit codes.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..validation import ConfigError, SolverError
from . import core
from .schemas import (ConfigRequest, HealthResponse, MeshRequest, MeshResponse,
                      PicardRequest, PicardResponse, RunRequest, RunSummary,
                      ValidateResponse)


def create_app() -> FastAPI:
    app = FastAPI(title="ossify", version=__version__,
                  description="Scaffold-mediated bone regeneration simulator")

    @app.exception_handler(ConfigError)
    async def config_error(_: Request, err: ConfigError):
        return JSONResponse(status_code=400,
                            content={"detail": str(err), "errors": err.errors})

    @app.exception_handler(SolverError)
    async def solver_error(_: Request, err: SolverError):
        return JSONResponse(status_code=500,
                            content={"detail": str(err),
                                     "residual": err.residual,
                                     "iterations": err.iterations})

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(status="ok", version=__version__)

    @app.post("/validate", response_model=ValidateResponse)
    def validate(req: ConfigRequest):
        try:
            scenario, _ = core.parse_config(req.config_toml)
        except ConfigError as err:
            return ValidateResponse(valid=False, errors=err.errors)
        return ValidateResponse(valid=True, scenario=scenario.name)

    @app.post("/mesh", response_model=MeshResponse)
    def mesh(req: MeshRequest):
        return MeshResponse(**core.mesh_report(req.config_toml, req.out_path))

    @app.post("/run", response_model=RunSummary)
    def run(req: RunRequest):
        return RunSummary(**core.run_job(req.config_toml, req.out_dir,
                                         req.output_every))

    @app.post("/picard", response_model=PicardResponse)
    def picard(req: PicardRequest):
        return PicardResponse(**core.picard_job(req.config_toml, req.window,
                                                req.max_iter))

    return app


app = create_app()
