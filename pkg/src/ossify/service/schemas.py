"""Request/response models of the HTTP surface."""

from __future__ import annotations

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str
    version: str


class ConfigRequest(BaseModel):
    config_toml: str = Field(description="TOML configuration document")


class ValidateResponse(BaseModel):
    valid: bool
    scenario: str | None = None
    errors: list[str] = []


class MeshRequest(ConfigRequest):
    out_path: str | None = Field(default=None,
                                 description="optional VTK export target")


class MeshResponse(BaseModel):
    nodes: int
    tets: int
    fixateur_tets: int
    boundary_tris: int
    valid: bool
    violations: list[str] = []
    top_cap_area_mm2: float
    out_path: str | None = None


class RunRequest(ConfigRequest):
    out_dir: str = Field(description="directory for VTK/CSV outputs (server side)")
    output_every: int | None = Field(default=None,
                                     description="override the VTK cadence")


class RunSummary(BaseModel):
    steps: int
    nodes: int
    tets: int
    runtime_seconds: float
    final_t_months: float
    final_sigma: float
    final_mean_b: float
    final_max_b: float
    outputs: list[str]


class PicardRequest(ConfigRequest):
    window: float = Field(gt=0, description="iteration window in months")
    max_iter: int = 20


class PicardResponse(BaseModel):
    converged: bool
    iterations: int
    window: float
    distances: list[float]
    contraction_factors: list[float]
    tail_contraction_factor: float | None = None
