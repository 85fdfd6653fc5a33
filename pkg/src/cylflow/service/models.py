"""Pydantic request/response models for the scenario service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class RunRequest(BaseModel):
    scenario: str
    n: int | None = None
    k: int | None = None
    tau0: float = 25.0
    horizon: float | None = None
    grid_points: int | None = None
    grid_extent: float | None = None
    dt: float = 0.01
    boundary: str = "pinned"
    vmin_stop: float = 1e-3
    seed: int = 0
    out: str = "runs"


class CheckModel(BaseModel):
    name: str
    passed: bool
    detail: str = ""


class RunManifestModel(BaseModel):
    scenario: str
    config: dict
    version: str
    metrics: dict
    checks: list[CheckModel]
    passed: bool
    wall_time_seconds: float
    files: dict[str, str] = Field(default_factory=dict)


class ScenarioInfo(BaseModel):
    name: str
    description: str


class HealthResponse(BaseModel):
    status: str
    version: str


class SpectrumRequest(BaseModel):
    n: int
    k: int
    cutoff: float = 0.5
    symmetry: str = "full"


class SpectrumMode(BaseModel):
    i: int
    j: int
    eigenvalue: float
    multiplicity: int


class SpectrumResponse(BaseModel):
    n: int
    k: int
    rho: float
    modes: list[SpectrumMode]


class CuspRequest(BaseModel):
    n: int
    k: int
    y: list[float]


class CuspResponse(BaseModel):
    y: list[float]
    v: list[float]


class SurgeryResponse(BaseModel):
    n: int
    k: int
    delta_chi: int
