"""Pydantic request/response models for the lattice laboratory service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class ForceModel(BaseModel):
    kind: str = "toda"
    params: list[float] | None = None


class DriverModel(BaseModel):
    a: float = 0.5
    gamma: float = 1.8
    eps: float = 0.2
    sin_amps: list[float] = Field(default_factory=lambda: [1.0])
    cos_amps: list[float] = Field(default_factory=lambda: [0.0, 0.5])


class ExperimentRequest(BaseModel):
    kind: str
    force: ForceModel = Field(default_factory=ForceModel)
    driver: DriverModel = Field(default_factory=DriverModel)
    n_particles: int = 400
    dt: float = 1e-3
    t_end: float = 200.0
    t_lo: float = 100.0
    snapshot_stride: float = 0.5
    window: list[int] = Field(default_factory=lambda: [1, 40])
    q_abs: float = 0.05
    c: float | None = None
    p: list[float] = Field(default_factory=list)
    z_phase: list[float] = Field(default_factory=list)
    out_dir: str = "out"
    allow_long_run: bool = False


class ExperimentResponse(BaseModel):
    kind: str
    files: list[str]
    summary: dict


class PresetRequest(BaseModel):
    name: str
    out_dir: str | None = None


class LinearClosedFormRequest(BaseModel):
    alpha: float = 2.25
    driver: DriverModel = Field(default_factory=DriverModel)
    n: list[int]
    t: float


class LinearClosedFormResponse(BaseModel):
    x: list[float]
    thresholds: list[float]


class ResonanceRequest(BaseModel):
    force: ForceModel = Field(default_factory=ForceModel)
    c: float = 0.0
    gamma: float = 1.8


class ResonanceResponse(BaseModel):
    m0: int
    fprime: float
    sigma0: float
    sigma1: float
    C_K: float
    delta: dict[int, float]
    beta: dict[int, float]
    z: dict[int, float]


class DensityRequest(BaseModel):
    endpoints: list[float]
    a0_mean: float | None = None
    n_grid: int = 201


class DensityResponse(BaseModel):
    sigma: list[float]
    sum_rule_defect: float
    compatibility: float
    gap_constants: list[float]
    grid: list[float]
    J: list[float]
    HJ: list[float]


class PredictGapsRequest(BaseModel):
    gamma: float
    eps: float = 0.2
    driver: DriverModel | None = None


class PredictGapsResponse(BaseModel):
    m: list[int]
    eps_bm: list[float]
    width: list[float]


class ValidateResponse(BaseModel):
    passed: bool
    lines: list[str]
    results: list[dict]


class ErrorBody(BaseModel):
    category: str  # "precondition" | "numerical"
    message: str
