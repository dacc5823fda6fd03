"""FastAPI service wrapping the lattice laboratory.

Experiment endpoints run synchronously (this is a single-user batch tool
behind an HTTP surface); quick analytic endpoints answer immediately.
Errors map to a structured body: precondition failures -> 422,
numerical failures -> 500, both carrying {"category", "message"}.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import acceptance
from ..banddensity import (
    BandStructure,
    compatibility,
    density_J,
    gap_constants,
    hilbert_J,
    solve_sigma,
    sum_rule_defect,
)
from ..drivers import DriverSpec, harmonics_from_sin_cos
from ..errors import ConfigurationError, LatticeLabError
from ..experiments import ExperimentConfig, preset, run
from ..forces import ForceLaw
from ..ggap import gap_width_prediction
from ..sim import linear_closed_form, linear_thresholds
from ..wavecore import resonance_data
from . import schemas as S

app = FastAPI(title="latticelab", version="0.1.0",
              description="Driven nonlinear lattice laboratory")


@app.exception_handler(LatticeLabError)
async def lab_error_handler(request: Request, exc: LatticeLabError):
    if isinstance(exc, ConfigurationError):
        return JSONResponse(status_code=422, content={"category": "precondition", "message": str(exc)})
    return JSONResponse(status_code=500, content={"category": "numerical", "message": str(exc)})


def _driver(m: S.DriverModel) -> DriverSpec:
    return DriverSpec(a=m.a, gamma=m.gamma, eps=m.eps,
                      harmonics=harmonics_from_sin_cos(tuple(m.sin_amps), tuple(m.cos_amps)))


def _config(req: S.ExperimentRequest) -> ExperimentConfig:
    return ExperimentConfig(
        kind=req.kind,
        force_kind=req.force.kind,
        force_params=tuple(req.force.params) if req.force.params else None,
        a=req.driver.a, gamma=req.driver.gamma, eps=req.driver.eps,
        sin_amps=tuple(req.driver.sin_amps), cos_amps=tuple(req.driver.cos_amps),
        n_particles=req.n_particles, dt=req.dt, t_end=req.t_end, t_lo=req.t_lo,
        snapshot_stride=req.snapshot_stride, window=tuple(req.window), q_abs=req.q_abs,
        c=req.c, p=tuple(req.p), z_phase=tuple(req.z_phase),
        out_dir=req.out_dir, allow_long_run=req.allow_long_run,
    )


@app.get("/health")
def health():
    return {"status": "ok"}


@app.post("/experiments/run", response_model=S.ExperimentResponse)
def experiments_run(req: S.ExperimentRequest):
    cfg = _config(req)
    result = run(cfg)
    return S.ExperimentResponse(kind=cfg.kind, files=result["files"], summary=result["summary"])


@app.post("/experiments/preset", response_model=S.ExperimentResponse)
def experiments_preset(req: S.PresetRequest):
    from ..experiments import run_preset

    result = run_preset(req.name, req.out_dir)
    return S.ExperimentResponse(kind=req.name, files=result["files"], summary=result["summary"])


@app.post("/linear/closed-form", response_model=S.LinearClosedFormResponse)
def linear_closed(req: S.LinearClosedFormRequest):
    drv = _driver(req.driver)
    x = linear_closed_form(req.alpha, drv, np.asarray(req.n), req.t)
    return S.LinearClosedFormResponse(
        x=np.atleast_1d(x).tolist(),
        thresholds=linear_thresholds(req.alpha, 6).tolist(),
    )


@app.post("/resonance", response_model=S.ResonanceResponse)
def resonance(req: S.ResonanceRequest):
    force = ForceLaw(req.force.kind, req.force.params)
    res = resonance_data(force, req.c, req.gamma)
    delta = {m: float(res.delta(m)) for m in range(0, res.m0 + 3)}
    beta = {m: res.beta(m) for m in range(1, res.m0 + 1)}
    z = {m: res.z(m) for m in range(res.m0 + 1, res.m0 + 4)}
    return S.ResonanceResponse(m0=res.m0, fprime=res.fprime, sigma0=res.sigma0,
                               sigma1=res.sigma1, C_K=res.C_K, delta=delta, beta=beta, z=z)


@app.post("/density/solve", response_model=S.DensityResponse)
def density_solve(req: S.DensityRequest):
    bs = BandStructure(tuple(req.endpoints))
    sig = solve_sigma(bs)
    lo, hi = bs.span
    pad = 0.02 * (hi - lo)
    grid = np.linspace(lo - pad, hi + pad, req.n_grid)
    return S.DensityResponse(
        sigma=sig.sigma.tolist(),
        sum_rule_defect=sum_rule_defect(bs, sig),
        compatibility=compatibility(bs, sig),
        gap_constants=gap_constants(bs, sig).tolist(),
        grid=grid.tolist(),
        J=density_J(bs, sig, grid).tolist(),
        HJ=hilbert_J(bs, sig, grid).tolist(),
    )


@app.post("/predict-gaps", response_model=S.PredictGapsResponse)
def predict_gaps(req: S.PredictGapsRequest):
    drv_model = req.driver or S.DriverModel(gamma=req.gamma)
    drv = _driver(drv_model)
    ms = sorted(drv.harmonics)
    eps_bm = [abs(req.eps * drv.coefficient(m)) for m in ms]
    width = [gap_width_prediction(e, m, req.gamma) for e, m in zip(eps_bm, ms)]
    return S.PredictGapsResponse(m=ms, eps_bm=eps_bm, width=width)


@app.post("/validate", response_model=S.ValidateResponse)
def validate():
    results = acceptance.run_all(verbose=False)
    return S.ValidateResponse(
        passed=all(r.passed for r in results),
        lines=[r.line() for r in results],
        results=[{"name": r.name, "passed": r.passed, "details": {k: str(v) for k, v in r.details.items()}}
                 for r in results],
    )
