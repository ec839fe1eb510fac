"""HTTP wrapper around the run-level drivers.

The service computes and returns rendered artifacts (report text, CSV
bodies); it never writes files.  Clients, including the bundled CLI in
--server mode, persist the returned strings themselves.  Configs that
reference auxiliary files (custom_table, user_table) resolve them relative
to the server's working directory.
"""

from typing import List, Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .evolve import PositivityError
from .runner import limit_study, simulate, verify_basis_report
from .scenario import ConfigError, parse_config


class HealthResponse(BaseModel):
    status: str


class VerifyRequest(BaseModel):
    cells: int = Field(ge=2, description="number of position cells (even)")
    nmax: int = Field(ge=1, description="largest momentum index")
    d: float = Field(default=1.0, gt=0, description="cell width")


class BasisCheckOut(BaseModel):
    name: str
    defect: float
    tol: float
    passed: bool


class VerifyResponse(BaseModel):
    passed: bool
    report: str
    checks: List[BasisCheckOut]


class SimulateRequest(BaseModel):
    config_text: str
    output_dir: Optional[str] = None


class SimulateResponse(BaseModel):
    output_dir: str
    snapshots_csv: str
    diagnostics_csv: str
    run_meta: str


class LimitStudyRequest(BaseModel):
    config_text: str
    levels: int = Field(ge=2, le=5)
    output_dir: Optional[str] = None


class LimitRow(BaseModel):
    level: int
    d: float
    n_max: int
    defect: float


class LimitStudyResponse(BaseModel):
    rows: List[LimitRow]
    csv_text: str
    output_dir: str


def _parse_or_422(config_text):
    try:
        return parse_config(config_text)
    except ConfigError as err:
        raise HTTPException(
            status_code=422,
            detail={"code": "config_invalid", "violations": err.violations})


def create_app():
    app = FastAPI(title="difference kinetic equation service")

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(status="ok")

    @app.post("/verify-basis", response_model=VerifyResponse)
    def verify_basis(req: VerifyRequest):
        try:
            result = verify_basis_report(req.cells, req.nmax, d=req.d)
        except ValueError as err:
            raise HTTPException(
                status_code=422,
                detail={"code": "bad_grid", "message": str(err)})
        return VerifyResponse(
            passed=result.passed,
            report=result.report,
            checks=[BasisCheckOut(name=c.name, defect=c.defect, tol=c.tol,
                                  passed=c.passed) for c in result.checks])

    @app.post("/simulate", response_model=SimulateResponse)
    def simulate_endpoint(req: SimulateRequest):
        config = _parse_or_422(req.config_text)
        try:
            result = simulate(config, output_dir=req.output_dir)
        except PositivityError as err:
            raise HTTPException(
                status_code=400,
                detail={"code": "positivity_abort", "message": str(err)})
        except (ValueError, OSError) as err:
            raise HTTPException(
                status_code=400,
                detail={"code": "run_failed", "message": str(err)})
        return SimulateResponse(
            output_dir=result.output_dir,
            snapshots_csv=result.snapshots_csv,
            diagnostics_csv=result.diagnostics_csv,
            run_meta=result.run_meta)

    @app.post("/limit-study", response_model=LimitStudyResponse)
    def limit_study_endpoint(req: LimitStudyRequest):
        config = _parse_or_422(req.config_text)
        try:
            result = limit_study(config, req.levels,
                                 output_dir=req.output_dir)
        except (ValueError, OSError) as err:
            raise HTTPException(
                status_code=400,
                detail={"code": "run_failed", "message": str(err)})
        return LimitStudyResponse(
            rows=[LimitRow(level=lv, d=d, n_max=n, defect=df)
                  for lv, d, n, df in result.rows],
            csv_text=result.csv_text,
            output_dir=result.output_dir)

    return app


app = create_app()
