"""FastAPI service wrapping the toolkit. Manifests and image paths in request
bodies refer to the server's filesystem; responses are JSON run reports."""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import AuthIndexError
from . import handlers
from .models import (
    AttackerSimRequest,
    AttackRequest,
    CalibrateRequest,
    HealthResponse,
    ReportRequest,
    ScoreRequest,
    VideoRequest,
)

app = FastAPI(title="authindex", version=__version__)


@app.exception_handler(AuthIndexError)
async def _toolkit_error(request: Request, exc: AuthIndexError):
    return JSONResponse(status_code=422, content={"error": type(exc).__name__, "detail": str(exc)})


@app.exception_handler(ValueError)
async def _config_error(request: Request, exc: ValueError):
    return JSONResponse(status_code=400, content={"error": "ConfigError", "detail": str(exc)})


@app.get("/health", response_model=HealthResponse)
async def health() -> HealthResponse:
    return HealthResponse(status="ok", version=__version__)


@app.get("/anchors")
async def anchors() -> dict:
    """Read-only registry of externally published calibration anchors."""
    return handlers.published_anchors()


@app.post("/score")
async def score(req: ScoreRequest) -> dict:
    return handlers.handle_score(req)


@app.post("/calibrate")
async def calibrate(req: CalibrateRequest) -> dict:
    return handlers.handle_calibrate(req)


@app.post("/attack")
async def attack(req: AttackRequest) -> dict:
    return handlers.handle_attack(req)


@app.post("/attacker-sim")
async def attacker_sim(req: AttackerSimRequest) -> dict:
    return handlers.handle_attacker_sim(req)


@app.post("/video")
async def video(req: VideoRequest) -> dict:
    return handlers.handle_video(req)


@app.post("/report")
async def report(req: ReportRequest) -> dict:
    return handlers.handle_report(req)
