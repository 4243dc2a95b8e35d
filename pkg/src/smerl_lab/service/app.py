"""HTTP front end over the harness; the CLI talks to this app."""
from __future__ import annotations

import traceback

from fastapi import FastAPI
from fastapi.responses import JSONResponse
from pydantic import ValidationError

from .. import harness
from ..config import RunConfig, parse_config, validation_messages
from .schemas import ErrorResponse, ReportRequest, RunRequest, RunResponse, SweepRequest, VerifyResponse

app = FastAPI(title="smerl-lab")


def _error(code: int, status: str, errors: list[str]) -> JSONResponse:
    return JSONResponse(status_code=code, content=ErrorResponse(status=status, errors=errors).model_dump())


def _config(req: RunRequest) -> RunConfig:
    cfg = parse_config(req.config)
    return cfg.with_overrides(seed=req.seed_override, modes=req.modes, output_dir=req.out)


def _guard(fn):
    try:
        return fn()
    except ValidationError as exc:
        return _error(422, "invalid", validation_messages(exc))
    except harness.MissingCheckpoints as exc:
        return _error(404, "missing", [str(exc)])
    except FileNotFoundError as exc:
        return _error(404, "missing", [str(exc)])
    except ValueError as exc:
        return _error(422, "invalid", [str(exc)])
    except Exception as exc:  # surfaced to the client as a runtime failure
        return _error(500, "error", [f"{type(exc).__name__}: {exc}", traceback.format_exc()])


@app.get("/health")
def health():
    return {"status": "ok"}


@app.post("/train", response_model=RunResponse, responses={422: {"model": ErrorResponse}})
def train(req: RunRequest):
    def run():
        cfg = _config(req)
        res = harness.train(cfg)
        return RunResponse(config_hash=res["config_hash"], files=res["files"],
                           details={"optimal_return": res["optimal_return"]})
    return _guard(run)


@app.post("/sweep", response_model=RunResponse, responses={404: {"model": ErrorResponse}})
def sweep(req: SweepRequest):
    def run():
        cfg = _config(req)
        res = harness.sweep(cfg, train_inline=req.train_inline)
        return RunResponse(config_hash=res["config_hash"], files=res["files"],
                           details={"errors": res["errors"], "selected_curve": res["selected_curve"]})
    return _guard(run)


@app.post("/verify", response_model=VerifyResponse)
def verify(req: RunRequest):
    def run():
        cfg = _config(req)
        res = harness.verify(cfg)
        status = "violations" if res["violations"] else ("vacuous" if res["vacuous"] else "ok")
        return VerifyResponse(status=status, config_hash=res["config_hash"], files=res["files"],
                              violations=res["violations"], vacuous=res["vacuous"])
    return _guard(run)


@app.post("/report", response_model=RunResponse)
def report(req: ReportRequest):
    def run():
        res = harness.report(req.report, req.out)
        return RunResponse(config_hash=res["config_hash"], files=res["files"])
    return _guard(run)
