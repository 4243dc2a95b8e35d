from __future__ import annotations

from typing import Any

from pydantic import BaseModel, Field


class RunRequest(BaseModel):
    config: dict[str, Any]
    out: str | None = None
    seed_override: int | None = None
    modes: list[str] | None = None


class SweepRequest(RunRequest):
    train_inline: bool = False


class ReportRequest(BaseModel):
    report: str
    out: str | None = None


class RunResponse(BaseModel):
    status: str = "ok"
    config_hash: str | None = None
    files: list[str] = Field(default_factory=list)
    details: dict[str, Any] = Field(default_factory=dict)


class VerifyResponse(RunResponse):
    violations: int = 0
    vacuous: bool = False


class ErrorResponse(BaseModel):
    status: str
    errors: list[str]
