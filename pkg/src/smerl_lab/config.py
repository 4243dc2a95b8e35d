"""Declarative run configuration (YAML on disk, validated with pydantic)."""
from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any, Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .learner import MODES, TrainerConfig
from .mdp import GridWorld, PointMassEnv
from .perturbations import KINDS, PerturbationSpec

SCHEMA_VERSION = 1


class Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class EnvSpec(Strict):
    kind: Literal["gridworld", "pointmass"]
    params: dict[str, Any] = Field(default_factory=dict)

    def build(self):
        cls = GridWorld if self.kind == "gridworld" else PointMassEnv
        return cls(**self.params)

    @model_validator(mode="after")
    def _buildable(self):
        try:
            self.build()
        except (TypeError, ValueError) as exc:
            raise ValueError(f"env.params invalid for {self.kind}: {exc}") from exc
        return self


class OptimalReturnSpec(Strict):
    """Where R* for gating comes from: exact planning, a SAC1 run, or a fixed value."""

    source: Literal["exact", "sac", "value"]
    value: float | None = None
    sac_episodes: int = Field(default=1000, ge=1)
    eval_every: int = Field(default=25, ge=1)

    @model_validator(mode="after")
    def _value_given(self):
        if self.source == "value" and self.value is None:
            raise ValueError("optimal_return.value is required when source is 'value'")
        return self


class TrainerSpec(Strict):
    modes: list[str] = Field(default_factory=lambda: ["SMERL"])
    n_latents: int = Field(default=5, ge=1)
    alpha: float = Field(default=10.0, ge=0)
    epsilon: float | None = Field(default=None, ge=0)
    epsilon_fraction: float = Field(default=0.05, ge=0)
    optimal_return: OptimalReturnSpec | None = None
    entropy_temperature: float = Field(default=0.1, gt=0)
    learning_rate: float = Field(default=3e-4, gt=0)
    discount: float = Field(default=0.99, ge=0, le=1)
    episodes: int = Field(default=1000, ge=0)
    replay_capacity: int = Field(default=1000, ge=1)
    batch_size: int = Field(default=128, ge=1)
    updates_per_step: int = Field(default=1, ge=1)
    discriminator_lr: float = Field(default=0.5, gt=0)
    probability_floor: float = Field(default=1e-8, gt=0, lt=1)
    init_scale: float = Field(default=1e-3, ge=0)

    @field_validator("modes")
    @classmethod
    def _known_modes(cls, v):
        bad = [m for m in v if m not in MODES]
        if bad:
            raise ValueError(f"unknown modes {bad}; expected a subset of {list(MODES)}")
        if not v:
            raise ValueError("at least one mode is required")
        return v

    @model_validator(mode="after")
    def _smerl_needs_optimum(self):
        if "SMERL" in self.modes and self.optimal_return is None:
            raise ValueError("trainer.optimal_return is required when SMERL is among the modes")
        return self

    def trainer_config(self, mode: str, seed: int, optimal_return: float | None) -> TrainerConfig:
        fields = self.model_dump(exclude={"modes", "optimal_return"})
        return TrainerConfig(mode=mode, seed=seed, optimal_return_estimate=optimal_return, **fields)


class EvalSpec(Strict):
    kind: str = "obstacle"
    levels: list[float] = Field(default_factory=lambda: [0.0])
    budget_k: int = Field(default=5, ge=1)
    n_eval: int = Field(default=5, ge=1)
    location: list[Any] = Field(default_factory=list)
    direction: list[float] = Field(default_factory=lambda: [-1.0, 0.0])
    window_start: int = Field(default=0, ge=0)
    window_end: int | None = Field(default=None, ge=0)
    affected_actions: list[int] = Field(default_factory=list)

    @field_validator("kind")
    @classmethod
    def _kind(cls, v):
        if v not in KINDS:
            raise ValueError(f"unknown perturbation kind {v!r}; expected one of {list(KINDS)}")
        return v

    @field_validator("levels")
    @classmethod
    def _levels(cls, v):
        if not v:
            raise ValueError("levels must be nonempty")
        if any(b < a for a, b in zip(v, v[1:])):
            raise ValueError("levels must be nondecreasing")
        return v

    def spec(self) -> PerturbationSpec:
        return PerturbationSpec(kind=self.kind, magnitude=self.levels[0], window_start=self.window_start,
                                window_end=self.window_end, affected_actions=tuple(self.affected_actions),
                                location=tuple(self.location), direction=tuple(self.direction))


class VerifySpec(Strict):
    n_instances: int = Field(default=100, ge=0)
    seed: int = 0
    max_states: int = Field(default=5, ge=1)
    max_actions: int = Field(default=3, ge=1)
    n_candidates: int = Field(default=6, ge=1)
    mi_instances: int = Field(default=50, ge=0)
    mi_horizon: int = Field(default=3, ge=1, le=4)
    mutation: bool = False


class RunConfig(Strict):
    schema_version: Literal[1] = SCHEMA_VERSION
    name: str = "run"
    env: EnvSpec | None = None
    trainer: TrainerSpec | None = None
    eval: EvalSpec | None = None
    verify: VerifySpec | None = None
    seeds: list[int] = Field(default_factory=lambda: [0])
    output_dir: str = "runs"

    @field_validator("seeds")
    @classmethod
    def _seeds(cls, v):
        if not v:
            raise ValueError("seeds must be nonempty")
        if len(set(v)) != len(v):
            raise ValueError("seeds must be distinct")
        return v

    def canonical(self) -> dict[str, Any]:
        return self.model_dump(mode="json")

    @property
    def config_hash(self) -> str:
        text = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def with_overrides(self, seed: int | None = None, modes: list[str] | None = None,
                       output_dir: str | None = None) -> "RunConfig":
        data = self.canonical()
        if seed is not None:
            data["seeds"] = [seed]
            if data.get("verify") is not None:
                data["verify"]["seed"] = seed
        if modes is not None:
            if data.get("trainer") is None:
                raise ValueError("--modes given but the config has no trainer section")
            data["trainer"]["modes"] = list(modes)
        if output_dir is not None:
            data["output_dir"] = output_dir
        return RunConfig.model_validate(data)


def validation_messages(exc: ValidationError) -> list[str]:
    """One line per error, naming the offending field path."""
    out = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        out.append(f"{loc}: {err['msg']}")
    return out


def parse_config(data: dict[str, Any]) -> RunConfig:
    return RunConfig.model_validate(data)


def load_config(path) -> RunConfig:
    text = Path(path).read_text()
    data = yaml.safe_load(text) or {}
    if not isinstance(data, dict):
        raise ValueError(f"{path}: top level must be a mapping")
    return parse_config(data)


def packaged_config(name: str) -> Path:
    """Path of a config shipped with the package (e.g. ``gridworld``)."""
    return Path(__file__).parent / "configs" / f"{name}.yaml"
