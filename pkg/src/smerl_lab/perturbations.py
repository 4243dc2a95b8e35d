"""Obstacle, force and motor-failure perturbations of a base environment.

``apply_perturbation`` never mutates its input: obstacles produce a new
environment of the same kind, time-limited perturbations wrap the base.
"""
from __future__ import annotations

import dataclasses
import warnings
from dataclasses import dataclass
from typing import Any

import numpy as np

from .mdp import FiniteMdp, GridWorld, PointMassEnv, UnsupportedOperation

KINDS = ("obstacle", "force", "motor_failure")


@dataclass(frozen=True)
class PerturbationSpec:
    """One test condition.

    ``magnitude`` is the obstacle extent (grid: number of cells taken from
    ``location``; point mass: side of a square centred at ``location``), the
    per-step push for ``force`` (along ``direction``), or the failure
    duration in steps for ``motor_failure``. ``window_end`` (inclusive)
    only matters for ``force`` and defaults to ``window_start``.
    """

    kind: str
    magnitude: float = 0.0
    window_start: int = 0
    window_end: int | None = None
    affected_actions: tuple = ()
    location: tuple = ()
    direction: tuple = (-1.0, 0.0)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown perturbation kind {self.kind!r}; expected one of {KINDS}")
        if self.window_end is None:
            object.__setattr__(self, "window_end", self.window_start)
        if self.window_start > self.window_end:
            raise ValueError("window_start must not exceed window_end")
        if self.kind == "motor_failure" and not self.affected_actions:
            raise ValueError("motor_failure needs a nonempty affected_actions set")
        if self.magnitude < 0:
            raise ValueError("magnitude must be nonnegative")
        object.__setattr__(self, "affected_actions", tuple(int(a) for a in self.affected_actions))
        object.__setattr__(self, "location", tuple(
            tuple(v) if isinstance(v, (list, tuple)) else v for v in self.location))
        object.__setattr__(self, "direction", tuple(float(v) for v in self.direction))

    def with_magnitude(self, magnitude: float) -> "PerturbationSpec":
        return dataclasses.replace(self, magnitude=magnitude)

    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        d["location"] = [list(v) if isinstance(v, tuple) else v for v in self.location]
        d["affected_actions"] = list(self.affected_actions)
        d["direction"] = list(self.direction)
        return d


class TimedPerturbation:
    """Wraps an environment and alters steps inside a time window."""

    def __init__(self, base, spec: PerturbationSpec, start: int, stop: int):
        self.base = base
        self.spec = spec
        self.start = start
        self.stop = stop  # exclusive

    def __getattr__(self, name):
        return getattr(self.base, name)

    def active(self, t: int) -> bool:
        return self.start <= t < self.stop

    def step(self, state, action, rng=None, t: int = 0):
        if not self.active(t):
            return self.base.step(state, action, rng, t)
        if self.spec.kind == "motor_failure":
            if int(action) in self.spec.affected_actions:
                action = self.base.noop_action
            return self.base.step(state, action, rng, t)
        nxt, reward, done = self.base.step(state, action, rng, t)
        bias = self.spec.magnitude * np.asarray(self.spec.direction)
        if isinstance(self.base, GridWorld):
            bias = np.round(bias).astype(int)
        return self.base.displace(state, nxt, bias, reward, done)

    def to_finite_mdp(self, *args, **kwargs):
        if self.start >= self.stop:
            return self.base.to_finite_mdp(*args, **kwargs)
        raise UnsupportedOperation("time-dependent perturbations are not stationary MDPs")

    def describe(self) -> dict[str, Any]:
        return {"kind": "perturbed", "base": self.base.describe(), "spec": self.spec.to_dict(),
                "window": [self.start, self.stop]}


def _clip_window(start: int, stop: int, horizon: int | None, what: str):
    if horizon is not None and stop > horizon:
        warnings.warn(f"{what} window [{start}, {stop}) extends past horizon {horizon}; clipped",
                      stacklevel=3)
        stop = horizon
        start = min(start, stop)
    return start, stop


def _obstacle(env, spec: PerturbationSpec):
    if isinstance(env, GridWorld):
        cells = [tuple(int(v) for v in c) for c in spec.location[: int(round(spec.magnitude))]]
        if env.start_cell in cells:
            raise ValueError("obstacle covers the start cell")
        return dataclasses.replace(env, walls=env.walls | frozenset(cells))
    if isinstance(env, PointMassEnv):
        if spec.magnitude == 0:
            return env
        cx, cy = float(spec.location[0]), float(spec.location[1])
        half = spec.magnitude / 2.0
        rect = (cx - half, cy - half, cx + half, cy + half)
        return dataclasses.replace(env, obstacles=env.obstacles + (rect,))
    if isinstance(env, FiniteMdp):
        blocked = [int(s) for s in spec.location[: int(round(spec.magnitude))]]
        if any(env.initial_dist[s] > 0 for s in blocked):
            raise ValueError("obstacle covers a start state")
        P = np.array(env.transition)
        for s in range(env.n_states):
            if s in blocked:
                continue
            for b in blocked:
                mass = P[s, :, b].copy()
                P[s, :, b] = 0.0
                P[s, :, s] += mass
        return env.with_transition(P)
    raise UnsupportedOperation(f"obstacles are not defined for {type(env).__name__}")


def apply_perturbation(env, spec: PerturbationSpec):
    """Build the test environment described by ``spec`` on top of ``env``."""
    if spec.kind == "obstacle":
        return _obstacle(env, spec)
    horizon = getattr(env, "horizon", None)
    if spec.kind == "force":
        if not hasattr(env, "displace"):
            raise UnsupportedOperation(f"force is not defined for {type(env).__name__}")
        # inclusive window [window_start, window_end]
        start, stop = _clip_window(spec.window_start, spec.window_end + 1, horizon, "force")
        return TimedPerturbation(env, spec, start, stop)
    start, stop = _clip_window(spec.window_start, spec.window_start + int(round(spec.magnitude)),
                               horizon, "motor failure")
    if any(not 0 <= a < env.n_actions for a in spec.affected_actions):
        raise ValueError("affected_actions contains an invalid action index")
    return TimedPerturbation(env, spec, start, stop)
