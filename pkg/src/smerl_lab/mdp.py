"""Environments, trajectories and returns.

Three environment kinds share a small duck-typed protocol used by the
learner and the evaluators:

    n_actions, n_features, horizon, noop_action
    reset(rng) -> state
    step(state, action, rng, t=0) -> (next_state, reward, done)
    features(state) -> int array of active (binary) feature indices
    is_success(state) -> bool
    describe() -> JSON-able dict

Environments are immutable; perturbed variants are new objects.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

PROB_TOL = 1e-12


class UnsupportedOperation(Exception):
    """Raised when an operation needs a tractable (finite) environment."""


def _as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def env_hash(env) -> str:
    blob = json.dumps(env.describe(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


# --------------------------------------------------------------------------- #
# Finite tabular MDP
# --------------------------------------------------------------------------- #


@dataclass(frozen=True, eq=False)
class FiniteMdp:
    """Explicit tabular MDP ``(S, A, P, R, gamma, mu)`` with optional horizon.

    ``transition[s, a, s2]`` is P(s2 | s, a) and ``reward[s, a]`` is R(s, a).
    ``terminal`` marks absorbing states at which an episode stops.
    """

    transition: np.ndarray
    reward: np.ndarray
    discount: float
    initial_dist: np.ndarray
    horizon: int | None = None
    terminal: np.ndarray | None = None

    noop_action = 0

    def __post_init__(self):
        P = np.asarray(self.transition, dtype=float)
        R = np.asarray(self.reward, dtype=float)
        mu = np.asarray(self.initial_dist, dtype=float)
        if P.ndim != 3 or P.shape[0] != P.shape[2]:
            raise ValueError(f"transition must have shape (S, A, S), got {P.shape}")
        n_s, n_a, _ = P.shape
        if R.shape != (n_s, n_a):
            raise ValueError(f"reward must have shape {(n_s, n_a)}, got {R.shape}")
        if mu.shape != (n_s,):
            raise ValueError(f"initial_dist must have shape {(n_s,)}, got {mu.shape}")
        if (P < 0).any() or (mu < 0).any():
            raise ValueError("probabilities must be nonnegative")
        bad = np.abs(P.sum(axis=2) - 1.0) > PROB_TOL
        if bad.any():
            s, a = map(int, np.argwhere(bad)[0])
            raise ValueError(f"transition row (s={s}, a={a}) does not sum to 1")
        if abs(mu.sum() - 1.0) > PROB_TOL:
            raise ValueError("initial_dist does not sum to 1")
        if not np.isfinite(R).all():
            raise ValueError("reward table must be finite")
        if not 0.0 <= self.discount <= 1.0:
            raise ValueError("discount must lie in [0, 1]")
        if self.horizon is None and self.discount >= 1.0:
            raise ValueError("discount must be < 1 when no horizon is set")
        if self.horizon is not None and self.horizon < 1:
            raise ValueError("horizon must be positive")
        term = np.zeros(n_s, dtype=bool) if self.terminal is None else np.asarray(self.terminal, dtype=bool)
        if term.shape != (n_s,):
            raise ValueError("terminal mask must have one entry per state")
        for name, arr in (("transition", P), ("reward", R), ("initial_dist", mu), ("terminal", term)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        cdf = np.cumsum(P, axis=2)
        cdf[..., -1] = 1.0
        cdf.setflags(write=False)
        object.__setattr__(self, "_cdf", cdf)

    @property
    def n_states(self) -> int:
        return self.transition.shape[0]

    @property
    def n_actions(self) -> int:
        return self.transition.shape[1]

    @property
    def n_features(self) -> int:
        return self.n_states

    def _check(self, state, action=None):
        if not (isinstance(state, (int, np.integer)) and 0 <= state < self.n_states):
            raise ValueError(f"invalid state {state!r} for MDP with {self.n_states} states")
        if action is not None and not (isinstance(action, (int, np.integer)) and 0 <= action < self.n_actions):
            raise ValueError(f"invalid action {action!r} for MDP with {self.n_actions} actions")

    def reset(self, rng) -> int:
        rng = _as_rng(rng)
        cdf = np.cumsum(self.initial_dist)
        return int(min(np.searchsorted(cdf, rng.random(), side="right"), self.n_states - 1))

    def step(self, state, action, rng, t: int = 0):
        self._check(state, action)
        row = self._cdf[state, action]
        if row[0] >= 1.0:
            nxt = 0
        elif np.count_nonzero(self.transition[state, action]) == 1:
            nxt = int(np.flatnonzero(self.transition[state, action])[0])
        else:
            nxt = int(np.searchsorted(row, _as_rng(rng).random(), side="right"))
        return nxt, float(self.reward[state, action]), bool(self.terminal[nxt])

    def features(self, state) -> np.ndarray:
        return np.array([state], dtype=np.int64)

    def is_success(self, state) -> bool:
        return bool(self.terminal[state])

    def with_reward(self, reward) -> "FiniteMdp":
        return FiniteMdp(self.transition, reward, self.discount, self.initial_dist, self.horizon, self.terminal)

    def with_transition(self, transition) -> "FiniteMdp":
        return FiniteMdp(transition, self.reward, self.discount, self.initial_dist, self.horizon, self.terminal)

    def describe(self) -> dict[str, Any]:
        return {
            "kind": "finite",
            "transition": self.transition.tolist(),
            "reward": self.reward.tolist(),
            "discount": self.discount,
            "initial_dist": self.initial_dist.tolist(),
            "horizon": self.horizon,
            "terminal": self.terminal.astype(int).tolist(),
        }

    def to_finite_mdp(self) -> "FiniteMdp":
        return self


# --------------------------------------------------------------------------- #
# GridWorld
# --------------------------------------------------------------------------- #

# 0 is the no-op so that a lexicographically-first policy never moves.
GRID_MOVES = ((0, 0), (1, 0), (0, 1), (-1, 0), (0, -1))
GRID_ACTION_NAMES = ("stay", "right", "up", "left", "down")


@dataclass(frozen=True)
class GridWorld:
    """Deterministic grid; cells are ``(x, y)`` and states are ``y * width + x``.

    Reaching ``goal_cell`` pays ``step_reward + goal_reward`` and ends the
    episode. Moves into walls or off-grid leave the agent in place.
    """

    width: int = 7
    height: int = 5
    start_cell: tuple[int, int] = (0, 2)
    goal_cell: tuple[int, int] = (6, 2)
    step_reward: float = -1.0
    goal_reward: float = 10.0
    walls: frozenset = frozenset()
    horizon: int = 20

    noop_action = 0
    n_actions = len(GRID_MOVES)

    def __post_init__(self):
        object.__setattr__(self, "walls", frozenset(tuple(map(int, c)) for c in self.walls))
        object.__setattr__(self, "start_cell", tuple(map(int, self.start_cell)))
        object.__setattr__(self, "goal_cell", tuple(map(int, self.goal_cell)))
        for name in ("start_cell", "goal_cell"):
            if not self.in_bounds(getattr(self, name)):
                raise ValueError(f"{name} {getattr(self, name)} lies outside the grid")
        if self.start_cell in self.walls:
            raise ValueError("start cell is blocked")
        if self.horizon < 1:
            raise ValueError("horizon must be positive")

    @property
    def n_states(self) -> int:
        return self.width * self.height

    @property
    def n_features(self) -> int:
        return self.n_states

    def in_bounds(self, cell) -> bool:
        return 0 <= cell[0] < self.width and 0 <= cell[1] < self.height

    def cell_of(self, state: int) -> tuple[int, int]:
        return int(state) % self.width, int(state) // self.width

    def state_of(self, cell) -> int:
        return int(cell[1]) * self.width + int(cell[0])

    def _move(self, cell, delta):
        nxt = (cell[0] + delta[0], cell[1] + delta[1])
        if not self.in_bounds(nxt) or nxt in self.walls:
            return cell
        return nxt

    def reset(self, rng=None) -> int:
        return self.state_of(self.start_cell)

    def step(self, state, action, rng=None, t: int = 0):
        if not (isinstance(action, (int, np.integer)) and 0 <= action < self.n_actions):
            raise ValueError(f"invalid action {action!r}")
        if not (isinstance(state, (int, np.integer)) and 0 <= state < self.n_states):
            raise ValueError(f"invalid state {state!r}")
        cell = self.cell_of(state)
        if cell == self.goal_cell:
            return state, 0.0, True
        nxt = self._move(cell, GRID_MOVES[action])
        return self._arrive(nxt)

    def _arrive(self, cell):
        if cell == self.goal_cell:
            return self.state_of(cell), self.step_reward + self.goal_reward, True
        return self.state_of(cell), self.step_reward, False

    def displace(self, state, next_state, delta, reward, done):
        """Push the agent ``delta`` cells after a step (used by Force)."""
        if done:
            return next_state, reward, done
        cell = self.cell_of(next_state)
        dx, dy = int(delta[0]), int(delta[1])
        for unit, count in (((int(np.sign(dx)), 0), abs(dx)), ((0, int(np.sign(dy))), abs(dy))):
            for _ in range(count):
                cell = self._move(cell, unit)
        if cell == self.goal_cell:
            return self.state_of(cell), reward + self.goal_reward, True
        return self.state_of(cell), reward, False

    def features(self, state) -> np.ndarray:
        return np.array([state], dtype=np.int64)

    def is_success(self, state) -> bool:
        return self.cell_of(state) == self.goal_cell

    def to_finite_mdp(self, discount: float = 0.99) -> FiniteMdp:
        n = self.n_states
        P = np.zeros((n, self.n_actions, n))
        R = np.zeros((n, self.n_actions))
        for s in range(n):
            for a in range(self.n_actions):
                s2, r, _ = self.step(s, a)
                P[s, a, s2] = 1.0
                R[s, a] = r
        mu = np.zeros(n)
        mu[self.reset()] = 1.0
        term = np.zeros(n, dtype=bool)
        term[self.state_of(self.goal_cell)] = True
        return FiniteMdp(P, R, discount, mu, self.horizon, term)

    def describe(self) -> dict[str, Any]:
        return {
            "kind": "gridworld",
            "width": self.width,
            "height": self.height,
            "start_cell": list(self.start_cell),
            "goal_cell": list(self.goal_cell),
            "step_reward": self.step_reward,
            "goal_reward": self.goal_reward,
            "walls": sorted(list(c) for c in self.walls),
            "horizon": self.horizon,
        }


# --------------------------------------------------------------------------- #
# 2D point-mass navigation
# --------------------------------------------------------------------------- #

# Integer direction vectors on a lattice of spacing action_scale / 3. Every
# vector fits the per-axis box and has Euclidean length within 12% of the
# others, so bowed paths to the goal cost little more than the straight one.
POINT_DIRECTIONS = (
    (0, 0),
    (3, 0), (3, 1), (2, 2), (1, 3), (0, 3), (-1, 3), (-2, 2), (-3, 1),
    (-3, 0), (-3, -1), (-2, -2), (-1, -3), (0, -3), (1, -3), (2, -2), (3, -1),
)
LATTICE_DIVISIONS = 3


def segment_entry(p, d, rect) -> float | None:
    """First parameter in [0, 1] at which ``p + s*d`` enters the open ``rect``.

    ``rect`` is ``(xmin, ymin, xmax, ymax)``. Returns None if the segment
    never enters the interior.
    """
    lo_t, hi_t = 0.0, 1.0
    for axis in range(2):
        lo, hi = rect[axis], rect[axis + 2]
        if d[axis] == 0.0:
            if not lo < p[axis] < hi:
                return None
            continue
        t1 = (lo - p[axis]) / d[axis]
        t2 = (hi - p[axis]) / d[axis]
        if t1 > t2:
            t1, t2 = t2, t1
        lo_t, hi_t = max(lo_t, t1), min(hi_t, t2)
        if lo_t >= hi_t:
            return None
    return lo_t


@dataclass(frozen=True)
class PointMassEnv:
    """Point mass in a square arena, rewarded by negative distance to the goal.

    States are ``(x, y)`` tuples. Discrete actions index ``POINT_DIRECTIONS``
    (0 is stay); a length-2 array is taken as a continuous displacement and
    clipped to ``action_scale`` per axis. Episodes run ``max_steps`` steps.
    """

    arena_side: float = 4.0
    start: tuple[float, float] = (0.0, 0.0)
    goal: tuple[float, float] = (3.5, 3.5)
    goal_radius: float = 0.5
    max_steps: int = 30
    action_scale: float = 0.375
    obstacles: tuple = ()

    noop_action = 0
    n_actions = len(POINT_DIRECTIONS)

    def __post_init__(self):
        object.__setattr__(self, "start", tuple(float(v) for v in self.start))
        object.__setattr__(self, "goal", tuple(float(v) for v in self.goal))
        object.__setattr__(self, "obstacles", tuple(tuple(float(v) for v in r) for r in self.obstacles))
        if self.action_scale <= 0 or self.max_steps < 1:
            raise ValueError("action_scale and max_steps must be positive")
        for rect in self.obstacles:
            if rect[0] < self.start[0] < rect[2] and rect[1] < self.start[1] < rect[3]:
                raise ValueError("obstacle covers the start position")

    @property
    def horizon(self) -> int:
        return self.max_steps

    @property
    def lattice(self) -> float:
        return self.action_scale / LATTICE_DIVISIONS

    @property
    def grid_points(self) -> int:
        return int(round(self.arena_side / self.lattice)) + 1

    @property
    def n_features(self) -> int:
        return self.grid_points ** 2

    def displacement(self, action) -> np.ndarray:
        if isinstance(action, (int, np.integer)):
            if not 0 <= action < self.n_actions:
                raise ValueError(f"invalid action {action!r}")
            return np.array(POINT_DIRECTIONS[action], dtype=float) * self.lattice
        vec = np.asarray(action, dtype=float)
        if vec.shape != (2,) or not np.isfinite(vec).all():
            raise ValueError(f"invalid continuous action {action!r}")
        return np.clip(vec, -self.action_scale, self.action_scale)

    def reward_at(self, pos) -> float:
        return -math.hypot(pos[0] - self.goal[0], pos[1] - self.goal[1])

    def reset(self, rng=None):
        return self.start

    def move(self, state, disp):
        p = np.asarray(state, dtype=float)
        d = np.asarray(disp, dtype=float)
        s_hit = 1.0
        for rect in self.obstacles:
            hit = segment_entry(p, d, rect)
            if hit is not None:
                s_hit = min(s_hit, hit)
        q = np.clip(p + s_hit * d, 0.0, self.arena_side)
        # snap float noise back onto the lattice so unperturbed runs stay exact
        snapped = np.round(q / self.lattice) * self.lattice
        q = np.where(np.abs(q - snapped) < 1e-9, snapped, q)
        return (float(q[0]), float(q[1]))

    def step(self, state, action, rng=None, t: int = 0):
        if len(state) != 2:
            raise ValueError(f"invalid state {state!r}")
        nxt = self.move(state, self.displacement(action))
        return nxt, self.reward_at(nxt), False

    def displace(self, state, next_state, delta, reward, done):
        nxt = self.move(next_state, delta)
        return nxt, self.reward_at(nxt), done

    def features(self, state) -> np.ndarray:
        n = self.grid_points
        i = min(max(int(round(state[0] / self.lattice)), 0), n - 1)
        j = min(max(int(round(state[1] / self.lattice)), 0), n - 1)
        return np.array([j * n + i], dtype=np.int64)

    def is_success(self, state) -> bool:
        return math.hypot(state[0] - self.goal[0], state[1] - self.goal[1]) <= self.goal_radius + 1e-12

    def to_finite_mdp(self, discount: float = 0.99) -> FiniteMdp:
        """Exact lowering on the action lattice (only valid without obstacles)."""
        if self.obstacles:
            raise UnsupportedOperation("obstacle truncation leaves the lattice")
        n = self.grid_points
        for v in (*self.start, *self.goal):
            if abs(v / self.lattice - round(v / self.lattice)) > 1e-9:
                raise UnsupportedOperation("start/goal must lie on the action lattice")
        P = np.zeros((n * n, self.n_actions, n * n))
        R = np.zeros((n * n, self.n_actions))
        for s in range(n * n):
            pos = ((s % n) * self.lattice, (s // n) * self.lattice)
            for a in range(self.n_actions):
                nxt, r, _ = self.step(pos, a)
                P[s, a, int(self.features(nxt)[0])] = 1.0
                R[s, a] = r
        mu = np.zeros(n * n)
        mu[int(self.features(self.start)[0])] = 1.0
        return FiniteMdp(P, R, discount, mu, self.max_steps)

    def describe(self) -> dict[str, Any]:
        return {
            "kind": "pointmass",
            "arena_side": self.arena_side,
            "start": list(self.start),
            "goal": list(self.goal),
            "goal_radius": self.goal_radius,
            "max_steps": self.max_steps,
            "action_scale": self.action_scale,
            "obstacles": [list(r) for r in self.obstacles],
        }


def step(env, state, action, rng=None, t: int = 0):
    """Sample one transition; returns ``(next_state, reward)``."""
    nxt, reward, _ = env.step(state, action, rng, t)
    return nxt, reward


# --------------------------------------------------------------------------- #
# Trajectories and returns
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class Step:
    state: Any
    action: int
    reward: float
    unsupervised_reward: float
    next_state: Any
    done: bool = False


@dataclass
class Trajectory:
    latent: int
    steps: list[Step] = field(default_factory=list)
    episode_return: float = 0.0
    seed: Any = None

    def recompute_return(self, discount: float = 1.0) -> float:
        return discounted_return(self, discount)

    @property
    def states(self) -> list:
        if not self.steps:
            return []
        return [self.steps[0].state] + [s.next_state for s in self.steps]

    @property
    def final_state(self):
        return self.steps[-1].next_state

    def is_chained(self) -> bool:
        return all(a.next_state == b.state for a, b in zip(self.steps, self.steps[1:]))


def discounted_return(trajectory: Trajectory | Sequence[float], discount: float = 1.0) -> float:
    """Sum of ``discount**t * r_t`` over the trajectory's rewards."""
    rewards = [s.reward for s in trajectory.steps] if isinstance(trajectory, Trajectory) else list(trajectory)
    total = 0.0
    weight = 1.0
    for r in rewards:
        total += weight * r
        weight *= discount
    return total


def rollout(env, policy, latent: int, rng, *, greedy: bool = False, max_steps: int | None = None,
            discriminator=None, prior=None, seed=None) -> Trajectory:
    """Run one episode of ``policy`` conditioned on ``latent``.

    When a discriminator and prior are given, each step also records the
    diversity reward computed from the successor state.
    """
    rng = _as_rng(rng)
    horizon = max_steps if max_steps is not None else env.horizon
    if horizon is None:
        raise UnsupportedOperation("rollouts need a finite horizon")
    state = env.reset(rng)
    steps = []
    total = 0.0
    for t in range(horizon):
        phi = env.features(state)
        action = policy.greedy_action(phi, latent) if greedy else policy.sample_action(phi, latent, rng)
        nxt, reward, done = env.step(state, action, rng, t)
        r_tilde = 0.0
        if discriminator is not None:
            r_tilde = discriminator.unsupervised_reward(env.features(nxt), latent, prior)
        steps.append(Step(state, int(action), float(reward), float(r_tilde), nxt, bool(done)))
        total += reward
        state = nxt
        if done:
            break
    return Trajectory(latent, steps, total, seed)


def trajectory_log_prob(mdp, policy, latent: int, trajectory: Trajectory) -> float:
    """log mu(s0) + sum_t [log pi(a_t|s_t,z) + log P(s_{t+1}|s_t,a_t)].

    Returns ``-inf`` when any factor is zero.
    """
    if not isinstance(mdp, FiniteMdp):
        if hasattr(mdp, "to_finite_mdp") and not isinstance(mdp, PointMassEnv):
            mdp = mdp.to_finite_mdp()
        else:
            raise UnsupportedOperation(f"no tractable trajectory density for {type(mdp).__name__}")
    if not trajectory.steps:
        raise ValueError("empty trajectory")
    logp = 0.0
    first = trajectory.steps[0].state
    mdp._check(first)
    terms = [mdp.initial_dist[first]]
    for st in trajectory.steps:
        mdp._check(st.state, st.action)
        mdp._check(st.next_state)
        terms.append(policy.action_distribution(mdp.features(st.state), latent)[st.action])
        terms.append(mdp.transition[st.state, st.action, st.next_state])
    for p in terms:
        if p <= 0.0:
            return -math.inf
        logp += math.log(p)
    return logp
