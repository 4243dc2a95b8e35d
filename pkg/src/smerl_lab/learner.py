"""Discrete maximum-entropy TD learning with the return-gated diversity bonus.

The critic is soft Q-learning over ``(z, s, a)``; the acting policy is
``softmax(Q / entropy_temperature)``. Five training modes share one code
path and differ only in the reward handed to the critic (``gated_reward``).
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .diversity import Discriminator
from .mdp import rollout
from .policy import LatentPolicy, LatentPrior, logsumexp, sample_latent

MODES = ("SAC1", "SACk", "DIAYN", "SAC_PLUS_DIAYN", "SMERL")


@dataclass
class TrainerConfig:
    mode: str = "SMERL"
    n_latents: int = 5
    alpha: float = 10.0
    epsilon: float | None = None
    epsilon_fraction: float = 0.05
    optimal_return_estimate: float | None = None
    entropy_temperature: float = 0.1
    learning_rate: float = 3e-4
    discount: float = 0.99
    episodes: int = 1000
    replay_capacity: int = 1000
    batch_size: int = 128
    updates_per_step: int = 1
    discriminator_lr: float = 0.5
    probability_floor: float = 1e-8
    init_scale: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == "SAC1":
            self.n_latents = 1
        if self.n_latents < 1:
            raise ValueError("n_latents must be at least 1")
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        if self.epsilon is not None and self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        if self.epsilon_fraction < 0:
            raise ValueError("epsilon_fraction must be nonnegative")
        if not self.entropy_temperature > 0:
            raise ValueError("entropy_temperature must be positive")
        if self.replay_capacity < 1 or self.batch_size < 1:
            raise ValueError("replay_capacity and batch_size must be positive")

    @property
    def effective_epsilon(self) -> float:
        """Absolute slack; defaults to ``epsilon_fraction * |R*|``."""
        if self.epsilon is not None:
            return self.epsilon
        if self.optimal_return_estimate is None:
            return math.inf
        return self.epsilon_fraction * abs(self.optimal_return_estimate)

    def validate_for_training(self):
        if self.mode == "SMERL" and self.optimal_return_estimate is None:
            raise ValueError("SMERL mode requires optimal_return_estimate")

    def replace(self, **changes) -> "TrainerConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


def gated_reward(env_reward, unsup_reward, episode_return, config: TrainerConfig):
    """Reward optimised by the critic for each mode (scalar or array inputs).

    SMERL adds ``alpha * r_tilde`` only for transitions whose episode return
    reached ``R* - epsilon``.
    """
    mode = config.mode
    if mode in ("SAC1", "SACk"):
        return env_reward
    if mode == "DIAYN":
        return unsup_reward
    if mode == "SAC_PLUS_DIAYN":
        return env_reward + config.alpha * unsup_reward
    if config.optimal_return_estimate is None:
        raise ValueError("SMERL mode requires optimal_return_estimate")
    threshold = config.optimal_return_estimate - config.effective_epsilon
    on = np.asarray(episode_return) >= threshold
    if np.ndim(on) == 0:
        on = float(bool(on))
    else:
        on = on.astype(float)
    return env_reward + config.alpha * on * unsup_reward


def indicator_on(episode_return: float, config: TrainerConfig) -> bool:
    if config.mode != "SMERL":
        return config.mode == "SAC_PLUS_DIAYN"
    return episode_return >= config.optimal_return_estimate - config.effective_epsilon


# --------------------------------------------------------------------------- #
# Replay buffer
# --------------------------------------------------------------------------- #


class ReplayBuffer:
    """Fixed-capacity ring of transitions; oldest entries are overwritten first."""

    def __init__(self, capacity: int, n_active: int = 1):
        self.capacity = int(capacity)
        self.phi = np.zeros((capacity, n_active), dtype=np.int64)
        self.next_phi = np.zeros((capacity, n_active), dtype=np.int64)
        self.action = np.zeros(capacity, dtype=np.int64)
        self.latent = np.zeros(capacity, dtype=np.int64)
        self.env_reward = np.zeros(capacity)
        self.unsup_reward = np.zeros(capacity)
        self.episode_return = np.zeros(capacity)
        self.done = np.zeros(capacity, dtype=bool)
        self.pos = 0
        self.size = 0

    def __len__(self):
        return self.size

    def push_episode(self, rows):
        """Append all transitions of one finished episode.

        Each row is ``(phi, action, env_reward, unsup_reward, next_phi,
        latent, episode_return, done)``.
        """
        for phi, a, r, rt, nphi, z, ret, done in rows:
            i = self.pos
            self.phi[i] = phi
            self.next_phi[i] = nphi
            self.action[i] = a
            self.env_reward[i] = r
            self.unsup_reward[i] = rt
            self.latent[i] = z
            self.episode_return[i] = ret
            self.done[i] = done
            self.pos = (self.pos + 1) % self.capacity
            self.size = min(self.size + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator) -> dict[str, np.ndarray]:
        if self.size == 0:
            raise ValueError("cannot sample from an empty buffer")
        idx = rng.integers(0, self.size, size=batch_size)
        return self.take(idx)

    def take(self, idx) -> dict[str, np.ndarray]:
        return {
            "phi": self.phi[idx], "next_phi": self.next_phi[idx], "action": self.action[idx],
            "latent": self.latent[idx], "env_reward": self.env_reward[idx],
            "unsup_reward": self.unsup_reward[idx], "episode_return": self.episode_return[idx],
            "done": self.done[idx],
        }


# --------------------------------------------------------------------------- #
# Soft Q learner
# --------------------------------------------------------------------------- #


class SoftQLearner:
    """Q(z, s, a) = sum_{j in phi(s)} W[z, j, a] with soft value backups."""

    def __init__(self, q: np.ndarray, entropy_temperature: float):
        self.q = np.asarray(q, dtype=float)
        self.entropy_temperature = float(entropy_temperature)

    @classmethod
    def initialize(cls, n_latents, n_features, n_actions, entropy_temperature, rng, scale=1e-3):
        policy = LatentPolicy.initialize(n_latents, n_features, n_actions, rng, scale=scale)
        return cls(policy.weights, entropy_temperature)

    def q_values(self, phi: np.ndarray, latents: np.ndarray) -> np.ndarray:
        """Batch of action values, shape ``(B, n_actions)``."""
        return self.q[latents[:, None], phi].sum(axis=1)

    def soft_value(self, phi: np.ndarray, latents: np.ndarray) -> np.ndarray:
        tau = self.entropy_temperature
        return tau * logsumexp(self.q_values(phi, latents) / tau, axis=1)

    def policy(self) -> LatentPolicy:
        # shares the weight array: rollouts always act on the current critic
        return LatentPolicy(self.q, self.entropy_temperature)


def soft_q_update(learner: SoftQLearner, batch: dict, rewards: np.ndarray, discount: float,
                  learning_rate: float) -> SoftQLearner:
    """Move Q(z, s, a) toward ``r + discount * V(s', z)`` (V = 0 at terminals).

    Duplicate ``(z, s, a)`` entries in a batch are averaged so the step size
    per entry never exceeds ``learning_rate``.
    """
    phi, nphi = batch["phi"], batch["next_phi"]
    z, a = batch["latent"], batch["action"]
    v_next = learner.soft_value(nphi, z)
    target = rewards + discount * np.where(batch["done"], 0.0, v_next)
    current = learner.q_values(phi, z)[np.arange(len(a)), a]
    td = target - current
    n_z, n_f, n_a = learner.q.shape
    m = phi.shape[1]
    flat = ((z[:, None] * n_f + phi) * n_a + a[:, None]).ravel()
    cells, inverse = np.unique(flat, return_inverse=True)
    sums = np.bincount(inverse, weights=np.repeat(td, m))
    counts = np.bincount(inverse)
    learner.q.flat[cells] += learning_rate * sums / counts / m
    return learner


# --------------------------------------------------------------------------- #
# Training loop
# --------------------------------------------------------------------------- #


@dataclass
class EpisodeMetrics:
    episode: int
    latent: int
    env_return: float
    gated_return_sum: float
    indicator_on: bool
    discriminator_loglik: float

    FIELDS = ("episode", "latent", "env_return", "gated_return_sum", "indicator_on", "discriminator_loglik")

    def row(self) -> list:
        return [self.episode, self.latent, repr(float(self.env_return)), repr(float(self.gated_return_sum)),
                int(self.indicator_on), repr(float(self.discriminator_loglik))]


def episode_rng(seed: int, episode: int) -> np.random.Generator:
    """Per-episode stream derived from the run seed (run -> episode -> step)."""
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(1, int(episode))))


def init_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(0,)))


def train_episode(env, learner: SoftQLearner, discriminator: Discriminator, buffer: ReplayBuffer,
                  config: TrainerConfig, rng: np.random.Generator, prior: LatentPrior | None = None,
                  episode: int = 0, audit: list | None = None):
    """Collect one episode under a single latent, then run the gated updates.

    Diversity rewards are computed from successor states; the discriminator
    is trained on the (s_t, z) pairs drawn from replay. Returns the
    trajectory and the episode's metrics row.
    """
    prior = prior or LatentPrior.uniform(config.n_latents)
    policy = learner.policy()
    z = sample_latent(prior, rng)
    traj = rollout(env, policy, z, rng, discriminator=discriminator, prior=prior)
    ret = traj.episode_return
    rows = [(env.features(st.state), st.action, st.reward, st.unsupervised_reward,
             env.features(st.next_state), z, ret, st.done) for st in traj.steps]
    buffer.push_episode(rows)

    gated_sum = float(np.sum(gated_reward(
        np.array([s.reward for s in traj.steps]), np.array([s.unsupervised_reward for s in traj.steps]),
        ret, config)))
    lls = []
    for _ in range(len(traj.steps) * config.updates_per_step):
        batch = buffer.sample(min(config.batch_size, len(buffer)), rng)
        rewards = gated_reward(batch["env_reward"], batch["unsup_reward"], batch["episode_return"], config)
        if audit is not None:
            audit.append((batch, rewards))
        soft_q_update(learner, batch, rewards, config.discount, config.learning_rate)
        lls.append(discriminator.update(batch["phi"], batch["latent"]))
    metrics = EpisodeMetrics(episode, z, ret, gated_sum, bool(indicator_on(ret, config)),
                             float(np.mean(lls)) if lls else 0.0)
    return traj, metrics


class Trainer:
    """Owns one run's critic, discriminator and replay buffer."""

    def __init__(self, env, config: TrainerConfig):
        config.validate_for_training()
        self.env = env
        self.config = config
        self.prior = LatentPrior.uniform(config.n_latents)
        rng = init_rng(config.seed)
        self.learner = SoftQLearner.initialize(config.n_latents, env.n_features, env.n_actions,
                                               config.entropy_temperature, rng, scale=config.init_scale)
        self.discriminator = Discriminator(env.n_features, config.n_latents, config.discriminator_lr,
                                           config.probability_floor)
        n_active = len(env.features(env.reset(rng)))
        self.buffer = ReplayBuffer(config.replay_capacity, n_active)
        self.episode = 0
        self.metrics: list[EpisodeMetrics] = []

    @property
    def policy(self) -> LatentPolicy:
        return self.learner.policy()

    def run(self, episodes: int | None = None, callback=None, audit: list | None = None):
        n = self.config.episodes if episodes is None else episodes
        for _ in range(n):
            rng = episode_rng(self.config.seed, self.episode)
            traj, m = train_episode(self.env, self.learner, self.discriminator, self.buffer,
                                    self.config, rng, self.prior, self.episode, audit)
            self.metrics.append(m)
            self.episode += 1
            if callback is not None:
                callback(self, traj, m)
        return self

    def greedy_returns(self, env=None, seed: int = 0) -> list[float]:
        env = env or self.env
        pol = self.policy
        return [rollout(env, pol, z, np.random.default_rng(seed), greedy=True).episode_return
                for z in range(self.config.n_latents)]

    def checkpoint_arrays(self) -> dict[str, np.ndarray]:
        out = {"weights": self.learner.q, "temperature": np.array([self.learner.entropy_temperature])}
        out.update(self.discriminator.to_arrays())
        return out


def estimate_optimal_return(env, config: TrainerConfig, rng=None, method: str = "sac",
                            eval_every: int = 25) -> float:
    """R* used for gating.

    ``method="exact"`` solves the (lowered) finite MDP for the optimal
    undiscounted episode return; ``method="sac"`` trains a single-latent
    baseline and keeps the best greedy evaluation return seen.
    """
    if method == "exact":
        from .theory import optimal_episode_return

        return optimal_episode_return(env.to_finite_mdp())
    if method != "sac":
        raise ValueError(f"unknown method {method!r}")
    seed = config.seed if rng is None else int(np.random.default_rng(rng).integers(2**31))
    base = config.replace(mode="SAC1", n_latents=1, seed=seed, optimal_return_estimate=None, alpha=0.0)
    trainer = Trainer(env, base)
    best = -math.inf

    def probe(tr, _traj, m):
        nonlocal best
        if (m.episode + 1) % eval_every == 0 or m.episode + 1 == base.episodes:
            best = max(best, tr.greedy_returns()[0])

    trainer.run(callback=probe)
    return best
