"""Latent-conditioned softmax policies over binary state features."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    z = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def logsumexp(x: np.ndarray, axis: int = -1) -> np.ndarray:
    m = np.max(x, axis=axis, keepdims=True)
    return (m + np.log(np.exp(x - m).sum(axis=axis, keepdims=True))).squeeze(axis)


@dataclass(frozen=True, eq=False)
class LatentPrior:
    probabilities: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("prior must be a nonempty vector")
        if (p < 0).any() or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("prior probabilities must be nonnegative and sum to 1")
        p.setflags(write=False)
        object.__setattr__(self, "probabilities", p)

    @classmethod
    def uniform(cls, n_latents: int) -> "LatentPrior":
        return cls(np.full(n_latents, 1.0 / n_latents))

    @property
    def n_latents(self) -> int:
        return self.probabilities.size

    def log_prob(self, z: int) -> float:
        p = self.probabilities[z]
        return math.log(p) if p > 0 else -math.inf


def sample_latent(prior: LatentPrior, rng: np.random.Generator) -> int:
    cdf = np.cumsum(prior.probabilities)
    return int(min(np.searchsorted(cdf, rng.random(), side="right"), prior.n_latents - 1))


def _phi(phi) -> np.ndarray:
    return np.atleast_1d(np.asarray(phi, dtype=np.int64))


class LatentPolicy:
    """pi(a | s, z) = softmax(sum_{j in phi(s)} W[z, j, :] / temperature).

    With one active feature per state this is a tabular policy; with
    several (tile coding) it is linear-softmax with one weight block per
    latent.
    """

    def __init__(self, weights: np.ndarray, temperature: float = 1.0):
        weights = np.asarray(weights, dtype=float)
        if weights.ndim != 3:
            raise ValueError("weights must have shape (n_latents, n_features, n_actions)")
        if not temperature > 0:
            raise ValueError("temperature must be positive")
        self.weights = weights
        self.temperature = float(temperature)

    @classmethod
    def initialize(cls, n_latents: int, n_features: int, n_actions: int, rng,
                   scale: float = 1e-3, temperature: float = 1.0) -> "LatentPolicy":
        rng = np.random.default_rng(rng)
        # each latent block draws its own noise
        blocks = [rng.normal(0.0, scale, size=(n_features, n_actions)) for _ in range(n_latents)]
        return cls(np.stack(blocks), temperature)

    @property
    def n_latents(self) -> int:
        return self.weights.shape[0]

    @property
    def n_features(self) -> int:
        return self.weights.shape[1]

    @property
    def n_actions(self) -> int:
        return self.weights.shape[2]

    def logits(self, phi, latent: int) -> np.ndarray:
        phi = _phi(phi)
        if latent < 0 or latent >= self.n_latents:
            raise ValueError(f"latent {latent} out of range")
        if (phi < 0).any() or (phi >= self.n_features).any():
            raise ValueError(f"feature index out of range: {phi}")
        out = self.weights[latent, phi].sum(axis=0)
        if not np.isfinite(out).all():
            raise ValueError("non-finite logits")
        return out

    def action_distribution(self, phi, latent: int) -> np.ndarray:
        return softmax(self.logits(phi, latent) / self.temperature)

    def greedy_action(self, phi, latent: int) -> int:
        # np.argmax returns the first maximum: ties go to the lowest index
        return int(np.argmax(self.logits(phi, latent)))

    def sample_action(self, phi, latent: int, rng: np.random.Generator) -> int:
        cdf = np.cumsum(self.action_distribution(phi, latent))
        return int(min(np.searchsorted(cdf, rng.random(), side="right"), self.n_actions - 1))

    def copy(self) -> "LatentPolicy":
        return LatentPolicy(self.weights.copy(), self.temperature)

    def to_arrays(self) -> dict[str, np.ndarray]:
        return {"weights": self.weights, "temperature": np.array([self.temperature])}

    @classmethod
    def from_arrays(cls, arrays) -> "LatentPolicy":
        return cls(arrays["weights"], float(arrays["temperature"][0]))


def action_distribution(policy: LatentPolicy, state, latent: int) -> np.ndarray:
    return policy.action_distribution(state, latent)


def greedy_action(policy: LatentPolicy, state, latent: int) -> int:
    return policy.greedy_action(state, latent)
