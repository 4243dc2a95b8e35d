"""Latent discriminator q(z | s) and the diversity reward it induces."""
from __future__ import annotations

import math

import numpy as np

from .policy import LatentPrior, softmax

DEFAULT_FLOOR = 1e-8


class Discriminator:
    """Multinomial logistic regression from binary state features to latents.

    Predictions are mixed with a probability floor,
    ``q = floor + (1 - K * floor) * softmax(scores)``, which keeps every
    entry at or above ``probability_floor`` and the vector normalised.

    Gradient ascent on the mean log-likelihood is monotone for
    ``learning_rate <= 1 / m`` where ``m`` is the number of active features
    per state (the softmax log-likelihood has curvature at most ``m / 2``).
    """

    def __init__(self, n_features: int, n_latents: int, learning_rate: float = 0.5,
                 probability_floor: float = DEFAULT_FLOOR, weights: np.ndarray | None = None):
        if n_latents * probability_floor >= 1.0:
            raise ValueError("probability_floor too large for the number of latents")
        self.n_features = int(n_features)
        self.n_latents = int(n_latents)
        self.learning_rate = float(learning_rate)
        self.probability_floor = float(probability_floor)
        if weights is None:
            weights = np.zeros((self.n_features, self.n_latents))
        self.weights = np.asarray(weights, dtype=float)
        if self.weights.shape != (self.n_features, self.n_latents):
            raise ValueError("weights must have shape (n_features, n_latents)")

    def _scores(self, phi) -> np.ndarray:
        phi = np.asarray(phi, dtype=np.int64)
        if (phi < 0).any() or (phi >= self.n_features).any():
            raise ValueError(f"feature index out of range: {phi}")
        s = self.weights[phi].sum(axis=-2)
        if not np.isfinite(s).all():
            raise ValueError("non-finite discriminator scores")
        return s

    def _mix(self, soft: np.ndarray) -> np.ndarray:
        return self.probability_floor + (1.0 - self.n_latents * self.probability_floor) * soft

    def predict(self, phi) -> np.ndarray:
        """Distribution over latents for one state (``phi`` 1-D) or a batch (2-D)."""
        phi = np.asarray(phi, dtype=np.int64)
        if phi.ndim == 0:
            phi = phi[None]
        return self._mix(softmax(self._scores(phi)))

    def unsupervised_reward(self, phi, latent: int, prior: LatentPrior) -> float:
        """log q(z | s) - log p(z)."""
        p_z = prior.probabilities[latent]
        if p_z <= 0:
            raise ValueError(f"latent {latent} has zero prior probability")
        return math.log(self.predict(phi)[latent]) - math.log(p_z)

    def log_likelihood(self, phi_batch, latents) -> float:
        q = self.predict(np.asarray(phi_batch).reshape(len(latents), -1))
        return float(np.mean(np.log(q[np.arange(len(latents)), latents])))

    def gradient(self, phi_batch, latents) -> np.ndarray:
        phi_batch = np.asarray(phi_batch, dtype=np.int64).reshape(len(latents), -1)
        latents = np.asarray(latents, dtype=np.int64)
        n = len(latents)
        p = softmax(self._scores(phi_batch))
        q = self._mix(p)
        rows = np.arange(n)
        c = 1.0 - self.n_latents * self.probability_floor
        # d log q_z / d score_k = c * p_z * (delta_zk - p_k) / q_z
        onehot = np.zeros_like(p)
        onehot[rows, latents] = 1.0
        g = (c * p[rows, latents] / q[rows, latents])[:, None] * (onehot - p) / n
        grad = np.zeros_like(self.weights)
        for col in range(phi_batch.shape[1]):
            np.add.at(grad, phi_batch[:, col], g)
        return grad

    def update(self, phi_batch, latents) -> float:
        """One ascent step; returns the mean log-likelihood before the step."""
        latents = np.asarray(latents, dtype=np.int64)
        if latents.size == 0:
            raise ValueError("empty batch")
        before = self.log_likelihood(phi_batch, latents)
        self.weights += self.learning_rate * self.gradient(phi_batch, latents)
        return before

    def copy(self) -> "Discriminator":
        return Discriminator(self.n_features, self.n_latents, self.learning_rate,
                             self.probability_floor, self.weights.copy())

    def to_arrays(self) -> dict[str, np.ndarray]:
        return {"disc_weights": self.weights,
                "disc_params": np.array([self.learning_rate, self.probability_floor])}

    @classmethod
    def from_arrays(cls, arrays) -> "Discriminator":
        w = arrays["disc_weights"]
        lr, floor = (float(v) for v in arrays["disc_params"])
        return cls(w.shape[0], w.shape[1], lr, floor, w)


def predict(discriminator: Discriminator, state) -> np.ndarray:
    return discriminator.predict(state)


def unsupervised_reward(discriminator: Discriminator, state, latent: int, prior: LatentPrior) -> float:
    return discriminator.unsupervised_reward(state, latent, prior)


def discriminator_step(discriminator: Discriminator, batch) -> tuple[Discriminator, float]:
    """``batch`` is a sequence of ``(phi, latent)`` pairs."""
    if len(batch) == 0:
        raise ValueError("empty batch")
    phis = np.stack([np.atleast_1d(np.asarray(p, dtype=np.int64)) for p, _ in batch])
    zs = np.array([z for _, z in batch], dtype=np.int64)
    ll = discriminator.update(phis, zs)
    return discriminator, ll
