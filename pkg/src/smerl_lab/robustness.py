"""Few-shot policy selection in a test environment and perturbation sweeps."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np
from scipy import stats

from .mdp import Trajectory, env_hash, rollout
from .perturbations import PerturbationSpec, apply_perturbation


def greedy_rollout(policy, env, latent: int, rng) -> Trajectory:
    return rollout(env, policy, latent, rng, greedy=True)


def _as_return(out) -> float:
    return float(out.episode_return if isinstance(out, Trajectory) else out)


def _succeeded(env, out) -> float:
    if isinstance(out, Trajectory) and out.steps and hasattr(env, "is_success"):
        return float(env.is_success(out.final_state))
    return math.nan


@dataclass
class FewShotResult:
    per_latent_returns: list[float]
    selected_latent: int
    selected_policy_mean_return: float
    budget: int
    eval_returns: list[float] = field(default_factory=list)
    success_rate: float = math.nan
    probe_seed: int = 0

    def to_dict(self) -> dict[str, Any]:
        return dict(self.__dict__)


def few_shot_select(policy, test_env, budget_k: int, n_eval: int = 5, rng=0,
                    rollout_fn: Callable | None = None) -> FewShotResult:
    """Probe latents ``0..min(k, |Z|)-1`` once each, keep the best, re-run it.

    ``rollout_fn(policy, env, latent, rng)`` returns a Trajectory or a bare
    return (the default is a greedy rollout). ``rng`` may be an int, used
    directly as the probe seed, or a Generator that draws one. Probe ``z``
    uses stream ``[probe_seed, 0, z]`` and evaluation run ``i`` uses
    ``[probe_seed, 1, i]``.
    """
    if budget_k < 1:
        raise ValueError("budget_k must be at least 1")
    if n_eval < 1:
        raise ValueError("n_eval must be at least 1")
    n_latents = getattr(policy, "n_latents", None)
    if not n_latents:
        raise ValueError("policy has no latents")
    rollout_fn = rollout_fn or greedy_rollout
    if isinstance(rng, np.random.Generator):
        probe_seed = int(rng.integers(2**63 - 1))
    else:
        probe_seed = int(rng)

    returns = []
    best_z, best = 0, -math.inf
    for z in range(min(budget_k, n_latents)):
        r = _as_return(rollout_fn(policy, test_env, z, np.random.default_rng([probe_seed, 0, z])))
        returns.append(r)
        if r > best:  # strict: ties keep the lowest latent id
            best_z, best = z, r
    evals, hits = [], []
    for i in range(n_eval):
        out = rollout_fn(policy, test_env, best_z, np.random.default_rng([probe_seed, 1, i]))
        evals.append(_as_return(out))
        hits.append(_succeeded(test_env, out))
    return FewShotResult(returns, best_z, float(np.mean(evals)), budget_k, evals,
                         float(np.mean(hits)), probe_seed)


# --------------------------------------------------------------------------- #
# Sweeps
# --------------------------------------------------------------------------- #


def _to_lists(a: np.ndarray):
    return np.where(np.isnan(a), None, a).tolist()


@dataclass
class RobustnessReport:
    """Sweep results; arrays are indexed ``[mode][seed, level(, latent)]``."""

    perturbation_kind: str
    levels: list[float]
    modes: list[str]
    seeds: list[int]
    budget: int
    n_latents: dict[str, int]
    return_matrix: dict[str, np.ndarray]
    selected_latent: dict[str, np.ndarray]
    selected_return: dict[str, np.ndarray]
    success_rate: dict[str, np.ndarray]
    errors: list[dict] = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    def curve(self, mode: str, metric: str = "return") -> tuple[np.ndarray, np.ndarray]:
        """Mean across seeds and half the standard deviation, per level."""
        data = self.selected_return[mode] if metric == "return" else self.success_rate[mode]
        return data.mean(axis=0), 0.5 * data.std(axis=0)

    @property
    def selected_curve(self) -> np.ndarray:
        mode = "SMERL" if "SMERL" in self.modes else self.modes[0]
        return self.curve(mode)[0]

    @property
    def baseline_curves(self) -> dict[str, np.ndarray]:
        return {m: self.curve(m)[0] for m in self.modes}

    # ---- serialisation ------------------------------------------------ #

    def to_dict(self) -> dict[str, Any]:
        def arr(d):
            return {m: _to_lists(v) for m, v in d.items()}

        return {
            "perturbation_kind": self.perturbation_kind,
            "levels": [float(v) for v in self.levels],
            "modes": list(self.modes),
            "seeds": [int(s) for s in self.seeds],
            "budget": int(self.budget),
            "n_latents": dict(self.n_latents),
            "return_matrix": arr(self.return_matrix),
            "selected_latent": {m: v.astype(int).tolist() for m, v in self.selected_latent.items()},
            "selected_return": arr(self.selected_return),
            "success_rate": arr(self.success_rate),
            "errors": list(self.errors),
            "provenance": self.provenance,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "RobustnessReport":
        def arr(x):
            # None marks a missing cell and becomes nan again
            return {m: np.array(v, dtype=float) for m, v in x.items()}

        return cls(
            perturbation_kind=d["perturbation_kind"], levels=list(d["levels"]), modes=list(d["modes"]),
            seeds=list(d["seeds"]), budget=int(d["budget"]), n_latents=dict(d["n_latents"]),
            return_matrix=arr(d["return_matrix"]),
            selected_latent={m: np.array(v, dtype=int) for m, v in d["selected_latent"].items()},
            selected_return=arr(d["selected_return"]), success_rate=arr(d["success_rate"]),
            errors=list(d.get("errors", [])), provenance=dict(d.get("provenance", {})),
        )

    @classmethod
    def from_json(cls, text: str) -> "RobustnessReport":
        return cls.from_dict(json.loads(text))

    def table_csv(self, mode: str, seed_index: int | None = None) -> str:
        """Rows are levels, columns are policies; the selected latent is flagged.

        ``seed_index=None`` averages over seeds (the selected column then
        holds the most frequent choice).
        """
        k = self.return_matrix[mode].shape[2]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["level"] + [f"policy_{z}" for z in range(k)]
                   + ["selected_policy", "selected_mean_return", "success_rate"])
        for j, level in enumerate(self.levels):
            if seed_index is None:
                vals = self.return_matrix[mode][:, j].mean(axis=0)
                sel = int(np.bincount(self.selected_latent[mode][:, j].clip(0)).argmax())
                ret = float(self.selected_return[mode][:, j].mean())
                suc = float(self.success_rate[mode][:, j].mean())
            else:
                vals = self.return_matrix[mode][seed_index, j]
                sel = int(self.selected_latent[mode][seed_index, j])
                ret = float(self.selected_return[mode][seed_index, j])
                suc = float(self.success_rate[mode][seed_index, j])
            w.writerow([repr(float(level))] + [repr(float(v)) for v in vals] + [sel, repr(ret), repr(suc)])
        return buf.getvalue()

    def plot_rows(self, metric: str = "return") -> list[dict[str, Any]]:
        """Raw per-seed rows followed by per-(level, mode) aggregates."""
        rows = []
        for m in self.modes:
            data = self.selected_return[m] if metric == "return" else self.success_rate[m]
            for i, seed in enumerate(self.seeds):
                for j, level in enumerate(self.levels):
                    rows.append({"kind": "raw", "seed": seed, "level": level, "mode": m,
                                 "mean": float(data[i, j]), "half_std": 0.0})
        for m in self.modes:
            mean, half = self.curve(m, metric)
            for j, level in enumerate(self.levels):
                rows.append({"kind": "aggregate", "seed": "", "level": level, "mode": m,
                             "mean": float(mean[j]), "half_std": float(half[j])})
        return rows

    def plot_csv(self, metric: str = "return") -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, ["kind", "seed", "level", "mode", "mean", "half_std"], lineterminator="\n")
        w.writeheader()
        for r in self.plot_rows(metric):
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
        return buf.getvalue()


def _policy_for(policies, i: int):
    return policies[i] if isinstance(policies, (list, tuple)) else policies


def perturbation_sweep(policies_by_mode: dict, base_env, spec: PerturbationSpec, levels, budget_k: int,
                       n_eval: int = 5, seeds=(0,), rollout_fn: Callable | None = None) -> RobustnessReport:
    """Few-shot evaluation of every mode at every perturbation level.

    ``policies_by_mode[mode]`` is one policy or a list with one policy per
    seed. Each (seed, level, mode) cell probes with seed ``seed``, so a
    zero-magnitude level reproduces the unperturbed evaluation.
    """
    levels = [float(v) for v in levels]
    if not levels:
        raise ValueError("levels must be nonempty")
    if any(b < a for a, b in zip(levels, levels[1:])):
        raise ValueError("levels must be nondecreasing")
    seeds = [int(s) for s in seeds]
    modes = list(policies_by_mode)
    shape = (len(seeds), len(levels))
    k_of = {m: min(budget_k, _policy_for(policies_by_mode[m], 0).n_latents) for m in modes}
    ret_m = {m: np.full(shape + (k_of[m],), np.nan) for m in modes}
    sel = {m: np.full(shape, -1, dtype=int) for m in modes}
    sel_ret = {m: np.full(shape, np.nan) for m in modes}
    succ = {m: np.full(shape, np.nan) for m in modes}
    errors, hashes = [], {}
    for j, level in enumerate(levels):
        try:
            env = apply_perturbation(base_env, spec.with_magnitude(level))
            hashes[repr(level)] = env_hash(env)
        except Exception as exc:  # recorded per cell, sweep continues
            errors.append({"level": level, "error": f"{type(exc).__name__}: {exc}"})
            continue
        for i, seed in enumerate(seeds):
            for m in modes:
                try:
                    res = few_shot_select(_policy_for(policies_by_mode[m], i), env, budget_k, n_eval, seed,
                                          rollout_fn)
                except Exception as exc:
                    errors.append({"level": level, "seed": seed, "mode": m,
                                   "error": f"{type(exc).__name__}: {exc}"})
                    continue
                ret_m[m][i, j] = res.per_latent_returns
                sel[m][i, j] = res.selected_latent
                sel_ret[m][i, j] = res.selected_policy_mean_return
                succ[m][i, j] = res.success_rate
    provenance = {"base_env": base_env.describe(), "base_env_hash": env_hash(base_env),
                  "perturbation": spec.to_dict(), "env_hashes": hashes, "n_eval": n_eval}
    return RobustnessReport(spec.kind, levels, modes, seeds, budget_k,
                            {m: _policy_for(policies_by_mode[m], 0).n_latents for m in modes},
                            ret_m, sel, sel_ret, succ, errors, provenance)


# --------------------------------------------------------------------------- #
# Suboptimality analysis
# --------------------------------------------------------------------------- #


def training_gap(base_env, test_env) -> float:
    """R_M(pi*_M) - R_M(pi*_M') computed exactly on the lowered MDPs.

    Environments are lowered undiscounted so the gap is in episode-return
    units, like the few-shot returns it is paired with.
    """
    from .mdp import FiniteMdp
    from .theory import exact_policy_value, optimal_policy

    def lower(env):
        return env if isinstance(env, FiniteMdp) else env.to_finite_mdp(discount=1.0)

    base, test = lower(base_env), lower(test_env)
    pi_base, _ = optimal_policy(base)
    pi_test, _ = optimal_policy(test)
    return exact_policy_value(base, pi_base) - exact_policy_value(base, pi_test)


def suboptimality_analysis(base_env, perturbed_envs, smerl_policy, budget_k: int | None = None,
                           n_eval: int = 5, seed: int = 0) -> list[tuple[float, float]]:
    """Pairs (gap, SMERL few-shot return) for each perturbed environment."""
    k = budget_k or smerl_policy.n_latents
    out = []
    for env in perturbed_envs:
        gap = training_gap(base_env, env)
        res = few_shot_select(smerl_policy, env, k, n_eval, seed)
        out.append((float(gap), res.selected_policy_mean_return))
    return out


def gap_return_correlation(pairs) -> float:
    """Spearman rank correlation between gap and return (nan if degenerate)."""
    gaps, rets = zip(*pairs)
    if len(set(gaps)) < 2 or len(set(rets)) < 2:
        return math.nan
    return float(stats.spearmanr(gaps, rets).statistic)
