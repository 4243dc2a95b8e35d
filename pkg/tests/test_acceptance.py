"""Acceptance criteria, one test each; every test records a PASS/FAIL line."""
import math
import random
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from smerl_lab import harness
from smerl_lab.config import load_config, packaged_config
from smerl_lab.learner import Trainer, TrainerConfig, gated_reward
from smerl_lab.mdp import GridWorld, rollout
from smerl_lab.perturbations import PerturbationSpec, apply_perturbation
from smerl_lab.robustness import RobustnessReport, few_shot_select, gap_return_correlation, suboptimality_analysis
from smerl_lab.theory import optimal_episode_return, run_conformance_suite


def record(name, ok, detail, elapsed, limit):
    ok = bool(ok) and elapsed < limit
    ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'} {name}: {detail} ({elapsed:.1f}s, limit {limit:.0f}s)")
    return ok


# ---- 1: gated reward ------------------------------------------------------------


def test_c1_gated_reward_exactness():
    t0 = time.perf_counter()
    smerl = TrainerConfig(mode="SMERL", alpha=10.0, optimal_return_estimate=-72.3, epsilon=7.23)
    examples = [gated_reward(-1.0, 0.5, -70.0, smerl) == 4.0,
                gated_reward(-1.0, 0.5, -100.0, smerl) == -1.0,
                gated_reward(-1.0, 0.5, -1e9, TrainerConfig(mode="SAC_PLUS_DIAYN", alpha=0.5)) == -0.75]
    rnd = random.Random(0)
    mismatches = 0
    for _ in range(10_000):
        r, ru, R, Rs = (rnd.uniform(-100, 100) for _ in range(4))
        eps, alpha = rnd.uniform(0, 50), rnd.uniform(0, 20)
        if rnd.random() < 0.1:
            R = Rs - eps  # exactly on the threshold
        cfg = TrainerConfig(mode="SMERL", alpha=alpha, optimal_return_estimate=Rs, epsilon=eps)
        expected = r + alpha * ru if R >= Rs - eps else r
        mismatches += gated_reward(r, ru, R, cfg) != expected
    elapsed = time.perf_counter() - t0
    ok = record("C1 gated reward", all(examples) and mismatches == 0,
                f"examples {sum(examples)}/3, property mismatches {mismatches}/10000", elapsed, 1)
    assert ok


# ---- 2, 3: theory conformance ------------------------------------------------------


def test_c2_theorem_conformance():
    t0 = time.perf_counter()
    rep = run_conformance_suite(100, seed=0, max_states=5, max_actions=3)
    elapsed = time.perf_counter() - t0
    errors = [i for i in rep["instances"] if "error" in i]
    eps_kinds = {round(i["epsilon"], 12) == 0 for i in rep["instances"]}
    ok = record("C2 theorem conformance", rep["violations"] == 0 and not errors and eps_kinds == {True, False},
                f"{len(rep['instances'])} MDPs, {rep['violations']} violations, {len(errors)} skipped",
                elapsed, 120)
    assert ok


def test_c3_mi_bound_audit():
    t0 = time.perf_counter()
    audits = []
    for h in (2, 3, 4):
        n = 17 if h < 4 else 16
        audits += run_conformance_suite(0, seed=h, mi_instances=n, mi_horizon=h)["mi_audits"]
    elapsed = time.perf_counter() - t0
    disc = sum(a["discriminator_bound"] <= a["mi_pooled_states"] + 1e-9 for a in audits)
    chain = sum(sum(a["mi_per_step"]) <= a["mi_trajectory"] + 1e-9 for a in audits)
    ok = record("C3 MI bound audit", len(audits) == 50 and disc == chain == 50,
                f"discriminator bound held {disc}/50, per-step sum bound held {chain}/50", elapsed, 120)
    assert ok


# ---- 4: 2D navigation ------------------------------------------------------------------


def mean_path(env, policy, z, n=5):
    paths = [np.array([np.asarray(s, float) for s in rollout(env, policy, z, np.random.default_rng(i),
                                                              greedy=True).states]) for i in range(n)]
    T = max(len(p) for p in paths)
    padded = [np.vstack([p, np.repeat(p[-1:], T - len(p), axis=0)]) for p in paths]
    return np.mean(padded, axis=0)


def pointwise_gap(a, b):
    T = max(len(a), len(b))
    a = np.vstack([a, np.repeat(a[-1:], T - len(a), axis=0)])
    b = np.vstack([b, np.repeat(b[-1:], T - len(b), axis=0)])
    return float(np.max(np.linalg.norm(a - b, axis=1)))


def navigation_summary(env, policy, r_sac):
    tol = 0.05 * abs(r_sac)
    good = []
    for z in range(policy.n_latents):
        traj = rollout(env, policy, z, np.random.default_rng(0), greedy=True)
        if env.is_success(traj.final_state) and traj.episode_return >= r_sac - tol:
            good.append(mean_path(env, policy, z))
    distinct = sum(pointwise_gap(a, b) > 0.5 for i, a in enumerate(good) for b in good[i + 1:])
    return len(good), distinct


def test_c4_navigation_diversity():
    t0 = time.perf_counter()
    cfg = load_config(packaged_config("pointmass"))
    seed = cfg.seeds[0]
    env = cfg.env.build()
    r_sac = harness.optimal_return_for(cfg, env, seed)
    smerl = Trainer(env, cfg.trainer.trainer_config("SMERL", seed, r_sac)).run().policy
    sac_cfg = cfg.trainer.trainer_config("SAC1", seed, None).replace(episodes=cfg.trainer.optimal_return.sac_episodes)
    sac = Trainer(env, sac_cfg).run().policy
    elapsed = time.perf_counter() - t0
    succ, distinct = navigation_summary(env, smerl, r_sac)
    sac_succ, sac_distinct = navigation_summary(env, sac, r_sac)
    ok = record("C4 navigation diversity", succ >= 3 and distinct >= 3 and sac_distinct < 3,
                f"R_SAC {r_sac:.2f}; SMERL {succ}/6 latents succeed, {distinct} distinct pairs; "
                f"SAC1 {sac_succ} succeed, {sac_distinct} distinct pairs", elapsed, 1800)
    assert ok


# ---- 5, 7: gridworld sweep ------------------------------------------------------------


@pytest.fixture(scope="module")
def grid_run(tmp_path_factory):
    t0 = time.perf_counter()
    cfg = load_config(packaged_config("gridworld")).with_overrides(modes=["SAC1", "SMERL"])
    out = tmp_path_factory.mktemp("gridworld")
    harness.sweep(cfg, out, train_inline=True)
    report = RobustnessReport.from_json((out / "sweep" / "report.json").read_text())
    return cfg, out, report, time.perf_counter() - t0


def test_c5_obstacle_sweep_direction(grid_run):
    cfg, _, rep, elapsed = grid_run
    env = cfg.env.build()
    base_opt = optimal_episode_return(env.to_finite_mdp(discount=1.0))
    spec = cfg.eval.spec()
    blocks = [optimal_episode_return(apply_perturbation(env, spec.with_magnitude(m)).to_finite_mdp(discount=1.0))
              < base_opt for m in rep.levels]
    smerl, sac = rep.curve("SMERL", "success")[0], rep.curve("SAC1", "success")[0]
    geq = bool(np.all(smerl >= sac))
    strict = any(b and s > c for b, s, c in zip(blocks, smerl, sac))
    ok = record("C5 obstacle sweep", geq and strict,
                f"success SMERL {np.round(smerl, 2).tolist()} vs SAC1 {np.round(sac, 2).tolist()} "
                f"at levels {rep.levels}", elapsed, 1200)
    assert ok


def test_c7_gap_trend(grid_run):
    cfg, out, _, _ = grid_run
    t0 = time.perf_counter()
    env = cfg.env.build()
    policy = harness.load_policies(cfg, out)["SMERL"][0]
    ladder = [apply_perturbation(env, PerturbationSpec("obstacle", magnitude=m, location=cfg.eval.location))
              for m in range(len(cfg.eval.location) + 1)]
    pairs = suboptimality_analysis(env, ladder, policy, budget_k=cfg.eval.budget_k, n_eval=cfg.eval.n_eval)
    rho = gap_return_correlation(pairs)
    elapsed = time.perf_counter() - t0
    ok = record("C7 gap vs return trend", not math.isnan(rho) and rho <= 0,
                f"spearman {rho:.3f} over {[(round(g, 2), round(r, 2)) for g, r in pairs]}", elapsed, 600)
    assert ok


# ---- 6: selection on tabulated returns -------------------------------------------------

TABLE = [  # magnitude, per-policy returns, bolded policy (0-based)
    (0.0, [-86.3, -87.2, -133.1, -77.0, -72.3], 4),
    (100.0, [-88.9, -92.8, -87.5, -107.8, -83.8], 4),
    (300.0, [-222.7, -357.0, -397.9, -1238.7, -424.1], 0),
    (500.0, [-868.9, -528.3, -283.7, -1196.3, -669.5], 2),
    (700.0, [-1046.6, -951.5, -769.7, -1758.8, -913.9], 4),
    (900.0, [-1249.3, -1238.3, -1425.1, -1264.4, -1282.5], 1),
]


class _FivePolicies:
    n_latents = 5


@pytest.mark.xfail(strict=True, reason="the marked choice in the 700.0 row is not the highest listed return")
def test_c6_tabulated_selection():
    t0 = time.perf_counter()
    hits, misses = 0, []
    for level, returns, bold in TABLE:
        res = few_shot_select(_FivePolicies(), None, 5, rollout_fn=lambda p, e, z, rng, r=returns: r[z])
        if res.selected_latent == bold:
            hits += 1
        else:
            misses.append(f"{level}: selected {res.selected_latent + 1}, marked {bold + 1}")
    elapsed = time.perf_counter() - t0
    ok = record("C6 tabulated selection", hits == len(TABLE),
                f"{hits}/{len(TABLE)} rows match" + (f"; mismatches {misses}" if misses else ""), elapsed, 1)
    assert ok


# ---- 8: mode reductions --------------------------------------------------------------------


def _trace(env, cfg):
    tr = Trainer(env, cfg).run()
    return (tr.learner.q.tobytes(), tr.discriminator.weights.tobytes(),
            [(m.latent, m.env_return, m.discriminator_loglik) for m in tr.metrics])


def test_c8_mode_reductions():
    t0 = time.perf_counter()
    common = dict(n_latents=4, episodes=300, learning_rate=0.5, discount=0.95, batch_size=32,
                  entropy_temperature=0.1, seed=17)
    env = GridWorld()
    a = _trace(env, TrainerConfig(mode="SMERL", alpha=0.0, optimal_return_estimate=4.0, epsilon=2.5, **common))
    b = _trace(env, TrainerConfig(mode="SACk", **common))
    c = _trace(GridWorld(step_reward=-1.0, goal_reward=10.0), TrainerConfig(mode="DIAYN", **common))
    d = _trace(GridWorld(step_reward=-3.0, goal_reward=0.5), TrainerConfig(mode="DIAYN", **common))
    elapsed = time.perf_counter() - t0
    same_ab = a == b
    same_cd = c[0] == d[0] and c[1] == d[1] and [(z, u) for z, _, u in c[2]] == [(z, u) for z, _, u in d[2]]
    ok = record("C8 mode reductions", same_ab and same_cd,
                f"SMERL(alpha=0) vs SACk identical: {same_ab}; DIAYN under reward change identical: {same_cd}",
                elapsed, 300)
    assert ok
