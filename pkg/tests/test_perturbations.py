import warnings

import numpy as np
import pytest

from smerl_lab.mdp import FiniteMdp, GridWorld, PointMassEnv
from smerl_lab.perturbations import PerturbationSpec, apply_perturbation
from smerl_lab.theory import optimal_episode_return, random_mdp


def test_spec_validation():
    with pytest.raises(ValueError):
        PerturbationSpec("gravity")
    with pytest.raises(ValueError):
        PerturbationSpec("force", window_start=5, window_end=2)
    with pytest.raises(ValueError):
        PerturbationSpec("motor_failure", magnitude=3)
    with pytest.raises(ValueError):
        PerturbationSpec("obstacle", magnitude=-1)


def test_force_window_on_pointmass_only_affects_steps_10_to_15():
    env = PointMassEnv()
    spec = PerturbationSpec("force", magnitude=0.125, window_start=10, window_end=15, direction=(0.0, -1.0))
    pert = apply_perturbation(env, spec)
    pos = (2.0, 2.0)
    for t in range(env.max_steps):
        base_next, _, _ = env.step(pos, 1, None, t)
        p_next, _, _ = pert.step(pos, 1, None, t)
        if 10 <= t <= 15:
            assert p_next == pytest.approx((base_next[0], base_next[1] - 0.125))
        else:
            assert p_next == base_next


def test_motor_failure_zero_magnitude_is_identity():
    env = GridWorld()
    pert = apply_perturbation(env, PerturbationSpec("motor_failure", magnitude=0, window_start=3,
                                                    affected_actions=(1, 2)))
    for s in range(env.n_states):
        for a in range(env.n_actions):
            for t in range(env.horizon):
                assert pert.step(s, a, None, t) == env.step(s, a, None, t)


def test_motor_failure_replaces_actions_with_noop_in_window():
    env = GridWorld()
    pert = apply_perturbation(env, PerturbationSpec("motor_failure", magnitude=2, window_start=3,
                                                    affected_actions=(1,)))
    s = env.state_of((1, 2))
    assert pert.step(s, 1, None, 3)[0] == s
    assert pert.step(s, 1, None, 4)[0] == s
    assert pert.step(s, 1, None, 5)[0] == env.state_of((2, 2))
    assert pert.step(s, 2, None, 3)[0] == env.state_of((1, 3))


def test_zero_magnitude_specs_agree_with_base_on_probes():
    env = PointMassEnv()
    specs = [PerturbationSpec("obstacle", 0.0, location=(1.0, 1.0)),
             PerturbationSpec("force", 0.0, window_start=0, window_end=29),
             PerturbationSpec("motor_failure", 0.0, affected_actions=(1,))]
    rng = np.random.default_rng(0)
    for spec in specs:
        pert = apply_perturbation(env, spec)
        for _ in range(50):
            pos = tuple(np.round(rng.uniform(0, 4, 2) * 8) / 8)
            a = int(rng.integers(env.n_actions))
            t = int(rng.integers(env.max_steps))
            assert pert.step(pos, a, None, t) == env.step(pos, a, None, t)


def test_obstacle_on_shortest_path_lowers_optimum():
    env = GridWorld()
    pert = apply_perturbation(env, PerturbationSpec("obstacle", 1, location=((3, 2),)))
    base = optimal_episode_return(env.to_finite_mdp())
    worse = optimal_episode_return(pert.to_finite_mdp())
    assert worse < base
    assert (base, worse) == (4.0, 2.0)


def test_obstacle_never_mutates_base():
    env = GridWorld()
    apply_perturbation(env, PerturbationSpec("obstacle", 1, location=((3, 2),)))
    assert env.walls == frozenset()
    pm = PointMassEnv()
    apply_perturbation(pm, PerturbationSpec("obstacle", 1.0, location=(2.0, 2.0)))
    assert pm.obstacles == ()


def test_obstacle_on_start_rejected():
    with pytest.raises(ValueError):
        apply_perturbation(GridWorld(), PerturbationSpec("obstacle", 1, location=((0, 2),)))
    with pytest.raises(ValueError):
        apply_perturbation(PointMassEnv(), PerturbationSpec("obstacle", 1.0, location=(0.0, 0.0)))


def test_finite_mdp_obstacle_redirects_to_self_loops():
    mdp = random_mdp(np.random.default_rng(1), 4, 2, point_start=False)
    mdp = FiniteMdp(mdp.transition, mdp.reward, mdp.discount, np.array([1.0, 0, 0, 0]))
    pert = apply_perturbation(mdp, PerturbationSpec("obstacle", 1, location=(2,)))
    assert np.allclose(pert.transition[[0, 1, 3]][:, :, 2], 0.0)
    assert np.allclose(pert.transition.sum(axis=2), 1.0)


def test_window_past_horizon_is_clipped_with_warning():
    env = GridWorld(horizon=20)
    with pytest.warns(UserWarning):
        pert = apply_perturbation(env, PerturbationSpec("force", 1, window_start=15, window_end=40))
    assert pert.stop == 20
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        apply_perturbation(env, PerturbationSpec("force", 1, window_start=1, window_end=5))


def test_grid_force_pushes_but_walls_block():
    env = GridWorld(walls=frozenset({(1, 1)}))
    pert = apply_perturbation(env, PerturbationSpec("force", 1, window_start=0, window_end=19,
                                                    direction=(0.0, -1.0)))
    s = env.state_of((1, 2))
    assert pert.step(s, 0, None, 0)[0] == s
    s = env.state_of((2, 2))
    assert pert.step(s, 0, None, 0)[0] == env.state_of((2, 1))
