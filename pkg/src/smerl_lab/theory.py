"""Brute-force checks of the robustness-set theory on small finite MDPs.

Everything here is exact: values come from linear solves or backward
induction, policy sets from full enumeration, mutual information from
enumerating every trajectory of a short-horizon MDP.
"""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .mdp import FiniteMdp

VALUE_TOL = 1e-9
DYNAMICS_TOL = 1e-12
DEFAULT_CAP = 100_000


@dataclass(frozen=True)
class DeterministicPolicy:
    action_of: tuple

    def __post_init__(self):
        object.__setattr__(self, "action_of", tuple(int(a) for a in self.action_of))

    def __call__(self, state: int) -> int:
        return self.action_of[state]

    def matrix(self, n_actions: int) -> np.ndarray:
        m = np.zeros((len(self.action_of), n_actions))
        m[np.arange(len(self.action_of)), self.action_of] = 1.0
        return m


class EnumerationLimit(ValueError):
    """Raised when |A|^|S| exceeds the configured cap."""


def _effective(mdp: FiniteMdp):
    """Transition/reward with terminal states made absorbing and reward-free."""
    P = np.array(mdp.transition)
    R = np.array(mdp.reward)
    if mdp.terminal.any():
        P[mdp.terminal] = 0.0
        R[mdp.terminal] = 0.0
    return P, R


def _policy_matrix(mdp: FiniteMdp, policy) -> np.ndarray:
    if isinstance(policy, DeterministicPolicy):
        if len(policy.action_of) != mdp.n_states:
            raise ValueError("policy is not defined on every state")
        return policy.matrix(mdp.n_actions)
    pi = np.asarray(policy, dtype=float)
    if pi.shape != (mdp.n_states, mdp.n_actions):
        raise ValueError("stochastic policy must have shape (S, A)")
    return pi


def policy_state_values(mdp: FiniteMdp, policy, discount: float | None = None,
                        horizon: int | None | str = "mdp") -> np.ndarray:
    gamma = mdp.discount if discount is None else discount
    H = mdp.horizon if horizon == "mdp" else horizon
    pi = _policy_matrix(mdp, policy)
    P, R = _effective(mdp)
    P_pi = np.einsum("sa,sat->st", pi, P)
    R_pi = (pi * R).sum(axis=1)
    if H is None:
        if gamma >= 1.0:
            raise ValueError("infinite-horizon evaluation needs discount < 1")
        return np.linalg.solve(np.eye(mdp.n_states) - gamma * P_pi, R_pi)
    v = np.zeros(mdp.n_states)
    for _ in range(H):
        v = R_pi + gamma * P_pi @ v
    return v


def exact_policy_value(mdp: FiniteMdp, policy, discount: float | None = None,
                       horizon: int | None | str = "mdp") -> float:
    """Expected discounted return of ``policy`` from the initial distribution.

    Infinite-horizon problems use ``(I - gamma P_pi)^-1 R_pi``; problems with a
    horizon use backward induction. ``policy`` is a DeterministicPolicy or an
    (S, A) matrix of action probabilities.
    """
    return float(mdp.initial_dist @ policy_state_values(mdp, policy, discount, horizon))


def enumerate_policies(mdp: FiniteMdp, cap: int = DEFAULT_CAP) -> list[DeterministicPolicy]:
    count = mdp.n_actions ** mdp.n_states
    if count > cap:
        raise EnumerationLimit(f"{count} deterministic policies exceed the cap of {cap}")
    return [DeterministicPolicy(p) for p in itertools.product(range(mdp.n_actions), repeat=mdp.n_states)]


def _greedy_lowest(q: np.ndarray, tol: float = VALUE_TOL):
    best = q.max(axis=1, keepdims=True)
    is_opt = q >= best - tol
    actions = is_opt.argmax(axis=1)
    ties = {int(s): [int(a) for a in np.flatnonzero(is_opt[s])] for s in range(q.shape[0]) if is_opt[s].sum() > 1}
    return DeterministicPolicy(actions), ties


def optimal_state_values(mdp: FiniteMdp) -> np.ndarray:
    """V* by policy iteration (infinite horizon) or backward induction."""
    P, R = _effective(mdp)
    if mdp.horizon is not None and mdp.discount >= 1.0:
        v = np.zeros(mdp.n_states)
        for _ in range(mdp.horizon):
            v = (R + mdp.discount * P @ v).max(axis=1)
        return v
    policy = DeterministicPolicy(np.zeros(mdp.n_states, dtype=int))
    for _ in range(10_000):
        v = policy_state_values(mdp, policy, horizon=None)
        q = R + mdp.discount * P @ v
        cur = q[np.arange(mdp.n_states), policy.action_of]
        improve = q.max(axis=1) > cur + 1e-12
        if not improve.any():
            return v
        actions = np.where(improve, q.argmax(axis=1), policy.action_of)
        policy = DeterministicPolicy(actions)
    raise RuntimeError("policy iteration did not converge")


def optimal_policy(mdp: FiniteMdp) -> tuple[DeterministicPolicy, dict[int, list[int]]]:
    """Optimal deterministic policy with lowest-index tie-breaking at every state.

    Returns the policy and the states where several actions are optimal.
    Discounted problems (discount < 1) are solved as infinite-horizon; with
    discount 1 the first decision rule of the finite-horizon problem is used.
    """
    P, R = _effective(mdp)
    if mdp.horizon is not None and mdp.discount >= 1.0:
        v = np.zeros(mdp.n_states)
        for _ in range(mdp.horizon - 1):
            v = (R + P @ v).max(axis=1)
        q = R + P @ v
    else:
        v = optimal_state_values(mdp)
        q = R + mdp.discount * P @ v
    return _greedy_lowest(q)


def optimal_episode_return(mdp: FiniteMdp, discount: float = 1.0) -> float:
    """Best expected episode return under the given return discount.

    With a horizon this is the (possibly non-stationary) finite-horizon
    optimum; without one it is the discounted infinite-horizon optimum.
    """
    P, R = _effective(mdp)
    if mdp.horizon is None:
        return float(mdp.initial_dist @ optimal_state_values(mdp))
    v = np.zeros(mdp.n_states)
    for _ in range(mdp.horizon):
        v = (R + discount * P @ v).max(axis=1)
    return float(mdp.initial_dist @ v)


def optimal_value(mdp: FiniteMdp) -> float:
    """R_M(pi*_M) under the MDP's own discount and horizon."""
    pi, _ = optimal_policy(mdp)
    return exact_policy_value(mdp, pi)


# --------------------------------------------------------------------------- #
# Robustness sets
# --------------------------------------------------------------------------- #


@dataclass
class RobustnessSets:
    epsilon: float
    optimal_value: float
    policy_set: list[DeterministicPolicy]
    gaps: list[float]
    mdp_set_members: list = field(default_factory=list)


def build_policy_robustness_set(mdp: FiniteMdp, epsilon: float, cap: int = DEFAULT_CAP) -> RobustnessSets:
    """All deterministic policies within ``epsilon`` of the optimal value."""
    best = optimal_value(mdp)
    members, gaps = [], []
    for pi in enumerate_policies(mdp, cap):
        gap = best - exact_policy_value(mdp, pi)
        if gap <= epsilon + VALUE_TOL:
            members.append(pi)
            gaps.append(gap)
    return RobustnessSets(epsilon, best, members, gaps)


def _reachable(mdp: FiniteMdp, policy: DeterministicPolicy) -> list[int]:
    """States visited with positive probability under ``policy`` (BFS order)."""
    limit = mdp.horizon if mdp.horizon is not None else mdp.n_states
    depth = {int(s): 0 for s in np.flatnonzero(mdp.initial_dist > 0)}
    queue = deque(sorted(depth))
    order = []
    while queue:
        s = queue.popleft()
        order.append(s)
        if mdp.terminal[s] or depth[s] + 1 >= limit:
            continue
        for s2 in np.flatnonzero(mdp.transition[s, policy(s)] > 0):
            s2 = int(s2)
            if s2 not in depth:
                depth[s2] = depth[s] + 1
                queue.append(s2)
    return order


@dataclass
class MembershipResult:
    member: bool
    condition_1: bool
    condition_2: bool
    gap: float
    policy: DeterministicPolicy
    ties: dict
    offending_state: int | None = None
    alternates: list = field(default_factory=list)


def _same_spaces(base: FiniteMdp, cand: FiniteMdp):
    if base.transition.shape != cand.transition.shape:
        raise ValueError("state/action spaces differ")
    if base.discount != cand.discount or base.horizon != cand.horizon:
        raise ValueError("discount or horizon differ")
    if not np.array_equal(base.initial_dist, cand.initial_dist):
        raise ValueError("initial distributions differ")


def _verdict(base, cand, policy, epsilon, best):
    gap = best - exact_policy_value(base, policy)
    c1 = gap <= epsilon + VALUE_TOL
    bad = None
    for s in _reachable(base, policy):
        if mdp_terminal(base, s):
            continue
        a = policy(s)
        if np.max(np.abs(base.transition[s, a] - cand.transition[s, a])) > DYNAMICS_TOL:
            bad = s
            break
    return gap, c1, bad is None, bad


def mdp_terminal(mdp, s) -> bool:
    return bool(mdp.terminal[s])


def check_mdp_membership(base: FiniteMdp, candidate: FiniteMdp, epsilon: float,
                         max_alternates: int = 64) -> MembershipResult:
    """Is ``candidate`` in the MDP robustness set of ``base``?

    Condition 1: the candidate's optimal policy loses at most ``epsilon`` on
    the base MDP. Condition 2: that policy induces the same trajectory law on
    both, checked as equal next-state distributions on every state it
    reaches. Ties in the candidate's optimum use the lowest action; tied
    alternatives whose verdict differs are listed in ``alternates``.
    """
    _same_spaces(base, candidate)
    best = optimal_value(base)
    pi, ties = optimal_policy(candidate)
    gap, c1, c2, bad = _verdict(base, candidate, pi, epsilon, best)
    result = MembershipResult(c1 and c2, c1, c2, gap, pi, ties, bad)
    if ties:
        states = sorted(ties)
        combos = itertools.product(*(ties[s] for s in states))
        for combo in itertools.islice(combos, max_alternates):
            actions = list(pi.action_of)
            for s, a in zip(states, combo):
                actions[s] = a
            alt = DeterministicPolicy(actions)
            if alt == pi:
                continue
            _, a1, a2, _ = _verdict(base, candidate, alt, epsilon, best)
            if (a1 and a2) != result.member:
                result.alternates.append({"policy": list(alt.action_of), "member": a1 and a2})
    return result


def verify_proposition_1(base: FiniteMdp, epsilon: float, candidate_mdps, membership=check_mdp_membership,
                         cap: int = DEFAULT_CAP) -> list[dict]:
    """Every member's optimal policy must lie in the policy robustness set."""
    if not candidate_mdps:
        return []
    sets = build_policy_robustness_set(base, epsilon, cap)
    allowed = set(p.action_of for p in sets.policy_set)
    violations = []
    for i, cand in enumerate(candidate_mdps):
        res = membership(base, cand, epsilon)
        if res.member and res.policy.action_of not in allowed:
            violations.append({"candidate": i, "policy": list(res.policy.action_of), "gap": res.gap})
    return violations


def construct_witness_mdp(base: FiniteMdp, policy: DeterministicPolicy) -> FiniteMdp:
    """Same dynamics and start law; reward pays for agreeing with ``policy``.

    Non-episodic MDPs use reward 1 for ``policy(s)`` and 0 otherwise. With a
    horizon or terminal states, stopping early could beat that, so the
    witness pays 0 for agreeing and -1 otherwise.
    """
    agree = policy.matrix(base.n_actions)
    if base.horizon is None and not base.terminal.any():
        reward = agree
    else:
        reward = agree - 1.0
    return base.with_reward(reward)


def verify_proposition_2(base: FiniteMdp, epsilon: float, cap: int = DEFAULT_CAP) -> list[dict]:
    """Each robustness-set policy is the unique optimum of an admissible witness."""
    violations = []
    for pi in build_policy_robustness_set(base, epsilon, cap).policy_set:
        witness = construct_witness_mdp(base, pi)
        opt, ties = optimal_policy(witness)
        res = check_mdp_membership(base, witness, epsilon)
        if opt != pi or ties or not res.member:
            violations.append({"policy": list(pi.action_of), "optimal": opt == pi, "unique": not ties,
                               "member": res.member})
    return violations


# --------------------------------------------------------------------------- #
# Mutual information by exact enumeration
# --------------------------------------------------------------------------- #


def _entropy(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())


def _mutual_information(joint: np.ndarray) -> float:
    """I(X; Z) for a joint table with Z on the last axis."""
    px = joint.sum(axis=-1)
    pz = joint.reshape(-1, joint.shape[-1]).sum(axis=0)
    return max(0.0, _entropy(px.ravel()) + _entropy(pz) - _entropy(joint.ravel()))


def enumerate_trajectories(mdp: FiniteMdp, action_probs: np.ndarray, horizon: int):
    """All length-``horizon`` trajectories with their probability under each latent.

    ``action_probs[z, s, a]`` is pi(a | s, z). Terminal states absorb (the
    trajectory repeats the terminal state with action -1). Returns
    ``(states (N, H+1), actions (N, H), probs (N, Z))``.
    """
    n_z = action_probs.shape[0]
    starts = np.flatnonzero(mdp.initial_dist > 0)
    states = starts[:, None]
    actions = np.zeros((len(starts), 0), dtype=int)
    probs = np.repeat(mdp.initial_dist[starts][:, None], n_z, axis=1)
    for _ in range(horizon):
        new_s, new_a, new_p = [], [], []
        for i in range(len(states)):
            s = int(states[i, -1])
            if mdp.terminal[s]:
                new_s.append(np.append(states[i], s))
                new_a.append(np.append(actions[i], -1))
                new_p.append(probs[i])
                continue
            for a in range(mdp.n_actions):
                pa = action_probs[:, s, a]
                if not (pa > 0).any():
                    continue
                for s2 in np.flatnonzero(mdp.transition[s, a] > 0):
                    new_s.append(np.append(states[i], s2))
                    new_a.append(np.append(actions[i], a))
                    new_p.append(probs[i] * pa * mdp.transition[s, a, s2])
        states = np.array(new_s, dtype=int)
        actions = np.array(new_a, dtype=int)
        probs = np.array(new_p)
    return states, actions, probs


@dataclass
class MiReport:
    entropy_z: float
    mi_trajectory: float
    mi_per_step: list[float]
    mi_pooled_states: float
    discriminator_bound: float
    conditional_entropy_trajectory: float
    discriminator_bound_ok: bool
    chain_bound_ok: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def mi_bound_audit(mdp: FiniteMdp, action_probs: np.ndarray, discriminator, prior,
                   horizon: int | None = None, max_trajectories: int = 200_000) -> MiReport:
    """Exact MI quantities for latent policies on a short-horizon MDP.

    Checks ``E[log q(z|s)] - E[log p(z)] <= I(S; Z)`` (S a uniformly chosen
    post-start state of the episode) and ``sum_t I(s_t; z) <= I(tau; z)``.
    """
    H = horizon if horizon is not None else mdp.horizon
    if H is None or H > 4:
        raise ValueError("exact enumeration needs a horizon of at most 4")
    action_probs = np.asarray(action_probs, dtype=float)
    n_z = action_probs.shape[0]
    bound = (mdp.n_states * mdp.n_actions) ** H * len(np.flatnonzero(mdp.initial_dist))
    if bound > max_trajectories:
        raise ValueError(f"up to {bound} trajectories; enumeration infeasible")
    pz = np.asarray(prior.probabilities, dtype=float)
    states, actions, probs = enumerate_trajectories(mdp, action_probs, H)
    joint = probs * pz[None, :]  # p(tau, z)
    # trajectories are distinct by construction, so the joint table is exact
    mi_tau = _mutual_information(joint)
    h_z = _entropy(pz)
    h_tau_given_z = _entropy(joint.ravel()) - h_z
    per_step = []
    pooled = np.zeros((mdp.n_states, n_z))
    for t in range(1, H + 1):
        table = np.zeros((mdp.n_states, n_z))
        np.add.at(table, states[:, t], joint)
        per_step.append(_mutual_information(table))
        pooled += table / H
    mi_pooled = _mutual_information(pooled)
    q = np.stack([discriminator.predict(mdp.features(s)) for s in range(mdp.n_states)])
    mask = pooled > 0
    disc_bound = float((pooled[mask] * np.log(q[mask])).sum()) + h_z
    return MiReport(
        entropy_z=h_z,
        mi_trajectory=mi_tau,
        mi_per_step=per_step,
        mi_pooled_states=mi_pooled,
        discriminator_bound=disc_bound,
        conditional_entropy_trajectory=max(0.0, h_tau_given_z),
        discriminator_bound_ok=disc_bound <= mi_pooled + 1e-9,
        chain_bound_ok=sum(per_step) <= mi_tau + 1e-9,
    )


class PosteriorDiscriminator:
    """q(z|s) equal to the exact posterior of a pooled (s, z) table."""

    def __init__(self, pooled: np.ndarray):
        rows = pooled.sum(axis=1, keepdims=True)
        n_z = pooled.shape[1]
        self.table = np.where(rows > 0, pooled / np.where(rows > 0, rows, 1.0), 1.0 / n_z)

    def predict(self, phi) -> np.ndarray:
        return self.table[int(np.atleast_1d(phi)[0])]


# --------------------------------------------------------------------------- #
# Max-min shadow of the MI objective (deterministic dynamics, tiny MDPs)
# --------------------------------------------------------------------------- #


def _path(mdp: FiniteMdp, policy: DeterministicPolicy) -> tuple:
    s = int(np.flatnonzero(mdp.initial_dist > 0)[0])
    seen, path = set(), []
    limit = mdp.horizon if mdp.horizon is not None else mdp.n_states + 1
    while s not in seen and len(path) < limit and not mdp.terminal[s]:
        seen.add(s)
        a = policy(s)
        path.append((s, a))
        s = int(np.argmax(mdp.transition[s, a]))
    path.append((s, None))
    return tuple(path)


def max_min_shadow(mdp: FiniteMdp, epsilon: float, n_latents: int, subset_cap: int = 50_000) -> dict:
    """Compare the MI-maximising latent set with the brute-force max-min set.

    Test MDPs are the witnesses of every policy in the robustness set. The
    brute force searches all size-``n_latents`` subsets of that set for
    ``max min_{M'} max_{pi} R_{M'}(pi)``; the MI objective picks the subset
    with the most distinct trajectories (entropy of tau under uniform z with
    deterministic dynamics). Requires a single start state and
    deterministic transitions.
    """
    if not np.all((mdp.transition == 0) | (mdp.transition == 1)) or np.count_nonzero(mdp.initial_dist) != 1:
        raise ValueError("shadow check needs deterministic dynamics and a single start state")
    sets = build_policy_robustness_set(mdp, epsilon)
    pols = sets.policy_set
    witnesses = [construct_witness_mdp(mdp, p) for p in pols]
    values = np.array([[exact_policy_value(w, p) for p in pols] for w in witnesses])  # [test, policy]
    paths = [_path(mdp, p) for p in pols]
    n_paths = len(set(paths))
    k = min(n_latents, len(pols))
    combos = list(itertools.islice(itertools.combinations(range(len(pols)), k), subset_cap))

    def maxmin(idx):
        return float(values[:, list(idx)].max(axis=1).min())

    def traj_entropy(idx):
        counts = {}
        for i in idx:
            counts[paths[i]] = counts.get(paths[i], 0) + 1
        p = np.array(list(counts.values()), dtype=float) / len(idx)
        return _entropy(p)

    brute = max(maxmin(c) for c in combos)
    mi_best = max(combos, key=traj_entropy)
    return {
        "policy_set_size": len(pols),
        "distinct_trajectories": n_paths,
        "n_latents": k,
        "brute_force_value": brute,
        "mi_subset_value": maxmin(mi_best),
        "mi_subset_entropy": traj_entropy(mi_best),
        "applicable": k >= n_paths,
        "agrees": abs(brute - maxmin(mi_best)) <= VALUE_TOL,
    }


# --------------------------------------------------------------------------- #
# Randomised conformance suite
# --------------------------------------------------------------------------- #


def random_mdp(rng: np.random.Generator, n_states: int, n_actions: int, discount: float = 0.9,
               deterministic: bool = False, horizon: int | None = None, point_start: bool = False) -> FiniteMdp:
    if deterministic:
        P = np.zeros((n_states, n_actions, n_states))
        nxt = rng.integers(0, n_states, size=(n_states, n_actions))
        P[np.arange(n_states)[:, None], np.arange(n_actions)[None, :], nxt] = 1.0
    else:
        P = rng.dirichlet(np.full(n_states, 0.5), size=(n_states, n_actions))
        P = P / P.sum(axis=2, keepdims=True)
    R = rng.normal(size=(n_states, n_actions))
    if point_start:
        mu = np.zeros(n_states)
        mu[rng.integers(n_states)] = 1.0
    else:
        mu = rng.dirichlet(np.ones(n_states))
        mu = mu / mu.sum()
    return FiniteMdp(P, R, discount, mu, horizon)


def random_candidates(base: FiniteMdp, rng: np.random.Generator, n: int = 6) -> list[FiniteMdp]:
    """Reward- and dynamics-perturbed variants of ``base`` (plus itself)."""
    out = [base]
    for i in range(n - 1):
        P = np.array(base.transition)
        R = np.array(base.reward)
        kind = i % 3
        if kind in (0, 2):
            R = R + rng.normal(scale=0.5 if i < 3 else 2.0, size=R.shape)
        if kind in (1, 2):
            s = rng.integers(base.n_states)
            a = rng.integers(base.n_actions)
            row = rng.dirichlet(np.ones(base.n_states))
            P[s, a] = row / row.sum()
        out.append(FiniteMdp(P, R, base.discount, base.initial_dist, base.horizon, base.terminal))
    return out


def corrupted_membership(base, candidate, epsilon):
    """Test fixture: skips condition 1, so the containment check must fire."""
    res = check_mdp_membership(base, candidate, epsilon)
    res.member = res.condition_2
    return res


def run_conformance_suite(n_instances: int = 100, seed: int = 0, max_states: int = 5, max_actions: int = 3,
                          n_candidates: int = 6, mutation: bool = False, mi_instances: int = 0,
                          mi_horizon: int = 3) -> dict:
    """Randomised machine check of both containment results and the MI bounds."""
    instances = []
    total_violations = 0
    membership = corrupted_membership if mutation else check_mdp_membership
    for i in range(n_instances):
        rng = np.random.default_rng([seed, i])
        n_s = int(rng.integers(1, max_states + 1))
        n_a = int(rng.integers(1, max_actions + 1))
        base = random_mdp(rng, n_s, n_a)
        v_star = optimal_value(base)
        eps = float(rng.choice([0.0, 0.1, 0.5])) * abs(v_star)
        entry = {"seed": [seed, i], "n_states": n_s, "n_actions": n_a, "epsilon": eps}
        try:
            cands = random_candidates(base, rng, n_candidates)
            v1 = verify_proposition_1(base, eps, cands, membership)
            v2 = verify_proposition_2(base, eps)
            sets = build_policy_robustness_set(base, eps)
            members = sum(membership(base, c, eps).member for c in cands)
            entry.update(policy_set_size=len(sets.policy_set), candidates=len(cands), members=members,
                         proposition_1_violations=v1, proposition_2_violations=v2)
            total_violations += len(v1) + len(v2)
        except EnumerationLimit as exc:
            entry["error"] = str(exc)
        instances.append(entry)
    mi = []
    for i in range(mi_instances):
        rng = np.random.default_rng([seed, 10_000 + i])
        rep = random_mi_instance(rng, mi_horizon)
        mi.append(rep)
        total_violations += (not rep["discriminator_bound_ok"]) + (not rep["chain_bound_ok"])
    return {
        "instances": instances,
        "mi_audits": mi,
        "violations": total_violations,
        "vacuous": n_instances == 0 and mi_instances == 0,
        "mutation": mutation,
    }


def random_mi_instance(rng: np.random.Generator, horizon: int = 3) -> dict:
    """Random tabular latent policies on a random small MDP, audited exactly."""
    from .diversity import Discriminator
    from .policy import LatentPrior, softmax

    n_s = int(rng.integers(2, 5))
    n_a = int(rng.integers(2, 4))
    n_z = int(rng.integers(2, 4))
    mdp = random_mdp(rng, n_s, n_a, horizon=horizon)
    logits = rng.normal(scale=2.0, size=(n_z, n_s, n_a))
    probs = softmax(logits)
    prior = LatentPrior.uniform(n_z)
    disc = Discriminator(n_s, n_z, weights=rng.normal(size=(n_s, n_z)))
    rep = mi_bound_audit(mdp, probs, disc, prior, horizon).to_dict()
    rep.update(n_states=n_s, n_actions=n_a, n_latents=n_z, horizon=horizon)
    return rep
