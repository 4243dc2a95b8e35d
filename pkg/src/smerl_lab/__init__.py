"""Return-gated diverse latent policies, few-shot robustness evaluation and
brute-force checks of the robustness-set theory on finite MDPs."""
from .checkpoint import load_checkpoint, save_checkpoint
from .diversity import Discriminator, discriminator_step, predict, unsupervised_reward
from .learner import MODES, Trainer, TrainerConfig, estimate_optimal_return, gated_reward
from .mdp import (FiniteMdp, GridWorld, PointMassEnv, Step, Trajectory, UnsupportedOperation, discounted_return,
                  rollout, step, trajectory_log_prob)
from .perturbations import PerturbationSpec, apply_perturbation
from .policy import LatentPolicy, LatentPrior, action_distribution, greedy_action, sample_latent
from .robustness import FewShotResult, RobustnessReport, few_shot_select, perturbation_sweep, suboptimality_analysis
from .theory import (DeterministicPolicy, RobustnessSets, build_policy_robustness_set, check_mdp_membership,
                     construct_witness_mdp, enumerate_policies, exact_policy_value, mi_bound_audit, optimal_policy,
                     verify_proposition_1, verify_proposition_2)

__version__ = "0.1.0"
