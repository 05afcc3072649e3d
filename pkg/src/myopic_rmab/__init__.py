"""Myopic sensing in restless bandits with imperfect channel sensing.

Belief dynamics, g-regular slot rewards, an exact finite-horizon planner,
closed-form optimality conditions for the myopic policy and a Monte Carlo
simulator, plus a batch command line (``myopic-rmab``).
"""

__version__ = "0.1.0"

from .belief import (
    ChannelModel, SensingModel, enumerate_actions, enumerate_outcomes, outcome_probability, phi,
    stationary_belief, tau, update_belief,
)
from .conditions import (
    OptimalityReport, QuantitySet, compute_quantities, iid_special_case_check,
    theorem1_beta_boundary, theorem1_check, theorem2_check,
)
from .instance import Instance
from .planner import (
    NodeCapExceeded, lemma4_bound_check, lemma5_check, myopic_value, optimal_value, policy_value,
    pseudo_value, symmetry_check,
)
from .policy import (
    FixedPolicy, MyopicPolicy, RandomPolicy, TreePolicy, argmax_equivalence_check,
    enumerate_tree_policies, myopic_action,
)
from .rewards import (
    RegularReward, check_axioms, custom_reward, decomposition_residual, delta_bounds,
    g_derivative_bounds, immediate_reward, linear_reward, log_reward, make_reward, power_reward,
)
from .simulator import SimStats, simulate, simulate_belief_level, simulate_channel_level
