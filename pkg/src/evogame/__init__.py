"""Entropic evolutionary game toolkit: forward models and payoff inference.

Forward side: replicator dynamics with entropic regularization (disclosed and
undisclosed strategies), their quasi-static fast-reaction limit, pairwise-force
reference models and an anticipatory pedestrian model.  Inverse side: the
agents' payoff function is recovered from trajectory observations by
minimizing variational mismatch energies over finite-element coefficient
grids.
"""

from .dataset import Snapshot, TrajectoryDataset
from .forward import (
    SimConfig,
    SimulationError,
    corrupt_strategies_by_resampling,
    fast_reaction_state,
    fast_reaction_trajectory,
    newtonian_trajectory,
    run_simulation,
    step_fast_reaction,
    step_full_entropic,
    step_newtonian,
    step_undisclosed,
    undisclosed_trajectory,
)
from .inference import (
    InferenceProblem,
    InferenceReport,
    energy_differential,
    energy_pedestrian,
    energy_sigma,
    energy_velocity,
    full_pair_model_from_dataset,
    minimize,
    pedestrian_model_from_dataset,
    reconstruct_strategy_from_velocity,
    split_model_from_dataset,
    trajectory_error_bound_check,
)
from .metrics import fit_rate, norm_n, wasserstein1_empirical
from .optim import MinimizeResult, lbfgs
from .payoff import (
    Axis,
    BuiltinPayoff,
    FullPairPayoff,
    Grid,
    PedestrianPayoff,
    SplitPayoff,
    gradient_penalty,
    load_payoff,
    make_builtin_payoff,
    newton_force,
    save_payoff,
)
from .pedestrian import PedestrianParams, pedestrian_quantities, step_pedestrian
from .strategy import (
    StrategyDomainError,
    StrategySpace,
    entropy_drift,
    hellinger_tangent_distance,
    kl_divergence,
    replicator_drift_full,
    replicator_drift_undisclosed,
    softmax_strategy,
    strategy_velocity,
)

__version__ = "0.1.0"
