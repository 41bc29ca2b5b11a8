"""metafix: fixed points of self-modifying goal systems.

Metagoals that keep a self-modifying agent's goal system stable, checked and
enforced in simulation, plus the fixed-point solvers and diagnostics that
tell whether the agent's state distribution settles.
"""

from .errors import (MetafixError, ConfigError, NumericalFailure,  # noqa: F401
                     NonConvergence, Divergence, BudgetExhausted)
from .goalspace import (DomainBox, GoalVector, MetricParams, AugmentedState,  # noqa: F401
                        StateGrid, DiscreteDistribution,
                        goal_distance, augmented_distance, wasserstein1, total_variation)
from .markov import MarkovKernel, markov_invariant, empirical_contraction  # noqa: F401
from .fixpoint import (FixedPointResult, SurrogateSearchConfig, banach_iterate,  # noqa: F401
                       grid_fixed_point_search, surrogate_guided_search)
from .surrogate import SurrogateModel  # noqa: F401
from .metagoal import MetaGoalSpec, Variant, GoalHistory  # noqa: F401
from .config import ScenarioConfig, load_config  # noqa: F401
from .simulator import run_scenario, build_kernel, realize_F, estimate_R, step_interval  # noqa: F401
from .diagnostics import analyze, expected_contraction_experiment, self_model_accuracy  # noqa: F401

__version__ = "0.1.0"
