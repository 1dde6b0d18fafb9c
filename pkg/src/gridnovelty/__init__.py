"""Grid worlds with novelties injected mid-training.

The pieces, bottom up: :mod:`core` (worlds and dynamics), :mod:`layouts`
(character maps), :mod:`ontology` (novelty classification and the planning
oracle), :mod:`catalog` (the exemplar novelties), :mod:`injection` (the
episode-indexed swap), :mod:`agents`, :mod:`metrics` and :mod:`runner`.
"""

from .agents import FrozenQPolicy, QLearningAgent, RandomAgent
from .catalog import CATALOG, make_novelty
from .core import (
    Action,
    ConfigurationError,
    DynamicsParams,
    EnvironmentConfig,
    GridWorld,
    Observation,
    generate_grid,
)
from .injection import NoveltySchedule, WrappedEnvironment, wrap
from .layouts import LAYOUTS, get_layout, parse_char_map
from .ontology import SolutionEffect, classify_solution_effect, optimal_plan, optimal_plan_length

__version__ = "0.1.0"

__all__ = [
    "Action",
    "CATALOG",
    "ConfigurationError",
    "DynamicsParams",
    "EnvironmentConfig",
    "FrozenQPolicy",
    "GridWorld",
    "LAYOUTS",
    "NoveltySchedule",
    "Observation",
    "QLearningAgent",
    "RandomAgent",
    "SolutionEffect",
    "WrappedEnvironment",
    "classify_solution_effect",
    "generate_grid",
    "get_layout",
    "make_novelty",
    "optimal_plan",
    "optimal_plan_length",
    "parse_char_map",
    "wrap",
]
