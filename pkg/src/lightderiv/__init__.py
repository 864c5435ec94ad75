"""Lightest derivation solvers: KLD, A*LD with pattern databases, and HA*LD."""
from .core import (
    Chart, Derivation, General, Problem, Registry, Rule, Statement,
    eval_derivation, ground, intern, validate_problem,
)
from .engine import RunStats, SolutionSet, astar_ld, dp_acyclic, get_derivation, kld, run_prioritized
from .abstraction import (
    PatternDatabase, build_pdb, check_monotone, context, context_problem,
    pdb_heuristic, project,
)
from .hald import Hierarchy, count_K, run_hald, validate_hierarchy

__version__ = "0.1.0"
