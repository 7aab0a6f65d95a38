"""Decentralized shortest-path interdiction games: models, equilibrium solvers and studies."""

__version__ = "0.1.0"

from .instance import (  # noqa: E402
    CONTINUOUS,
    DISCRETE,
    InstanceError,
    InterdictionInstance,
    UnreachableError,
    ZeroLengthWarning,
    make_instance,
    obstruction_values,
    shortest_path,
    social_welfare,
)
from .lcp import LcpProblem, lemke_solve, verify_solution  # noqa: E402
from .assembly import assemble_lcp, extract_profile, solve_lcp  # noqa: E402
from .solvers import (  # noqa: E402
    best_response,
    centralized_continuous,
    centralized_discrete,
    verify_equilibrium,
)
from .dynamics import DynamicsConfig, gauss_seidel, multi_start, regularized_gauss_seidel  # noqa: E402
from .generators import LadderSpec, RandomSpec, gen_ladder, gen_random  # noqa: E402

__all__ = [
    "CONTINUOUS", "DISCRETE", "InstanceError", "InterdictionInstance", "UnreachableError",
    "ZeroLengthWarning", "make_instance", "obstruction_values", "shortest_path", "social_welfare",
    "LcpProblem", "lemke_solve", "verify_solution", "assemble_lcp", "extract_profile", "solve_lcp",
    "best_response", "centralized_continuous", "centralized_discrete", "verify_equilibrium",
    "DynamicsConfig", "gauss_seidel", "multi_start", "regularized_gauss_seidel",
    "LadderSpec", "RandomSpec", "gen_ladder", "gen_random",
]
