"""Exact strong simulation of linear optical circuits by depth-first traversal.

The traversal walks the lattice of partial derivatives of the output
polynomial, keeping a single vector of ``2**n`` coefficients, and yields every
output amplitude of the one-photon-per-mode input.  Reference engines (term by
term expansion, per-output permanents), noise and feedforward drivers, traversal
plans on the partition lattice and a FLOP/memory cost model live alongside it.
"""

from ._kernels import get_backend, set_backend, use_backend
from .adaptive import AdaptivePolicy, brute_force_adaptive, traverse_adaptive, update_U
from .core import (
    BudgetError,
    InputError,
    OpCounter,
    SimulationError,
    enumerate_fock_states,
    haar_random_unitary,
    normalization_factor,
    state_count,
)
from .lattice import NodeEvent, StopTraversal, distribution, iterate_amplitudes, traverse
from .noise import (
    LossModel,
    distinguishable_distribution,
    lossy_distribution,
    multiphoton_distribution,
)
from .permanent import amplitude, permanent
from .slos import Mask, slos_full, slos_masked
from .steiner import build_partition_graph, execute_plan, solve_exact, solve_greedy

__version__ = "0.1.0"

__all__ = [
    "AdaptivePolicy",
    "BudgetError",
    "InputError",
    "LossModel",
    "Mask",
    "NodeEvent",
    "OpCounter",
    "SimulationError",
    "StopTraversal",
    "amplitude",
    "brute_force_adaptive",
    "build_partition_graph",
    "distinguishable_distribution",
    "distribution",
    "enumerate_fock_states",
    "execute_plan",
    "get_backend",
    "haar_random_unitary",
    "iterate_amplitudes",
    "lossy_distribution",
    "multiphoton_distribution",
    "normalization_factor",
    "permanent",
    "set_backend",
    "slos_full",
    "slos_masked",
    "solve_exact",
    "solve_greedy",
    "state_count",
    "traverse",
    "traverse_adaptive",
    "update_U",
    "use_backend",
]
