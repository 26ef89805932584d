"""Relative entropies, Bures-Helstrom and BKM metrics, and measurement-basis optimisation for qubits."""

__version__ = "0.1.0"

from .basisopt import (
    BellMixedBasisOptimizer,
    CanonicalPair,
    McConfig,
    MonteCarloBasisSearch,
    QubitBasisOptimizer,
    bell_mixed_basis,
    canonicalize,
    mc_optimize,
    optimize_beta,
    two_qubit_bell_strategy,
)
from .entropy import kl_divergence, measured_entropy, qubit_measured_entropy, umegaki_entropy
from .errors import BoundaryStateError, ConvergenceError, StateError
from .geometry import bkm_curvature, bkm_distance, geodesic_bvp, geodesic_ivp
from .metrics import bh_metric, bkm_qubit, cramer_rao_bound, solve_sld
from .qstate import bloch_to_density, density_to_bloch, tensor_power

__all__ = [
    "BellMixedBasisOptimizer",
    "BoundaryStateError",
    "CanonicalPair",
    "ConvergenceError",
    "McConfig",
    "MonteCarloBasisSearch",
    "QubitBasisOptimizer",
    "StateError",
    "bell_mixed_basis",
    "bh_metric",
    "bkm_curvature",
    "bkm_distance",
    "bkm_qubit",
    "bloch_to_density",
    "canonicalize",
    "cramer_rao_bound",
    "density_to_bloch",
    "geodesic_bvp",
    "geodesic_ivp",
    "kl_divergence",
    "mc_optimize",
    "measured_entropy",
    "optimize_beta",
    "qubit_measured_entropy",
    "solve_sld",
    "tensor_power",
    "two_qubit_bell_strategy",
    "umegaki_entropy",
]
