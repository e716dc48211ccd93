"""qesforge: construct, solve and verify quasi-exactly solvable 1D potentials."""

from .errors import (BranchCollision, ComplexValuedOnInterval, DegenerateDenominator,
                     DegenerateState, NearPole, NoConvergence, NotFExpressible,
                     QesError, UnknownEntry, UnknownFrame, ValidationFailed)
from .frame import Ansatz, Frame, FrameSamplers, log_derivative, standard_frame, state_sampler, validate_frame
from .polyalg import Poly, RationalFn, deriv_x, normalize
from .potential import PotentialExpr, build_potential, partial_fractions, potential_sampler
from .constraints import ConstraintSystem, degenerate_system, excited_system, jacobian
from .solver import Solution, SolveOptions, polish, solve
from .ptsearch import pt_companion_search
from . import catalog, problems, ptsearch, susy, verify

__all__ = [
    "Ansatz", "Frame", "FrameSamplers", "Poly", "RationalFn", "PotentialExpr",
    "ConstraintSystem", "Solution", "SolveOptions",
    "standard_frame", "validate_frame", "log_derivative", "state_sampler",
    "deriv_x", "normalize", "build_potential", "partial_fractions", "potential_sampler",
    "excited_system", "degenerate_system", "jacobian", "solve", "polish",
    "pt_companion_search",
    "catalog", "problems", "ptsearch", "susy", "verify",
    "QesError", "DegenerateDenominator", "NearPole", "UnknownFrame", "ValidationFailed",
    "DegenerateState", "NotFExpressible", "NoConvergence", "UnknownEntry",
    "BranchCollision", "NoRealBranch", "ComplexValuedOnInterval",
]

from .errors import NoRealBranch  # noqa: E402  (listed in __all__)
