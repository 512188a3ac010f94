"""Time-symmetric multi-derivative (Lanczos-Dyche) integration toolkit.

Modules
-------
quadrature   exact-coefficient LD / Euler-Maclaurin / Taylor rules
stability    increment functions and A-stability scans
systems      phase states and built-in Hamiltonian systems
integrators  one-step schemes and the trajectory driver
propagator   matrix propagators for linear systems and method of lines
diagnostics  energy / invariant / Jacobian / convergence instrumentation
cli          experiment runner (``ldint`` entry point)
"""

from .backend import BACKEND
from .diagnostics import (
    CompensatedAccumulator,
    DiagnosticSeries,
    convergence_order,
    damped_invariant,
    energy,
    map_jacobian,
)
from .integrators import (
    Method,
    StepperConfig,
    evolve,
    newton_solve,
    step_euler,
    step_ld2,
    step_ld4,
    step_rk2,
    step_rk4,
    step_verlet,
)
from .propagator import (
    LinearPropagator,
    MolOperator,
    OscillatorNetwork,
    build_propagator,
    evolve_linear,
    mol_advection_operator,
    oscillator_generator,
)
from .quadrature import (
    DerivativeJet,
    QuadratureRule,
    RuleKind,
    TauPolicy,
    bernoulli_numbers,
    integrate,
    ld_coefficients,
    remainder_bound,
    two_point_interpolant,
)
from .stability import (
    IncrementFunction,
    IncrementKind,
    StabilityMap,
    check_a_stability,
    scan_region,
    zeta,
)
from .systems import HamiltonianSystem, PhaseState, builtin_system

__version__ = "0.1.0"
