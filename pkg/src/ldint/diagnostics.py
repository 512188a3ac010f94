"""Conservation and symplecticity instrumentation.

Energy and the damped-oscillator invariant are direct evaluations; the
map Jacobian is a central-difference determinant of the one-step map; the
convergence-order estimator fits the log-log slope of an error sequence.
CompensatedAccumulator implements Neumaier's variant of error-compensated
summation used by the long evolution loops.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator, NamedTuple, Optional, Sequence

import numpy as np

from .systems import HamiltonianSystem, PhaseState

__all__ = [
    "CompensatedAccumulator",
    "DiagnosticRecord",
    "DiagnosticSeries",
    "SaturatedSequenceError",
    "energy",
    "damped_invariant",
    "map_jacobian",
    "convergence_order",
]


class CompensatedAccumulator:
    """Running sum with a compensation term (Neumaier).

    The absolute error of the readout is bounded independently of how
    many bounded terms were added, unlike a naive running sum.
    """

    __slots__ = ("sum", "compensation")

    def __init__(self, value: float = 0.0):
        self.sum = float(value)
        self.compensation = 0.0

    def add(self, x: float) -> None:
        s = self.sum
        t = s + x
        if abs(s) >= abs(x):
            self.compensation += (s - t) + x
        else:
            self.compensation += (x - t) + s
        self.sum = t

    @property
    def value(self) -> float:
        return self.sum + self.compensation


def energy(sys: HamiltonianSystem, state: PhaseState) -> float:
    """H evaluated at the state."""
    if sys.hamiltonian is None:
        raise ValueError("system provides no Hamiltonian evaluator")
    return float(sys.hamiltonian(state.q, state.p, state.t))


def damped_invariant(gamma: float, state: PhaseState) -> float:
    """Conserved quantity of the damped oscillator:

    C = p^2/2 e^(-gamma t) + gamma p q / 2 + q^2/2 e^(gamma t)
    """
    q = float(np.dot(state.q, state.q))
    p = float(np.dot(state.p, state.p))
    pq = float(np.dot(state.p, state.q))
    t = state.t
    return 0.5 * p * math.exp(-gamma * t) + 0.5 * gamma * pq + 0.5 * q * math.exp(gamma * t)


def map_jacobian(step: Callable[[PhaseState], PhaseState],
                 state: PhaseState,
                 epsilon: Optional[float] = None) -> float:
    """Central-difference determinant of d(q', p')/d(q, p) for a one-step map.

    epsilon defaults to cbrt(machine eps) scaled by the state magnitude,
    balancing truncation against roundoff.
    """
    dim = state.dim
    size = 2 * dim
    base = np.concatenate([state.q, state.p])
    if epsilon is None:
        scale = max(1.0, float(np.max(np.abs(base))))
        epsilon = np.finfo(float).eps ** (1.0 / 3.0) * scale
    jac = np.empty((size, size))
    for j in range(size):
        bump = np.zeros(size)
        bump[j] = epsilon
        plus = _apply(step, state, base + bump)
        minus = _apply(step, state, base - bump)
        jac[:, j] = (plus - minus) / (2.0 * epsilon)
    return float(np.linalg.det(jac))


def _apply(step, state, z) -> np.ndarray:
    dim = state.dim
    out = step(PhaseState(q=z[:dim], p=z[dim:], t=state.t, nu=state.nu))
    return np.concatenate([out.q, out.p])


class SaturatedSequenceError(ValueError):
    """Errors hit the roundoff floor (zero/negative); no order can be fitted."""


def convergence_order(errors: Sequence[float], dts: Sequence[float]) -> float:
    """Least-squares slope of log(error) against log(dt).

    Requires at least three pairs on a refinement sequence; zero or
    negative errors indicate the exact-to-roundoff regime and raise
    SaturatedSequenceError instead of producing a meaningless fit.
    """
    if len(errors) != len(dts):
        raise ValueError("errors and dts must pair up")
    if len(errors) < 3:
        raise ValueError("need at least three (error, dt) pairs")
    errs = np.asarray(errors, dtype=float)
    steps = np.asarray(dts, dtype=float)
    if np.any(steps <= 0):
        raise ValueError("dt values must be positive")
    if np.any(errs <= 0):
        raise SaturatedSequenceError(
            "error sequence touches zero (saturated); refine the comparison instead"
        )
    x = np.log(steps)
    y = np.log(errs)
    design = np.vstack([x, np.ones_like(x)]).T
    slope, _ = np.linalg.lstsq(design, y, rcond=None)[0]
    return float(slope)


class DiagnosticRecord(NamedTuple):
    nu: int
    t: float
    q: np.ndarray
    p: np.ndarray
    E: float
    dE_rel: float
    J: Optional[float] = None
    C_rel: Optional[float] = None


@dataclass
class DiagnosticSeries:
    """Columnar per-step records of a trajectory and its conservation errors.

    ``dE_rel[k] = |E(t_k) - E(0)| / |E(0)|``; the optional columns hold the
    finite-difference map Jacobian and the relative drift of the damped
    invariant C.
    """

    nu: np.ndarray
    t: np.ndarray
    q: np.ndarray  # shape (len, dim)
    p: np.ndarray
    E: np.ndarray
    dE_rel: np.ndarray
    J: Optional[np.ndarray] = None
    C_rel: Optional[np.ndarray] = None

    def __post_init__(self):
        if not np.all(np.diff(self.nu) > 0) and len(self.nu) > 1:
            raise ValueError("step indices must be strictly increasing")

    def __len__(self) -> int:
        return len(self.nu)

    def state(self, i: int) -> PhaseState:
        return PhaseState(q=self.q[i], p=self.p[i], t=float(self.t[i]), nu=int(self.nu[i]))

    @property
    def final_state(self) -> PhaseState:
        return self.state(len(self) - 1)

    def records(self) -> Iterator[DiagnosticRecord]:
        for i in range(len(self)):
            yield DiagnosticRecord(
                nu=int(self.nu[i]),
                t=float(self.t[i]),
                q=self.q[i],
                p=self.p[i],
                E=float(self.E[i]),
                dE_rel=float(self.dE_rel[i]),
                J=None if self.J is None else float(self.J[i]),
                C_rel=None if self.C_rel is None else float(self.C_rel[i]),
            )

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            self.write_csv(fh)

    def write_csv(self, fh) -> None:
        """CSV with header nu,t,q,p,E,dE_rel,J,C_rel; blanks where absent."""
        fh.write("nu,t,q,p,E,dE_rel,J,C_rel\n")
        for i in range(len(self)):
            qs = ";".join(f"{v:.17g}" for v in self.q[i])
            ps = ";".join(f"{v:.17g}" for v in self.p[i])
            j = "" if self.J is None else f"{self.J[i]:.17g}"
            c = "" if self.C_rel is None else f"{self.C_rel[i]:.17g}"
            fh.write(
                f"{int(self.nu[i])},{self.t[i]:.17g},{qs},{ps},"
                f"{self.E[i]:.17g},{self.dE_rel[i]:.17g},{j},{c}\n"
            )
