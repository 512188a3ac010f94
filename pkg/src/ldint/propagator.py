"""One-step matrix propagators for linear systems du/dt = A u.

The order-n two-point rule applied to a linear system gives the rational
map

    D(-A dt) u_{nu+1} = D(+A dt) u_nu,   D(X) = sum_{l=0}^n C_ln / l! X^l

(the (n,n) Pade approximant of exp(A dt) in matrix form).  The propagator
keeps D(-A dt) in LU-factored form by default so each step costs one
solve; an explicit dense inverse is available for repeated stepping.  An
explicit truncated-exponential (Runge-Kutta/Taylor) propagator is
provided for stability comparisons.

Also here: oscillator networks (mass/stiffness matrices) assembled into
block generators, and banded periodic advection operators for
method-of-lines experiments.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from enum import Enum
from math import factorial

import numpy as np
import scipy.linalg
import scipy.sparse

from .quadrature import ld_coefficients

__all__ = [
    "PropagatorKind",
    "LinearPropagator",
    "SingularPropagatorError",
    "OscillatorNetwork",
    "MolScheme",
    "MolOperator",
    "LinearTrajectory",
    "build_propagator",
    "oscillator_generator",
    "mol_advection_operator",
    "evolve_linear",
]

_SOLVE_RESIDUAL_RTOL = 1e-10


class PropagatorKind(Enum):
    LANCZOS_DYCHE = "ld"
    RUNGE_KUTTA = "rk"


class SingularPropagatorError(ArithmeticError):
    """D(-A dt) is singular: dt sits on a pole of the rational map."""

    def __init__(self, dt):
        super().__init__(
            f"propagator denominator is singular at dt={dt}; "
            "reduce the time step away from the pole"
        )
        self.dt = dt


def _matrix_poly(weights, x: np.ndarray) -> np.ndarray:
    """Horner evaluation sum_l weights[l] x^l with weights[0] = 1."""
    n = x.shape[0]
    acc = np.eye(n) * weights[-1]
    for w in reversed(weights[:-1]):
        acc = acc @ x + np.eye(n) * w
    return acc


@dataclass
class LinearPropagator:
    """One-step map for du/dt = A u at order n and step dt."""

    A: np.ndarray
    n: int
    dt: float
    kind: PropagatorKind = PropagatorKind.LANCZOS_DYCHE
    dense: bool = False

    def __post_init__(self):
        a = np.asarray(self.A, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"generator must be square, got shape {a.shape}")
        self.A = a
        if self.kind is PropagatorKind.LANCZOS_DYCHE:
            weights = [1.0] + [
                float(c / factorial(l + 1)) for l, c in enumerate(ld_coefficients(self.n))
            ]
            x = a * self.dt
            self._num = _matrix_poly(weights, x)
            den = _matrix_poly(weights, -x)
            self._den = den
            try:
                with warnings.catch_warnings():
                    # singularity is detected below via the pivots
                    warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
                    self._lu = scipy.linalg.lu_factor(den)
            except scipy.linalg.LinAlgError:
                raise SingularPropagatorError(self.dt) from None
            if not np.all(np.isfinite(self._lu[0])):
                raise SingularPropagatorError(self.dt)
            # cheap singularity guard: U's diagonal carries the pivots
            diag = np.abs(np.diag(self._lu[0]))
            if diag.min() <= 1e-14 * max(diag.max(), 1.0):
                raise SingularPropagatorError(self.dt)
            self._odd = self._num - den  # D(+X) - D(-X): odd part, drives increments
            self._matrix = None
            if self.dense:
                self._matrix = scipy.linalg.lu_solve(self._lu, self._num)
        else:
            weights = [1.0 / factorial(l) for l in range(self.n + 1)]
            self._matrix = _matrix_poly(weights, a * self.dt)
            self._num = self._matrix
            self._den = np.eye(a.shape[0])
            self._lu = None
            self._odd = self._matrix - np.eye(a.shape[0])

    @property
    def matrix(self) -> np.ndarray:
        """Dense propagator P with u_{nu+1} = P u_nu (computed on demand)."""
        if self._matrix is None:
            self._matrix = scipy.linalg.lu_solve(self._lu, self._num)
        return self._matrix

    def step(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if self._lu is None or self.dense:
            return self.matrix @ u
        rhs = self._num @ u
        out = scipy.linalg.lu_solve(self._lu, rhs)
        resid = self._den @ out - rhs
        scale = np.linalg.norm(rhs)
        if scale > 0 and np.linalg.norm(resid) > _SOLVE_RESIDUAL_RTOL * scale:
            raise SingularPropagatorError(self.dt)
        return out

    def increment(self, u: np.ndarray) -> np.ndarray:
        """du with u_{nu+1} = u_nu + du, solved without cancellation."""
        u = np.asarray(u, dtype=float)
        rhs = self._odd @ u
        if self._lu is None:
            return rhs
        return scipy.linalg.lu_solve(self._lu, rhs)

    def reverse(self) -> "LinearPropagator":
        """The propagator built with -dt (time-symmetric partner)."""
        return LinearPropagator(self.A, self.n, -self.dt, self.kind, self.dense)

    def blocks(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(A, B, C, D) blocks of the map (q', p') = (Aq + Bp, Cq + Dp)."""
        m = self.matrix
        if m.shape[0] % 2 != 0:
            raise ValueError("block view needs an even-dimensional propagator")
        half = m.shape[0] // 2
        return (
            m[:half, :half],
            m[:half, half:],
            m[half:, :half],
            m[half:, half:],
        )


def build_propagator(
    A: np.ndarray,
    dt: float,
    n: int,
    kind: PropagatorKind | str = PropagatorKind.LANCZOS_DYCHE,
    dense: bool = False,
) -> LinearPropagator:
    """Construct the order-n one-step propagator for du/dt = A u."""
    if isinstance(kind, str):
        kind = PropagatorKind(kind)
    if n < 1:
        raise ValueError(f"propagator order must be >= 1, got n={n}")
    return LinearPropagator(np.asarray(A, dtype=float), n, dt, kind, dense)


@dataclass(frozen=True)
class OscillatorNetwork:
    """Coupled oscillators with mass matrix M and stiffness matrix K."""

    M: np.ndarray
    K: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.M, dtype=float)
        k = np.asarray(self.K, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape != k.shape:
            raise ValueError("M and K must be square matrices of the same size")
        scale = max(1.0, float(np.abs(m).max()))
        if not np.allclose(m, m.T, rtol=0, atol=1e-12 * scale):
            raise ValueError("mass matrix must be symmetric")
        scale = max(1.0, float(np.abs(k).max()))
        if not np.allclose(k, k.T, rtol=0, atol=1e-12 * scale):
            raise ValueError("stiffness matrix must be symmetric")
        try:
            np.linalg.cholesky(m)
        except np.linalg.LinAlgError:
            raise ValueError("mass matrix must be positive definite") from None
        object.__setattr__(self, "M", m)
        object.__setattr__(self, "K", k)

    @property
    def dim(self) -> int:
        return self.M.shape[0]

    @classmethod
    def from_file(cls, path) -> "OscillatorNetwork":
        """Plain-text format: first line N, then N rows of M, then N rows of K."""
        with open(path) as fh:
            tokens = fh.read().split()
        if not tokens:
            raise ValueError(f"empty oscillator network file: {path}")
        n = int(tokens[0])
        need = 1 + 2 * n * n
        if len(tokens) != need:
            raise ValueError(
                f"oscillator network file {path} must hold 1 + 2*N^2 = {need} numbers, "
                f"found {len(tokens)}"
            )
        vals = np.array([float(v) for v in tokens[1:]])
        m = vals[: n * n].reshape(n, n)
        k = vals[n * n :].reshape(n, n)
        return cls(M=m, K=k)

    def energy(self, q: np.ndarray, p: np.ndarray) -> float:
        minv = np.linalg.inv(self.M)
        return 0.5 * float(p @ minv @ p) + 0.5 * float(q @ self.K @ q)


def oscillator_generator(net: OscillatorNetwork) -> np.ndarray:
    """2N x 2N first-order generator [[0, M^-1], [-K, 0]] of the network."""
    n = net.dim
    minv = np.linalg.inv(net.M)
    gen = np.zeros((2 * n, 2 * n))
    gen[:n, n:] = minv
    gen[n:, :n] = -net.K
    return gen


class MolScheme(Enum):
    CENTRAL_2 = "cd2"
    CENTRAL_4 = "cd4"


@dataclass(frozen=True)
class MolOperator:
    """Periodic finite-difference approximation of -c d/dx with c = 1."""

    n_points: int
    dx: float
    scheme: MolScheme
    L: scipy.sparse.spmatrix

    def dense(self) -> np.ndarray:
        return self.L.toarray()


def mol_advection_operator(
    n_points: int, dx: float, scheme: MolScheme | str = MolScheme.CENTRAL_2
) -> MolOperator:
    """Banded antisymmetric circulant for periodic advection u_t = -u_x."""
    if isinstance(scheme, str):
        scheme = MolScheme(scheme)
    if dx <= 0:
        raise ValueError(f"grid spacing must be > 0, got {dx}")
    min_points = 4 if scheme is MolScheme.CENTRAL_2 else 5
    if n_points < min_points:
        raise ValueError(
            f"{scheme.value} needs at least {min_points} grid points, got {n_points}"
        )
    n = n_points
    if scheme is MolScheme.CENTRAL_2:
        offsets = {1: -1.0 / (2.0 * dx), -1: 1.0 / (2.0 * dx)}
    else:
        offsets = {
            1: -8.0 / (12.0 * dx),
            2: 1.0 / (12.0 * dx),
            -1: 8.0 / (12.0 * dx),
            -2: -1.0 / (12.0 * dx),
        }
    mat = scipy.sparse.lil_matrix((n, n))
    for off, val in offsets.items():
        for i in range(n):
            mat[i, (i + off) % n] = val
    return MolOperator(n_points=n, dx=dx, scheme=scheme, L=mat.tocsr())


@dataclass
class LinearTrajectory:
    """Stored states and 2-norms of a repeated linear stepping run."""

    states: np.ndarray  # shape (steps + 1, N)
    norms: np.ndarray
    dt: float

    def write_csv(self, fh) -> None:
        fh.write("step,t,norm\n")
        for k in range(len(self.norms)):
            fh.write(f"{k},{k * self.dt:.17g},{self.norms[k]:.17g}\n")

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            self.write_csv(fh)


def evolve_linear(prop: LinearPropagator, u0: np.ndarray, steps: int) -> LinearTrajectory:
    """Apply the propagator repeatedly, recording the 2-norm per step."""
    u = np.asarray(u0, dtype=float)
    if u.ndim != 1 or u.shape[0] != prop.A.shape[0]:
        raise ValueError(
            f"state dimension {u.shape} does not match generator {prop.A.shape}"
        )
    if steps < 0:
        raise ValueError("steps must be >= 0")
    states = np.empty((steps + 1, u.shape[0]))
    norms = np.empty(steps + 1)
    states[0] = u
    norms[0] = np.linalg.norm(u)
    for k in range(steps):
        u = prop.step(u)
        states[k + 1] = u
        norms[k + 1] = np.linalg.norm(u)
    return LinearTrajectory(states=states, norms=norms, dt=prop.dt)
