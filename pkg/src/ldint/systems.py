"""Canonical phase-space state and Hamiltonian system descriptions.

A HamiltonianSystem bundles the evaluators the steppers need: dH/dq and
dH/dp always; total time derivatives d/dt(dH/dq), d/dt(dH/dp) along the
flow for the second-order Taylor and LD4 schemes; and optional structure
(separable potential, constant linear generator, damping constant) that
unlocks fast paths.

Built-ins: ``sho``, ``pendulum`` (V(q) = cos q), ``damped`` (canonical
damped oscillator with explicitly time-dependent Hamiltonian) and
``coupled`` (oscillator networks from mass/stiffness matrices).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

__all__ = [
    "PhaseState",
    "HamiltonianSystem",
    "CapabilityError",
    "make_sho",
    "make_pendulum",
    "make_damped",
    "make_coupled",
    "make_quadratic",
    "builtin_system",
    "BUILTIN_SYSTEMS",
]


class CapabilityError(ValueError):
    """The system lacks an evaluator the requested scheme needs."""


def _as_vector(x) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(x, dtype=float)).copy()
    if arr.ndim != 1:
        raise ValueError(f"phase components must be vectors, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class PhaseState:
    """Canonical pair (q, p) with time t and step index nu."""

    q: np.ndarray
    p: np.ndarray
    t: float = 0.0
    nu: int = 0

    def __post_init__(self):
        q = _as_vector(self.q)
        p = _as_vector(self.p)
        if q.shape != p.shape:
            raise ValueError(f"q and p dimensions differ: {q.shape} vs {p.shape}")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
            raise ValueError("phase-space components must be finite")
        if self.nu < 0:
            raise ValueError("step index must be non-negative")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)

    @property
    def dim(self) -> int:
        return self.q.shape[0]


@dataclass
class HamiltonianSystem:
    """Evaluator bundle for H(q, p, t) and the structure steppers exploit.

    ``dt_dh_dq``/``dt_dh_dp`` are the total time derivatives of the H
    partials along the flow; ``flow_jet(q, p, t, order)`` returns the time
    derivatives ([q, dq/dt, ...], [p, dp/dt, ...]) up to ``order`` for
    multi-derivative Taylor stepping.
    """

    dim: int
    hamiltonian: Callable
    dh_dq: Callable
    dh_dp: Callable
    dt_dh_dq: Optional[Callable] = None
    dt_dh_dp: Optional[Callable] = None
    flow_jet: Optional[Callable] = None
    separable: bool = False
    potential_gradient: Optional[Callable] = None
    potential_hessian: Optional[Callable] = None
    potential_third: Optional[Callable] = None
    gamma: float = 0.0
    generator: Optional[np.ndarray] = None
    name: str = ""
    kernel_id: Optional[int] = None  # hot-loop kernel dispatch for scalar built-ins

    def require_flow_jet(self, order: int, scheme: str) -> None:
        if self.flow_jet is None and order > 1:
            if order == 2 and self.dt_dh_dq is not None and self.dt_dh_dp is not None:
                return
            raise CapabilityError(
                f"{scheme} needs flow derivatives up to order {order}; "
                f"system {self.name or '<anonymous>'} does not provide them"
            )

    def jets(self, q, p, t, order):
        """Flow jets ([q, q', ..], [p, p', ..]) up to the requested order."""
        if self.flow_jet is not None:
            return self.flow_jet(q, p, t, order)
        qj = [np.asarray(q, dtype=float), self.dh_dp(q, p, t)]
        pj = [np.asarray(p, dtype=float), -self.dh_dq(q, p, t)]
        if order >= 2:
            if self.dt_dh_dp is None or self.dt_dh_dq is None:
                raise CapabilityError(
                    "second flow derivatives need dt_dh_dq/dt_dh_dp evaluators"
                )
            qj.append(self.dt_dh_dp(q, p, t))
            pj.append(-self.dt_dh_dq(q, p, t))
        if order > 2:
            raise CapabilityError(
                f"flow derivatives of order {order} need a flow_jet evaluator"
            )
        return qj[: order + 1], pj[: order + 1]


# kernel_id values understood by the compiled/pure backends
KERNEL_SHO = 0
KERNEL_PENDULUM = 1
KERNEL_DAMPED = 2


def make_sho() -> HamiltonianSystem:
    """Unit harmonic oscillator, H = p^2/2 + q^2/2."""

    def jets(q, p, t, order):
        q = np.atleast_1d(np.asarray(q, dtype=float))
        p = np.atleast_1d(np.asarray(p, dtype=float))
        cycle = [q, p, -q, -p]
        qj = [cycle[k % 4].copy() for k in range(order + 1)]
        pj = [cycle[(k + 1) % 4].copy() for k in range(order + 1)]
        return qj, pj

    return HamiltonianSystem(
        dim=1,
        hamiltonian=lambda q, p, t: 0.5 * float(np.dot(p, p) + np.dot(q, q)),
        dh_dq=lambda q, p, t: np.asarray(q, dtype=float).copy(),
        dh_dp=lambda q, p, t: np.asarray(p, dtype=float).copy(),
        dt_dh_dq=lambda q, p, t: np.asarray(p, dtype=float).copy(),
        dt_dh_dp=lambda q, p, t: -np.asarray(q, dtype=float).copy(),
        flow_jet=jets,
        separable=True,
        potential_gradient=lambda q, t: np.asarray(q, dtype=float).copy(),
        potential_hessian=lambda q, t: np.eye(np.atleast_1d(q).shape[0]),
        potential_third=lambda q, t: np.zeros_like(np.atleast_1d(q)),
        generator=np.array([[0.0, 1.0], [-1.0, 0.0]]),
        name="sho",
        kernel_id=KERNEL_SHO,
    )


def make_pendulum() -> HamiltonianSystem:
    """Pendulum with potential V(q) = cos q, so H = p^2/2 + cos q."""

    def grad(q, t):
        return -np.sin(np.asarray(q, dtype=float))

    def jets(q, p, t, order):
        q = np.atleast_1d(np.asarray(q, dtype=float))
        p = np.atleast_1d(np.asarray(p, dtype=float))
        s, c = np.sin(q), np.cos(q)
        qj = [q.copy(), p.copy(), s, c * p, -s * p * p + s * c]
        pj = [p.copy(), s, c * p, -s * p * p + s * c,
              -c * p**3 - 2.0 * s * s * p + (c * c - s * s) * p]
        if order + 1 > len(qj):
            raise CapabilityError(
                f"pendulum flow jets are implemented up to order {len(qj) - 1}"
            )
        return qj[: order + 1], pj[: order + 1]

    return HamiltonianSystem(
        dim=1,
        hamiltonian=lambda q, p, t: 0.5 * float(np.dot(p, p)) + float(np.sum(np.cos(q))),
        dh_dq=lambda q, p, t: grad(q, t),
        dh_dp=lambda q, p, t: np.asarray(p, dtype=float).copy(),
        dt_dh_dq=lambda q, p, t: -np.cos(np.asarray(q, dtype=float)) * p,
        dt_dh_dp=lambda q, p, t: np.sin(np.asarray(q, dtype=float)),
        flow_jet=jets,
        separable=True,
        potential_gradient=grad,
        potential_hessian=lambda q, t: np.diag(-np.cos(np.atleast_1d(q))),
        potential_third=lambda q, t: np.sin(np.atleast_1d(q)),
        name="pendulum",
        kernel_id=KERNEL_PENDULUM,
    )


def make_damped(gamma: float) -> HamiltonianSystem:
    """Damped oscillator in canonical variables.

    H = p^2/2 e^(-gamma t) + q^2/2 e^(gamma t); the canonical momentum is
    p = e^(gamma t) dq/dt.  The flow derivatives close under
    q^(k+2) = -gamma q^(k+1) - q^(k) and p^(k+2) = +gamma p^(k+1) - p^(k).
    """
    if gamma < 0:
        raise ValueError(f"damping constant must be >= 0, got {gamma}")

    def jets(q, p, t, order):
        q = np.atleast_1d(np.asarray(q, dtype=float))
        p = np.atleast_1d(np.asarray(p, dtype=float))
        qj = [q.copy(), math.exp(-gamma * t) * p]
        pj = [p.copy(), -math.exp(gamma * t) * q]
        for _ in range(order - 1):
            qj.append(-gamma * qj[-1] - qj[-2])
            pj.append(gamma * pj[-1] - pj[-2])
        return qj[: order + 1], pj[: order + 1]

    return HamiltonianSystem(
        dim=1,
        hamiltonian=lambda q, p, t: 0.5 * float(np.dot(p, p)) * math.exp(-gamma * t)
        + 0.5 * float(np.dot(q, q)) * math.exp(gamma * t),
        dh_dq=lambda q, p, t: math.exp(gamma * t) * np.asarray(q, dtype=float),
        dh_dp=lambda q, p, t: math.exp(-gamma * t) * np.asarray(p, dtype=float),
        dt_dh_dq=lambda q, p, t: gamma * math.exp(gamma * t) * np.asarray(q, dtype=float)
        + np.asarray(p, dtype=float),
        dt_dh_dp=lambda q, p, t: -gamma * math.exp(-gamma * t) * np.asarray(p, dtype=float)
        - np.asarray(q, dtype=float),
        flow_jet=jets,
        separable=True,
        gamma=gamma,
        name="damped",
        kernel_id=KERNEL_DAMPED,
    )


def make_coupled(mass: np.ndarray, stiffness: np.ndarray) -> HamiltonianSystem:
    """Coupled oscillators, H = p^T M^-1 p / 2 + q^T K q / 2."""
    mass = np.asarray(mass, dtype=float)
    stiffness = np.asarray(stiffness, dtype=float)
    if mass.shape != stiffness.shape or mass.ndim != 2 or mass.shape[0] != mass.shape[1]:
        raise ValueError("mass and stiffness must be square matrices of equal size")
    minv = np.linalg.inv(mass)
    dim = mass.shape[0]
    gen = np.block([[np.zeros((dim, dim)), minv], [-stiffness, np.zeros((dim, dim))]])

    def jets(q, p, t, order):
        qj = [np.asarray(q, dtype=float).copy()]
        pj = [np.asarray(p, dtype=float).copy()]
        for _ in range(order):
            qj.append(minv @ pj[-1])
            pj.append(-stiffness @ qj[-2])
        return qj[: order + 1], pj[: order + 1]

    return HamiltonianSystem(
        dim=dim,
        hamiltonian=lambda q, p, t: 0.5 * float(p @ minv @ p) + 0.5 * float(q @ stiffness @ q),
        dh_dq=lambda q, p, t: stiffness @ q,
        dh_dp=lambda q, p, t: minv @ p,
        dt_dh_dq=lambda q, p, t: stiffness @ (minv @ p),
        dt_dh_dp=lambda q, p, t: -minv @ (stiffness @ q),
        flow_jet=jets,
        separable=True,
        potential_gradient=lambda q, t: stiffness @ q,
        potential_hessian=lambda q, t: stiffness.copy(),
        generator=gen,
        name="coupled",
    )


def make_quadratic(s_matrix: np.ndarray) -> HamiltonianSystem:
    """General quadratic Hamiltonian H = z^T S z / 2 with z = (q, p).

    S must be symmetric of even size 2N; the generator is J S, which
    covers cross-coupled (damping-like) quadratic forms.
    """
    s = np.asarray(s_matrix, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] % 2 != 0:
        raise ValueError("S must be square of even size")
    if not np.allclose(s, s.T, rtol=0, atol=1e-12 * max(1.0, np.abs(s).max())):
        raise ValueError("S must be symmetric")
    dim = s.shape[0] // 2
    jmat = np.block(
        [[np.zeros((dim, dim)), np.eye(dim)], [-np.eye(dim), np.zeros((dim, dim))]]
    )
    gen = jmat @ s

    def split(z):
        return z[:dim], z[dim:]

    def jets(q, p, t, order):
        z = np.concatenate([np.atleast_1d(q), np.atleast_1d(p)]).astype(float)
        qj, pj = [], []
        for _ in range(order + 1):
            zq, zp = split(z)
            qj.append(zq.copy())
            pj.append(zp.copy())
            z = gen @ z
        return qj, pj

    def grad_q(q, p, t):
        z = np.concatenate([np.atleast_1d(q), np.atleast_1d(p)]).astype(float)
        return (s @ z)[:dim]

    def grad_p(q, p, t):
        z = np.concatenate([np.atleast_1d(q), np.atleast_1d(p)]).astype(float)
        return (s @ z)[dim:]

    return HamiltonianSystem(
        dim=dim,
        hamiltonian=lambda q, p, t: 0.5
        * float(np.concatenate([np.atleast_1d(q), np.atleast_1d(p)]) @ s
                @ np.concatenate([np.atleast_1d(q), np.atleast_1d(p)])),
        dh_dq=grad_q,
        dh_dp=grad_p,
        flow_jet=jets,
        generator=gen,
        name="quadratic",
    )


BUILTIN_SYSTEMS = {
    "sho": make_sho,
    "pendulum": make_pendulum,
    "damped": make_damped,
    "coupled": make_coupled,
}


def builtin_system(name: str, **kwargs) -> HamiltonianSystem:
    """Instantiate a built-in system by name (sho/pendulum/damped/coupled)."""
    try:
        factory = BUILTIN_SYSTEMS[name]
    except KeyError:
        known = ", ".join(sorted(BUILTIN_SYSTEMS))
        raise ValueError(f"unknown system {name!r}; built-ins: {known}") from None
    return factory(**kwargs)
