"""One-step integrators for Hamiltonian systems.

Explicit schemes (Euler, RK2/RK4 in multi-derivative Taylor form, the two
Verlet variants) and the implicit time-symmetric LD2/LD4 schemes.  The
implicit schemes use closed forms for linear systems (the trapezoidal /
fourth-order rational maps), a Newton solve on the advanced position for
separable potentials, and a coupled Newton solve with a finite-difference
Jacobian as the general fallback.

``evolve`` drives a stepper for many steps, accumulating q and p through
their per-step increments with compensated summation; trajectories of the
scalar built-in systems run in the selected kernel backend.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np

from . import backend
from .diagnostics import DiagnosticSeries
from .systems import CapabilityError, HamiltonianSystem, PhaseState

__all__ = [
    "Method",
    "StepperConfig",
    "NewtonDivergenceError",
    "SingularJacobianError",
    "newton_solve",
    "step_euler",
    "step_rk2",
    "step_rk4",
    "step_verlet",
    "step_ld2",
    "step_ld4",
    "step",
    "evolve",
]


class Method(Enum):
    EULER = "euler"
    RK2 = "rk2"
    RK4 = "rk4"
    VERLET_Q = "verletq"
    VERLET_P = "verletp"
    LD2 = "ld2"
    LD4 = "ld4"


@dataclass(frozen=True)
class StepperConfig:
    method: Method
    dt: float
    newton_tol: float = 1e-14
    newton_max_iter: int = 25
    compensated_summation: bool = True

    def __post_init__(self):
        if isinstance(self.method, str):
            object.__setattr__(self, "method", Method(self.method))
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be finite and > 0, got {self.dt}")
        if not (0 < self.newton_tol < 1):
            raise ValueError(f"newton_tol must lie in (0, 1), got {self.newton_tol}")
        if self.newton_max_iter < 1:
            raise ValueError("newton_max_iter must be >= 1")


class NewtonDivergenceError(RuntimeError):
    """Newton iteration failed to reach tolerance within max_iter."""

    def __init__(self, residual_history, message=None):
        self.residual_history = list(residual_history)
        final = self.residual_history[-1] if self.residual_history else float("nan")
        super().__init__(
            message
            or f"Newton solve did not converge: final residual {final:.3e} "
            f"after {len(self.residual_history)} evaluations"
        )


class SingularJacobianError(RuntimeError):
    """The Newton Jacobian is singular at the current iterate."""


def newton_solve(
    residual: Callable[[np.ndarray], np.ndarray],
    jacobian: Callable[[np.ndarray], np.ndarray],
    guess,
    tol: float = 1e-14,
    max_iter: int = 25,
) -> tuple[np.ndarray, int]:
    """Newton-Raphson to max-norm residual <= tol; returns (x, iterations).

    ``iterations`` counts the Jacobian solves performed.  Divergence
    raises NewtonDivergenceError carrying the residual history.
    """
    x = np.atleast_1d(np.asarray(guess, dtype=float)).copy()
    history = []
    for it in range(max_iter + 1):
        r = np.atleast_1d(np.asarray(residual(x), dtype=float))
        rnorm = float(np.max(np.abs(r)))
        history.append(rnorm)
        if rnorm <= tol:
            return x, it
        if it == max_iter:
            break
        jac = np.atleast_2d(np.asarray(jacobian(x), dtype=float))
        try:
            dx = np.linalg.solve(jac, r)
        except np.linalg.LinAlgError as err:
            raise SingularJacobianError(f"singular Newton Jacobian: {err}") from None
        if not np.all(np.isfinite(dx)):
            raise SingularJacobianError("Newton update is not finite")
        x = x - dx
    raise NewtonDivergenceError(history)


def _fd_jacobian(residual, x, eps=None):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if eps is None:
        eps = np.sqrt(np.finfo(float).eps) * max(1.0, float(np.max(np.abs(x))))
    n = x.shape[0]
    jac = np.empty((n, n))
    for j in range(n):
        bump = np.zeros(n)
        bump[j] = eps
        jac[:, j] = (
            np.atleast_1d(residual(x + bump)) - np.atleast_1d(residual(x - bump))
        ) / (2.0 * eps)
    return jac


def _check_finite(name, arr):
    arr = np.atleast_1d(np.asarray(arr, dtype=float))
    if not np.all(np.isfinite(arr)):
        bad = int(np.argmax(~np.isfinite(arr)))
        raise ValueError(f"{name} produced a non-finite component at index {bad}")
    return arr


# ---------------------------------------------------------------------------
# increments: every stepper is expressed as (dq, dp[, newton iterations])

def _incr_euler(sys, q, p, t, dt):
    dq = dt * _check_finite("dH/dp", sys.dh_dp(q, p, t))
    dp = -dt * _check_finite("dH/dq", sys.dh_dq(q, p, t))
    return dq, dp


def _incr_taylor(sys, q, p, t, dt, order):
    qj, pj = sys.jets(q, p, t, order)
    dq = np.zeros_like(np.atleast_1d(np.asarray(q, dtype=float)))
    dp = np.zeros_like(dq)
    for l in range(order, 0, -1):
        dq = dq * dt + _check_finite("flow jet", qj[l]) / math.factorial(l)
        dp = dp * dt + _check_finite("flow jet", pj[l]) / math.factorial(l)
    return dq * dt, dp * dt


def _incr_verlet(sys, q, p, t, dt, variant, tol, max_iter):
    t1 = t + dt
    if variant == "q":
        dq = dt * _check_finite("dH/dp", sys.dh_dp(q, p, t))
        q1 = q + dq
        if sys.separable:
            dp = -dt * _check_finite("dH/dq", sys.dh_dq(q1, p, t1))
            return dq, dp, 0
        res = lambda pn: pn - p + dt * np.atleast_1d(sys.dh_dq(q1, pn, t1))
        pn, it = newton_solve(res, lambda pn: _fd_jacobian(res, pn), p, tol, max_iter)
        return dq, pn - p, it
    dp = -dt * _check_finite("dH/dq", sys.dh_dq(q, p, t))
    p1 = p + dp
    if sys.separable:
        dq = dt * _check_finite("dH/dp", sys.dh_dp(q, p1, t1))
        return dq, dp, 0
    res = lambda qn: qn - q - dt * np.atleast_1d(sys.dh_dp(qn, p1, t1))
    qn, it = newton_solve(res, lambda qn: _fd_jacobian(res, qn), q, tol, max_iter)
    return qn - q, dp, it


def _linear_increment(sys, q, p, dt, order):
    from .propagator import build_propagator

    prop = build_propagator(sys.generator, dt, order)
    u = np.concatenate([np.atleast_1d(q), np.atleast_1d(p)]).astype(float)
    du = prop.increment(u)
    dim = u.shape[0] // 2
    return du[:dim], du[dim:]


def _damped_ld_increment(gamma, q, p, t, dt, order):
    """Closed-form LD2/LD4 step of the canonical damped oscillator.

    The trapezoidal averages evaluate the time-dependent coefficients at
    t_nu and t_nu+1 respectively; the advanced pair solves a 2x2 system.
    """
    half = 0.5 * dt
    a0, a1 = math.exp(-gamma * t), math.exp(-gamma * (t + dt))
    b0, b1 = math.exp(gamma * t), math.exp(gamma * (t + dt))
    q0, p0 = float(np.atleast_1d(q)[0]), float(np.atleast_1d(p)[0])
    if order == 1:
        det = 1.0 + half * half
        dq = half * ((a0 + a1) * p0 - half * (1.0 + math.exp(-gamma * dt)) * q0) / det
        dp = -half * ((b0 + b1) * q0 + half * (1.0 + math.exp(gamma * dt)) * p0) / det
    else:
        twelfth = dt * dt / 12.0
        m11 = 1.0 - twelfth
        m12 = -(half * a1 + twelfth * gamma * a1)
        m21 = half * b1 - twelfth * gamma * b1
        m22 = 1.0 - twelfth
        r1 = q0 + half * a0 * p0 + twelfth * (-gamma * a0 * p0 - q0)
        r2 = p0 - half * b0 * q0 + twelfth * (-gamma * b0 * q0 - p0)
        det = m11 * m22 - m12 * m21
        qn = (m22 * r1 - m12 * r2) / det
        pn = (-m21 * r1 + m11 * r2) / det
        dq = half * (a0 * p0 + a1 * pn) + twelfth * (
            -gamma * a0 * p0 - q0 + gamma * a1 * pn + qn
        )
        dp = half * (-b0 * q0 - b1 * qn) + twelfth * (
            -gamma * b0 * q0 - p0 + gamma * b1 * qn + pn
        )
    return np.array([dq]), np.array([dp])


def _incr_ld2(sys, q, p, t, dt, tol, max_iter):
    if sys.kernel_id == backend.SYSTEM_IDS["damped"] and sys.dim == 1:
        dq, dp = _damped_ld_increment(sys.gamma, q, p, t, dt, 1)
        return dq, dp, 0
    if sys.generator is not None:
        dq, dp = _linear_increment(sys, q, p, dt, 1)
        return dq, dp, 0
    t1 = t + dt
    if sys.separable and sys.potential_gradient is not None:
        grad = sys.potential_gradient
        c = 0.25 * dt * dt
        g0 = _check_finite("V'", grad(q, t))
        rhs = q - c * g0 + dt * p

        def res(qn):
            return qn + c * np.atleast_1d(grad(qn, t1)) - rhs

        if sys.potential_hessian is not None:
            jac = lambda qn: np.eye(len(np.atleast_1d(qn))) + c * np.atleast_2d(
                sys.potential_hessian(qn, t1)
            )
        else:
            jac = lambda qn: _fd_jacobian(res, qn)
        qn, it = newton_solve(res, jac, q, tol, max_iter)
        g1 = _check_finite("V'", grad(qn, t1))
        dq = dt * p - c * (g0 + g1)
        dp = -0.5 * dt * (g0 + g1)
        return dq, dp, it

    # general implicit trapezoidal step on the coupled advanced pair
    dim = np.atleast_1d(q).shape[0]
    hq0 = _check_finite("dH/dq", sys.dh_dq(q, p, t))
    hp0 = _check_finite("dH/dp", sys.dh_dp(q, p, t))

    def res(z):
        qn, pn = z[:dim], z[dim:]
        rq = qn - q - 0.5 * dt * (hp0 + np.atleast_1d(sys.dh_dp(qn, pn, t1)))
        rp = pn - p + 0.5 * dt * (hq0 + np.atleast_1d(sys.dh_dq(qn, pn, t1)))
        return np.concatenate([rq, rp])

    z0 = np.concatenate([np.atleast_1d(q), np.atleast_1d(p)]).astype(float)
    z, it = newton_solve(res, lambda z: _fd_jacobian(res, z), z0, tol, max_iter)
    return z[:dim] - q, z[dim:] - p, it


def _incr_ld4(sys, q, p, t, dt, tol, max_iter):
    if sys.kernel_id == backend.SYSTEM_IDS["damped"] and sys.dim == 1:
        dq, dp = _damped_ld_increment(sys.gamma, q, p, t, dt, 2)
        return dq, dp, 0
    if sys.generator is not None:
        dq, dp = _linear_increment(sys, q, p, dt, 2)
        return dq, dp, 0
    t1 = t + dt
    half = 0.5 * dt
    twelfth = dt * dt / 12.0
    if sys.separable and sys.potential_gradient is not None:
        grad = sys.potential_gradient
        hess = sys.potential_hessian
        third = sys.potential_third
        dim = np.atleast_1d(q).shape[0]
        g0 = _check_finite("V'", grad(q, t))
        eye = np.eye(dim)

        def incr(qn, pn):
            g1 = np.atleast_1d(grad(qn, t1))
            dq = half * (p + pn) + twelfth * (-g0 + g1)
            dp = -half * (g0 + g1) + twelfth * (
                _hess_apply(hess, qn, pn, t1) - _hess_apply(hess, q, p, t)
            )
            return dq, dp

        def res(z):
            qn, pn = z[:dim], z[dim:]
            dq, dp = incr(qn, pn)
            return np.concatenate([qn - q - dq, pn - p - dp])

        def jac(z):
            qn, pn = z[:dim], z[dim:]
            h1 = np.atleast_2d(hess(qn, t1)) if hess is not None else _fd_hess(grad, qn, t1)
            j11 = eye - twelfth * h1
            j12 = -half * eye
            j21 = half * h1.copy()
            if third is not None and dim == 1:
                j21 -= twelfth * np.atleast_2d(third(qn, t1)) * pn
            j22 = eye - twelfth * h1
            return np.block([[j11, j12], [j21, j22]])

        z0 = np.concatenate([np.atleast_1d(q), np.atleast_1d(p)]).astype(float)
        z, it = newton_solve(res, jac, z0, tol, max_iter)
        dq, dp = incr(z[:dim], z[dim:])
        return dq, dp, it

    # general fourth-order step via the flow-derivative evaluators
    sys.require_flow_jet(2, "LD4")
    dim = np.atleast_1d(q).shape[0]
    hq0 = _check_finite("dH/dq", sys.dh_dq(q, p, t))
    hp0 = _check_finite("dH/dp", sys.dh_dp(q, p, t))
    dhq0 = _check_finite("d/dt dH/dq", sys.dt_dh_dq(q, p, t))
    dhp0 = _check_finite("d/dt dH/dp", sys.dt_dh_dp(q, p, t))

    def res(z):
        qn, pn = z[:dim], z[dim:]
        rq = (
            qn - q - half * (hp0 + np.atleast_1d(sys.dh_dp(qn, pn, t1)))
            - twelfth * (dhp0 - np.atleast_1d(sys.dt_dh_dp(qn, pn, t1)))
        )
        rp = (
            pn - p + half * (hq0 + np.atleast_1d(sys.dh_dq(qn, pn, t1)))
            + twelfth * (dhq0 - np.atleast_1d(sys.dt_dh_dq(qn, pn, t1)))
        )
        return np.concatenate([rq, rp])

    z0 = np.concatenate([np.atleast_1d(q), np.atleast_1d(p)]).astype(float)
    z, it = newton_solve(res, lambda z: _fd_jacobian(res, z), z0, tol, max_iter)
    return z[:dim] - q, z[dim:] - p, it


def _hess_apply(hess, q, p, t):
    """d/dt V'(q) = V''(q) qdot with qdot = p for the separable form."""
    if hess is None:
        raise CapabilityError("LD4 on a separable system needs the potential Hessian")
    return np.atleast_2d(hess(q, t)) @ np.atleast_1d(p)


def _fd_hess(grad, q, t):
    q = np.atleast_1d(np.asarray(q, dtype=float))
    eps = np.sqrt(np.finfo(float).eps) * max(1.0, float(np.max(np.abs(q))))
    n = q.shape[0]
    out = np.empty((n, n))
    for j in range(n):
        bump = np.zeros(n)
        bump[j] = eps
        out[:, j] = (np.atleast_1d(grad(q + bump, t)) - np.atleast_1d(grad(q - bump, t))) / (
            2 * eps
        )
    return out


def _increment(sys, q, p, t, dt, method, tol, max_iter):
    """Dispatch to the per-method increment; returns (dq, dp, newton_iters)."""
    if method is Method.EULER:
        dq, dp = _incr_euler(sys, q, p, t, dt)
        return dq, dp, 0
    if method is Method.RK2:
        sys.require_flow_jet(2, "RK2")
        dq, dp = _incr_taylor(sys, q, p, t, dt, 2)
        return dq, dp, 0
    if method is Method.RK4:
        sys.require_flow_jet(4, "RK4")
        dq, dp = _incr_taylor(sys, q, p, t, dt, 4)
        return dq, dp, 0
    if method is Method.VERLET_Q:
        return _incr_verlet(sys, q, p, t, dt, "q", tol, max_iter)
    if method is Method.VERLET_P:
        return _incr_verlet(sys, q, p, t, dt, "p", tol, max_iter)
    if method is Method.LD2:
        return _incr_ld2(sys, q, p, t, dt, tol, max_iter)
    if method is Method.LD4:
        return _incr_ld4(sys, q, p, t, dt, tol, max_iter)
    raise ValueError(f"unknown method {method}")


def _advance(sys, state, dt, method, tol=1e-14, max_iter=25) -> PhaseState:
    dq, dp, _ = _increment(sys, state.q, state.p, state.t, dt, method, tol, max_iter)
    return PhaseState(q=state.q + dq, p=state.p + dp, t=state.t + dt, nu=state.nu + 1)


def step_euler(sys: HamiltonianSystem, state: PhaseState, dt: float) -> PhaseState:
    """First-order explicit step."""
    return _advance(sys, state, dt, Method.EULER)


def step_rk2(sys: HamiltonianSystem, state: PhaseState, dt: float) -> PhaseState:
    """Second-order Taylor step; total time derivatives expanded through
    the equations of motion."""
    sys.require_flow_jet(2, "RK2")
    return _advance(sys, state, dt, Method.RK2)


def step_rk4(sys: HamiltonianSystem, state: PhaseState, dt: float) -> PhaseState:
    """Fourth-order Taylor step (needs flow derivatives up to order 4)."""
    sys.require_flow_jet(4, "RK4")
    return _advance(sys, state, dt, Method.RK4)


def step_verlet(
    sys: HamiltonianSystem,
    state: PhaseState,
    dt: float,
    variant: str = "q",
    newton_tol: float = 1e-14,
    newton_max_iter: int = 25,
) -> PhaseState:
    """Symplectic Euler pair: variant 'q' advances q first and evaluates
    dH/dq at the advanced position; variant 'p' mirrors it."""
    if variant not in ("q", "p"):
        raise ValueError(f"Verlet variant must be 'q' or 'p', got {variant!r}")
    method = Method.VERLET_Q if variant == "q" else Method.VERLET_P
    return _advance(sys, state, dt, method, newton_tol, newton_max_iter)


def step_ld2(
    sys: HamiltonianSystem,
    state: PhaseState,
    dt: float,
    newton_tol: float = 1e-14,
    newton_max_iter: int = 25,
) -> PhaseState:
    """Implicit trapezoidal (second-order time-symmetric) step."""
    return _advance(sys, state, dt, Method.LD2, newton_tol, newton_max_iter)


def step_ld4(
    sys: HamiltonianSystem,
    state: PhaseState,
    dt: float,
    newton_tol: float = 1e-14,
    newton_max_iter: int = 25,
) -> PhaseState:
    """Fourth-order time-symmetric step with endpoint flow derivatives."""
    return _advance(sys, state, dt, Method.LD4, newton_tol, newton_max_iter)


def step(sys, state, config: StepperConfig) -> PhaseState:
    """One step using the configured method."""
    return _advance(
        sys, state, config.dt, config.method, config.newton_tol, config.newton_max_iter
    )


# ---------------------------------------------------------------------------
# trajectory driver

def _kernel_supported(sys, method) -> bool:
    return sys.kernel_id is not None and sys.dim == 1 and method.value in backend.METHOD_IDS


def _builtin_energy(sys, q, p, t):
    """Vectorised H for the scalar built-ins (columns of a trajectory)."""
    if sys.kernel_id == backend.SYSTEM_IDS["sho"]:
        return 0.5 * (q * q + p * p)
    if sys.kernel_id == backend.SYSTEM_IDS["pendulum"]:
        return 0.5 * p * p + np.cos(q)
    if sys.kernel_id == backend.SYSTEM_IDS["damped"]:
        g = sys.gamma
        return 0.5 * p * p * np.exp(-g * t) + 0.5 * q * q * np.exp(g * t)
    return None


def evolve(
    sys: HamiltonianSystem,
    config: StepperConfig,
    initial: PhaseState,
    steps: int,
    recorder: Optional[Callable] = None,
) -> DiagnosticSeries:
    """Apply the configured stepper ``steps`` times from ``initial``.

    q and p advance through their per-step increments, accumulated with
    compensated summation when enabled.  Scalar built-in systems run in
    the kernel backend.  The returned series carries E and dE_rel per
    step, plus the damped invariant drift when the system is damped; the
    recorder, when given, is invoked with every record in order.
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    if initial.dim != sys.dim:
        raise ValueError(f"state dimension {initial.dim} != system dimension {sys.dim}")
    method = config.method
    dt = config.dt

    if steps == 0:
        q_traj = initial.q[None, :].copy()
        p_traj = initial.p[None, :].copy()
        max_iters = 0
    elif _kernel_supported(sys, method):
        from ._kernels_py import KernelNewtonError

        try:
            q_arr, p_arr, max_iters = backend.kernels.evolve_scalar(
                backend.SYSTEM_IDS[sys.name],
                backend.METHOD_IDS[method.value],
                sys.gamma,
                float(initial.q[0]),
                float(initial.p[0]),
                initial.t,
                dt,
                steps,
                config.newton_tol,
                config.newton_max_iter,
                config.compensated_summation,
            )
        except KernelNewtonError as err:
            raise NewtonDivergenceError(
                [err.residual], f"step {err.step}: {err}"
            ) from err
        q_traj = q_arr[:, None]
        p_traj = p_arr[:, None]
    else:
        dim = sys.dim
        q_traj = np.empty((steps + 1, dim))
        p_traj = np.empty((steps + 1, dim))
        q_sum = initial.q.copy()
        p_sum = initial.p.copy()
        q_comp = np.zeros(dim)
        p_comp = np.zeros(dim)
        q_traj[0] = q_sum
        p_traj[0] = p_sum
        max_iters = 0
        comp = config.compensated_summation
        # constant-generator systems: factor the one-step map once
        prop = None
        if sys.generator is not None and method in (Method.LD2, Method.LD4):
            from .propagator import build_propagator

            prop = build_propagator(sys.generator, dt, 1 if method is Method.LD2 else 2)
        for nu in range(steps):
            t = initial.t + nu * dt
            try:
                if prop is not None:
                    du = prop.increment(np.concatenate([q_sum, p_sum]))
                    dq, dp, it = du[:dim], du[dim:], 0
                else:
                    dq, dp, it = _increment(
                        sys, q_sum, p_sum, t, dt, method,
                        config.newton_tol, config.newton_max_iter,
                    )
            except Exception as err:
                err.args = (f"step {nu}: {err}",) + err.args[1:]
                raise
            max_iters = max(max_iters, it)
            if comp:
                _comp_add(q_sum, q_comp, np.atleast_1d(dq))
                _comp_add(p_sum, p_comp, np.atleast_1d(dp))
            else:
                q_sum = q_sum + np.atleast_1d(dq)
                p_sum = p_sum + np.atleast_1d(dp)
            q_traj[nu + 1] = q_sum
            p_traj[nu + 1] = p_sum

    nu_col = np.arange(steps + 1, dtype=int) + initial.nu
    t_col = initial.t + np.arange(steps + 1) * dt

    vec = _builtin_energy(sys, q_traj[:, 0], p_traj[:, 0], t_col) if sys.dim == 1 else None
    if vec is not None:
        energy_col = vec
    else:
        energy_col = np.array(
            [sys.hamiltonian(q_traj[i], p_traj[i], t_col[i]) for i in range(steps + 1)]
        )
    e0 = energy_col[0]
    if e0 == 0.0:
        de_col = np.abs(energy_col - e0)
    else:
        de_col = np.abs(energy_col - e0) / abs(e0)

    c_col = None
    if sys.gamma > 0.0 and sys.dim == 1:
        g = sys.gamma
        c_vals = (
            0.5 * p_traj[:, 0] ** 2 * np.exp(-g * t_col)
            + 0.5 * g * p_traj[:, 0] * q_traj[:, 0]
            + 0.5 * q_traj[:, 0] ** 2 * np.exp(g * t_col)
        )
        c0 = c_vals[0]
        c_col = np.abs(c_vals - c0) / abs(c0) if c0 != 0.0 else np.abs(c_vals - c0)

    series = DiagnosticSeries(
        nu=nu_col, t=t_col, q=q_traj, p=p_traj, E=energy_col, dE_rel=de_col, C_rel=c_col
    )
    series.max_newton_iterations = max_iters
    if recorder is not None:
        for record in series.records():
            recorder(record)
    return series


def _comp_add(total: np.ndarray, comp: np.ndarray, inc: np.ndarray) -> None:
    """In-place vector Neumaier accumulation of ``inc`` into ``total``."""
    t = total + inc
    big = np.abs(total) >= np.abs(inc)
    comp += np.where(big, (total - t) + inc, (inc - t) + total)
    total[:] = t
