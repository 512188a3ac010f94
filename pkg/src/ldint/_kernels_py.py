"""Pure-Python evolution kernels for the scalar built-in systems.

This module is the reference implementation of the hot loops; the
compiled extension (_kernels.pyx) mirrors it statement by statement so
both backends produce bit-identical trajectories.  Keep the two in sync.

Systems: 0 = harmonic oscillator, 1 = pendulum (V = cos q), 2 = damped
oscillator (canonical variables, damping constant gamma).
Methods: 0 = euler, 1 = rk2, 2 = rk4, 3 = verlet-q, 4 = verlet-p,
5 = ld2, 6 = ld4.
"""

from math import cos, exp, sin

import numpy as np

BACKEND = "python"

SYS_SHO = 0
SYS_PENDULUM = 1
SYS_DAMPED = 2

M_EULER = 0
M_RK2 = 1
M_RK4 = 2
M_VERLET_Q = 3
M_VERLET_P = 4
M_LD2 = 5
M_LD4 = 6


class KernelNewtonError(RuntimeError):
    """Newton iteration in a kernel failed to reach tolerance."""

    def __init__(self, step: int, residual: float, iterations: int):
        super().__init__(
            f"Newton solve diverged at step {step}: residual {residual:.3e} "
            f"after {iterations} iterations"
        )
        self.step = step
        self.residual = residual
        self.iterations = iterations


def evolve_scalar(system, method, gamma, q0, p0, t0, dt, steps,
                  newton_tol, newton_max_iter, compensated):
    """Run `steps` steps; returns (q, p, max_newton_iters) with arrays of
    length steps + 1 including the initial state."""
    q_out = np.empty(steps + 1)
    p_out = np.empty(steps + 1)
    q = float(q0)
    p = float(p0)
    cq = 0.0
    cp = 0.0
    q_out[0] = q
    p_out[0] = p
    max_iters = 0

    use_comp = bool(compensated)
    half = 0.5 * dt
    quarter = 0.25 * dt * dt  # dt^2/4 of the LD2 implicit equation
    twelfth = dt * dt / 12.0  # dt^2/12 of the LD4 scheme

    if system == SYS_SHO:
        k2 = 1.0 / (1.0 + quarter)
        k4 = 1.0 / (1.0 + twelfth * (1.0 + twelfth))
        a4 = 1.0 - twelfth

    for nu in range(steps):
        if system == SYS_SHO:
            if method == M_EULER:
                dq = dt * p
                dp = -dt * q
            elif method == M_RK2:
                dq = dt * (p - half * q)
                dp = -dt * (q + half * p)
            elif method == M_RK4:
                dq = dt * (p + dt * (-0.5 * q + dt * (-p / 6.0 + dt * (q / 24.0))))
                dp = -dt * (q + dt * (0.5 * p + dt * (-q / 6.0 + dt * (-p / 24.0))))
            elif method == M_VERLET_Q:
                dq = dt * p
                dp = -dt * (q + dq)
            elif method == M_VERLET_P:
                dp = -dt * q
                dq = dt * (p + dp)
            elif method == M_LD2:
                dq = k2 * dt * (p - half * q)
                dp = -k2 * dt * (q + half * p)
            else:  # M_LD4
                dq = k4 * dt * (a4 * p - half * q)
                dp = -k4 * dt * (a4 * q + half * p)
        elif system == SYS_PENDULUM:
            s = sin(q)
            c = cos(q)
            if method == M_EULER:
                dq = dt * p
                dp = dt * s
            elif method == M_RK2:
                dq = dt * (p + half * s)
                dp = dt * (s + half * c * p)
            elif method == M_RK4:
                q4 = -s * p * p + s * c
                p4 = -c * p * p * p - 2.0 * s * s * p + (c * c - s * s) * p
                dq = dt * (p + dt * (s / 2.0 + dt * (c * p / 6.0 + dt * (q4 / 24.0))))
                dp = dt * (s + dt * (c * p / 2.0 + dt * (q4 / 6.0 + dt * (p4 / 24.0))))
            elif method == M_VERLET_Q:
                dq = dt * p
                dp = dt * sin(q + dq)
            elif method == M_VERLET_P:
                dp = dt * s
                dq = dt * (p + dp)
            elif method == M_LD2:
                rhs = q + dt * p + quarter * s
                big_q = q
                it = 0
                while True:
                    r = big_q - quarter * sin(big_q) - rhs
                    if abs(r) <= newton_tol:
                        break
                    if it >= newton_max_iter:
                        raise KernelNewtonError(nu, abs(r), it)
                    big_q -= r / (1.0 - quarter * cos(big_q))
                    it += 1
                if it > max_iters:
                    max_iters = it
                s1 = sin(big_q)
                dq = dt * p + quarter * (s + s1)
                dp = half * (s + s1)
            else:  # M_LD4
                big_q = q
                big_p = p
                it = 0
                while True:
                    s1 = sin(big_q)
                    c1 = cos(big_q)
                    dq = half * (p + big_p) + twelfth * (s - s1)
                    dp = half * (s + s1) + twelfth * (p * c - big_p * c1)
                    r1 = big_q - q - dq
                    r2 = big_p - p - dp
                    rmax = max(abs(r1), abs(r2))
                    if rmax <= newton_tol:
                        break
                    if it >= newton_max_iter:
                        raise KernelNewtonError(nu, rmax, it)
                    j11 = 1.0 + twelfth * c1
                    j12 = -half
                    j21 = -half * c1 - twelfth * big_p * s1
                    j22 = 1.0 + twelfth * c1
                    det = j11 * j22 - j12 * j21
                    big_q -= (j22 * r1 - j12 * r2) / det
                    big_p -= (-j21 * r1 + j11 * r2) / det
                    it += 1
                if it > max_iters:
                    max_iters = it
                s1 = sin(big_q)
                c1 = cos(big_q)
                dq = half * (p + big_p) + twelfth * (s - s1)
                dp = half * (s + s1) + twelfth * (p * c - big_p * c1)
        else:  # SYS_DAMPED
            t_now = t0 + nu * dt
            t_new = t0 + (nu + 1) * dt
            a0 = exp(-gamma * t_now)
            b0 = exp(gamma * t_now)
            if method == M_EULER:
                dq = dt * a0 * p
                dp = -dt * b0 * q
            elif method == M_RK2 or method == M_RK4:
                q1 = a0 * p
                p1 = -b0 * q
                q2 = -gamma * q1 - q
                p2 = gamma * p1 - p
                if method == M_RK2:
                    dq = dt * (q1 + half * q2)
                    dp = dt * (p1 + half * p2)
                else:
                    q3 = -gamma * q2 - q1
                    p3 = gamma * p2 - p1
                    q4 = -gamma * q3 - q2
                    p4 = gamma * p3 - p2
                    dq = dt * (q1 + dt * (q2 / 2.0 + dt * (q3 / 6.0 + dt * (q4 / 24.0))))
                    dp = dt * (p1 + dt * (p2 / 2.0 + dt * (p3 / 6.0 + dt * (p4 / 24.0))))
            elif method == M_VERLET_Q:
                dq = dt * a0 * p
                dp = -dt * exp(gamma * t_new) * (q + dq)
            elif method == M_VERLET_P:
                dp = -dt * b0 * q
                dq = dt * exp(-gamma * t_new) * (p + dp)
            elif method == M_LD2:
                a1 = exp(-gamma * t_new)
                b1 = exp(gamma * t_new)
                det = 1.0 + half * half
                dq = half * ((a0 + a1) * p - half * (1.0 + exp(-gamma * dt)) * q) / det
                dp = -half * ((b0 + b1) * q + half * (1.0 + exp(gamma * dt)) * p) / det
            else:  # M_LD4
                a1 = exp(-gamma * t_new)
                b1 = exp(gamma * t_new)
                m11 = 1.0 - twelfth
                m12 = -(half * a1 + twelfth * gamma * a1)
                m21 = half * b1 - twelfth * gamma * b1
                m22 = 1.0 - twelfth
                r1 = q + half * a0 * p + twelfth * (-gamma * a0 * p - q)
                r2 = p - half * b0 * q + twelfth * (-gamma * b0 * q - p)
                det = m11 * m22 - m12 * m21
                big_q = (m22 * r1 - m12 * r2) / det
                big_p = (-m21 * r1 + m11 * r2) / det
                dq = half * (a0 * p + a1 * big_p) + twelfth * (
                    -gamma * a0 * p - q + gamma * a1 * big_p + big_q
                )
                dp = half * (-b0 * q - b1 * big_q) + twelfth * (
                    -gamma * b0 * q - p + gamma * b1 * big_q + big_p
                )

        if use_comp:
            t_sum = q + dq
            if abs(q) >= abs(dq):
                cq += (q - t_sum) + dq
            else:
                cq += (dq - t_sum) + q
            q = t_sum
            t_sum = p + dp
            if abs(p) >= abs(dp):
                cp += (p - t_sum) + dp
            else:
                cp += (dp - t_sum) + p
            p = t_sum
        else:
            q = q + dq
            p = p + dp
        q_out[nu + 1] = q
        p_out[nu + 1] = p

    return q_out, p_out, max_iters
