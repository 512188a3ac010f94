"""Backend parity: the compiled kernels must reproduce the pure-Python
reference bit for bit, and both must agree with the generic stepper path."""

import dataclasses

import numpy as np
import pytest

from ldint import _kernels_py
from ldint import backend
from ldint.integrators import StepperConfig, evolve
from ldint.systems import PhaseState, make_damped, make_pendulum, make_sho

try:
    from ldint import _kernels as _compiled
except ImportError:
    _compiled = None

SYSTEMS = {
    "sho": (_kernels_py.SYS_SHO, 0.0),
    "pendulum": (_kernels_py.SYS_PENDULUM, 0.0),
    "damped": (_kernels_py.SYS_DAMPED, 1e-3),
}

METHODS = ["euler", "rk2", "rk4", "verletq", "verletp", "ld2", "ld4"]


@pytest.mark.skipif(_compiled is None, reason="compiled kernels unavailable")
@pytest.mark.parametrize("method", METHODS)
@pytest.mark.parametrize("system", sorted(SYSTEMS))
@pytest.mark.parametrize("compensated", [True, False])
def test_compiled_matches_python_bitwise(system, method, compensated):
    sys_id, gamma = SYSTEMS[system]
    method_id = backend.METHOD_IDS[method]
    args = (sys_id, method_id, gamma, 0.8, 0.25, 0.0, 0.1, 4000, 1e-14, 25, compensated)
    q_py, p_py, it_py = _kernels_py.evolve_scalar(*args)
    q_c, p_c, it_c = _compiled.evolve_scalar(*args)
    assert np.array_equal(q_py, q_c)
    assert np.array_equal(p_py, p_c)
    assert it_py == it_c


def test_selected_backend_announced():
    assert backend.BACKEND in ("compiled", "python")
    assert backend.kernels.BACKEND == backend.BACKEND


@pytest.mark.parametrize("method", ["rk2", "verletq", "verletp", "ld2", "ld4"])
@pytest.mark.parametrize(
    "factory", [make_sho, make_pendulum, lambda: make_damped(1e-3)]
)
def test_kernel_agrees_with_generic_stepper_path(factory, method):
    system = factory()
    config = StepperConfig(method=method, dt=0.1)
    initial = PhaseState(q=0.8, p=0.25)
    fast = evolve(system, config, initial, 30)

    slow_sys = dataclasses.replace(system, kernel_id=None)
    slow = evolve(slow_sys, config, initial, 30)
    assert np.allclose(fast.q, slow.q, rtol=1e-10, atol=1e-13)
    assert np.allclose(fast.p, slow.p, rtol=1e-10, atol=1e-13)


def test_kernel_newton_error_surfaces_as_divergence():
    from ldint.integrators import NewtonDivergenceError

    pend = make_pendulum()
    with pytest.raises(NewtonDivergenceError, match="step"):
        evolve(
            pend,
            StepperConfig(method="ld2", dt=40.0, newton_max_iter=4),
            PhaseState(q=1.0, p=0.3),
            5,
        )
