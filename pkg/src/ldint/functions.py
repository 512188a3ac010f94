"""Built-in test integrands with analytic derivative jets.

Quadrature experiments need exact high-order endpoint derivatives, so
each function hard-codes a jet recurrence instead of differentiating
numerically:

* gaussian e^(-t^2):  f^(k+1) = -2 t f^(k) - 2 k f^(k-1)
* exponential e^t:    all derivatives equal f
* sin t:              cycle (sin, cos, -sin, -cos)
* cubic t^3:          finite jet

``integral(a, b)`` returns the closed-form reference at double precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .quadrature import DerivativeJet

__all__ = ["AnalyticFunction", "FUNCTIONS", "builtin_function"]


@dataclass(frozen=True)
class AnalyticFunction:
    name: str
    jet_values: Callable  # (t, order) -> list of derivatives 0..order
    integral: Callable  # (a, b) -> float

    def jet(self, t: float, order: int) -> DerivativeJet:
        return DerivativeJet(t=t, values=tuple(self.jet_values(t, order)))

    def __call__(self, t: float) -> float:
        return self.jet_values(t, 0)[0]


def _gaussian_jet(t: float, order: int):
    vals = [math.exp(-t * t)]
    if order >= 1:
        vals.append(-2.0 * t * vals[0])
    for k in range(1, order):
        vals.append(-2.0 * t * vals[k] - 2.0 * k * vals[k - 1])
    return vals


def _exp_jet(t: float, order: int):
    v = math.exp(t)
    return [v] * (order + 1)


def _sin_jet(t: float, order: int):
    cyc = (math.sin(t), math.cos(t), -math.sin(t), -math.cos(t))
    return [cyc[k % 4] for k in range(order + 1)]


def _cubic_jet(t: float, order: int):
    vals = [t**3, 3.0 * t * t, 6.0 * t, 6.0]
    return [vals[k] if k < 4 else 0.0 for k in range(order + 1)]


FUNCTIONS = {
    "gaussian": AnalyticFunction(
        "gaussian",
        _gaussian_jet,
        lambda a, b: 0.5 * math.sqrt(math.pi) * (math.erf(b) - math.erf(a)),
    ),
    "exp": AnalyticFunction("exp", _exp_jet, lambda a, b: math.exp(b) - math.exp(a)),
    "sin": AnalyticFunction("sin", _sin_jet, lambda a, b: math.cos(a) - math.cos(b)),
    "cubic": AnalyticFunction(
        "cubic", _cubic_jet, lambda a, b: 0.25 * (b**4 - a**4)
    ),
}


def builtin_function(name: str) -> AnalyticFunction:
    try:
        return FUNCTIONS[name]
    except KeyError:
        known = ", ".join(sorted(FUNCTIONS))
        raise ValueError(f"unknown function {name!r}; built-ins: {known}") from None
