"""Increment functions zeta(mu) on du/dt = lambda*u and A-stability scans.

For a one-step method, u_{nu+1} = zeta(lambda*dt) * u_nu.  The exact map
has zeta = e^mu, an order-n Runge-Kutta (Taylor) method has the truncated
exponential series, and the order-n Lanczos-Dyche method has the (n,n)
Pade rational

    zeta(mu) = N(mu) / N(-mu),   N(mu) = sum_{l=0}^n C_ln / l! * mu^l

with C_0n = 1.  Numerator and denominator are evaluated separately by
Horner's scheme and divided once, which preserves the conjugate symmetry
making |zeta(i*theta)| = 1 hold to roundoff.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from enum import Enum
from math import factorial

import numpy as np

from .quadrature import ld_coefficients

__all__ = [
    "IncrementKind",
    "IncrementFunction",
    "PoleError",
    "StabilityMap",
    "AStabilityResult",
    "zeta",
    "scan_region",
    "check_a_stability",
]


class IncrementKind(Enum):
    EXACT = "exact"
    RUNGE_KUTTA = "rk"
    LANCZOS_DYCHE = "ld"


class PoleError(ArithmeticError):
    """The rational increment function was evaluated at (or near) a pole."""

    def __init__(self, mu: complex):
        super().__init__(f"increment function has a pole near mu = {mu}")
        self.mu = mu


@dataclass(frozen=True)
class IncrementFunction:
    """A stability function: exact exponential, RK polynomial, or LD Pade."""

    kind: IncrementKind
    n: int = 1

    def __post_init__(self):
        if self.kind is not IncrementKind.EXACT and self.n < 1:
            raise ValueError(f"method order must be >= 1, got n={self.n}")
        if self.kind is IncrementKind.LANCZOS_DYCHE:
            weights = (1.0,) + tuple(
                float(c / factorial(l + 1)) for l, c in enumerate(ld_coefficients(self.n))
            )
        elif self.kind is IncrementKind.RUNGE_KUTTA:
            weights = tuple(1.0 / factorial(l) for l in range(self.n + 1))
        else:
            weights = ()
        object.__setattr__(self, "weights", weights)

    @classmethod
    def exact(cls) -> "IncrementFunction":
        return cls(IncrementKind.EXACT)

    @classmethod
    def runge_kutta(cls, n: int) -> "IncrementFunction":
        return cls(IncrementKind.RUNGE_KUTTA, n)

    @classmethod
    def lanczos_dyche(cls, n: int) -> "IncrementFunction":
        return cls(IncrementKind.LANCZOS_DYCHE, n)


def _horner(weights, mu):
    acc = mu * 0
    for w in reversed(weights):
        acc = acc * mu + w
    return acc


def zeta(f: IncrementFunction, mu: complex) -> complex:
    """Evaluate the increment function at a single complex mu."""
    if f.kind is IncrementKind.EXACT:
        return cmath.exp(mu)
    if f.kind is IncrementKind.RUNGE_KUTTA:
        return _horner(f.weights, mu)
    num = _horner(f.weights, mu)
    den = _horner(f.weights, -mu)
    scale = _horner([abs(w) for w in f.weights], abs(mu))
    if abs(den) <= 64.0 * np.finfo(float).eps * scale:
        raise PoleError(mu)
    return num / den


def _zeta_grid(f: IncrementFunction, mu: np.ndarray):
    """Vectorised |zeta| on an array of mu; returns (abs_zeta, pole_mask)."""
    if f.kind is IncrementKind.EXACT:
        return np.abs(np.exp(mu)), np.zeros(mu.shape, dtype=bool)
    num = _horner(f.weights, mu)
    if f.kind is IncrementKind.RUNGE_KUTTA:
        return np.abs(num), np.zeros(mu.shape, dtype=bool)
    den = _horner(f.weights, -mu)
    scale = _horner([abs(w) for w in f.weights], np.abs(mu))
    abs_den = np.abs(den)
    poles = abs_den <= 64.0 * np.finfo(float).eps * scale
    out = np.empty(mu.shape)
    good = ~poles
    # |num|/|den| rather than |num/den|: the two are bitwise-equal conjugate
    # polynomials on the imaginary axis, so |zeta| evaluates to exactly 1 there
    out[good] = np.abs(num[good]) / abs_den[good]
    out[poles] = np.inf
    return out, poles


@dataclass(frozen=True)
class StabilityMap:
    """|zeta| sampled on a rectangular grid of the complex mu plane.

    ``values[i, j]`` corresponds to mu = re_values[i] + 1j * im_values[j].
    Pole cells are marked unstable and flagged in ``pole_mask``.
    """

    re_values: np.ndarray
    im_values: np.ndarray
    values: np.ndarray
    stable_mask: np.ndarray
    pole_mask: np.ndarray

    def to_csv(self, path) -> None:
        """Row-major CSV: header re,im,abs_zeta,stable; 17 significant digits."""
        with open(path, "w") as fh:
            self.write_csv(fh)

    def write_csv(self, fh) -> None:
        fh.write("re,im,abs_zeta,stable\n")
        for i, re in enumerate(self.re_values):
            for j, im in enumerate(self.im_values):
                fh.write(
                    f"{re:.17g},{im:.17g},{self.values[i, j]:.17g},"
                    f"{int(self.stable_mask[i, j])}\n"
                )


def scan_region(
    f: IncrementFunction,
    re_range: tuple[float, float],
    im_range: tuple[float, float],
    resolution: int,
) -> StabilityMap:
    """Sample |zeta| on a resolution x resolution grid over the ranges."""
    if resolution < 2:
        raise ValueError(f"resolution must be >= 2 per axis, got {resolution}")
    if not (re_range[1] > re_range[0] and im_range[1] > im_range[0]):
        raise ValueError("grid ranges must be non-degenerate increasing intervals")
    re = np.linspace(re_range[0], re_range[1], resolution)
    im = np.linspace(im_range[0], im_range[1], resolution)
    mu = re[:, None] + 1j * im[None, :]
    values, poles = _zeta_grid(f, mu)
    stable = (values <= 1.0) & ~poles
    return StabilityMap(re, im, values, stable, poles)


@dataclass(frozen=True)
class AStabilityResult:
    a_stable: bool
    worst_abs: float
    worst_mu: complex
    limit_abs: float
    limit_mu: complex
    samples: int
    tolerance: float


def check_a_stability(
    n: int, samples: int, seed: int = 20230, tolerance: float = 1e-12
) -> AStabilityResult:
    """Sampled A-stability verdict for the order-n Lanczos-Dyche method.

    Draws ``samples`` points with Re(mu) <= 0 mixing structured families
    (imaginary axis, negative real axis, rays, large magnitudes) with
    uniform and log-magnitude random points, and checks |zeta| <= 1 + tol.
    Also evaluates |zeta| far out on the negative real axis, which tends
    to 1 (the methods are not L-stable).
    """
    if n < 1:
        raise ValueError(f"method order must be >= 1, got n={n}")
    if n > 12:
        raise ValueError("orders above 12 overflow the float coefficient conversion")
    if samples < 1:
        raise ValueError("need at least one sample")
    f = IncrementFunction.lanczos_dyche(n)
    rng = np.random.default_rng(seed + n)

    n_axis = max(samples // 10, 1)
    n_ray = max(samples // 10, 1)
    n_big = max(samples // 20, 1)
    n_rand = max(samples - n_axis - n_ray - n_big, 1)

    theta = np.linspace(-100.0, 100.0, n_axis)
    axis = 1j * theta
    rays = -np.geomspace(1e-3, 1e6, n_ray) * np.exp(
        1j * np.linspace(-np.pi / 2 + 1e-3, np.pi / 2 - 1e-3, n_ray)
    )
    big = -np.geomspace(1e6, 1e12, n_big) + 1j * rng.uniform(-1e6, 1e6, n_big)
    rand = rng.uniform(-50.0, 0.0, n_rand) + 1j * rng.uniform(-50.0, 50.0, n_rand)
    mu = np.concatenate([axis, rays, big, rand])

    values, poles = _zeta_grid(f, mu)
    # poles cannot occur for Re(mu) <= 0; treat any hit as a failure
    values = np.where(poles, np.inf, values)
    worst = int(np.argmax(values))
    limit_mu = -1e8 + 0j
    limit_abs = abs(zeta(f, limit_mu))
    return AStabilityResult(
        a_stable=bool(values[worst] <= 1.0 + tolerance),
        worst_abs=float(values[worst]),
        worst_mu=complex(mu[worst]),
        limit_abs=limit_abs,
        limit_mu=limit_mu,
        samples=len(mu),
        tolerance=tolerance,
    )
