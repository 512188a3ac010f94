"""Single-interval integration rules built from endpoint derivative data.

Three rule families share the bilinear form

    I(f) ~ sum_l  c_l * dt^l / l! * [f1^(l-1) + (-1)^(l-1) * f2^(l-1)]

and differ only in the coefficients c_l:

* Lanczos-Dyche (LD): c_l = n!(2n-l)! / ((2n)!(n-l)!).  Order-dependent
  coefficients; integrating the two-point Hermite interpolant of degree
  2n-1.  Remainder O(dt^(2n+1)) -- superconvergent.
* Euler-Maclaurin (EM): c_l = B_l (Bernoulli numbers, B_1 = +1/2
  convention).  Fixed coefficients; often only asymptotically convergent.
* Taylor: c_l = 1, one endpoint only.  Remainder O(dt^(n+1)).

Coefficients are generated in exact rational arithmetic and converted to
floating point once, when a rule is constructed.  Evaluation nests the
polynomial in dt (Horner) to limit roundoff.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from math import comb, factorial, isfinite
from typing import Optional, Sequence, Union

__all__ = [
    "RuleKind",
    "TauPolicy",
    "DerivativeJet",
    "QuadratureRule",
    "RemainderEstimate",
    "TwoPointInterpolant",
    "ld_coefficients",
    "bernoulli_numbers",
    "integrate",
    "remainder_bound",
    "two_point_interpolant",
]

Scalar = Union[int, float, Fraction]


class RuleKind(Enum):
    LANCZOS_DYCHE = "ld"
    EULER_MACLAURIN = "em"
    TAYLOR = "taylor"


class TauPolicy(Enum):
    """How the unknown evaluation point of the remainder is treated."""

    MIDPOINT = "midpoint"
    SUPREMUM_BOUND = "supremum"


def ld_coefficients(n: int) -> list[Fraction]:
    """Coefficients c_l = n!(2n-l)!/((2n)!(n-l)!) of the order-2n rule.

    Returned in lowest terms for l = 1..n; c_1 = 1/2 for every n.
    """
    if n < 1:
        raise ValueError(f"rule order must be >= 1, got n={n}")
    fn = factorial(n)
    f2n = factorial(2 * n)
    return [
        Fraction(fn * factorial(2 * n - l), f2n * factorial(n - l))
        for l in range(1, n + 1)
    ]


def bernoulli_numbers(n: int) -> list[Fraction]:
    """First n Bernoulli numbers [B_1, .., B_n] with the B_1 = +1/2 sign.

    Generated by the defining recurrence in exact arithmetic; only the
    sign of B_1 differs between conventions (odd B beyond the first
    vanish).
    """
    if n < 1:
        raise ValueError(f"need at least one Bernoulli number, got n={n}")
    minus = [Fraction(1)]
    for m in range(1, n + 1):
        acc = Fraction(0)
        for k in range(m):
            acc += comb(m + 1, k) * minus[k]
        minus.append(-acc / (m + 1))
    return [(-1) ** l * minus[l] for l in range(1, n + 1)]


@dataclass(frozen=True)
class DerivativeJet:
    """Function value and derivatives [f(t), f'(t), ..., f^(m)(t)] at t."""

    t: float
    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        if len(self.values) == 0:
            raise ValueError("a jet needs at least the function value")
        for k, v in enumerate(self.values):
            if isinstance(v, float) and not isfinite(v):
                raise ValueError(f"non-finite jet entry f^({k})({self.t}) = {v}")

    @property
    def order(self) -> int:
        return len(self.values) - 1

    def require_order(self, m: int, what: str = "rule") -> None:
        if self.order < m:
            raise ValueError(
                f"{what} needs derivatives up to order {m}, "
                f"jet at t={self.t} only provides order {self.order}"
            )


@dataclass(frozen=True)
class QuadratureRule:
    """A rule kind with truncation order n and exact coefficients.

    ``weights[l-1]`` caches float(c_l / l!), the single rational-to-float
    conversion used by floating evaluation.
    """

    kind: RuleKind
    n: int
    coefficients: tuple

    def __post_init__(self):
        object.__setattr__(self, "coefficients", tuple(self.coefficients))
        if self.n < 1:
            raise ValueError(f"rule order must be >= 1, got n={self.n}")
        if len(self.coefficients) != self.n:
            raise ValueError("rule needs exactly n coefficients")
        weights = tuple(
            float(Fraction(c) / factorial(l + 1))
            for l, c in enumerate(self.coefficients)
        )
        object.__setattr__(self, "weights", weights)

    @classmethod
    def lanczos_dyche(cls, n: int) -> "QuadratureRule":
        return cls(RuleKind.LANCZOS_DYCHE, n, tuple(ld_coefficients(n)))

    @classmethod
    def euler_maclaurin(cls, n: int) -> "QuadratureRule":
        return cls(RuleKind.EULER_MACLAURIN, n, tuple(bernoulli_numbers(n)))

    @classmethod
    def taylor(cls, n: int) -> "QuadratureRule":
        if n < 1:
            raise ValueError(f"rule order must be >= 1, got n={n}")
        return cls(RuleKind.TAYLOR, n, tuple(Fraction(1) for _ in range(n)))


@dataclass(frozen=True)
class RemainderEstimate:
    """Signed remainder coefficient and the resulting error bound/estimate.

    ``formula_order`` is the power of dt in the remainder: 2n+1 for LD,
    n+3 for even-n EM, n+1 for Taylor.
    """

    formula_order: int
    coefficient: Fraction
    tau_policy: TauPolicy
    bound: float


def _endpoint_sums(rule: QuadratureRule, jet1: DerivativeJet, jet2: DerivativeJet,
                   exact: bool):
    conv = (lambda v: Fraction(v)) if exact else float
    return [
        conv(jet1.values[l - 1]) + (-1) ** (l - 1) * conv(jet2.values[l - 1])
        for l in range(1, rule.n + 1)
    ]


def integrate(
    rule: QuadratureRule,
    jet1: DerivativeJet,
    jet2: Optional[DerivativeJet] = None,
    dt: Optional[float] = None,
    exact: bool = False,
):
    """Apply ``rule`` to the jets over one interval.

    Two-point kinds take both jets and infer dt = jet2.t - jet1.t; the
    Taylor kind takes jet1 and an explicit dt.  With ``exact=True`` the
    sum is carried out in rational arithmetic (jet entries converted
    exactly) and a Fraction is returned.
    """
    need = rule.n - 1
    jet1.require_order(need, f"{rule.kind.value} rule of order n={rule.n}")
    if rule.kind is RuleKind.TAYLOR:
        if jet2 is not None:
            raise ValueError("the Taylor rule is one-point; pass dt, not jet2")
        if dt is None:
            raise ValueError("the Taylor rule needs an explicit dt")
        if exact:
            acc = Fraction(0)
            for l in range(rule.n, 0, -1):
                acc = acc * Fraction(dt) + Fraction(jet1.values[l - 1]) / factorial(l)
            return acc * Fraction(dt)
        acc = 0.0
        for l in range(rule.n, 0, -1):
            acc = acc * dt + jet1.values[l - 1] / factorial(l)
        return acc * dt

    if jet2 is None:
        raise ValueError(f"the {rule.kind.value} rule needs jets at both endpoints")
    jet2.require_order(need, f"{rule.kind.value} rule of order n={rule.n}")
    span = jet2.t - jet1.t
    if dt is None:
        dt = span
    elif abs(dt - span) > 1e-12 * max(1.0, abs(span)):
        raise ValueError(f"dt={dt} inconsistent with jet spacing {span}")

    sums = _endpoint_sums(rule, jet1, jet2, exact)
    if exact:
        dt_x = Fraction(dt)
        acc = Fraction(0)
        for l in range(rule.n, 0, -1):
            acc = acc * dt_x + Fraction(rule.coefficients[l - 1]) / factorial(l) * sums[l - 1]
        return acc * dt_x
    acc = 0.0
    for l in range(rule.n, 0, -1):
        acc = acc * dt + rule.weights[l - 1] * sums[l - 1]
    return acc * dt


def remainder_coefficient(rule: QuadratureRule) -> tuple[int, Fraction]:
    """(power of dt, signed rational coefficient) of the remainder term."""
    n = rule.n
    if rule.kind is RuleKind.LANCZOS_DYCHE:
        return 2 * n + 1, Fraction(
            (-1) ** n * factorial(n) ** 2, factorial(2 * n + 1) * factorial(2 * n)
        )
    if rule.kind is RuleKind.EULER_MACLAURIN:
        if n % 2 != 0:
            raise ValueError(
                f"the Euler-Maclaurin remainder is only available for even n, got n={n}"
            )
        b = bernoulli_numbers(n + 2)[n + 1]
        return n + 3, -b / factorial(n + 2)
    return n + 1, Fraction(1, factorial(n + 1))


def remainder_bound(
    rule: QuadratureRule,
    dt: float,
    deriv_max: float,
    tau_policy: TauPolicy = TauPolicy.SUPREMUM_BOUND,
) -> RemainderEstimate:
    """Remainder estimate for one application of ``rule`` over dt.

    Under SUPREMUM_BOUND ``deriv_max`` is a bound on the magnitude of the
    relevant derivative (f^(2n) for LD, f^(n+2) for EM, f^(n) for Taylor)
    and the result is a rigorous bound, >= 0.  Under MIDPOINT it is a
    sample of that derivative at the interval midpoint and the result is
    the signed remainder estimate.
    """
    order, coeff = remainder_coefficient(rule)
    if tau_policy is TauPolicy.SUPREMUM_BOUND:
        if deriv_max < 0:
            raise ValueError("a supremum bound on the derivative must be >= 0")
        bound = abs(float(coeff)) * abs(dt) ** order * deriv_max
    else:
        bound = float(coeff) * dt**order * deriv_max
    return RemainderEstimate(order, coeff, tau_policy, bound)


def _poly_mul(a: list[Fraction], b: list[Fraction]) -> list[Fraction]:
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        for j, bj in enumerate(b):
            out[i + j] += ai * bj
    return out


def _poly_add(a: list[Fraction], b: list[Fraction]) -> list[Fraction]:
    if len(a) < len(b):
        a, b = b, a
    out = list(a)
    for i, bi in enumerate(b):
        out[i] += bi
    return out


@dataclass(frozen=True)
class TwoPointInterpolant:
    """Hermite interpolant matching jets at both endpoints to order n-1.

    Stored in the two-point Taylor basis

        P(t) = sum_{l=0}^{n-1} w(t)^l [(t - t2) a_l + (t - t1) b_l],
        w(t) = (t - t1)(t - t2),

    with a_0 = f(t1)/(t1 - t2) (the n=1 case is the Lagrange line).  The
    monomial form is kept in exact arithmetic for differentiation and
    integration.
    """

    t1: float
    t2: float
    n: int
    a_coeffs: tuple
    b_coeffs: tuple
    monomial: tuple  # exact Fractions, low degree first

    def __call__(self, t: float) -> float:
        w = (t - self.t1) * (t - self.t2)
        acc = 0.0
        for l in range(self.n - 1, -1, -1):
            term = float(self.a_coeffs[l]) * (t - self.t2) + float(self.b_coeffs[l]) * (
                t - self.t1
            )
            acc = acc * w + term
        return acc

    def derivative(self, t: float, order: int = 1) -> float:
        coeffs = list(self.monomial)
        for _ in range(order):
            coeffs = [k * c for k, c in enumerate(coeffs)][1:]
        acc = Fraction(0)
        tx = Fraction(t)
        for c in reversed(coeffs):
            acc = acc * tx + c
        return float(acc)

    def integrate(self, exact: bool = False):
        """Integral of P over [t1, t2] from the exact monomial form."""
        lo, hi = Fraction(self.t1), Fraction(self.t2)
        total = Fraction(0)
        for k, c in enumerate(self.monomial):
            total += c * (hi ** (k + 1) - lo ** (k + 1)) / (k + 1)
        return total if exact else float(total)


def two_point_interpolant(
    jet1: DerivativeJet, jet2: DerivativeJet, n: int
) -> TwoPointInterpolant:
    """Two-point Taylor (Hermite) interpolant of the jets, truncated at n.

    Coefficients are peeled off layer by layer: a_l and b_l are the values
    of the running remainder at the endpoints divided by +/-(t2 - t1), and
    the remainder is deflated by w(t) = (t - t1)(t - t2) exactly.  All
    arithmetic is rational, so the interpolation conditions hold exactly.
    """
    if n < 1:
        raise ValueError(f"interpolation order must be >= 1, got n={n}")
    if jet1.t == jet2.t:
        raise ValueError("interpolation endpoints must be distinct")
    jet1.require_order(n - 1, f"two-point interpolant of order n={n}")
    jet2.require_order(n - 1, f"two-point interpolant of order n={n}")

    t1, t2 = Fraction(jet1.t), Fraction(jet2.t)
    span = t1 - t2

    # Exact Hermite interpolant in monomial form via confluent conditions.
    size = 2 * n
    rows: list[list[Fraction]] = []
    rhs: list[Fraction] = []
    for jet, t in ((jet1, t1), (jet2, t2)):
        for der in range(n):
            row = [Fraction(0)] * size
            for k in range(der, size):
                row[k] = Fraction(factorial(k), factorial(k - der)) * t ** (k - der)
            rows.append(row)
            rhs.append(Fraction(jet.values[der]))
    coeffs = _solve_exact(rows, rhs)

    # Peel the two-point Taylor coefficients off the exact polynomial.
    w = [t1 * t2, -(t1 + t2), Fraction(1)]
    rem = list(coeffs)
    a_list: list[Fraction] = []
    b_list: list[Fraction] = []
    for _ in range(n):
        v1 = _poly_eval(rem, t1)
        v2 = _poly_eval(rem, t2)
        a = v1 / span
        b = -v2 / span
        a_list.append(a)
        b_list.append(b)
        layer = _poly_add([-t2 * a - t1 * b, a + b], [Fraction(0)])
        rem = _poly_add(rem, [-c for c in layer])
        rem = _poly_divide_exact(rem, w)

    return TwoPointInterpolant(
        t1=jet1.t,
        t2=jet2.t,
        n=n,
        a_coeffs=tuple(float(a) for a in a_list),
        b_coeffs=tuple(float(b) for b in b_list),
        monomial=tuple(coeffs),
    )


def _poly_eval(coeffs: Sequence[Fraction], x: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def _poly_divide_exact(num: list[Fraction], den: list[Fraction]) -> list[Fraction]:
    """Exact polynomial division; the remainder must vanish."""
    num = list(num)
    while len(num) > 1 and num[-1] == 0:
        num.pop()
    if len(num) < len(den):
        if any(c != 0 for c in num):
            raise ArithmeticError("polynomial deflation left a nonzero remainder")
        return [Fraction(0)]
    out = [Fraction(0)] * (len(num) - len(den) + 1)
    for k in range(len(out) - 1, -1, -1):
        q = num[k + len(den) - 1] / den[-1]
        out[k] = q
        for j, dj in enumerate(den):
            num[k + j] -= q * dj
    if any(c != 0 for c in num[: len(den) - 1]):
        raise ArithmeticError("polynomial deflation left a nonzero remainder")
    return out


def _solve_exact(rows: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction]:
    """Gaussian elimination over the rationals (small, exact systems)."""
    m = len(rows)
    aug = [list(r) + [v] for r, v in zip(rows, rhs)]
    for col in range(m):
        pivot = next((r for r in range(col, m) if aug[r][col] != 0), None)
        if pivot is None:
            raise ArithmeticError("singular interpolation system")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        inv = 1 / aug[col][col]
        aug[col] = [v * inv for v in aug[col]]
        for r in range(m):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [v - f * w for v, w in zip(aug[r], aug[col])]
    return [aug[r][m] for r in range(m)]
