"""Built-in integrands: jet recurrences against numeric differentiation."""

import mpmath
import pytest

from ldint.functions import FUNCTIONS, builtin_function

CASES = {
    "gaussian": lambda t: mpmath.e ** (-(t**2)),
    "exp": mpmath.exp,
    "sin": mpmath.sin,
    "cubic": lambda t: t**3,
}


@pytest.mark.parametrize("name", sorted(CASES))
@pytest.mark.parametrize("t", [-0.5, 0.0, 0.7])
def test_jets_match_mpmath_derivatives(name, t):
    mpmath.mp.dps = 40
    fn = builtin_function(name)
    jet = fn.jet(t, 10)
    for order in range(11):
        ref = float(mpmath.diff(CASES[name], t, order))
        assert jet.values[order] == pytest.approx(ref, rel=1e-9, abs=1e-9)


@pytest.mark.parametrize("name", sorted(CASES))
def test_closed_form_integrals(name):
    mpmath.mp.dps = 30
    fn = builtin_function(name)
    for a, b in ((-0.5, 0.5), (0.0, 2.0)):
        ref = float(mpmath.quad(CASES[name], [a, b]))
        assert fn.integral(a, b) == pytest.approx(ref, rel=1e-14, abs=1e-15)


def test_unknown_name():
    with pytest.raises(ValueError, match="unknown function"):
        builtin_function("lorentzian")


def test_registry_contents():
    assert set(FUNCTIONS) == {"gaussian", "exp", "sin", "cubic"}
