import numpy as np
import pytest

from meanreflect import make_coefficient, make_loss, make_payoff, registry_list
from meanreflect.errors import ConfigError
from meanreflect.registry import COEFFICIENTS, LOSSES, PAYOFFS


def test_list_contains_required_names():
    names = registry_list()
    for required in ("zero", "constant_drift", "ou_drift", "constant_sigma",
                     "linear_sigma", "linear", "arctan_shift", "smooth_sin"):
        assert required in names


def test_list_is_sorted():
    names = registry_list()
    assert names == sorted(names)


def test_every_name_loads_with_defaults():
    for name in COEFFICIENTS:
        term = make_coefficient(name)
        out = term.fn(0.0, np.linspace(-1, 1, 5))
        assert out.shape == (5,)
    for name in LOSSES:
        loss = make_loss(name)
        assert loss(0.0, np.zeros(3)).shape == (3,)
    for name in PAYOFFS:
        payoff = make_payoff(name)
        assert payoff.fn(np.zeros(3)).shape == (3,)


def test_unknown_names_list_alternatives():
    with pytest.raises(ConfigError, match="arctan_shift"):
        make_loss("quadratic-x")
    with pytest.raises(ConfigError, match="ou_drift"):
        make_coefficient("nope")
    with pytest.raises(ConfigError, match="square"):
        make_payoff("nope")


def test_unknown_parameters_rejected():
    with pytest.raises(ConfigError, match="theta"):
        make_coefficient("ou_drift", {"thета_typo": 1.0})
    with pytest.raises(ConfigError, match="accepted"):
        make_loss("linear", {"slope": 2.0})


def test_ou_drift_values():
    term = make_coefficient("ou_drift", {"theta": 2.0, "mu": 1.0})
    assert np.allclose(term.fn(0.0, np.array([0.0, 1.0, 3.0])), [2.0, 0.0, -4.0])
    assert term.lipschitz == 2.0


def test_linear_sigma_clipped():
    term = make_coefficient("linear_sigma", {"a": 1.0, "b": 0.5, "cap": 1.5})
    out = term.fn(0.0, np.array([0.0, 1.0, 10.0]))
    assert np.allclose(out, [1.0, 1.5, 1.5])


def test_call_payoff_strike():
    payoff = make_payoff("call", {"strike": 0.5})
    assert np.allclose(payoff.fn(np.array([0.0, 1.0])), [0.0, 0.5])
