"""Property-based tests for the solver invariants."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from meanreflect import (
    PathFunctional,
    TimeGrid,
    VolatilityBand,
    build_lattice,
    conditional_upper_expectation,
    deterministic_skorokhod,
    expected_loss,
    lower_expectation,
    required_shift,
    required_shift_signed,
    upper_expectation,
)
from meanreflect.registry import make_loss
from oracles import ref_upper_expectation

BAND = VolatilityBand(1.0, 4.0)
LATTICES = {k: build_lattice(BAND, TimeGrid(1.0, k)) for k in (1, 2, 3)}

finite_floats = st.floats(min_value=-100.0, max_value=100.0,
                          allow_nan=False, allow_infinity=False, width=64)


def payoff_arrays(depth):
    return arrays(dtype=np.float64, shape=4**depth, elements=finite_floats)


def dyadic_arrays(depth):
    # multiples of 1/8 with moderate magnitude: every DP operation is exact
    return arrays(
        dtype=np.float64, shape=4**depth,
        elements=st.integers(min_value=-800, max_value=800).map(lambda k: k / 8.0),
    )


@settings(max_examples=40, deadline=None)
@given(depth=st.sampled_from([1, 2, 3]), data=st.data())
def test_dp_matches_recursive_reference(depth, data):
    values = data.draw(payoff_arrays(depth))
    lat = LATTICES[depth]
    got = upper_expectation(lat, PathFunctional(depth, values))
    want = ref_upper_expectation(values, depth)
    assert got == pytest.approx(want, abs=1e-10)


@settings(max_examples=40, deadline=None)
@given(depth=st.sampled_from([1, 2, 3]), data=st.data())
def test_monotonicity_is_exact(depth, data):
    lat = LATTICES[depth]
    xi = data.draw(payoff_arrays(depth))
    bump = data.draw(arrays(dtype=np.float64, shape=4**depth,
                            elements=st.floats(min_value=0.0, max_value=10.0)))
    assert upper_expectation(lat, PathFunctional(depth, xi)) <= upper_expectation(
        lat, PathFunctional(depth, xi + bump)
    )


@settings(max_examples=40, deadline=None)
@given(depth=st.sampled_from([1, 2, 3]),
       c=st.integers(min_value=-50, max_value=50).map(lambda k: k / 4.0),
       data=st.data())
def test_constant_preservation_exact_on_dyadics(depth, c, data):
    values = data.draw(dyadic_arrays(depth))
    lat = LATTICES[depth]
    base = upper_expectation(lat, PathFunctional(depth, values))
    shifted = upper_expectation(lat, PathFunctional(depth, values + c))
    assert shifted == base + c


@settings(max_examples=40, deadline=None)
@given(depth=st.sampled_from([1, 2, 3]), c=finite_floats, data=st.data())
def test_constant_preservation_tight_on_floats(depth, c, data):
    values = data.draw(payoff_arrays(depth))
    lat = LATTICES[depth]
    base = upper_expectation(lat, PathFunctional(depth, values))
    shifted = upper_expectation(lat, PathFunctional(depth, values + c))
    assert shifted == pytest.approx(base + c, abs=1e-12 * (1.0 + abs(base) + abs(c)))


@settings(max_examples=40, deadline=None)
@given(depth=st.sampled_from([1, 2, 3]), data=st.data())
def test_subadditivity(depth, data):
    lat = LATTICES[depth]
    xi = data.draw(payoff_arrays(depth))
    eta = data.draw(payoff_arrays(depth))
    e_sum = upper_expectation(lat, PathFunctional(depth, xi + eta))
    e_parts = upper_expectation(lat, PathFunctional(depth, xi)) + upper_expectation(
        lat, PathFunctional(depth, eta)
    )
    assert e_sum <= e_parts + 1e-12 * (1.0 + abs(e_parts))


@settings(max_examples=40, deadline=None)
@given(depth=st.sampled_from([1, 2, 3]),
       lam=st.floats(min_value=0.0, max_value=10.0), data=st.data())
def test_positive_homogeneity(depth, lam, data):
    lat = LATTICES[depth]
    xi = data.draw(payoff_arrays(depth))
    scaled = upper_expectation(lat, PathFunctional(depth, lam * xi))
    direct = lam * upper_expectation(lat, PathFunctional(depth, xi))
    assert scaled == pytest.approx(direct, abs=1e-12 * (1.0 + abs(direct)))


@settings(max_examples=30, deadline=None)
@given(depth=st.sampled_from([2, 3]), data=st.data())
def test_tower_property_exact(depth, data):
    lat = LATTICES[depth]
    values = data.draw(payoff_arrays(depth))
    xi = PathFunctional(depth, values)
    k = data.draw(st.integers(min_value=0, max_value=depth))
    cond = conditional_upper_expectation(lat, xi, k)
    assert upper_expectation(lat, cond) == upper_expectation(lat, xi)


@settings(max_examples=40, deadline=None)
@given(depth=st.sampled_from([1, 2, 3]), data=st.data())
def test_upper_dominates_lower(depth, data):
    lat = LATTICES[depth]
    values = data.draw(payoff_arrays(depth))
    xi = PathFunctional(depth, values)
    assert lower_expectation(lat, xi) <= upper_expectation(lat, xi) + 1e-12


@settings(max_examples=30, deadline=None)
@given(
    s=arrays(dtype=np.float64, shape=40,
             elements=st.floats(min_value=-5.0, max_value=5.0)),
    barrier=arrays(dtype=np.float64, shape=40,
                   elements=st.floats(min_value=-5.0, max_value=5.0)),
)
def test_deterministic_skorokhod_invariants(s, barrier):
    barrier[0] = min(barrier[0], s[0])
    x, a = deterministic_skorokhod(s, barrier)
    assert a[0] == 0.0
    assert np.all(np.diff(a) >= 0.0)
    assert np.all(x >= barrier - 1e-12)
    # complementarity: strict clearance forbids growth
    clearance = (x - barrier)[1:]
    growth = np.diff(a)
    assert np.all((clearance < 1e-12) | (growth == 0.0))


@settings(max_examples=25, deadline=None)
@given(
    shift=st.floats(min_value=-3.0, max_value=3.0),
    data=st.data(),
)
def test_required_shift_properties(shift, data):
    lat = LATTICES[2]
    loss = make_loss("arctan_shift", {"c": 0.0})
    values = data.draw(arrays(dtype=np.float64, shape=16,
                              elements=st.floats(min_value=-4.0, max_value=4.0)))
    xi = PathFunctional(2, values + shift)
    tol = 1e-10
    plus = required_shift(0.5, xi, lat, loss, tol)
    signed = required_shift_signed(0.5, xi, lat, loss, tol)
    assert plus >= 0.0
    assert plus == pytest.approx(max(0.0, signed), abs=2 * tol)
    if plus > 0.0:
        achieved = expected_loss(0.5, PathFunctional(2, xi.values + plus), lat, loss)
        assert abs(achieved) <= loss.C_l * tol
    # feasibility at the shift itself
    assert expected_loss(0.5, PathFunctional(2, xi.values + plus), lat, loss) >= -loss.C_l * tol


@settings(max_examples=25, deadline=None)
@given(m=st.floats(min_value=-2.0, max_value=2.0), data=st.data())
def test_risk_measure_translation_property(m, data):
    lat = LATTICES[2]
    loss = make_loss("arctan_shift", {"c": 0.0})
    values = data.draw(arrays(dtype=np.float64, shape=16,
                              elements=st.floats(min_value=-3.0, max_value=3.0)))
    tol = 1e-10
    base = required_shift_signed(0.5, PathFunctional(2, values), lat, loss, tol)
    shifted = required_shift_signed(0.5, PathFunctional(2, values + m), lat, loss, tol)
    assert shifted == pytest.approx(base - m, abs=1e-9)
