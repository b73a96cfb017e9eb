"""Sublinear expectation on the lattice by backward dynamic programming.

The upper expectation of a depth-k payoff is the exact maximum, over all
adapted volatility policies, of the policy's (classical) expectation. One
backward sweep computes it: at every node, average the two sign-children
of each volatility branch, then take the larger branch. The reduction order
is fixed (average first, then max, children in lattice order) so identical
inputs give bitwise-identical results.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DepthMismatchError, IndicatorError, InvalidParameterError
from .lattice import NodeValues, PathFunctional, PathLattice, VolatilityBand


def g_function(a: float, band: VolatilityBand) -> float:
    """Generator of the nonlinear heat equation: 0.5*(sigma_high^2*a+ - sigma_low^2*a-).

    Positively homogeneous, monotone and sublinear in a.
    """
    a = float(a)
    return 0.5 * (band.sigma_high_sq * max(a, 0.0) - band.sigma_low_sq * max(-a, 0.0))


def g_function_array(a: np.ndarray, band: VolatilityBand) -> np.ndarray:
    """Vectorized g_function (used by the PDE backend)."""
    pos = np.maximum(a, 0.0)
    neg = np.maximum(-a, 0.0)
    return 0.5 * (band.sigma_high_sq * pos - band.sigma_low_sq * neg)


def _reduce_one_level(values: np.ndarray) -> np.ndarray:
    """One backward step: (4m,) child values -> (m,) parent values.

    Child layout per parent: [(low,+), (low,-), (high,+), (high,-)].
    """
    v = values.reshape(-1, 2, 2)
    sign_avg = 0.5 * (v[:, :, 0] + v[:, :, 1])
    return np.maximum(sign_avg[:, 0], sign_avg[:, 1])


def _check_depth(lattice: PathLattice, xi: PathFunctional) -> None:
    if xi.depth > lattice.depth:
        raise DepthMismatchError(
            f"functional depth {xi.depth} exceeds lattice depth {lattice.depth}"
        )


def upper_expectation(lattice: PathLattice, xi: PathFunctional) -> float:
    """Sup over adapted volatility policies of the policy expectation of xi."""
    _check_depth(lattice, xi)
    values = xi.values
    for _ in range(xi.depth):
        values = _reduce_one_level(values)
    return float(values[0])


def lower_expectation(lattice: PathLattice, xi: PathFunctional) -> float:
    """Inf over policies; equals -upper_expectation(-xi)."""
    _check_depth(lattice, xi)
    return -upper_expectation(lattice, PathFunctional(xi.depth, -xi.values))


def conditional_upper_expectation(lattice: PathLattice, xi: PathFunctional, step: int) -> NodeValues:
    """Backward DP values at depth ``step``: the conditional sublinear expectation.

    step == xi.depth returns xi itself; step == 0 collapses to the scalar
    upper expectation.
    """
    _check_depth(lattice, xi)
    if not 0 <= step <= xi.depth:
        raise InvalidParameterError(
            f"conditional step must lie in [0, {xi.depth}], got {step}"
        )
    values = xi.values
    for _ in range(xi.depth - step):
        values = _reduce_one_level(values)
    return NodeValues(step, values)


def _require_indicator(event: PathFunctional) -> None:
    v = event.values
    if not np.all((v == 0.0) | (v == 1.0)):
        raise IndicatorError("capacity requires an indicator ({0,1}-valued) functional")


def upper_capacity(lattice: PathLattice, event: PathFunctional) -> float:
    """V(A) = sup_P P(A) over the policy family."""
    _require_indicator(event)
    return upper_expectation(lattice, event)


def lower_capacity(lattice: PathLattice, event: PathFunctional) -> float:
    """v(A) = inf_P P(A) over the policy family."""
    _require_indicator(event)
    return lower_expectation(lattice, event)


@dataclass(frozen=True)
class ComparisonReport:
    """Both directions of the strict comparison test, on the finite lattice.

    forward:  v(xi < eta) > 0  implies  E[xi] < E[eta]
    backward: E[xi] < E[eta]   implies  V(xi < eta) > 0
    Implications with a false antecedent hold vacuously.
    """

    e_xi: float
    e_eta: float
    lower_capacity_strict: float
    upper_capacity_strict: float
    forward_antecedent: bool
    forward_holds: bool
    backward_antecedent: bool
    backward_holds: bool

    @property
    def passed(self) -> bool:
        return self.forward_holds and self.backward_holds


def strict_comparison_check(
    lattice: PathLattice, xi: PathFunctional, eta: PathFunctional
) -> ComparisonReport:
    """Evaluate the strict comparison property for the dominated pair xi <= eta."""
    if xi.depth != eta.depth:
        raise DepthMismatchError(
            f"functionals live at different depths: {xi.depth} vs {eta.depth}"
        )
    if np.any(xi.values > eta.values):
        raise InvalidParameterError("strict comparison requires xi <= eta node-wise")
    strict = PathFunctional(xi.depth, (xi.values < eta.values).astype(float))
    v = lower_capacity(lattice, strict)
    big_v = upper_capacity(lattice, strict)
    e_xi = upper_expectation(lattice, xi)
    e_eta = upper_expectation(lattice, eta)
    fwd_ant = v > 0.0
    bwd_ant = e_xi < e_eta
    return ComparisonReport(
        e_xi=e_xi,
        e_eta=e_eta,
        lower_capacity_strict=v,
        upper_capacity_strict=big_v,
        forward_antecedent=fwd_ant,
        forward_holds=(not fwd_ant) or (e_xi < e_eta),
        backward_antecedent=bwd_ant,
        backward_holds=(not bwd_ant) or (big_v > 0.0),
    )
